#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace adrsplit {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

struct OpNormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Bounded linear map R^in -> R^out. Copies share one immutable representation,
// so id() identifies the map for solver caching.
class LinearMap {
 public:
  enum class Kind { Dense, Sparse, ScaledIdentity };

  static LinearMap dense(Mat m);
  static LinearMap sparse(SpMat m);
  static LinearMap scaled_identity(Index n, double s);
  static LinearMap identity(Index n) { return scaled_identity(n, 1.0); }

  Kind kind() const;
  Index in_dim() const;
  Index out_dim() const;
  std::uint64_t id() const;

  bool is_scaled_identity() const { return kind() == Kind::ScaledIdentity; }
  // Only meaningful for ScaledIdentity.
  double scale() const;

  Vec apply(const Vec& x) const;
  Vec adjoint_apply(const Vec& y) const;

  // Operator 2-norm, computed once on first use.
  double norm() const;

  bool invertible() const;
  Vec inverse_apply(const Vec& y) const;
  double inverse_norm() const;

  Mat to_dense() const;
  SpMat to_sparse() const;
  // L^T L in the storage class of L (scaled identity comes back sparse).
  SpMat normal_sparse() const;
  Mat normal_dense() const;

  LinearMap scaled(double s) const;

 private:
  struct Impl;
  explicit LinearMap(std::shared_ptr<Impl> impl);
  std::shared_ptr<Impl> impl_;
};

// (n-1) x n forward-difference matrix, row i maps x to x_i - x_{i+1}.
LinearMap difference_matrix(Index n);

// Columns [first, first+count) of a map, kept in the map's storage class.
LinearMap column_block(const LinearMap& l, Index first, Index count);

OpNormResult op_norm(const LinearMap& l, double tol = 1e-10, int max_iter = 5000);

// Largest singular value of a map given only by its action (Krylov method on A^T A).
template <class Apply, class Adjoint>
OpNormResult op_norm_action(Index in_dim, Apply&& apply, Adjoint&& adjoint,
                            double tol, int max_iter);

class SpdSolver {
 public:
  explicit SpdSolver(const Mat& m);
  explicit SpdSolver(const SpMat& m);

  Index dim() const { return n_; }
  Vec solve(const Vec& b) const;

 private:
  Index n_ = 0;
  bool sparse_ = false;
  Eigen::LLT<Mat> dense_;
  Eigen::SimplicialLDLT<SpMat> sp_;
};

std::shared_ptr<const SpdSolver> cached_spd_solver(const Mat& m);
std::shared_ptr<const SpdSolver> cached_spd_solver(const SpMat& m);

// ---------------------------------------------------------------------------

namespace detail {
// Largest eigenvalue of the symmetric tridiagonal T_k and the squared last
// component of its unit eigenvector, from the eigenvalues of T_k and T_{k-1}.
std::pair<double, double> top_ritz(const Vec& diag, const Vec& off);
}  // namespace detail

template <class Apply, class Adjoint>
OpNormResult op_norm_action(Index in_dim, Apply&& apply, Adjoint&& adjoint,
                            double tol, int max_iter) {
  OpNormResult out;
  // Lanczos on A^T A from a fixed start, with full reorthogonalization. The
  // golden-ratio sequence avoids symmetric subspaces that a constant vector
  // would sit in.
  Vec v(in_dim);
  for (Index i = 0; i < in_dim; ++i) {
    double t = 0.6180339887498949 * static_cast<double>(i + 1);
    v[i] = 0.5 + (t - static_cast<double>(static_cast<std::int64_t>(t)));
  }
  v.normalize();
  const Index kmax = std::min<Index>(in_dim, std::max(max_iter, 1));
  Mat q(in_dim, kmax);
  Vec alpha(kmax), beta(kmax);
  double theta = 0.0, scale = 0.0;
  Index next_check = 8;
  for (Index k = 0; k < kmax; ++k) {
    q.col(k) = v;
    Vec w = adjoint(apply(v));
    alpha[k] = v.dot(w);
    w -= alpha[k] * v;
    if (k > 0) w -= beta[k - 1] * q.col(k - 1);
    auto basis = q.leftCols(k + 1);
    double before = w.norm();
    w.noalias() -= basis * (basis.transpose() * w);
    beta[k] = w.norm();
    if (beta[k] < 0.7071067811865476 * before) {
      w.noalias() -= basis * (basis.transpose() * w);
      beta[k] = w.norm();
    }
    scale = std::max(scale, std::abs(alpha[k]) + beta[k]);
    out.iterations = static_cast<int>(k + 1);
    const bool exhausted = beta[k] <= 1e-13 * scale || k + 1 == in_dim;
    if (exhausted || k + 1 == kmax || k + 1 >= next_check) {
      next_check = (k + 1) + std::max<Index>(8, (k + 1) / 8);
      auto [top, last2] = detail::top_ritz(alpha.head(k + 1), beta.head(k));
      theta = top;
      // ||A^T A y - theta y|| = beta_k |s_k| bounds the eigenvalue error.
      double res = exhausted ? 0.0 : beta[k] * std::sqrt(last2);
      if (res <= tol * std::abs(theta)) {
        out.converged = true;
        break;
      }
    }
    if (exhausted) break;
    v = w / beta[k];
  }
  out.value = std::sqrt(std::max(theta, 0.0));
  return out;
}

}  // namespace adrsplit
