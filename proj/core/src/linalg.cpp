#include "adrsplit/linalg.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include "adrsplit/error.hpp"

namespace adrsplit {

namespace {

std::uint64_t next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void check_dim(Index got, Index want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::InvalidDimension,
                std::string(what) + ": expected dimension " + std::to_string(want) +
                    ", got " + std::to_string(got));
  }
}

}  // namespace

struct LinearMap::Impl {
  Kind kind = Kind::Dense;
  Index rows = 0;
  Index cols = 0;
  Mat dense;
  SpMat sp;
  double s = 1.0;
  std::uint64_t id = next_id();

  std::once_flag norm_once;
  double norm = 0.0;

  std::once_flag inv_once;
  bool inv_ok = false;
  std::unique_ptr<Eigen::FullPivLU<Mat>> dense_lu;
  std::unique_ptr<Eigen::SparseLU<SpMat>> sp_lu;
  std::unique_ptr<Eigen::SparseLU<SpMat>> sp_lu_t;

  std::once_flag inv_norm_once;
  double inv_norm = 0.0;

  void factor_inverse() {
    if (rows != cols) return;
    switch (kind) {
      case Kind::ScaledIdentity:
        inv_ok = s != 0.0;
        break;
      case Kind::Dense:
        dense_lu = std::make_unique<Eigen::FullPivLU<Mat>>(dense);
        inv_ok = dense_lu->isInvertible();
        break;
      case Kind::Sparse: {
        sp_lu = std::make_unique<Eigen::SparseLU<SpMat>>();
        sp_lu->compute(sp);
        SpMat t = sp.transpose();
        sp_lu_t = std::make_unique<Eigen::SparseLU<SpMat>>();
        sp_lu_t->compute(t);
        inv_ok = sp_lu->info() == Eigen::Success && sp_lu_t->info() == Eigen::Success;
        break;
      }
    }
  }
};

LinearMap::LinearMap(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

LinearMap LinearMap::dense(Mat m) {
  if (m.rows() < 1 || m.cols() < 1)
    throw Error(ErrorCode::InvalidDimension, "dense map needs positive dimensions");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Dense;
  impl->rows = m.rows();
  impl->cols = m.cols();
  impl->dense = std::move(m);
  return LinearMap(std::move(impl));
}

LinearMap LinearMap::sparse(SpMat m) {
  if (m.rows() < 1 || m.cols() < 1)
    throw Error(ErrorCode::InvalidDimension, "sparse map needs positive dimensions");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Sparse;
  impl->rows = m.rows();
  impl->cols = m.cols();
  m.makeCompressed();
  impl->sp = std::move(m);
  return LinearMap(std::move(impl));
}

LinearMap LinearMap::scaled_identity(Index n, double s) {
  if (n < 1) throw Error(ErrorCode::InvalidDimension, "identity map needs n >= 1");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::ScaledIdentity;
  impl->rows = n;
  impl->cols = n;
  impl->s = s;
  return LinearMap(std::move(impl));
}

LinearMap::Kind LinearMap::kind() const { return impl_->kind; }
Index LinearMap::in_dim() const { return impl_->cols; }
Index LinearMap::out_dim() const { return impl_->rows; }
std::uint64_t LinearMap::id() const { return impl_->id; }
double LinearMap::scale() const { return impl_->s; }

Vec LinearMap::apply(const Vec& x) const {
  check_dim(x.size(), impl_->cols, "LinearMap::apply");
  switch (impl_->kind) {
    case Kind::Dense: return impl_->dense * x;
    case Kind::Sparse: return impl_->sp * x;
    case Kind::ScaledIdentity: return impl_->s * x;
  }
  return {};
}

Vec LinearMap::adjoint_apply(const Vec& y) const {
  check_dim(y.size(), impl_->rows, "LinearMap::adjoint_apply");
  switch (impl_->kind) {
    case Kind::Dense: return impl_->dense.transpose() * y;
    case Kind::Sparse: return impl_->sp.transpose() * y;
    case Kind::ScaledIdentity: return impl_->s * y;
  }
  return {};
}

double LinearMap::norm() const {
  std::call_once(impl_->norm_once, [this] {
    if (impl_->kind == Kind::ScaledIdentity) {
      impl_->norm = std::abs(impl_->s);
    } else {
      impl_->norm = op_norm(*this).value;
    }
  });
  return impl_->norm;
}

bool LinearMap::invertible() const {
  std::call_once(impl_->inv_once, [this] { impl_->factor_inverse(); });
  return impl_->inv_ok;
}

Vec LinearMap::inverse_apply(const Vec& y) const {
  if (!invertible()) throw Error(ErrorCode::AssumptionViolation, "linear map is not invertible");
  check_dim(y.size(), impl_->rows, "LinearMap::inverse_apply");
  switch (impl_->kind) {
    case Kind::Dense: return impl_->dense_lu->solve(y);
    case Kind::Sparse: return impl_->sp_lu->solve(y);
    case Kind::ScaledIdentity: return y / impl_->s;
  }
  return {};
}

double LinearMap::inverse_norm() const {
  if (!invertible()) throw Error(ErrorCode::AssumptionViolation, "linear map is not invertible");
  std::call_once(impl_->inv_norm_once, [this] {
    const Impl& im = *impl_;
    switch (im.kind) {
      case Kind::ScaledIdentity:
        impl_->inv_norm = 1.0 / std::abs(im.s);
        break;
      case Kind::Dense:
        impl_->inv_norm = op_norm(LinearMap::dense(im.dense_lu->inverse())).value;
        break;
      case Kind::Sparse:
        impl_->inv_norm =
            op_norm_action(
                im.cols, [&](const Vec& x) -> Vec { return im.sp_lu->solve(x); },
                [&](const Vec& x) -> Vec { return im.sp_lu_t->solve(x); }, 1e-10, 5000)
                .value;
        break;
    }
  });
  return impl_->inv_norm;
}

Mat LinearMap::to_dense() const {
  switch (impl_->kind) {
    case Kind::Dense: return impl_->dense;
    case Kind::Sparse: return Mat(impl_->sp);
    case Kind::ScaledIdentity: return impl_->s * Mat::Identity(impl_->rows, impl_->cols);
  }
  return {};
}

SpMat LinearMap::to_sparse() const {
  switch (impl_->kind) {
    case Kind::Dense: return impl_->dense.sparseView(0.0, 0.0);
    case Kind::Sparse: return impl_->sp;
    case Kind::ScaledIdentity: {
      SpMat out(impl_->rows, impl_->cols);
      out.setIdentity();
      out *= impl_->s;
      return out;
    }
  }
  return {};
}

SpMat LinearMap::normal_sparse() const {
  SpMat l = to_sparse();
  SpMat out = SpMat(l.transpose()) * l;
  out.makeCompressed();
  return out;
}

Mat LinearMap::normal_dense() const {
  if (impl_->kind == Kind::Dense) return impl_->dense.transpose() * impl_->dense;
  return Mat(normal_sparse());
}

LinearMap LinearMap::scaled(double s) const {
  switch (impl_->kind) {
    case Kind::Dense: return dense(s * impl_->dense);
    case Kind::Sparse: return sparse(s * impl_->sp);
    case Kind::ScaledIdentity: return scaled_identity(impl_->rows, s * impl_->s);
  }
  return *this;
}

LinearMap difference_matrix(Index n) {
  if (n < 2) throw Error(ErrorCode::InvalidDimension, "difference_matrix needs n >= 2");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(2 * (n - 1)));
  for (Index i = 0; i + 1 < n; ++i) {
    t.emplace_back(i, i, 1.0);
    t.emplace_back(i, i + 1, -1.0);
  }
  SpMat d(n - 1, n);
  d.setFromTriplets(t.begin(), t.end());
  return LinearMap::sparse(std::move(d));
}

LinearMap column_block(const LinearMap& l, Index first, Index count) {
  if (first < 0 || count < 1 || first + count > l.in_dim())
    throw Error(ErrorCode::InvalidDimension, "column_block range out of bounds");
  if (l.kind() == LinearMap::Kind::Dense) {
    return LinearMap::dense(l.to_dense().middleCols(first, count));
  }
  SpMat s = l.to_sparse();
  return LinearMap::sparse(SpMat(s.middleCols(first, count)));
}

namespace detail {

namespace {

// Number of eigenvalues of the tridiagonal (diag, off) below x.
Index sturm_count(const Vec& diag, const Vec& off, double x) {
  Index count = 0;
  double d = 1.0;
  for (Index i = 0; i < diag.size(); ++i) {
    double o2 = i > 0 ? off[i - 1] * off[i - 1] : 0.0;
    d = diag[i] - x - (i > 0 ? o2 / d : 0.0);
    if (d == 0.0) d = -1e-300;
    if (d < 0.0) ++count;
  }
  return count;
}

// Solves (T - shift I) x = rhs by Gaussian elimination with partial pivoting.
Vec tridiag_solve(const Vec& diag, const Vec& off, double shift, Vec rhs) {
  const Index k = diag.size();
  Vec a = Vec::Zero(k), b = diag.array() - shift, c = Vec::Zero(k), e = Vec::Zero(k);
  for (Index i = 0; i + 1 < k; ++i) {
    a[i + 1] = off[i];
    c[i] = off[i];
  }
  // row i holds b[i] at column i, c[i] at i+1 and e[i] at i+2 after pivoting
  for (Index i = 0; i + 1 < k; ++i) {
    if (std::abs(a[i + 1]) > std::abs(b[i])) {
      std::swap(b[i], a[i + 1]);
      std::swap(c[i], b[i + 1]);
      std::swap(e[i], c[i + 1]);
      std::swap(rhs[i], rhs[i + 1]);
    }
    double piv = b[i] != 0.0 ? b[i] : 1e-300;
    double f = a[i + 1] / piv;
    b[i + 1] -= f * c[i];
    c[i + 1] -= f * e[i];
    rhs[i + 1] -= f * rhs[i];
  }
  Vec x(k);
  for (Index i = k - 1; i >= 0; --i) {
    double v = rhs[i];
    if (i + 1 < k) v -= c[i] * x[i + 1];
    if (i + 2 < k) v -= e[i] * x[i + 2];
    x[i] = v / (b[i] != 0.0 ? b[i] : 1e-300);
  }
  return x;
}

}  // namespace

std::pair<double, double> top_ritz(const Vec& diag, const Vec& off) {
  const Index k = diag.size();
  if (k == 1) return {diag[0], 1.0};
  double lo = diag.minCoeff(), hi = diag.maxCoeff(), radius = 0.0;
  for (Index i = 0; i < k; ++i) {
    double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < k ? std::abs(off[i]) : 0.0);
    radius = std::max(radius, r);
  }
  lo -= radius;
  hi += radius;
  const double scale = std::max(std::abs(lo), std::abs(hi));
  while (hi - lo > 4 * std::numeric_limits<double>::epsilon() * scale) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(diag, off, mid) == k) hi = mid;
    else lo = mid;
  }
  const double top = 0.5 * (lo + hi);
  Vec x = Vec::Ones(k);
  for (int it = 0; it < 3; ++it) {
    x = tridiag_solve(diag, off, top + 8 * std::numeric_limits<double>::epsilon() * scale, x);
    x.normalize();
  }
  double last = x[k - 1];
  return {top, std::min(1.0, last * last)};
}

}  // namespace detail

OpNormResult op_norm(const LinearMap& l, double tol, int max_iter) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidParameter, "op_norm tol must be positive");
  if (l.is_scaled_identity()) return {std::abs(l.scale()), 0, true};
  return op_norm_action(
      l.in_dim(), [&](const Vec& x) { return l.apply(x); },
      [&](const Vec& y) { return l.adjoint_apply(y); }, tol, max_iter);
}

SpdSolver::SpdSolver(const Mat& m) : n_(m.rows()) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw Error(ErrorCode::FactorizationFailure, "SPD solver needs a nonempty square matrix");
  double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > 1e-12 * scale)
    throw Error(ErrorCode::FactorizationFailure, "matrix is not symmetric");
  dense_.compute(m);
  if (dense_.info() != Eigen::Success)
    throw Error(ErrorCode::FactorizationFailure, "Cholesky factorization failed (not positive definite)");
}

SpdSolver::SpdSolver(const SpMat& m) : n_(m.rows()), sparse_(true) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw Error(ErrorCode::FactorizationFailure, "SPD solver needs a nonempty square matrix");
  double scale = std::max(1.0, m.norm());
  if (SpMat(m - SpMat(m.transpose())).norm() > 1e-12 * scale)
    throw Error(ErrorCode::FactorizationFailure, "matrix is not symmetric");
  sp_.compute(m);
  if (sp_.info() != Eigen::Success || (sp_.vectorD().array() <= 0.0).any())
    throw Error(ErrorCode::FactorizationFailure, "LDL^T factorization failed (not positive definite)");
}

Vec SpdSolver::solve(const Vec& b) const {
  check_dim(b.size(), n_, "SpdSolver::solve");
  if (sparse_) return sp_.solve(b);
  return dense_.solve(b);
}

std::shared_ptr<const SpdSolver> cached_spd_solver(const Mat& m) {
  return std::make_shared<const SpdSolver>(m);
}

std::shared_ptr<const SpdSolver> cached_spd_solver(const SpMat& m) {
  return std::make_shared<const SpdSolver>(m);
}

}  // namespace adrsplit
