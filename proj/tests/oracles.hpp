#pragma once

// Reference computations used by the tests. None of them call into the
// library's solvers; they work on explicit dense matrices.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double spectral_norm(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

inline Mat difference_matrix(int n) {
  Mat d = Mat::Zero(n - 1, n);
  for (int i = 0; i + 1 < n; ++i) {
    d(i, i) = 1.0;
    d(i, i + 1) = -1.0;
  }
  return d;
}

inline Mat random_matrix(std::mt19937_64& gen, int r, int c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = nd(gen);
  return m;
}

inline Vec random_vector(std::mt19937_64& gen, int n, double scale = 1.0) {
  return random_matrix(gen, n, 1, scale);
}

// Symmetric matrix with eigenvalues drawn from [lo, hi].
inline Mat random_spectrum(std::mt19937_64& gen, int n, double lo, double hi) {
  Eigen::HouseholderQR<Mat> qr(random_matrix(gen, n, n));
  Mat q = qr.householderQ();
  std::uniform_real_distribution<double> ud(lo, hi);
  Vec ev(n);
  for (int i = 0; i < n; ++i) ev(i) = ud(gen);
  return q * ev.asDiagonal() * q.transpose();
}

inline Mat random_skew(std::mt19937_64& gen, int n, double scale) {
  Mat a = random_matrix(gen, n, n, scale);
  return a - a.transpose();
}

// Largest sigma with <x, Mx> >= sigma ||Mx||^2, via the symmetric part of M^{-1}.
inline double affine_modulus(const Mat& m) {
  Mat inv = m.inverse();
  Mat s = 0.5 * (inv + inv.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  return es.eigenvalues()(0);
}

// (Id + g M)^{-1}(x - g c)
inline Vec affine_resolvent(const Mat& m, const Vec& c, double g, const Vec& x) {
  Mat a = Mat::Identity(m.rows(), m.cols()) + g * m;
  return a.fullPivLu().solve(x - g * c);
}

// Affine map x -> P x + q given only its action.
struct AffineMap {
  Mat P;
  Vec q;
};

inline AffineMap probe_affine(int dim, const std::function<Vec(const Vec&)>& t) {
  AffineMap a;
  a.q = t(Vec::Zero(dim));
  a.P.resize(dim, dim);
  for (int j = 0; j < dim; ++j) a.P.col(j) = t(Vec::Unit(dim, j)) - a.q;
  return a;
}

inline Vec fixed_point(const AffineMap& a) {
  Mat i = Mat::Identity(a.P.rows(), a.P.cols());
  return (i - a.P).fullPivLu().solve(a.q);
}

// One product-space step on affine operators M_i x + c_i, assembled from
// dense matrices. x stacks the m-1 blocks.
struct AffineProductStep {
  std::vector<Mat> M;
  std::vector<Vec> c;
  double gamma, delta, lambda, mu, kappa;
  bool g_first = false;

  int d() const { return static_cast<int>(M[0].rows()); }
  int m() const { return static_cast<int>(M.size()); }

  Vec jf(const Vec& x) const {
    Vec out(x.size());
    for (int i = 0; i + 1 < m(); ++i)
      out.segment(i * d(), d()) = affine_resolvent(M[i], c[i], gamma, x.segment(i * d(), d()));
    return out;
  }
  Vec jg(const Vec& x) const {
    Vec avg = Vec::Zero(d());
    for (int i = 0; i + 1 < m(); ++i) avg += x.segment(i * d(), d());
    avg /= (m() - 1);
    Vec r = affine_resolvent(M.back(), c.back(), delta / (m() - 1), avg);
    Vec out(x.size());
    for (int i = 0; i + 1 < m(); ++i) out.segment(i * d(), d()) = r;
    return out;
  }
  Vec operator()(const Vec& x) const {
    if (!g_first) {
      Vec y = jf(x);
      Vec z = jg((1.0 - lambda) * x + lambda * y);
      return x + kappa * mu * (z - y);
    }
    Vec y = jg(x);
    Vec z = jf((1.0 - mu) * x + mu * y);
    return x + kappa * lambda * (z - y);
  }
};

// Zero of sum_i (M_i x + c_i).
inline Vec affine_sum_zero(const std::vector<Mat>& M, const std::vector<Vec>& c) {
  Mat s = Mat::Zero(M[0].rows(), M[0].cols());
  Vec t = Vec::Zero(M[0].rows());
  for (std::size_t i = 0; i < M.size(); ++i) {
    s += M[i];
    t += c[i];
  }
  return s.fullPivLu().solve(-t);
}

// argmin_t omega p_tau(t) + (c/2)(t - a)^2 by grid search and golden-section refinement.
inline double mcp_prox_grid(double a, double omega, double c, double tau) {
  auto pen = [tau](double t) {
    double s = std::abs(t);
    return s <= tau ? s - t * t / (2.0 * tau) : tau / 2.0;
  };
  auto obj = [&](double t) { return omega * pen(t) + 0.5 * c * (t - a) * (t - a); };
  double lo = std::min(0.0, a) - 1.0, hi = std::max(0.0, a) + 1.0;
  const int n = 200000;
  double h = (hi - lo) / n;
  int best = 0;
  double fbest = obj(lo);
  for (int k = 1; k <= n; ++k) {
    double f = obj(lo + k * h);
    if (f < fbest) {
      fbest = f;
      best = k;
    }
  }
  double l = lo + (best - 1) * h, r = lo + (best + 1) * h;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200 && r - l > 1e-14; ++it) {
    double x1 = r - gr * (r - l), x2 = l + gr * (r - l);
    if (obj(x1) <= obj(x2)) r = x2;
    else l = x1;
  }
  double t = 0.5 * (l + r);
  // the kink at 0 is a common minimiser; compare explicitly
  return obj(0.0) <= obj(t) ? 0.0 : t;
}

// Quadratic block (w/2)||u - c||^2 with a dense linear map.
struct QuadBlock {
  double w;
  Vec c;
  Mat L;
};

// argmin (w/2)||u - c||^2 + (g/2)||L u + v||^2 via the normal equations.
inline Vec quad_step(const QuadBlock& q, double g, const Vec& v) {
  Mat a = q.w * Mat::Identity(q.L.cols(), q.L.cols()) + g * q.L.transpose() * q.L;
  Vec rhs = q.w * q.c - g * q.L.transpose() * v;
  return a.ldlt().solve(rhs);
}

// Two-block ADMM in scaled form: the first block uses penalty g1, the second
// block and the multiplier use g2. With g1 = g2 this is the textbook method.
struct TwoBlockAdmm {
  QuadBlock a, b;
  Vec rhs;
  double g1, g2;

  struct State {
    Vec u1, u2, y;
  };

  State step(const State& s) const {
    State n;
    n.u1 = quad_step(a, g1, b.L * s.u2 - rhs + s.y / g1);
    n.u2 = quad_step(b, g2, a.L * n.u1 - rhs + s.y / g2);
    n.y = s.y + g2 * (a.L * n.u1 + b.L * n.u2 - rhs);
    return n;
  }
};

// KKT point of min sum_i (w_i/2)||u_i - c_i||^2 s.t. sum_i L_i u_i = b,
// from the stationarity/feasibility linear system.
inline std::pair<std::vector<Vec>, Vec> quad_kkt(const std::vector<QuadBlock>& blocks, const Vec& b) {
  int total = 0;
  for (const auto& q : blocks) total += static_cast<int>(q.L.cols());
  const int p = static_cast<int>(b.size());
  Mat k = Mat::Zero(total + p, total + p);
  Vec r = Vec::Zero(total + p);
  int off = 0;
  for (const auto& q : blocks) {
    int n = static_cast<int>(q.L.cols());
    k.block(off, off, n, n) = q.w * Mat::Identity(n, n);
    k.block(off, total, n, p) = q.L.transpose();
    k.block(total, off, p, n) = q.L;
    r.segment(off, n) = q.w * q.c;
    off += n;
  }
  r.segment(total, p) = b;
  Vec sol = k.fullPivLu().solve(r);
  std::vector<Vec> u;
  off = 0;
  for (const auto& q : blocks) {
    int n = static_cast<int>(q.L.cols());
    u.push_back(sol.segment(off, n));
    off += n;
  }
  return {u, sol.segment(total, p)};
}

inline double max_abs_diff(const Vec& a, const Vec& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace oracle
