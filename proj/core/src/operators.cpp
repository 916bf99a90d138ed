#include "adrsplit/operators.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "adrsplit/error.hpp"

namespace adrsplit {

ResolventOp::ResolventOp(Index dim, Fn fn, double sigma, std::optional<double> rho)
    : dim_(dim), fn_(std::move(fn)), sigma_(sigma), rho_(rho) {
  if (dim < 1) throw Error(ErrorCode::InvalidDimension, "operator dimension must be >= 1");
}

bool ResolventOp::valid_gamma(double gamma) const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) return false;
  bool known = has_sigma() || rho_.has_value();
  if (!known) return true;
  if (has_sigma() && gamma + sigma_ > 0.0) return true;
  if (rho_ && 1.0 + gamma * *rho_ > 0.0) return true;
  return false;
}

Vec ResolventOp::resolve(double gamma, const Vec& x) const {
  if (x.size() != dim_)
    throw Error(ErrorCode::InvalidDimension, "resolvent argument has dimension " +
                                                 std::to_string(x.size()) + ", expected " +
                                                 std::to_string(dim_));
  if (!valid_gamma(gamma))
    throw Error(ErrorCode::InvalidParameter,
                "stepsize " + std::to_string(gamma) + " outside the single-valued region");
  return fn_(gamma, x);
}

ResolventOp zero_operator(Index dim) {
  return ResolventOp(dim, [](double, const Vec& x) { return x; }, 0.0);
}

ResolventOp identity_operator(Index dim) {
  return ResolventOp(dim, [](double g, const Vec& x) -> Vec { return x / (1.0 + g); }, 1.0,
                     1.0);
}

Vec resolvent_affine(const Mat& M, const Vec& c, double gamma, const Vec& x) {
  const Index n = M.rows();
  if (M.cols() != n || c.size() != n || x.size() != n)
    throw Error(ErrorCode::InvalidDimension, "resolvent_affine dimension mismatch");
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidParameter, "resolvent stepsize must be positive");
  Mat sys = Mat::Identity(n, n) + gamma * M;
  Vec rhs = x - gamma * c;
  Eigen::FullPivLU<Mat> lu(sys);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularResolvent, "I + gamma*M is singular");
  Vec y = lu.solve(rhs);
  if ((sys * y - rhs).norm() > 1e-10 * (1.0 + rhs.norm()))
    throw Error(ErrorCode::SingularResolvent, "resolvent solve residual too large");
  return y;
}

double AffineOperator::comonotone_modulus() const {
  const Index n = M.rows();
  Eigen::FullPivLU<Mat> lu(M);
  if (lu.isInvertible()) {
    Mat inv = lu.inverse();
    Mat sym = 0.5 * (inv + inv.transpose());
    return Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
  }
  if ((M - M.transpose()).norm() > 1e-12 * std::max(1.0, M.norm()))
    throw Error(ErrorCode::Infeasible, "comonotone modulus needs invertible or symmetric M");
  Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(M, Eigen::EigenvaluesOnly).eigenvalues();
  double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i)
    if (std::abs(ev(i)) > tol) best = std::min(best, 1.0 / ev(i));
  return best;
}

ResolventOp AffineOperator::as_resolvent_op() const { return as_resolvent_op(comonotone_modulus()); }

ResolventOp AffineOperator::as_resolvent_op(double sigma) const {
  Mat m = M;
  Vec cc = c;
  return ResolventOp(
      m.rows(), [m, cc](double g, const Vec& x) { return resolvent_affine(m, cc, g, x); }, sigma);
}

Vec yosida(const ResolventOp& a, double gamma, const Vec& x) {
  return (x - a.resolve(gamma, x)) / gamma;
}

Vec resolvent_of_inverse(const ResolventOp& a, double delta, const Vec& u) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidParameter, "stepsize must be positive");
  return u - delta * a.resolve(1.0 / delta, u / delta);
}

double check_comonotone(const std::vector<GraphPair>& pairs, double sigma) {
  if (pairs.size() < 2) throw Error(ErrorCode::InvalidParameter, "need at least two graph pairs");
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      Vec dx = pairs[i].x - pairs[j].x;
      Vec du = pairs[i].u - pairs[j].u;
      worst = std::min(worst, dx.dot(du) - sigma * du.squaredNorm());
    }
  }
  return worst;
}

}  // namespace adrsplit
