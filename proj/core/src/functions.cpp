#include "adrsplit/functions.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <tuple>

#include "adrsplit/error.hpp"

namespace adrsplit {

namespace {

std::uint64_t next_function_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

double sign(double t) { return (t > 0.0) - (t < 0.0); }

// (map id, structure, rho, gamma)
using CacheKey = std::tuple<std::uint64_t, int, double, double>;

struct SolverCache {
  std::shared_mutex mu;
  std::map<CacheKey, std::shared_ptr<const SpdSolver>> entries;
};

SolverCache& cache() {
  static SolverCache c;
  return c;
}

constexpr std::size_t kMaxCacheEntries = 512;

// Factorization of rho I + gamma L^T L, shared across calls with the same key.
std::shared_ptr<const SpdSolver> normal_solver(const LinearMap& l, int structure, double rho,
                                               double gamma) {
  CacheKey key{l.id(), structure, rho, gamma};
  SolverCache& c = cache();
  {
    std::shared_lock lock(c.mu);
    auto it = c.entries.find(key);
    if (it != c.entries.end()) return it->second;
  }
  std::shared_ptr<const SpdSolver> solver;
  if (l.kind() == LinearMap::Kind::Dense) {
    Mat m = gamma * l.normal_dense();
    m.diagonal().array() += rho;
    solver = std::make_shared<const SpdSolver>(m);
  } else {
    SpMat m = gamma * l.normal_sparse();
    if (rho != 0.0) {
      SpMat eye(m.rows(), m.cols());
      eye.setIdentity();
      m += rho * eye;
    }
    solver = std::make_shared<const SpdSolver>(m);
  }
  std::unique_lock lock(c.mu);
  if (c.entries.size() >= kMaxCacheEntries) c.entries.clear();
  auto [it, inserted] = c.entries.emplace(key, solver);
  return it->second;
}

}  // namespace

double mcp_value(double t, double tau) {
  double a = std::abs(t);
  if (a <= tau) return a - t * t / (2.0 * tau);
  return tau / 2.0;
}

double prox_mcp_scalar(double a, double omega, double c, double tau) {
  if (!(omega > 0.0) || !(tau > 0.0) || !(c > 0.0))
    throw Error(ErrorCode::InvalidParameter, "MCP prox needs positive omega, c, tau");
  double kink = omega / tau;
  if (c < (1.0 + 1e-12) * kink)
    throw Error(ErrorCode::NonStronglyConvex,
                "MCP prox curvature c=" + std::to_string(c) + " does not exceed omega/tau=" +
                    std::to_string(kink));
  double r = std::abs(a);
  if (c * r <= omega) return 0.0;
  if (r <= tau) return sign(a) * (c * r - omega) / (c - kink);
  return a;
}

ProxFunction ProxFunction::zero(Index dim) {
  if (dim < 1) throw Error(ErrorCode::InvalidDimension, "function dimension must be >= 1");
  ProxFunction f;
  f.kind_ = Kind::Zero;
  f.dim_ = dim;
  f.id_ = next_function_id();
  return f;
}

ProxFunction ProxFunction::quadratic(double weight, Vec center) {
  if (center.size() < 1) throw Error(ErrorCode::InvalidDimension, "function dimension must be >= 1");
  ProxFunction f;
  f.kind_ = Kind::Quadratic;
  f.dim_ = center.size();
  f.id_ = next_function_id();
  f.weight_ = weight;
  f.center_ = std::move(center);
  return f;
}

ProxFunction ProxFunction::quadratic(Index dim, double weight) {
  return quadratic(weight, Vec::Zero(dim));
}

ProxFunction ProxFunction::mcp(Index dim, double omega, double tau) {
  if (dim < 1) throw Error(ErrorCode::InvalidDimension, "function dimension must be >= 1");
  if (!(omega > 0.0) || !(tau > 0.0))
    throw Error(ErrorCode::InvalidParameter, "MCP needs omega > 0 and tau > 0");
  ProxFunction f;
  f.kind_ = Kind::Mcp;
  f.dim_ = dim;
  f.id_ = next_function_id();
  f.omega_ = omega;
  f.tau_ = tau;
  return f;
}

double ProxFunction::rho() const {
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Quadratic: return weight_;
    case Kind::Mcp: return -omega_ / tau_;
  }
  return 0.0;
}

double ProxFunction::eval(const Vec& w) const {
  if (w.size() != dim_) throw Error(ErrorCode::InvalidDimension, "function argument size mismatch");
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Quadratic: return 0.5 * weight_ * (w - center_).squaredNorm();
    case Kind::Mcp: {
      double s = 0.0;
      for (Index j = 0; j < w.size(); ++j) s += mcp_value(w(j), tau_);
      return omega_ * s;
    }
  }
  return 0.0;
}

Vec ProxFunction::prox(double t, const Vec& a) const {
  if (a.size() != dim_) throw Error(ErrorCode::InvalidDimension, "prox argument size mismatch");
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidParameter, "prox step must be positive");
  switch (kind_) {
    case Kind::Zero: return a;
    case Kind::Quadratic: {
      double den = 1.0 + t * weight_;
      if (!(den > 0.0))
        throw Error(ErrorCode::NonStronglyConvex, "quadratic prox requires 1 + t*rho > 0");
      return (a + t * weight_ * center_) / den;
    }
    case Kind::Mcp: {
      Vec out(a.size());
      double c = 1.0 / t;
      for (Index j = 0; j < a.size(); ++j) out(j) = prox_mcp_scalar(a(j), omega_, c, tau_);
      return out;
    }
  }
  return a;
}

double ProxFunction::subgradient_distance(const Vec& w, const Vec& v) const {
  if (w.size() != dim_ || v.size() != dim_)
    throw Error(ErrorCode::InvalidDimension, "subgradient argument size mismatch");
  switch (kind_) {
    case Kind::Zero: return v.norm();
    case Kind::Quadratic: return (weight_ * (w - center_) + v).norm();
    case Kind::Mcp: {
      double s = 0.0;
      for (Index j = 0; j < w.size(); ++j) {
        double t = w(j);
        double d;
        if (t == 0.0) {
          d = std::max(0.0, std::abs(v(j)) - omega_);
        } else if (std::abs(t) < tau_) {
          d = omega_ * (sign(t) - t / tau_) + v(j);
        } else {
          d = v(j);
        }
        s += d * d;
      }
      return std::sqrt(s);
    }
  }
  return 0.0;
}

Vec subproblem_solve(const ProxFunction& f, const LinearMap& l, const Vec& x, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidParameter, "subproblem stepsize must be positive");
  if (l.in_dim() != f.dim())
    throw Error(ErrorCode::InvalidDimension, "subproblem: L input dimension differs from f");
  if (x.size() != l.out_dim())
    throw Error(ErrorCode::InvalidDimension, "subproblem: x dimension differs from L output");

  if (l.is_scaled_identity()) {
    double s = l.scale();
    if (s == 0.0) throw Error(ErrorCode::UnsupportedSubproblem, "subproblem with L = 0");
    double t = 1.0 / (gamma * s * s);
    if (!(1.0 + t * f.rho() > 0.0))
      throw Error(ErrorCode::NonStronglyConvex, "subproblem is not strongly convex (1 + t*rho <= 0)");
    return f.prox(t, -x / (gamma * s));
  }
  if (f.kind() == ProxFunction::Kind::Quadratic) {
    auto solver = normal_solver(l, 1, f.weight(), gamma);
    return solver->solve(f.weight() * f.center() - l.adjoint_apply(x));
  }
  if (f.kind() == ProxFunction::Kind::Zero) {
    if (l.out_dim() < l.in_dim())
      throw Error(ErrorCode::UnsupportedSubproblem, "f = 0 needs L^T L invertible");
    std::shared_ptr<const SpdSolver> solver;
    try {
      solver = normal_solver(l, 0, 0.0, gamma);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::FactorizationFailure) throw;
      throw Error(ErrorCode::UnsupportedSubproblem, "f = 0 needs L^T L invertible");
    }
    return solver->solve(-l.adjoint_apply(x));
  }
  throw Error(ErrorCode::UnsupportedSubproblem,
              "subproblem structure not supported (need quadratic f, L = s*I, or f = 0)");
}

Vec resolvent_from_subproblem(const ProxFunction& f, const LinearMap& l,
                              const std::optional<Vec>& b_shift, double gamma, const Vec& x) {
  Vec xs = b_shift ? Vec(x - gamma * *b_shift) : x;
  return xs + gamma * l.apply(subproblem_solve(f, l, xs, gamma));
}

ResolventOp subproblem_operator(const ProxFunction& f, const LinearMap& l,
                                std::optional<Vec> b_shift, double sigma) {
  return ResolventOp(
      l.out_dim(),
      [f, l, b = std::move(b_shift)](double g, const Vec& x) {
        return resolvent_from_subproblem(f, l, b, g, x);
      },
      sigma);
}

std::size_t subproblem_cache_size() {
  SolverCache& c = cache();
  std::shared_lock lock(c.mu);
  return c.entries.size();
}

void clear_subproblem_cache() {
  SolverCache& c = cache();
  std::unique_lock lock(c.mu);
  c.entries.clear();
}

}  // namespace adrsplit
