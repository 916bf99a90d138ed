#include "adrsplit/admm.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "adrsplit/error.hpp"

namespace adrsplit {

namespace {

using Clock = std::chrono::steady_clock;

double max_norm(const Blocks& s) {
  double out = 0.0;
  for (const auto& v : s) out = std::max(out, v.norm());
  return out;
}

[[noreturn]] void block_failure(const Error& e, int block, int k) {
  throw Error(e.code(), "iteration " + std::to_string(k) + ", block " + std::to_string(block + 1) +
                            ": " + e.what());
}

void check_finite(const Blocks& u, const Vec& y, double bound, int k) {
  double n = y.squaredNorm();
  for (const auto& v : u) n += v.squaredNorm();
  n = std::sqrt(n);
  if (!std::isfinite(n) || n > bound)
    throw Error(ErrorCode::Divergence,
                "iterate norm exceeded " + std::to_string(bound) + " at iteration " + std::to_string(k));
}

void check_init(const BlockProblem& prob, const Blocks& u, const Vec& y) {
  if (static_cast<int>(u.size()) != prob.m())
    throw Error(ErrorCode::InvalidDimension, "initial point needs m blocks");
  for (int i = 0; i < prob.m(); ++i)
    if (u[static_cast<std::size_t>(i)].size() != prob.L[static_cast<std::size_t>(i)].in_dim())
      throw Error(ErrorCode::InvalidDimension, "initial block " + std::to_string(i + 1) + " has wrong size");
  if (y.size() != prob.range_dim())
    throw Error(ErrorCode::InvalidDimension, "initial multiplier has wrong size");
}

// Shared bookkeeping: history rows, traces, stopping.
class Recorder {
 public:
  Recorder(const AdmmOptions& opts, AdmmResult& res) : opts_(opts), res_(res), t0_(Clock::now()) {}

  void start(const Blocks& u, const Vec& y) {
    if (opts_.record_iterates) {
      res_.u_trace.push_back(u);
      res_.y_trace.push_back(y);
    }
  }

  // Returns true when the run should stop.
  bool step(int k, const Blocks& u, const Vec& y, const ResidualParts& r) {
    AdmmRecord rec;
    rec.iter = k;
    rec.primal_residual = r.primal;
    rec.dual_residual = r.dual;
    if (opts_.quality) rec.quality = opts_.quality(u);
    if (opts_.timing)
      rec.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0_).count();
    res_.history.push_back(rec);
    if (opts_.record_iterates) {
      res_.u_trace.push_back(u);
      res_.y_trace.push_back(y);
    }
    res_.iterations = k;
    res_.final_residual = r.value();
    check_finite(u, y, opts_.divergence_bound, k);
    if (r.value() <= opts_.eps && !res_.converged) {
      res_.converged = true;
      res_.converged_at = k;
      return !opts_.run_to_max;
    }
    return false;
  }

 private:
  const AdmmOptions& opts_;
  AdmmResult& res_;
  Clock::time_point t0_;
};

}  // namespace

BlockProblem::BlockProblem(std::vector<ProxFunction> f_, std::vector<LinearMap> L_, Vec b_,
                           std::optional<std::vector<double>> rho_)
    : f(std::move(f_)), L(std::move(L_)), b(std::move(b_)) {
  const std::size_t m = f.size();
  if (m < 2) throw Error(ErrorCode::InvalidDimension, "block problem needs m >= 2");
  if (L.size() != m) throw Error(ErrorCode::InvalidDimension, "need one linear map per block");
  for (std::size_t i = 0; i < m; ++i) {
    if (L[i].out_dim() != b.size())
      throw Error(ErrorCode::InvalidDimension, "L_" + std::to_string(i + 1) + " maps into the wrong space");
    if (L[i].in_dim() != f[i].dim())
      throw Error(ErrorCode::InvalidDimension, "f_" + std::to_string(i + 1) + " and L_" +
                                                   std::to_string(i + 1) + " dimensions differ");
  }
  if (rho_) {
    rho = std::move(*rho_);
    if (rho.size() != m) throw Error(ErrorCode::InvalidDimension, "need one modulus per block");
  } else {
    rho.resize(m);
    for (std::size_t i = 0; i + 1 < m; ++i) rho[i] = f[i].rho();
    rho[m - 1] = std::min(f[m - 1].rho(), 0.0);
  }
  for (std::size_t i = 0; i + 1 < m; ++i)
    if (rho[i] < 0.0)
      throw Error(ErrorCode::AssumptionViolation, "rho_" + std::to_string(i + 1) + " must be >= 0");
  for (std::size_t i = 0; i < m; ++i)
    if (rho[i] > f[i].rho() + 1e-12 * std::max(1.0, std::abs(f[i].rho())))
      throw Error(ErrorCode::AssumptionViolation,
                  "declared rho_" + std::to_string(i + 1) + " exceeds the convexity modulus of f_" +
                      std::to_string(i + 1));
  if (rho[m - 1] > 0.0) throw Error(ErrorCode::AssumptionViolation, "rho_m must be <= 0");
}

Vec BlockProblem::constraint_residual(const Blocks& u) const {
  Vec r = -b;
  for (std::size_t i = 0; i < f.size(); ++i) r += L[i].apply(u[i]);
  return r;
}

std::vector<double> comonotone_moduli(const BlockProblem& prob) {
  const int m = prob.m();
  std::vector<double> s(static_cast<std::size_t>(m));
  for (int i = 0; i + 1 < m; ++i) {
    double nl = prob.L[static_cast<std::size_t>(i)].norm();
    s[static_cast<std::size_t>(i)] = prob.rho[static_cast<std::size_t>(i)] / (nl * nl);
  }
  const double rm = prob.rho.back();
  if (rm == 0.0) {
    s.back() = 0.0;
  } else {
    const LinearMap& lm = prob.L.back();
    if (lm.in_dim() != lm.out_dim() || !lm.invertible())
      throw Error(ErrorCode::AssumptionViolation, "rho_m < 0 requires an invertible L_m");
    double ni = lm.inverse_norm();
    s.back() = rm * ni * ni;
  }
  return s;
}

std::vector<ResolventOp> kkt_operators(const BlockProblem& prob) {
  auto sigma = comonotone_moduli(prob);
  std::vector<ResolventOp> ops;
  for (int i = 0; i < prob.m(); ++i) {
    auto k = static_cast<std::size_t>(i);
    std::optional<Vec> shift;
    if (i + 1 == prob.m()) shift = prob.b;
    ops.push_back(subproblem_operator(prob.f[k], prob.L[k], shift, sigma[k]));
  }
  return ops;
}

const char* algorithm_name(AdmmAlgorithm a) {
  switch (a) {
    case AdmmAlgorithm::General: return "alg2";
    case AdmmAlgorithm::Special: return "alg3";
    case AdmmAlgorithm::GaussSeidel: return "gs_admm";
  }
  return "?";
}

AdmmInit zero_init(const BlockProblem& prob) {
  AdmmInit init;
  for (int i = 0; i < prob.m(); ++i)
    init.u.push_back(Vec::Zero(prob.L[static_cast<std::size_t>(i)].in_dim()));
  init.y = Vec::Zero(prob.range_dim());
  init.s.assign(static_cast<std::size_t>(prob.m() - 1), Vec::Zero(prob.range_dim()));
  return init;
}

Blocks general_s_from_special(const BlockProblem& prob, const AdrParams& p, const Blocks& u0) {
  const int m = prob.m();
  const double dp = p.delta / static_cast<double>(m - 1);
  Vec feas = prob.constraint_residual(u0);
  Blocks s;
  for (int i = 0; i + 1 < m; ++i) {
    auto k = static_cast<std::size_t>(i);
    s.push_back(dp * feas - p.delta * prob.L[k].apply(u0[k]));
  }
  return s;
}

Blocks special_dual_residuals(const BlockProblem& prob, double gamma, double delta,
                              const Blocks& u_prev, const Blocks& u) {
  const int m = prob.m();
  // sum_j L_j (gamma u_j^k - delta u_j^{k+1}) + (delta - gamma) b
  Vec mix = (delta - gamma) * prob.b;
  for (int j = 0; j < m; ++j) {
    auto k = static_cast<std::size_t>(j);
    mix += prob.L[k].apply(gamma * u_prev[k] - delta * u[k]);
  }
  mix /= static_cast<double>(m - 1);
  Blocks s;
  for (int i = 0; i + 1 < m; ++i) {
    auto k = static_cast<std::size_t>(i);
    const LinearMap& l = prob.L[k];
    s.push_back(l.adjoint_apply(gamma * l.apply(u[k] - u_prev[k]) + mix));
  }
  return s;
}

Blocks general_dual_residuals(const BlockProblem& prob, const Blocks& z, const Vec& y) {
  Blocks s;
  for (int i = 0; i + 1 < prob.m(); ++i) {
    auto k = static_cast<std::size_t>(i);
    s.push_back(prob.L[k].adjoint_apply(z[k] - y));
  }
  return s;
}

Blocks gs_dual_residuals(const BlockProblem& prob, double coef, const Blocks& u_prev,
                         const Blocks& u) {
  const int m = prob.m();
  Blocks s(static_cast<std::size_t>(m - 1));
  Vec tail = Vec::Zero(prob.range_dim());
  for (int i = m - 1; i >= 1; --i) {
    auto k = static_cast<std::size_t>(i);
    tail += prob.L[k].apply(u_prev[k] - u[k]);
    s[k - 1] = coef * prob.L[k - 1].adjoint_apply(tail);
  }
  return s;
}

ResidualParts residual_parts(const BlockProblem& prob, const ResidualInput& in) {
  if (in.u.empty()) throw Error(ErrorCode::NotReady, "no completed iteration to evaluate");
  ResidualParts r;
  r.primal = prob.constraint_residual(in.u).norm();
  switch (in.algorithm) {
    case AdmmAlgorithm::Special:
      if (in.u_prev.empty()) throw Error(ErrorCode::NotReady, "previous iterate missing");
      r.dual = max_norm(special_dual_residuals(prob, in.gamma, in.delta, in.u_prev, in.u));
      break;
    case AdmmAlgorithm::GaussSeidel:
      if (in.u_prev.empty()) throw Error(ErrorCode::NotReady, "previous iterate missing");
      r.dual = max_norm(gs_dual_residuals(prob, in.gs_coef, in.u_prev, in.u));
      break;
    case AdmmAlgorithm::General:
      if (in.z.empty()) throw Error(ErrorCode::NotReady, "z blocks missing");
      r.dual = max_norm(general_dual_residuals(prob, in.z, in.y));
      break;
  }
  return r;
}

double stopping_residual(const BlockProblem& prob, const ResidualInput& in) {
  return residual_parts(prob, in).value();
}

double kkt_residual(const BlockProblem& prob, const Blocks& u, const Vec& y) {
  double r = prob.constraint_residual(u).norm();
  for (int i = 0; i < prob.m(); ++i) {
    auto k = static_cast<std::size_t>(i);
    r = std::max(r, prob.f[k].subgradient_distance(u[k], prob.L[k].adjoint_apply(y)));
  }
  return r;
}

AdmmResult admm_general_run(const BlockProblem& prob, const AdrParams& p, const AdmmInit& init,
                            const AdmmOptions& opts) {
  check_params(p);
  const int m = prob.m();
  const double dp = p.delta / static_cast<double>(m - 1);
  const double kl = p.kappa * p.lambda;
  if (static_cast<int>(init.s.size()) != m - 1)
    throw Error(ErrorCode::InvalidDimension, "general algorithm needs m-1 initial s blocks");
  AdmmResult res;
  res.u = init.u.empty() ? zero_init(prob).u : init.u;
  res.y = init.y;
  res.s = init.s;
  check_init(prob, res.u, res.y);
  Recorder rec(opts, res);
  rec.start(res.u, res.y);
  Blocks z(static_cast<std::size_t>(m - 1)), v(static_cast<std::size_t>(m - 1));
  for (int k = 1; k <= opts.max_iter; ++k) {
    const Vec y = res.y;
    Vec vbar = Vec::Zero(prob.range_dim());
    for (int i = 0; i + 1 < m; ++i) {
      auto j = static_cast<std::size_t>(i);
      Vec a = y + (p.mu - 1.0) * res.s[j];
      try {
        res.u[j] = subproblem_solve(prob.f[j], prob.L[j], a, p.gamma);
      } catch (const Error& e) {
        block_failure(e, i, k);
      }
      z[j] = a + p.gamma * prob.L[j].apply(res.u[j]);
      v[j] = (1.0 - kl) * y + kl * z[j] - res.s[j];
      vbar += v[j];
    }
    vbar /= static_cast<double>(m - 1);
    Vec arg = vbar - dp * prob.b;
    auto last = static_cast<std::size_t>(m - 1);
    try {
      res.u[last] = subproblem_solve(prob.f[last], prob.L[last], arg, dp);
    } catch (const Error& e) {
      block_failure(e, m - 1, k);
    }
    res.y = arg + dp * prob.L[last].apply(res.u[last]);
    for (int i = 0; i + 1 < m; ++i) {
      auto j = static_cast<std::size_t>(i);
      res.s[j] = res.s[j] - (1.0 - kl) * y + res.y - kl * z[j];
    }
    ResidualParts r;
    r.primal = prob.constraint_residual(res.u).norm();
    r.dual = max_norm(general_dual_residuals(prob, z, res.y));
    res.z = z;
    if (rec.step(k, res.u, res.y, r)) break;
  }
  return res;
}

AdmmResult admm_special_run(const BlockProblem& prob, double gamma, double delta,
                            const AdmmInit& init, const AdmmOptions& opts) {
  if (!(gamma > 0.0) || !(delta > 0.0))
    throw Error(ErrorCode::InvalidParameter, "stepsizes must be positive");
  const int m = prob.m();
  const double md = static_cast<double>(m - 1);
  const double gp = gamma / md;
  const double dp = delta / md;
  std::vector<int> order = opts.block_order;
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(m - 1));
    std::iota(order.begin(), order.end(), 0);
  } else {
    std::vector<int> check = order;
    std::sort(check.begin(), check.end());
    for (int i = 0; i + 1 < m; ++i)
      if (static_cast<int>(check.size()) != m - 1 || check[static_cast<std::size_t>(i)] != i)
        throw Error(ErrorCode::InvalidParameter, "block_order must permute 0..m-2");
  }
  AdmmResult res;
  res.u = init.u.empty() ? zero_init(prob).u : init.u;
  res.y = init.y;
  check_init(prob, res.u, res.y);
  Recorder rec(opts, res);
  rec.start(res.u, res.y);
  Blocks lu(static_cast<std::size_t>(m));
  for (int k = 1; k <= opts.max_iter; ++k) {
    const Blocks u_prev = res.u;
    Vec total = -prob.b;
    for (int j = 0; j < m; ++j) {
      auto q = static_cast<std::size_t>(j);
      lu[q] = prob.L[q].apply(u_prev[q]);
      total += lu[q];
    }
    for (int i : order) {
      auto j = static_cast<std::size_t>(i);
      Vec x = gp * (total - md * lu[j]) + res.y;
      try {
        res.u[j] = subproblem_solve(prob.f[j], prob.L[j], x, gamma);
      } catch (const Error& e) {
        block_failure(e, i, k);
      }
    }
    Vec partial = -prob.b;
    for (int i = 0; i + 1 < m; ++i) {
      auto j = static_cast<std::size_t>(i);
      partial += prob.L[j].apply(res.u[j]);
    }
    auto last = static_cast<std::size_t>(m - 1);
    try {
      res.u[last] = subproblem_solve(prob.f[last], prob.L[last], dp * partial + res.y, dp);
    } catch (const Error& e) {
      block_failure(e, m - 1, k);
    }
    Vec feas = partial + prob.L[last].apply(res.u[last]);
    res.y = res.y + dp * feas;
    ResidualParts r;
    r.primal = feas.norm();
    r.dual = max_norm(special_dual_residuals(prob, gamma, delta, u_prev, res.u));
    if (rec.step(k, res.u, res.y, r)) break;
  }
  return res;
}

AdmmResult gs_admm_run(const BlockProblem& prob, double gamma_prime, const AdmmInit& init,
                       const AdmmOptions& opts) {
  if (!(gamma_prime > 0.0)) throw Error(ErrorCode::InvalidParameter, "stepsize must be positive");
  const int m = prob.m();
  const double coef = opts.gs_residual_coef.value_or(static_cast<double>(m - 1) * gamma_prime);
  AdmmResult res;
  res.u = init.u.empty() ? zero_init(prob).u : init.u;
  res.y = init.y;
  check_init(prob, res.u, res.y);
  Recorder rec(opts, res);
  rec.start(res.u, res.y);
  Blocks lu(static_cast<std::size_t>(m));
  for (int k = 1; k <= opts.max_iter; ++k) {
    const Blocks u_prev = res.u;
    Vec r = -prob.b;
    for (int j = 0; j < m; ++j) {
      auto q = static_cast<std::size_t>(j);
      lu[q] = prob.L[q].apply(u_prev[q]);
      r += lu[q];
    }
    for (int i = 0; i < m; ++i) {
      auto j = static_cast<std::size_t>(i);
      r -= lu[j];
      try {
        res.u[j] = subproblem_solve(prob.f[j], prob.L[j], gamma_prime * r + res.y, gamma_prime);
      } catch (const Error& e) {
        block_failure(e, i, k);
      }
      lu[j] = prob.L[j].apply(res.u[j]);
      r += lu[j];
    }
    res.y = res.y + gamma_prime * r;
    ResidualParts parts;
    parts.primal = r.norm();
    parts.dual = max_norm(gs_dual_residuals(prob, coef, u_prev, res.u));
    if (rec.step(k, res.u, res.y, parts)) break;
  }
  return res;
}

KktPoint extract_kkt_from_fixed_point(const BlockProblem& prob, const Blocks& x_bar,
                                      const AdrParams& p) {
  check_params(p);
  const int m = prob.m();
  if (static_cast<int>(x_bar.size()) != m - 1)
    throw Error(ErrorCode::InvalidDimension, "fixed point needs m-1 blocks");
  const double dp = p.delta / static_cast<double>(m - 1);
  Vec avg = Vec::Zero(prob.range_dim());
  for (const auto& v : x_bar) avg += v;
  avg /= static_cast<double>(m - 1);
  KktPoint out;
  out.u.resize(static_cast<std::size_t>(m));
  auto last = static_cast<std::size_t>(m - 1);
  Vec arg = avg - dp * prob.b;
  out.u[last] = subproblem_solve(prob.f[last], prob.L[last], arg, dp);
  out.y = arg + dp * prob.L[last].apply(out.u[last]);
  for (int i = 0; i + 1 < m; ++i) {
    auto j = static_cast<std::size_t>(i);
    out.u[j] = subproblem_solve(prob.f[j], prob.L[j], (1.0 - p.mu) * x_bar[j] + p.mu * out.y, p.gamma);
  }
  return out;
}

}  // namespace adrsplit
