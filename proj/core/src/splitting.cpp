#include "adrsplit/splitting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "adrsplit/error.hpp"

namespace adrsplit {

namespace {

bool close(double a, double b, double rel = 1e-12) {
  return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

[[noreturn]] void rethrow_at(const Error& e, int k) {
  throw Error(e.code(), "iteration " + std::to_string(k) + ": " + e.what());
}

void check_divergence(double norm, double bound, int k) {
  if (!std::isfinite(norm) || norm > bound)
    throw Error(ErrorCode::Divergence,
                "iterate norm " + fmt(norm) + " exceeded " + fmt(bound) + " at iteration " +
                    std::to_string(k));
}

Blocks axpby(double a, const Blocks& x, double b, const Blocks& y) {
  Blocks out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

AdrParams make_params(double gamma, double lambda, double kappa) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw Error(ErrorCode::InvalidParameter, "gamma must be positive");
  if (!(lambda > 1.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::InvalidParameter, "lambda must exceed 1");
  if (!(kappa > 0.0) || kappa > 1.0)
    throw Error(ErrorCode::InvalidParameter, "kappa must lie in (0, 1]");
  AdrParams p;
  p.gamma = gamma;
  p.lambda = lambda;
  p.kappa = kappa;
  p.delta = gamma * (lambda - 1.0);
  p.mu = lambda / (lambda - 1.0);
  return p;
}

AdrParams make_params_from_delta(double gamma, double delta, double kappa) {
  if (!(gamma > 0.0) || !(delta > 0.0))
    throw Error(ErrorCode::InvalidParameter, "gamma and delta must be positive");
  AdrParams p = make_params(gamma, 1.0 + delta / gamma, kappa);
  p.delta = delta;
  p.mu = 1.0 + gamma / delta;
  return p;
}

void check_params(const AdrParams& p) {
  if (!(p.gamma > 0.0) || !(p.delta > 0.0))
    throw Error(ErrorCode::InvalidParameter, "gamma and delta must be positive");
  if (!(p.lambda > 1.0) || !(p.mu > 1.0))
    throw Error(ErrorCode::InvalidParameter, "lambda and mu must exceed 1");
  if (!(p.kappa > 0.0) || p.kappa > 1.0)
    throw Error(ErrorCode::InvalidParameter, "kappa must lie in (0, 1]");
  if (!close((p.lambda - 1.0) * (p.mu - 1.0), 1.0))
    throw Error(ErrorCode::InvalidParameter, "(lambda-1)(mu-1) != 1");
  if (!close(p.delta, p.gamma * (p.lambda - 1.0)))
    throw Error(ErrorCode::InvalidParameter, "delta != gamma(lambda-1)");
}

AdrParams dual_params(const AdrParams& p) {
  AdrParams d;
  d.gamma = 1.0 / p.gamma;
  d.delta = 1.0 / p.delta;
  d.lambda = p.lambda * p.gamma / p.delta;
  d.mu = p.mu * p.delta / p.gamma;
  d.kappa = p.kappa;
  return d;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::C1: return "C1";
    case Regime::C2: return "C2";
    case Regime::C3: return "C3";
    case Regime::TwoOpEqual: return "TwoOpEqual";
    case Regime::TwoOpStrict: return "TwoOpStrict";
    case Regime::Invalid: return "INVALID";
  }
  return "?";
}

std::string RegimeCertificate::describe() const {
  std::ostringstream os;
  os.precision(12);
  os << "condition: " << regime_name(condition) << "\n";
  os << "kappa_star: " << kappa_star << "\n";
  if (!kappa_i_star.empty()) {
    os << "kappa_i_star:";
    for (double v : kappa_i_star) os << " " << v;
    os << "\n";
  }
  if (theta) {
    os << "theta:";
    for (Index i = 0; i < theta->size(); ++i) os << " " << (*theta)(i);
    os << "\n";
  }
  os << "strong_shadow: " << (strong_shadow ? "yes" : "no") << "\n";
  for (const auto& d : diagnostics) os << "note: " << d << "\n";
  return os.str();
}

RegimeCertificate certify_two_op(double alpha, double beta, const AdrParams& p) {
  check_params(p);
  if (alpha + beta < -1e-12)
    throw Error(ErrorCode::OutOfTheory, "alpha + beta < 0 is outside the two-operator theory");
  RegimeCertificate c;
  const double g = p.gamma, d = p.delta;
  bool base = false;
  if (std::abs(alpha + beta) <= 1e-12) {
    if (close(d, g + 2.0 * alpha)) {
      c.kappa_star = 1.0;
      base = true;
      c.condition = Regime::TwoOpEqual;
    } else {
      c.diagnostics.push_back("alpha+beta=0 requires delta = gamma + 2 alpha (delta=" + fmt(d) +
                              ", gamma+2alpha=" + fmt(g + 2.0 * alpha) + ")");
    }
  } else {
    double lhs = (g + d) * (g + d);
    double rhs = 4.0 * (g + alpha) * (d + beta);
    c.kappa_star = (rhs - lhs) / (2.0 * (g + d) * (alpha + beta));
    if (lhs < rhs) {
      base = true;
      c.condition = Regime::TwoOpStrict;
    } else {
      c.diagnostics.push_back("(gamma+delta)^2 = " + fmt(lhs) + " is not below 4(gamma+alpha)(delta+beta) = " +
                              fmt(rhs));
    }
  }
  if (base && !(c.kappa_star > 0.0)) {
    c.diagnostics.push_back("kappa* = " + fmt(c.kappa_star) + " is not positive");
    base = false;
  }
  if (base && !(p.kappa < c.kappa_star)) {
    c.diagnostics.push_back("kappa = " + fmt(p.kappa) + " is not below kappa* = " + fmt(c.kappa_star));
    base = false;
  }
  if (!base) {
    c.condition = Regime::Invalid;
    return c;
  }
  bool equal_steps = close(g, d) && close(p.lambda, 2.0) && close(p.mu, 2.0);
  c.strong_shadow = p.kappa < 1.0 && ((g + 2.0 * alpha > 0.0 && c.kappa_star >= 1.0) ||
                                      (equal_steps && c.kappa_star > p.kappa));
  return c;
}

std::string theta_violation(const std::vector<double>& sigma, const Vec& theta) {
  const std::size_t m = sigma.size();
  if (m < 2) return "need at least two operators";
  if (static_cast<std::size_t>(theta.size()) != m - 1)
    return "theta must have m-1 = " + std::to_string(m - 1) + " entries";
  double inv = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    double t = theta(static_cast<Index>(i));
    if (!(t > 0.0)) return "theta_" + std::to_string(i + 1) + " must be positive";
    if (!(sigma[i] + sigma[m - 1] * t > 0.0))
      return "sigma_" + std::to_string(i + 1) + " + sigma_m*theta_" + std::to_string(i + 1) +
             " = " + fmt(sigma[i] + sigma[m - 1] * t) + " is not positive";
    inv += 1.0 / t;
  }
  if (std::abs(inv - 1.0) > 1e-12) return "sum of 1/theta_i = " + fmt(inv) + " differs from 1";
  return {};
}

Vec default_theta(const std::vector<double>& sigma, ThetaStrategy strategy) {
  const std::size_t m = sigma.size();
  if (m < 2) throw Error(ErrorCode::InvalidParameter, "need at least two operators");
  const double sm = sigma[m - 1];
  Vec theta(static_cast<Index>(m - 1));
  if (strategy == ThetaStrategy::Uniform) {
    theta.setConstant(static_cast<double>(m - 1));
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (!(sigma[i] + static_cast<double>(m - 1) * sm > 0.0))
        throw Error(ErrorCode::Infeasible, "uniform theta needs sigma_" + std::to_string(i + 1) +
                                               " + (m-1) sigma_m > 0");
    }
    return theta;
  }
  for (std::size_t i = 0; i + 1 < m; ++i)
    if (!(sigma[i] > 0.0))
      throw Error(ErrorCode::Infeasible, "feasible theta needs sigma_" + std::to_string(i + 1) + " > 0");
  if (!(sm < 0.0)) throw Error(ErrorCode::Infeasible, "feasible theta needs sigma_m < 0");
  double inv = 0.0;
  for (double s : sigma) inv += 1.0 / s;
  if (!(inv < 0.0)) throw Error(ErrorCode::Infeasible, "feasible theta needs sum of 1/sigma_i < 0");
  // weights d_i = 1/theta_i must exceed l_i = -sigma_m/sigma_i and sum to one
  Vec l(static_cast<Index>(m - 1));
  for (std::size_t i = 0; i + 1 < m; ++i) l(static_cast<Index>(i)) = -sm / sigma[i];
  double slack = (1.0 - l.sum()) / static_cast<double>(m - 1);
  for (Index i = 0; i < l.size(); ++i) theta(i) = 1.0 / (l(i) + slack);
  std::string why = theta_violation(sigma, theta);
  if (!why.empty()) throw Error(ErrorCode::Infeasible, why);
  return theta;
}

std::vector<double> kappa_i_star(const std::vector<double>& sigma, const AdrParams& p,
                                 const Vec& theta) {
  const std::size_t m = sigma.size();
  std::vector<double> out(m - 1);
  const double g = p.gamma, d = p.delta, sm = sigma[m - 1];
  for (std::size_t i = 0; i + 1 < m; ++i) {
    double t = theta(static_cast<Index>(i));
    double num = 4.0 * (g + sigma[i]) * (d + sm * t) - (g + d) * (g + d);
    out[i] = num / (2.0 * (g + d) * (sigma[i] + sm * t));
  }
  return out;
}

RegimeCertificate certify_multi(const std::vector<double>& sigma, const AdrParams& p,
                                const std::optional<Vec>& theta) {
  check_params(p);
  const std::size_t m = sigma.size();
  if (m < 2) throw Error(ErrorCode::InvalidParameter, "need at least two operators");
  RegimeCertificate c;
  const double g = p.gamma, d = p.delta, sm = sigma[m - 1];
  const double smin = *std::min_element(sigma.begin(), sigma.end() - 1);
  const double beta = static_cast<double>(m - 1) * sm;
  const bool tie = std::abs(smin + beta) <= 1e-12;

  // C1
  if (tie && smin >= -1e-12) {
    if (close(d, g + 2.0 * smin)) {
      c.kappa_star = 1.0;
      if (p.kappa < 1.0) {
        c.condition = Regime::C1;
        return c;
      }
      c.diagnostics.push_back("C1: kappa must be below 1");
    } else {
      c.diagnostics.push_back("C1: delta = " + fmt(d) + " differs from gamma + 2 min sigma = " +
                              fmt(g + 2.0 * smin));
    }
  }

  // C3
  bool c3_pre = sm < 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) c3_pre = c3_pre && sigma[i] > 0.0;
  double inv = 0.0;
  for (double s : sigma) inv += 1.0 / s;
  c3_pre = c3_pre && inv < 0.0;
  if (c3_pre) {
    std::optional<Vec> th = theta;
    if (!th) {
      try {
        th = default_theta(sigma, ThetaStrategy::Uniform);
      } catch (const Error&) {
        th = default_theta(sigma, ThetaStrategy::Feasible);
      }
    }
    std::string why = theta_violation(sigma, *th);
    if (!why.empty()) {
      c.diagnostics.push_back("C3: theta outside the admissible set: " + why);
    } else {
      auto ks = kappa_i_star(sigma, p, *th);
      double kmin = *std::min_element(ks.begin(), ks.end());
      bool equal_steps = close(g, d) && close(p.lambda, 2.0) && close(p.mu, 2.0);
      bool kappa_ok = p.kappa > 0.0 && p.kappa < 1.0;
      if (kappa_ok && (kmin >= 1.0 || (equal_steps && kmin > p.kappa))) {
        c.condition = Regime::C3;
        c.kappa_star = 1.0;
        c.kappa_i_star = ks;
        c.theta = th;
        c.strong_shadow = true;
        return c;
      }
      c.kappa_i_star = ks;
      c.theta = th;
      if (!kappa_ok) c.diagnostics.push_back("C3: kappa must lie in (0,1)");
      c.diagnostics.push_back("C3: min kappa_i* = " + fmt(kmin) +
                              (equal_steps ? " does not exceed kappa" : " is below 1 and stepsizes are not equal"));
    }
  } else if (sm < 0.0) {
    c.diagnostics.push_back("C3: needs sigma_i > 0 (i<m), sigma_m < 0 and sum 1/sigma_i < 0");
  }

  // C2
  if (!tie && smin > -beta && -beta >= 0.0) {
    double lhs = (g + d) * (g + d);
    double rhs = 4.0 * (g + smin) * (d + beta);
    double ks = (rhs - lhs) / (2.0 * (g + d) * (smin + beta));
    if (lhs < rhs && ks > 0.0 && p.kappa < ks) {
      c.condition = Regime::C2;
      c.kappa_star = ks;
      c.kappa_i_star.clear();
      c.theta.reset();
      c.strong_shadow = sm == 0.0;
      return c;
    }
    if (!(lhs < rhs)) {
      c.diagnostics.push_back("C2: (gamma+delta)^2 = " + fmt(lhs) +
                              " is not below 4(gamma+min sigma)(delta+(m-1)sigma_m) = " + fmt(rhs));
    } else {
      c.diagnostics.push_back("C2: kappa = " + fmt(p.kappa) + " is not below kappa* = " + fmt(ks));
    }
    c.kappa_star = ks;
  } else if (!tie) {
    c.diagnostics.push_back("C2: needs min sigma_i > -(m-1)sigma_m >= 0");
  }
  c.condition = Regime::Invalid;
  return c;
}

AdrTrace adr_run(const ResolventOp& a, const ResolventOp& b, const AdrParams& p, const Vec& x0,
                 const RunOptions& opts) {
  check_params(p);
  if (a.dim() != b.dim() || x0.size() != a.dim())
    throw Error(ErrorCode::InvalidDimension, "adr_run: operator/start dimensions differ");
  AdrTrace tr;
  Vec x = x0;
  if (opts.record_iterates) tr.x.push_back(x);
  for (int k = 0; k < opts.max_iter; ++k) {
    Vec y, z;
    try {
      y = a.resolve(p.gamma, x);
      z = b.resolve(p.delta, (1.0 - p.lambda) * x + p.lambda * y);
    } catch (const Error& e) {
      rethrow_at(e, k);
    }
    Vec xn = x + p.kappa * p.mu * (z - y);
    double step = (xn - x).norm();
    tr.step_norms.push_back(step);
    if (opts.record_iterates) {
      tr.y.push_back(y);
      tr.z.push_back(z);
      tr.x.push_back(xn);
    }
    double xnorm = x.norm();
    tr.iterations = k + 1;
    x = std::move(xn);
    check_divergence(x.norm(), opts.divergence_bound, k + 1);
    if (step <= opts.eps * (1.0 + xnorm)) {
      tr.converged = true;
      break;
    }
  }
  tr.x_final = x;
  tr.y_final = a.resolve(p.gamma, x);
  tr.z_final = b.resolve(p.delta, (1.0 - p.lambda) * x + p.lambda * tr.y_final);
  return tr;
}

OperatorPair dual_operators(const ResolventOp& a, const ResolventOp& b) {
  std::optional<double> rho_a, rho_b;
  if (a.has_sigma()) rho_a = a.sigma();
  if (b.has_sigma()) rho_b = b.sigma();
  ResolventOp ad(
      a.dim(), [a](double g, const Vec& u) -> Vec { return u + g * a.resolve(1.0 / g, -u / g); },
      ResolventOp::kUnknownSigma, rho_a);
  ResolventOp bd(
      b.dim(), [b](double g, const Vec& u) { return resolvent_of_inverse(b, g, u); },
      ResolventOp::kUnknownSigma, rho_b);
  return {ad, bd};
}

double primal_dual_replay(const ResolventOp& a, const ResolventOp& b, const AdrParams& p,
                          const Vec& x0, int iters) {
  check_params(p);
  const AdrParams q = dual_params(p);
  OperatorPair dual = dual_operators(a, b);
  Vec x = x0;
  Vec u = -x0 / p.gamma;
  double worst = (x + u / q.gamma).norm();
  for (int k = 0; k < iters; ++k) {
    Vec y = a.resolve(p.gamma, x);
    Vec z = b.resolve(p.delta, (1.0 - p.lambda) * x + p.lambda * y);
    Vec v = dual.a.resolve(q.gamma, u);
    Vec w = dual.b.resolve(q.delta, (1.0 - q.lambda) * u + q.lambda * v);
    worst = std::max(worst, (y - (v - u) / q.gamma).norm());
    worst = std::max(worst, (z - ((1.0 - q.lambda) * u + q.lambda * v - w) / q.delta).norm());
    x = x + p.kappa * p.mu * (z - y);
    u = u + q.kappa * q.mu * (w - v);
    worst = std::max(worst, (x + u / q.gamma).norm());
  }
  return worst;
}

ProductOps build_product_ops(const std::vector<ResolventOp>& ops, double gamma, double delta) {
  const int m = static_cast<int>(ops.size());
  if (m < 2) throw Error(ErrorCode::InvalidParameter, "product space needs m >= 2 operators");
  const Index n = ops[0].dim();
  for (const auto& op : ops)
    if (op.dim() != n) throw Error(ErrorCode::InvalidDimension, "operators act on different spaces");
  const double dm = delta / static_cast<double>(m - 1);
  for (int i = 0; i + 1 < m; ++i)
    if (!ops[static_cast<std::size_t>(i)].valid_gamma(gamma))
      throw Error(ErrorCode::InvalidParameter,
                  "gamma outside the resolvent region of operator " + std::to_string(i + 1));
  if (!ops.back().valid_gamma(dm))
    throw Error(ErrorCode::InvalidParameter, "delta/(m-1) outside the resolvent region of operator m");
  ProductOps out;
  out.m = m;
  out.jf = [ops, gamma, m](const Blocks& x) {
    Blocks y(static_cast<std::size_t>(m - 1));
    for (int i = 0; i + 1 < m; ++i)
      y[static_cast<std::size_t>(i)] = ops[static_cast<std::size_t>(i)].resolve(gamma, x[static_cast<std::size_t>(i)]);
    return y;
  };
  ResolventOp last = ops.back();
  out.jg = [last, dm, m](const Blocks& x) {
    Vec avg = x[0];
    for (int i = 1; i + 1 < m; ++i) avg += x[static_cast<std::size_t>(i)];
    avg /= static_cast<double>(m - 1);
    Vec r = last.resolve(dm, avg);
    return Blocks(static_cast<std::size_t>(m - 1), r);
  };
  return out;
}

double blocks_norm(const Blocks& b) {
  double s = 0.0;
  for (const auto& v : b) s += v.squaredNorm();
  return std::sqrt(s);
}

namespace {

RegimeCertificate certify_ops(const std::vector<ResolventOp>& ops, const AdrParams& p, bool force) {
  RegimeCertificate cert;
  bool known = std::all_of(ops.begin(), ops.end(), [](const ResolventOp& o) { return o.has_sigma(); });
  if (known) {
    std::vector<double> sigma;
    for (const auto& o : ops) sigma.push_back(o.sigma());
    cert = certify_multi(sigma, p);
  } else {
    cert.diagnostics.push_back("comonotonicity moduli not supplied for every operator");
  }
  if (!cert.valid() && !force)
    throw Error(ErrorCode::Certificate, "parameters are not certified:\n" + cert.describe());
  return cert;
}

template <class Step>
MultiTrace run_multi(const std::vector<ResolventOp>& ops, const AdrParams& p, const Blocks& x0,
                     const RunOptions& opts, Step&& step) {
  check_params(p);
  const std::size_t m = ops.size();
  if (x0.size() + 1 != m)
    throw Error(ErrorCode::InvalidDimension, "start point needs m-1 blocks");
  MultiTrace tr;
  tr.certificate = certify_ops(ops, p, opts.force);
  auto t0 = std::chrono::steady_clock::now();
  Blocks x = x0;
  if (opts.record_iterates) tr.x.push_back(x);
  for (int k = 0; k < opts.max_iter; ++k) {
    Blocks y, z, xn;
    try {
      step(x, y, z, xn);
    } catch (const Error& e) {
      rethrow_at(e, k);
    }
    double xnorm = blocks_norm(x);
    double sn = blocks_norm(axpby(1.0, xn, -1.0, x));
    tr.step_norms.push_back(sn);
    tr.elapsed_ms.push_back(elapsed_ms(t0));
    if (opts.record_iterates) {
      tr.y.push_back(y);
      tr.z.push_back(z);
      tr.x.push_back(xn);
    }
    tr.iterations = k + 1;
    x = std::move(xn);
    check_divergence(blocks_norm(x), opts.divergence_bound, k + 1);
    if (sn <= opts.eps * (1.0 + xnorm)) {
      tr.converged = true;
      break;
    }
  }
  tr.x_final = x;
  return tr;
}

}  // namespace

MultiTrace multi_adr_run(const std::vector<ResolventOp>& ops, const AdrParams& p,
                         const Blocks& x0, const RunOptions& opts) {
  ProductOps prod = build_product_ops(ops, p.gamma, p.delta);
  auto step = [&](const Blocks& x, Blocks& y, Blocks& z, Blocks& xn) {
    y = prod.jf(x);
    z = prod.jg(axpby(1.0 - p.lambda, x, p.lambda, y));
    xn = axpby(1.0, x, p.kappa * p.mu, axpby(1.0, z, -1.0, y));
  };
  MultiTrace tr = run_multi(ops, p, x0, opts, step);
  tr.y_final = prod.jf(tr.x_final);
  tr.z_final = prod.jg(axpby(1.0 - p.lambda, tr.x_final, p.lambda, tr.y_final));
  tr.shadow = Vec::Zero(ops[0].dim());
  for (const auto& v : tr.y_final) tr.shadow += v;
  tr.shadow /= static_cast<double>(tr.y_final.size());
  return tr;
}

MultiTrace multi_adr_run_switched(const std::vector<ResolventOp>& ops, const AdrParams& p,
                                  const Blocks& x0, const RunOptions& opts) {
  ProductOps prod = build_product_ops(ops, p.gamma, p.delta);
  auto step = [&](const Blocks& x, Blocks& y, Blocks& z, Blocks& xn) {
    y = prod.jg(x);
    z = prod.jf(axpby(1.0 - p.mu, x, p.mu, y));
    xn = axpby(1.0, x, p.kappa * p.lambda, axpby(1.0, z, -1.0, y));
  };
  MultiTrace tr = run_multi(ops, p, x0, opts, step);
  tr.y_final = prod.jg(tr.x_final);
  tr.z_final = prod.jf(axpby(1.0 - p.mu, tr.x_final, p.mu, tr.y_final));
  tr.shadow = tr.y_final[0];
  return tr;
}

bool tail_rate_ok(const std::vector<double>& step_norms, int windows, double slack) {
  const std::size_t k_end = step_norms.size();
  const std::size_t k_begin = std::max<std::size_t>(1, k_end / 2);
  if (k_end <= k_begin) return true;
  const std::size_t len = k_end - k_begin;
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(windows), len));
  double prev = -1.0;
  for (std::size_t j = 0; j < w; ++j) {
    std::size_t lo = k_begin + j * len / w;
    std::size_t hi = k_begin + (j + 1) * len / w;
    double mx = 0.0;
    for (std::size_t k = lo; k < hi; ++k)
      mx = std::max(mx, std::sqrt(static_cast<double>(k)) * step_norms[k]);
    if (prev >= 0.0 && mx > (1.0 + slack) * prev) return false;
    prev = mx;
  }
  return true;
}

}  // namespace adrsplit
