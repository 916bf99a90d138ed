#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adrsplit/linalg.hpp"
#include "adrsplit/operators.hpp"

namespace adrsplit {

// (gamma, delta, lambda, mu, kappa) with (lambda-1)(mu-1) = 1 and delta = gamma(lambda-1).
struct AdrParams {
  double gamma = 1.0;
  double delta = 1.0;
  double lambda = 2.0;
  double mu = 2.0;
  double kappa = 0.5;
};

AdrParams make_params(double gamma, double lambda, double kappa);
// lambda = 1 + delta/gamma.
AdrParams make_params_from_delta(double gamma, double delta, double kappa);
// Throws InvalidParameter if the coupling identities fail (1e-12) or ranges are wrong.
void check_params(const AdrParams& p);
AdrParams dual_params(const AdrParams& p);

enum class Regime { C1, C2, C3, TwoOpEqual, TwoOpStrict, Invalid };
const char* regime_name(Regime r);

struct RegimeCertificate {
  Regime condition = Regime::Invalid;
  double kappa_star = 0.0;
  std::vector<double> kappa_i_star;
  std::optional<Vec> theta;
  bool strong_shadow = false;
  std::vector<std::string> diagnostics;

  bool valid() const { return condition != Regime::Invalid; }
  std::string describe() const;
};

RegimeCertificate certify_two_op(double alpha, double beta, const AdrParams& p);

enum class ThetaStrategy { Uniform, Feasible };

// Empty string if theta lies in the admissible set, otherwise the failing condition.
std::string theta_violation(const std::vector<double>& sigma, const Vec& theta);
Vec default_theta(const std::vector<double>& sigma, ThetaStrategy strategy);
std::vector<double> kappa_i_star(const std::vector<double>& sigma, const AdrParams& p,
                                 const Vec& theta);
RegimeCertificate certify_multi(const std::vector<double>& sigma, const AdrParams& p,
                                const std::optional<Vec>& theta = std::nullopt);

struct RunOptions {
  int max_iter = 100000;
  double eps = 1e-10;
  bool record_iterates = false;
  double divergence_bound = 1e12;
  // Skip the certificate check in the m-operator runs.
  bool force = false;
};

struct AdrTrace {
  std::vector<Vec> x;  // x^0 .. x^K when recording
  std::vector<Vec> y;
  std::vector<Vec> z;
  std::vector<double> step_norms;  // ||x^{k+1} - x^k||
  Vec x_final, y_final, z_final;
  int iterations = 0;
  bool converged = false;
};

AdrTrace adr_run(const ResolventOp& a, const ResolventOp& b, const AdrParams& p, const Vec& x0,
                 const RunOptions& opts = {});

struct OperatorPair {
  ResolventOp a;
  ResolventOp b;
};

// A' = -A^{-1} o (-Id), B' = B^{-1}, evaluated through the primal resolvents.
OperatorPair dual_operators(const ResolventOp& a, const ResolventOp& b);

// Runs primal and dual iterations side by side (u^0 = -x^0/gamma) and returns
// the largest violation of the iterate correspondence over k <= iters.
double primal_dual_replay(const ResolventOp& a, const ResolventOp& b, const AdrParams& p,
                          const Vec& x0, int iters);

using Blocks = std::vector<Vec>;

struct ProductOps {
  int m = 0;
  std::function<Blocks(const Blocks&)> jf;  // J_{gamma F}
  std::function<Blocks(const Blocks&)> jg;  // J_{delta G}
};

ProductOps build_product_ops(const std::vector<ResolventOp>& ops, double gamma, double delta);

struct MultiTrace {
  std::vector<Blocks> x, y, z;
  std::vector<double> step_norms;
  std::vector<double> elapsed_ms;
  Blocks x_final, y_final, z_final;
  Vec shadow;
  int iterations = 0;
  bool converged = false;
  RegimeCertificate certificate;
};

MultiTrace multi_adr_run(const std::vector<ResolventOp>& ops, const AdrParams& p,
                         const Blocks& x0, const RunOptions& opts = {});
// G resolvent first, step weight kappa*lambda.
MultiTrace multi_adr_run_switched(const std::vector<ResolventOp>& ops, const AdrParams& p,
                                  const Blocks& x0, const RunOptions& opts = {});

// Tail check on sqrt(k) * step_k over k in [K/2, K]: maxima over consecutive
// windows may not grow by more than the slack factor.
bool tail_rate_ok(const std::vector<double>& step_norms, int windows = 5, double slack = 0.1);

double blocks_norm(const Blocks& b);

}  // namespace adrsplit
