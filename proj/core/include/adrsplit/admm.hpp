#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <vector>

#include "adrsplit/functions.hpp"
#include "adrsplit/linalg.hpp"
#include "adrsplit/splitting.hpp"

namespace adrsplit {

// min sum_i f_i(u_i)  s.t.  sum_i L_i u_i = b
struct BlockProblem {
  std::vector<ProxFunction> f;
  std::vector<LinearMap> L;
  Vec b;
  std::vector<double> rho;

  BlockProblem() = default;
  // rho defaults to f_i.rho() for i < m and min(f_m.rho(), 0) for the last block.
  BlockProblem(std::vector<ProxFunction> f, std::vector<LinearMap> L, Vec b,
               std::optional<std::vector<double>> rho = std::nullopt);

  int m() const { return static_cast<int>(f.size()); }
  Index range_dim() const { return b.size(); }
  Vec constraint_residual(const Blocks& u) const;  // sum L_i u_i - b
};

std::vector<double> comonotone_moduli(const BlockProblem& prob);

// A_i = (-L_i) o (subdiff f_i)^{-1} o (-L_i^T) for i < m; the last one shifted by b.
std::vector<ResolventOp> kkt_operators(const BlockProblem& prob);

enum class AdmmAlgorithm { General, Special, GaussSeidel };
const char* algorithm_name(AdmmAlgorithm a);

struct AdmmRecord {
  int iter = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double quality = 0.0;
  double elapsed_ms = 0.0;
};

struct AdmmOptions {
  int max_iter = 10000;
  double eps = 1e-4;
  bool record_iterates = false;
  bool timing = true;
  // Keep iterating after the residual drops below eps.
  bool run_to_max = false;
  double divergence_bound = 1e12;
  std::function<double(const Blocks&)> quality;
  // Update order of the parallel blocks i < m (special algorithm only).
  std::vector<int> block_order;
  // Coefficient in front of the Gauss-Seidel dual residual.
  std::optional<double> gs_residual_coef;
};

struct AdmmResult {
  Blocks u;
  Vec y;
  Blocks s;  // general algorithm state
  Blocks z;  // general algorithm, last z_i
  int iterations = 0;
  bool converged = false;
  int converged_at = -1;
  double final_residual = 0.0;
  std::vector<AdmmRecord> history;
  std::vector<Blocks> u_trace;  // u^0 .. u^K when recording
  std::vector<Vec> y_trace;
};

struct AdmmInit {
  Blocks u;
  Vec y;
  Blocks s;
};

// Zero blocks of the right sizes.
AdmmInit zero_init(const BlockProblem& prob);

// Maps a special-algorithm start (u^0, y^0) to the s^0 that makes the general
// algorithm with kappa = (lambda-1)/lambda produce the same sequence.
Blocks general_s_from_special(const BlockProblem& prob, const AdrParams& p, const Blocks& u0);

AdmmResult admm_general_run(const BlockProblem& prob, const AdrParams& p, const AdmmInit& init,
                            const AdmmOptions& opts = {});
AdmmResult admm_special_run(const BlockProblem& prob, double gamma, double delta,
                            const AdmmInit& init, const AdmmOptions& opts = {});
AdmmResult gs_admm_run(const BlockProblem& prob, double gamma_prime, const AdmmInit& init,
                       const AdmmOptions& opts = {});

// Dual residual blocks s_i (i < m) for each algorithm.
Blocks special_dual_residuals(const BlockProblem& prob, double gamma, double delta,
                              const Blocks& u_prev, const Blocks& u);
Blocks general_dual_residuals(const BlockProblem& prob, const Blocks& z, const Vec& y);
Blocks gs_dual_residuals(const BlockProblem& prob, double coef, const Blocks& u_prev,
                         const Blocks& u);

struct ResidualInput {
  AdmmAlgorithm algorithm = AdmmAlgorithm::Special;
  Blocks u_prev;
  Blocks u;
  Blocks z;  // general only
  Vec y;     // general only
  double gamma = 0.0;
  double delta = 0.0;
  double gs_coef = 0.0;
};

struct ResidualParts {
  double primal = 0.0;
  double dual = 0.0;
  double value() const { return std::max(primal, dual); }
};

ResidualParts residual_parts(const BlockProblem& prob, const ResidualInput& in);
double stopping_residual(const BlockProblem& prob, const ResidualInput& in);

double kkt_residual(const BlockProblem& prob, const Blocks& u, const Vec& y);

struct KktPoint {
  Blocks u;
  Vec y;
};

// x_bar is a fixed point of the G-first product-space iteration.
KktPoint extract_kkt_from_fixed_point(const BlockProblem& prob, const Blocks& x_bar,
                                      const AdrParams& p);

}  // namespace adrsplit
