#include "adrsplit/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

#include "adrsplit/error.hpp"

namespace adrsplit {

namespace {

const double kPositions[] = {0.1, 0.13, 0.15, 0.23, 0.25, 0.4, 0.44, 0.65, 0.76, 0.78};
const double kHeights[] = {4, -5, 3, -4, 5, -4, 4, -2, 4, -5};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Vec concat_fit_blocks(const Blocks& u, int N) {
  Index total = 0;
  for (int i = 0; i < N; ++i) total += u[static_cast<std::size_t>(i)].size();
  Vec out(total);
  Index at = 0;
  for (int i = 0; i < N; ++i) {
    const Vec& b = u[static_cast<std::size_t>(i)];
    out.segment(at, b.size()) = b;
    at += b.size();
  }
  return out;
}

}  // namespace

const char* stepsize_mode_name(StepsizeMode m) {
  return m == StepsizeMode::Equal ? "equal" : "unequal";
}

void ExperimentConfig::validate() const {
  if (N < 1) throw Error(ErrorCode::Config, "N must be >= 1");
  if (n < N + 1) throw Error(ErrorCode::Config, "n must be at least N+1");
  if (!(omega > 0.0)) throw Error(ErrorCode::Config, "omega must be positive");
  if (!(eps > 0.0)) throw Error(ErrorCode::Config, "eps must be positive");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::Config, "noise_sigma must be >= 0");
  if (!(fit_weight >= 1.0 / N)) throw Error(ErrorCode::Config, "fit_weight must be at least 1/N");
  if (max_iter < 0) throw Error(ErrorCode::Config, "max_iter must be >= 0");
  if (stepsize_mode == StepsizeMode::Unequal && !(eta > 1.0))
    throw Error(ErrorCode::Config, "eta must exceed 1");
  if (seeds.empty()) throw Error(ErrorCode::Config, "at least one seed is required");
  if (algorithms.empty()) throw Error(ErrorCode::Config, "at least one algorithm is required");
}

Vec standard_normals(Index count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto uniform = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  Vec out(count);
  for (Index i = 0; i < count; i += 2) {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    out(i) = r * std::cos(a);
    if (i + 1 < count) out(i + 1) = r * std::sin(a);
  }
  return out;
}

Signal gen_signal(Index n, std::uint64_t seed, double noise_sigma) {
  if (n < 2) throw Error(ErrorCode::InvalidDimension, "signal length must be >= 2");
  Signal s;
  s.grid.resize(n);
  s.clean = Vec::Zero(n);
  for (Index j = 0; j < n; ++j) {
    double x = static_cast<double>(j) / static_cast<double>(n - 1);
    s.grid(j) = x;
    for (std::size_t k = 0; k < std::size(kPositions); ++k)
      if (x >= kPositions[k]) s.clean(j) += kHeights[k];
  }
  s.noisy = s.clean;
  if (noise_sigma != 0.0) s.noisy += noise_sigma * standard_normals(n, seed);
  return s;
}

DenoiseLayout make_denoise_layout(Index n, int N) {
  if (N < 1 || n < N + 1) throw Error(ErrorCode::InvalidDimension, "need n >= N+1 and N >= 1");
  DenoiseLayout lay;
  lay.n = n;
  lay.N = N;
  lay.D = difference_matrix(n);
  Index base = n / N, extra = n % N, at = 0;
  for (int i = 0; i < N; ++i) {
    Index sz = base + (i < extra ? 1 : 0);
    lay.offsets.push_back(at);
    lay.sizes.push_back(sz);
    lay.blocks.push_back(column_block(lay.D, at, sz));
    lay.block_norms.push_back(lay.blocks.back().norm());
    at += sz;
  }
  return lay;
}

BlockProblem build_denoise_problem(const DenoiseLayout& layout, const Vec& noisy, double omega,
                                   double tau, double fit_weight) {
  if (noisy.size() != layout.n) throw Error(ErrorCode::InvalidDimension, "signal length mismatch");
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidParameter, "tau must be positive");
  const int N = layout.N;
  const double rho_fit = 1.0 / N;
  if (!(fit_weight >= rho_fit))
    throw Error(ErrorCode::InvalidParameter, "fit_weight must be at least 1/N");
  std::vector<ProxFunction> f;
  std::vector<LinearMap> L;
  for (int i = 0; i < N; ++i) {
    auto k = static_cast<std::size_t>(i);
    f.push_back(ProxFunction::quadratic(fit_weight, noisy.segment(layout.offsets[k], layout.sizes[k])));
    L.push_back(layout.blocks[k]);
  }
  f.push_back(ProxFunction::mcp(layout.n - 1, omega, tau));
  L.push_back(LinearMap::scaled_identity(layout.n - 1, -1.0));
  std::vector<double> rho(static_cast<std::size_t>(N), rho_fit);
  rho.push_back(-omega / tau);
  return BlockProblem(std::move(f), std::move(L), Vec::Zero(layout.n - 1), std::move(rho));
}

BlockProblem build_denoise_problem(const Vec& noisy, int N, double omega, double tau,
                                   double fit_weight) {
  return build_denoise_problem(make_denoise_layout(noisy.size(), N), noisy, omega, tau, fit_weight);
}

double denoise_alpha(int N, const std::vector<double>& block_norms) {
  double worst = 0.0;
  for (double v : block_norms) worst = std::max(worst, v);
  if (!(worst > 0.0)) throw Error(ErrorCode::InvalidParameter, "difference blocks must be nonzero");
  return 1.0 / (static_cast<double>(N) * worst * worst);
}

double denoise_tau(int N, double omega, const std::vector<double>& block_norms) {
  return 1.01 * static_cast<double>(N) * omega / denoise_alpha(N, block_norms);
}

Stepsizes denoise_stepsizes(double alpha, double beta, StepsizeMode mode, double eta) {
  if (!(alpha > 0.0) || !(beta < 0.0))
    throw Error(ErrorCode::Infeasible, "stepsize formulas need alpha > 0 > beta");
  if (!(alpha + beta > 0.0)) throw Error(ErrorCode::Infeasible, "moduli infeasible: alpha + beta <= 0");
  Stepsizes s;
  if (mode == StepsizeMode::Unequal) {
    if (!(eta > 1.0)) throw Error(ErrorCode::InvalidParameter, "eta must exceed 1");
    s.gamma = (alpha - beta) / (eta - 1.0);
    s.delta = eta * s.gamma;
  } else {
    s.gamma = 1.01 * 2.0 * alpha * std::abs(beta) / (alpha + beta);
    s.delta = s.gamma;
  }
  return s;
}

double mae(const Vec& x, const Vec& phi) {
  if (x.size() != phi.size() || x.size() == 0)
    throw Error(ErrorCode::InvalidDimension, "mae needs equal, nonzero lengths");
  return (x - phi).cwiseAbs().mean();
}

DenoiseSetup prepare_denoise(const ExperimentConfig& cfg, const DenoiseLayout& layout,
                             std::uint64_t seed) {
  DenoiseSetup st;
  st.signal = gen_signal(cfg.n, seed, cfg.noise_sigma);
  st.alpha = denoise_alpha(cfg.N, layout.block_norms);
  st.tau = denoise_tau(cfg.N, cfg.omega, layout.block_norms);
  st.beta = -static_cast<double>(cfg.N) * cfg.omega / st.tau;
  st.problem = build_denoise_problem(layout, st.signal.noisy, cfg.omega, st.tau, cfg.fit_weight);
  st.sigma = comonotone_moduli(st.problem);
  st.steps = denoise_stepsizes(st.alpha, st.beta, cfg.stepsize_mode, cfg.eta);
  // the specialised algorithm runs at kappa = (lambda-1)/lambda
  double lambda = 1.0 + st.steps.delta / st.steps.gamma;
  st.params = make_params_from_delta(st.steps.gamma, st.steps.delta, (lambda - 1.0) / lambda);
  Vec theta = default_theta(st.sigma, ThetaStrategy::Uniform);
  st.certificate = certify_multi(st.sigma, st.params, theta);
  if (!st.certificate.valid())
    throw Error(ErrorCode::Certificate, "stepsizes are not certified:\n" + st.certificate.describe());
  return st;
}

RunReport run_denoise(const ExperimentConfig& cfg, const DenoiseSetup& setup, AdmmAlgorithm alg) {
  RunReport rep;
  rep.algorithm = alg;
  const BlockProblem& prob = setup.problem;
  const Vec& clean = setup.signal.clean;
  const int N = cfg.N;
  AdmmOptions opts;
  opts.max_iter = cfg.max_iter;
  opts.eps = cfg.eps;
  opts.timing = cfg.timing;
  opts.run_to_max = cfg.fixed_iterations;
  opts.quality = [&clean, N](const Blocks& u) { return mae(concat_fit_blocks(u, N), clean); };
  AdmmInit init = zero_init(prob);
  AdmmResult res;
  try {
    switch (alg) {
      case AdmmAlgorithm::Special:
        res = admm_special_run(prob, setup.steps.gamma, setup.steps.delta, init, opts);
        break;
      case AdmmAlgorithm::General:
        res = admm_general_run(prob, setup.params, init, opts);
        break;
      case AdmmAlgorithm::GaussSeidel:
        res = gs_admm_run(prob, setup.steps.gamma / static_cast<double>(prob.m() - 1), init, opts);
        break;
    }
  } catch (const Error& e) {
    rep.error = e.what();
    return rep;
  }
  rep.rows = std::move(res.history);
  rep.iterations = res.iterations;
  rep.converged = res.converged;
  rep.converged_at = res.converged_at;
  rep.final_residual = res.final_residual;
  rep.final_mae = rep.rows.empty() ? mae(concat_fit_blocks(res.u, N), clean) : rep.rows.back().quality;
  return rep;
}

std::vector<RunReport> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  DenoiseLayout layout = make_denoise_layout(cfg.n, cfg.N);
  struct Cell {
    std::size_t seed_index;
    AdmmAlgorithm alg;
  };
  std::vector<DenoiseSetup> setups;
  std::vector<std::string> setup_errors;
  for (auto seed : cfg.seeds) {
    try {
      setups.push_back(prepare_denoise(cfg, layout, seed));
      setup_errors.emplace_back();
    } catch (const Error& e) {
      setups.emplace_back();
      setup_errors.emplace_back(e.what());
    }
  }
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
    for (auto a : cfg.algorithms) cells.push_back({s, a});
  std::vector<RunReport> out(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      const Cell& cell = cells[c];
      if (!setup_errors[cell.seed_index].empty()) {
        out[c].algorithm = cell.alg;
        out[c].error = setup_errors[cell.seed_index];
      } else {
        out[c] = run_denoise(cfg, setups[cell.seed_index], cell.alg);
      }
      out[c].seed = cfg.seeds[cell.seed_index];
    }
  };
  unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs) : std::thread::hardware_concurrency();
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cells.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

SummaryStats mean_std(const std::vector<double>& v) {
  SummaryStats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
  return s;
}

void write_report_csv(std::ostream& os, const ExperimentConfig& cfg, const RunReport& r) {
  os << "# algorithm=" << algorithm_name(r.algorithm) << " seed=" << r.seed
     << " sampler=" << kSamplerName << " n=" << cfg.n << " N=" << cfg.N
     << " omega=" << num(cfg.omega) << " noise_sigma=" << num(cfg.noise_sigma)
     << " fit_weight=" << num(cfg.fit_weight)
     << " stepsize_mode=" << stepsize_mode_name(cfg.stepsize_mode) << " eps=" << num(cfg.eps) << "\n";
  if (!r.error.empty()) os << "# error=" << r.error << "\n";
  os << "iter,primal_residual,dual_residual,mae,elapsed_ms\n";
  for (const auto& row : r.rows) {
    os << row.iter << "," << num(row.primal_residual) << "," << num(row.dual_residual) << ","
       << num(row.quality) << "," << num(row.elapsed_ms) << "\n";
  }
}

void write_summary_csv(std::ostream& os, const ExperimentConfig& cfg,
                       const std::vector<RunReport>& reports) {
  os << "# sampler=" << kSamplerName << " stepsize_mode=" << stepsize_mode_name(cfg.stepsize_mode)
     << "\n";
  os << "algorithm,runs,failed,iter_mean,iter_std,residual_mean,residual_std,mae_mean,mae_std\n";
  for (auto alg : cfg.algorithms) {
    std::vector<double> it, res, err;
    int failed = 0;
    for (const auto& r : reports) {
      if (r.algorithm != alg) continue;
      if (!r.error.empty()) {
        ++failed;
        continue;
      }
      it.push_back(static_cast<double>(r.converged ? r.converged_at : r.iterations));
      res.push_back(r.final_residual);
      err.push_back(r.final_mae);
    }
    auto a = mean_std(it), b = mean_std(res), c = mean_std(err);
    os << algorithm_name(alg) << "," << it.size() << "," << failed << "," << num(a.mean) << ","
       << num(a.std) << "," << num(b.mean) << "," << num(b.std) << "," << num(c.mean) << ","
       << num(c.std) << "\n";
  }
}

void write_reports(const ExperimentConfig& cfg, const std::vector<RunReport>& reports) {
  if (cfg.output.empty()) return;
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output);
  for (const auto& r : reports) {
    fs::path p = fs::path(cfg.output) /
                 (std::string(algorithm_name(r.algorithm)) + "_seed" + std::to_string(r.seed) + ".csv");
    std::ofstream f(p);
    if (!f) throw Error(ErrorCode::Config, "cannot write " + p.string());
    write_report_csv(f, cfg, r);
  }
  std::ofstream f(fs::path(cfg.output) / "summary.csv");
  if (!f) throw Error(ErrorCode::Config, "cannot write summary.csv");
  write_summary_csv(f, cfg, reports);
}

}  // namespace adrsplit
