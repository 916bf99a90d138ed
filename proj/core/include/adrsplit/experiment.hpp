#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "adrsplit/admm.hpp"

namespace adrsplit {

enum class StepsizeMode { Equal, Unequal };
const char* stepsize_mode_name(StepsizeMode m);

struct ExperimentConfig {
  Index n = 3000;
  int N = 2;
  double omega = 4.0;
  double noise_sigma = 0.5;
  // data-fit blocks f_i = (fit_weight/2)||u_i - noisy_i||^2; moduli are taken as 1/N
  double fit_weight = 1.0;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  StepsizeMode stepsize_mode = StepsizeMode::Unequal;
  double eta = 1.01;
  double eps = 1e-4;
  int max_iter = 20000;
  std::vector<AdmmAlgorithm> algorithms = {AdmmAlgorithm::Special};
  std::string output;  // directory for CSV files; empty = no files
  bool timing = true;
  // Run every algorithm for exactly max_iter iterations.
  bool fixed_iterations = false;
  int jobs = 0;  // 0 = hardware concurrency

  void validate() const;
};

// Reads `key = value` lines; '#' starts a comment. Throws Error(Config).
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

inline constexpr const char* kSamplerName = "mt19937_64+box-muller";

struct Signal {
  Vec grid;
  Vec clean;
  Vec noisy;
};

Signal gen_signal(Index n, std::uint64_t seed, double noise_sigma);

// Standard normal draws from mt19937_64 via Box-Muller.
Vec standard_normals(Index count, std::uint64_t seed);

// Column split of the difference matrix shared by every seed.
struct DenoiseLayout {
  Index n = 0;
  int N = 0;
  LinearMap D = LinearMap::identity(1);
  std::vector<LinearMap> blocks;
  std::vector<Index> offsets;
  std::vector<Index> sizes;
  std::vector<double> block_norms;
};

DenoiseLayout make_denoise_layout(Index n, int N);

// Data-fit moduli are declared as 1/N, so fit_weight must be at least 1/N.
BlockProblem build_denoise_problem(const DenoiseLayout& layout, const Vec& noisy, double omega,
                                   double tau, double fit_weight = 1.0);
BlockProblem build_denoise_problem(const Vec& noisy, int N, double omega, double tau,
                                   double fit_weight = 1.0);

// alpha = (1/N) min_i ||D_i||^{-2}
double denoise_alpha(int N, const std::vector<double>& block_norms);
double denoise_tau(int N, double omega, const std::vector<double>& block_norms);

struct Stepsizes {
  double gamma = 0.0;
  double delta = 0.0;
};

Stepsizes denoise_stepsizes(double alpha, double beta, StepsizeMode mode, double eta);

double mae(const Vec& x, const Vec& phi);

struct DenoiseSetup {
  Signal signal;
  BlockProblem problem;
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;
  std::vector<double> sigma;
  Stepsizes steps;
  AdrParams params;
  RegimeCertificate certificate;
};

// Everything the runs need for one seed; throws Certificate if the stepsizes fail.
DenoiseSetup prepare_denoise(const ExperimentConfig& cfg, const DenoiseLayout& layout,
                             std::uint64_t seed);

struct RunReport {
  AdmmAlgorithm algorithm = AdmmAlgorithm::Special;
  std::uint64_t seed = 0;
  std::vector<AdmmRecord> rows;
  int iterations = 0;
  bool converged = false;
  int converged_at = -1;
  double final_residual = 0.0;
  double final_mae = 0.0;
  std::string error;
};

RunReport run_denoise(const ExperimentConfig& cfg, const DenoiseSetup& setup, AdmmAlgorithm alg);

std::vector<RunReport> run_experiment(const ExperimentConfig& cfg);

void write_report_csv(std::ostream& os, const ExperimentConfig& cfg, const RunReport& r);
void write_summary_csv(std::ostream& os, const ExperimentConfig& cfg,
                       const std::vector<RunReport>& reports);
// Writes one CSV per (algorithm, seed) plus summary.csv into cfg.output.
void write_reports(const ExperimentConfig& cfg, const std::vector<RunReport>& reports);

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;
};
SummaryStats mean_std(const std::vector<double>& v);

}  // namespace adrsplit
