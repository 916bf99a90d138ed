#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adrsplit/admm.hpp"
#include "adrsplit/error.hpp"
#include "adrsplit/experiment.hpp"
#include "adrsplit/instance_file.hpp"
#include "adrsplit/splitting.hpp"

using namespace adrsplit;

namespace {

constexpr int kExitCertificate = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitConfig = 4;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Certificate: return kExitCertificate;
    case ErrorCode::Divergence: return kExitDivergence;
    case ErrorCode::Config:
    case ErrorCode::InvalidParameter:
    case ErrorCode::InvalidDimension:
    case ErrorCode::Infeasible:
      return kExitConfig;
    default: return 1;
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Config, "bad number '" + item + "' in list");
    }
  }
  return out;
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

ExperimentConfig config_from(const std::string& path) {
  if (path.empty()) {
    ExperimentConfig cfg;
    cfg.validate();
    return cfg;
  }
  return load_config(path);
}

void print_summary(const ExperimentConfig& cfg, const std::vector<RunReport>& reports) {
  std::printf("%-8s %-6s %10s %12s %10s %s\n", "alg", "seed", "iter", "residual", "mae", "status");
  for (const auto& r : reports) {
    std::string status = !r.error.empty() ? "error: " + r.error : r.converged ? "converged" : "max_iter";
    int it = r.converged ? r.converged_at : r.iterations;
    std::printf("%-8s %-6llu %10d %12.4e %10.5f %s\n", algorithm_name(r.algorithm),
                static_cast<unsigned long long>(r.seed), it, r.final_residual, r.final_mae,
                status.c_str());
  }
  std::ostringstream os;
  write_summary_csv(os, cfg, reports);
  std::cout << "\n" << os.str();
}

int cmd_denoise(const std::string& config, const std::string& output, const std::string& mode,
                const std::string& seeds, bool no_timing) {
  ExperimentConfig cfg = config_from(config);
  if (!output.empty()) cfg.output = output;
  if (!mode.empty()) {
    if (mode == "equal") cfg.stepsize_mode = StepsizeMode::Equal;
    else if (mode == "unequal") cfg.stepsize_mode = StepsizeMode::Unequal;
    else throw Error(ErrorCode::Config, "--mode must be equal or unequal");
  }
  if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
  if (no_timing) cfg.timing = false;
  cfg.validate();
  auto reports = run_experiment(cfg);
  write_reports(cfg, reports);
  print_summary(cfg, reports);
  for (const auto& r : reports)
    if (r.error.find("not certified") != std::string::npos) return kExitCertificate;
  return 0;
}

int cmd_compare(const std::string& config, int iters, const std::string& seeds,
                const std::string& output) {
  ExperimentConfig cfg = config_from(config);
  cfg.algorithms = {AdmmAlgorithm::Special, AdmmAlgorithm::GaussSeidel};
  cfg.max_iter = iters;
  cfg.fixed_iterations = true;
  cfg.timing = false;
  if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
  if (!output.empty()) cfg.output = output;
  cfg.validate();
  auto reports = run_experiment(cfg);
  write_reports(cfg, reports);
  std::printf("%-6s %14s %14s %10s %10s\n", "seed", "alg3_residual", "gs_residual", "alg3_mae", "gs_mae");
  int wins = 0, seeds_done = 0;
  for (std::size_t i = 0; i + 1 < reports.size(); i += 2) {
    const auto& a = reports[i];
    const auto& g = reports[i + 1];
    if (!a.error.empty() || !g.error.empty()) {
      std::printf("%-6llu error: %s%s\n", static_cast<unsigned long long>(a.seed), a.error.c_str(),
                  g.error.c_str());
      continue;
    }
    ++seeds_done;
    if (a.final_residual <= g.final_residual) ++wins;
    std::printf("%-6llu %14.4e %14.4e %10.5f %10.5f\n", static_cast<unsigned long long>(a.seed),
                a.final_residual, g.final_residual, a.final_mae, g.final_mae);
  }
  std::printf("\nalg3 residual <= gs_admm residual at iteration %d on %d of %d seeds\n", iters, wins,
              seeds_done);
  return 0;
}

int cmd_validate(const std::string& sigma_s, double gamma, double lambda, double delta,
                 double kappa, const std::string& theta_s, bool two_op) {
  auto sigma = parse_list(sigma_s);
  if (sigma.size() < 2) throw Error(ErrorCode::Config, "--sigma needs at least two moduli");
  AdrParams p;
  if (delta > 0.0) p = make_params_from_delta(gamma, delta, kappa);
  else if (lambda > 0.0) p = make_params(gamma, lambda, kappa);
  else throw Error(ErrorCode::Config, "give --lambda or --delta");
  std::printf("gamma=%s delta=%s lambda=%s mu=%s kappa=%s\n", fmt(p.gamma, "%.12g").c_str(),
              fmt(p.delta, "%.12g").c_str(), fmt(p.lambda, "%.12g").c_str(),
              fmt(p.mu, "%.12g").c_str(), fmt(p.kappa, "%.12g").c_str());
  RegimeCertificate cert;
  if (two_op) {
    if (sigma.size() != 2) throw Error(ErrorCode::Config, "--two-op needs exactly two moduli");
    cert = certify_two_op(sigma[0], sigma[1], p);
  } else {
    std::optional<Vec> theta;
    if (!theta_s.empty()) {
      auto t = parse_list(theta_s);
      theta = Eigen::Map<Vec>(t.data(), static_cast<Index>(t.size()));
    }
    cert = certify_multi(sigma, p, theta);
  }
  std::cout << cert.describe();
  return cert.valid() ? 0 : kExitCertificate;
}

int cmd_inclusion(const std::string& path, bool force, bool switched) {
  AffineInstance inst = load_instance(path);
  std::vector<ResolventOp> ops;
  for (std::size_t i = 0; i < inst.ops.size(); ++i) {
    const auto& op = inst.ops[i];
    ops.push_back(inst.sigma[i] ? op.as_resolvent_op(*inst.sigma[i]) : op.as_resolvent_op());
  }
  AdrParams p = make_params(inst.gamma, inst.lambda, inst.kappa);
  RunOptions opts;
  opts.max_iter = inst.max_iter;
  opts.eps = inst.eps;
  opts.force = force;
  Blocks x0(inst.ops.size() - 1, Vec::Zero(inst.dim));
  MultiTrace tr = switched ? multi_adr_run_switched(ops, p, x0, opts) : multi_adr_run(ops, p, x0, opts);
  std::cout << tr.certificate.describe();
  Vec sum = Vec::Zero(inst.dim);
  for (const auto& op : inst.ops) sum += op.apply(tr.shadow);
  std::printf("iterations: %d (%s)\n", tr.iterations, tr.converged ? "converged" : "max_iter reached");
  std::printf("shadow:");
  for (Index j = 0; j < tr.shadow.size(); ++j) std::printf(" %.12g", tr.shadow(j));
  std::printf("\n||sum A_i(shadow)||: %.6e\n", sum.norm());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive Douglas-Rachford splitting and multiblock ADMM"};
  app.require_subcommand(1);

  std::string config, output, mode, seeds;
  bool no_timing = false;
  auto* den = app.add_subcommand("denoise", "run the TV + MCP denoising experiment");
  den->add_option("-c,--config", config, "key = value config file");
  den->add_option("-o,--output", output, "directory for CSV output");
  den->add_option("--mode", mode, "stepsize mode: equal or unequal");
  den->add_option("--seeds", seeds, "seed list, e.g. 1,2,3 or 1..10");
  den->add_flag("--no-timing", no_timing, "write 0 in the elapsed_ms column");

  std::string sigma, theta;
  double gamma = 1.0, lambda = -1.0, delta = -1.0, kappa = 0.5;
  bool two_op = false;
  auto* val = app.add_subcommand("validate-params", "print the regime certificate for given parameters");
  val->add_option("--sigma", sigma, "comma separated moduli sigma_1..sigma_m")->required();
  val->add_option("--gamma", gamma, "gamma")->required();
  auto* lam_opt = val->add_option("--lambda", lambda, "lambda");
  auto* del_opt = val->add_option("--delta", delta, "delta (sets lambda = 1 + delta/gamma)");
  lam_opt->excludes(del_opt);
  val->add_option("--kappa", kappa, "kappa");
  val->add_option("--theta", theta, "comma separated theta_1..theta_{m-1}");
  val->add_flag("--two-op", two_op, "use the two-operator certificate (alpha, beta)");

  std::string instance;
  bool force = false, switched = false;
  auto* inc = app.add_subcommand("run-inclusion", "run the product-space iteration on an affine instance");
  inc->add_option("instance", instance, "instance file")->required();
  inc->add_flag("--force", force, "run even if the parameters are not certified");
  inc->add_flag("--switched", switched, "apply the averaging resolvent first");

  int iters = 2000;
  std::string cmp_config, cmp_seeds, cmp_output;
  auto* cmp = app.add_subcommand("compare", "alg3 vs gs_admm after a fixed number of iterations");
  cmp->add_option("-c,--config", cmp_config, "key = value config file");
  cmp->add_option("--iters", iters, "iterations per run");
  cmp->add_option("--seeds", cmp_seeds, "seed list");
  cmp->add_option("-o,--output", cmp_output, "directory for CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*den) return cmd_denoise(config, output, mode, seeds, no_timing);
    if (*val) return cmd_validate(sigma, gamma, lambda, delta, kappa, theta, two_op);
    if (*inc) return cmd_inclusion(instance, force, switched);
    if (*cmp) return cmd_compare(cmp_config, iters, cmp_seeds, cmp_output);
  } catch (const Error& e) {
    std::cerr << "error (" << error_code_name(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
