#include <fstream>
#include <map>
#include <sstream>

#include "adrsplit/error.hpp"
#include "adrsplit/experiment.hpp"

namespace adrsplit {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, sep);) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::Config, "'" + key + "' expects a number, got '" + v + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long d = std::stoll(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::Config, "'" + key + "' expects an integer, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::Config, "'" + key + "' expects true/false, got '" + v + "'");
}

AdmmAlgorithm parse_algorithm(const std::string& v) {
  if (v == "alg3") return AdmmAlgorithm::Special;
  if (v == "alg2") return AdmmAlgorithm::General;
  if (v == "gs_admm") return AdmmAlgorithm::GaussSeidel;
  throw Error(ErrorCode::Config, "unknown algorithm '" + v + "' (alg3, alg2, gs_admm)");
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split(text, ',')) {
    auto dots = item.find("..");
    if (dots != std::string::npos) {
      long long a = parse_int("seeds", trim(item.substr(0, dots)));
      long long b = parse_int("seeds", trim(item.substr(dots + 2)));
      if (a < 0 || b < a) throw Error(ErrorCode::Config, "bad seed range '" + item + "'");
      for (long long s = a; s <= b; ++s) out.push_back(static_cast<std::uint64_t>(s));
    } else {
      long long s = parse_int("seeds", item);
      if (s < 0) throw Error(ErrorCode::Config, "seeds must be non-negative");
      out.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (out.empty()) throw Error(ErrorCode::Config, "empty seed list");
  return out;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string raw;
  int no = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    auto eq = raw.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Config, "config line " + std::to_string(no) + ": expected key = value");
    std::string key = trim(raw.substr(0, eq));
    std::string val = trim(raw.substr(eq + 1));
    if (seen.count(key))
      throw Error(ErrorCode::Config, "config line " + std::to_string(no) + ": duplicate key '" + key + "'");
    seen[key] = no;
    if (key == "n") {
      cfg.n = static_cast<Index>(parse_int(key, val));
    } else if (key == "N") {
      cfg.N = static_cast<int>(parse_int(key, val));
    } else if (key == "omega") {
      cfg.omega = parse_double(key, val);
    } else if (key == "noise_sigma") {
      cfg.noise_sigma = parse_double(key, val);
    } else if (key == "fit_weight") {
      cfg.fit_weight = parse_double(key, val);
    } else if (key == "seeds") {
      cfg.seeds = parse_seed_list(val);
    } else if (key == "stepsize_mode") {
      if (val == "equal") cfg.stepsize_mode = StepsizeMode::Equal;
      else if (val == "unequal") cfg.stepsize_mode = StepsizeMode::Unequal;
      else throw Error(ErrorCode::Config, "stepsize_mode must be equal or unequal");
    } else if (key == "eta") {
      cfg.eta = parse_double(key, val);
    } else if (key == "eps") {
      cfg.eps = parse_double(key, val);
    } else if (key == "max_iter") {
      cfg.max_iter = static_cast<int>(parse_int(key, val));
    } else if (key == "algorithms") {
      cfg.algorithms.clear();
      for (const auto& a : split(val, ',')) cfg.algorithms.push_back(parse_algorithm(a));
    } else if (key == "output") {
      cfg.output = val;
    } else if (key == "timing") {
      cfg.timing = parse_bool(key, val);
    } else if (key == "fixed_iterations") {
      cfg.fixed_iterations = parse_bool(key, val);
    } else if (key == "jobs") {
      cfg.jobs = static_cast<int>(parse_int(key, val));
    } else {
      throw Error(ErrorCode::Config, "config line " + std::to_string(no) + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Config, "cannot open config file " + path);
  return parse_config(f);
}

}  // namespace adrsplit
