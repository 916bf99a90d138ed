#include "adrsplit/instance_file.hpp"

#include <fstream>
#include <sstream>

#include "adrsplit/error.hpp"

namespace adrsplit {

namespace {

struct Line {
  int number;
  std::vector<std::string> tokens;
};

std::vector<Line> read_lines(std::istream& in) {
  std::vector<Line> out;
  std::string raw;
  int no = 0;
  while (std::getline(in, raw)) {
    ++no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ss(raw);
    Line l{no, {}};
    for (std::string t; ss >> t;) l.tokens.push_back(t);
    if (!l.tokens.empty()) out.push_back(std::move(l));
  }
  return out;
}

[[noreturn]] void fail(const Line& l, const std::string& msg) {
  throw Error(ErrorCode::Config, "instance line " + std::to_string(l.number) + ": " + msg);
}

double to_double(const Line& l, const std::string& t) {
  try {
    std::size_t pos = 0;
    double v = std::stod(t, &pos);
    if (pos != t.size()) fail(l, "bad number '" + t + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(l, "bad number '" + t + "'");
  }
}

Vec row(const Line& l, Index n) {
  if (static_cast<Index>(l.tokens.size()) != n)
    fail(l, "expected " + std::to_string(n) + " numbers, got " + std::to_string(l.tokens.size()));
  Vec v(n);
  for (Index j = 0; j < n; ++j) v(j) = to_double(l, l.tokens[static_cast<std::size_t>(j)]);
  return v;
}

}  // namespace

AffineInstance parse_instance(std::istream& in) {
  auto lines = read_lines(in);
  AffineInstance inst;
  std::size_t i = 0;
  auto scalar = [&](const Line& l) {
    if (l.tokens.size() != 2) fail(l, "expected '<key> <value>'");
    return to_double(l, l.tokens[1]);
  };
  bool have_matrix = false, have_offset = false, open = false;
  auto close_operator = [&](const Line& l) {
    if (!open) return;
    if (!have_matrix || !have_offset) fail(l, "operator needs both 'matrix' and 'offset'");
    open = false;
  };
  while (i < lines.size()) {
    const Line& l = lines[i];
    const std::string& key = l.tokens[0];
    if (key == "dim") {
      double d = scalar(l);
      if (d < 1 || d != static_cast<double>(static_cast<Index>(d))) fail(l, "dim must be a positive integer");
      if (!inst.ops.empty()) fail(l, "dim must precede operators");
      inst.dim = static_cast<Index>(d);
      ++i;
    } else if (key == "gamma") {
      inst.gamma = scalar(l);
      ++i;
    } else if (key == "lambda") {
      inst.lambda = scalar(l);
      ++i;
    } else if (key == "kappa") {
      inst.kappa = scalar(l);
      ++i;
    } else if (key == "max_iter") {
      inst.max_iter = static_cast<int>(scalar(l));
      ++i;
    } else if (key == "eps") {
      inst.eps = scalar(l);
      ++i;
    } else if (key == "operator") {
      if (inst.dim < 1) fail(l, "'dim' must come before the first operator");
      close_operator(l);
      inst.ops.push_back({Mat::Zero(inst.dim, inst.dim), Vec::Zero(inst.dim)});
      inst.sigma.emplace_back();
      open = true;
      have_matrix = have_offset = false;
      ++i;
    } else if (key == "sigma") {
      if (!open) fail(l, "'sigma' outside an operator block");
      inst.sigma.back() = scalar(l);
      ++i;
    } else if (key == "matrix") {
      if (!open) fail(l, "'matrix' outside an operator block");
      for (Index r = 0; r < inst.dim; ++r) {
        if (i + 1 + static_cast<std::size_t>(r) >= lines.size()) fail(l, "matrix is missing rows");
        inst.ops.back().M.row(r) = row(lines[i + 1 + static_cast<std::size_t>(r)], inst.dim).transpose();
      }
      have_matrix = true;
      i += 1 + static_cast<std::size_t>(inst.dim);
    } else if (key == "offset") {
      if (!open) fail(l, "'offset' outside an operator block");
      if (i + 1 >= lines.size()) fail(l, "offset row missing");
      inst.ops.back().c = row(lines[i + 1], inst.dim);
      have_offset = true;
      i += 2;
    } else {
      fail(l, "unknown keyword '" + key + "'");
    }
  }
  if (open) close_operator(lines.back());
  if (inst.ops.size() < 2) throw Error(ErrorCode::Config, "instance needs at least two operators");
  return inst;
}

AffineInstance load_instance(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Config, "cannot open instance file " + path);
  return parse_instance(f);
}

}  // namespace adrsplit
