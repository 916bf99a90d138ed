#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adrsplit/operators.hpp"

namespace adrsplit {

// Affine inclusion 0 in sum_i (M_i x + c_i) with run settings.
//
//   dim <n>
//   gamma <g>   lambda <l>   kappa <k>   max_iter <K>   eps <e>   (one per line)
//   operator
//   sigma <s>          optional, computed from M otherwise
//   matrix
//   <n rows of n numbers>
//   offset
//   <one row of n numbers>
//
// Blank lines and text after '#' are ignored.
struct AffineInstance {
  Index dim = 0;
  double gamma = 1.0;
  double lambda = 2.0;
  double kappa = 0.5;
  int max_iter = 100000;
  double eps = 1e-10;
  std::vector<AffineOperator> ops;
  std::vector<std::optional<double>> sigma;
};

AffineInstance parse_instance(std::istream& in);
AffineInstance load_instance(const std::string& path);

}  // namespace adrsplit
