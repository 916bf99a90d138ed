#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "adrsplit/linalg.hpp"

namespace adrsplit {

// Set-valued operator A known through its resolvent J_{gA} = (Id + gA)^{-1}.
// sigma is the comonotonicity modulus; -inf means "not known".
class ResolventOp {
 public:
  using Fn = std::function<Vec(double gamma, const Vec& x)>;

  static constexpr double kUnknownSigma = -std::numeric_limits<double>::infinity();

  ResolventOp() = default;
  ResolventOp(Index dim, Fn fn, double sigma = kUnknownSigma,
              std::optional<double> rho = std::nullopt);

  Index dim() const { return dim_; }
  double sigma() const { return sigma_; }
  std::optional<double> rho() const { return rho_; }
  bool has_sigma() const { return sigma_ != kUnknownSigma; }

  bool valid_gamma(double gamma) const;

  // Throws InvalidParameter outside valid_gamma, InvalidDimension on size mismatch.
  Vec resolve(double gamma, const Vec& x) const;

 private:
  Index dim_ = 0;
  Fn fn_;
  double sigma_ = kUnknownSigma;
  std::optional<double> rho_;
};

ResolventOp zero_operator(Index dim);
ResolventOp identity_operator(Index dim);

// A(x) = M x + c.
struct AffineOperator {
  Mat M;
  Vec c;

  Index dim() const { return M.rows(); }
  Vec apply(const Vec& x) const { return M * x + c; }
  // Largest sigma with <x-y, Ax-Ay> >= sigma ||Ax-Ay||^2; needs M invertible.
  double comonotone_modulus() const;
  ResolventOp as_resolvent_op() const;
  ResolventOp as_resolvent_op(double sigma) const;
};

Vec resolvent_affine(const Mat& M, const Vec& c, double gamma, const Vec& x);

Vec yosida(const ResolventOp& a, double gamma, const Vec& x);

// J_{dA^{-1}}(u) = u - d J_{(1/d)A}(u/d).
Vec resolvent_of_inverse(const ResolventOp& a, double delta, const Vec& u);

struct GraphPair {
  Vec x;
  Vec u;  // u in A(x)
};

// min over distinct pairs of <x-y,u-v> - sigma ||u-v||^2.
double check_comonotone(const std::vector<GraphPair>& pairs, double sigma);

}  // namespace adrsplit
