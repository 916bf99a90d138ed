#pragma once

#include <cstdint>
#include <optional>

#include "adrsplit/linalg.hpp"
#include "adrsplit/operators.hpp"

namespace adrsplit {

// p_tau(t) = |t| - t^2/(2 tau) for |t| <= tau, tau/2 beyond.
double mcp_value(double t, double tau);

// argmin_t omega p_tau(t) + (c/2)(t - a)^2; requires c >= (1+1e-12) omega/tau.
double prox_mcp_scalar(double a, double omega, double c, double tau);

// Proper closed rho-convex function with a closed-form prox.
class ProxFunction {
 public:
  enum class Kind { Zero, Quadratic, Mcp };

  static ProxFunction zero(Index dim);
  // (weight/2) ||w - center||^2
  static ProxFunction quadratic(double weight, Vec center);
  static ProxFunction quadratic(Index dim, double weight);
  // omega * sum_j p_tau(w_j)
  static ProxFunction mcp(Index dim, double omega, double tau);

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }
  std::uint64_t id() const { return id_; }
  double rho() const;

  double weight() const { return weight_; }
  const Vec& center() const { return center_; }
  double omega() const { return omega_; }
  double tau() const { return tau_; }

  double eval(const Vec& w) const;
  // argmin_w f(w) + ||w - a||^2/(2t)
  Vec prox(double t, const Vec& a) const;
  // dist(0, subdiff f(w) + v)
  double subgradient_distance(const Vec& w, const Vec& v) const;

 private:
  Kind kind_ = Kind::Zero;
  Index dim_ = 0;
  std::uint64_t id_ = 0;
  double weight_ = 0.0;
  Vec center_;
  double omega_ = 0.0;
  double tau_ = 0.0;
};

// S_{f,L}(x; g) = argmin_w f(w) + (g/2)||L w + x/g||^2.
Vec subproblem_solve(const ProxFunction& f, const LinearMap& l, const Vec& x, double gamma);

// x' + g L S_{f,L}(x'; g) with x' = x - g b.
Vec resolvent_from_subproblem(const ProxFunction& f, const LinearMap& l,
                              const std::optional<Vec>& b_shift, double gamma, const Vec& x);

// Resolvent operator of (-L) o (subdiff f)^{-1} o (-L^T) (shifted by b) as a ResolventOp.
ResolventOp subproblem_operator(const ProxFunction& f, const LinearMap& l,
                                std::optional<Vec> b_shift, double sigma);

// Number of factorizations currently cached by subproblem_solve.
std::size_t subproblem_cache_size();
void clear_subproblem_cache();

}  // namespace adrsplit
