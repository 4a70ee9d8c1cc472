#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "selfdiff/geometry.hpp"

namespace selfdiff {

// Confinement potential V. Either the closed-form quartic radial family
// V(x) = a|x|^4 + b|x|^2 + c (analytic derivatives) or user-supplied
// evaluators.
class ConfinementPotential {
 public:
  static ConfinementPotential quartic_radial(double a, double b, double c);
  static ConfinementPotential custom(std::function<double(Vec2)> value,
                                     std::function<Vec2(Vec2)> grad,
                                     std::function<Mat2(Vec2)> hess,
                                     std::string name = "custom");

  double value(Vec2 x) const;
  Vec2 grad(Vec2 x) const;
  Mat2 hess(Vec2 x) const;

  // Radial profile V(rho) = value((rho, 0)); the library is planar and all
  // shipped confinement potentials are radial.
  double radial(double rho) const { return value({rho, 0.0}); }

  bool is_quartic() const { return quartic_.has_value(); }
  double qa() const { return quartic_ ? quartic_->a : 0.0; }
  double qb() const { return quartic_ ? quartic_->b : 0.0; }
  double qc() const { return quartic_ ? quartic_->c : 0.0; }
  const std::string& name() const { return name_; }

 private:
  ConfinementPotential() = default;
  struct Quartic { double a, b, c; };
  std::optional<Quartic> quartic_;
  std::function<double(Vec2)> value_;
  std::function<Vec2(Vec2)> grad_;
  std::function<Mat2(Vec2)> hess_;
  std::string name_;
};

enum class InteractionKind { None, LinearRotation, SymmetricDot, Custom };

// Interaction potential W(x, y). The shipped kinds are all linear in both
// arguments, W(x,y) = (x, A y): A = R(theta) for LinearRotation (counter-
// clockwise rotation), A = -Id for SymmetricDot, A = 0 for None. Custom
// kernels provide their own evaluators.
class InteractionPotential {
 public:
  static InteractionPotential none();
  static InteractionPotential linear_rotation(double theta);
  static InteractionPotential symmetric_dot();
  static InteractionPotential custom(std::function<double(Vec2, Vec2)> value,
                                     std::function<Vec2(Vec2, Vec2)> grad_x,
                                     std::function<Mat2(Vec2, Vec2)> hess_xx,
                                     bool symmetric, std::string name = "custom");

  double value(Vec2 x, Vec2 y) const;
  Vec2 grad_x(Vec2 x, Vec2 y) const;
  Mat2 hess_xx(Vec2 x, Vec2 y) const;

  InteractionKind kind() const { return kind_; }
  bool is_linear() const { return kind_ != InteractionKind::Custom; }
  bool is_zero() const { return kind_ == InteractionKind::None; }
  // W(x,y) = (x, A y) for the linear kinds.
  Mat2 linear_matrix() const { return matrix_; }
  double theta() const { return theta_; }
  // Symmetric means W(x,y) = W(y,x); required by the free-energy formulas.
  bool is_symmetric() const { return symmetric_; }
  const std::string& name() const { return name_; }

 private:
  InteractionPotential() = default;
  InteractionKind kind_ = InteractionKind::None;
  Mat2 matrix_;
  double theta_ = 0.0;
  bool symmetric_ = true;
  std::function<double(Vec2, Vec2)> value_;
  std::function<Vec2(Vec2, Vec2)> grad_x_;
  std::function<Mat2(Vec2, Vec2)> hess_xx_;
  std::string name_;
};

struct HypothesisItem {
  std::string id;           // "i".."v"
  std::string description;
  bool pass = false;
  double worst_value = 0.0; // the extremal sampled quantity (see description)
  std::string detail;
};

struct HypothesisReport {
  std::vector<HypothesisItem> items;
  // Fitted constants, reused elsewhere (kappa feeds the convolution bound).
  double kappa = 0.0;        // domination constant
  double convexity_K = 0.0;  // min Hessian eigenvalue of V over the box
  double growth_delta = 0.0; // fitted growth exponent
  double curvature_alpha = 0.0;  // boundary estimate of (x,grad_x W)/(x,grad V)
  double hessian_M = 0.0;        // min eig of Hess V + Hess_xx W over samples
  double gauge_lambda = 0.0;     // quadratic gauge applied (0 = none)
  bool all_pass() const;
  std::string to_text() const;
};

// Numerical spot-check of the standing hypotheses on [-box, box]^2 with an
// n x n sample lattice. A positive gauge_lambda checks the gauge-transformed
// pair (V - lambda|x|^2/2, W + lambda|x|^2/2 + |y|^2/(2 lambda)), which leaves
// the total drift's x-gradient unchanged up to a constant shift.
HypothesisReport check_hypotheses(const ConfinementPotential& V,
                                  const InteractionPotential& W,
                                  double box = 3.0, int n = 41,
                                  double tol = 1e-9,
                                  double gauge_lambda = 0.0);

// Fitted cutoff: smallest rho (rounded up to 0.5) with 2(V - min V) >= 80,
// clamped to [2, 8]; the neglected tail mass is below e^{-80}.
double auto_rho_max(const ConfinementPotential& V);

}  // namespace selfdiff
