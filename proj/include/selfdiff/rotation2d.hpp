#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selfdiff/measures.hpp"
#include "selfdiff/potentials.hpp"
#include "selfdiff/quadrature.hpp"

namespace selfdiff {

// Radial reduction of gamma: 1D quadrature for gamma(rho) drho with, by
// default, the polar Jacobian folded in: gamma(rho) = rho e^{-2V(rho)} / Z,
// normalized to unit mass, so that m2 = E|X|^2 under the planar gamma.
// jacobian=false reproduces the bare e^{-2V} density for comparison.
struct RadialDensity {
  Quadrature1D quad;            // nodes on (0, rho_max)
  std::vector<double> density;  // normalized gamma(rho) at the nodes
  double rho_max = 0.0;
  double m2 = 0.0;              // second moment of rho
  bool jacobian = true;
  ConfinementPotential V = ConfinementPotential::quartic_radial(1.0, 0.0, 1.0);
  int n_angle = 256;            // angular resolution used by the H quadratures

  static RadialDensity from_potential(const ConfinementPotential& V, double rho_max,
                                      int n_rho = 200, int n_angle = 256,
                                      bool jacobian = true);
  double total_mass() const;
};

struct HValues {
  double h = 0.0;        // H(alpha)
  double h_prime = 0.0;  // H'(alpha), by the differentiated integrand
  double h_tilde = 0.0;  // H~(alpha)
  double log_h = 0.0;    // always finite, even when h overflows
  double ratio = 0.0;    // H'(alpha) / H(alpha), computed overflow-safely
  double ratio_tilde = 0.0;  // H~(alpha) / H(alpha)
};

// H(a) = int gamma(rho) drho int_0^{2pi} e^{-a rho cos v} dv, H' its derivative,
// H~ the rho^2 sin^2 v variant. Evaluated by tensor quadrature with a max-shift
// in the exponent, so large alpha never overflows the ratios.
HValues h_functions(const RadialDensity& rd, double alpha);

// Radial vector field J_theta(a) = -a - 2 cos(theta) H'(a)/H(a).
double j_alpha(const RadialDensity& rd, double theta, double alpha);

// Central finite difference of J at alpha (odd extension through 0).
double j_prime_fd(const RadialDensity& rd, double theta, double alpha,
                  double h = 1e-5);

struct Alpha1Result {
  double alpha1 = 0.0;
  double residual = 0.0;  // J(alpha1)
  int iterations = 0;
};

// Unique positive root of J_theta when cos(theta) m2 < -1; nullopt otherwise.
std::optional<Alpha1Result> alpha1_root(const RadialDensity& rd, double theta,
                                        double tol = 1e-12);

enum class Regime { ConvergeToGamma, ConvergeToRandomFixed, Circling };

struct RegimeClassification {
  Regime regime = Regime::ConvergeToGamma;
  double theta = 0.0;
  double m2 = 0.0;
  double cos_theta_m2 = 0.0;
  std::optional<double> alpha1;   // present in the supercritical regimes
  std::optional<double> t_theta;  // period 2pi/tan(theta), Circling only
  bool boundary_degenerate = false;  // cos(theta) m2 = -1 within tolerance
  std::string regime_name() const;
};

RegimeClassification classify_regime(const RadialDensity& rd, double theta,
                                     double boundary_tol = 1e-12);

struct ReducedState {
  double alpha = 0.0;  // twice the mean radius, >= 0
  double sigma = 0.0;  // mean direction angle
};

struct ReducedRhs {
  double dalpha = 0.0;
  double dsigma = 0.0;
};

// Right-hand side of the reduced mean dynamics:
//   alpha' = J_theta(alpha),  sigma' = -2 H~(alpha)/H(alpha) sin(theta).
// The sigma equation uses the exact identity H'(a) = a H~(a), which removes
// the apparent singularity at alpha = 0 (limit -m2 sin theta).
ReducedRhs reduced_ode_rhs(const RadialDensity& rd, double theta,
                           const ReducedState& s);

struct ReducedTrajectory {
  std::vector<double> times;
  std::vector<double> alpha;
  std::vector<double> sigma;  // unwrapped
};

// Classic RK4 at fixed dt <= 0.01.
ReducedTrajectory integrate_reduced(const RadialDensity& rd, double theta,
                                    ReducedState s0, double T, double dt = 0.01);

// Tilted equilibrium e^{alpha (x, v)} gamma(dx) / Z on the 2D grid.
GridMeasure2D limit_measure(const RadialDensity& rd, Vec2 v, double alpha,
                            GridPtr grid);

// Exponentially weighted average of tilted measures over one period of the
// circling wave; `delta` labels the phase of the instantaneous Gibbs tilt.
// literal_v freezes the tilt direction at v(delta) instead of flowing it
// (comparison mode; not flow-covariant).
GridMeasure2D periodic_orbit_measure(const RadialDensity& rd, double theta,
                                     double alpha1, double delta, GridPtr grid,
                                     int n_s = 2048, bool literal_v = false);

struct SymmetryIntegrals {
  double i1 = 0.0;  // int [phi((x,y)) - phi((x,p))] gamma(dx), p = (1,0)
  Vec2 i2;          // int phi((x,y)) (x - (x,y) y) gamma(dx)
};

SymmetryIntegrals symmetry_integrals(const RadialDensity& rd, Vec2 y,
                                     const std::function<double(double)>& phi);

struct KurtosisReport {
  double j3_at_zero = 0.0;
  std::vector<double> alphas;
  std::vector<double> j3;       // 5-point finite differences with Richardson
  std::vector<double> j_prime;  // J' at the same samples
  bool pass = false;            // all sampled j3 < 1e-6 (sign check)
};

KurtosisReport kurtosis_sign_check(const RadialDensity& rd, double theta,
                                   const std::vector<double>& alpha_samples);

}  // namespace selfdiff
