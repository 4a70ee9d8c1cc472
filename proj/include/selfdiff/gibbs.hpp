#pragma once

#include <functional>
#include <vector>

#include "selfdiff/measures.hpp"
#include "selfdiff/potentials.hpp"

namespace selfdiff {

// Frozen evaluator of W*mu and its x-gradient. For the linear kinds it is
// (x, A mubar) with the mean captured once; custom kernels sum over the atoms
// (or grid nodes) of mu.
class ConvolvedInteraction {
 public:
  ConvolvedInteraction(const InteractionPotential& W, const ParticleMeasure& mu);
  ConvolvedInteraction(const InteractionPotential& W, const GridMeasure2D& mu);
  // Zero-mass signed version (for the differential of the Gibbs map).
  static ConvolvedInteraction signed_grid(const InteractionPotential& W,
                                          const GridMeasure2D& nu);

  double value(Vec2 x) const;
  Vec2 grad(Vec2 x) const;

 private:
  ConvolvedInteraction() = default;
  InteractionPotential W_ = InteractionPotential::none();
  bool linear_ = true;
  Vec2 a_mean_;  // A times the mean of mu
  std::vector<Vec2> pts_;
  std::vector<double> wts_;
};

struct ConvolutionCheck {
  double value = 0.0;
  Vec2 gradient;
  double bound = 0.0;        // 2 kappa ||mu||_V V(x)
  bool within_bound = true;  // |value| <= bound (small slack)
};

// W*mu at x together with the domination bound |W*mu| <= 2 kappa ||mu||_V V(x).
ConvolutionCheck convolve_interaction(const InteractionPotential& W,
                                      const ParticleMeasure& mu, Vec2 x,
                                      const ConfinementPotential& V, double kappa);
ConvolutionCheck convolve_interaction(const InteractionPotential& W,
                                      const GridMeasure2D& mu, Vec2 x,
                                      const ConfinementPotential& V, double kappa);

struct GibbsResult {
  GridMeasure2D measure;
  double z_value = 1.0;  // Z(mu) = int e^{-2 W*mu} dgamma, so W=0 gives 1
  double log_z = 0.0;
};

// Gibbs map: density proportional to e^{-2(V + W*mu)} on the grid, normalized.
GibbsResult pi_map(const ConfinementPotential& V, const InteractionPotential& W,
                   const ParticleMeasure& mu, GridPtr grid);
GibbsResult pi_map(const ConfinementPotential& V, const InteractionPotential& W,
                   const GridMeasure2D& mu, GridPtr grid);
inline GibbsResult pi_map(const ConfinementPotential& V,
                          const InteractionPotential& W,
                          const GridMeasure2D& mu) {
  return pi_map(V, W, mu, mu.grid);
}

// Reference measure gamma (the W=0 Gibbs measure) on the grid.
GridMeasure2D gamma_measure(const ConfinementPotential& V, GridPtr grid);

// Tilted reference density ~ exp(alpha (x, v(phi)) - 2 V(x)), normalized;
// alpha = 0 recovers gamma. The workhorse test-measure family.
GridMeasure2D tilted_gibbs_measure(const ConfinementPotential& V, GridPtr grid,
                                   double alpha, double phi);

// Free energy F(mu) = int log(dmu/dgamma) dmu + int int W dmu dmu.
// Convention 0 log 0 = 0; +inf when mu charges nodes where gamma underflows.
double free_energy(const ConfinementPotential& V, const InteractionPotential& W,
                   const GridMeasure2D& mu);

// Directional derivative of the Gibbs map at mu in direction nu (zero mass):
// -2 (W*nu - int W*nu dPi(mu)) Pi(mu). Returns a signed grid density.
GridMeasure2D d_pi(const ConfinementPotential& V, const InteractionPotential& W,
                   const GridMeasure2D& mu, const GridMeasure2D& nu, GridPtr grid);
inline GridMeasure2D d_pi(const ConfinementPotential& V,
                          const InteractionPotential& W,
                          const GridMeasure2D& mu, const GridMeasure2D& nu) {
  return d_pi(V, W, mu, nu, mu.grid);
}

// Directional derivative of F at mu (symmetric W only):
// int [log(dmu/dgamma) + 2 W*mu] dnu.
double d_free_energy(const ConfinementPotential& V, const InteractionPotential& W,
                     const GridMeasure2D& mu, const GridMeasure2D& nu);

struct FixedPointHistoryRow {
  int iter = 0;
  double residual = 0.0;
  double energy = 0.0;  // E = F(Pi(mu)), recorded for symmetric W (else NaN)
  Vec2 mean;
};

struct FixedPointOutcome {
  GridMeasure2D measure;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool energy_monotone = true;  // within 1e-10 slack; meaningful for symmetric W
  std::vector<FixedPointHistoryRow> history;
};

struct FixedPointOptions {
  double damping = 0.5;  // in (0, 1]
  double tol = 1e-10;    // V-norm residual target
  int max_iter = 500;
};

FixedPointOutcome fixed_point_iterate(const ConfinementPotential& V,
                                      const InteractionPotential& W,
                                      const GridMeasure2D& mu0,
                                      const FixedPointOptions& opts = {});

struct SpectralGapResult {
  double gap = 0.0;          // smallest nonzero eigenvalue magnitude
  double gap_refined = 0.0;  // same at doubled resolution
  double lambda0 = 0.0;      // bottom eigenvalue (should be ~0)
  bool unreliable = false;   // >5% change under doubling
};

// Spectral gap of the 1D generator (1/2) d^2/dx^2 - U' d/dx on [a,b] with
// no-flux boundaries, via the symmetrized tridiagonal discretization in the
// e^{-2U}-weighted space.
SpectralGapResult spectral_gap_1d(const std::function<double(double)>& U,
                                  double a, double b, int n);

}  // namespace selfdiff
