#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "selfdiff/geometry.hpp"
#include "selfdiff/potentials.hpp"
#include "selfdiff/quadrature.hpp"

namespace selfdiff {

// Weighted planar point cloud; carries the empirical occupation measure.
struct ParticleMeasure {
  std::vector<Vec2> points;
  std::vector<double> weights;  // nonnegative, sum to 1

  static ParticleMeasure dirac(Vec2 x);

  int size() const { return static_cast<int>(points.size()); }
  double total_mass() const;
  Vec2 mean() const;
  double integrate(const std::function<double(Vec2)>& f) const;

  // Probability-measure invariants: sizes match, weights >= 0, mass within tol of 1.
  void validate(double tol = 1e-12) const;
};

// Nonnegative density on a shared polar grid. `density` is indexed by
// grid->index(i,j) and is a density with respect to the grid's reference
// weights (Lebesgue dx when the grid carries the Jacobian).
struct GridMeasure2D {
  GridPtr grid;
  std::vector<double> density;

  double total_mass() const;
  Vec2 mean() const;
  double integrate(const std::function<double(Vec2)>& f) const;

  // Probability invariants: density >= 0, mass within tol of 1.
  void validate(double tol = 1e-8) const;
  // Looser check for signed densities (tangent directions): only shape/finiteness.
  void validate_signed() const;

  // In-place normalization to unit mass (used by producing operations).
  void normalize();
};

// Dual V-norm: integral of V against |mu|.
double v_norm(const ParticleMeasure& mu, const ConfinementPotential& V);
double v_norm(const GridMeasure2D& mu, const ConfinementPotential& V);
// V-norm of the signed difference of two same-grid measures.
double v_norm_diff(const GridMeasure2D& a, const GridMeasure2D& b,
                   const ConfinementPotential& V);

// One occupation step: (1 - lambda) mu + lambda delta_x with lambda = dt/(r+t).
// dt = 0 returns mu unchanged.
ParticleMeasure occupation_update(const ParticleMeasure& mu, Vec2 x, double t,
                                  double dt, double r);

struct ThinStats {
  int before = 0;
  int after = 0;
  double v_mass_rel_err = 0.0;  // relative change of the V-integral
};

// Systematic (stratified) resampling down to at most n_max equal-weight atoms.
// Identity when the cloud is already small enough. Deterministic given rng state.
ParticleMeasure thin(const ParticleMeasure& mu, int n_max, std::mt19937_64& rng,
                     const ConfinementPotential* V = nullptr,
                     ThinStats* stats = nullptr);

struct TightnessReport {
  double beta_estimate = 0.0;          // sup over checkpoints of int V dmu
  std::vector<double> v_masses;        // per checkpoint
  std::vector<bool> in_p_beta;         // int V dmu <= beta per checkpoint
  bool all_in() const;
};

TightnessReport tightness_check(const std::vector<ParticleMeasure>& traj,
                                const ConfinementPotential& V, double beta);

double grid_integrate(const GridMeasure2D& mu, const std::function<double(Vec2)>& f);

/// Histogram binning of a particle cloud onto a polar grid: each atom lands in
// the cell of the nearest grid node (midpoint boundaries in rho and angle);
// cell mass is divided by the cell's quadrature weight to give a density.
GridMeasure2D bin_particles(const ParticleMeasure& mu, GridPtr grid);

// CSV serialization; 17 significant digits, bit-exact round trip.
void write_particle_csv(const std::string& path, const ParticleMeasure& mu);
ParticleMeasure read_particle_csv(const std::string& path);
// Optional z_value is written/read as a comment header line.
void write_grid_csv(const std::string& path, const GridMeasure2D& mu,
                    const double* z_value = nullptr);
GridMeasure2D read_grid_csv(const std::string& path, GridPtr grid,
                            double* z_value = nullptr);

}  // namespace selfdiff
