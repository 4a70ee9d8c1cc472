#pragma once

#include <cstdint>
#include <vector>

#include "selfdiff/dictionary.hpp"
#include "selfdiff/measures.hpp"
#include "selfdiff/potentials.hpp"
#include "selfdiff/semiflow.hpp"

namespace selfdiff {

// Euler-Maruyama configuration shared by the frozen and the self-interacting
// runs. Validation requires dt * |drift(x0)| <= 1e-2 (the step must resolve
// the initial drift), r > dt (the first occupation weight dt/r stays below
// 1), and positive horizon.
struct SdeConfig {
  Vec2 x0{0.0, 0.0};
  double r = 1.0;         // occupation weight offset, > 0
  double dt = 1e-3;
  double t_final = 10.0;
  std::uint64_t seed = 1;
  // Particle cloud cap: the cloud is resampled down to thin_max atoms
  // whenever it reaches 2 * thin_max (0 disables thinning).
  int thin_max = 20000;
  // Scalar checkpoint rows (t, x, mean, intV) every this many steps.
  int checkpoint_stride = 1000;
  // Full particle snapshots at these times (snapped to the step grid).
  std::vector<double> snapshot_times;
  // Abort radius; 0 means 10 * auto_rho_max(V).
  double explosion_radius = 0.0;
};

struct SdeCheckpoint {
  double t = 0.0;
  Vec2 x;
  Vec2 mean_mu;      // running occupation mean (exact recursion)
  double int_v = 0.0;  // running integral of V d(mu_t) (exact recursion)
};

struct SdePath {
  std::vector<SdeCheckpoint> checkpoints;
  std::vector<double> snapshot_times;  // actual (step-aligned) times
  std::vector<ParticleMeasure> snapshots;
  ParticleMeasure final_measure;
  Vec2 final_position;
  Vec2 final_mean;
  double final_int_v = 0.0;
  double r = 0.0;   // copied from the config, needed by the time change
  double dt = 0.0;  // step actually used (snapshot times are multiples)
  double t_final = 0.0;
  // sup over checkpoints of the running integral of V (tightness monitor).
  double sup_int_v = 0.0;
};

// Diffusion with the occupation measure frozen at mu:
//   X_{k+1} = X_k - (grad V + grad W*mu)(X_k) dt + sqrt(dt) Z_k.
// The path still carries an occupation measure (of the path itself) so the
// ergodic-average diagnostics share one code path.
SdePath simulate_frozen(const ConfinementPotential& V,
                        const InteractionPotential& W,
                        const ParticleMeasure& mu, const SdeConfig& cfg);

// Full self-interacting diffusion: the drift sees mu_t, and mu_t absorbs the
// current position with weight dt/(r + t) each step. For linear W the drift
// needs only the exactly-maintained running mean; custom kernels sum over
// the (thinned) particle cloud.
SdePath simulate_self_interacting(const ConfinementPotential& V,
                                  const InteractionPotential& W,
                                  const SdeConfig& cfg,
                                  const ParticleMeasure& mu0);

// Deterministic time change h(t) = r (e^t - 1) with inverse log(1 + s/r);
// h maps flow time to diffusion time.
double time_change(double t, double r);
double time_change_inverse(double s, double r);

// Independent per-replica seed stream (splitmix64 of seed + index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replica);

// Step-aligned diffusion times h(t + s_j), s_j = j T_window / n_s, for every
// t in t_list; feed these to SdeConfig::snapshot_times before the run.
std::vector<double> deficit_snapshot_times(const std::vector<double>& t_list,
                                           double t_window, double r,
                                           int n_s);

// Asymptotic-pseudotrajectory deficit: for each t in t_list, bins the
// snapshot mu_{h(t)} onto `grid`, integrates the flow for t_window, and
// returns sup_{s <= t_window} weak_distance(mu_{h(t+s)}, Phi_s(mu_{h(t)})).
// With a finite dictionary this is a lower bound of the metric deficit.
std::vector<double> pseudotrajectory_deficit(
    const SdePath& path, const ConfinementPotential& V,
    const InteractionPotential& W, const std::vector<double>& t_list,
    double t_window, const FunctionDictionary& dict, const GridPtr& grid,
    double flow_dt = 0.01, int n_s = 10);

}  // namespace selfdiff
