#include "selfdiff/sde.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "selfdiff/errors.hpp"

namespace selfdiff {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Particle cloud with a global weight scale: the occupation update shrinks
// every existing weight by (1 - lambda), which the scale absorbs so each
// step costs O(1). Actual atom weight = raw * scale.
struct Cloud {
  std::vector<Vec2> points;
  std::vector<double> raw;
  double scale = 1.0;

  ParticleMeasure to_measure() const {
    ParticleMeasure mu;
    mu.points = points;
    mu.weights.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) mu.weights[i] = raw[i] * scale;
    return mu;
  }
};

struct Accum {
  Vec2 mean;
  double int_v = 0.0;
};

double validated_guard(const ConfinementPotential& V, const SdeConfig& cfg) {
  return cfg.explosion_radius > 0.0 ? cfg.explosion_radius
                                    : 10.0 * auto_rho_max(V);
}

void validate_config(const ConfinementPotential& V,
                     const InteractionPotential& W, const SdeConfig& cfg,
                     const ParticleMeasure& mu0) {
  if (!(cfg.r > 0.0))
    throw ValidationError("sde: occupation offset r must be positive");
  if (!(cfg.dt > 0.0)) throw ValidationError("sde: dt must be positive");
  if (!(cfg.r > cfg.dt))
    throw ValidationError(
        "sde: r must exceed dt (the first occupation weight dt/r must stay "
        "below 1)");
  if (!(cfg.t_final > 0.0))
    throw ValidationError("sde: horizon t_final must be positive");
  if (cfg.thin_max != 0 && cfg.thin_max < 16)
    throw ValidationError("sde: thin_max must be 0 (disabled) or >= 16");
  mu0.validate();

  // The step must resolve the drift at the start point.
  const ConvolvedInteraction conv(W, mu0);
  const Vec2 drift = (V.grad(cfg.x0) + conv.grad(cfg.x0)) * -1.0;
  if (cfg.dt * drift.norm() > 1e-2) {
    std::ostringstream os;
    os << "sde: dt = " << cfg.dt << " too large for the drift at x0 (|b(x0)| = "
       << drift.norm() << ", need dt * |b| <= 1e-2)";
    throw ValidationError(os.str());
  }
  const int n_steps = static_cast<int>(std::ceil(cfg.t_final / cfg.dt - 1e-9));
  for (double s : cfg.snapshot_times) {
    if (s < 0.0) throw ValidationError("sde: snapshot times must be >= 0");
    if (std::llround(s / cfg.dt) > n_steps)
      throw ValidationError("sde: snapshot time " + std::to_string(s) +
                            " lies beyond the horizon");
  }
}

enum class DriftMode { Frozen, SelfLinear, SelfCloud };

SdePath run_path(const ConfinementPotential& V, const InteractionPotential& W,
                 const SdeConfig& cfg, const ParticleMeasure& mu0,
                 DriftMode mode) {
  validate_config(V, W, cfg, mu0);
  const double guard = validated_guard(V, cfg);
  const int n_steps = static_cast<int>(std::ceil(cfg.t_final / cfg.dt - 1e-9));
  const double dt = cfg.dt;
  const double sqdt = std::sqrt(dt);

  // Noise and thinning use independent engines so resampling never shifts
  // the Brownian increments.
  std::mt19937_64 noise_rng(cfg.seed);
  std::mt19937_64 aux_rng(splitmix64(cfg.seed ^ 0xA76B39F1ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Frozen mode: the drift convolution uses the fixed measure throughout.
  const ConvolvedInteraction frozen_conv(W, mu0);
  const Mat2 A = W.linear_matrix();

  Cloud cloud;
  cloud.points = mu0.points;
  cloud.raw = mu0.weights;
  Accum acc;
  acc.mean = mu0.mean();
  acc.int_v = mu0.integrate([&](Vec2 p) { return V.value(p); });

  // Snapshot schedule keyed by step index.
  std::vector<std::pair<long long, double>> snap_steps;
  for (double s : cfg.snapshot_times)
    snap_steps.emplace_back(std::llround(s / dt), s);
  std::sort(snap_steps.begin(), snap_steps.end());
  snap_steps.erase(std::unique(snap_steps.begin(), snap_steps.end(),
                               [](auto& a, auto& b) { return a.first == b.first; }),
                   snap_steps.end());
  std::size_t next_snap = 0;

  SdePath path;
  path.r = cfg.r;
  path.dt = dt;
  path.t_final = n_steps * dt;

  Vec2 x = cfg.x0;
  auto record_checkpoint = [&](long long k) {
    SdeCheckpoint cp;
    cp.t = k * dt;
    cp.x = x;
    cp.mean_mu = acc.mean;
    cp.int_v = acc.int_v;
    path.checkpoints.push_back(cp);
    path.sup_int_v = std::max(path.sup_int_v, acc.int_v);
  };
  auto maybe_snapshot = [&](long long k) {
    while (next_snap < snap_steps.size() && snap_steps[next_snap].first == k) {
      path.snapshot_times.push_back(k * dt);
      path.snapshots.push_back(cloud.to_measure());
      ++next_snap;
    }
  };

  record_checkpoint(0);
  maybe_snapshot(0);

  for (long long k = 0; k < n_steps; ++k) {
    const double t = k * dt;
    // Drift with the time-t measure, before the occupation absorbs X_t.
    Vec2 conv_grad;
    switch (mode) {
      case DriftMode::Frozen:
        conv_grad = frozen_conv.grad(x);
        break;
      case DriftMode::SelfLinear:
        conv_grad = A.apply(acc.mean);
        break;
      case DriftMode::SelfCloud: {
        Vec2 s{0.0, 0.0};
        for (std::size_t i = 0; i < cloud.points.size(); ++i)
          s = s + W.grad_x(x, cloud.points[i]) * (cloud.raw[i] * cloud.scale);
        conv_grad = s;
        break;
      }
    }
    const Vec2 drift = (V.grad(x) + conv_grad) * -1.0;

    // Occupation update mu_{t+dt} = (1 - lambda) mu_t + lambda delta_{X_t}.
    const double lambda = dt / (cfg.r + t);
    acc.mean = acc.mean * (1.0 - lambda) + x * lambda;
    acc.int_v = (1.0 - lambda) * acc.int_v + lambda * V.value(x);
    cloud.scale *= 1.0 - lambda;
    cloud.points.push_back(x);
    cloud.raw.push_back(lambda / cloud.scale);

    const Vec2 z{gauss(noise_rng), gauss(noise_rng)};
    x = x + drift * dt + z * sqdt;
    if (!(x.norm() <= guard)) {
      std::ostringstream os;
      os << "sde: |X| = " << x.norm() << " exceeded the explosion guard "
         << guard << " at t = " << t + dt
         << "; check the potentials or the step size";
      throw NumericalAbort(os.str());
    }

    if (cfg.thin_max > 0 &&
        cloud.points.size() >= 2 * static_cast<std::size_t>(cfg.thin_max)) {
      const ParticleMeasure thinned =
          thin(cloud.to_measure(), cfg.thin_max, aux_rng);
      cloud.points = thinned.points;
      cloud.raw = thinned.weights;
      cloud.scale = 1.0;
    }

    const long long k1 = k + 1;
    if ((cfg.checkpoint_stride > 0 && k1 % cfg.checkpoint_stride == 0) ||
        k1 == n_steps)
      record_checkpoint(k1);
    maybe_snapshot(k1);
  }

  path.final_measure = cloud.to_measure();
  path.final_position = x;
  path.final_mean = acc.mean;
  path.final_int_v = acc.int_v;
  return path;
}

}  // namespace

SdePath simulate_frozen(const ConfinementPotential& V,
                        const InteractionPotential& W,
                        const ParticleMeasure& mu, const SdeConfig& cfg) {
  return run_path(V, W, cfg, mu, DriftMode::Frozen);
}

SdePath simulate_self_interacting(const ConfinementPotential& V,
                                  const InteractionPotential& W,
                                  const SdeConfig& cfg,
                                  const ParticleMeasure& mu0) {
  const DriftMode mode =
      W.is_linear() ? DriftMode::SelfLinear : DriftMode::SelfCloud;
  return run_path(V, W, cfg, mu0, mode);
}

double time_change(double t, double r) {
  if (t < 0.0) throw ValidationError("time_change: t must be >= 0");
  if (!(r > 0.0)) throw ValidationError("time_change: r must be positive");
  return r * std::expm1(t);
}

double time_change_inverse(double s, double r) {
  if (s < 0.0) throw ValidationError("time_change_inverse: s must be >= 0");
  if (!(r > 0.0)) throw ValidationError("time_change_inverse: r must be positive");
  return std::log1p(s / r);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replica) {
  return splitmix64(seed ^ splitmix64(replica));
}

std::vector<double> deficit_snapshot_times(const std::vector<double>& t_list,
                                           double t_window, double r,
                                           int n_s) {
  if (t_window < 0.0)
    throw ValidationError("deficit window must be >= 0");
  if (n_s < 1) throw ValidationError("deficit needs n_s >= 1");
  std::vector<double> out;
  for (double t : t_list) {
    if (t < 0.0) throw ValidationError("deficit times must be >= 0");
    for (int j = 0; j <= n_s; ++j)
      out.push_back(time_change(t + j * t_window / n_s, r));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> pseudotrajectory_deficit(
    const SdePath& path, const ConfinementPotential& V,
    const InteractionPotential& W, const std::vector<double>& t_list,
    double t_window, const FunctionDictionary& dict, const GridPtr& grid,
    double flow_dt, int n_s) {
  if (t_window < 0.0)
    throw ValidationError("deficit window must be >= 0");
  if (n_s < 1) throw ValidationError("deficit needs n_s >= 1");
  if (!(flow_dt > 0.0) || flow_dt > 0.5)
    throw ValidationError("deficit flow step must lie in (0, 0.5]");
  if (!grid) throw ValidationError("deficit needs a binning grid");

  const long long n_steps = std::llround(path.t_final / path.dt);
  auto snapshot_at = [&](double diffusion_time) -> const ParticleMeasure& {
    const long long step = std::llround(diffusion_time / path.dt);
    if (step > n_steps) {
      std::ostringstream os;
      os << "deficit: diffusion time " << diffusion_time
         << " lies beyond the simulated horizon " << path.t_final;
      throw ValidationError(os.str());
    }
    for (std::size_t i = 0; i < path.snapshot_times.size(); ++i)
      if (std::llround(path.snapshot_times[i] / path.dt) == step)
        return path.snapshots[i];
    std::ostringstream os;
    os << "deficit: no snapshot at diffusion time " << diffusion_time
       << "; schedule the run with deficit_snapshot_times";
    throw ValidationError(os.str());
  };

  std::vector<double> deficits;
  for (double t : t_list) {
    const GridMeasure2D base = bin_particles(snapshot_at(time_change(t, path.r)), grid);
    if (t_window == 0.0) {
      deficits.push_back(0.0);
      continue;
    }
    GridMeasure2D cur = base;
    double worst = 0.0;
    const double ds = t_window / n_s;
    for (int j = 1; j <= n_s; ++j) {
      const int legs = static_cast<int>(std::ceil(ds / flow_dt - 1e-12));
      for (int l = 0; l < legs; ++l) cur = flow_step(V, W, cur, ds / legs);
      const GridMeasure2D observed = bin_particles(
          snapshot_at(time_change(t + j * ds, path.r)), grid);
      worst = std::max(worst, weak_distance(observed, cur, dict));
    }
    deficits.push_back(worst);
  }
  return deficits;
}

}  // namespace selfdiff
