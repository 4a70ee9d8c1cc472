#include "selfdiff/gibbs.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "selfdiff/errors.hpp"

namespace selfdiff {

namespace {

// Log-space Gibbs density builder: given the per-node exponent, exponentiate
// with max-shift and return the log of the normalizer relative to the grid.
double fill_density(const PolarGrid& g, const std::vector<double>& expo,
                    std::vector<double>& dens) {
  double emax = -std::numeric_limits<double>::infinity();
  for (double e : expo) emax = std::max(emax, e);
  dens.resize(expo.size());
  double z = 0.0;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j) {
      const int k = g.index(i, j);
      const double d = std::exp(expo[k] - emax);
      dens[k] = d;
      z += d * g.weight(i, j);
    }
  for (double& d : dens) d /= z;
  return emax + std::log(z);  // log of int e^{expo}
}

}  // namespace

ConvolvedInteraction::ConvolvedInteraction(const InteractionPotential& W,
                                           const ParticleMeasure& mu) {
  W_ = W;
  linear_ = W.is_linear();
  if (linear_) {
    a_mean_ = W.linear_matrix().apply(mu.mean());
  } else {
    pts_ = mu.points;
    wts_ = mu.weights;
  }
}

ConvolvedInteraction::ConvolvedInteraction(const InteractionPotential& W,
                                           const GridMeasure2D& mu) {
  W_ = W;
  linear_ = W.is_linear();
  if (linear_) {
    a_mean_ = W.linear_matrix().apply(mu.mean());
  } else {
    const PolarGrid& g = *mu.grid;
    pts_.reserve(g.size());
    wts_.reserve(g.size());
    for (int i = 0; i < g.n_rho(); ++i)
      for (int j = 0; j < g.n_angle(); ++j) {
        pts_.push_back(g.point(i, j));
        wts_.push_back(mu.density[g.index(i, j)] * g.weight(i, j));
      }
  }
}

ConvolvedInteraction ConvolvedInteraction::signed_grid(const InteractionPotential& W,
                                                       const GridMeasure2D& nu) {
  // Same construction; signed weights are fine for both branches.
  return ConvolvedInteraction(W, nu);
}

double ConvolvedInteraction::value(Vec2 x) const {
  if (linear_) return x.dot(a_mean_);
  double s = 0.0;
  for (size_t i = 0; i < pts_.size(); ++i) s += wts_[i] * W_.value(x, pts_[i]);
  return s;
}

Vec2 ConvolvedInteraction::grad(Vec2 x) const {
  if (linear_) return a_mean_;
  Vec2 s;
  for (size_t i = 0; i < pts_.size(); ++i) s += W_.grad_x(x, pts_[i]) * wts_[i];
  return s;
}

namespace {

template <class M>
ConvolutionCheck convolve_impl(const InteractionPotential& W, const M& mu, Vec2 x,
                               const ConfinementPotential& V, double kappa) {
  if (!(kappa > 0.0)) throw ValidationError("convolve_interaction: kappa must be > 0");
  const ConvolvedInteraction conv(W, mu);
  ConvolutionCheck out;
  out.value = conv.value(x);
  out.gradient = conv.grad(x);
  out.bound = 2.0 * kappa * v_norm(mu, V) * V.value(x);
  out.within_bound = std::abs(out.value) <= out.bound * (1.0 + 1e-9) + 1e-12;
  return out;
}

}  // namespace

ConvolutionCheck convolve_interaction(const InteractionPotential& W,
                                      const ParticleMeasure& mu, Vec2 x,
                                      const ConfinementPotential& V, double kappa) {
  return convolve_impl(W, mu, x, V, kappa);
}

ConvolutionCheck convolve_interaction(const InteractionPotential& W,
                                      const GridMeasure2D& mu, Vec2 x,
                                      const ConfinementPotential& V, double kappa) {
  return convolve_impl(W, mu, x, V, kappa);
}

namespace {

GibbsResult pi_map_field(const ConfinementPotential& V,
                         const ConvolvedInteraction& conv, GridPtr grid) {
  const PolarGrid& g = *grid;
  std::vector<double> expo_full(g.size()), expo_gamma(g.size());
  for (int i = 0; i < g.n_rho(); ++i) {
    const double vi = V.radial(g.rho(i));
    for (int j = 0; j < g.n_angle(); ++j) {
      const int k = g.index(i, j);
      expo_gamma[k] = -2.0 * vi;
      expo_full[k] = -2.0 * (vi + conv.value(g.point(i, j)));
    }
  }
  GibbsResult out;
  out.measure.grid = grid;
  std::vector<double> gamma_dens;
  const double log_zg = fill_density(g, expo_gamma, gamma_dens);
  const double log_zf = fill_density(g, expo_full, out.measure.density);
  out.log_z = log_zf - log_zg;  // Z(mu) = int e^{-2 W*mu} dgamma
  out.z_value = std::exp(out.log_z);
  return out;
}

}  // namespace

GibbsResult pi_map(const ConfinementPotential& V, const InteractionPotential& W,
                   const ParticleMeasure& mu, GridPtr grid) {
  mu.validate();
  return pi_map_field(V, ConvolvedInteraction(W, mu), grid);
}

GibbsResult pi_map(const ConfinementPotential& V, const InteractionPotential& W,
                   const GridMeasure2D& mu, GridPtr grid) {
  mu.validate();
  return pi_map_field(V, ConvolvedInteraction(W, mu), grid);
}

GridMeasure2D gamma_measure(const ConfinementPotential& V, GridPtr grid) {
  return pi_map_field(V, ConvolvedInteraction(InteractionPotential::none(),
                                              ParticleMeasure::dirac({0, 0})),
                      grid)
      .measure;
}

GridMeasure2D tilted_gibbs_measure(const ConfinementPotential& V, GridPtr grid,
                                   double alpha, double phi) {
  if (!grid) throw ValidationError("tilted measure: grid is null");
  const PolarGrid& g = *grid;
  GridMeasure2D mu;
  mu.grid = grid;
  mu.density.resize(g.size());
  const Vec2 dir = unit(phi);
  std::vector<double> expo(g.size());
  double emax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j) {
      const Vec2 x = g.point(i, j);
      const double e = alpha * x.dot(dir) - 2.0 * V.value(x);
      expo[g.index(i, j)] = e;
      emax = std::max(emax, e);
    }
  double z = 0.0;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j) {
      const int k = g.index(i, j);
      mu.density[k] = std::exp(expo[k] - emax);
      z += mu.density[k] * g.weight(i, j);
    }
  for (double& d : mu.density) d /= z;
  return mu;
}

double free_energy(const ConfinementPotential& V, const InteractionPotential& W,
                   const GridMeasure2D& mu) {
  mu.validate(1e-6);
  const PolarGrid& g = *mu.grid;
  const GridMeasure2D gam = gamma_measure(V, mu.grid);
  double entropy = 0.0;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j) {
      const int k = g.index(i, j);
      const double d = mu.density[k];
      if (d <= 0.0) continue;  // 0 log 0 = 0
      const double gd = gam.density[k];
      if (gd <= 0.0) return std::numeric_limits<double>::infinity();
      entropy += g.weight(i, j) * d * std::log(d / gd);
    }

  double inter = 0.0;
  if (W.is_linear()) {
    const Vec2 m = mu.mean();
    inter = m.dot(W.linear_matrix().apply(m));
  } else {
    // O(n^2) double quadrature; intended for small grids with custom kernels.
    std::vector<Vec2> pts(g.size());
    std::vector<double> wts(g.size());
    for (int i = 0; i < g.n_rho(); ++i)
      for (int j = 0; j < g.n_angle(); ++j) {
        const int k = g.index(i, j);
        pts[k] = g.point(i, j);
        wts[k] = mu.density[k] * g.weight(i, j);
      }
    for (int a = 0; a < g.size(); ++a) {
      if (wts[a] == 0.0) continue;
      double row = 0.0;
      for (int b = 0; b < g.size(); ++b)
        if (wts[b] != 0.0) row += wts[b] * W.value(pts[a], pts[b]);
      inter += wts[a] * row;
    }
  }
  return entropy + inter;
}

GridMeasure2D d_pi(const ConfinementPotential& V, const InteractionPotential& W,
                   const GridMeasure2D& mu, const GridMeasure2D& nu, GridPtr grid) {
  nu.validate_signed();
  if (std::abs(nu.total_mass()) > 1e-10)
    throw ValidationError("d_pi: direction nu must have zero total mass");
  const GibbsResult pim = pi_map(V, W, mu, grid);
  const ConvolvedInteraction wnu = ConvolvedInteraction::signed_grid(W, nu);
  const PolarGrid& g = *grid;
  // Centering constant int W*nu dPi(mu).
  double c = 0.0;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j) {
      const int k = g.index(i, j);
      c += wnu.value(g.point(i, j)) * pim.measure.density[k] * g.weight(i, j);
    }
  GridMeasure2D out;
  out.grid = grid;
  out.density.resize(g.size());
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j) {
      const int k = g.index(i, j);
      out.density[k] = -2.0 * (wnu.value(g.point(i, j)) - c) * pim.measure.density[k];
    }
  return out;
}

double d_free_energy(const ConfinementPotential& V, const InteractionPotential& W,
                     const GridMeasure2D& mu, const GridMeasure2D& nu) {
  if (!W.is_symmetric())
    throw ValidationError("d_free_energy: requires a symmetric interaction");
  nu.validate_signed();
  if (std::abs(nu.total_mass()) > 1e-10)
    throw ValidationError("d_free_energy: direction nu must have zero total mass");
  if (!same_grid(*mu.grid, *nu.grid))
    throw ValidationError("d_free_energy: mu and nu must share a grid");
  const PolarGrid& g = *mu.grid;
  const GridMeasure2D gam = gamma_measure(V, mu.grid);
  const ConvolvedInteraction wmu(W, mu);
  double s = 0.0;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j) {
      const int k = g.index(i, j);
      const double nd = nu.density[k];
      if (nd == 0.0) continue;
      const double d = mu.density[k];
      if (d <= 0.0)
        throw ValidationError("d_free_energy: mu must have positive density where nu charges");
      s += g.weight(i, j) * nd *
           (std::log(d / gam.density[k]) + 2.0 * wmu.value(g.point(i, j)));
    }
  return s;
}

FixedPointOutcome fixed_point_iterate(const ConfinementPotential& V,
                                      const InteractionPotential& W,
                                      const GridMeasure2D& mu0,
                                      const FixedPointOptions& opts) {
  if (!(opts.damping > 0.0) || opts.damping > 1.0)
    throw ValidationError("fixed_point_iterate: damping must be in (0, 1]");
  if (!(opts.tol > 0.0)) throw ValidationError("fixed_point_iterate: tol must be > 0");
  mu0.validate(1e-6);
  FixedPointOutcome out;
  out.measure = mu0;
  const bool track_energy = W.is_symmetric();
  double prev_energy = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    const GibbsResult pim = pi_map(V, W, out.measure, out.measure.grid);
    const double res = v_norm_diff(pim.measure, out.measure, V);
    FixedPointHistoryRow row;
    row.iter = it;
    row.residual = res;
    row.mean = out.measure.mean();
    row.energy = track_energy ? free_energy(V, W, pim.measure)
                              : std::numeric_limits<double>::quiet_NaN();
    if (track_energy) {
      if (row.energy > prev_energy + 1e-10) out.energy_monotone = false;
      prev_energy = row.energy;
    }
    out.history.push_back(row);
    out.iterations = it + 1;
    out.residual = res;
    if (res < opts.tol) {
      out.converged = true;
      break;
    }
    for (int k = 0; k < static_cast<int>(out.measure.density.size()); ++k)
      out.measure.density[k] = (1.0 - opts.damping) * out.measure.density[k] +
                               opts.damping * pim.measure.density[k];
  }
  return out;
}

SpectralGapResult spectral_gap_1d(const std::function<double(double)>& U,
                                  double a, double b, int n) {
  if (n < 64) throw ValidationError("spectral_gap_1d: need at least 64 nodes");
  if (!(b > a)) throw ValidationError("spectral_gap_1d: empty interval");
  auto gap_at = [&](int m, double* lam0) {
    const double h = (b - a) / m;
    // Cell-centered nodes; no-flux boundaries. pi_i = e^{-2U(x_i)} with a
    // shift by min U (the generator is invariant under scaling of pi).
    std::vector<double> x(m), logpi(m);
    double umin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      x[i] = a + (i + 0.5) * h;
      umin = std::min(umin, U(x[i]));
    }
    for (int i = 0; i < m; ++i) logpi[i] = -2.0 * (U(x[i]) - umin);
    Eigen::VectorXd diag(m), sub(m - 1);
    std::vector<double> mhalf(m + 1, 0.0);  // conductances at interfaces
    for (int i = 1; i < m; ++i)
      mhalf[i] = std::exp(-2.0 * (U(a + i * h) - umin));
    for (int i = 0; i < m; ++i) {
      const double pi_i = std::exp(logpi[i]);
      diag[i] = (mhalf[i] + mhalf[i + 1]) / (2.0 * h * h * pi_i);
      if (i + 1 < m)
        sub[i] = -mhalf[i + 1] /
                 (2.0 * h * h * std::exp(0.5 * (logpi[i] + logpi[i + 1])));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (lam0) *lam0 = es.eigenvalues()[0];
    return es.eigenvalues()[1] - es.eigenvalues()[0];
  };
  SpectralGapResult out;
  out.gap = gap_at(n, &out.lambda0);
  out.gap_refined = gap_at(2 * n, nullptr);
  out.unreliable = std::abs(out.gap - out.gap_refined) >
                   0.05 * std::max(std::abs(out.gap_refined), 1e-300);
  return out;
}

}  // namespace selfdiff
