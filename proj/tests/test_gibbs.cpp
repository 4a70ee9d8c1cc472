#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "selfdiff/errors.hpp"
#include "selfdiff/gibbs.hpp"
#include "selfdiff/measures.hpp"
#include "selfdiff/quadrature.hpp"

#include "oracles.hpp"

using namespace selfdiff;

namespace {

const auto kQuartic = ConfinementPotential::quartic_radial(1.0, 0.0, 1.0);
const auto kDoubleWell = ConfinementPotential::quartic_radial(1.0, -4.5, 6.0625);

// Mean component of the tilted measure e^{a (x, v)} gamma(dx) along v,
// via the Bessel series: <rho cos> = int rho I_1(a rho) g / int I_0(a rho) g.
double oracle_tilt_mean(const ConfinementPotential& V, double a, double rho_max) {
  const auto dens = [&](double rho) {
    return rho * std::exp(-2.0 * V.radial(rho));
  };
  const double num = oracle::integrate(
      [&](double rho) { return rho * oracle::bessel_i1(a * rho) * dens(rho); },
      0.0, rho_max, 1e-14);
  const double den = oracle::integrate(
      [&](double rho) { return oracle::bessel_i0(a * rho) * dens(rho); }, 0.0,
      rho_max, 1e-14);
  return num / den;
}

}  // namespace

TEST_CASE("pi_map with zero interaction is gamma, Z = 1 exactly") {
  const GridPtr grid = make_polar_grid(3.0, 150, 192);
  const auto W = InteractionPotential::none();
  const GridMeasure2D mu = tilted_gibbs_measure(kQuartic, grid, 1.2, 0.5);
  const GibbsResult res = pi_map(kQuartic, W, mu);
  CHECK(res.z_value == 1.0);
  CHECK(res.log_z == 0.0);
  const GridMeasure2D gamma = gamma_measure(kQuartic, grid);
  CHECK(v_norm_diff(res.measure, gamma, kQuartic) < 1e-12);
}

TEST_CASE("pi_map mean under linear rotation matches the Bessel oracle") {
  const GridPtr grid = make_polar_grid(3.0, 200, 256);
  const double theta = 2.2;
  const auto W = InteractionPotential::linear_rotation(theta);
  for (double alpha : {0.4, 1.0, 2.0}) {
    for (double phi : {0.0, 1.1}) {
      const GridMeasure2D mu = tilted_gibbs_measure(kDoubleWell, grid, alpha, phi);
      const Vec2 mmu = mu.mean();
      const GibbsResult res = pi_map(kDoubleWell, W, mu);
      res.measure.validate();

      // For W(x,y) = (x, R y) the whole measure only enters through its
      // mean: Pi(mu) is tilted by a = -2 R(theta) mean(mu).
      const Vec2 a_vec = Mat2::rotation(theta).apply(mmu) * -2.0;
      const double a = a_vec.norm();
      const Vec2 mres = res.measure.mean();
      const double mref = oracle_tilt_mean(kDoubleWell, a, 3.0);
      CHECK(mres.norm() == doctest::Approx(mref).epsilon(1e-9));
      const double phase_gap = std::remainder(mres.angle() - a_vec.angle(),
                                              2.0 * std::numbers::pi);
      CHECK(std::abs(phase_gap) < 1e-10);

      // Z(mu) = int e^{-2 W*mu} dgamma = H(a)/H(0) by the same reduction.
      const auto dens = [&](double rho) {
        return rho * std::exp(-2.0 * kDoubleWell.radial(rho));
      };
      const double zref =
          oracle::integrate(
              [&](double rho) {
                return oracle::bessel_i0(a * rho) * dens(rho);
              },
              0.0, 3.0, 1e-14) /
          oracle::integrate(dens, 0.0, 3.0, 1e-14);
      CHECK(res.z_value == doctest::Approx(zref).epsilon(1e-10));
      CHECK(res.log_z == doctest::Approx(std::log(zref)).epsilon(1e-9));
    }
  }
}

TEST_CASE("pi_map accepts particle measures") {
  const GridPtr grid = make_polar_grid(3.0, 200, 256);
  const double theta = 1.0;
  const auto W = InteractionPotential::linear_rotation(theta);
  ParticleMeasure cloud;
  cloud.points = {{0.5, 0.0}, {0.1, -0.3}, {-0.2, 0.4}};
  cloud.weights = {0.2, 0.5, 0.3};
  const GibbsResult res = pi_map(kQuartic, W, cloud, grid);
  res.measure.validate();
  // Only the mean enters for linear kernels; check the image against the
  // same Bessel oracle as the grid overload.
  const Vec2 a_vec = Mat2::rotation(theta).apply(cloud.mean()) * -2.0;
  const double mref = oracle_tilt_mean(kQuartic, a_vec.norm(), 3.0);
  CHECK(res.measure.mean().norm() == doctest::Approx(mref).epsilon(1e-9));
  const double phase_gap = std::remainder(
      res.measure.mean().angle() - a_vec.angle(), 2.0 * std::numbers::pi);
  CHECK(std::abs(phase_gap) < 1e-10);
}

TEST_CASE("convolution bound holds with the fitted kappa") {
  const auto W = InteractionPotential::linear_rotation(2.6);
  const HypothesisReport rep = check_hypotheses(kQuartic, W);
  const GridPtr grid = make_polar_grid(3.0, 100, 128);
  const GridMeasure2D mu = tilted_gibbs_measure(kQuartic, grid, 1.0, 0.3);
  for (const Vec2 x : {Vec2{0.0, 0.0}, Vec2{1.4, -2.0}, Vec2{-2.5, 2.5}}) {
    const ConvolutionCheck ck = convolve_interaction(W, mu, x, kQuartic, rep.kappa);
    CHECK(ck.within_bound);
    CHECK(std::abs(ck.value) <= ck.bound * (1.0 + 1e-12));
  }
}

TEST_CASE("free energy: zero at gamma, positive elsewhere, tilt formula") {
  const GridPtr grid = make_polar_grid(3.0, 200, 256);
  const auto W0 = InteractionPotential::none();
  const GridMeasure2D gamma = gamma_measure(kQuartic, grid);
  CHECK(free_energy(kQuartic, W0, gamma) == doctest::Approx(0.0).epsilon(1e-12));

  // For W = 0, F(mu) is the relative entropy; for the tilted family there is
  // a closed form: KL(tilt_a || gamma) = a m(a) - log(H(a)/H(0)) with m(a)
  // the mean component along the tilt.
  for (double a : {0.6, 1.7}) {
    const GridMeasure2D mu = tilted_gibbs_measure(kQuartic, grid, a, 0.0);
    const double f = free_energy(kQuartic, W0, mu);
    CHECK(f > 0.0);
    const auto dens = [&](double rho) {
      return rho * std::exp(-2.0 * kQuartic.radial(rho));
    };
    const double zr =
        oracle::integrate(
            [&](double rho) { return oracle::bessel_i0(a * rho) * dens(rho); },
            0.0, 3.0, 1e-14) /
        oracle::integrate(dens, 0.0, 3.0, 1e-14);
    const double kl = a * oracle_tilt_mean(kQuartic, a, 3.0) - std::log(zr);
    CHECK(f == doctest::Approx(kl).epsilon(1e-9));
  }

  // Symmetric interaction adds the quadratic term W*mu integrated once more:
  // for W = -(x,y) that is -|mean|^2.
  const auto Wd = InteractionPotential::symmetric_dot();
  const GridMeasure2D mu = tilted_gibbs_measure(kQuartic, grid, 1.1, 0.4);
  const double fw = free_energy(kQuartic, Wd, mu);
  const double f0 = free_energy(kQuartic, W0, mu);
  CHECK(fw == doctest::Approx(f0 - mu.mean().norm2()).epsilon(1e-11));
}

TEST_CASE("d_pi matches central finite differences") {
  const GridPtr grid = make_polar_grid(3.0, 150, 192);
  const auto W = InteractionPotential::linear_rotation(2.8);
  const GridMeasure2D mu = tilted_gibbs_measure(kDoubleWell, grid, 0.8, 0.2);
  const GridMeasure2D nu_a = tilted_gibbs_measure(kDoubleWell, grid, 1.4, 2.0);
  const GridMeasure2D nu_b = tilted_gibbs_measure(kDoubleWell, grid, 0.3, 4.1);

  GridMeasure2D nu;  // zero-mass direction nu_a - nu_b
  nu.grid = grid;
  nu.density.resize(nu_a.density.size());
  for (std::size_t i = 0; i < nu.density.size(); ++i)
    nu.density[i] = nu_a.density[i] - nu_b.density[i];
  nu.validate_signed();

  const GridMeasure2D der = d_pi(kDoubleWell, W, mu, nu);

  const double eps = 1e-5;
  GridMeasure2D up, dn;
  up.grid = dn.grid = grid;
  up.density.resize(nu.density.size());
  dn.density.resize(nu.density.size());
  for (std::size_t i = 0; i < nu.density.size(); ++i) {
    up.density[i] = mu.density[i] + eps * nu.density[i];
    dn.density[i] = mu.density[i] - eps * nu.density[i];
  }
  const GridMeasure2D pi_up = pi_map(kDoubleWell, W, up).measure;
  const GridMeasure2D pi_dn = pi_map(kDoubleWell, W, dn).measure;

  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < nu.density.size(); ++i) {
    const double fd = (pi_up.density[i] - pi_dn.density[i]) / (2.0 * eps);
    worst = std::max(worst, std::abs(fd - der.density[i]));
    scale = std::max(scale, std::abs(der.density[i]));
  }
  CHECK(worst < 1e-6 * std::max(scale, 1.0));

  // The differential of a map into probability measures has zero mass.
  double mass = 0.0;
  for (int i = 0; i < grid->n_rho(); ++i)
    for (int j = 0; j < grid->n_angle(); ++j)
      mass += der.density[grid->index(i, j)] * grid->weight(i, j);
  CHECK(std::abs(mass) < 1e-10);
}

TEST_CASE("d_free_energy matches central finite differences") {
  const GridPtr grid = make_polar_grid(3.0, 150, 192);
  const auto W = InteractionPotential::symmetric_dot();
  const GridMeasure2D mu = tilted_gibbs_measure(kDoubleWell, grid, 0.9, 1.0);
  const GridMeasure2D nu_a = tilted_gibbs_measure(kDoubleWell, grid, 1.2, 2.5);
  const GridMeasure2D nu_b = tilted_gibbs_measure(kDoubleWell, grid, 0.5, 0.0);

  GridMeasure2D nu;
  nu.grid = grid;
  nu.density.resize(nu_a.density.size());
  for (std::size_t i = 0; i < nu.density.size(); ++i)
    nu.density[i] = nu_a.density[i] - nu_b.density[i];

  const double der = d_free_energy(kDoubleWell, W, mu, nu);
  const double eps = 1e-5;
  GridMeasure2D up, dn;
  up.grid = dn.grid = grid;
  up.density.resize(nu.density.size());
  dn.density.resize(nu.density.size());
  for (std::size_t i = 0; i < nu.density.size(); ++i) {
    up.density[i] = mu.density[i] + eps * nu.density[i];
    dn.density[i] = mu.density[i] - eps * nu.density[i];
  }
  const double fd = (free_energy(kDoubleWell, W, up) -
                     free_energy(kDoubleWell, W, dn)) / (2.0 * eps);
  CHECK(der == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("fixed point iteration lands on the tilted equilibrium") {
  const GridPtr grid = make_polar_grid(3.0, 200, 256);
  const auto W = InteractionPotential::symmetric_dot();
  const GridMeasure2D mu0 = tilted_gibbs_measure(kDoubleWell, grid, 0.8, 0.0);
  const FixedPointOutcome out = fixed_point_iterate(kDoubleWell, W, mu0);
  CHECK(out.converged);
  CHECK(out.residual < 1e-10);
  CHECK(out.energy_monotone);
  CHECK(!out.history.empty());
  // The mean stays on the initial tilt axis and the fixed point is a genuine
  // Pi fixed point.
  const Vec2 m = out.measure.mean();
  CHECK(std::abs(m.y) < 1e-10);
  const GibbsResult back = pi_map(kDoubleWell, W, out.measure);
  CHECK(v_norm_diff(back.measure, out.measure, kDoubleWell) < 1e-9);
}

TEST_CASE("spectral gap of the 1D double-well generator") {
  // Oracle case: U = x^2/2 gives the Ornstein-Uhlenbeck gap 1 for the
  // generator (1/2) d^2/dx^2 - U' d/dx.
  const SpectralGapResult ou = spectral_gap_1d(
      [](double x) { return 0.5 * x * x; }, -8.0, 8.0, 600);
  CHECK(ou.lambda0 == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(ou.gap == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(!ou.unreliable);

  // A barrier shrinks the gap far below the OU value.
  const SpectralGapResult well = spectral_gap_1d(
      [](double x) { return (x * x - 2.25) * (x * x - 2.25); }, -4.0, 4.0, 800);
  CHECK(well.gap < 0.2);
  CHECK(well.gap > 0.0);
}

TEST_CASE("tilted gibbs measure basics") {
  const GridPtr grid = make_polar_grid(3.0, 120, 128);
  const GridMeasure2D g0 = tilted_gibbs_measure(kQuartic, grid, 0.0, 0.0);
  const GridMeasure2D gamma = gamma_measure(kQuartic, grid);
  CHECK(v_norm_diff(g0, gamma, kQuartic) < 1e-12);
  const GridMeasure2D g1 = tilted_gibbs_measure(kQuartic, grid, 1.0, 2.0);
  g1.validate();
  CHECK(g1.mean().angle() == doctest::Approx(2.0).epsilon(1e-9));
}
