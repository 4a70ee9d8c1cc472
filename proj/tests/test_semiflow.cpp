#include <doctest.h>

#include <cmath>
#include <numbers>

#include "selfdiff/errors.hpp"
#include "selfdiff/rotation2d.hpp"
#include "selfdiff/semiflow.hpp"

using namespace selfdiff;

namespace {

const auto kQuartic = ConfinementPotential::quartic_radial(1.0, 0.0, 1.0);
const auto kDoubleWell = ConfinementPotential::quartic_radial(1.0, -4.5, 6.0625);

}  // namespace

TEST_CASE("flow step is a convex combination preserving the simplex") {
  const GridPtr grid = make_polar_grid(3.0, 120, 128);
  const auto W = InteractionPotential::linear_rotation(2.0);
  const GridMeasure2D mu = tilted_gibbs_measure(kQuartic, grid, 1.0, 0.7);
  const GridMeasure2D next = flow_step(kQuartic, W, mu, 0.05);
  next.validate(1e-13);
  CHECK(next.total_mass() == doctest::Approx(1.0).epsilon(1e-14));

  SUBCASE("step size validation") {
    CHECK_THROWS_AS(flow_step(kQuartic, W, mu, 0.0), ValidationError);
    CHECK_THROWS_AS(flow_step(kQuartic, W, mu, 0.6), ValidationError);
  }
}

TEST_CASE("with zero interaction the flow is an explicit exponential blend") {
  // Pi is constant (gamma), so mu_t = e^{-t} mu0 + (1 - e^{-t}) gamma holds
  // exactly and both schemes must reproduce it node by node.
  const GridPtr grid = make_polar_grid(3.0, 120, 128);
  const auto W0 = InteractionPotential::none();
  const GridMeasure2D mu0 = tilted_gibbs_measure(kQuartic, grid, 1.4, 0.4);
  const GridMeasure2D gamma = gamma_measure(kQuartic, grid);

  for (const FlowScheme scheme :
       {FlowScheme::ExponentialEuler, FlowScheme::ExponentialTrapezoid}) {
    FlowOptions opts;
    opts.scheme = scheme;
    const FlowTrajectory traj = integrate_flow(kQuartic, W0, mu0, 1.0, 0.1, opts);
    const double w = std::exp(-1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < gamma.density.size(); ++i) {
      const double expect = w * mu0.density[i] + (1.0 - w) * gamma.density[i];
      worst = std::max(worst, std::abs(traj.final_state.density[i] - expect));
    }
    CHECK(worst < 1e-13);
  }
}

TEST_CASE("trajectory recording: times, means, monotone gamma distance") {
  const GridPtr grid = make_polar_grid(3.0, 150, 192);
  const auto W = InteractionPotential::linear_rotation(1.0);  // subcritical
  const GridMeasure2D mu0 = tilted_gibbs_measure(kDoubleWell, grid, 1.0, 0.0);
  FlowOptions opts;
  opts.snapshot_stride = 10;
  const FlowTrajectory traj = integrate_flow(kDoubleWell, W, mu0, 2.0, 0.01, opts);

  REQUIRE(traj.times.size() == 201);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(2.0));
  CHECK(traj.means.size() == traj.times.size());
  CHECK(traj.vnorm_to_gamma.size() == traj.times.size());
  CHECK(traj.residual_pi.size() == traj.times.size());
  REQUIRE(!traj.snapshots.empty());
  CHECK(traj.snapshot_times.back() == doctest::Approx(2.0));

  // Stability of gamma needs cos(theta) m2 > -1/2 (the linear rate at the
  // origin is -1 - 2 cos(theta) m2).  cos(1.0) > 0, so the tilt decays at
  // least like e^{-t} and two time units shrink the distance by ~e^{-2}.
  CHECK(traj.vnorm_to_gamma.back() < 0.25 * traj.vnorm_to_gamma.front());
  // The fixed-point residual shrinks too.
  CHECK(traj.residual_pi.back() < traj.residual_pi.front());
}

TEST_CASE("mean dynamics follow the reduced ODE") {
  const GridPtr grid = make_polar_grid(3.0, 200, 256);
  const double theta = 2.5;
  const auto W = InteractionPotential::linear_rotation(theta);
  const RadialDensity rd = RadialDensity::from_potential(kDoubleWell, 3.0);

  const double alpha_tilt = 1.1, phi0 = 0.8;
  const GridMeasure2D mu0 = tilted_gibbs_measure(kDoubleWell, grid, alpha_tilt, phi0);
  // The reduced state tracks twice the current mean.
  const double alpha0 = 2.0 * mu0.mean().norm();
  const ReducedTrajectory ref =
      integrate_reduced(rd, theta, {alpha0, phi0}, 2.0, 0.01);

  FlowOptions opts;
  opts.scheme = FlowScheme::ExponentialTrapezoid;
  const FlowTrajectory traj = integrate_flow(kDoubleWell, W, mu0, 2.0, 0.01, opts);
  REQUIRE(traj.times.size() == ref.times.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const Vec2 want = unit(ref.sigma[k]) * (0.5 * ref.alpha[k]);
    worst = std::max(worst, (traj.means[k] - want).norm());
  }
  CHECK(worst < 5e-4);
}

TEST_CASE("energy decreases along symmetric flows") {
  const GridPtr grid = make_polar_grid(3.0, 150, 192);
  const auto W = InteractionPotential::symmetric_dot();
  const GridMeasure2D mu0 = tilted_gibbs_measure(kDoubleWell, grid, 0.6, 0.0);
  const FlowTrajectory traj = integrate_flow(kDoubleWell, W, mu0, 3.0, 0.01);
  REQUIRE(!traj.energies.empty());
  CHECK(traj.energy_monotone);
  for (std::size_t k = 1; k < traj.energies.size(); ++k)
    CHECK(traj.energies[k] <= traj.energies[k - 1] + 1e-8);
  // The flow heads into the supercritical fixed point: energy strictly drops.
  CHECK(traj.energies.back() < traj.energies.front() - 1e-3);
}

TEST_CASE("picard iteration contracts on a short cylinder") {
  const GridPtr grid = make_polar_grid(3.0, 100, 128);
  const auto W = InteractionPotential::linear_rotation(2.8);
  const GridMeasure2D mu0 = tilted_gibbs_measure(kDoubleWell, grid, 0.9, 0.0);

  const PicardResult pr = picard_local(kDoubleWell, W, mu0, 0.2, 6);
  CHECK(pr.epsilon == doctest::Approx(0.2));
  CHECK(pr.c_beta > 0.0);
  CHECK(pr.c_beta_prime > 0.0);
  CHECK(pr.predicted_ratio < 1.0);
  REQUIRE(pr.sup_distances.size() == 6);
  // Successive Picard distances shrink at least at the certified rate.
  for (std::size_t k = 1; k < pr.sup_distances.size(); ++k)
    CHECK(pr.sup_distances[k] <=
          pr.sup_distances[k - 1] * pr.predicted_ratio * 1.05 + 1e-15);
  // Every curve sample stays a probability measure.
  for (const GridMeasure2D& m : pr.final_curve)
    CHECK(m.total_mass() == doctest::Approx(1.0).epsilon(1e-13));

  SUBCASE("horizon violating the cylinder conditions is rejected") {
    CHECK_THROWS_WITH_AS(picard_local(kDoubleWell, W, mu0, 50.0, 3),
                         doctest::Contains("C'_beta"), ValidationError);
  }
}

TEST_CASE("hull contraction certificate") {
  const GridPtr grid = make_polar_grid(3.0, 100, 128);

  SUBCASE("rotation instance") {
    const auto W = InteractionPotential::linear_rotation(0.75 * std::numbers::pi);
    const GridMeasure2D mu0 = tilted_gibbs_measure(kDoubleWell, grid, 1.2, 0.3);
    const HullContractionReport rep =
        hull_contraction_check(kDoubleWell, W, mu0, 2.0, 0.05, 24);
    CHECK(rep.pass);
    CHECK(!rep.degenerate);
    CHECK(rep.max_ratio <= 1.0 + 1e-6);
    CHECK(rep.hull_size >= 24);
    REQUIRE(!rep.rows.empty());
    for (const HullCheckRow& row : rep.rows) CHECK(row.dist <= row.bound * (1.0 + 1e-6));
  }

  SUBCASE("zero interaction collapses the hull onto gamma") {
    const auto W0 = InteractionPotential::none();
    const GridMeasure2D mu0 = tilted_gibbs_measure(kQuartic, grid, 1.0, 0.0);
    const HullContractionReport rep =
        hull_contraction_check(kQuartic, W0, mu0, 1.0, 0.05, 8);
    CHECK(rep.degenerate);
    CHECK(rep.pass);
  }
}
