#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "selfdiff/errors.hpp"
#include "selfdiff/potentials.hpp"

using namespace selfdiff;

TEST_CASE("quartic radial potential: values and gradients by hand") {
  const auto V = ConfinementPotential::quartic_radial(1.0, 0.0, 1.0);
  // V = rho^4 + 1, grad = 4 rho^2 x.
  CHECK(V.value({0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(V.value({1.0, 2.0}) == doctest::Approx(26.0).epsilon(1e-15));
  const Vec2 g = V.grad({1.0, 2.0});
  CHECK(g.x == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(g.y == doctest::Approx(40.0).epsilon(1e-14));
  CHECK(V.radial(2.0) == doctest::Approx(17.0).epsilon(1e-15));
}

TEST_CASE("gradient and Hessian match finite differences") {
  const auto V = ConfinementPotential::quartic_radial(1.0, -4.5, 6.0625);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  const double h = 1e-6;
  for (int trial = 0; trial < 25; ++trial) {
    const Vec2 x{u(rng), u(rng)};
    const Vec2 g = V.grad(x);
    const double fdx =
        (V.value({x.x + h, x.y}) - V.value({x.x - h, x.y})) / (2.0 * h);
    const double fdy =
        (V.value({x.x, x.y + h}) - V.value({x.x, x.y - h})) / (2.0 * h);
    CHECK(g.x == doctest::Approx(fdx).epsilon(1e-6));
    CHECK(g.y == doctest::Approx(fdy).epsilon(1e-6));

    const Mat2 H = V.hess(x);
    CHECK(H.a12 == doctest::Approx(H.a21).epsilon(1e-13));
    const Vec2 gpx = V.grad({x.x + h, x.y}), gmx = V.grad({x.x - h, x.y});
    CHECK(H.a11 == doctest::Approx((gpx.x - gmx.x) / (2.0 * h)).epsilon(5e-5));
    CHECK(H.a21 == doctest::Approx((gpx.y - gmx.y) / (2.0 * h)).epsilon(5e-5));
  }
}

TEST_CASE("rotation matrix is counter-clockwise") {
  const Mat2 R = Mat2::rotation(std::numbers::pi / 2.0);
  const Vec2 e1{1.0, 0.0};
  const Vec2 r = R.apply(e1);
  CHECK(r.x == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.y == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("linear rotation interaction: W(x,y) = (x, R(theta) y)") {
  const double theta = 0.7;
  const auto W = InteractionPotential::linear_rotation(theta);
  const Vec2 x{1.3, -0.4}, y{0.2, 2.0};
  const double c = std::cos(theta), s = std::sin(theta);
  const Vec2 ry{c * y.x - s * y.y, s * y.x + c * y.y};
  CHECK(W.value(x, y) == doctest::Approx(x.x * ry.x + x.y * ry.y).epsilon(1e-14));
  const Vec2 gx = W.grad_x(x, y);
  CHECK(gx.x == doctest::Approx(ry.x).epsilon(1e-14));
  CHECK(gx.y == doctest::Approx(ry.y).epsilon(1e-14));
  CHECK(W.theta() == doctest::Approx(theta));
  CHECK(!W.is_zero());
  CHECK(W.is_linear());
}

TEST_CASE("symmetric dot interaction equals rotation by pi") {
  const auto Wd = InteractionPotential::symmetric_dot();
  const auto Wr = InteractionPotential::linear_rotation(std::numbers::pi);
  CHECK(Wd.is_symmetric());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec2 x{u(rng), u(rng)}, y{u(rng), u(rng)};
    CHECK(Wd.value(x, y) == doctest::Approx(-(x.x * y.x + x.y * y.y)).epsilon(1e-14));
    CHECK(Wd.value(x, y) == doctest::Approx(Wr.value(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("zero interaction") {
  const auto W = InteractionPotential::none();
  CHECK(W.is_zero());
  CHECK(W.value({1.0, 2.0}, {3.0, 4.0}) == 0.0);
  const Vec2 g = W.grad_x({1.0, 2.0}, {3.0, 4.0});
  CHECK(g.x == 0.0);
  CHECK(g.y == 0.0);
}

TEST_CASE("hypothesis check passes on a strictly convex instance") {
  // b > 0 keeps Hess V positive at the origin; the rotation kernel is
  // sign-indefinite, so positivity needs the quadratic gauge split
  // W + (lambda/2)|x|^2 + |y|^2/(2 lambda) >= 0.
  const auto V = ConfinementPotential::quartic_radial(1.0, 1.0, 1.0);
  const auto W = InteractionPotential::linear_rotation(2.0);
  const HypothesisReport rep = check_hypotheses(V, W, 3.0, 41, 1e-9, 1.0);
  CHECK(rep.all_pass());
  CHECK(rep.items.size() == 5);
  CHECK(rep.kappa > 0.0);
  CHECK(rep.convexity_K > 0.0);
  CHECK(!rep.to_text().empty());

  // Without the gauge the same pair must fail positivity, nothing else.
  const HypothesisReport raw = check_hypotheses(V, W);
  for (const auto& item : raw.items)
    CHECK(item.pass == (item.id != "i"));
}

TEST_CASE("hypothesis check reports the double-well convexity violation") {
  // V = (rho^2 - 2.25)^2 + 1 is not convex near the origin; the report must
  // say so instead of papering over it, and every other item still holds.
  const auto V = ConfinementPotential::quartic_radial(1.0, -4.5, 6.0625);
  const auto W = InteractionPotential::none();
  const HypothesisReport rep = check_hypotheses(V, W);
  CHECK(!rep.all_pass());
  int failed = 0;
  for (const auto& item : rep.items)
    if (!item.pass) {
      ++failed;
      CHECK(item.id == "ii");
    }
  CHECK(failed == 1);
  CHECK(rep.convexity_K < 0.0);
}

TEST_CASE("auto rho_max of the stock instances") {
  // By hand: 2(V - min V) >= 80 at rho = 40^{1/4} ~ 2.515 (quartic),
  // rho = sqrt(2.25 + sqrt(40)) ~ 2.928 (double-well) and
  // rho = sqrt(1 + sqrt(40)) ~ 2.707 (near-critical); all round up to 3.
  CHECK(auto_rho_max(ConfinementPotential::quartic_radial(1.0, 0.0, 1.0)) ==
        doctest::Approx(3.0));
  CHECK(auto_rho_max(ConfinementPotential::quartic_radial(1.0, -4.5, 6.0625)) ==
        doctest::Approx(3.0));
  CHECK(auto_rho_max(ConfinementPotential::quartic_radial(1.0, -2.0, 2.0)) ==
        doctest::Approx(3.0));
}

TEST_CASE("potential validation") {
  CHECK_THROWS_AS(ConfinementPotential::quartic_radial(-1.0, 0.0, 1.0),
                  ValidationError);
  CHECK_THROWS_AS(ConfinementPotential::quartic_radial(0.0, 0.0, 1.0),
                  ValidationError);
}
