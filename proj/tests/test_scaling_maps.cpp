#include "vskgp/scaling_maps.hpp"
#include "vskgp/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace vskgp;
using Catch::Approx;

TEST_CASE("scaling map point values") {
  const auto zero = ScalingMap::zero(3);
  CHECK(zero(point1(0.42)).isZero());
  CHECK(zero.output_dim() == 3);

  const auto jump = ScalingMap::jump_indicator(0.5);
  CHECK(jump(point1(0.49))[0] == 0.0);
  CHECK(jump(point1(0.5))[0] == 1.0);
  CHECK(jump(point1(0.51))[0] == 1.0);

  const auto bump = ScalingMap::corner_bump(0.5, 0.5);
  CHECK(bump(point1(0.5))[0] == 1.0);
  CHECK(bump(point1(1.0))[0] == 0.0);
  CHECK(bump(point1(0.0))[0] == 0.0);
  // interior value from the stated cubic
  CHECK(bump(point1(0.75))[0] == Approx(1.0 - 1.5 * 0.5 + 0.5 * 0.125).epsilon(1e-15));

  const auto w0 = ScalingMap::weierstrass_partial(0.5, 3.0, 0);
  CHECK(w0(point2(0.0, 0.0))[0] == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("scaling map gradients") {
  const auto zero = ScalingMap::zero();
  CHECK(zero.gradient(point1(0.3)).isZero());

  const auto bump = ScalingMap::corner_bump(0.5, 0.5);
  CHECK(bump.gradient(point1(0.75))(0, 0) == Approx(-2.25).epsilon(1e-14));
  CHECK(bump.gradient(point1(0.25))(0, 0) == Approx(2.25).epsilon(1e-14));
  CHECK(bump.gradient(point1(1.4))(0, 0) == 0.0);
  CHECK_THROWS_AS(bump.gradient(point1(0.5)), UnsupportedOperation);

  const auto jump = ScalingMap::jump_indicator(0.5);
  CHECK(jump.gradient(point1(0.3))(0, 0) == 0.0);
  CHECK_THROWS_AS(jump.gradient(point1(0.5)), UnsupportedOperation);

  const auto mimic = ScalingMap::target_mimic(TargetFunction::exp_cos());
  CHECK(mimic.gradient(point1(0.0))(0, 0) == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("analytic gradients match central finite differences", "[property]") {
  const auto fd = [](const ScalingMap& m, const Point& x) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[0]));
    Point xp = x, xm = x;
    xp[0] += h;
    xm[0] -= h;
    return (m(xp)[0] - m(xm)[0]) / (2.0 * h);
  };
  CounterRng rng(13);

  const auto bump = ScalingMap::corner_bump(0.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    const double t = 0.05 + 0.9 * rng.next_uniform();
    if (std::abs(t - 0.5) < 1e-3 || std::abs(std::abs(t - 0.5) - 0.5) < 1e-3) continue;
    const double g = bump.gradient(point1(t))(0, 0);
    const double g_fd = fd(bump, point1(t));
    REQUIRE(g == Approx(g_fd).epsilon(1e-6).margin(1e-9));
  }

  const auto weier = ScalingMap::weierstrass_partial(0.5, 3.0, 2);
  for (int i = 0; i < 100; ++i) {
    const Point x = point2(rng.next_uniform(), rng.next_uniform());
    const Matrix g = weier.gradient(x);
    for (int j = 0; j < 2; ++j) {
      const double h = 1e-6;
      Point xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double g_fd = (weier(xp)[0] - weier(xm)[0]) / (2.0 * h);
      REQUIRE(g(0, j) == Approx(g_fd).epsilon(1e-6).margin(1e-7));
    }
  }
}

TEST_CASE("target functions: hand-evaluated values") {
  const auto jump = TargetFunction::jump();
  CHECK(jump(0.0) == Approx(1.0625).epsilon(1e-14));
  // the two branches differ only by the constant +3
  CHECK(jump(0.5 - 1e-12) - jump(0.5) == Approx(3.0).margin(1e-9));

  const auto weier = TargetFunction::weierstrass(0.5, 3.0, 12);
  CHECK(weier(point2(0.0, 0.0)) == Approx(1.999755859375).epsilon(1e-14));

  const auto corner = TargetFunction::corner();
  CHECK(corner(0.5) == Approx(std::exp(-0.125)).epsilon(1e-15));
  // continuity at the corner: approaching from the left matches the right-branch value
  CHECK(std::abs(corner(0.5 - 1e-13) - corner(0.5)) < 1e-12);

  const auto expcos = TargetFunction::exp_cos();
  CHECK(expcos(0.0) == 0.0);
  CHECK(expcos.derivative(0.0) == Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(expcos(point1(1.5)), ConfigError);
}

TEST_CASE("weierstrass partial map with full truncation equals the target") {
  const auto map = ScalingMap::weierstrass_partial(0.5, 3.0, 12);
  const auto target = TargetFunction::weierstrass(0.5, 3.0, 12);
  CounterRng rng(23);
  for (int i = 0; i < 300; ++i) {
    const Point x = point2(rng.next_uniform(), rng.next_uniform());
    REQUIRE(map(x)[0] == target(x));
  }
}

TEST_CASE("tabulated map interpolates linearly and rejects out-of-range points") {
  const auto tab = ScalingMap::tabulated({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0});
  CHECK(tab(point1(0.25))[0] == Approx(0.5).epsilon(1e-15));
  CHECK(tab(point1(0.5))[0] == Approx(1.0).epsilon(1e-15));
  CHECK(tab(point1(0.75))[0] == Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(tab(point1(1.5)), ConfigError);
  CHECK_THROWS_AS(ScalingMap::tabulated({0.0}, {1.0}), ConfigError);
  CHECK_THROWS_AS(ScalingMap::tabulated({1.0, 0.0}, {1.0, 2.0}), ConfigError);
}
