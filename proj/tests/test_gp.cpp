#include "vskgp/gp.hpp"
#include "vskgp/designs.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace vskgp;
using Catch::Approx;

namespace {

TrainingSet one_point(double x, double y) {
  PointSet px(1, 1);
  px << x;
  Vector py(1);
  py << y;
  return {px, py};
}

CovarianceModel gauss_model(double ell, double sf = 1.0, double sn = 0.0) {
  return {StationaryKernel(RadialFamily::Gaussian, ell), sf, sn};
}

}  // namespace

TEST_CASE("training set validation") {
  PointSet x(2, 1);
  x << 0.3, 0.3 + 1e-13;
  Vector y(2);
  y << 1.0, 2.0;
  CHECK_THROWS_AS(TrainingSet(x, y), ConfigError);

  Vector y3(3);
  y3 << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(TrainingSet(x, y3), ConfigError);
}

TEST_CASE("train: closed-form coefficients") {
  const TrainedGP gp1(gauss_model(1.0), one_point(0.0, 2.0));
  CHECK(gp1.alpha()[0] == Approx(2.0).epsilon(1e-14));

  PointSet x(2, 1);
  x << 0.0, 1.0;
  Vector y(2);
  y << 1.0, 0.0;
  const TrainedGP gp2(gauss_model(1.0), TrainingSet(x, y));
  const double c = std::exp(-0.5);
  CHECK(gp2.alpha()[0] == Approx(1.0 / (1.0 - c * c)).epsilon(1e-12));
  CHECK(gp2.alpha()[1] == Approx(-c / (1.0 - c * c)).epsilon(1e-12));

  // lambda = 1: dense 2x2 oracle
  const TrainedGP gp3(gauss_model(1.0, 1.0, 1.0), TrainingSet(x, y));
  Matrix sys(2, 2);
  sys << 2.0, c, c, 2.0;
  const Vector expect = sys.inverse() * y;
  CHECK(gp3.alpha()[0] == Approx(expect[0]).epsilon(1e-12));
  CHECK(gp3.alpha()[1] == Approx(expect[1]).epsilon(1e-12));
  CHECK(gp3.alpha().norm() < gp2.alpha().norm());

  CHECK_THROWS_AS(TrainedGP({StationaryKernel(RadialFamily::Gaussian, 1.0), 0.0, 0.0},
                            one_point(0.0, 1.0)),
                  ConfigError);
}

TEST_CASE("trained system invariants: factor reconstruction and residual") {
  CounterRng rng(77);
  PointSet x(12, 1);
  for (int i = 0; i < 12; ++i) x(i, 0) = rng.next_uniform();
  Vector y(12);
  for (int i = 0; i < 12; ++i) y[i] = rng.next_gaussian();
  const CovarianceModel model = gauss_model(0.2, 1.3, 0.4);
  const TrainedGP gp(model, TrainingSet(x, y));

  Matrix reg = gp.kernel_matrix();
  reg.diagonal().array() += gp.lambda() + gp.jitter_used();
  // reconstruct via alpha residual: (K + lambda I + jitter I) alpha == y
  const double resid = ((reg * gp.alpha()) - y).cwiseAbs().maxCoeff();
  CHECK(resid < 1e-8 * y.cwiseAbs().maxCoeff());
}

TEST_CASE("posterior mean: interpolation at lambda = 0 and closed form") {
  const TrainedGP gp1(gauss_model(1.0), one_point(0.0, 2.0));
  CHECK(gp1.posterior_mean(1.0) == Approx(2.0 * std::exp(-0.5)).epsilon(1e-13));

  // conditioning limits the family/length-scale/size combinations that remain
  // invertible in double precision; everything sampled here is
  CounterRng rng(5);
  for (int rep = 0; rep < 6; ++rep) {
    const bool gaussian = rep % 2 == 0;
    const int n = gaussian ? 5 + static_cast<int>(rng.next_u64() % 16)
                           : 5 + static_cast<int>(rng.next_u64() % 46);
    PointSet x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = (i + rng.next_uniform()) / n;
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.next_gaussian();
    const CovarianceModel model{
        gaussian ? KernelFn(StationaryKernel(RadialFamily::Gaussian, 0.05))
                 : KernelFn(StationaryKernel(RadialFamily::MaternC4, 0.15)),
        1.0, 0.0};
    const TrainedGP gp(model, TrainingSet(x, y));
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(gp.posterior_mean(x(i, 0)) - y[i]));
    REQUIRE(worst < 1e-7 * (1.0 + y.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("posterior mean is invariant under joint sigma rescaling") {
  PointSet x(4, 1);
  x << 0.1, 0.4, 0.6, 0.9;
  Vector y(4);
  y << 1.0, -1.0, 2.0, 0.5;
  const TrainedGP a(gauss_model(0.3, 1.0, 0.2), TrainingSet(x, y));
  const TrainedGP b(gauss_model(0.3, 5.0, 1.0), TrainingSet(x, y));  // same lambda
  for (double t = 0.0; t <= 1.0; t += 0.05)
    REQUIRE(a.posterior_mean(t) == Approx(b.posterior_mean(t)).epsilon(1e-12));
}

TEST_CASE("posterior variance: node, far field, closed form") {
  const double sf = 2.0;
  const TrainedGP gp(gauss_model(1.0, sf, 0.0), one_point(0.0, 2.0));
  CHECK(gp.posterior_variance(point1(0.0), false) == Approx(0.0).margin(1e-12));
  CHECK(gp.posterior_variance(point1(1.0), false) ==
        Approx(sf * sf * (1.0 - std::exp(-1.0))).epsilon(1e-12));
  CHECK(gp.posterior_variance(point1(50.0), false) == Approx(sf * sf).epsilon(1e-10));

  const TrainedGP noisy(gauss_model(1.0, sf, 0.5), one_point(0.0, 2.0));
  CHECK(noisy.posterior_variance(point1(50.0), true) == Approx(sf * sf + 0.25).epsilon(1e-10));
}

TEST_CASE("power function: nodes, closed form, far field") {
  const TrainedGP gp(gauss_model(1.0), one_point(0.0, 2.0));
  CHECK(gp.power_function(point1(0.0)) == Approx(0.0).margin(1e-7));
  CHECK(gp.power_function(point1(1.0)) == Approx(std::sqrt(1.0 - std::exp(-1.0))).epsilon(1e-12));
  CHECK(gp.power_function(point1(1.0)) == Approx(0.7950600976206501).epsilon(1e-12));
  CHECK(gp.power_function(point1(100.0)) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("variance-power identity at sigma_n = 0", "[property]") {
  CounterRng rng(9);
  PointSet x(8, 1);
  for (int i = 0; i < 8; ++i) x(i, 0) = rng.next_uniform();
  Vector y(8);
  for (int i = 0; i < 8; ++i) y[i] = rng.next_gaussian();
  const double sf = 3.0;
  const TrainedGP gp(gauss_model(0.25, sf, 0.0), TrainingSet(x, y));
  for (int i = 0; i < 200; ++i) {
    const Point p = point1(rng.next_uniform());
    const double v = gp.posterior_variance(p, false) / (sf * sf);
    const double pw = gp.power_function(p);
    REQUIRE(std::abs(v - pw * pw) < 1e-10);
  }
}

TEST_CASE("smoothed data: identity at lambda 0, shrinkage, oracle") {
  PointSet x(2, 1);
  x << 0.0, 1.0;
  Vector y(2);
  y << 1.0, 0.0;
  const TrainedGP exact(gauss_model(1.0), TrainingSet(x, y));
  CHECK((exact.smoothed_data() - y).cwiseAbs().maxCoeff() < 1e-12);

  const TrainedGP heavy(gauss_model(1.0, 1.0, 100.0), TrainingSet(x, y));
  CHECK(heavy.smoothed_data().cwiseAbs().maxCoeff() < 1e-3);

  const TrainedGP mid(gauss_model(1.0, 1.0, 1.0), TrainingSet(x, y));
  const double c = std::exp(-0.5);
  Matrix k(2, 2);
  k << 1.0, c, c, 1.0;
  Matrix reg = k;
  reg.diagonal().array() += 1.0;
  const Vector expect = reg.inverse() * (k * y);
  CHECK((mid.smoothed_data() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("smoothed-data push-through identity") {
  PointSet x = equispaced(6, 0.0, 1.0);
  Vector y(6);
  y << 1.0, -0.5, 2.0, 0.3, -1.2, 0.8;
  const TrainedGP gp(gauss_model(0.3, 1.0, std::sqrt(0.1)), TrainingSet(x, y));
  const PointSet probes = equispaced(101, 0.0, 1.0);
  CHECK(gp.smoothed_interpolant_identity_check(probes) < 1e-8);

  const TrainedGP exact(gauss_model(0.3), TrainingSet(x, y));
  CHECK(exact.smoothed_interpolant_identity_check(probes) < 1e-12);
}

TEST_CASE("confidence intervals") {
  const auto degenerate = confidence_interval(1.5, 0.0, 0.05);
  CHECK(degenerate.lower == 1.5);
  CHECK(degenerate.upper == 1.5);

  const auto ci = confidence_interval(0.0, 1.0, 0.05);
  CHECK(ci.upper == Approx(1.959963985).epsilon(1e-9));
  CHECK(ci.lower == Approx(-1.959963985).epsilon(1e-9));

  const auto one_sigma = confidence_interval(0.0, 1.0, 0.3173);
  CHECK(one_sigma.upper == Approx(1.0).epsilon(1e-3));

  CHECK_THROWS_AS(confidence_interval(0.0, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(confidence_interval(0.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("factorized path matches the dense brute-force oracle", "[property]") {
  CounterRng rng(33);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 7);
    PointSet x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = rng.next_uniform() * 2.0;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::abs(x(i, 0) - x(j, 0)) < 1e-3) ok = false;
    if (!ok) continue;
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.next_gaussian();
    const double sf = 1.7, sn = 0.3, ell = 0.4;
    const CovarianceModel model = gauss_model(ell, sf, sn);
    const TrainedGP gp(model, TrainingSet(x, y));

    const Matrix k = gram_matrix(model.kernel, x);
    Matrix reg = k;
    reg.diagonal().array() += model.lambda();
    const Matrix reg_inv = reg.inverse();
    for (int t = 0; t < 20; ++t) {
      const Point p = point1(rng.next_uniform() * 2.0);
      Vector kx(n);
      for (int i = 0; i < n; ++i) kx[i] = model.kernel(p, x.row(i).transpose());
      const double mean_oracle = kx.dot(reg_inv * y);
      const double var_oracle = sf * sf * (1.0 - kx.dot(reg_inv * kx)) + sn * sn;
      REQUIRE(gp.posterior_mean(p) == Approx(mean_oracle).epsilon(1e-9).margin(1e-12));
      REQUIRE(gp.posterior_variance(p, true) == Approx(var_oracle).epsilon(1e-9).margin(1e-12));
    }
  }
}

TEST_CASE("adding a training point never increases the noise-free posterior variance",
          "[property]") {
  CounterRng rng(55);
  PointSet x(10, 1);
  for (int i = 0; i < 10; ++i) x(i, 0) = (i + rng.next_uniform()) / 10.0;
  Vector y(10);
  for (int i = 0; i < 10; ++i) y[i] = rng.next_gaussian();
  for (int n = 2; n < 10; ++n) {
    const TrainedGP small(gauss_model(0.3), TrainingSet(x.topRows(n), y.head(n)));
    const TrainedGP big(gauss_model(0.3), TrainingSet(x.topRows(n + 1), y.head(n + 1)));
    for (int t = 0; t < 50; ++t) {
      const Point p = point1(rng.next_uniform());
      REQUIRE(big.posterior_variance(p, false) <=
              small.posterior_variance(p, false) + 1e-10);
    }
  }
}

TEST_CASE("sample paths: degenerate, conditioned, reproducible") {
  const PointSet grid = equispaced(50, 0.0, 1.0);

  CovarianceModel degenerate{StationaryKernel(RadialFamily::Gaussian, 1.0), 0.0, 0.0};
  const Matrix zero = sample_paths(degenerate, grid, 1, 7);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

  PointSet x = equispaced(6, 0.0, 1.0);
  Vector y(6);
  y << 1.0, -0.5, 2.0, 0.3, -1.2, 0.8;
  const CovarianceModel model = gauss_model(0.3, 1.5, 0.0);
  const Matrix cond = sample_paths(model, x, 3, 99, TrainingSet(x, y));
  for (int r = 0; r < 3; ++r)
    for (int i = 0; i < 6; ++i) REQUIRE(std::abs(cond(r, i) - y[i]) < 1e-4);

  const Matrix a = sample_paths(model, grid, 2, 123);
  const Matrix b = sample_paths(model, grid, 2, 123);
  CHECK(a == b);
  const Matrix c = sample_paths(model, grid, 2, 124);
  CHECK(a != c);
}

TEST_CASE("sample covariance of prior draws matches the model covariance") {
  PointSet grid(2, 1);
  grid << 0.2, 0.5;
  const double ell = 0.4, sf = 1.5;
  const CovarianceModel model = gauss_model(ell, sf, 0.0);
  const int draws = 100000;
  const Matrix paths = sample_paths(model, grid, draws, 2718);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (int r = 0; r < draws; ++r) mean += paths.row(r).transpose();
  mean /= draws;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (int r = 0; r < draws; ++r) {
    const Eigen::Vector2d d = paths.row(r).transpose() - mean;
    cov += d * d.transpose();
  }
  cov /= draws - 1;
  const double expect_diag = sf * sf;
  const double expect_off = sf * sf * std::exp(-0.5 * std::pow(0.3 / ell, 2));
  CHECK(cov(0, 0) == Approx(expect_diag).epsilon(0.02));
  CHECK(cov(1, 1) == Approx(expect_diag).epsilon(0.02));
  CHECK(cov(0, 1) == Approx(expect_off).epsilon(0.02));
}

TEST_CASE("normal quantile accuracy") {
  CHECK(normal_quantile(0.975) == Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == Approx(0.0).margin(1e-15));
  CHECK(normal_quantile(0.025) == Approx(-1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(1e-10) == Approx(-6.361340902404056).epsilon(1e-9));
  CHECK_THROWS_AS(normal_quantile(0.0), ConfigError);
  CHECK_THROWS_AS(normal_quantile(1.0), ConfigError);
}
