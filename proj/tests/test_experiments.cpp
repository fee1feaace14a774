#include "vskgp/experiments.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace vskgp;
using Catch::Approx;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("vskgp_test_" + tag);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("kernel config grammar") {
  const auto cfg = parse_kernel_config("{family = \"maternc2\", lengthscale = 0.0650, vsk = \"jump(0.5)\"}");
  CHECK(cfg.family == RadialFamily::MaternC2);
  CHECK(cfg.lengthscale == 0.0650);
  CHECK(cfg.vsk == "jump(0.5)");

  const KernelFn k = cfg.kernel();
  const KernelFn plain = cfg.stationary();
  CHECK(k(point1(0.4), point1(0.6)) < plain(point1(0.4), point1(0.6)));  // lift damps across the jump

  const auto bare = parse_kernel_config("family = \"gaussian\"");
  CHECK(bare.family == RadialFamily::Gaussian);
  CHECK(bare.lengthscale == 1.0);

  CHECK_THROWS_AS(parse_kernel_config("{lengthscale = 1.0}"), ConfigError);
  CHECK_THROWS_AS(parse_kernel_config("{family = \"nope\"}"), ConfigError);
  CHECK_THROWS_AS(parse_kernel_config("{family = \"gaussian\", lengthscale = -1}"), ConfigError);
  CHECK_THROWS_AS(parse_kernel_config("{family = \"gaussian\", bogus = 1}"), ConfigError);
}

TEST_CASE("scaling map grammar") {
  CHECK(parse_scaling_config("zero").is_zero());
  CHECK(parse_scaling_config("\"zero\"").is_zero());

  const auto jump = parse_scaling_config("jump(0.5)");
  CHECK(jump(point1(0.6))[0] == 1.0);

  const auto corner = parse_scaling_config("corner(0.5,0.5)");
  CHECK(corner(point1(0.5))[0] == 1.0);

  const auto weier = parse_scaling_config("weierstrass(0.5,3,4)");
  CHECK(weier(point2(0.0, 0.0))[0] == Approx(2.0 - std::pow(2.0, -4)).epsilon(1e-14));

  const auto mimic = parse_scaling_config("target", TargetFunction::exp_cos());
  CHECK(mimic(point1(0.0))[0] == 0.0);
  CHECK_THROWS_AS(parse_scaling_config("target"), ConfigError);
  CHECK_THROWS_AS(parse_scaling_config("spiral(1)"), ConfigError);
  CHECK_THROWS_AS(parse_scaling_config("jump(0.5,0.7)"), ConfigError);
}

TEST_CASE("matrix csv round-trips bitwise at 17 digits") {
  CounterRng rng(8);
  Matrix m(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) m(i, j) = rng.next_gaussian() * std::pow(10.0, (int)(rng.next_u64() % 7) - 3);
  const auto path = std::filesystem::temp_directory_path() / "vskgp_roundtrip.csv";
  write_matrix_csv(path, m);
  const Matrix back = read_matrix_csv(path);
  REQUIRE(back.rows() == 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) REQUIRE(back(i, j) == m(i, j));
  std::filesystem::remove(path);
}

TEST_CASE("covariance dump: diagonal and jump block structure") {
  const double ell = 0.8, sf = 2.0, sn = 0.3;
  const PointSet nodes = equispaced(6, 0.0, 1.0);
  const StationaryKernel plain(RadialFamily::Gaussian, ell);
  const VskKernel vsk(plain, ScalingMap::jump_indicator(0.5));
  const auto path = std::filesystem::temp_directory_path() / "vskgp_cov.csv";

  dump_covariance({vsk, sf, sn}, nodes, path);
  const Matrix cov = read_matrix_csv(path);
  for (int i = 0; i < 6; ++i) CHECK(cov(i, i) == Approx(sf * sf + sn * sn).epsilon(1e-14));

  // nodes {0,.2,.4} vs {.6,.8,1}: off-block entries are the stationary entries
  // damped by exactly exp(-1/(2 l^2)) for the Gaussian profile
  const Matrix plain_cov = sf * sf * gram_matrix(plain, nodes);
  const double damp = std::exp(-0.5 / (ell * ell));
  for (int i = 0; i < 3; ++i)
    for (int j = 3; j < 6; ++j)
      CHECK(cov(i, j) == Approx(plain_cov(i, j) * damp).epsilon(1e-12));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(cov(i, j) == Approx(plain_cov(i, j)).epsilon(1e-12));
  std::filesystem::remove(path);
}

TEST_CASE("jump_fixed runner: files, manifest, determinism, config guard") {
  ExperimentConfig cfg;
  cfg.experiment = "jump_fixed";
  cfg.seed = 5;
  cfg.out_dir = temp_dir("jf_a").string();
  const auto report = run_experiment(cfg);

  REQUIRE(report.runs.size() == 2);
  const auto& manifest = report.manifest;
  CHECK(manifest["experiment"] == "jump_fixed");
  CHECK(manifest["n"] == 6);
  for (const auto& f : report.files) {
    const auto p = std::filesystem::path(cfg.out_dir) / f;
    REQUIRE(std::filesystem::exists(p));
    REQUIRE(std::filesystem::file_size(p) > 0);
  }

  // identical config + seed => byte-identical outputs
  ExperimentConfig cfg2 = cfg;
  cfg2.out_dir = temp_dir("jf_b").string();
  run_experiment(cfg2);
  for (const std::string name : {"metrics.csv", "cov_vsk.csv", "predictions_standard.csv",
                                 "prior_paths_vsk.csv", "posterior_paths_standard.csv"}) {
    CHECK(slurp(std::filesystem::path(cfg.out_dir) / name) ==
          slurp(std::filesystem::path(cfg2.out_dir) / name));
  }

  ExperimentConfig bad = cfg;
  bad.fit_requested = true;
  CHECK_THROWS_AS(run_experiment(bad), ConfigError);

  std::filesystem::remove_all(cfg.out_dir);
  std::filesystem::remove_all(cfg2.out_dir);
}

TEST_CASE("jump_fixed: far-field variance stays below the prior level") {
  const auto result = jump_fixed_compute();
  CHECK(result.standard.max_std <= 8.0);
  CHECK(result.vsk.max_std <= 8.0);
  CHECK(result.cov_standard(0, 0) == Approx(64.0).epsilon(1e-14));
}

TEST_CASE("weierstrass entry with zero truncation equals the stationary path bitwise") {
  const ModelRun via_zero_map = weierstrass_entry(0, 1, 3);
  const ModelRun via_plain = weierstrass_entry(0, 1, 3, true);
  REQUIRE(via_zero_map.ok);
  REQUIRE(via_plain.ok);
  CHECK(via_zero_map.fit.ell == via_plain.fit.ell);
  CHECK(via_zero_map.fit.sigma_f == via_plain.fit.sigma_f);
  CHECK(via_zero_map.fit.sigma_n == via_plain.fit.sigma_n);
  CHECK(via_zero_map.fit.nlml == via_plain.fit.nlml);
  CHECK(via_zero_map.metrics.rmse == via_plain.metrics.rmse);
  CHECK(via_zero_map.metrics.mae == via_plain.metrics.mae);
  CHECK(via_zero_map.metrics.avg_std == via_plain.metrics.avg_std);
  CHECK(via_zero_map.metrics.max_std == via_plain.metrics.max_std);
}

TEST_CASE("unknown experiment is a configuration error") {
  ExperimentConfig cfg;
  cfg.experiment = "mystery";
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}
