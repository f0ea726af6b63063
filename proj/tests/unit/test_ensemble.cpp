#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "sepvar/ensemble.hpp"

using namespace sepvar;

namespace {

OverlapCache cache_from(double r, std::vector<double> v, Eigen::MatrixXd G) {
  return OverlapCache(r, Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())), G,
                      EstimatorMode::exact, 0);
}

const ProductStateParams kZero2 = ProductStateParams::zeros(2);
const ProductStateParams kOne2({std::numbers::pi / 2, std::numbers::pi / 2}, {0.0, 0.0});

}  // namespace

TEST(Ensemble, Validation) {
  const auto z = ProductStateParams::zeros(1);
  EXPECT_NO_THROW(SeparableEnsemble(Eigen::VectorXd::Ones(1), {z}));
  EXPECT_THROW(SeparableEnsemble(Eigen::VectorXd::Constant(2, 0.4), {z, z}), std::invalid_argument);
  EXPECT_THROW(SeparableEnsemble(Eigen::Vector2d(1.5, -0.5), {z, z}), std::invalid_argument);
  EXPECT_THROW(SeparableEnsemble(Eigen::VectorXd(0), {}), std::invalid_argument);
  EXPECT_THROW(SeparableEnsemble::uniform(std::vector<ProductStateParams>(5, z)), std::invalid_argument);
  EXPECT_NO_THROW(SeparableEnsemble::uniform(std::vector<ProductStateParams>(4, z)));
  EXPECT_THROW(SeparableEnsemble::uniform({z, kZero2}), std::invalid_argument);
  EXPECT_EQ(max_components(3), 64u);
}

TEST(Cache, SingleComponentAtZero) {
  const DensityMatrix rho = DensityMatrix::from_pure(build_product_state(kZero2));
  const std::vector<ProductStateParams> rows = {kZero2};
  const OverlapCache c = build_cache(rho, rows, EstimatorMode::exact);
  EXPECT_NEAR(c.r(), 1.0, 1e-15);
  EXPECT_NEAR(c.v()(0), 1.0, 1e-15);
  EXPECT_EQ(c.G()(0, 0), 1.0);
  EXPECT_EQ(c.estimator_calls(), 2);
}

TEST(Cache, OrthogonalComponentsAndBell) {
  const DensityMatrix bell = DensityMatrix::from_pure(build_ghz(2));
  const std::vector<ProductStateParams> rows = {kZero2, kOne2};
  const OverlapCache c = build_cache(bell, rows, EstimatorMode::exact);
  EXPECT_NEAR(c.r(), 1.0, 1e-15);
  EXPECT_NEAR(c.v()(0), 0.5, 1e-15);
  EXPECT_NEAR(c.v()(1), 0.5, 1e-15);
  EXPECT_NEAR(c.G()(0, 1), 0.0, 1e-15);
  EXPECT_EQ(c.estimator_calls(), cache_estimator_calls(2));
  EXPECT_EQ(cache_estimator_calls(2), 4);
  EXPECT_NEAR(hsd_from_cache(c, Eigen::Vector2d(0.5, 0.5)), 0.5, 1e-15);
}

TEST(Cache, InvariantsOnRandomInputs) {
  Rng rng(50);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    const std::size_t s = 1 + static_cast<std::size_t>(trial % 6);
    const DensityMatrix rho = random_mixed_state(n, rng);
    const auto rows = oracle::random_rows(s, n, rng);
    const OverlapCache c = build_cache(rho, rows, EstimatorMode::exact);
    const double d = static_cast<double>(dimension_for(n));
    EXPECT_GE(c.r(), 1.0 / d - 1e-12);
    EXPECT_LE(c.r(), 1.0 + 1e-12);
    EXPECT_TRUE(c.G().isApprox(c.G().transpose(), 0.0));
    for (std::size_t i = 0; i < s; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      EXPECT_EQ(c.G()(ii, ii), 1.0);
      EXPECT_GE(c.v()(ii), 0.0);
      EXPECT_LE(c.v()(ii), 1.0);
    }
  }
}

TEST(Cache, WeightedSumExamples) {
  EXPECT_NEAR(ensemble_overlap(cache_from(1.0, {0.7}, Eigen::MatrixXd::Ones(1, 1)), Eigen::VectorXd::Ones(1)),
              0.7, 1e-15);
  EXPECT_NEAR(ensemble_overlap(cache_from(1.0, {0.5, 0.5}, Eigen::MatrixXd::Identity(2, 2)),
                               Eigen::Vector2d(0.5, 0.5)),
              0.5, 1e-15);
  EXPECT_NEAR(ensemble_purity(cache_from(1.0, {0.3}, Eigen::MatrixXd::Ones(1, 1)), Eigen::VectorXd::Ones(1)),
              1.0, 1e-15);
  EXPECT_NEAR(ensemble_purity(cache_from(1.0, {0.3, 0.3}, Eigen::MatrixXd::Identity(2, 2)),
                              Eigen::Vector2d(0.5, 0.5)),
              0.5, 1e-15);
  EXPECT_NEAR(ensemble_purity(cache_from(1.0, {0.3, 0.3}, Eigen::MatrixXd::Ones(2, 2)),
                              Eigen::Vector2d(0.5, 0.5)),
              1.0, 1e-15);
  EXPECT_THROW(ensemble_overlap(cache_from(1.0, {0.3, 0.3}, Eigen::MatrixXd::Ones(2, 2)), Eigen::VectorXd::Ones(3)),
               std::invalid_argument);
}

TEST(Cache, PureProductTargetGivesZeroDistance) {
  Rng rng(51);
  const auto params = uniform_angle_params(3, rng);
  const DensityMatrix rho = DensityMatrix::from_pure(build_product_state(params));
  const std::vector<ProductStateParams> rows = {params};
  EXPECT_NEAR(hsd_from_cache(build_cache(rho, rows, EstimatorMode::exact), Eigen::VectorXd::Ones(1)), 0.0,
              1e-13);
}

TEST(Cache, MatchesDenseOracle) {
  Rng rng(52);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 3;
    const std::size_t s = 1 + static_cast<std::size_t>(trial) % std::min<std::size_t>(8, max_components(n));
    const CMatrix rho_m = oracle::ginibre_state(n, rng);
    const DensityMatrix rho(rho_m);
    const auto rows = oracle::random_rows(s, n, rng);
    const Eigen::VectorXd p = oracle::random_simplex_point(s, rng);
    const OverlapCache c = build_cache(rho, rows, EstimatorMode::exact);
    const CMatrix sigma = oracle::mixture(p, rows);
    EXPECT_NEAR(ensemble_purity(c, p), oracle::trace_re(sigma * sigma), 1e-12);
    EXPECT_NEAR(ensemble_overlap(c, p), oracle::trace_re(rho_m * sigma), 1e-12);
    EXPECT_NEAR(hsd_from_cache(c, p), oracle::hs_distance(rho_m, sigma), 1e-12);
    EXPECT_LE((densify(SeparableEnsemble(p, rows)).matrix() - sigma).norm(), 1e-12);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) {
        const std::complex<double> ip =
            oracle::product_vector(rows[i]).dot(oracle::product_vector(rows[j]));
        EXPECT_NEAR(product_overlap(rows[i], rows[j]), std::norm(ip), 1e-12);
      }
  }
}

TEST(Cache, DensifyExamples) {
  const auto z = ProductStateParams::zeros(1);
  const ProductStateParams one({std::numbers::pi / 2}, {0.0});
  const DensityMatrix single = densify(SeparableEnsemble(Eigen::VectorXd::Ones(1), {one}));
  EXPECT_NEAR(single.purity(), 1.0, 1e-15);
  const DensityMatrix mixed = densify(SeparableEnsemble::uniform({z, one}));
  EXPECT_LE((mixed.matrix() - 0.5 * CMatrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Cache, RebuildComponentEqualsFullBuild) {
  Rng rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 3;
    const std::size_t s = 2 + static_cast<std::size_t>(trial % 5);
    const DensityMatrix rho = random_mixed_state(n, rng);
    auto rows = oracle::random_rows(s, n, rng);
    const OverlapCache base = build_cache(rho, rows, EstimatorMode::exact);
    const std::size_t k = static_cast<std::size_t>(trial) % s;
    rows[k] = uniform_angle_params(n, rng);
    const OverlapCache patched = rebuild_component(base, rho, rows, k);
    const OverlapCache full = build_cache(rho, rows, EstimatorMode::exact);
    EXPECT_NEAR(patched.r(), full.r(), 1e-15);
    EXPECT_LE((patched.v() - full.v()).norm(), 1e-14);
    EXPECT_LE((patched.G() - full.G()).norm(), 1e-14);
  }
}

TEST(Cache, KnownPuritySkipsOneCall) {
  Rng rng(54);
  const DensityMatrix rho = random_mixed_state(2, rng);
  const auto rows = oracle::random_rows(3, 2, rng);
  const OverlapCache c = build_cache(rho, rows, EstimatorMode::shots, ShotConfig{256, 1}, 0.25);
  EXPECT_EQ(c.r(), 0.25);
  EXPECT_EQ(c.estimator_calls(), cache_estimator_calls(3) - 1);
}

TEST(Cache, ShotModeIsSeededClampedAndClose) {
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityMatrix rho = random_mixed_state(2, rng);
    const auto rows = oracle::random_rows(4, 2, rng);
    const ShotConfig cfg{8192, static_cast<std::uint64_t>(trial)};
    const OverlapCache a = build_cache(rho, rows, EstimatorMode::shots, cfg);
    const OverlapCache b = build_cache(rho, rows, EstimatorMode::shots, cfg);
    const OverlapCache exact = build_cache(rho, rows, EstimatorMode::exact);
    EXPECT_EQ(a.r(), b.r());
    EXPECT_EQ(a.v(), b.v());
    EXPECT_EQ(a.G(), b.G());
    ASSERT_TRUE(a.shot_info().has_value());
    const ShotDiagnostics& info = *a.shot_info();
    EXPECT_EQ(info.shots, 8192);
    for (Eigen::Index i = 0; i < 4; ++i) {
      EXPECT_EQ(a.G()(i, i), 1.0);
      EXPECT_GE(a.v()(i), 0.0);
      EXPECT_LE(a.v()(i), 1.0);
      EXPECT_EQ(a.v()(i), std::clamp(info.raw_v(i), 0.0, 1.0));
      EXPECT_LE(std::abs(info.raw_v(i) - exact.v()(i)), 6.0 / std::sqrt(8192.0));
      for (Eigen::Index j = 0; j < 4; ++j) {
        EXPECT_GE(a.G()(i, j), 0.0);
        EXPECT_LE(a.G()(i, j), 1.0);
      }
    }
    EXPECT_LE(std::abs(info.raw_r - exact.r()), 6.0 / std::sqrt(8192.0));
  }
}

TEST(Cache, RejectsInconsistentInput) {
  EXPECT_THROW(cache_from(1.0, {0.5, 0.5}, Eigen::MatrixXd::Identity(3, 3)), std::invalid_argument);
  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
  asym(0, 1) = 0.3;
  EXPECT_THROW(cache_from(1.0, {0.5, 0.5}, asym), std::invalid_argument);
  EXPECT_THROW(cache_from(1.0, {1.5}, Eigen::MatrixXd::Ones(1, 1)), std::invalid_argument);
  const DensityMatrix rho = DensityMatrix::from_pure(build_ghz(2));
  const std::vector<ProductStateParams> wrong = {ProductStateParams::zeros(3)};
  EXPECT_THROW(build_cache(rho, wrong, EstimatorMode::exact), std::invalid_argument);
}
