#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "difflab/bootstrap.hpp"

using namespace difflab;

namespace {

// Weighted mean of per-unit values.
UnitStatistic weighted_mean(std::vector<double> v) {
  return [v](std::span<const double> w) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double wi = w.empty() ? 1.0 : w[i];
      num += wi * v[i];
      den += wi;
    }
    return num / den;
  };
}

}  // namespace

TEST(Normal, CdfQuantile) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  for (double p : {0.001, 0.1, 0.5, 0.8, 0.999}) EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12);
}

TEST(Bootstrap, ResampleWeightsAreMultinomial) {
  for (std::size_t r = 0; r < 50; ++r) {
    const auto w = resample_weights(17, 3, r);
    ASSERT_EQ(w.size(), 17u);
    EXPECT_DOUBLE_EQ(std::accumulate(w.begin(), w.end(), 0.0), 17.0);
    for (double x : w) EXPECT_EQ(x, std::floor(x));
  }
  EXPECT_EQ(resample_weights(10, 4, 2), resample_weights(10, 4, 2));
  EXPECT_NE(resample_weights(10, 4, 2), resample_weights(10, 4, 3));
}

TEST(Bootstrap, IdenticalValuesCollapse) {
  BootstrapOptions o;
  o.replicates = 200;
  const BcaResult r = bca_ci(weighted_mean(std::vector<double>(20, 0.3)), 20, o);
  EXPECT_TRUE(r.degenerate);
  EXPECT_DOUBLE_EQ(r.ci.low, 0.3);
  EXPECT_DOUBLE_EQ(r.ci.high, 0.3);
}

TEST(Bootstrap, ThreadsDoNotChangeResult) {
  std::vector<double> v(40);
  std::mt19937_64 rng(1);
  for (double& x : v) x = std::exponential_distribution<double>(1.0)(rng);
  BootstrapOptions o;
  o.replicates = 500;
  o.seed = 9;
  const BcaResult a = bca_ci(weighted_mean(v), v.size(), o);
  o.threads = 4;
  const BcaResult b = bca_ci(weighted_mean(v), v.size(), o);
  EXPECT_EQ(a.ci.low, b.ci.low);
  EXPECT_EQ(a.ci.high, b.ci.high);
  EXPECT_TRUE(a.ci.contains(a.estimate));
}

TEST(Bootstrap, SymmetricDistributionMatchesPercentile) {
  // Symmetric replicates around the estimate and zero jackknife skew give
  // z0 = 0, a = 0: BCa equals the percentile interval.
  std::vector<double> reps;
  for (int i = -500; i <= 500; ++i) reps.push_back(i / 500.0);
  std::vector<double> jack{-1, 1, -1, 1};
  const BcaResult r = bca_from_replicates(0.0, reps, jack, 0.95);
  EXPECT_NEAR(r.z0, 0.0, 1e-3);
  EXPECT_NEAR(r.acceleration, 0.0, 1e-12);
  EXPECT_NEAR(r.ci.low, -0.95, 2.0 / 500);
  EXPECT_NEAR(r.ci.high, 0.95, 2.0 / 500);
}

TEST(Bootstrap, AccelerationFromJackknife) {
  // a = sum (mean - j)^3 / (6 (sum (mean - j)^2)^1.5)
  std::vector<double> reps(101);
  std::iota(reps.begin(), reps.end(), -50.0);
  std::vector<double> jack{0.0, 0.0, 0.0, 3.0};
  const double mean = 0.75;
  double s2 = 0.0, s3 = 0.0;
  for (double j : jack) {
    s2 += (mean - j) * (mean - j);
    s3 += std::pow(mean - j, 3);
  }
  const BcaResult r = bca_from_replicates(0.0, reps, jack, 0.95);
  EXPECT_NEAR(r.acceleration, s3 / (6.0 * std::pow(s2, 1.5)), 1e-12);
}

TEST(Bootstrap, VectorMatchesScalar) {
  std::vector<double> v(30);
  std::mt19937_64 rng(2);
  for (double& x : v) x = std::uniform_real_distribution<double>(0, 1)(rng);
  BootstrapOptions o;
  o.replicates = 300;
  o.seed = 5;
  const auto vec = bca_ci_vector(
      [&](std::span<const double> w) {
        return std::vector<double>{weighted_mean(v)(w), std::nan("")};
      },
      v.size(), o);
  const BcaResult s = bca_ci(weighted_mean(v), v.size(), o);
  ASSERT_EQ(vec.size(), 2u);
  EXPECT_DOUBLE_EQ(vec[0].ci.low, s.ci.low);
  EXPECT_DOUBLE_EQ(vec[0].ci.high, s.ci.high);
  EXPECT_TRUE(std::isnan(vec[1].ci.low));
}

TEST(Bootstrap, ClusteredBinomialCoverageSmall) {
  // Reduced version of the acceptance coverage study.
  const double p = 0.1;
  std::mt19937_64 rng(77);
  int covered = 0;
  const int reps = 100;
  for (int t = 0; t < reps; ++t) {
    std::vector<double> a(50), n(50, 1000.0);
    for (double& x : a) x = std::binomial_distribution<int>(1000, p)(rng);
    BootstrapOptions o;
    o.replicates = 500;
    o.seed = static_cast<std::uint64_t>(t);
    const BcaResult r = bca_ci(
        [&](std::span<const double> w) {
          double na = 0, ne = 0;
          for (std::size_t i = 0; i < a.size(); ++i) {
            const double wi = w.empty() ? 1.0 : w[i];
            na += wi * a[i];
            ne += wi * n[i];
          }
          return na / ne;
        },
        a.size(), o);
    covered += r.ci.contains(p);
  }
  EXPECT_GE(covered, 85);
}
