#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "difflab/common.hpp"
#include "difflab/hypothesis.hpp"

using namespace difflab;

namespace {

EmpiricalCdf cdf(std::vector<double> v) { return EmpiricalCdf::from_sample(v); }

}  // namespace

TEST(Cdf, RightContinuousSteps) {
  const EmpiricalCdf f = cdf({1, 2, 2, 4});
  EXPECT_EQ(f(0.5), 0.0);
  EXPECT_EQ(f(1.0), 0.25);
  EXPECT_EQ(f(1.999), 0.25);
  EXPECT_EQ(f(2.0), 0.75);
  EXPECT_EQ(f(4.0), 1.0);
  EXPECT_EQ(f(100.0), 1.0);
  EXPECT_EQ(f.total_weight(), 4.0);
}

TEST(Cdf, Weighted) {
  const EmpiricalCdf f = EmpiricalCdf::from_weighted({{0.0, 3.0}, {1.0, 1.0}, {2.0, 0.0}});
  EXPECT_EQ(f(0.0), 0.75);
  EXPECT_EQ(f.steps().size(), 2u);
  EXPECT_THROW(EmpiricalCdf::from_weighted({{0.0, -1.0}}), DataError);
}

TEST(Ks, Examples) {
  EXPECT_EQ(ks_distance(cdf({1, 2, 3}), cdf({1, 2, 3})), 0.0);
  EXPECT_EQ(ks_distance(cdf({1, 2}), cdf({5, 6})), 1.0);
  EXPECT_DOUBLE_EQ(ks_distance(cdf({0, 0, 1, 1}), cdf({0, 1, 1, 1})), 0.25);
  EXPECT_THROW(ks_distance(EmpiricalCdf{}, cdf({1})), DataError);
}

TEST(Ks, MetricProperties) {
  std::mt19937_64 rng(12);
  auto sample = [&] {
    std::vector<double> v(1 + rng() % 15);
    for (double& x : v) x = static_cast<double>(rng() % 10);
    return v;
  };
  for (int t = 0; t < 300; ++t) {
    const auto a = cdf(sample()), b = cdf(sample()), c = cdf(sample());
    const double ab = ks_distance(a, b);
    EXPECT_EQ(ab, ks_distance(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_LE(ks_distance(a, c), ab + ks_distance(b, c) + 1e-12);
    EXPECT_EQ(ks_distance(a, a), 0.0);
  }
}

TEST(MannWhitney, ExactSmall) {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  const auto r = mann_whitney_u(a, b);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.u, 0.0);
  EXPECT_NEAR(r.p, 0.1, 1e-12);
  const auto s = mann_whitney_u(b, a);
  EXPECT_EQ(s.u, 9.0);
  EXPECT_NEAR(s.p, r.p, 1e-12);
}

TEST(MannWhitney, IdenticalSamples) {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 2, 3, 4};
  const auto r = mann_whitney_u(a, b);
  EXPECT_EQ(r.u, 8.0);
  EXPECT_NEAR(r.p, 1.0, 1e-12);
}

TEST(MannWhitney, ExactAgreesWithBruteForce) {
  // Enumerates every split of the pooled ranks independently of the library.
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t na = 1 + rng() % 6, nb = 1 + rng() % 6;
    std::vector<double> a(na), b(nb);
    for (double& x : a) x = static_cast<double>(rng() % 5);
    for (double& x : b) x = static_cast<double>(rng() % 5);
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size();
    auto u_of = [&](std::uint32_t mask) {
      double u = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(mask >> i & 1)) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (mask >> j & 1) continue;
          u += pooled[i] > pooled[j] ? 1.0 : pooled[i] == pooled[j] ? 0.5 : 0.0;
        }
      }
      return u;
    };
    const double u_obs = u_of((1u << na) - 1);
    const double mean = static_cast<double>(na * nb) / 2.0;
    double extreme = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
      total += 1;
      extreme += std::abs(u_of(mask) - mean) >= std::abs(u_obs - mean) - 1e-9;
    }
    const auto r = mann_whitney_u(a, b);
    EXPECT_NEAR(r.u, u_obs, 1e-9);
    EXPECT_NEAR(r.p, extreme / total, 1e-12);
  }
}

TEST(MannWhitney, NormalApproximationLarge) {
  std::vector<double> a, b;
  for (int i = 0; i < 100; ++i) {
    a.push_back(i);
    b.push_back(i + 30);
  }
  const auto r = mann_whitney_u(a, b);
  EXPECT_FALSE(r.exact);
  // U = sum over pairs with a > b plus half ties.
  double u = 0;
  for (double x : a) {
    for (double y : b) u += x > y ? 1 : x == y ? 0.5 : 0;
  }
  EXPECT_DOUBLE_EQ(r.u, u);
  EXPECT_LT(r.p, 1e-6);
  // Weighted form with multiplicities equals the expanded sample.
  std::vector<std::pair<double, std::uint64_t>> wa{{0.0, 30}, {1.0, 20}}, wb{{0.0, 10}, {1.0, 40}};
  std::vector<double> ea, eb;
  for (auto [v, c] : wa) ea.insert(ea.end(), c, v);
  for (auto [v, c] : wb) eb.insert(eb.end(), c, v);
  const auto w = mann_whitney_u(wa, wb);
  const auto e = mann_whitney_u(ea, eb);
  EXPECT_DOUBLE_EQ(w.u, e.u);
  EXPECT_DOUBLE_EQ(w.p, e.p);
}

TEST(MannWhitney, EmptySample) {
  EXPECT_THROW(mann_whitney_u(std::vector<double>{}, std::vector<double>{1.0}), DataError);
}

TEST(Spearman, Basics) {
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}), -1.0);
  EXPECT_TRUE(std::isnan(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3})));
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{1, 3, 2, 5, 4}), 0.8, 1e-12);
}
