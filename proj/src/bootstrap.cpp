#include "difflab/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "difflab/common.hpp"

namespace difflab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Type-7 sample quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return kNaN;
  p = std::clamp(p, 0.0, 1.0);
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

std::vector<double> resample_weights(std::size_t units, std::uint64_t seed, std::size_t r) {
  std::vector<double> w(units, 0.0);
  if (units == 0) return w;
  std::mt19937_64 rng(split_seed(seed, r));
  std::uniform_int_distribution<std::size_t> pick(0, units - 1);
  for (std::size_t i = 0; i < units; ++i) w[pick(rng)] += 1.0;
  return w;
}

BcaResult bca_from_replicates(double estimate, std::span<double> replicates,
                              std::span<const double> jackknife, double level) {
  BcaResult r;
  r.estimate = estimate;
  r.valid_replicates = replicates.size();
  if (!std::isfinite(estimate) || replicates.empty()) {
    r.ci = {kNaN, kNaN};
    return r;
  }
  std::sort(replicates.begin(), replicates.end());
  // Spread at rounding level counts as a single value.
  const double scale = std::max({1.0, std::abs(replicates.front()), std::abs(replicates.back())});
  if (replicates.back() - replicates.front() <= 1e-12 * scale) {
    r.degenerate = true;
    r.ci = {estimate, estimate};
    return r;
  }
  const double b = static_cast<double>(replicates.size());
  const auto below = static_cast<double>(
      std::lower_bound(replicates.begin(), replicates.end(), estimate) - replicates.begin());
  const auto equal = static_cast<double>(std::upper_bound(replicates.begin(), replicates.end(), estimate) -
                                         std::lower_bound(replicates.begin(), replicates.end(), estimate));
  // Ties at the estimate count half, which keeps z0 = 0 for a bootstrap
  // distribution symmetric about a repeated estimate.
  const double frac = std::clamp((below + 0.5 * equal) / b, 0.5 / b, 1.0 - 0.5 / b);
  r.z0 = normal_quantile(frac);

  if (jackknife.size() >= 2) {
    double mean = 0.0;
    for (double x : jackknife) mean += x;
    mean /= static_cast<double>(jackknife.size());
    double num = 0.0, den = 0.0;
    for (double x : jackknife) {
      const double d = mean - x;
      num += d * d * d;
      den += d * d;
    }
    if (den > 0.0) r.acceleration = num / (6.0 * std::pow(den, 1.5));
  }

  const double alpha = 1.0 - level;
  auto adjusted = [&](double z_alpha) {
    const double zs = r.z0 + z_alpha;
    const double denom = 1.0 - r.acceleration * zs;
    if (denom <= 0.0) return z_alpha < 0 ? 0.0 : 1.0;
    return normal_cdf(r.z0 + zs / denom);
  };
  const double a1 = adjusted(normal_quantile(alpha / 2.0));
  const double a2 = adjusted(normal_quantile(1.0 - alpha / 2.0));
  r.ci = {quantile_sorted(replicates, a1), quantile_sorted(replicates, a2)};
  return r;
}

BcaResult bca_ci(const UnitStatistic& statistic, std::size_t units, const BootstrapOptions& opts) {
  auto vec = [&](std::span<const double> w) { return std::vector<double>{statistic(w)}; };
  return bca_ci_vector(vec, units, opts).front();
}

std::vector<BcaResult> bca_ci_vector(const UnitVectorStatistic& statistic, std::size_t units,
                                     const BootstrapOptions& opts) {
  const std::vector<double> ones(units, 1.0);
  const std::vector<double> estimate = statistic(ones);
  const std::size_t dim = estimate.size();
  const std::size_t b = opts.replicates;

  // replicate-major matrix b x dim
  std::vector<double> reps(b * dim, kNaN);
  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(std::max<std::size_t>(b, 1))));
  auto work = [&](unsigned t) {
    for (std::size_t r = t; r < b; r += threads) {
      const auto w = resample_weights(units, opts.seed, r);
      const auto v = statistic(w);
      std::copy(v.begin(), v.end(), reps.begin() + static_cast<std::ptrdiff_t>(r * dim));
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  std::vector<double> jack(units * dim, kNaN);
  if (units >= 2) {
    std::vector<double> w(units, 1.0);
    for (std::size_t i = 0; i < units; ++i) {
      w[i] = 0.0;
      const auto v = statistic(w);
      std::copy(v.begin(), v.end(), jack.begin() + static_cast<std::ptrdiff_t>(i * dim));
      w[i] = 1.0;
    }
  }

  std::vector<BcaResult> out(dim);
  std::vector<double> col, jcol;
  for (std::size_t d = 0; d < dim; ++d) {
    col.clear();
    jcol.clear();
    for (std::size_t r = 0; r < b; ++r) {
      const double x = reps[r * dim + d];
      if (std::isfinite(x)) col.push_back(x);
    }
    if (units >= 2) {
      for (std::size_t i = 0; i < units; ++i) {
        const double x = jack[i * dim + d];
        if (std::isfinite(x)) jcol.push_back(x);
      }
    }
    out[d] = bca_from_replicates(estimate[d], col, jcol, opts.level);
  }
  return out;
}

}  // namespace difflab
