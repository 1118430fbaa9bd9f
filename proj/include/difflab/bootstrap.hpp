#pragma once

// Cluster bootstrap with bias-corrected and accelerated (BCa) intervals.
//
// A statistic is evaluated on a weighting of resampling units (memes): weight
// w_i is how many times unit i was drawn. The point estimate uses all-ones
// weights, replicates use multinomial counts, and the jackknife for the
// acceleration zeroes one unit at a time.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace difflab {

double normal_cdf(double z);
double normal_quantile(double p);

struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double x) const { return x >= low && x <= high; }
  double width() const { return high - low; }
};

struct BootstrapOptions {
  std::size_t replicates = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct BcaResult {
  double estimate = 0.0;
  Interval ci;
  double z0 = 0.0;
  double acceleration = 0.0;
  std::size_t valid_replicates = 0;
  bool degenerate = false;
};

using UnitStatistic = std::function<double(std::span<const double> weights)>;
using UnitVectorStatistic = std::function<std::vector<double>(std::span<const double> weights)>;

// BCa interval from a finished bootstrap. `replicates` is sorted in place.
// Non-finite replicates and jackknife values must be removed by the caller.
BcaResult bca_from_replicates(double estimate, std::span<double> replicates,
                              std::span<const double> jackknife, double level);

BcaResult bca_ci(const UnitStatistic& statistic, std::size_t units, const BootstrapOptions& opts);

// Same resamples shared by every component of a vector-valued statistic; each
// component gets its own interval. Components whose estimate is not finite get
// NaN bounds.
std::vector<BcaResult> bca_ci_vector(const UnitVectorStatistic& statistic, std::size_t units,
                                     const BootstrapOptions& opts);

// Multinomial resample counts of replicate `r` (deterministic in seed and r).
std::vector<double> resample_weights(std::size_t units, std::uint64_t seed, std::size_t r);

}  // namespace difflab
