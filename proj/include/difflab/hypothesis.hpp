#pragma once

// Empirical CDFs and two-sample statistics.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace difflab {

// Right-continuous step function of a weighted sample.
class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;
  static EmpiricalCdf from_sample(std::span<const double> values);
  // (value, weight) pairs; weights must be non-negative.
  static EmpiricalCdf from_weighted(std::vector<std::pair<double, double>> values);

  // F(x) = P(X <= x).
  double operator()(double x) const;
  double total_weight() const { return total_; }
  bool empty() const { return steps_.empty(); }
  // Distinct support points with F at each.
  const std::vector<std::pair<double, double>>& steps() const { return steps_; }

 private:
  std::vector<std::pair<double, double>> steps_;
  double total_ = 0.0;
};

// Sup-norm distance over the merged support. Both CDFs must be non-empty.
double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b);

struct MannWhitneyResult {
  double u = 0.0;  // U of sample a
  double p = 1.0;  // two-sided
  bool exact = false;
};

// Exact permutation distribution when n_a + n_b <= 20, otherwise the normal
// approximation with tie correction and continuity correction.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Samples given as (value, multiplicity). Always uses the normal approximation
// unless the expanded sizes are within the exact limit.
MannWhitneyResult mann_whitney_u(std::span<const std::pair<double, std::uint64_t>> a,
                                 std::span<const std::pair<double, std::uint64_t>> b);

// Spearman rank correlation with average ranks for ties. NaN if either side
// is constant or fewer than two pairs.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace difflab
