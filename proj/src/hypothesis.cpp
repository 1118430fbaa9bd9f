#include "difflab/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "difflab/common.hpp"

namespace difflab {

EmpiricalCdf EmpiricalCdf::from_sample(std::span<const double> values) {
  std::vector<std::pair<double, double>> w;
  w.reserve(values.size());
  for (double v : values) w.emplace_back(v, 1.0);
  return from_weighted(std::move(w));
}

EmpiricalCdf EmpiricalCdf::from_weighted(std::vector<std::pair<double, double>> values) {
  EmpiricalCdf cdf;
  std::sort(values.begin(), values.end());
  for (const auto& [v, w] : values) {
    if (w < 0.0 || std::isnan(v)) throw DataError("empirical CDF needs finite values and non-negative weights");
    if (w == 0.0) continue;
    cdf.total_ += w;
    if (!cdf.steps_.empty() && cdf.steps_.back().first == v) {
      cdf.steps_.back().second += w;
    } else {
      cdf.steps_.emplace_back(v, w);
    }
  }
  double acc = 0.0;
  for (auto& [v, f] : cdf.steps_) {
    acc += f;
    f = acc / cdf.total_;
  }
  if (!cdf.steps_.empty()) cdf.steps_.back().second = 1.0;
  return cdf;
}

double EmpiricalCdf::operator()(double x) const {
  auto it = std::upper_bound(steps_.begin(), steps_.end(), x,
                             [](double v, const std::pair<double, double>& s) { return v < s.first; });
  if (it == steps_.begin()) return 0.0;
  return std::prev(it)->second;
}

double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b) {
  if (a.empty() || b.empty()) throw DataError("KS distance of an empty sample");
  double d = 0.0;
  for (const auto& [x, f] : a.steps()) d = std::max(d, std::abs(f - b(x)));
  for (const auto& [x, f] : b.steps()) d = std::max(d, std::abs(a(x) - f));
  return d;
}

namespace {

constexpr std::size_t kExactLimit = 20;

struct Group {
  double value;
  double count_a;
  double count_b;
};

std::vector<Group> pool(std::span<const std::pair<double, std::uint64_t>> a,
                        std::span<const std::pair<double, std::uint64_t>> b) {
  std::vector<Group> g;
  g.reserve(a.size() + b.size());
  for (const auto& [v, c] : a) g.push_back({v, static_cast<double>(c), 0.0});
  for (const auto& [v, c] : b) g.push_back({v, 0.0, static_cast<double>(c)});
  std::sort(g.begin(), g.end(), [](const Group& x, const Group& y) { return x.value < y.value; });
  std::vector<Group> merged;
  for (const Group& x : g) {
    if (!merged.empty() && merged.back().value == x.value) {
      merged.back().count_a += x.count_a;
      merged.back().count_b += x.count_b;
    } else {
      merged.push_back(x);
    }
  }
  return merged;
}

// Exact two-sided p by enumerating every split of the pooled midranks.
double exact_p(const std::vector<double>& midranks, std::size_t na, double u_obs) {
  const std::size_t n = midranks.size();
  const double mean = static_cast<double>(na) * static_cast<double>(n - na) / 2.0;
  const double offset = static_cast<double>(na) * static_cast<double>(na + 1) / 2.0;
  const double obs = std::abs(u_obs - mean) - 1e-9;
  std::vector<std::size_t> idx(na);
  std::iota(idx.begin(), idx.end(), 0);
  std::uint64_t total = 0, extreme = 0;
  while (true) {
    double r = 0.0;
    for (std::size_t i : idx) r += midranks[i];
    ++total;
    if (std::abs(r - offset - mean) >= obs) ++extreme;
    // next combination
    std::size_t k = na;
    while (k > 0 && idx[k - 1] == n - na + k - 1) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < na; ++j) idx[j] = idx[j - 1] + 1;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

MannWhitneyResult run_mwu(const std::vector<Group>& groups, double na, double nb) {
  MannWhitneyResult res;
  if (na == 0.0 || nb == 0.0) throw DataError("Mann-Whitney U needs two non-empty samples");
  const double n = na + nb;
  double rank = 0.0, ra = 0.0, tie = 0.0;
  std::vector<double> midranks;
  const bool exact = n <= static_cast<double>(kExactLimit);
  for (const Group& g : groups) {
    const double t = g.count_a + g.count_b;
    const double mid = rank + (t + 1.0) / 2.0;
    ra += g.count_a * mid;
    tie += t * t * t - t;
    rank += t;
    if (exact) midranks.insert(midranks.end(), static_cast<std::size_t>(t), mid);
  }
  res.u = ra - na * (na + 1.0) / 2.0;
  const double mean = na * nb / 2.0;
  if (exact) {
    res.exact = true;
    res.p = exact_p(midranks, static_cast<std::size_t>(na), res.u);
    return res;
  }
  const double var = na * nb / 12.0 * ((n + 1.0) - tie / (n * (n - 1.0)));
  if (var <= 0.0) {
    res.p = 1.0;
    return res;
  }
  const double z = std::max(0.0, std::abs(res.u - mean) - 0.5) / std::sqrt(var);
  res.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  std::vector<std::pair<double, std::uint64_t>> wa, wb;
  for (double v : a) wa.emplace_back(v, 1);
  for (double v : b) wb.emplace_back(v, 1);
  return mann_whitney_u(wa, wb);
}

MannWhitneyResult mann_whitney_u(std::span<const std::pair<double, std::uint64_t>> a,
                                 std::span<const std::pair<double, std::uint64_t>> b) {
  double na = 0.0, nb = 0.0;
  for (const auto& x : a) na += static_cast<double>(x.second);
  for (const auto& x : b) nb += static_cast<double>(x.second);
  return run_mwu(pool(a, b), na, nb);
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("spearman: length mismatch");
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace difflab
