#pragma once

// Adoption-probability estimators over exposure events.
//
// Events are reduced to per-meme counts on a (kappa, S) grid once; every
// estimator and every bootstrap replicate works from those counts with a
// per-meme weight vector.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "difflab/bootstrap.hpp"
#include "difflab/exposure.hpp"
#include "difflab/hypothesis.hpp"

namespace difflab {

struct Grid {
  int kappa_max = 32;  // kappa above this is pooled into the last row
  int s_bins = 20;     // equal width on [0, 1], top bin right-closed

  void validate() const;
  int kappa_bin(std::uint32_t kappa) const {
    return kappa > static_cast<std::uint32_t>(kappa_max) ? kappa_max : static_cast<int>(kappa);
  }
  int s_bin(std::uint16_t alignment_q) const;
  int s_bin_of(double s) const;
  double s_low(int bin) const { return static_cast<double>(bin) / s_bins; }
  double s_high(int bin) const { return static_cast<double>(bin + 1) / s_bins; }
  int rows() const { return kappa_max + 1; }
  std::size_t cells() const { return static_cast<std::size_t>(rows()) * static_cast<std::size_t>(s_bins); }
  std::size_t cell(int kappa_bin, int s_bin) const {
    return static_cast<std::size_t>(kappa_bin) * static_cast<std::size_t>(s_bins) + static_cast<std::size_t>(s_bin);
  }
};

// Selects events by meme class, user class and meme kind; unset fields match
// everything.
struct EventFilter {
  std::optional<Topicality> meme_class;
  std::optional<Topicality> user_class;
  std::optional<MemeKind> kind;

  bool matches(const Event& e) const;
  // "all", or '+'-joined terms from: topical-memes, non-topical-memes,
  // middle-memes, topical-users, non-topical-users, middle-users, hashtags, urls.
  static EventFilter parse(std::string_view text);
  std::string name() const;
};

enum class Pooling { kPooled, kMacro };

struct MemeCounts {
  MemeId meme = 0;
  std::vector<double> n_e, n_a;  // grid cells
  // Sums of alignment_q and event weights; index 0 = seed (kappa 0) events,
  // 1 = kappa >= 1 events.
  std::array<double, 2> s_exposed{}, s_adopted{}, w_exposed{}, w_adopted{};
  // Exposure and adoption counts by user class, all kappa.
  std::array<double, 4> n_e_user{}, n_a_user{};
};

// Weighted sum of per-meme counts.
struct Totals {
  Grid grid;
  std::vector<double> n_e, n_a;
  std::array<double, 2> s_exposed{}, s_adopted{}, w_exposed{}, w_adopted{};
  std::array<double, 4> n_e_user{}, n_a_user{};
};

class CountTable {
 public:
  explicit CountTable(Grid grid = {}, EventFilter filter = {});

  void add(const Event& e);
  void add(std::span<const Event> events);
  static CountTable from_spool(const std::string& path, Grid grid, EventFilter filter = {});

  const Grid& grid() const { return grid_; }
  const EventFilter& filter() const { return filter_; }
  // Memes in first-seen order.
  const std::vector<MemeCounts>& memes() const { return memes_; }
  bool empty() const { return memes_.empty(); }

  // Empty `weights` means all ones.
  Totals totals(std::span<const double> weights = {}) const;

 private:
  Grid grid_;
  EventFilter filter_;
  std::vector<MemeCounts> memes_;
  std::unordered_map<MemeId, std::uint32_t> slot_;
};

struct CurveBin {
  int kappa = -1;  // -1 for S curves
  double s_low = 0.0, s_high = 1.0;
  std::uint64_t n_e = 0, n_a = 0;
  double p = 0.0;  // NaN when n_e == 0
  double ci_low = 0.0, ci_high = 0.0;
};
using Curve = std::vector<CurveBin>;

struct AdoptionSurface {
  Grid grid;
  std::vector<CurveBin> cells;  // kappa-major

  CurveBin& at(int kappa_bin, int s_bin) { return cells[grid.cell(kappa_bin, s_bin)]; }
  const CurveBin& at(int kappa_bin, int s_bin) const { return cells[grid.cell(kappa_bin, s_bin)]; }
  bool row_occupied(int kappa_bin) const;
  // Pooled-count marginals (no intervals).
  Curve kappa_marginal() const;
  Curve s_marginal() const;
};

// Point estimates from counts, no intervals.
Curve curve_kappa(const Totals& t);
Curve curve_s(const Totals& t);
AdoptionSurface surface(const Totals& t);
AdoptionSurface empty_surface(const Grid& grid);

struct EstimateOptions {
  Pooling pooling = Pooling::kPooled;
  BootstrapOptions bootstrap;
  bool with_ci = true;
};

Curve estimate_curve_kappa(const CountTable& table, const EstimateOptions& opts = {});
Curve estimate_curve_s(const CountTable& table, const EstimateOptions& opts = {});
AdoptionSurface estimate_surface(const CountTable& table, const EstimateOptions& opts = {});

struct DecompositionResult {
  Grid grid;
  Curve external;             // P_a(0, S)
  AdoptionSurface internal;   // P_a(kappa, S) - P_a(0, S); counts copied from the input
  Curve internal_kappa;       // P^i_a(kappa)
  Curve internal_s;           // P^i_a(S)
  std::vector<double> s_given_kappa;  // rows() x s_bins, empirical P(S | kappa)
  std::size_t negative_cells = 0;
  bool clamped = false;
};

// Pure algebra on a surface. Throws DataError when the kappa = 0 row is empty.
DecompositionResult decompose(const AdoptionSurface& total, bool clamp_negative = false);
DecompositionResult estimate_decomposition(const CountTable& table, const EstimateOptions& opts = {},
                                           bool clamp_negative = false);

// N_e-weighted mean of P^i_a over occupied kappa in [2, kappa_max] divided
// by P^i_a(1). NaN when undefined.
double persistence_ratio(const Curve& internal_kappa);

struct PersistenceResult {
  double value = 0.0;
  bool defined = false;
  Interval ci;
  std::size_t valid_replicates = 0;
};
PersistenceResult estimate_persistence(const CountTable& table, const EstimateOptions& opts = {});

struct SeedAlignment {
  double seed_ratio = 0.0;     // kappa = 0 events
  double nonseed_ratio = 0.0;  // kappa >= 1 events
  Interval seed_ci, nonseed_ci;
  Interval difference_ci;      // seed_ratio - nonseed_ratio
};
SeedAlignment seed_relative_alignment(const CountTable& table, const BootstrapOptions& opts = {});

double lift_from_rates(double topical_rate, double non_topical_rate);

struct LiftResult {
  double lift = 0.0;
  double rate_topical = 0.0;
  double rate_non_topical = 0.0;
  Interval ci;
};
// Expects a table restricted to topical memes.
LiftResult topical_user_lift(const CountTable& table, const BootstrapOptions& opts = {});

// Unbinned kappa and S distributions of adoption and exposure events.
// Exposure events include the ones that ended in adoption.
class EventDistributions {
 public:
  explicit EventDistributions(EventFilter filter = {});
  void add(const Event& e);
  void add(std::span<const Event> events);

  EmpiricalCdf kappa_adopted() const { return cdf(kappa_a_, 1.0); }
  EmpiricalCdf kappa_exposed() const { return cdf(kappa_e_, 1.0); }
  EmpiricalCdf s_adopted() const { return cdf(s_a_, kAlignmentScale); }
  EmpiricalCdf s_exposed() const { return cdf(s_e_, kAlignmentScale); }
  std::vector<std::pair<double, std::uint64_t>> s_adopted_sample() const { return sample(s_a_, kAlignmentScale); }
  std::vector<std::pair<double, std::uint64_t>> s_exposed_sample() const { return sample(s_e_, kAlignmentScale); }
  std::uint64_t adoptions() const { return adoptions_; }
  std::uint64_t exposures() const { return exposures_; }

 private:
  static EmpiricalCdf cdf(const std::vector<std::uint64_t>& h, double scale);
  static std::vector<std::pair<double, std::uint64_t>> sample(const std::vector<std::uint64_t>& h, double scale);

  EventFilter filter_;
  std::vector<std::uint64_t> kappa_a_, kappa_e_, s_a_, s_e_;
  std::uint64_t adoptions_ = 0, exposures_ = 0;
};

}  // namespace difflab
