#include "difflab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "difflab/spool.hpp"

namespace difflab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(double num, double den) { return den > 0.0 ? num / den : kNaN; }

std::uint64_t as_count(double x) { return static_cast<std::uint64_t>(std::llround(x)); }

}  // namespace

void Grid::validate() const {
  if (kappa_max < 1) throw ConfigError("kappa_max must be at least 1");
  if (s_bins < 1 || s_bins > static_cast<int>(kAlignmentScale)) throw ConfigError("s_bins must be in [1, 10000]");
}

int Grid::s_bin(std::uint16_t alignment_q) const {
  const auto b = static_cast<std::uint32_t>(alignment_q) * static_cast<std::uint32_t>(s_bins) / kAlignmentScale;
  return std::min(static_cast<int>(b), s_bins - 1);
}

int Grid::s_bin_of(double s) const {
  s = std::clamp(s, 0.0, 1.0);
  return std::min(static_cast<int>(std::floor(s * s_bins)), s_bins - 1);
}

// ---------------------------------------------------------------------------

bool EventFilter::matches(const Event& e) const {
  if (meme_class && e.meme_class() != *meme_class) return false;
  if (user_class && e.user_class() != *user_class) return false;
  if (kind && e.meme_kind() != *kind) return false;
  return true;
}

EventFilter EventFilter::parse(std::string_view text) {
  EventFilter f;
  if (text.empty() || text == "all") return f;
  auto set = [&](auto& slot, auto value, std::string_view term) {
    if (slot && *slot != value) throw ConfigError("conflicting class filter term: " + std::string(term));
    slot = value;
  };
  while (!text.empty()) {
    const auto plus = text.find('+');
    const std::string_view term = text.substr(0, plus);
    if (term == "topical-memes") set(f.meme_class, Topicality::kTopical, term);
    else if (term == "non-topical-memes") set(f.meme_class, Topicality::kNonTopical, term);
    else if (term == "middle-memes") set(f.meme_class, Topicality::kMiddle, term);
    else if (term == "topical-users") set(f.user_class, Topicality::kTopical, term);
    else if (term == "non-topical-users") set(f.user_class, Topicality::kNonTopical, term);
    else if (term == "middle-users") set(f.user_class, Topicality::kMiddle, term);
    else if (term == "hashtags") set(f.kind, MemeKind::kHashtag, term);
    else if (term == "urls") set(f.kind, MemeKind::kUrl, term);
    else if (term != "all") throw ConfigError("unknown class filter term: " + std::string(term));
    if (plus == std::string_view::npos) break;
    text.remove_prefix(plus + 1);
  }
  return f;
}

std::string EventFilter::name() const {
  std::string out;
  auto add = [&](std::string_view s) {
    if (!out.empty()) out += '+';
    out += s;
  };
  auto cls = [](Topicality t) -> std::string_view {
    switch (t) {
      case Topicality::kTopical: return "topical";
      case Topicality::kNonTopical: return "non-topical";
      case Topicality::kMiddle: return "middle";
      default: return "unknown";
    }
  };
  if (meme_class) add(std::string(cls(*meme_class)) + "-memes");
  if (user_class) add(std::string(cls(*user_class)) + "-users");
  if (kind) add(*kind == MemeKind::kHashtag ? "hashtags" : "urls");
  return out.empty() ? "all" : out;
}

// ---------------------------------------------------------------------------

CountTable::CountTable(Grid grid, EventFilter filter) : grid_(grid), filter_(filter) { grid_.validate(); }

void CountTable::add(const Event& e) {
  if (!filter_.matches(e)) return;
  auto [it, fresh] = slot_.try_emplace(e.meme, static_cast<std::uint32_t>(memes_.size()));
  if (fresh) {
    MemeCounts mc;
    mc.meme = e.meme;
    mc.n_e.assign(grid_.cells(), 0.0);
    mc.n_a.assign(grid_.cells(), 0.0);
    memes_.push_back(std::move(mc));
  }
  MemeCounts& mc = memes_[it->second];
  const double w = static_cast<double>(e.weight());
  const double sw = w * static_cast<double>(e.alignment_q());
  const std::size_t c = grid_.cell(grid_.kappa_bin(e.kappa), grid_.s_bin(e.alignment_q()));
  const int seed = e.kappa == 0 ? 0 : 1;
  const auto ucls = static_cast<std::size_t>(e.user_class());
  mc.n_e[c] += w;
  mc.w_exposed[seed] += w;
  mc.s_exposed[seed] += sw;
  mc.n_e_user[ucls] += w;
  if (e.adopted()) {
    mc.n_a[c] += w;
    mc.w_adopted[seed] += w;
    mc.s_adopted[seed] += sw;
    mc.n_a_user[ucls] += w;
  }
}

void CountTable::add(std::span<const Event> events) {
  for (const Event& e : events) add(e);
}

CountTable CountTable::from_spool(const std::string& path, Grid grid, EventFilter filter) {
  CountTable t(grid, filter);
  SpoolReader reader(path);
  std::vector<Event> batch;
  while (reader.next(batch)) t.add(batch);
  return t;
}

Totals CountTable::totals(std::span<const double> weights) const {
  if (!weights.empty() && weights.size() != memes_.size()) throw ConfigError("weight vector does not match meme count");
  Totals t;
  t.grid = grid_;
  t.n_e.assign(grid_.cells(), 0.0);
  t.n_a.assign(grid_.cells(), 0.0);
  for (std::size_t m = 0; m < memes_.size(); ++m) {
    const double w = weights.empty() ? 1.0 : weights[m];
    if (w == 0.0) continue;
    const MemeCounts& mc = memes_[m];
    for (std::size_t c = 0; c < t.n_e.size(); ++c) {
      t.n_e[c] += w * mc.n_e[c];
      t.n_a[c] += w * mc.n_a[c];
    }
    for (int i = 0; i < 2; ++i) {
      t.s_exposed[i] += w * mc.s_exposed[i];
      t.s_adopted[i] += w * mc.s_adopted[i];
      t.w_exposed[i] += w * mc.w_exposed[i];
      t.w_adopted[i] += w * mc.w_adopted[i];
    }
    for (int i = 0; i < 4; ++i) {
      t.n_e_user[i] += w * mc.n_e_user[i];
      t.n_a_user[i] += w * mc.n_a_user[i];
    }
  }
  return t;
}

// ---------------------------------------------------------------------------

namespace {

CurveBin make_bin(int kappa, double lo, double hi, double ne, double na) {
  CurveBin b;
  b.kappa = kappa;
  b.s_low = lo;
  b.s_high = hi;
  b.n_e = as_count(ne);
  b.n_a = as_count(na);
  b.p = ratio(na, ne);
  b.ci_low = b.ci_high = b.p;
  return b;
}

// Per-bin probabilities of one curve shape under a meme weighting.
enum class Shape { kKappa, kS, kSurface };

std::size_t shape_size(const Grid& g, Shape s) {
  switch (s) {
    case Shape::kKappa: return static_cast<std::size_t>(g.rows());
    case Shape::kS: return static_cast<std::size_t>(g.s_bins);
    default: return g.cells();
  }
}

std::size_t shape_index(const Grid& g, Shape s, std::size_t cell) {
  switch (s) {
    case Shape::kKappa: return cell / static_cast<std::size_t>(g.s_bins);
    case Shape::kS: return cell % static_cast<std::size_t>(g.s_bins);
    default: return cell;
  }
}

void reduce(const Grid& g, Shape s, std::span<const double> ne_cells, std::span<const double> na_cells,
            std::vector<double>& ne, std::vector<double>& na) {
  ne.assign(shape_size(g, s), 0.0);
  na.assign(shape_size(g, s), 0.0);
  for (std::size_t c = 0; c < ne_cells.size(); ++c) {
    const std::size_t i = shape_index(g, s, c);
    ne[i] += ne_cells[c];
    na[i] += na_cells[c];
  }
}

std::vector<double> shape_probs(const CountTable& table, std::span<const double> weights, Shape shape,
                                Pooling pooling) {
  const Grid& g = table.grid();
  std::vector<double> ne, na;
  if (pooling == Pooling::kPooled) {
    const Totals t = table.totals(weights);
    reduce(g, shape, t.n_e, t.n_a, ne, na);
    std::vector<double> p(ne.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = ratio(na[i], ne[i]);
    return p;
  }
  // Macro: weighted average over memes of each meme's own ratio.
  const std::size_t n = shape_size(g, shape);
  std::vector<double> sum(n, 0.0), wsum(n, 0.0);
  const auto& memes = table.memes();
  for (std::size_t m = 0; m < memes.size(); ++m) {
    const double w = weights.empty() ? 1.0 : weights[m];
    if (w == 0.0) continue;
    reduce(g, shape, memes[m].n_e, memes[m].n_a, ne, na);
    for (std::size_t i = 0; i < n; ++i) {
      if (ne[i] > 0.0) {
        sum[i] += w * na[i] / ne[i];
        wsum[i] += w;
      }
    }
  }
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = ratio(sum[i], wsum[i]);
  return p;
}

std::vector<CurveBin> bins_for(const Grid& g, Shape shape, const Totals& t) {
  std::vector<double> ne, na;
  reduce(g, shape, t.n_e, t.n_a, ne, na);
  std::vector<CurveBin> out;
  out.reserve(ne.size());
  for (std::size_t i = 0; i < ne.size(); ++i) {
    int kappa = -1;
    double lo = 0.0, hi = 1.0;
    if (shape == Shape::kKappa) {
      kappa = static_cast<int>(i);
    } else if (shape == Shape::kS) {
      lo = g.s_low(static_cast<int>(i));
      hi = g.s_high(static_cast<int>(i));
    } else {
      kappa = static_cast<int>(i / static_cast<std::size_t>(g.s_bins));
      const int s = static_cast<int>(i % static_cast<std::size_t>(g.s_bins));
      lo = g.s_low(s);
      hi = g.s_high(s);
    }
    out.push_back(make_bin(kappa, lo, hi, ne[i], na[i]));
  }
  return out;
}

// Keeps the point estimate inside its interval; BCa endpoints are replicate
// quantiles and can exclude an estimate sitting at the edge of the support.
void attach(CurveBin& b, double p, const BcaResult& r) {
  b.p = p;
  if (b.n_e == 0 || !std::isfinite(p)) {
    b.p = b.ci_low = b.ci_high = kNaN;
    return;
  }
  b.ci_low = std::isfinite(r.ci.low) ? std::min(r.ci.low, p) : p;
  b.ci_high = std::isfinite(r.ci.high) ? std::max(r.ci.high, p) : p;
}

std::vector<CurveBin> estimate_shape(const CountTable& table, Shape shape, const EstimateOptions& opts) {
  const Totals t = table.totals();
  std::vector<CurveBin> bins = bins_for(table.grid(), shape, t);
  const std::vector<double> p = shape_probs(table, {}, shape, opts.pooling);
  if (!opts.with_ci || table.empty()) {
    for (std::size_t i = 0; i < bins.size(); ++i) attach(bins[i], p[i], BcaResult{p[i], {kNaN, kNaN}});
    return bins;
  }
  const auto ci = bca_ci_vector(
      [&](std::span<const double> w) { return shape_probs(table, w, shape, opts.pooling); },
      table.memes().size(), opts.bootstrap);
  for (std::size_t i = 0; i < bins.size(); ++i) attach(bins[i], p[i], ci[i]);
  return bins;
}

}  // namespace

Curve curve_kappa(const Totals& t) { return bins_for(t.grid, Shape::kKappa, t); }
Curve curve_s(const Totals& t) { return bins_for(t.grid, Shape::kS, t); }

AdoptionSurface surface(const Totals& t) {
  AdoptionSurface s;
  s.grid = t.grid;
  s.cells = bins_for(t.grid, Shape::kSurface, t);
  return s;
}

AdoptionSurface empty_surface(const Grid& grid) {
  Totals t;
  t.grid = grid;
  t.n_e.assign(grid.cells(), 0.0);
  t.n_a.assign(grid.cells(), 0.0);
  return surface(t);
}

bool AdoptionSurface::row_occupied(int kappa_bin) const {
  for (int s = 0; s < grid.s_bins; ++s) {
    if (at(kappa_bin, s).n_e > 0) return true;
  }
  return false;
}

namespace {

Totals totals_of(const AdoptionSurface& s) {
  Totals t;
  t.grid = s.grid;
  t.n_e.resize(s.cells.size());
  t.n_a.resize(s.cells.size());
  for (std::size_t c = 0; c < s.cells.size(); ++c) {
    t.n_e[c] = static_cast<double>(s.cells[c].n_e);
    t.n_a[c] = static_cast<double>(s.cells[c].n_a);
  }
  return t;
}

}  // namespace

Curve AdoptionSurface::kappa_marginal() const { return curve_kappa(totals_of(*this)); }
Curve AdoptionSurface::s_marginal() const { return curve_s(totals_of(*this)); }

Curve estimate_curve_kappa(const CountTable& table, const EstimateOptions& opts) {
  return estimate_shape(table, Shape::kKappa, opts);
}

Curve estimate_curve_s(const CountTable& table, const EstimateOptions& opts) {
  return estimate_shape(table, Shape::kS, opts);
}

AdoptionSurface estimate_surface(const CountTable& table, const EstimateOptions& opts) {
  AdoptionSurface s;
  s.grid = table.grid();
  s.cells = estimate_shape(table, Shape::kSurface, opts);
  return s;
}

// ---------------------------------------------------------------------------

DecompositionResult decompose(const AdoptionSurface& total, bool clamp_negative) {
  const Grid& g = total.grid;
  if (total.cells.size() != g.cells()) throw ConfigError("surface does not match its grid");
  if (!total.row_occupied(0)) throw DataError("decomposition needs exposure events at kappa = 0");
  DecompositionResult r;
  r.grid = g;
  r.clamped = clamp_negative;
  r.external.reserve(static_cast<std::size_t>(g.s_bins));
  for (int s = 0; s < g.s_bins; ++s) r.external.push_back(total.at(0, s));

  r.internal = total;
  for (int k = 0; k < g.rows(); ++k) {
    for (int s = 0; s < g.s_bins; ++s) {
      CurveBin& c = r.internal.at(k, s);
      const CurveBin& ext = r.external[static_cast<std::size_t>(s)];
      const bool defined = c.n_e > 0 && ext.n_e > 0;
      c.p = defined ? c.p - ext.p : kNaN;
      c.ci_low = c.ci_high = c.p;
      if (defined && k > 0 && c.p < 0.0) {
        ++r.negative_cells;
        if (clamp_negative) c.p = c.ci_low = c.ci_high = 0.0;
      }
    }
  }

  const Totals t = totals_of(total);
  const Curve ps = curve_s(t);
  r.internal_s = ps;
  for (int s = 0; s < g.s_bins; ++s) {
    CurveBin& b = r.internal_s[static_cast<std::size_t>(s)];
    const CurveBin& ext = r.external[static_cast<std::size_t>(s)];
    b.p = (b.n_e > 0 && ext.n_e > 0) ? b.p - ext.p : kNaN;
    b.ci_low = b.ci_high = b.p;
  }

  const Curve pk = curve_kappa(t);
  r.internal_kappa = pk;
  r.s_given_kappa.assign(g.cells(), 0.0);
  for (int k = 0; k < g.rows(); ++k) {
    const double row = static_cast<double>(pk[static_cast<std::size_t>(k)].n_e);
    double ext = 0.0, mass = 0.0;
    for (int s = 0; s < g.s_bins; ++s) {
      const double w = row > 0.0 ? static_cast<double>(total.at(k, s).n_e) / row : 0.0;
      r.s_given_kappa[g.cell(k, s)] = w;
      const CurveBin& e = r.external[static_cast<std::size_t>(s)];
      if (w > 0.0 && e.n_e > 0) {
        ext += e.p * w;
        mass += w;
      }
    }
    CurveBin& b = r.internal_kappa[static_cast<std::size_t>(k)];
    // S bins never seen at kappa = 0 carry no external estimate; the
    // remaining weights are renormalized.
    b.p = (b.n_e > 0 && mass > 0.0) ? b.p - ext / mass : kNaN;
    b.ci_low = b.ci_high = b.p;
  }
  return r;
}

namespace {

std::vector<double> flatten(const DecompositionResult& d) {
  std::vector<double> v;
  v.reserve(d.external.size() + d.internal.cells.size() + d.internal_kappa.size() + d.internal_s.size());
  for (const auto& b : d.external) v.push_back(b.p);
  for (const auto& b : d.internal.cells) v.push_back(b.p);
  for (const auto& b : d.internal_kappa) v.push_back(b.p);
  for (const auto& b : d.internal_s) v.push_back(b.p);
  return v;
}

std::optional<DecompositionResult> try_decompose(const CountTable& table, std::span<const double> w, bool clamp) {
  const AdoptionSurface s = surface(table.totals(w));
  if (!s.row_occupied(0)) return std::nullopt;
  return decompose(s, clamp);
}

}  // namespace

DecompositionResult estimate_decomposition(const CountTable& table, const EstimateOptions& opts,
                                           bool clamp_negative) {
  DecompositionResult d = decompose(surface(table.totals()), clamp_negative);
  if (!opts.with_ci) return d;
  const std::vector<double> point = flatten(d);
  const auto ci = bca_ci_vector(
      [&](std::span<const double> w) {
        auto r = try_decompose(table, w, clamp_negative);
        return r ? flatten(*r) : std::vector<double>(point.size(), kNaN);
      },
      table.memes().size(), opts.bootstrap);
  std::size_t i = 0;
  for (auto& b : d.external) { attach(b, point[i], ci[i]); ++i; }
  for (auto& b : d.internal.cells) { attach(b, point[i], ci[i]); ++i; }
  for (auto& b : d.internal_kappa) { attach(b, point[i], ci[i]); ++i; }
  for (auto& b : d.internal_s) { attach(b, point[i], ci[i]); ++i; }
  return d;
}

double persistence_ratio(const Curve& internal_kappa) {
  double p1 = kNaN;
  double mean = 0.0, weight = 0.0;
  for (const CurveBin& b : internal_kappa) {
    if (b.n_e == 0 || !std::isfinite(b.p)) continue;
    if (b.kappa == 1) p1 = b.p;
    if (b.kappa >= 2) {
      const double w = static_cast<double>(b.n_e);
      weight += w;
      mean += w / weight * (b.p - mean);
    }
  }
  if (!(p1 > 0.0) || weight == 0.0) return kNaN;
  return mean / p1;
}

PersistenceResult estimate_persistence(const CountTable& table, const EstimateOptions& opts) {
  auto stat = [&](std::span<const double> w) {
    auto d = try_decompose(table, w, false);
    return d ? persistence_ratio(d->internal_kappa) : kNaN;
  };
  PersistenceResult r;
  r.value = stat({});
  r.defined = std::isfinite(r.value);
  r.ci = {kNaN, kNaN};
  if (!r.defined) return r;
  if (!opts.with_ci) {
    r.ci = {r.value, r.value};
    return r;
  }
  const BcaResult b = bca_ci(stat, table.memes().size(), opts.bootstrap);
  r.valid_replicates = b.valid_replicates;
  r.ci = {std::min(b.ci.low, r.value), std::max(b.ci.high, r.value)};
  return r;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> seed_stats(const Totals& t) {
  const double seed = ratio(ratio(t.s_adopted[0], t.w_adopted[0]), ratio(t.s_exposed[0], t.w_exposed[0]));
  const double other = ratio(ratio(t.s_adopted[1], t.w_adopted[1]), ratio(t.s_exposed[1], t.w_exposed[1]));
  return {seed, other, seed - other};
}

Interval bounded(const BcaResult& r, double p) {
  if (!std::isfinite(p)) return {kNaN, kNaN};
  return {std::isfinite(r.ci.low) ? std::min(r.ci.low, p) : p, std::isfinite(r.ci.high) ? std::max(r.ci.high, p) : p};
}

}  // namespace

SeedAlignment seed_relative_alignment(const CountTable& table, const BootstrapOptions& opts) {
  const auto point = seed_stats(table.totals());
  const auto ci = bca_ci_vector([&](std::span<const double> w) { return seed_stats(table.totals(w)); },
                                table.memes().size(), opts);
  SeedAlignment r;
  r.seed_ratio = point[0];
  r.nonseed_ratio = point[1];
  r.seed_ci = bounded(ci[0], point[0]);
  r.nonseed_ci = bounded(ci[1], point[1]);
  r.difference_ci = bounded(ci[2], point[2]);
  return r;
}

double lift_from_rates(double topical_rate, double non_topical_rate) {
  return ratio(topical_rate, non_topical_rate) - 1.0;
}

LiftResult topical_user_lift(const CountTable& table, const BootstrapOptions& opts) {
  constexpr auto kT = static_cast<std::size_t>(Topicality::kTopical);
  constexpr auto kN = static_cast<std::size_t>(Topicality::kNonTopical);
  auto stat = [&](std::span<const double> w) {
    const Totals t = table.totals(w);
    return lift_from_rates(ratio(t.n_a_user[kT], t.n_e_user[kT]), ratio(t.n_a_user[kN], t.n_e_user[kN]));
  };
  const Totals t = table.totals();
  LiftResult r;
  r.rate_topical = ratio(t.n_a_user[kT], t.n_e_user[kT]);
  r.rate_non_topical = ratio(t.n_a_user[kN], t.n_e_user[kN]);
  r.lift = lift_from_rates(r.rate_topical, r.rate_non_topical);
  r.ci = bounded(bca_ci(stat, table.memes().size(), opts), r.lift);
  return r;
}

// ---------------------------------------------------------------------------

EventDistributions::EventDistributions(EventFilter filter)
    : filter_(filter),
      kappa_a_(65536, 0),
      kappa_e_(65536, 0),
      s_a_(kAlignmentScale + 1, 0),
      s_e_(kAlignmentScale + 1, 0) {}

void EventDistributions::add(const Event& e) {
  if (!filter_.matches(e)) return;
  const std::uint64_t w = e.weight();
  kappa_e_[e.kappa] += w;
  s_e_[e.alignment_q()] += w;
  exposures_ += w;
  if (e.adopted()) {
    kappa_a_[e.kappa] += w;
    s_a_[e.alignment_q()] += w;
    adoptions_ += w;
  }
}

void EventDistributions::add(std::span<const Event> events) {
  for (const Event& e : events) add(e);
}

EmpiricalCdf EventDistributions::cdf(const std::vector<std::uint64_t>& h, double scale) {
  std::vector<std::pair<double, double>> v;
  for (const auto& [x, n] : sample(h, scale)) v.emplace_back(x, static_cast<double>(n));
  return EmpiricalCdf::from_weighted(std::move(v));
}

std::vector<std::pair<double, std::uint64_t>> EventDistributions::sample(const std::vector<std::uint64_t>& h,
                                                                        double scale) {
  std::vector<std::pair<double, std::uint64_t>> v;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] > 0) v.emplace_back(static_cast<double>(i) / scale, h[i]);
  }
  return v;
}

}  // namespace difflab
