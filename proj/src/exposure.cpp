#include "difflab/exposure.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace difflab {

std::uint16_t quantize_alignment(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return static_cast<std::uint16_t>(std::lround(s * kAlignmentScale));
}

Event Event::make(std::uint64_t user, MemeId meme, std::uint32_t kappa, std::uint16_t alignment_q,
                  bool adopted, Topicality user_cls, Topicality meme_cls, MemeKind kind,
                  bool aggregate) {
  Event e;
  e.user = user;
  e.meme = meme;
  e.kappa = static_cast<std::uint16_t>(std::min<std::uint32_t>(kappa, 0xffff));
  e.alignment = static_cast<float>(alignment_q) / static_cast<float>(kAlignmentScale);
  e.flags = static_cast<std::uint8_t>((adopted ? event_flags::kAdopted : 0) |
                                      (aggregate ? event_flags::kAggregate : 0) |
                                      (static_cast<unsigned>(user_cls) << 2) |
                                      (static_cast<unsigned>(meme_cls) << 4) |
                                      (kind == MemeKind::kUrl ? event_flags::kUrl : 0));
  return e;
}

std::uint16_t Event::alignment_q() const {
  return static_cast<std::uint16_t>(std::lround(static_cast<double>(alignment) * kAlignmentScale));
}

// ---------------------------------------------------------------------------
// ProfileIndex

namespace {

std::vector<double> unit(std::span<const double> v, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < v.size() && i < dim; ++i) n += v[i] * v[i];
  n = std::sqrt(n);
  if (n > 0.0) {
    for (std::size_t i = 0; i < v.size() && i < dim; ++i) out[i] = v[i] / n;
  }
  return out;
}

}  // namespace

ProfileIndex::ProfileIndex(std::span<const TopicalProfile> profiles) {
  for (const auto& p : profiles) dim_ = std::max(dim_, p.theta.size());
  std::vector<const TopicalProfile*> users;
  for (const auto& p : profiles) {
    if (p.kind == EntityKind::kUser) {
      users.push_back(&p);
    } else {
      const auto m = static_cast<MemeId>(p.owner);
      if (m >= meme_slot_.size()) meme_slot_.resize(m + 1, kNone);
      meme_slot_[m] = static_cast<std::uint32_t>(meme_cls_.size());
      const auto u = unit(p.theta, dim_);
      meme_vecs_.insert(meme_vecs_.end(), u.begin(), u.end());
      meme_cls_.push_back(p.cls);
    }
  }
  std::stable_sort(users.begin(), users.end(),
                   [](const TopicalProfile* a, const TopicalProfile* b) { return a->owner < b->owner; });
  for (const auto* p : users) {
    if (!user_ids_.empty() && user_ids_.back() == p->owner) continue;
    user_ids_.push_back(p->owner);
    const auto u = unit(p->theta, dim_);
    user_vecs_.insert(user_vecs_.end(), u.begin(), u.end());
    user_cls_.push_back(p->cls);
  }
}

std::uint32_t ProfileIndex::user_slot(UserId u) const {
  auto it = std::lower_bound(user_ids_.begin(), user_ids_.end(), u);
  if (it == user_ids_.end() || *it != u) return kNone;
  return static_cast<std::uint32_t>(it - user_ids_.begin());
}

std::uint16_t ProfileIndex::alignment_q(std::uint32_t user_slot, std::uint32_t meme_slot) const {
  const double* a = user_vecs_.data() + static_cast<std::size_t>(user_slot) * dim_;
  const double* b = meme_vecs_.data() + static_cast<std::size_t>(meme_slot) * dim_;
  double dot = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) dot += a[i] * b[i];
  return quantize_alignment(dot);
}

// ---------------------------------------------------------------------------
// Traces

std::vector<MemeTrace> build_traces(const TweetLog& log, const MemeCatalog& catalog, Timestamp until) {
  const auto accepted = catalog.accepted_memes();
  std::vector<std::uint32_t> slot(catalog.size(), ProfileIndex::kNone);
  std::vector<MemeTrace> traces(accepted.size());
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    slot[accepted[i]] = static_cast<std::uint32_t>(i);
    traces[i].meme = accepted[i];
  }
  // Duplicates (repeat posts by an adopter) are removed per meme afterwards.
  for (std::size_t i = 0; i < log.size(); ++i) {
    const TweetView v = log[i];
    if (v.timestamp > until) break;
    for (auto span : {v.hashtags, v.urls}) {
      for (MemeId m : span) {
        if (m < slot.size() && slot[m] != ProfileIndex::kNone) {
          traces[slot[m]].adoptions.push_back({v.user, v.timestamp});
        }
      }
    }
  }
  std::unordered_set<UserId> seen;
  for (auto& t : traces) {
    seen.clear();
    std::erase_if(t.adoptions, [&](const MemeTrace::Adoption& a) { return !seen.insert(a.user).second; });
  }
  return traces;
}

// ---------------------------------------------------------------------------
// Streaming extraction

namespace {

// Dense numbering of every user the engine may touch: graph nodes first (dense
// id = NodeId), then log users and profiled users absent from the graph.
struct UserSpace {
  std::size_t graph_nodes = 0;
  std::unordered_map<UserId, std::uint32_t> extra;
  std::vector<UserId> extra_ids;

  std::uint32_t dense(const FollowerGraph& g, UserId u) const {
    if (auto n = g.node(u)) return *n;
    auto it = extra.find(u);
    return it == extra.end() ? ProfileIndex::kNone : it->second;
  }
  std::uint32_t add(const FollowerGraph& g, UserId u) {
    if (auto n = g.node(u)) return *n;
    auto [it, inserted] = extra.emplace(u, static_cast<std::uint32_t>(graph_nodes + extra_ids.size()));
    if (inserted) extra_ids.push_back(u);
    return it->second;
  }
  std::size_t size() const { return graph_nodes + extra_ids.size(); }
  UserId external(const FollowerGraph& g, std::uint32_t d) const {
    return d < graph_nodes ? g.external(d) : extra_ids[d - graph_nodes];
  }
};

struct DenseTrace {
  MemeId meme = 0;
  std::uint32_t meme_slot = 0;
  std::uint32_t first_poster = ProfileIndex::kNone;
  std::vector<std::uint32_t> users;
  std::vector<Timestamp> times;
};

struct Context {
  const FollowerGraph& graph;
  const ProfileIndex& profiles;
  const ExposureOptions& opts;
  const UserSpace& space;
  std::vector<std::uint32_t> profile_slot;  // per dense user
  std::vector<std::uint32_t> eligible;      // dense ids, ascending
  std::vector<std::uint8_t> is_eligible;    // per dense user
  MemeKind kind_of(MemeId m) const { return kinds[m]; }
  std::span<const MemeKind> kinds;
};

// Per-worker scratch, reset lazily by stamping with the current meme run.
class Worker {
 public:
  explicit Worker(const Context& ctx)
      : ctx_(ctx), kappa_(ctx.space.size(), 0), stamp_(ctx.space.size(), 0), state_(ctx.space.size(), 0) {}

  void run(const DenseTrace& trace, std::vector<Event>& out, ExposureStats& stats);

 private:
  static constexpr std::uint8_t kAdoptedBit = 1;
  static constexpr std::uint8_t kZeroDoneBit = 2;  // 0-level resolved (seed or dropped)

  void touch(std::uint32_t u) {
    if (stamp_[u] != run_) {
      stamp_[u] = run_;
      kappa_[u] = 0;
      state_[u] = 0;
      touched_.push_back(u);
    }
  }

  const Context& ctx_;
  std::vector<std::uint32_t> kappa_;
  std::vector<std::uint32_t> stamp_;
  std::vector<std::uint8_t> state_;
  std::vector<std::uint32_t> touched_;
  std::uint32_t run_ = 0;
};

void Worker::run(const DenseTrace& trace, std::vector<Event>& out, ExposureStats& stats) {
  ++run_;
  touched_.clear();
  const auto& opts = ctx_.opts;
  const Timestamp start = opts.window.begin;
  const MemeId m = trace.meme;
  const MemeKind kind = ctx_.kind_of(m);
  const Topicality meme_cls = ctx_.profiles.meme_class(trace.meme_slot);
  const std::uint32_t excluded = opts.include_first_poster ? ProfileIndex::kNone : trace.first_poster;

  auto counts = [&](std::uint32_t u) { return ctx_.is_eligible[u] && u != excluded; };
  auto emit = [&](std::uint32_t u, std::uint32_t k, bool adopted) {
    const std::uint32_t ps = ctx_.profile_slot[u];
    out.push_back(Event::make(ctx_.space.external(ctx_.graph, u), m, k,
                              ctx_.profiles.alignment_q(ps, trace.meme_slot), adopted,
                              ctx_.profiles.user_class(ps), meme_cls, kind));
  };

  const std::size_t n = trace.users.size();
  std::vector<std::uint32_t> group;
  std::size_t i = 0;
  while (i < n) {
    const Timestamp t = trace.times[i];
    std::size_t j = i;
    while (j < n && trace.times[j] == t) ++j;
    // Adoptions at t close the open level first, so same-instant posts by
    // followees do not count toward them.
    group.clear();
    for (std::size_t a = i; a < j; ++a) {
      const std::uint32_t u = trace.users[a];
      touch(u);
      state_[u] |= kAdoptedBit;
      group.push_back(u);
      if (!counts(u)) continue;
      if (kappa_[u] == 0) state_[u] |= kZeroDoneBit;
      if (t >= start) {
        emit(u, kappa_[u], true);
        if (kappa_[u] == 0) ++stats.seed_adoptions;
      }
    }
    for (std::uint32_t a : group) {
      if (a >= ctx_.space.graph_nodes) continue;
      for (NodeId f : ctx_.graph.followers(a)) {
        if (!counts(f)) continue;
        touch(f);
        if (state_[f] & kAdoptedBit) continue;
        const std::uint32_t k = kappa_[f];
        if (k == 0) {
          if (t < start) state_[f] |= kZeroDoneBit;
        } else if (t >= start) {
          emit(f, k, false);
        }
        kappa_[f] = k + 1;
      }
    }
    stats.adoptions += j - i;
    i = j;
  }

  // Censoring of open levels >= 1 at window end.
  for (std::uint32_t u : touched_) {
    if ((state_[u] & kAdoptedBit) || kappa_[u] == 0 || !counts(u)) continue;
    emit(u, kappa_[u], false);
  }

  // Zero-exposure non-adoptions: every eligible user whose 0-level neither
  // ended in adoption nor closed before the window.
  std::vector<std::pair<std::uint32_t, std::uint8_t>> zero;  // (alignment_q, user class)
  for (std::uint32_t u : ctx_.eligible) {
    if (u == excluded) continue;
    if (stamp_[u] == run_ && (state_[u] & kZeroDoneBit)) continue;
    const std::uint32_t ps = ctx_.profile_slot[u];
    if (opts.materialize_zero_level) {
      emit(u, 0, false);
    } else {
      zero.emplace_back(ctx_.profiles.alignment_q(ps, trace.meme_slot),
                        static_cast<std::uint8_t>(ctx_.profiles.user_class(ps)));
    }
  }
  if (!zero.empty()) {
    std::sort(zero.begin(), zero.end());
    std::size_t a = 0;
    while (a < zero.size()) {
      std::size_t b = a;
      while (b < zero.size() && zero[b] == zero[a]) ++b;
      out.push_back(Event::make(b - a, m, 0, static_cast<std::uint16_t>(zero[a].first), false,
                                static_cast<Topicality>(zero[a].second), meme_cls, kind,
                                /*aggregate=*/true));
      a = b;
    }
  }
}

}  // namespace

ExposureStats extract_events(const TweetLog& log, const FollowerGraph& graph,
                             const MemeCatalog& catalog, const ProfileIndex& profiles,
                             const ExposureOptions& opts, EventSink& sink) {
  ExposureStats stats;
  UserSpace space;
  space.graph_nodes = graph.node_count();

  // Active users, and dense ids for everyone seen in the log.
  std::vector<std::uint8_t> active(graph.node_count(), 0);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const TweetView v = log[i];
    if (v.timestamp > opts.window.end) break;
    const std::uint32_t d = space.add(graph, v.user);
    if (d >= active.size()) active.resize(d + 1, 0);
    if (opts.window.contains(v.timestamp)) active[d] = 1;
  }
  for (UserId u : profiles.user_ids()) space.add(graph, u);
  active.resize(space.size(), 0);

  Context ctx{graph, profiles, opts, space, {}, {}, {}, log.meme_kinds()};
  ctx.profile_slot.assign(space.size(), ProfileIndex::kNone);
  ctx.is_eligible.assign(space.size(), 0);
  for (std::uint32_t d = 0; d < space.size(); ++d) {
    const std::uint32_t ps = profiles.user_slot(space.external(graph, d));
    ctx.profile_slot[d] = ps;
    if (ps != ProfileIndex::kNone && (opts.eligible_all_profiled || active[d])) {
      ctx.is_eligible[d] = 1;
      ctx.eligible.push_back(d);
    }
  }

  // Dense traces of the memes that can produce events.
  std::vector<DenseTrace> traces;
  for (auto& t : build_traces(log, catalog, opts.window.end)) {
    const std::uint32_t ms = profiles.meme_slot(t.meme);
    if (ms == ProfileIndex::kNone) {
      ++stats.memes_skipped;
      continue;
    }
    DenseTrace d;
    d.meme = t.meme;
    d.meme_slot = ms;
    d.first_poster = space.dense(graph, catalog[t.meme].first_poster);
    d.users.reserve(t.adoptions.size());
    d.times.reserve(t.adoptions.size());
    for (const auto& a : t.adoptions) {
      d.users.push_back(space.dense(graph, a.user));
      d.times.push_back(a.time);
    }
    traces.push_back(std::move(d));
  }
  stats.memes = traces.size();

  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(traces.size())));
  std::vector<Worker> workers;
  workers.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) workers.emplace_back(ctx);

  // Memes are processed in blocks; within a block worker w takes memes
  // w, w + threads, ... and results are flushed in meme order.
  const std::size_t block = static_cast<std::size_t>(threads) * 4;
  std::vector<std::vector<Event>> outputs(block);
  std::vector<ExposureStats> partial(threads);
  for (std::size_t base = 0; base < traces.size(); base += block) {
    const std::size_t count = std::min(block, traces.size() - base);
    auto job = [&](unsigned w) {
      for (std::size_t k = w; k < count; k += threads) {
        outputs[k].clear();
        workers[w].run(traces[base + k], outputs[k], partial[w]);
      }
    };
    if (threads == 1) {
      job(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < threads; ++w) pool.emplace_back(job, w);
      for (auto& th : pool) th.join();
    }
    for (std::size_t k = 0; k < count; ++k) {
      stats.events += outputs[k].size();
      for (const Event& e : outputs[k]) stats.weighted_events += e.weight();
      sink.consume(outputs[k]);
    }
  }
  for (const auto& p : partial) {
    stats.adoptions += p.adoptions;
    stats.seed_adoptions += p.seed_adoptions;
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Brute-force oracle

std::vector<Event> brute_force_events(const TweetLog& log, const FollowerGraph& graph,
                                      const MemeCatalog& catalog, const ProfileIndex& profiles,
                                      const ExposureOptions& opts) {
  if (log.size() > 1000) throw ConfigError("brute_force_events is limited to 1000 tweets");
  const Timestamp start = opts.window.begin;
  const Timestamp end = opts.window.end;

  std::vector<UserId> eligible;
  for (UserId u : profiles.user_ids()) {
    bool active = false;
    for (std::size_t i = 0; i < log.size() && !active; ++i) {
      active = log[i].user == u && opts.window.contains(log[i].timestamp);
    }
    if (active || opts.eligible_all_profiled) eligible.push_back(u);
  }

  auto follows = [&](UserId follower, UserId followee) {
    for (UserId f : graph.followers_of(followee)) {
      if (f == follower) return true;
    }
    return false;
  };

  std::vector<Event> out;
  for (MemeId m = 0; m < catalog.size(); ++m) {
    if (!catalog.accepted(m)) continue;
    const std::uint32_t ms = profiles.meme_slot(m);
    if (ms == ProfileIndex::kNone) continue;
    const MemeKind kind = log.meme_kind(m);
    const Topicality meme_cls = profiles.meme_class(ms);

    // First post of m by every user, up to window end.
    std::vector<std::pair<UserId, Timestamp>> adoptions;
    for (std::size_t i = 0; i < log.size(); ++i) {
      const TweetView v = log[i];
      if (v.timestamp > end) continue;
      bool has = false;
      for (MemeId x : v.hashtags) has |= x == m;
      for (MemeId x : v.urls) has |= x == m;
      if (!has) continue;
      bool dup = false;
      for (const auto& a : adoptions) dup |= a.first == v.user;
      if (!dup) adoptions.emplace_back(v.user, v.timestamp);
    }

    for (UserId u : eligible) {
      if (!opts.include_first_poster && u == catalog[m].first_poster) continue;
      std::optional<Timestamp> own;
      for (const auto& a : adoptions) {
        if (a.first == u) own = a.second;
      }
      std::vector<Timestamp> exposures;
      for (const auto& a : adoptions) {
        if (a.first == u || !follows(u, a.first)) continue;
        if (own && a.second >= *own) continue;
        exposures.push_back(a.second);
      }
      std::sort(exposures.begin(), exposures.end());
      const std::uint32_t ps = profiles.user_slot(u);
      const std::uint16_t s = profiles.alignment_q(ps, ms);
      for (std::size_t k = 0; k <= exposures.size(); ++k) {
        Timestamp close;
        bool adopted = false;
        if (k < exposures.size()) {
          close = exposures[k];
        } else if (own) {
          close = *own;
          adopted = true;
        } else {
          close = end;
        }
        if (close < start) continue;
        out.push_back(Event::make(u, m, static_cast<std::uint32_t>(k), s, adopted,
                                  profiles.user_class(ps), meme_cls, kind));
      }
    }
  }
  return out;
}

std::vector<Event> aggregate_zero_level(std::vector<Event> events) {
  std::vector<Event> out;
  std::vector<Event> zero;
  for (const Event& e : events) {
    if (e.kappa == 0 && !e.adopted() && !e.aggregate()) {
      Event key = e;
      key.user = 1;
      key.flags |= event_flags::kAggregate;
      zero.push_back(key);
    } else {
      out.push_back(e);
    }
  }
  std::sort(zero.begin(), zero.end(), [](const Event& a, const Event& b) {
    return std::tie(a.meme, a.alignment, a.flags) < std::tie(b.meme, b.alignment, b.flags);
  });
  for (const Event& e : zero) {
    if (!out.empty() && out.back().aggregate() && out.back().meme == e.meme &&
        out.back().alignment == e.alignment && out.back().flags == e.flags) {
      out.back().user += e.user;
    } else {
      out.push_back(e);
    }
  }
  return out;
}

}  // namespace difflab
