#pragma once

// Exposure/adoption event extraction.
//
// For a meme m and a user f, f is k-exposed while exactly k distinct users she
// follows have adopted m (first post) and she has not adopted it herself. Each
// visit to an exposure level is one ExposureEvent; the event is an adoption
// event when f adopts before the next followee adoption reaches her.

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "difflab/common.hpp"
#include "difflab/graph.hpp"
#include "difflab/ingest.hpp"
#include "difflab/topics.hpp"

namespace difflab {

// Event flag layout (shared with the spool format):
//   bit 0     adopted
//   bit 1     aggregate record: `user` holds a multiplicity, not a user id
//   bits 2-3  user topicality class
//   bits 4-5  meme topicality class
//   bit 6     meme is a URL
namespace event_flags {
inline constexpr std::uint8_t kAdopted = 1u << 0;
inline constexpr std::uint8_t kAggregate = 1u << 1;
inline constexpr std::uint8_t kUrl = 1u << 6;
}  // namespace event_flags

// Alignment is carried on a 1e-4 grid, as an integer in [0, 10000].
inline constexpr std::uint32_t kAlignmentScale = 10000;
std::uint16_t quantize_alignment(double s);

struct Event {
  std::uint64_t user = 0;  // user id, or multiplicity of an aggregate record
  MemeId meme = 0;
  std::uint16_t kappa = 0;
  float alignment = 0.0f;
  std::uint8_t flags = 0;

  static Event make(std::uint64_t user, MemeId meme, std::uint32_t kappa, std::uint16_t alignment_q,
                    bool adopted, Topicality user_cls, Topicality meme_cls, MemeKind kind,
                    bool aggregate = false);

  bool adopted() const { return flags & event_flags::kAdopted; }
  bool aggregate() const { return flags & event_flags::kAggregate; }
  std::uint64_t weight() const { return aggregate() ? user : 1; }
  Topicality user_class() const { return static_cast<Topicality>((flags >> 2) & 3u); }
  Topicality meme_class() const { return static_cast<Topicality>((flags >> 4) & 3u); }
  MemeKind meme_kind() const { return (flags & event_flags::kUrl) ? MemeKind::kUrl : MemeKind::kHashtag; }
  std::uint16_t alignment_q() const;

  auto operator<=>(const Event&) const = default;
};

// Unit-normalized topic vectors and classes for users and memes, keyed by
// UserId and MemeId.
class ProfileIndex {
 public:
  ProfileIndex() = default;
  explicit ProfileIndex(std::span<const TopicalProfile> profiles);

  static constexpr std::uint32_t kNone = ~std::uint32_t{0};

  std::uint32_t user_slot(UserId u) const;
  std::uint32_t meme_slot(MemeId m) const { return m < meme_slot_.size() ? meme_slot_[m] : kNone; }
  Topicality user_class(std::uint32_t slot) const { return user_cls_[slot]; }
  Topicality meme_class(std::uint32_t slot) const { return meme_cls_[slot]; }
  std::size_t users() const { return user_ids_.size(); }
  std::span<const UserId> user_ids() const { return user_ids_; }

  // Quantized cosine similarity of a user and a meme.
  std::uint16_t alignment_q(std::uint32_t user_slot, std::uint32_t meme_slot) const;

 private:
  std::size_t dim_ = 0;
  std::vector<UserId> user_ids_;  // sorted; slot = position
  std::vector<double> user_vecs_;
  std::vector<Topicality> user_cls_;
  std::vector<std::uint32_t> meme_slot_;
  std::vector<double> meme_vecs_;
  std::vector<Topicality> meme_cls_;
};

struct ExposureOptions {
  // Events whose closing time falls inside `window` are emitted; posts after
  // window.end are ignored. Users active in `window` are eligible.
  TimeRange window;
  // Eligible = every profiled user instead of profiled users active in window.
  bool eligible_all_profiled = false;
  // Emit events for a meme's first poster as well.
  bool include_first_poster = false;
  // Emit one record per 0-exposure non-adoption instead of per-(meme, S,
  // user class) aggregate records.
  bool materialize_zero_level = false;
  unsigned threads = 1;
};

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void consume(std::span<const Event> events) = 0;
};

class VectorSink final : public EventSink {
 public:
  void consume(std::span<const Event> events) override {
    events_.insert(events_.end(), events.begin(), events.end());
  }
  std::vector<Event>& events() { return events_; }

 private:
  std::vector<Event> events_;
};

struct ExposureStats {
  std::size_t memes = 0;            // accepted memes with a profile
  std::size_t memes_skipped = 0;    // accepted memes without a profile
  std::size_t adoptions = 0;        // first posts inside the traces
  std::size_t events = 0;           // records emitted
  std::uint64_t weighted_events = 0;
  std::uint64_t seed_adoptions = 0;
};

// First-use adoptions of one meme, in time order (stable on input order).
struct MemeTrace {
  MemeId meme = 0;
  struct Adoption {
    UserId user;
    Timestamp time;
  };
  std::vector<Adoption> adoptions;
};

// Traces of every accepted meme, from birth up to `until`.
std::vector<MemeTrace> build_traces(const TweetLog& log, const MemeCatalog& catalog, Timestamp until);

// Single streaming pass, sharded by meme. Events of one meme are delivered
// contiguously; memes are delivered in ascending id order. Within a meme,
// events with kappa >= 1 (and seed adoptions) come in time order and the
// non-adopted kappa = 0 records follow them.
ExposureStats extract_events(const TweetLog& log, const FollowerGraph& graph,
                             const MemeCatalog& catalog, const ProfileIndex& profiles,
                             const ExposureOptions& opts, EventSink& sink);

// Naive reference: rebuilds every (user, meme) exposure timeline by rescanning
// all adoptions of the meme. Always materializes zero-level events. Throws
// ConfigError above 1000 tweets.
std::vector<Event> brute_force_events(const TweetLog& log, const FollowerGraph& graph,
                                      const MemeCatalog& catalog, const ProfileIndex& profiles,
                                      const ExposureOptions& opts);

// Collapses individual 0-exposure non-adoption records into aggregate records
// keyed by (meme, alignment, user class), in the same form extract_events uses.
std::vector<Event> aggregate_zero_level(std::vector<Event> events);

}  // namespace difflab
