#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace difflab {

using UserId = std::uint64_t;
using MemeId = std::uint32_t;
using TokenId = std::uint32_t;
using Timestamp = std::int64_t;

// Bad flags, windows or thresholds. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MemeKind : std::uint8_t { kHashtag = 0, kUrl = 1 };

// Topicality classes. The numeric values are part of the event spool layout.
enum class Topicality : std::uint8_t {
  kTopical = 0,
  kMiddle = 1,
  kNonTopical = 2,
  kUnknown = 3,
};

enum class EntityKind : std::uint8_t { kUser, kHashtag, kUrl };

std::string_view to_string(MemeKind kind);
std::string_view to_string(Topicality cls);
std::string_view to_string(EntityKind kind);
std::optional<Topicality> parse_topicality(std::string_view text);
std::optional<EntityKind> parse_entity_kind(std::string_view text);

inline EntityKind entity_kind_of(MemeKind kind) {
  return kind == MemeKind::kHashtag ? EntityKind::kHashtag : EntityKind::kUrl;
}

// Inclusive time interval.
struct TimeRange {
  Timestamp begin = std::numeric_limits<Timestamp>::min();
  Timestamp end = std::numeric_limits<Timestamp>::max();

  bool contains(Timestamp t) const { return t >= begin && t <= end; }
};

// Derives an independent 64-bit seed for stream `stream` from a root seed
// (splitmix64 finalizer over root ^ golden-ratio-scaled counter).
std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t v);

}  // namespace difflab
