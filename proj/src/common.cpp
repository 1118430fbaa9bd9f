#include "difflab/common.hpp"

#include <cstdio>

namespace difflab {

std::string_view to_string(MemeKind kind) {
  return kind == MemeKind::kHashtag ? "hashtag" : "url";
}

std::string_view to_string(Topicality cls) {
  switch (cls) {
    case Topicality::kTopical: return "topical";
    case Topicality::kMiddle: return "middle";
    case Topicality::kNonTopical: return "non-topical";
    case Topicality::kUnknown: break;
  }
  return "unknown";
}

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::kUser: return "user";
    case EntityKind::kHashtag: return "hashtag";
    case EntityKind::kUrl: return "url";
  }
  return "user";
}

std::optional<Topicality> parse_topicality(std::string_view text) {
  if (text == "topical") return Topicality::kTopical;
  if (text == "middle") return Topicality::kMiddle;
  if (text == "non-topical") return Topicality::kNonTopical;
  if (text == "unknown") return Topicality::kUnknown;
  return std::nullopt;
}

std::optional<EntityKind> parse_entity_kind(std::string_view text) {
  if (text == "user") return EntityKind::kUser;
  if (text == "hashtag") return EntityKind::kHashtag;
  if (text == "url") return EntityKind::kUrl;
  return std::nullopt;
}

std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root ^ ((stream + 1) * 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace difflab
