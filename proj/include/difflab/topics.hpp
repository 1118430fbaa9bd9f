#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "difflab/common.hpp"

namespace difflab {

// Entropy in nats with 0 ln 0 = 0.
double entropy_nats(std::span<const double> theta);

// Cosine similarity of two non-negative vectors; 0 if either is all zero.
double alignment(std::span<const double> a, std::span<const double> b);

// Topic distribution of one user or meme.
struct TopicalProfile {
  std::uint64_t owner = 0;  // UserId, or MemeId for memes
  EntityKind kind = EntityKind::kUser;
  std::vector<double> theta;
  double entropy = 0.0;
  Topicality cls = Topicality::kUnknown;

  static TopicalProfile make(std::uint64_t owner, EntityKind kind, std::vector<double> theta);
};

struct ClassifyResult {
  double topical_threshold = 0.0;      // entropy <= this -> topical
  double non_topical_threshold = 0.0;  // entropy >= this -> non-topical
  bool degenerate = false;             // thresholds coincide on a tie
};

// Assigns topicality classes by entropy quantiles within one population. The
// lowest ceil(q n) entropies (and anything tied with the cut) are topical, the
// highest ceil(q n) non-topical; when both apply, topical wins.
ClassifyResult classify_topicality(std::span<TopicalProfile> profiles, double q);

// Runs classify_topicality separately on users, hashtags and urls.
std::vector<ClassifyResult> classify_by_population(std::vector<TopicalProfile>& profiles, double q);

// CSV `entity_id,kind,entropy,class,theta_0,...,theta_{K-1}`. Memes are named
// through `meme_names` (indexed by MemeId); users print as u<id>.
void write_profiles_csv(std::ostream& out, std::span<const TopicalProfile> profiles,
                        const std::vector<std::string>& meme_names);

// Inverse of write_profiles_csv. `meme_id_of` maps a meme string to its MemeId
// (nullopt drops the row). Throws DataError on malformed rows.
std::vector<TopicalProfile> read_profiles_csv(
    std::istream& in,
    const std::function<std::optional<std::uint64_t>(const std::string&)>& meme_id_of);

}  // namespace difflab
