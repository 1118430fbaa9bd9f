#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "difflab/exposure.hpp"
#include "difflab/graph.hpp"
#include "difflab/ingest.hpp"
#include "difflab/topics.hpp"

namespace difflab::test {

struct Row {
  Timestamp ts = 0;
  UserId user = 0;
  std::vector<std::string> hashtags;
  std::vector<std::string> urls;
  std::vector<std::string> nouns;
  std::string lang = "en";
};

TweetLog make_log(const std::vector<Row>& rows);

// Catalog accepting every meme in the log.
MemeCatalog accept_all(const TweetLog& log);

// Profiles over K topics with the given classes.
TopicalProfile user_profile(UserId u, std::vector<double> theta, Topicality cls = Topicality::kMiddle);
TopicalProfile meme_profile(MemeId m, std::vector<double> theta, Topicality cls = Topicality::kMiddle,
                            EntityKind kind = EntityKind::kHashtag);

struct Instance {
  TweetLog log;
  FollowerGraph graph;
  MemeCatalog catalog;
  std::vector<TopicalProfile> profiles;
  ExposureOptions opts;
};

// Small random instance (<= 20 users, <= 5 memes, <= 50 tweets) with many
// timestamp ties, users without profiles and random windows.
Instance random_instance(std::uint64_t seed);

std::vector<Event> sorted(std::vector<Event> v);

// Random events over a few memes, for properties of the estimators.
std::vector<Event> random_events(std::uint64_t seed, std::size_t memes, std::size_t per_meme, int kappa_max = 6);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::string& path);

}  // namespace difflab::test

namespace difflab::test {

// Exact posterior of collapsed two-topic LDA by enumerating all 2^T
// assignment states. `same[i][j]` is P(z_i == z_j) over the flattened tokens.
struct LdaPosterior {
  std::vector<double> topic0;             // P(z_i = 0)
  std::vector<std::vector<double>> same;  // P(z_i = z_j)
};
LdaPosterior enumerate_lda_posterior(const std::vector<std::vector<TokenId>>& docs, double alpha, double beta);

}  // namespace difflab::test

namespace difflab::test {

// Fits K=2 LDA to documents drawn from two topics with disjoint vocabularies
// and returns the smaller topic-word cosine to the planted topics under the
// best permutation.
double disjoint_topic_recovery(std::uint64_t seed, std::size_t docs_per_topic = 10, std::size_t doc_len = 30);

}  // namespace difflab::test

#include "difflab/sim.hpp"
#include "difflab/stats.hpp"

namespace difflab::test {

// simulate -> catalog -> planted profiles -> events, in memory.
struct SimRun {
  World world;
  TweetLog log;
  SimSummary summary;
  MemeCatalog catalog;
  std::vector<Event> events;
  ExposureStats stats;
};
SimRun run_simulation(const SimConfig& config, const PlantedMechanism& mech, std::uint64_t min_adopters = 1,
                      unsigned threads = 1);

}  // namespace difflab::test
