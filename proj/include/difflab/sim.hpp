#pragma once

// Synthetic worlds and cascades with planted adoption mechanisms.
//
// Timeline of a simulated log (T0 = topic_ticks):
//   [0, T0)        one profile tweet per user, meme births by a random poster
//   T0 + 1         one noun-free activity tweet per user
//   T0 + e*W       epoch e = 1..E, W = 2*T0/E; the last epoch ends at 3*T0
// so the default catalog window (first third of the span) covers exactly the
// topic period and events are analysed from T0 + 1 on.
//
// Adoption dynamics. Every exposure level a user reaches gets one external
// trial with q_e(S) followed by one internal trial with q_i(kappa, S); level 0
// is tried once at the start of epoch 1. Adopters of one epoch post together
// at its tick, and their followers reach their next level at that instant.
// A level therefore ends in adoption with probability
// 1 - (1 - q_e(S)) (1 - q_i(kappa, S)), the quantity the estimators target.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "difflab/graph.hpp"
#include "difflab/ingest.hpp"
#include "difflab/stats.hpp"
#include "difflab/topics.hpp"

namespace difflab {

enum class GraphModel { kConfiguration, kSmallWorld };

struct SimConfig {
  std::size_t users = 10000;
  GraphModel graph = GraphModel::kConfiguration;
  // Configuration model: follower counts from a power law truncated to
  // [min_degree, degree_cap], followers drawn uniformly.
  double degree_exponent = 2.5;
  std::size_t min_degree = 4;
  std::size_t degree_cap = 1000;
  // Small world: ring with `ring_neighbors` on each side, rewired with
  // probability `rewire`.
  std::size_t ring_neighbors = 5;
  double rewire = 0.1;

  int topics = 20;
  std::size_t words_per_topic = 30;
  std::size_t profile_nouns = 40;
  // Concentrations are drawn log-uniformly per entity from [low, high].
  // Entities drawn below 1 are the planted topical ones.
  double user_concentration_low = 0.05;
  double user_concentration_high = 20.0;
  double topical_meme_concentration_low = 0.05;
  double topical_meme_concentration_high = 0.5;
  double non_topical_meme_concentration_low = 2.0;
  double non_topical_meme_concentration_high = 20.0;
  std::size_t topical_memes = 100;
  std::size_t non_topical_memes = 100;
  double url_share = 0.0;

  int epochs = 20;
  Timestamp topic_ticks = 1000;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& j);
};

struct SimMeme {
  std::string name;  // as it appears in the log
  MemeKind kind = MemeKind::kHashtag;
  bool topical = false;
  UserId first_poster = 0;
  Timestamp birth = 0;
  std::vector<double> theta;
};

struct World {
  SimConfig config;
  FollowerGraph graph;
  std::vector<std::vector<double>> user_theta;  // by user id
  std::vector<double> user_concentration;
  std::vector<SimMeme> memes;
};

// Symmetric Dirichlet draw; stable for concentrations far below 1.
std::vector<double> sample_dirichlet(std::size_t k, double concentration, std::uint64_t seed);

World generate_world(const SimConfig& config);

// q_i(kappa, S) = f(kappa) g(S) and q_e(S), or explicit tables on a grid.
struct PlantedMechanism {
  enum class KappaShape { kConstant, kGeometric, kPeaked };
  enum class SShape { kFlat, kLogistic };

  std::string tag = "custom";

  KappaShape kappa_shape = KappaShape::kConstant;
  double internal_scale = 0.0;  // f(1) for constant/geometric, f(peak) for peaked
  double decay = 0.7;           // geometric ratio
  int peak = 8;
  SShape internal_s = SShape::kFlat;
  double internal_mid = 0.5, internal_slope = 10.0;

  SShape external_s = SShape::kFlat;
  double external_scale = 0.0;  // q_e when flat, else scale of the logistic
  double external_mid = 0.5, external_slope = 10.0;

  // Table form: q_i per (kappa bin, S bin) and q_e per S bin on `table_grid`.
  std::optional<Grid> table_grid;
  std::vector<double> internal_table;
  std::vector<double> external_table;

  void validate() const;
  double internal(std::uint32_t kappa, double s) const;
  double external(double s) const;
  // Probability that a level ends in adoption.
  double adoption(std::uint32_t kappa, double s) const;

  nlohmann::json to_json() const;
  static PlantedMechanism from_json(const nlohmann::json& j);
};

// complex-topical, simple-flat, external-only, logistic, flat,
// external-topical. Unknown names throw ConfigError listing these.
PlantedMechanism preset_mechanism(const std::string& name);
std::vector<std::string> preset_names();

struct SimSummary {
  std::size_t tweets = 0;
  std::size_t adoptions = 0;
  std::size_t seed_adoptions = 0;
  std::size_t multi_exposures = 0;  // followers hit by two posts at one tick
};

TweetLog simulate(const World& world, const PlantedMechanism& mech, SimSummary* summary = nullptr);

void write_log_tsv(std::ostream& out, const TweetLog& log);
void write_edges(std::ostream& out, const FollowerGraph& graph);

// Planted theta of every user and meme, keyed by the log's meme ids and
// classified by entropy quantile `q`.
std::vector<TopicalProfile> truth_profiles(const World& world, const TweetLog& log, double q = 0.25);

// The adoption surface the estimators target: per cell, the probability that
// a level ends in adoption, averaged uniformly over the S bin. The kappa_max
// row uses kappa = kappa_max.
AdoptionSurface planted_truth(const PlantedMechanism& mech, const Grid& grid);

// Truth of the pooled internal S curve P(S) - P(0, S), marginalized with the
// kappa mix of the estimated surface in each S bin.
Curve truth_internal_s(const AdoptionSurface& truth, const AdoptionSurface& estimated);

// Sidecar JSON: config, mechanism, seeds.
nlohmann::json truth_sidecar(const World& world, const PlantedMechanism& mech);

}  // namespace difflab
