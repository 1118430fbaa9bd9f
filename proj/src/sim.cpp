#include "difflab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <unordered_set>

#include "difflab/exposure.hpp"

namespace difflab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream ids for split_seed.
enum : std::uint64_t {
  kStreamGraph = 1,
  kStreamUsers = 2,
  kStreamMemes = 3,
  kStreamProfiles = 4,
  kStreamCascade = 1u << 20,
};

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t power_law_degree(std::mt19937_64& rng, double gamma, std::size_t lo, std::size_t hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = 1.0 - gamma;
  const double l = std::pow(static_cast<double>(lo), a);
  const double h = std::pow(static_cast<double>(hi) + 1.0, a);
  const double k = std::pow(l + u(rng) * (h - l), 1.0 / a);
  return std::clamp(static_cast<std::size_t>(k), lo, hi);
}

FollowerGraph configuration_graph(const SimConfig& c, std::mt19937_64& rng) {
  const std::size_t n = c.users;
  const std::size_t cap = std::min(c.degree_cap, n - 1);
  const std::size_t lo = std::min(c.min_degree, cap);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::pair<UserId, UserId>> edges;
  std::unordered_set<std::size_t> chosen;
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t d = power_law_degree(rng, c.degree_exponent, lo, cap);
    chosen.clear();
    while (chosen.size() < d) {
      const std::size_t f = pick(rng);
      if (f != v && chosen.insert(f).second) edges.emplace_back(f, v);
    }
  }
  return FollowerGraph::from_edges(std::move(edges));
}

FollowerGraph small_world_graph(const SimConfig& c, std::mt19937_64& rng) {
  const std::size_t n = c.users;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<UserId, UserId>> edges;
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t j = 1; j <= c.ring_neighbors; ++j) {
      for (std::size_t f : {(v + j) % n, (v + n - j % n) % n}) {
        if (u(rng) < c.rewire) {
          do {
            f = pick(rng);
          } while (f == v);
        }
        edges.emplace_back(f, v);
      }
    }
  }
  return FollowerGraph::from_edges(std::move(edges));
}

std::vector<std::uint32_t> draw_nouns(const std::vector<double>& theta, std::size_t count, std::size_t words,
                                      std::mt19937_64& rng) {
  std::discrete_distribution<std::uint32_t> topic(theta.begin(), theta.end());
  std::uniform_int_distribution<std::uint32_t> word(0, static_cast<std::uint32_t>(words - 1));
  // Tweets carry unique nouns, as the parser would dedupe them anyway.
  std::vector<std::uint32_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t w = topic(rng) * static_cast<std::uint32_t>(words) + word(rng);
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  }
  return out;
}

std::string_view kappa_shape_name(PlantedMechanism::KappaShape s) {
  switch (s) {
    case PlantedMechanism::KappaShape::kConstant: return "constant";
    case PlantedMechanism::KappaShape::kGeometric: return "geometric";
    default: return "peaked";
  }
}

std::string_view s_shape_name(PlantedMechanism::SShape s) {
  return s == PlantedMechanism::SShape::kFlat ? "flat" : "logistic";
}

PlantedMechanism::KappaShape parse_kappa_shape(const std::string& s) {
  if (s == "constant") return PlantedMechanism::KappaShape::kConstant;
  if (s == "geometric") return PlantedMechanism::KappaShape::kGeometric;
  if (s == "peaked") return PlantedMechanism::KappaShape::kPeaked;
  throw ConfigError("unknown kappa shape: " + s);
}

PlantedMechanism::SShape parse_s_shape(const std::string& s) {
  if (s == "flat") return PlantedMechanism::SShape::kFlat;
  if (s == "logistic") return PlantedMechanism::SShape::kLogistic;
  throw ConfigError("unknown S shape: " + s);
}

}  // namespace

// ---------------------------------------------------------------------------

void SimConfig::validate() const {
  if (users < 2) throw ConfigError("simulation needs at least 2 users");
  if (topics < 1) throw ConfigError("simulation needs at least 1 topic");
  if (words_per_topic < 1 || profile_nouns < 1) throw ConfigError("vocabulary sizes must be positive");
  if (degree_exponent <= 1.0) throw ConfigError("degree exponent must exceed 1");
  if (min_degree < 1 || degree_cap < min_degree) throw ConfigError("degree bounds must satisfy 1 <= min <= cap");
  if (rewire < 0.0 || rewire > 1.0) throw ConfigError("rewire probability must be in [0, 1]");
  if (graph == GraphModel::kSmallWorld && (ring_neighbors < 1 || 2 * ring_neighbors >= users))
    throw ConfigError("ring neighbours must be in [1, users/2)");
  for (double c : {user_concentration_low, user_concentration_high, topical_meme_concentration_low,
                   topical_meme_concentration_high, non_topical_meme_concentration_low,
                   non_topical_meme_concentration_high}) {
    if (!(c > 0.0)) throw ConfigError("Dirichlet concentrations must be positive");
  }
  if (user_concentration_low > user_concentration_high ||
      topical_meme_concentration_low > topical_meme_concentration_high ||
      non_topical_meme_concentration_low > non_topical_meme_concentration_high)
    throw ConfigError("concentration ranges must have low <= high");
  if (topical_memes + non_topical_memes == 0) throw ConfigError("simulation needs at least one meme");
  if (url_share < 0.0 || url_share > 1.0) throw ConfigError("url share must be in [0, 1]");
  if (epochs < 1) throw ConfigError("simulation needs at least one epoch");
  if (topic_ticks < 2 || (2 * topic_ticks) % epochs != 0 || 2 * topic_ticks / epochs < 2)
    throw ConfigError("topic_ticks must be >= epochs with 2*topic_ticks divisible by epochs");
}

nlohmann::json SimConfig::to_json() const {
  return {
      {"users", users},
      {"graph", graph == GraphModel::kConfiguration ? "configuration" : "small-world"},
      {"degree_exponent", degree_exponent},
      {"min_degree", min_degree},
      {"degree_cap", degree_cap},
      {"ring_neighbors", ring_neighbors},
      {"rewire", rewire},
      {"topics", topics},
      {"words_per_topic", words_per_topic},
      {"profile_nouns", profile_nouns},
      {"user_concentration_low", user_concentration_low},
      {"user_concentration_high", user_concentration_high},
      {"topical_meme_concentration_low", topical_meme_concentration_low},
      {"topical_meme_concentration_high", topical_meme_concentration_high},
      {"non_topical_meme_concentration_low", non_topical_meme_concentration_low},
      {"non_topical_meme_concentration_high", non_topical_meme_concentration_high},
      {"topical_memes", topical_memes},
      {"non_topical_memes", non_topical_memes},
      {"url_share", url_share},
      {"epochs", epochs},
      {"topic_ticks", topic_ticks},
      {"seed", seed},
  };
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  SimConfig c;
  try {
    c.users = j.value("users", c.users);
    const std::string g = j.value("graph", std::string("configuration"));
    if (g == "configuration") c.graph = GraphModel::kConfiguration;
    else if (g == "small-world") c.graph = GraphModel::kSmallWorld;
    else throw ConfigError("unknown graph model: " + g);
    c.degree_exponent = j.value("degree_exponent", c.degree_exponent);
    c.min_degree = j.value("min_degree", c.min_degree);
    c.degree_cap = j.value("degree_cap", c.degree_cap);
    c.ring_neighbors = j.value("ring_neighbors", c.ring_neighbors);
    c.rewire = j.value("rewire", c.rewire);
    c.topics = j.value("topics", c.topics);
    c.words_per_topic = j.value("words_per_topic", c.words_per_topic);
    c.profile_nouns = j.value("profile_nouns", c.profile_nouns);
    c.user_concentration_low = j.value("user_concentration_low", c.user_concentration_low);
    c.user_concentration_high = j.value("user_concentration_high", c.user_concentration_high);
    c.topical_meme_concentration_low = j.value("topical_meme_concentration_low", c.topical_meme_concentration_low);
    c.topical_meme_concentration_high = j.value("topical_meme_concentration_high", c.topical_meme_concentration_high);
    c.non_topical_meme_concentration_low =
        j.value("non_topical_meme_concentration_low", c.non_topical_meme_concentration_low);
    c.non_topical_meme_concentration_high =
        j.value("non_topical_meme_concentration_high", c.non_topical_meme_concentration_high);
    c.topical_memes = j.value("topical_memes", c.topical_memes);
    c.non_topical_memes = j.value("non_topical_memes", c.non_topical_memes);
    c.url_share = j.value("url_share", c.url_share);
    c.epochs = j.value("epochs", c.epochs);
    c.topic_ticks = j.value("topic_ticks", c.topic_ticks);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<double> sample_dirichlet(std::size_t k, double concentration, std::uint64_t seed) {
  if (k == 0 || !(concentration > 0.0)) throw ConfigError("Dirichlet needs k > 0 and positive concentration");
  std::mt19937_64 rng(seed);
  // Gamma(c) = Gamma(c + 1) U^(1/c), taken in log space so tiny
  // concentrations do not underflow to an all-zero draw.
  std::gamma_distribution<double> gamma(concentration + 1.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> logs(k);
  for (auto& l : logs) {
    double u;
    do {
      u = unif(rng);
    } while (u <= 0.0);
    l = std::log(gamma(rng)) + std::log(u) / concentration;
  }
  const double mx = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (auto& l : logs) {
    l = std::exp(l - mx);
    sum += l;
  }
  for (auto& l : logs) l /= sum;
  return logs;
}

World generate_world(const SimConfig& config) {
  config.validate();
  World w;
  w.config = config;
  {
    std::mt19937_64 rng(split_seed(config.seed, kStreamGraph));
    w.graph = config.graph == GraphModel::kConfiguration ? configuration_graph(config, rng)
                                                        : small_world_graph(config, rng);
  }
  const auto k = static_cast<std::size_t>(config.topics);
  {
    std::mt19937_64 rng(split_seed(config.seed, kStreamUsers));
    w.user_theta.reserve(config.users);
    for (std::size_t u = 0; u < config.users; ++u) {
      const double c = log_uniform(rng, config.user_concentration_low, config.user_concentration_high);
      w.user_concentration.push_back(c);
      w.user_theta.push_back(sample_dirichlet(k, c, rng()));
    }
  }
  {
    std::mt19937_64 rng(split_seed(config.seed, kStreamMemes));
    std::uniform_int_distribution<UserId> poster(0, config.users - 1);
    std::uniform_int_distribution<Timestamp> birth(1, config.topic_ticks - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t total = config.topical_memes + config.non_topical_memes;
    for (std::size_t j = 0; j < total; ++j) {
      SimMeme m;
      m.topical = j < config.topical_memes;
      m.kind = unif(rng) < config.url_share ? MemeKind::kUrl : MemeKind::kHashtag;
      m.name = m.kind == MemeKind::kUrl ? "http://sim.example/" + std::to_string(j) : "h" + std::to_string(j);
      const double c = m.topical ? log_uniform(rng, config.topical_meme_concentration_low,
                                               config.topical_meme_concentration_high)
                                 : log_uniform(rng, config.non_topical_meme_concentration_low,
                                               config.non_topical_meme_concentration_high);
      m.theta = sample_dirichlet(k, c, rng());
      m.first_poster = poster(rng);
      m.birth = birth(rng);
      w.memes.push_back(std::move(m));
    }
  }
  return w;
}

// ---------------------------------------------------------------------------

void PlantedMechanism::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("mechanism probability out of [0, 1]: ") + what);
  };
  if (table_grid) {
    table_grid->validate();
    if (internal_table.size() != table_grid->cells() ||
        external_table.size() != static_cast<std::size_t>(table_grid->s_bins))
      throw ConfigError("mechanism tables do not match their grid");
    for (int s = 0; s < table_grid->s_bins; ++s) {
      if (internal_table[table_grid->cell(0, s)] != 0.0) throw ConfigError("internal hazard must vanish at kappa 0");
    }
    for (double p : internal_table) prob(p, "internal table");
    for (double p : external_table) prob(p, "external table");
    return;
  }
  prob(internal_scale, "internal scale");
  prob(external_scale, "external scale");
  if (kappa_shape == KappaShape::kGeometric) prob(decay, "decay");
  if (kappa_shape == KappaShape::kPeaked && peak < 1) throw ConfigError("peak must be at least 1");
}

double PlantedMechanism::internal(std::uint32_t kappa, double s) const {
  if (kappa == 0) return 0.0;
  if (table_grid) return internal_table[table_grid->cell(table_grid->kappa_bin(kappa), table_grid->s_bin_of(s))];
  double f = internal_scale;
  const double k = static_cast<double>(kappa);
  switch (kappa_shape) {
    case KappaShape::kConstant: break;
    case KappaShape::kGeometric: f *= std::pow(decay, k - 1.0); break;
    case KappaShape::kPeaked: {
      const double x = k / static_cast<double>(peak);
      f *= x * std::exp(1.0 - x);
      break;
    }
  }
  const double g = internal_s == SShape::kFlat ? 1.0 : logistic(internal_slope * (s - internal_mid));
  return std::clamp(f * g, 0.0, 1.0);
}

double PlantedMechanism::external(double s) const {
  if (table_grid) return external_table[static_cast<std::size_t>(table_grid->s_bin_of(s))];
  const double g = external_s == SShape::kFlat ? 1.0 : logistic(external_slope * (s - external_mid));
  return std::clamp(external_scale * g, 0.0, 1.0);
}

double PlantedMechanism::adoption(std::uint32_t kappa, double s) const {
  return 1.0 - (1.0 - external(s)) * (1.0 - internal(kappa, s));
}

nlohmann::json PlantedMechanism::to_json() const {
  nlohmann::json j = {
      {"tag", tag},
      {"kappa_shape", kappa_shape_name(kappa_shape)},
      {"internal_scale", internal_scale},
      {"decay", decay},
      {"peak", peak},
      {"internal_s", s_shape_name(internal_s)},
      {"internal_mid", internal_mid},
      {"internal_slope", internal_slope},
      {"external_s", s_shape_name(external_s)},
      {"external_scale", external_scale},
      {"external_mid", external_mid},
      {"external_slope", external_slope},
  };
  if (table_grid) {
    j["table_grid"] = {{"kappa_max", table_grid->kappa_max}, {"s_bins", table_grid->s_bins}};
    j["internal_table"] = internal_table;
    j["external_table"] = external_table;
  }
  return j;
}

PlantedMechanism PlantedMechanism::from_json(const nlohmann::json& j) {
  PlantedMechanism m;
  try {
    m.tag = j.value("tag", m.tag);
    m.kappa_shape = parse_kappa_shape(j.value("kappa_shape", std::string("constant")));
    m.internal_scale = j.value("internal_scale", m.internal_scale);
    m.decay = j.value("decay", m.decay);
    m.peak = j.value("peak", m.peak);
    m.internal_s = parse_s_shape(j.value("internal_s", std::string("flat")));
    m.internal_mid = j.value("internal_mid", m.internal_mid);
    m.internal_slope = j.value("internal_slope", m.internal_slope);
    m.external_s = parse_s_shape(j.value("external_s", std::string("flat")));
    m.external_scale = j.value("external_scale", m.external_scale);
    m.external_mid = j.value("external_mid", m.external_mid);
    m.external_slope = j.value("external_slope", m.external_slope);
    if (j.contains("table_grid")) {
      Grid g;
      g.kappa_max = j["table_grid"].at("kappa_max").get<int>();
      g.s_bins = j["table_grid"].at("s_bins").get<int>();
      m.table_grid = g;
      m.internal_table = j.at("internal_table").get<std::vector<double>>();
      m.external_table = j.at("external_table").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad mechanism: ") + e.what());
  }
  m.validate();
  return m;
}

std::vector<std::string> preset_names() {
  return {"complex-topical", "simple-flat", "external-only", "logistic", "flat", "external-topical"};
}

PlantedMechanism preset_mechanism(const std::string& name) {
  using K = PlantedMechanism::KappaShape;
  using S = PlantedMechanism::SShape;
  PlantedMechanism m;
  m.tag = name;
  if (name == "complex-topical") {
    // rises to its maximum at eight exposures, increasing in S
    m.kappa_shape = K::kPeaked;
    m.internal_scale = 0.2;
    m.peak = 8;
    m.internal_s = S::kLogistic;
    m.internal_mid = 0.4;
    m.internal_slope = 6.0;
    m.external_scale = 0.01;
  } else if (name == "simple-flat") {
    m.kappa_shape = K::kGeometric;
    m.internal_scale = 0.08;
    m.decay = 0.6;
    m.external_scale = 0.01;
  } else if (name == "external-only") {
    m.external_scale = 0.01;
  } else if (name == "logistic") {
    m.internal_scale = 0.1;
    m.internal_s = S::kLogistic;
    m.internal_mid = 0.5;
    m.internal_slope = 10.0;
    m.external_scale = 0.01;
  } else if (name == "flat") {
    m.internal_scale = 0.05;
    m.external_scale = 0.01;
  } else if (name == "external-topical") {
    m.internal_scale = 0.05;
    m.external_s = S::kLogistic;
    m.external_scale = 0.04;
    m.external_mid = 0.5;
    m.external_slope = 10.0;
  } else {
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown mechanism preset '" + name + "' (known: " + list + ")");
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------

namespace {

struct SimTweet {
  Timestamp ts;
  UserId user;
  std::int64_t meme;  // -1 for none
  std::vector<std::uint32_t> nouns;
};

}  // namespace

TweetLog simulate(const World& world, const PlantedMechanism& mech, SimSummary* summary) {
  mech.validate();
  const SimConfig& cfg = world.config;
  const std::size_t n = cfg.users;
  const Timestamp t0 = cfg.topic_ticks;
  const Timestamp width = 2 * t0 / cfg.epochs;
  SimSummary sum;

  std::vector<SimTweet> tweets;
  {
    std::mt19937_64 rng(split_seed(cfg.seed, kStreamProfiles));
    std::uniform_int_distribution<Timestamp> when(0, t0 - 1);
    for (UserId u = 0; u < n; ++u) {
      const Timestamp ts = u == 0 ? 0 : when(rng);
      tweets.push_back({ts, u, -1, draw_nouns(world.user_theta[u], cfg.profile_nouns, cfg.words_per_topic, rng)});
    }
    for (std::size_t j = 0; j < world.memes.size(); ++j) {
      const SimMeme& m = world.memes[j];
      tweets.push_back({m.birth, m.first_poster, static_cast<std::int64_t>(j),
                        draw_nouns(m.theta, cfg.profile_nouns, cfg.words_per_topic, rng)});
    }
    for (UserId u = 0; u < n; ++u) tweets.push_back({t0 + 1, u, -1, {}});
    tweets.push_back({3 * t0, 0, -1, {}});
  }

  // Follower lists by user id.
  std::vector<std::vector<std::uint32_t>> followers(n);
  for (UserId u = 0; u < n; ++u) {
    if (auto v = world.graph.node(u)) {
      for (NodeId f : world.graph.followers(*v)) followers[u].push_back(static_cast<std::uint32_t>(world.graph.external(f)));
    }
  }

  std::vector<std::uint8_t> adopted(n);
  std::vector<std::uint32_t> kappa(n), hits(n);
  std::vector<double> s(n);
  std::vector<std::uint32_t> current, next, touched;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t j = 0; j < world.memes.size(); ++j) {
    const SimMeme& meme = world.memes[j];
    std::mt19937_64 rng(split_seed(cfg.seed, kStreamCascade + j));
    for (std::size_t u = 0; u < n; ++u) {
      s[u] = static_cast<double>(quantize_alignment(alignment(world.user_theta[u], meme.theta))) / kAlignmentScale;
    }
    std::fill(adopted.begin(), adopted.end(), 0);
    std::fill(kappa.begin(), kappa.end(), 0);
    auto trial = [&](std::uint32_t u) {
      if (unif(rng) < mech.external(s[u])) return true;
      return unif(rng) < mech.internal(kappa[u], s[u]);
    };

    adopted[meme.first_poster] = 1;
    for (std::uint32_t f : followers[meme.first_poster]) ++kappa[f];
    current.clear();
    for (std::uint32_t u = 0; u < n; ++u) {
      if (!adopted[u] && trial(u)) current.push_back(u);
    }
    for (int e = 1; e <= cfg.epochs && !current.empty(); ++e) {
      const Timestamp tick = t0 + e * width;
      for (std::uint32_t a : current) {
        adopted[a] = 1;
        if (kappa[a] == 0) ++sum.seed_adoptions;
        tweets.push_back({tick, a, static_cast<std::int64_t>(j), {}});
      }
      sum.adoptions += current.size();
      touched.clear();
      for (std::uint32_t a : current) {
        for (std::uint32_t f : followers[a]) {
          if (adopted[f]) continue;
          if (hits[f]++ == 0) touched.push_back(f);
        }
      }
      next.clear();
      for (std::uint32_t f : touched) {
        kappa[f] += hits[f];
        if (hits[f] > 1) ++sum.multi_exposures;
        hits[f] = 0;
        // No epoch is left for a last-epoch adopter to post in.
        if (e < cfg.epochs && trial(f)) next.push_back(f);
      }
      std::swap(current, next);
    }
  }

  std::stable_sort(tweets.begin(), tweets.end(), [](const SimTweet& a, const SimTweet& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.user != b.user) return a.user < b.user;
    return a.meme < b.meme;
  });

  std::vector<std::string> words(static_cast<std::size_t>(cfg.topics) * cfg.words_per_topic);
  for (std::size_t z = 0; z < static_cast<std::size_t>(cfg.topics); ++z) {
    for (std::size_t i = 0; i < cfg.words_per_topic; ++i) {
      words[z * cfg.words_per_topic + i] = "w" + std::to_string(z) + "_" + std::to_string(i);
    }
  }
  TweetLog log;
  std::vector<std::string_view> tags, urls, nouns;
  for (const SimTweet& t : tweets) {
    tags.clear();
    urls.clear();
    nouns.clear();
    if (t.meme >= 0) {
      const SimMeme& m = world.memes[static_cast<std::size_t>(t.meme)];
      (m.kind == MemeKind::kUrl ? urls : tags).push_back(m.name);
    }
    for (std::uint32_t w : t.nouns) nouns.push_back(words[w]);
    log.append_raw(t.ts, t.user, tags, urls, nouns, "en");
  }
  sum.tweets = log.size();
  if (summary) *summary = sum;
  return log;
}

void write_log_tsv(std::ostream& out, const TweetLog& log) {
  for (std::size_t i = 0; i < log.size(); ++i) out << format_tsv(log, i) << '\n';
}

void write_edges(std::ostream& out, const FollowerGraph& graph) {
  out << "# follower followee\n";
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    for (NodeId f : graph.followers(v)) out << graph.external(f) << ' ' << graph.external(v) << '\n';
  }
}

std::vector<TopicalProfile> truth_profiles(const World& world, const TweetLog& log, double q) {
  std::vector<TopicalProfile> out;
  out.reserve(world.user_theta.size() + world.memes.size());
  for (std::size_t u = 0; u < world.user_theta.size(); ++u) {
    out.push_back(TopicalProfile::make(u, EntityKind::kUser, world.user_theta[u]));
  }
  for (const SimMeme& m : world.memes) {
    const auto id = log.memes().find(m.name);
    if (!id) continue;
    out.push_back(TopicalProfile::make(*id, entity_kind_of(m.kind), m.theta));
  }
  classify_by_population(out, q);
  return out;
}

AdoptionSurface planted_truth(const PlantedMechanism& mech, const Grid& grid) {
  mech.validate();
  grid.validate();
  constexpr int kSteps = 64;
  AdoptionSurface out = empty_surface(grid);
  for (int k = 0; k < grid.rows(); ++k) {
    for (int b = 0; b < grid.s_bins; ++b) {
      double acc = 0.0;
      const double lo = grid.s_low(b), hi = grid.s_high(b);
      for (int i = 0; i < kSteps; ++i) {
        const double x = lo + (hi - lo) * (i + 0.5) / kSteps;
        acc += mech.adoption(static_cast<std::uint32_t>(k), x);
      }
      CurveBin& c = out.at(k, b);
      c.p = c.ci_low = c.ci_high = acc / kSteps;
    }
  }
  return out;
}

Curve truth_internal_s(const AdoptionSurface& truth, const AdoptionSurface& estimated) {
  const Grid& g = estimated.grid;
  if (truth.grid.kappa_max != g.kappa_max || truth.grid.s_bins != g.s_bins)
    throw ConfigError("truth and estimate grids differ");
  Curve out = estimated.s_marginal();
  for (int b = 0; b < g.s_bins; ++b) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < g.rows(); ++k) {
      const double w = static_cast<double>(estimated.at(k, b).n_e);
      num += w * truth.at(k, b).p;
      den += w;
    }
    CurveBin& c = out[static_cast<std::size_t>(b)];
    c.p = den > 0.0 ? num / den - truth.at(0, b).p : kNaN;
    c.ci_low = c.ci_high = c.p;
  }
  return out;
}

nlohmann::json truth_sidecar(const World& world, const PlantedMechanism& mech) {
  return {{"format", 1}, {"world_seed", world.config.seed}, {"config", world.config.to_json()},
          {"mechanism", mech.to_json()}};
}

}  // namespace difflab
