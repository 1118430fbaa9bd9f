#include "difflab/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "difflab/exposure.hpp"
#include "difflab/graph.hpp"
#include "difflab/ingest.hpp"
#include "difflab/lda.hpp"
#include "difflab/sim.hpp"
#include "difflab/spool.hpp"
#include "difflab/topics.hpp"

namespace fs = std::filesystem;

namespace difflab {

void RunConfig::validate() const {
  if (schema != "auto" && schema != "tsv" && schema != "jsonl") throw ConfigError("--schema must be auto, tsv or jsonl");
  if (!(english_threshold >= 0.0 && english_threshold <= 1.0)) throw ConfigError("--english-threshold must be in [0, 1]");
  if (k < 1) throw ConfigError("--k must be at least 1");
  if (iters < 1) throw ConfigError("--iters must be at least 1");
  if (!(beta > 0.0)) throw ConfigError("--beta must be positive");
  if (alpha == 0.0 || std::isnan(alpha)) throw ConfigError("--alpha must be positive");
  if (!(quantile > 0.0 && quantile <= 0.5)) throw ConfigError("--quantile must be in (0, 0.5]");
  if (by != "kappa" && by != "s" && by != "surface" && by != "all") throw ConfigError("--by must be kappa, s, surface or all");
  grid().validate();
  if (bootstrap < 1) throw ConfigError("--bootstrap must be at least 1");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("--level must be in (0, 1)");
  for (const auto& c : classes) EventFilter::parse(c);
  if (graph_model != "configuration" && graph_model != "small-world")
    throw ConfigError("--graph-model must be configuration or small-world");
}

unsigned RunConfig::resolved_threads() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

nlohmann::json RunConfig::to_json() const {
  auto opt = [](const std::optional<Timestamp>& t) { return t ? nlohmann::json(*t) : nlohmann::json(nullptr); };
  return {
      {"log", log},
      {"graph", graph},
      {"schema", schema},
      {"strict", strict},
      {"emerge_start", opt(emerge_start)},
      {"emerge_end", opt(emerge_end)},
      {"analysis_start", opt(analysis_start)},
      {"analysis_end", opt(analysis_end)},
      {"english_threshold", english_threshold},
      {"min_adopters", min_adopters},
      {"k", k},
      {"iters", iters},
      {"alpha", alpha},
      {"beta", beta},
      {"quantile", quantile},
      {"average_last_n", average_last_n},
      {"profiles_from_truth", profiles_from_truth},
      {"truth", truth},
      {"eligible_all_profiled", eligible_all_profiled},
      {"include_first_poster", include_first_poster},
      {"materialize_zero_level", materialize_zero_level},
      {"events_csv", events_csv},
      {"by", by},
      {"classes", classes},
      {"kappa_max", kappa_max},
      {"s_bins", s_bins},
      {"macro", macro},
      {"bootstrap", bootstrap},
      {"level", level},
      {"clamp_negative", clamp_negative},
      {"mechanism", mechanism},
      {"users", users},
      {"memes", memes},
      {"epochs", epochs},
      {"sim_topics", sim_topics},
      {"graph_model", graph_model},
      {"seed", seed},
  };
}

std::vector<std::string> default_classes() {
  std::vector<std::string> out{"all"};
  for (const char* cls : {"topical-memes", "non-topical-memes", "topical-users", "non-topical-users"}) {
    for (const char* kind : {"hashtags", "urls"}) out.push_back(std::string(cls) + "+" + kind);
  }
  return out;
}

namespace {

std::uint64_t hash_file(const std::string& path, std::uint64_t h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
  }
  return h;
}

}  // namespace

std::string config_hash(const RunConfig& cfg, const std::vector<std::string>& inputs) {
  std::uint64_t h = fnv1a(cfg.to_json().dump());
  for (const auto& p : inputs) {
    h = fnv1a(p, h);
    h = hash_file(p, h);
  }
  return hex64(h);
}

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

std::string in_workdir(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.workdir) / name).string();
}

void ensure_workdir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.workdir, ec);
  if (ec) throw ConfigError("cannot create work directory " + cfg.workdir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

// Adds artifacts of one stage to the manifest, replacing the stage's entry.
void record_manifest(const RunConfig& cfg, const std::string& stage, const std::string& hash,
                     const std::vector<std::string>& artifacts) {
  const std::string path = in_workdir(cfg, artifact::kManifest);
  nlohmann::json m = nlohmann::json::object();
  {
    std::ifstream in(path);
    if (in) {
      try {
        m = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception&) {
        m = nlohmann::json::object();
      }
    }
  }
  nlohmann::json list = nlohmann::json::array();
  for (const auto& a : artifacts) list.push_back({{"path", fs::path(a).filename().string()}, {"config_hash", hash}});
  m["stages"][stage] = {{"config_hash", hash}, {"config", cfg.to_json()}, {"artifacts", list}};
  auto out = open_out(path);
  out << m.dump(2) << '\n';
}

LogSchema schema_of(const RunConfig& cfg) {
  if (cfg.schema == "tsv") return LogSchema::kTsv;
  if (cfg.schema == "jsonl") return LogSchema::kJsonLines;
  return LogSchema::kAuto;
}

TweetLog load_log(const RunConfig& cfg, std::ostream& msg) {
  if (cfg.log.empty()) throw ConfigError("missing --log");
  ParseStats st;
  TweetLog log = parse_log(cfg.log, ParseOptions{schema_of(cfg), cfg.strict}, &st);
  if (st.skipped > 0) msg << "warning: skipped " << st.skipped << " malformed lines (first at line " << st.first_bad_line << ")\n";
  if (log.empty()) throw DataError("log has no records: " + cfg.log);
  return log;
}

FollowerGraph load_graph(const RunConfig& cfg, std::ostream& msg) {
  if (cfg.graph.empty()) throw ConfigError("missing --graph");
  EdgeLoadStats st;
  FollowerGraph g = load_edges(cfg.graph, &st);
  if (st.malformed > 0) msg << "warning: skipped " << st.malformed << " malformed edge lines\n";
  return g;
}

struct Windows {
  CatalogWindow catalog;
  TimeRange analysis;
};

Windows resolve_windows(const RunConfig& cfg, const TweetLog& log) {
  Windows w;
  w.catalog = default_window(log);
  if (cfg.emerge_start) w.catalog.emergence_start = *cfg.emerge_start;
  if (cfg.emerge_end) w.catalog.emergence_end = *cfg.emerge_end;
  if (cfg.analysis_end) w.catalog.analysis_end = *cfg.analysis_end;
  w.catalog.validate();
  w.analysis.begin = cfg.analysis_start ? *cfg.analysis_start : w.catalog.emergence_end + 1;
  w.analysis.end = w.catalog.analysis_end;
  if (w.analysis.begin > w.analysis.end) throw ConfigError("analysis window is empty");
  return w;
}

MemeCatalog make_catalog(const RunConfig& cfg, const TweetLog& log, const Windows& w) {
  CatalogOptions o;
  o.window = w.catalog;
  o.english_threshold = cfg.english_threshold;
  o.min_adopters = cfg.min_adopters;
  return build_catalog(log, o);
}

std::vector<std::string> meme_names(const TweetLog& log) {
  std::vector<std::string> names(log.memes().size());
  for (std::uint32_t i = 0; i < names.size(); ++i) names[i] = log.memes().name(i);
  return names;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed JSON in " + path + ": " + e.what());
  }
}

std::vector<TopicalProfile> load_profiles(const RunConfig& cfg, const TweetLog& log) {
  if (cfg.profiles_from_truth) {
    if (cfg.truth.empty()) throw ConfigError("--profiles-from-truth needs --truth");
    const nlohmann::json side = read_json(cfg.truth);
    if (!side.contains("config")) throw DataError("truth sidecar has no config: " + cfg.truth);
    const World world = generate_world(SimConfig::from_json(side["config"]));
    return truth_profiles(world, log, cfg.quantile);
  }
  const std::string path = in_workdir(cfg, artifact::kProfiles);
  std::ifstream in(path);
  if (!in) throw DataError("no profiles at " + path + " (run `topics` or pass --profiles-from-truth)");
  return read_profiles_csv(in, [&](const std::string& s) -> std::optional<std::uint64_t> {
    if (auto id = log.memes().find(s)) return *id;
    return std::nullopt;
  });
}

std::string fmt(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

nlohmann::json jnum(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

std::string file_tag(const std::string& cls) { return EventFilter::parse(cls).name(); }

std::vector<std::string> resolved_classes(const RunConfig& cfg) {
  return cfg.classes.empty() ? default_classes() : cfg.classes;
}

std::string spool_path(const RunConfig& cfg) { return in_workdir(cfg, artifact::kSpool); }

// One pass over the spool fills one count table per class.
std::vector<CountTable> load_tables(const RunConfig& cfg, const std::vector<std::string>& classes,
                                    std::uint64_t* records = nullptr) {
  std::vector<CountTable> tables;
  for (const auto& c : classes) tables.emplace_back(cfg.grid(), EventFilter::parse(c));
  SpoolReader reader(spool_path(cfg));
  if (records) *records = reader.count();
  std::vector<Event> batch;
  while (reader.next(batch)) {
    for (auto& t : tables) t.add(batch);
  }
  return tables;
}

EstimateOptions estimate_options(const RunConfig& cfg, std::uint64_t stream) {
  EstimateOptions o;
  o.pooling = cfg.macro ? Pooling::kMacro : Pooling::kPooled;
  o.bootstrap.replicates = cfg.bootstrap;
  o.bootstrap.level = cfg.level;
  o.bootstrap.seed = split_seed(cfg.seed, stream);
  o.bootstrap.threads = cfg.resolved_threads();
  return o;
}

std::vector<std::string> estimation_inputs(const RunConfig& cfg) {
  std::vector<std::string> in{spool_path(cfg)};
  if (!cfg.truth.empty()) in.push_back(cfg.truth);
  return in;
}

// Truth marginalized with the estimated surface's counts.
Curve truth_for(const AdoptionSurface& truth, const AdoptionSurface& counts, const std::string& shape) {
  const Grid& g = counts.grid;
  if (shape == "surface") {
    AdoptionSurface t = truth;
    for (std::size_t c = 0; c < t.cells.size(); ++c) {
      t.cells[c].n_e = counts.cells[c].n_e;
      t.cells[c].n_a = counts.cells[c].n_a;
    }
    return t.cells;
  }
  Curve out = shape == "kappa" ? counts.kappa_marginal() : counts.s_marginal();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double num = 0.0, den = 0.0;
    const int rows = shape == "kappa" ? 1 : g.rows();
    const int cols = shape == "kappa" ? g.s_bins : 1;
    for (int a = 0; a < rows; ++a) {
      for (int b = 0; b < cols; ++b) {
        const int k = shape == "kappa" ? static_cast<int>(i) : a;
        const int s = shape == "kappa" ? b : static_cast<int>(i);
        const double w = static_cast<double>(counts.at(k, s).n_e);
        num += w * truth.at(k, s).p;
        den += w;
      }
    }
    out[i].p = den > 0.0 ? num / den : std::nan("");
  }
  return out;
}

void write_truth_csv(std::ostream& out, const Curve& est, const Curve& truth, const std::string& hash) {
  out << "# config_hash=" << hash << '\n';
  out << "bin_kappa,bin_s_low,bin_s_high,n_e,estimate,truth,delta\n";
  for (std::size_t i = 0; i < est.size(); ++i) {
    const CurveBin& e = est[i];
    out << (e.kappa >= 0 ? std::to_string(e.kappa) : std::string()) << ',' << fmt(e.s_low) << ','
        << fmt(e.s_high) << ',' << e.n_e << ',' << fmt(e.p) << ',' << fmt(truth[i].p) << ','
        << fmt(e.p - truth[i].p) << '\n';
  }
}

}  // namespace

void write_curve_csv(std::ostream& out, const Curve& curve, const std::string& hash) {
  out << "# config_hash=" << hash << '\n';
  out << "bin_kappa,bin_s_low,bin_s_high,n_e,n_a,p,ci_low,ci_high\n";
  for (const CurveBin& b : curve) {
    out << (b.kappa >= 0 ? std::to_string(b.kappa) : std::string()) << ',' << fmt(b.s_low) << ','
        << fmt(b.s_high) << ',' << b.n_e << ',' << b.n_a << ',' << fmt(b.p) << ',' << fmt(b.ci_low) << ','
        << fmt(b.ci_high) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Stages

void run_ingest(const RunConfig& cfg, std::ostream& msg) {
  cfg.validate();
  ensure_workdir(cfg);
  const TweetLog log = load_log(cfg, msg);
  const FollowerGraph graph = load_graph(cfg, msg);
  const Windows w = resolve_windows(cfg, log);
  const MemeCatalog catalog = make_catalog(cfg, log, w);
  const std::string hash = config_hash(cfg, {cfg.log, cfg.graph});

  const std::string cat_path = in_workdir(cfg, artifact::kCatalog);
  {
    auto out = open_out(cat_path);
    out << "# config_hash=" << hash << '\n';
    catalog.write_csv(out, log.memes());
  }
  const std::string table_path = in_workdir(cfg, artifact::kMemeTable);
  {
    auto out = open_out(table_path);
    out << "# config_hash=" << hash << '\n' << "id\tname\tkind\n";
    for (std::uint32_t m = 0; m < log.memes().size(); ++m) {
      out << m << '\t' << log.memes().name(m) << '\t' << to_string(log.meme_kind(m)) << '\n';
    }
  }
  const std::string graph_path = in_workdir(cfg, artifact::kGraphCache);
  graph.save_binary(graph_path);
  msg << "ingest: " << log.size() << " tweets, " << graph.node_count() << " nodes, " << graph.edge_count()
      << " edges, " << catalog.accepted_count() << " of " << catalog.size() << " memes accepted\n";
  record_manifest(cfg, "ingest", hash, {cat_path, table_path, graph_path});
}

void run_topics(const RunConfig& cfg, std::ostream& msg) {
  cfg.validate();
  ensure_workdir(cfg);
  if (cfg.profiles_from_truth) {
    msg << "topics: skipped, profiles come from the truth sidecar\n";
    return;
  }
  const TweetLog log = load_log(cfg, msg);
  const Windows w = resolve_windows(cfg, log);
  const MemeCatalog catalog = make_catalog(cfg, log, w);
  const NounBags bags = build_noun_bags(log, w.catalog.emergence());

  std::vector<std::vector<TokenId>> docs;
  std::vector<std::pair<std::uint64_t, EntityKind>> owners;
  for (const NounBag& b : bags.users) {
    docs.push_back(b.tokens);
    owners.emplace_back(b.owner, EntityKind::kUser);
  }
  for (const NounBag& b : bags.memes) {
    const auto m = static_cast<MemeId>(b.owner);
    if (!catalog.accepted(m)) continue;
    docs.push_back(b.tokens);
    owners.emplace_back(b.owner, entity_kind_of(log.meme_kind(m)));
  }
  if (docs.empty()) throw DataError("no English noun bags in the topic window");

  LdaOptions lo;
  lo.topics = cfg.k;
  lo.iterations = cfg.iters;
  lo.alpha = cfg.alpha;
  lo.beta = cfg.beta;
  lo.seed = split_seed(cfg.seed, 0x70);
  lo.average_last_n = cfg.average_last_n;
  const LdaFit fit = fit_lda(docs, lo);

  std::vector<TopicalProfile> profiles;
  profiles.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    profiles.push_back(TopicalProfile::make(owners[d].first, owners[d].second, fit.theta[d]));
  }
  classify_by_population(profiles, cfg.quantile);

  const std::string hash = config_hash(cfg, {cfg.log});
  const std::string model_path = in_workdir(cfg, artifact::kModel);
  fit.model.save(model_path);
  const std::string prof_path = in_workdir(cfg, artifact::kProfiles);
  {
    auto out = open_out(prof_path);
    out << "# config_hash=" << hash << '\n';
    write_profiles_csv(out, profiles, meme_names(log));
  }
  msg << "topics: " << bags.users.size() << " user and " << (docs.size() - bags.users.size())
      << " meme profiles, K=" << cfg.k << '\n';
  record_manifest(cfg, "topics", hash, {model_path, prof_path});
}

void run_events(const RunConfig& cfg, std::ostream& msg) {
  cfg.validate();
  ensure_workdir(cfg);
  const TweetLog log = load_log(cfg, msg);
  const FollowerGraph graph = load_graph(cfg, msg);
  const Windows w = resolve_windows(cfg, log);
  const MemeCatalog catalog = make_catalog(cfg, log, w);
  const std::vector<TopicalProfile> profiles = load_profiles(cfg, log);
  const ProfileIndex index(profiles);

  ExposureOptions o;
  o.window = w.analysis;
  o.eligible_all_profiled = cfg.eligible_all_profiled;
  o.include_first_poster = cfg.include_first_poster;
  o.materialize_zero_level = cfg.materialize_zero_level;
  o.threads = cfg.resolved_threads();

  std::vector<std::string> inputs{cfg.log, cfg.graph};
  inputs.push_back(cfg.profiles_from_truth ? cfg.truth : in_workdir(cfg, artifact::kProfiles));
  const std::string hash = config_hash(cfg, inputs);

  const std::string spool = spool_path(cfg);
  ExposureStats st;
  {
    SpoolWriter writer(spool);
    st = extract_events(log, graph, catalog, index, o, writer);
    writer.close();
  }
  std::vector<std::string> outputs{spool};
  if (cfg.events_csv) {
    const std::string csv = in_workdir(cfg, artifact::kEventsCsv);
    auto out = open_out(csv);
    out << "# config_hash=" << hash << '\n';
    write_events_csv(out, read_spool(spool), meme_names(log));
    outputs.push_back(csv);
  }
  if (st.memes_skipped > 0) msg << "warning: " << st.memes_skipped << " accepted memes have no profile\n";
  msg << "events: " << st.memes << " memes, " << st.events << " records (" << st.weighted_events
      << " events), " << st.adoptions << " adoptions\n";
  record_manifest(cfg, "events", hash, outputs);
}

void run_curves(const RunConfig& cfg, std::ostream& msg) {
  cfg.validate();
  ensure_workdir(cfg);
  const auto classes = resolved_classes(cfg);
  const auto tables = load_tables(cfg, classes);
  const std::string hash = config_hash(cfg, estimation_inputs(cfg));
  std::optional<AdoptionSurface> truth;
  if (!cfg.truth.empty()) {
    const nlohmann::json side = read_json(cfg.truth);
    truth = planted_truth(PlantedMechanism::from_json(side.at("mechanism")), cfg.grid());
  }

  std::vector<std::string> shapes;
  if (cfg.by == "all") shapes = {"kappa", "s", "surface"};
  else shapes = {cfg.by};

  std::vector<std::string> outputs;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const CountTable& t = tables[c];
    const std::string tag = file_tag(classes[c]);
    const AdoptionSurface counts = surface(t.totals());
    for (std::size_t si = 0; si < shapes.size(); ++si) {
      const std::string& shape = shapes[si];
      const EstimateOptions eo = estimate_options(cfg, 0x100 + c * 8 + si);
      Curve est;
      if (shape == "kappa") est = estimate_curve_kappa(t, eo);
      else if (shape == "s") est = estimate_curve_s(t, eo);
      else est = estimate_surface(t, eo).cells;
      const std::string path = in_workdir(cfg, (shape == "surface" ? "surface_" : "curve_" + shape + "_") + tag + ".csv");
      {
        auto out = open_out(path);
        write_curve_csv(out, est, hash);
      }
      outputs.push_back(path);
      if (truth) {
        const std::string tpath = in_workdir(cfg, "truth_" + shape + "_" + tag + ".csv");
        auto out = open_out(tpath);
        write_truth_csv(out, est, truth_for(*truth, counts, shape), hash);
        outputs.push_back(tpath);
      }
    }
    msg << "curves: " << tag << " (" << t.memes().size() << " memes)\n";
  }
  record_manifest(cfg, "curves", hash, outputs);
}

void run_decompose(const RunConfig& cfg, std::ostream& msg) {
  cfg.validate();
  ensure_workdir(cfg);
  const auto classes = resolved_classes(cfg);
  const auto tables = load_tables(cfg, classes);
  const std::string hash = config_hash(cfg, estimation_inputs(cfg));
  std::vector<std::string> outputs;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const std::string tag = file_tag(classes[c]);
    if (tables[c].empty()) {
      msg << "decompose: " << tag << " has no events, skipped\n";
      continue;
    }
    DecompositionResult d;
    try {
      d = estimate_decomposition(tables[c], estimate_options(cfg, 0x200 + c), cfg.clamp_negative);
    } catch (const DataError& e) {
      msg << "decompose: " << tag << ": " << e.what() << ", skipped\n";
      continue;
    }
    if (d.negative_cells > 0) {
      msg << "warning: " << tag << ": " << d.negative_cells << " internal cells are negative"
          << (d.clamped ? " (clamped to 0)" : "") << '\n';
    }
    auto write = [&](const std::string& name, const Curve& curve) {
      const std::string path = in_workdir(cfg, name + "_" + tag + ".csv");
      auto out = open_out(path);
      write_curve_csv(out, curve, hash);
      outputs.push_back(path);
    };
    write("decompose_external", d.external);
    write("decompose_internal", d.internal.cells);
    write("decompose_internal_kappa", d.internal_kappa);
    write("decompose_internal_s", d.internal_s);
    const std::string wpath = in_workdir(cfg, "decompose_s_given_kappa_" + tag + ".csv");
    {
      auto out = open_out(wpath);
      out << "# config_hash=" << hash << '\n' << "bin_kappa,bin_s_low,bin_s_high,weight\n";
      const Grid& g = d.grid;
      for (int k = 0; k < g.rows(); ++k) {
        for (int s = 0; s < g.s_bins; ++s) {
          out << k << ',' << fmt(g.s_low(s)) << ',' << fmt(g.s_high(s)) << ',' << fmt(d.s_given_kappa[g.cell(k, s)])
              << '\n';
        }
      }
    }
    outputs.push_back(wpath);
    msg << "decompose: " << tag << '\n';
  }
  record_manifest(cfg, "decompose", hash, outputs);
}

void run_persistence(const RunConfig& cfg, std::ostream& msg) {
  cfg.validate();
  ensure_workdir(cfg);
  const auto classes = resolved_classes(cfg);
  const auto tables = load_tables(cfg, classes);
  const std::string hash = config_hash(cfg, estimation_inputs(cfg));
  const std::string path = in_workdir(cfg, artifact::kPersistence);
  auto out = open_out(path);
  out << "# config_hash=" << hash << '\n' << "class,persistence,ci_low,ci_high,defined,memes\n";
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const std::string tag = file_tag(classes[c]);
    PersistenceResult r;
    r.value = std::nan("");
    r.ci = {std::nan(""), std::nan("")};
    if (!tables[c].empty()) r = estimate_persistence(tables[c], estimate_options(cfg, 0x300 + c));
    out << tag << ',' << fmt(r.value) << ',' << fmt(r.ci.low) << ',' << fmt(r.ci.high) << ','
        << (r.defined ? 1 : 0) << ',' << tables[c].memes().size() << '\n';
    msg << "persistence: " << tag << ' ' << (r.defined ? fmt(r.value) : std::string("undefined")) << '\n';
  }
  out.close();
  record_manifest(cfg, "persistence", hash, {path});
}

void run_report(const RunConfig& cfg, std::ostream& msg) {
  cfg.validate();
  ensure_workdir(cfg);
  const auto classes = resolved_classes(cfg);
  std::vector<EventDistributions> dists;
  for (const auto& c : classes) dists.emplace_back(EventFilter::parse(c));
  std::vector<CountTable> tables;
  for (const auto& c : classes) tables.emplace_back(cfg.grid(), EventFilter::parse(c));
  // Topical-meme restriction of each class for the topical-user lift.
  std::vector<CountTable> topical;
  for (const auto& c : classes) {
    EventFilter f = EventFilter::parse(c);
    f.meme_class = Topicality::kTopical;
    f.user_class.reset();
    topical.emplace_back(cfg.grid(), f);
  }
  // Per-meme adoption counts for the popularity comparison.
  CountTable all_memes(cfg.grid());

  SpoolReader reader(spool_path(cfg));
  if (reader.count() == 0) throw DataError("event spool is empty: " + spool_path(cfg));
  std::vector<Event> batch;
  std::vector<std::pair<MemeId, Topicality>> meme_cls;
  while (reader.next(batch)) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      dists[c].add(batch);
      tables[c].add(batch);
      topical[c].add(batch);
    }
    all_memes.add(batch);
    for (const Event& e : batch) {
      if (meme_cls.empty() || meme_cls.back().first != e.meme) meme_cls.emplace_back(e.meme, e.meme_class());
    }
  }
  const std::string hash = config_hash(cfg, estimation_inputs(cfg));

  auto cdf_json = [](const EmpiricalCdf& f) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [x, y] : f.steps()) a.push_back({x, y});
    return a;
  };
  auto interval = [](const Interval& i) { return nlohmann::json::array({jnum(i.low), jnum(i.high)}); };

  nlohmann::json report;
  report["config_hash"] = hash;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const std::string tag = file_tag(classes[c]);
    nlohmann::json r;
    const EventDistributions& d = dists[c];
    r["exposure_events"] = d.exposures();
    r["adoption_events"] = d.adoptions();
    r["memes"] = tables[c].memes().size();
    if (d.adoptions() == 0 || d.exposures() == 0) {
      report["classes"][tag] = r;
      continue;
    }
    const auto ka = d.kappa_adopted(), ke = d.kappa_exposed(), sa = d.s_adopted(), se = d.s_exposed();
    r["seed_share"] = ka(0.0);
    r["cdf"] = {{"kappa_adopted", cdf_json(ka)},
                {"kappa_exposed", cdf_json(ke)},
                {"s_adopted", cdf_json(sa)},
                {"s_exposed", cdf_json(se)}};
    r["ks"] = {{"kappa", ks_distance(ka, ke)}, {"s", ks_distance(sa, se)}};
    const auto mw = mann_whitney_u(d.s_adopted_sample(), d.s_exposed_sample());
    r["mann_whitney_s"] = {{"u", mw.u}, {"p", mw.p}, {"exact", mw.exact}};

    BootstrapOptions bo;
    bo.replicates = cfg.bootstrap;
    bo.level = cfg.level;
    bo.threads = cfg.resolved_threads();
    bo.seed = split_seed(cfg.seed, 0x400 + c);
    const SeedAlignment sal = seed_relative_alignment(tables[c], bo);
    r["seed_alignment"] = {{"seed_ratio", jnum(sal.seed_ratio)},
                           {"seed_ci", interval(sal.seed_ci)},
                           {"nonseed_ratio", jnum(sal.nonseed_ratio)},
                           {"nonseed_ci", interval(sal.nonseed_ci)},
                           {"difference_ci", interval(sal.difference_ci)}};
    if (!topical[c].empty()) {
      bo.seed = split_seed(cfg.seed, 0x500 + c);
      const LiftResult lift = topical_user_lift(topical[c], bo);
      r["topical_user_lift"] = {{"lift", jnum(lift.lift)},
                                {"ci", interval(lift.ci)},
                                {"rate_topical_users", jnum(lift.rate_topical)},
                                {"rate_non_topical_users", jnum(lift.rate_non_topical)}};
    }
    report["classes"][tag] = r;
  }

  // Adoptions per meme, topical vs non-topical memes.
  std::vector<double> top, non;
  for (const MemeCounts& m : all_memes.memes()) {
    const double n = m.w_adopted[0] + m.w_adopted[1];
    for (const auto& [id, cls] : meme_cls) {
      if (id != m.meme) continue;
      if (cls == Topicality::kTopical) top.push_back(n);
      if (cls == Topicality::kNonTopical) non.push_back(n);
      break;
    }
  }
  if (!top.empty() && !non.empty()) {
    const auto mw = mann_whitney_u(top, non);
    report["adoptions_per_meme"] = {{"topical_memes", top.size()},
                                    {"non_topical_memes", non.size()},
                                    {"u", mw.u},
                                    {"p", mw.p},
                                    {"exact", mw.exact}};
  }
  const std::string path = in_workdir(cfg, artifact::kReport);
  {
    auto out = open_out(path);
    out << report.dump(2) << '\n';
  }
  msg << "report: " << classes.size() << " classes\n";
  record_manifest(cfg, "report", hash, {path});
}

void run_simulate(const RunConfig& cfg, std::ostream& msg) {
  cfg.validate();
  ensure_workdir(cfg);
  PlantedMechanism mech;
  if (cfg.mechanism.size() > 5 && cfg.mechanism.ends_with(".json")) {
    mech = PlantedMechanism::from_json(read_json(cfg.mechanism));
  } else {
    mech = preset_mechanism(cfg.mechanism);
  }
  SimConfig sc;
  sc.users = cfg.users;
  sc.topical_memes = cfg.memes / 2;
  sc.non_topical_memes = cfg.memes - cfg.memes / 2;
  sc.epochs = cfg.epochs;
  sc.topic_ticks = 50 * static_cast<Timestamp>(std::max(cfg.epochs, 1));
  sc.topics = cfg.sim_topics;
  sc.graph = cfg.graph_model == "small-world" ? GraphModel::kSmallWorld : GraphModel::kConfiguration;
  sc.seed = cfg.seed;
  const World world = generate_world(sc);
  SimSummary sum;
  const TweetLog log = simulate(world, mech, &sum);

  const std::string log_path = in_workdir(cfg, artifact::kSimLog);
  const std::string graph_path = in_workdir(cfg, artifact::kSimGraph);
  const std::string truth_path = in_workdir(cfg, artifact::kSimTruth);
  {
    auto out = open_out(log_path);
    write_log_tsv(out, log);
  }
  {
    auto out = open_out(graph_path);
    write_edges(out, world.graph);
  }
  {
    auto out = open_out(truth_path);
    out << truth_sidecar(world, mech).dump(2) << '\n';
  }
  const std::string hash = config_hash(cfg, {});
  msg << "simulate: " << sum.tweets << " tweets, " << sum.adoptions << " adoptions (" << sum.seed_adoptions
      << " seeds), mechanism " << mech.tag << '\n';
  record_manifest(cfg, "simulate", hash, {log_path, graph_path, truth_path});
}

}  // namespace difflab
