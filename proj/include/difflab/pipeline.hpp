#pragma once

// Batch stages behind the command line tool. Every stage reads its inputs
// from the RunConfig and the work directory and writes artifacts back there,
// each stamped with the run's config hash, and records them in
// <workdir>/manifest.json.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "difflab/common.hpp"
#include "difflab/stats.hpp"

namespace difflab {

struct RunConfig {
  std::string workdir = "difflab-out";

  // ingest
  std::string log;
  std::string graph;
  std::string schema = "auto";  // auto | tsv | jsonl
  bool strict = false;
  std::optional<Timestamp> emerge_start, emerge_end, analysis_start, analysis_end;
  double english_threshold = 0.9;
  std::uint64_t min_adopters = 100;

  // topics
  int k = 100;
  int iters = 1000;
  double alpha = -1.0;  // negative -> 50 / k
  double beta = 0.01;
  double quantile = 0.25;
  int average_last_n = 0;
  bool profiles_from_truth = false;
  std::string truth;  // simulator sidecar

  // events
  bool eligible_all_profiled = false;
  bool include_first_poster = false;
  bool materialize_zero_level = false;
  bool events_csv = false;

  // estimation
  std::string by = "all";            // kappa | s | surface | all
  std::vector<std::string> classes;  // empty -> default_classes()
  int kappa_max = 32;
  int s_bins = 20;
  bool macro = false;
  std::size_t bootstrap = 1000;
  double level = 0.95;
  bool clamp_negative = false;

  // simulate
  std::string mechanism = "complex-topical";
  std::size_t users = 10000;
  std::size_t memes = 200;
  int epochs = 20;
  int sim_topics = 20;
  std::string graph_model = "configuration";

  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 -> hardware concurrency

  void validate() const;
  unsigned resolved_threads() const;
  Grid grid() const { return Grid{kappa_max, s_bins}; }
  // Every setting that can change an output; excludes workdir and threads.
  nlohmann::json to_json() const;
};

std::vector<std::string> default_classes();

// Hash of the canonical config plus the bytes of every existing input file.
std::string config_hash(const RunConfig& cfg, const std::vector<std::string>& inputs);

// Fixed artifact names inside the work directory.
namespace artifact {
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kCatalog = "catalog.csv";
inline constexpr const char* kMemeTable = "memes.tsv";
inline constexpr const char* kGraphCache = "graph.bin";
inline constexpr const char* kModel = "lda.bin";
inline constexpr const char* kProfiles = "profiles.csv";
inline constexpr const char* kSpool = "events.spool";
inline constexpr const char* kEventsCsv = "events.csv";
inline constexpr const char* kPersistence = "persistence.csv";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kSimLog = "sim_log.tsv";
inline constexpr const char* kSimGraph = "sim_graph.txt";
inline constexpr const char* kSimTruth = "truth.json";
}  // namespace artifact

// Curve CSV: `# config_hash=<hex>` then
// `bin_kappa,bin_s_low,bin_s_high,n_e,n_a,p,ci_low,ci_high`. S-curve rows
// leave bin_kappa empty; undefined p and bounds are empty.
void write_curve_csv(std::ostream& out, const Curve& curve, const std::string& hash);

// Stages. `msg` receives progress lines and warnings.
void run_ingest(const RunConfig& cfg, std::ostream& msg);
void run_topics(const RunConfig& cfg, std::ostream& msg);
void run_events(const RunConfig& cfg, std::ostream& msg);
void run_curves(const RunConfig& cfg, std::ostream& msg);
void run_decompose(const RunConfig& cfg, std::ostream& msg);
void run_persistence(const RunConfig& cfg, std::ostream& msg);
void run_report(const RunConfig& cfg, std::ostream& msg);
void run_simulate(const RunConfig& cfg, std::ostream& msg);

}  // namespace difflab
