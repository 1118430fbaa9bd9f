// difflab command line: one subcommand per pipeline stage.
//
// Every option is accepted by every subcommand and may also come from a TOML
// file given with --config; flags on the command line win.

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "difflab/common.hpp"
#include "difflab/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

void add_options(CLI::App& app, difflab::RunConfig& c) {
  app.add_option("--workdir", c.workdir, "Directory for artifacts")->capture_default_str();

  app.add_option("--log", c.log, "Tweet log (TSV or JSON lines)");
  app.add_option("--graph", c.graph, "Follower edge list");
  app.add_option("--schema", c.schema, "Log schema: auto, tsv or jsonl")->capture_default_str();
  app.add_flag("--strict", c.strict, "Fail on the first malformed line");
  auto ts = [&](const char* name, std::optional<difflab::Timestamp>& slot, const char* help) {
    app.add_option_function<std::int64_t>(name, [&slot](const std::int64_t& v) { slot = v; }, help);
  };
  ts("--emerge-start", c.emerge_start, "Start of the emergence (topic) window");
  ts("--emerge-end", c.emerge_end, "End of the emergence (topic) window");
  ts("--analysis-start", c.analysis_start, "Start of the analysis window (default emerge-end + 1)");
  ts("--analysis-end", c.analysis_end, "End of the analysis window");
  app.add_option("--english-threshold", c.english_threshold)->capture_default_str();
  app.add_option("--min-adopters", c.min_adopters)->capture_default_str();

  app.add_option("--k", c.k, "Number of topics")->capture_default_str();
  app.add_option("--iters", c.iters, "Gibbs sweeps")->capture_default_str();
  app.add_option("--alpha", c.alpha, "Document-topic prior (default 50/k)");
  app.add_option("--beta", c.beta, "Topic-word prior")->capture_default_str();
  app.add_option("--quantile", c.quantile, "Entropy quantile for the topical classes")->capture_default_str();
  app.add_option("--average-last-n", c.average_last_n, "Average theta over the last n sweeps")->capture_default_str();
  app.add_flag("--profiles-from-truth", c.profiles_from_truth, "Use planted profiles from --truth");
  app.add_option("--truth", c.truth, "Simulator truth sidecar");

  app.add_flag("--eligible-all-profiled", c.eligible_all_profiled, "Level-0 population is every profiled user");
  app.add_flag("--include-first-poster", c.include_first_poster);
  app.add_flag("--materialize-zero-level", c.materialize_zero_level, "Write one record per level-0 event");
  app.add_flag("--events-csv", c.events_csv, "Also export the spool as CSV");

  app.add_option("--by", c.by, "kappa, s, surface or all")->capture_default_str();
  app.add_option("--class", c.classes, "Event class filter (repeatable), e.g. topical-memes+hashtags");
  app.add_option("--kappa-max", c.kappa_max)->capture_default_str();
  app.add_option("--s-bins", c.s_bins)->capture_default_str();
  app.add_flag("--macro", c.macro, "Average per-meme ratios instead of pooling");
  app.add_option("--bootstrap", c.bootstrap, "Bootstrap replicates")->capture_default_str();
  app.add_option("--level", c.level, "Confidence level")->capture_default_str();
  app.add_flag("--clamp-negative", c.clamp_negative, "Clamp negative internal cells to 0");

  app.add_option("--mechanism", c.mechanism, "Preset name or mechanism JSON file")->capture_default_str();
  app.add_option("--users", c.users)->capture_default_str();
  app.add_option("--memes", c.memes)->capture_default_str();
  app.add_option("--epochs", c.epochs)->capture_default_str();
  app.add_option("--sim-topics", c.sim_topics)->capture_default_str();
  app.add_option("--graph-model", c.graph_model, "configuration or small-world")->capture_default_str();

  app.add_option("--seed", c.seed, "Root seed")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"difflab: exposure and topical alignment analysis of meme diffusion"};
  app.set_config("--config", "", "TOML config file");
  app.require_subcommand(1);
  difflab::RunConfig cfg;
  add_options(app, cfg);

  using Stage = std::function<void(const difflab::RunConfig&, std::ostream&)>;
  const std::map<std::string, std::pair<Stage, const char*>> stages{
      {"ingest", {difflab::run_ingest, "Parse the log and graph, build the meme catalog"}},
      {"topics", {difflab::run_topics, "Fit LDA and write topical profiles"}},
      {"events", {difflab::run_events, "Extract exposure events into the spool"}},
      {"curves", {difflab::run_curves, "Adoption curves and surfaces"}},
      {"decompose", {difflab::run_decompose, "Split adoption into external and internal parts"}},
      {"persistence", {difflab::run_persistence, "Persistence of internal adoption"}},
      {"report", {difflab::run_report, "CDFs, tests, seed alignment and lift"}},
      {"simulate", {difflab::run_simulate, "Generate a synthetic log with a planted mechanism"}},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, s] : stages) subs[name] = app.add_subcommand(name, s.second)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) stages.at(name).first(cfg, std::cerr);
    }
  } catch (const difflab::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const difflab::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
