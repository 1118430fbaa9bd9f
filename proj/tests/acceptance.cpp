// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "difflab/bootstrap.hpp"
#include "difflab/exposure.hpp"
#include "difflab/hypothesis.hpp"
#include "difflab/lda.hpp"
#include "difflab/sim.hpp"
#include "difflab/spool.hpp"
#include "difflab/stats.hpp"
#include "difflab/topics.hpp"
#include "testutil.hpp"

using namespace difflab;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

// Bootstrap settings shared by the simulation criteria.
EstimateOptions estimate_opts(std::uint64_t seed) {
  EstimateOptions o;
  o.bootstrap.replicates = 1000;
  o.bootstrap.seed = seed;
  return o;
}

SimConfig recovery_config(std::uint64_t seed) {
  SimConfig c;
  c.users = 10000;
  c.topical_memes = 100;
  c.non_topical_memes = 100;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::size_t events = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    test::Instance in = test::random_instance(seed);
    const ProfileIndex idx(in.profiles);
    const auto oracle = test::sorted(brute_force_events(in.log, in.graph, in.catalog, idx, in.opts));
    ExposureOptions o = in.opts;
    o.materialize_zero_level = true;
    VectorSink sink;
    extract_events(in.log, in.graph, in.catalog, idx, o, sink);
    if (test::sorted(sink.events()) != oracle) return {false, "mismatch on instance " + std::to_string(seed)};
    o.materialize_zero_level = false;
    VectorSink agg;
    extract_events(in.log, in.graph, in.catalog, idx, o, agg);
    if (test::sorted(agg.events()) != test::sorted(aggregate_zero_level(oracle))) {
      return {false, "aggregated mismatch on instance " + std::to_string(seed)};
    }
    events += oracle.size();
  }
  const double secs = seconds_since(t0);
  return {secs < 10.0, "200 instances, " + std::to_string(events) + " events identical, " + fmt(secs, 3) + " s"};
}

Outcome hand_trace() {
  const TweetLog log = test::make_log({{10, 1, {"#m"}, {}, {}, "en"}, {20, 2, {"#m"}, {}, {}, "en"}});
  const FollowerGraph graph = FollowerGraph::from_edges({{2, 1}, {3, 1}, {3, 2}});
  const MemeCatalog catalog = test::accept_all(log);
  const std::vector<TopicalProfile> profiles{test::user_profile(1, {1, 0}), test::user_profile(2, {1, 1}),
                                             test::user_profile(3, {0, 1}), test::meme_profile(0, {1, 0})};
  const ProfileIndex idx(profiles);
  ExposureOptions o;
  o.eligible_all_profiled = true;
  VectorSink sink;
  extract_events(log, graph, catalog, idx, o, sink);
  CountTable t(Grid{4, 1});
  t.add(sink.events());
  const Curve c = curve_kappa(t.totals());
  const bool ok = c[1].n_e == 2 && c[1].n_a == 1 && c[2].n_e == 1 && c[2].n_a == 0 && c[1].p == 0.5;
  return {ok, "N_e(1)=" + std::to_string(c[1].n_e) + " N_a(1)=" + std::to_string(c[1].n_a) +
                  " N_e(2)=" + std::to_string(c[2].n_e) + " N_a(2)=" + std::to_string(c[2].n_a) +
                  " P_a(1)=" + fmt(c[1].p)};
}

Outcome decomposition_identity() {
  test::TempDir dir;
  double worst = 0.0;
  std::size_t cells = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::string path = dir.file("s" + std::to_string(seed) + ".spool");
    write_spool(path, test::random_events(seed, 2 + seed % 5, 200 + 10 * seed, 6));
    const Grid g{6, 1 + static_cast<int>(seed % 10)};
    const CountTable t = CountTable::from_spool(path, g);
    const AdoptionSurface total = surface(t.totals());
    DecompositionResult d;
    try {
      d = decompose(total);
    } catch (const DataError&) {
      continue;  // no kappa = 0 row
    }
    for (int k = 1; k < g.rows(); ++k) {
      for (int b = 0; b < g.s_bins; ++b) {
        const double p = total.at(k, b).p, ext = d.external[b].p, in = d.internal.at(k, b).p;
        if (!std::isfinite(p) || !std::isfinite(ext)) {
          if (std::isfinite(in)) return {false, "internal cell defined without its inputs"};
          continue;
        }
        worst = std::max(worst, std::abs(in + ext - p));
        ++cells;
      }
    }
  }
  return {cells > 0 && worst <= 1e-12,
          "50 spools, " + std::to_string(cells) + " cells, max |internal + external - total| = " + fmt(worst)};
}

struct Recovery {
  double max_err = 0.0;
  std::size_t bins = 0;
  double rho = 0.0;
  int covered = 0;
  std::uint64_t events = 0;
};

Recovery recover_internal_s(const PlantedMechanism& mech, std::uint64_t seed) {
  const auto run = test::run_simulation(recovery_config(seed), mech);
  CountTable t(Grid{});
  t.add(run.events);
  const DecompositionResult d = estimate_decomposition(t, estimate_opts(seed));
  const Curve truth = truth_internal_s(planted_truth(mech, t.grid()), surface(t.totals()));
  Recovery r;
  std::vector<double> est, tru;
  for (std::size_t b = 0; b < d.internal_s.size(); ++b) {
    const CurveBin& e = d.internal_s[b];
    r.events += e.n_e;
    if (std::isfinite(e.p) && e.ci_low <= truth[b].p && truth[b].p <= e.ci_high) ++r.covered;
    if (e.n_e < 500 || !std::isfinite(e.p)) continue;
    r.max_err = std::max(r.max_err, std::abs(e.p - truth[b].p));
    ++r.bins;
    est.push_back(e.p);
    tru.push_back(truth[b].p);
  }
  r.rho = spearman(est, tru);
  return r;
}

Outcome planted_recovery() {
  const auto t0 = Clock::now();
  const Recovery logistic = recover_internal_s(preset_mechanism("logistic"), 41);
  const Recovery flat = recover_internal_s(preset_mechanism("flat"), 42);
  const double secs = seconds_since(t0);
  const bool ok = logistic.bins >= 5 && flat.bins >= 5 && logistic.max_err <= 0.02 && flat.max_err <= 0.02 &&
                  logistic.rho > 0.9 && flat.covered >= 16 && secs < 120.0;
  return {ok, "logistic: max err " + fmt(logistic.max_err) + " over " + std::to_string(logistic.bins) +
                  " bins, rho " + fmt(logistic.rho) + "; flat: max err " + fmt(flat.max_err) + " over " +
                  std::to_string(flat.bins) + " bins, CI covers the flat level in " + std::to_string(flat.covered) +
                  "/20 bins; " + fmt(secs, 3) + " s"};
}

Outcome persistence_signatures() {
  auto run = [](const char* preset, std::uint64_t seed) {
    const auto r = test::run_simulation(recovery_config(seed), preset_mechanism(preset));
    CountTable t(Grid{});
    t.add(r.events);
    return estimate_persistence(t, estimate_opts(seed));
  };
  const PersistenceResult complex = run("complex-topical", 51);
  const PersistenceResult simple = run("simple-flat", 52);
  const bool ok = complex.defined && simple.defined && complex.ci.low > 1.0 && simple.ci.high < 1.0;
  return {ok, "peaked plant " + fmt(complex.value) + " [" + fmt(complex.ci.low) + ", " + fmt(complex.ci.high) +
                  "]; geometric plant " + fmt(simple.value) + " [" + fmt(simple.ci.low) + ", " +
                  fmt(simple.ci.high) + "]"};
}

Outcome external_recovery() {
  const PlantedMechanism mech = preset_mechanism("external-topical");
  const auto run = test::run_simulation(recovery_config(61), mech);
  CountTable t(Grid{});
  t.add(run.events);
  const DecompositionResult d = estimate_decomposition(t, estimate_opts(61));
  const AdoptionSurface truth = planted_truth(mech, t.grid());
  double worst = 0.0;
  std::size_t bins = 0;
  for (int b = 0; b < t.grid().s_bins; ++b) {
    const CurveBin& e = d.external[b];
    if (e.n_e < 500 || !std::isfinite(e.p)) continue;
    worst = std::max(worst, std::abs(e.p - truth.at(0, b).p));
    ++bins;
  }
  return {bins >= 5 && worst <= 0.02, "max |P_a(0,S) - q_e(S)| = " + fmt(worst) + " over " + std::to_string(bins) +
                                          " bins with >= 500 events"};
}

Outcome seed_alignment() {
  auto run = [](const char* preset, std::uint64_t seed) {
    const auto r = test::run_simulation(recovery_config(seed), preset_mechanism(preset));
    CountTable t(Grid{});
    t.add(r.events);
    return seed_relative_alignment(t, estimate_opts(seed).bootstrap);
  };
  const SeedAlignment ext = run("external-topical", 71);
  const SeedAlignment flat = run("flat", 72);
  auto show = [](const SeedAlignment& a) {
    return "seed " + fmt(a.seed_ratio) + " [" + fmt(a.seed_ci.low) + ", " + fmt(a.seed_ci.high) + "], non-seed " +
           fmt(a.nonseed_ratio) + " [" + fmt(a.nonseed_ci.low) + ", " + fmt(a.nonseed_ci.high) + "]";
  };
  const bool ok = ext.seed_ci.low > 1.0 && ext.difference_ci.low > 0.0 && flat.seed_ci.contains(1.0) &&
                  flat.nonseed_ci.contains(1.0);
  return {ok, "external-topical: " + show(ext) + "; flat: " + show(flat)};
}

Outcome lda_sanity() {
  double worst_cos = 1.0;
  for (std::uint64_t seed : {1, 2, 3}) worst_cos = std::min(worst_cos, test::disjoint_topic_recovery(seed));

  const std::vector<std::vector<TokenId>> docs{{0, 1, 2, 0}, {3, 4, 5, 3}, {0, 1, 4, 5}};
  const double alpha = 0.5, beta = 0.2;
  const auto exact = test::enumerate_lda_posterior(docs, alpha, beta);
  GibbsSampler s(docs, 2, alpha, beta, 77);
  const std::size_t n = exact.topic0.size();
  std::vector<double> topic0(n, 0.0);
  std::vector<std::vector<double>> same(n, std::vector<double>(n, 0.0));
  const int sweeps = 10000;
  for (int i = 0; i < 200; ++i) s.sweep();
  for (int i = 0; i < sweeps; ++i) {
    s.sweep();
    const auto z = s.all_assignments();
    for (std::size_t a = 0; a < n; ++a) {
      topic0[a] += z[a] == 0;
      for (std::size_t b = 0; b < n; ++b) same[a][b] += z[a] == z[b];
    }
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    worst = std::max(worst, std::abs(topic0[a] / sweeps - exact.topic0[a]));
    for (std::size_t b = 0; b < n; ++b) worst = std::max(worst, std::abs(same[a][b] / sweeps - exact.same[a][b]));
  }
  return {worst_cos >= 0.8 && worst <= 0.05,
          "disjoint-vocabulary cosine " + fmt(worst_cos) + ", max marginal error " + fmt(worst)};
}

Outcome unit_identities() {
  const std::vector<double> uniform(100, 0.01);
  std::vector<double> one_hot(100, 0.0);
  one_hot[7] = 1.0;
  const double h_uniform = entropy_nats(uniform);
  const double h_one = entropy_nats(one_hot);
  const std::vector<double> a{0.5, 0.5}, b{1.0, 0.0};
  const double s = alignment(a, b);
  const bool ok = std::abs(h_uniform - std::log(100.0)) <= 1e-9 && h_one == 0.0 &&
                  std::abs(s - 1.0 / std::sqrt(2.0)) <= 1e-12;
  return {ok, "H(uniform)=" + fmt(h_uniform, 12) + " H(one-hot)=" + fmt(h_one) + " S=" + fmt(s, 15)};
}

Outcome bca_coverage() {
  const auto t0 = Clock::now();
  const double p = 0.1;
  const std::size_t memes = 50;
  const int reps = 500;
  std::mt19937_64 rng(20240601);
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> a(memes);
    for (double& x : a) x = std::binomial_distribution<int>(1000, p)(rng);
    BootstrapOptions o;
    o.replicates = 1000;
    o.seed = static_cast<std::uint64_t>(r);
    const BcaResult ci = bca_ci(
        [&](std::span<const double> w) {
          double na = 0.0, ne = 0.0;
          for (std::size_t i = 0; i < memes; ++i) {
            const double wi = w.empty() ? 1.0 : w[i];
            na += wi * a[i];
            ne += wi * 1000.0;
          }
          return na / ne;
        },
        memes, o);
    covered += ci.ci.contains(p);
  }
  const double rate = static_cast<double>(covered) / reps;
  const double secs = seconds_since(t0);
  return {rate >= 0.92 && rate <= 0.98 && secs < 60.0,
          "coverage " + fmt(100.0 * rate, 3) + "% over " + std::to_string(reps) + " replications, " + fmt(secs, 3) +
              " s"};
}

Outcome statistical_utilities() {
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6}, p{0, 0, 1, 1}, q{0, 1, 1, 1};
  const auto cdf = [](const std::vector<double>& v) { return EmpiricalCdf::from_sample(v); };
  const double same = ks_distance(cdf(x), cdf(x));
  const double disjoint = ks_distance(cdf(x), cdf(y));
  const double quarter = ks_distance(cdf(p), cdf(q));
  const MannWhitneyResult mw = mann_whitney_u(x, y);
  const bool ok = same == 0.0 && disjoint == 1.0 && std::abs(quarter - 0.25) <= 1e-12 && mw.exact &&
                  std::abs(mw.p - 0.1) <= 1e-12;
  return {ok, "KS " + fmt(same) + ", " + fmt(disjoint) + ", " + fmt(quarter) + "; MWU exact p " + fmt(mw.p)};
}

// Synthetic load: the simulator's 100k-node graph and a log of random posts
// with Zipf-distributed meme popularity.
Outcome throughput() {
  SimConfig c;
  c.users = 100000;
  c.topics = 20;
  c.topical_memes = 1000;
  c.non_topical_memes = 1000;
  c.seed = 81;
  const World world = generate_world(c);

  const std::size_t tweets = 1000000;
  std::mt19937_64 rng(82);
  std::vector<double> zipf(world.memes.size());
  for (std::size_t j = 0; j < zipf.size(); ++j) zipf[j] = 1.0 / static_cast<double>(j + 1);
  std::discrete_distribution<std::size_t> pick_meme(zipf.begin(), zipf.end());
  std::uniform_int_distribution<UserId> pick_user(0, c.users - 1);
  std::bernoulli_distribution has_meme(0.5);
  TweetLog log;
  std::vector<std::string_view> tags, none;
  for (std::size_t i = 0; i < tweets; ++i) {
    tags.clear();
    if (has_meme(rng)) tags.push_back(world.memes[pick_meme(rng)].name);
    log.append_raw(static_cast<Timestamp>(i / 4), pick_user(rng), tags, none, none, "en");
  }
  const MemeCatalog catalog = test::accept_all(log);
  const auto profiles = truth_profiles(world, log, 0.25);
  const ProfileIndex idx(profiles);

  struct CountingSink final : EventSink {
    std::uint64_t n = 0;
    void consume(std::span<const Event> ev) override { n += ev.size(); }
  } sink;
  ExposureOptions o;
  o.window = {0, static_cast<Timestamp>(tweets)};
  o.threads = 4;
  const auto t0 = Clock::now();
  const ExposureStats st = extract_events(log, world.graph, catalog, idx, o, sink);
  const double secs = seconds_since(t0);

  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  const double peak_mb = static_cast<double>(ru.ru_maxrss) / 1024.0;
  return {secs < 60.0 && peak_mb < 2048.0,
          std::to_string(tweets) + " tweets, " + std::to_string(world.graph.node_count()) + " nodes, " +
              std::to_string(world.graph.edge_count()) + " edges, " + std::to_string(sink.n) + " records (" +
              std::to_string(st.adoptions) + " adoptions) in " + fmt(secs, 3) + " s, peak RSS " + fmt(peak_mb, 4) +
              " MB"};
}

// Runs `f` in a child so that its peak memory is measured alone.
Outcome in_child(const std::function<Outcome()>& f) {
  int fds[2];
  if (pipe(fds) != 0) return {false, "pipe failed"};
  std::cout.flush();
  const pid_t pid = fork();
  if (pid == 0) {
    close(fds[0]);
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const std::string msg = (o.pass ? "1" : "0") + o.detail;
    [[maybe_unused]] auto n = write(fds[1], msg.data(), msg.size());
    close(fds[1]);
    _exit(0);
  }
  close(fds[1]);
  std::string msg;
  char buf[4096];
  ssize_t n;
  while ((n = read(fds[0], buf, sizeof buf)) > 0) msg.append(buf, static_cast<std::size_t>(n));
  close(fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (msg.empty()) return {false, "child process died"};
  return {msg[0] == '1', msg.substr(1)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"hand-trace fixture", hand_trace},
      {"decomposition identity", decomposition_identity},
      {"planted-mechanism recovery", planted_recovery},
      {"persistence signatures", persistence_signatures},
      {"external-channel recovery", external_recovery},
      {"seed-alignment signature", seed_alignment},
      {"LDA sanity", lda_sanity},
      {"entropy and alignment identities", unit_identities},
      {"BCa coverage", bca_coverage},
      {"statistical utilities", statistical_utilities},
      {"throughput floor", [] { return in_child(throughput); }},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << criteria[i].first << " - " << o.detail
              << " [" << fmt(seconds_since(t0), 3) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
