#include "difflab/topics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace difflab {

double entropy_nats(std::span<const double> theta) {
  double h = 0.0;
  for (double p : theta) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double alignment(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  for (std::size_t i = n; i < a.size(); ++i) na += a[i] * a[i];
  for (std::size_t i = n; i < b.size(); ++i) nb += b[i] * b[i];
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double s = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(s, 0.0, 1.0);
}

TopicalProfile TopicalProfile::make(std::uint64_t owner, EntityKind kind, std::vector<double> theta) {
  TopicalProfile p;
  p.owner = owner;
  p.kind = kind;
  p.entropy = entropy_nats(theta);
  p.theta = std::move(theta);
  return p;
}

ClassifyResult classify_topicality(std::span<TopicalProfile> profiles, double q) {
  if (!(q > 0.0 && q <= 0.5)) throw ConfigError("topicality quantile must lie in (0, 0.5]");
  const std::size_t n = profiles.size();
  const auto min_n = static_cast<std::size_t>(std::ceil(1.0 / q - 1e-12));
  if (n < min_n) {
    throw DataError("topicality classification needs at least " + std::to_string(min_n) +
                    " profiles, got " + std::to_string(n));
  }
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = profiles[i].entropy;
  std::sort(h.begin(), h.end());
  const auto tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9)));
  ClassifyResult r;
  r.topical_threshold = h[tail - 1];
  r.non_topical_threshold = h[n - tail];
  r.degenerate = r.topical_threshold >= r.non_topical_threshold && h.front() == h.back();
  for (auto& p : profiles) {
    if (p.entropy <= r.topical_threshold) p.cls = Topicality::kTopical;
    else if (p.entropy >= r.non_topical_threshold) p.cls = Topicality::kNonTopical;
    else p.cls = Topicality::kMiddle;
  }
  return r;
}

std::vector<ClassifyResult> classify_by_population(std::vector<TopicalProfile>& profiles, double q) {
  std::vector<ClassifyResult> results;
  for (EntityKind kind : {EntityKind::kUser, EntityKind::kHashtag, EntityKind::kUrl}) {
    auto mid = std::stable_partition(profiles.begin(), profiles.end(),
                                     [&](const TopicalProfile& p) { return p.kind != kind; });
    // Population `kind` now sits in [mid, end); classify it and restore order
    // later by owner/kind sort below.
    std::span<TopicalProfile> pop(mid, profiles.end());
    if (!pop.empty()) results.push_back(classify_topicality(pop, q));
    else results.push_back(ClassifyResult{});
  }
  std::stable_sort(profiles.begin(), profiles.end(), [](const TopicalProfile& a, const TopicalProfile& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.owner < b.owner;
  });
  return results;
}

void write_profiles_csv(std::ostream& out, std::span<const TopicalProfile> profiles,
                        const std::vector<std::string>& meme_names) {
  std::size_t k = 0;
  for (const auto& p : profiles) k = std::max(k, p.theta.size());
  out << "entity_id,kind,entropy,class";
  for (std::size_t i = 0; i < k; ++i) out << ",theta_" << i;
  out << '\n';
  char buf[40];
  for (const auto& p : profiles) {
    if (p.kind == EntityKind::kUser) out << 'u' << p.owner;
    else out << meme_names.at(p.owner);
    std::snprintf(buf, sizeof buf, "%.17g", p.entropy);
    out << ',' << to_string(p.kind) << ',' << buf << ',' << to_string(p.cls);
    for (double t : p.theta) {
      std::snprintf(buf, sizeof buf, "%.17g", t);
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::vector<TopicalProfile> read_profiles_csv(
    std::istream& in,
    const std::function<std::optional<std::uint64_t>(const std::string&)>& meme_id_of) {
  std::vector<TopicalProfile> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    // Comment lines only precede the header; hashtag rows also start with '#'.
    if (line.empty() || (!header_seen && line[0] == '#')) continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("entity_id,", 0) != 0) throw DataError("profile CSV lacks header");
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() < 5) throw DataError("short profile row at line " + std::to_string(lineno));
    const auto kind = parse_entity_kind(f[1]);
    const auto cls = parse_topicality(f[3]);
    if (!kind || !cls) throw DataError("bad kind/class at line " + std::to_string(lineno));
    TopicalProfile p;
    p.kind = *kind;
    p.cls = *cls;
    if (p.kind == EntityKind::kUser) {
      std::string_view id(f[0]);
      if (!id.empty() && id[0] == 'u') id.remove_prefix(1);
      try {
        p.owner = std::stoull(std::string(id));
      } catch (const std::exception&) {
        throw DataError("bad user id at line " + std::to_string(lineno));
      }
    } else {
      auto id = meme_id_of(f[0]);
      if (!id) continue;
      p.owner = *id;
    }
    try {
      p.entropy = std::stod(f[2]);
      for (std::size_t i = 4; i < f.size(); ++i) p.theta.push_back(std::stod(f[i]));
    } catch (const std::exception&) {
      throw DataError("bad number at line " + std::to_string(lineno));
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace difflab
