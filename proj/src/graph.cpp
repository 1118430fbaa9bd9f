#include "difflab/graph.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

#include "difflab/binary_io.hpp"
#include "difflab/ingest.hpp"

namespace difflab {

namespace {

constexpr char kGraphMagic[8] = {'D', 'L', 'G', 'R', 'A', 'P', 'H', '1'};

}  // namespace

FollowerGraph FollowerGraph::from_edges(std::vector<std::pair<UserId, UserId>> edges,
                                        EdgeLoadStats* stats) {
  EdgeLoadStats local;
  const std::size_t before = edges.size();
  std::erase_if(edges, [](const auto& e) { return e.first == e.second; });
  local.self_loops = before - edges.size();

  FollowerGraph g;
  g.external_.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    g.external_.push_back(a);
    g.external_.push_back(b);
  }
  std::sort(g.external_.begin(), g.external_.end());
  g.external_.erase(std::unique(g.external_.begin(), g.external_.end()), g.external_.end());
  g.external_.shrink_to_fit();

  auto dense = [&](UserId u) {
    return static_cast<NodeId>(std::lower_bound(g.external_.begin(), g.external_.end(), u) -
                               g.external_.begin());
  };
  // (followee, follower) in dense ids, sorted -> CSR rows sorted ascending.
  std::vector<std::pair<NodeId, NodeId>> rows;
  rows.reserve(edges.size());
  for (const auto& [follower, followee] : edges) rows.emplace_back(dense(followee), dense(follower));
  edges.clear();
  edges.shrink_to_fit();
  std::sort(rows.begin(), rows.end());
  const std::size_t with_dups = rows.size();
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  local.duplicates = with_dups - rows.size();

  g.offsets_.assign(g.external_.size() + 1, 0);
  for (const auto& r : rows) ++g.offsets_[r.first + 1];
  for (std::size_t i = 1; i < g.offsets_.size(); ++i) g.offsets_[i] += g.offsets_[i - 1];
  g.followers_.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) g.followers_[i] = rows[i].second;

  if (stats) {
    stats->duplicates += local.duplicates;
    stats->self_loops += local.self_loops;
  }
  return g;
}

std::optional<NodeId> FollowerGraph::node(UserId external) const {
  auto it = std::lower_bound(external_.begin(), external_.end(), external);
  if (it == external_.end() || *it != external) return std::nullopt;
  return static_cast<NodeId>(it - external_.begin());
}

std::vector<UserId> FollowerGraph::followers_of(UserId u) const {
  std::vector<UserId> out;
  const auto v = node(u);
  if (!v) return out;
  for (NodeId f : followers(*v)) out.push_back(external_[f]);
  return out;
}

FolloweeIndex FollowerGraph::followee_index() const {
  FolloweeIndex idx;
  idx.offsets_.assign(node_count() + 1, 0);
  for (NodeId f : followers_) ++idx.offsets_[f + 1];
  for (std::size_t i = 1; i < idx.offsets_.size(); ++i) idx.offsets_[i] += idx.offsets_[i - 1];
  idx.targets_.resize(followers_.size());
  std::vector<std::size_t> cursor(idx.offsets_.begin(), idx.offsets_.end() - 1);
  // Iterating followees in ascending order keeps each followee list sorted.
  for (NodeId u = 0; u < node_count(); ++u) {
    for (NodeId f : followers(u)) idx.targets_[cursor[f]++] = u;
  }
  return idx;
}

void FollowerGraph::save_binary(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write graph cache: " + path);
  out.write(kGraphMagic, sizeof kGraphMagic);
  binio::write_u64(out, external_.size());
  binio::write_u64(out, followers_.size());
  for (UserId u : external_) binio::write_u64(out, u);
  for (std::size_t o : offsets_) binio::write_u64(out, o);
  for (NodeId f : followers_) binio::write_u32(out, f);
  if (!out) throw DataError("failed writing graph cache: " + path);
}

FollowerGraph FollowerGraph::load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read graph cache: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kGraphMagic, sizeof magic) != 0) {
    throw DataError("bad graph cache magic: " + path);
  }
  FollowerGraph g;
  const std::uint64_t n = binio::read_u64(in);
  const std::uint64_t m = binio::read_u64(in);
  g.external_.resize(n);
  for (auto& u : g.external_) u = binio::read_u64(in);
  g.offsets_.resize(n + 1);
  for (auto& o : g.offsets_) o = binio::read_u64(in);
  g.followers_.resize(m);
  for (auto& f : g.followers_) f = binio::read_u32(in);
  if (!in) throw DataError("truncated graph cache: " + path);
  if (g.offsets_.back() != m || !std::is_sorted(g.external_.begin(), g.external_.end())) {
    throw DataError("inconsistent graph cache: " + path);
  }
  return g;
}

FollowerGraph load_edges(const std::string& path, EdgeLoadStats* stats) {
  if (path.ends_with(".bin")) return FollowerGraph::load_binary(path);
  std::ifstream in(path);
  if (!in) throw DataError("cannot read edge list: " + path);
  EdgeLoadStats local;
  std::vector<std::pair<UserId, UserId>> edges;
  std::string line;
  while (std::getline(in, line)) {
    ++local.lines;
    std::string_view s(line);
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    s.remove_prefix(first);
    const auto sep = s.find_first_of(" \t");
    if (sep == std::string_view::npos) {
      ++local.malformed;
      continue;
    }
    std::string_view rest = s.substr(sep);
    rest.remove_prefix(std::min(rest.find_first_not_of(" \t"), rest.size()));
    const auto end = rest.find_first_of(" \t\r");
    if (end != std::string_view::npos) rest = rest.substr(0, end);
    const auto a = parse_user_id(s.substr(0, sep));
    const auto b = parse_user_id(rest);
    if (!a || !b) {
      ++local.malformed;
      continue;
    }
    edges.emplace_back(*a, *b);
  }
  FollowerGraph g = FollowerGraph::from_edges(std::move(edges), &local);
  if (stats) *stats = local;
  return g;
}

}  // namespace difflab
