#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "difflab/common.hpp"

namespace difflab {

using NodeId = std::uint32_t;

struct EdgeLoadStats {
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::size_t duplicates = 0;
  std::size_t self_loops = 0;
};

// Reverse adjacency (followees of each node), built on request.
class FolloweeIndex {
 public:
  std::span<const NodeId> followees(NodeId v) const {
    return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }

 private:
  friend class FollowerGraph;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
};

// Immutable follower relation in compressed adjacency form, indexed by
// followee: followers(u) is the sorted slice of nodes following u. External
// user ids are mapped to dense ids in ascending order, so sorting by dense id
// and by external id agree.
class FollowerGraph {
 public:
  FollowerGraph() : offsets_(1, 0) {}

  // `edges` holds (follower, followee) pairs in external ids. Self-loops and
  // duplicates are dropped and counted in `stats`.
  static FollowerGraph from_edges(std::vector<std::pair<UserId, UserId>> edges,
                                  EdgeLoadStats* stats = nullptr);

  std::size_t node_count() const { return external_.size(); }
  std::size_t edge_count() const { return followers_.size(); }

  std::optional<NodeId> node(UserId external) const;
  UserId external(NodeId v) const { return external_[v]; }
  std::span<const UserId> external_ids() const { return external_; }

  std::span<const NodeId> followers(NodeId v) const {
    return {followers_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }

  // Followers of an external id, as external ids. Unknown ids have none.
  std::vector<UserId> followers_of(UserId u) const;

  FolloweeIndex followee_index() const;

  // Binary cache: magic "DLGRAPH1", u64 node count, u64 edge count, node ids,
  // offsets, followers; all little-endian.
  void save_binary(const std::string& path) const;
  static FollowerGraph load_binary(const std::string& path);

 private:
  std::vector<UserId> external_;       // dense -> external, ascending
  std::vector<std::size_t> offsets_;   // node_count + 1
  std::vector<NodeId> followers_;
};

// Edge list `follower_id \t followee_id` per line (any whitespace accepted,
// '#' starts a comment). A path ending in ".bin" is read as a binary cache.
FollowerGraph load_edges(const std::string& path, EdgeLoadStats* stats = nullptr);

}  // namespace difflab
