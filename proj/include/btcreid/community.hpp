#pragma once

// Louvain community detection with explicit hierarchy levels.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "btcreid/partition.hpp"

namespace btcreid {

using NodeId = std::uint32_t;

/// Undirected weighted graph in compressed adjacency form. Self-loops are
/// kept apart from the adjacency lists.
///
/// degree(v) = sum of incident weights + 2 * self_loop(v), and the sum of all
/// degrees is total_weight() = 2m.
class WeightedGraph {
 public:
  struct Edge {
    NodeId u;
    NodeId v;
    double weight;
  };
  struct Neighbor {
    NodeId node;
    double weight;
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
  };

  WeightedGraph() = default;
  /// Parallel edges are merged by summing weights; u == v adds a self-loop.
  /// Throws std::invalid_argument for out-of-range nodes or negative weights.
  WeightedGraph(std::size_t num_nodes, std::span<const Edge> edges);

  std::size_t num_nodes() const noexcept { return self_loops_.size(); }
  std::size_t num_edges() const noexcept { return targets_.size() / 2; }
  double total_weight() const noexcept { return two_m_; }
  double degree(NodeId v) const { return degrees_[v]; }
  double self_loop(NodeId v) const { return self_loops_[v]; }
  std::span<const Neighbor> neighbors(NodeId v) const {
    return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }

  friend bool operator==(const WeightedGraph&, const WeightedGraph&) = default;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> targets_;
  std::vector<double> self_loops_;
  std::vector<double> degrees_;
  double two_m_ = 0.0;
};

/// Newman-Girvan modularity, Q = sum_c (e_c / m - resolution * (d_c / 2m)^2).
/// `membership` holds any community label per node. Throws EmptyGraph when m = 0.
double modularity(const WeightedGraph& graph, std::span<const std::uint32_t> membership,
                  double resolution = 1.0);

struct DendrogramLevel {
  /// Community of every original node, canonical (first-occurrence order).
  std::vector<ClusterId> membership;
  std::size_t communities = 0;
  double modularity = 0.0;
  friend bool operator==(const DendrogramLevel&, const DendrogramLevel&) = default;
};

/// Nested partitions of the original nodes, finest first.
struct Dendrogram {
  std::vector<DendrogramLevel> levels;
  std::size_t depth() const noexcept { return levels.size(); }
  friend bool operator==(const Dendrogram&, const Dendrogram&) = default;
};

struct LouvainOptions {
  double resolution = 1.0;
};

/// Deterministic Louvain: nodes are swept in ascending id order, a node moves
/// only for a strictly positive modularity gain, and gain ties go to the
/// lowest community id. Throws EmptyGraph when the graph has no edge weight.
Dendrogram louvain(const WeightedGraph& graph, const LouvainOptions& options = {});

/// Aggregates communities into nodes; intra-community weight becomes self-loops.
WeightedGraph aggregate(const WeightedGraph& graph, std::span<const ClusterId> membership);

/// Address partition of dendrogram level `level` (1-based): an address joins
/// the community of its H1 user. Users the dendrogram does not cover become
/// singletons. Throws LevelOutOfRange.
Partition project_level(const Dendrogram& dendrogram, std::size_t level, const Partition& users);

/// `user,community` CSV for one level.
void write_level_csv(const DendrogramLevel& level, std::ostream& out);
/// JSON array of {level, communities, modularity}.
void write_dendrogram_summary(const Dendrogram& dendrogram, std::ostream& out);

}  // namespace btcreid
