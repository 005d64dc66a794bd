#pragma once

// Identity hint network over H1 users.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "btcreid/community.hpp"
#include "btcreid/ledger.hpp"
#include "btcreid/partition.hpp"

namespace btcreid {

struct HintEdge {
  ClusterId u;  // u < v
  ClusterId v;
  std::uint64_t weight;  // number of transactions carrying this hint
  friend bool operator==(const HintEdge&, const HintEdge&) = default;
};

class HintGraph {
 public:
  HintGraph() = default;
  /// `edges` must be sorted, deduplicated, with u < v < num_nodes.
  HintGraph(std::size_t num_nodes, std::vector<HintEdge> edges);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  const std::vector<HintEdge>& edges() const noexcept { return edges_; }
  std::uint64_t weight(ClusterId a, ClusterId b) const;
  std::vector<ClusterId> isolates() const;

  /// Unit weights unless `weighted`, in which case hint counts are used.
  WeightedGraph to_weighted_graph(bool weighted = false) const;

  friend bool operator==(const HintGraph&, const HintGraph&) = default;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<HintEdge> edges_;
};

/// For each non-coinbase transaction with sender S (the H1 user of all its
/// inputs) and R the set of distinct H1 users among its outputs, adds the
/// edges (S, r) for r in R when |R| < max_recipients and S is not in R.
/// Throws InvalidPartition if a transaction's inputs span several users.
HintGraph build_hint_graph(const Ledger& ledger, const Partition& h1, std::size_t max_recipients = 10);

/// Edge list `u v w`, one edge per line, ascending.
void write_edge_list(const HintGraph& graph, std::ostream& out);
/// One isolated node id per line.
void write_isolates(const HintGraph& graph, std::ostream& out);
/// Reads the two files written above back into a graph whose node count is
/// one past the largest id mentioned in either.
HintGraph read_edge_list(std::istream& edges, std::istream& isolates);

}  // namespace btcreid
