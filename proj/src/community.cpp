#include "btcreid/community.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "btcreid/errors.hpp"

namespace btcreid {

namespace {

// Upper bound on phase-1 sweeps. Every move strictly raises modularity, so
// the bound only guards against floating-point cycling.
constexpr std::size_t kMaxSweeps = 100000;

struct LocalMoves {
  std::vector<ClusterId> community;
  bool moved = false;
};

LocalMoves move_nodes(const WeightedGraph& g, double resolution) {
  const std::size_t n = g.num_nodes();
  const double two_m = g.total_weight();

  LocalMoves result;
  result.community.resize(n);
  std::vector<double> tot(n);
  for (NodeId v = 0; v < n; ++v) {
    result.community[v] = v;
    tot[v] = g.degree(v);
  }

  std::vector<double> link_weight(n, 0.0);
  std::vector<char> touched(n, 0);
  std::vector<ClusterId> candidates;

  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool moved = false;
    for (NodeId v = 0; v < n; ++v) {
      const ClusterId own = result.community[v];
      const double k = g.degree(v);

      candidates.clear();
      for (const auto& nb : g.neighbors(v)) {
        const ClusterId c = result.community[nb.node];
        if (!touched[c]) {
          touched[c] = 1;
          candidates.push_back(c);
        }
        link_weight[c] += nb.weight;
      }

      tot[own] -= k;
      const double own_gain = link_weight[own] - resolution * tot[own] * k / two_m;

      ClusterId best = own;
      double best_gain = -std::numeric_limits<double>::infinity();
      for (auto c : candidates) {
        if (c == own) continue;
        const double gain = link_weight[c] - resolution * tot[c] * k / two_m;
        if (gain > best_gain || (gain == best_gain && c < best)) {
          best = c;
          best_gain = gain;
        }
      }
      const ClusterId target = (best != own && best_gain > own_gain) ? best : own;

      tot[target] += k;
      result.community[v] = target;
      if (target != own) moved = true;

      for (auto c : candidates) {
        touched[c] = 0;
        link_weight[c] = 0.0;
      }
      link_weight[own] = 0.0;
    }
    if (!moved) break;
    result.moved = true;
  }
  return result;
}

}  // namespace

WeightedGraph::WeightedGraph(std::size_t num_nodes, std::span<const Edge> edges)
    : self_loops_(num_nodes, 0.0), degrees_(num_nodes, 0.0) {
  std::vector<Edge> links;
  links.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.u >= num_nodes || e.v >= num_nodes) throw std::invalid_argument("edge endpoint out of range");
    if (!(e.weight >= 0.0)) throw std::invalid_argument("edge weight must be non-negative");
    if (e.u == e.v) {
      self_loops_[e.u] += e.weight;
    } else {
      links.push_back({std::min(e.u, e.v), std::max(e.u, e.v), e.weight});
    }
  }
  std::stable_sort(links.begin(), links.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });

  std::vector<Edge> merged;
  for (const auto& e : links) {
    if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v) {
      merged.back().weight += e.weight;
    } else {
      merged.push_back(e);
    }
  }

  std::vector<std::size_t> counts(num_nodes, 0);
  for (const auto& e : merged) {
    ++counts[e.u];
    ++counts[e.v];
  }
  offsets_.assign(num_nodes + 1, 0);
  for (std::size_t v = 0; v < num_nodes; ++v) offsets_[v + 1] = offsets_[v] + counts[v];
  targets_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  // merged is sorted by (u, v), so every adjacency list comes out sorted.
  for (const auto& e : merged) targets_[cursor[e.v]++] = {e.u, e.weight};
  for (const auto& e : merged) targets_[cursor[e.u]++] = {e.v, e.weight};
  for (std::size_t v = 0; v < num_nodes; ++v) {
    std::sort(targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }

  for (std::size_t v = 0; v < num_nodes; ++v) {
    double d = 0.0;
    for (const auto& nb : neighbors(static_cast<NodeId>(v))) d += nb.weight;
    degrees_[v] = d + 2.0 * self_loops_[v];
    two_m_ += degrees_[v];
  }
}

double modularity(const WeightedGraph& graph, std::span<const std::uint32_t> membership,
                  double resolution) {
  if (membership.size() != graph.num_nodes())
    throw std::invalid_argument("membership size differs from node count");
  const double two_m = graph.total_weight();
  if (!(two_m > 0.0)) throw EmptyGraph();

  const auto community = canonicalize(membership);
  const std::size_t k = community.empty() ? 0 : *std::max_element(community.begin(), community.end()) + 1;
  std::vector<double> inside(k, 0.0);
  std::vector<double> total(k, 0.0);
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    const auto c = community[v];
    total[c] += graph.degree(v);
    inside[c] += 2.0 * graph.self_loop(v);
    for (const auto& nb : graph.neighbors(v))
      if (community[nb.node] == c) inside[c] += nb.weight;
  }
  double q = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double share = total[c] / two_m;
    q += inside[c] / two_m - resolution * share * share;
  }
  return q;
}

WeightedGraph aggregate(const WeightedGraph& graph, std::span<const ClusterId> membership) {
  if (membership.size() != graph.num_nodes())
    throw std::invalid_argument("membership size differs from node count");
  const std::size_t k =
      membership.empty() ? 0 : *std::max_element(membership.begin(), membership.end()) + 1;
  std::vector<WeightedGraph::Edge> edges;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    const auto cv = membership[v];
    if (graph.self_loop(v) > 0.0) edges.push_back({cv, cv, graph.self_loop(v)});
    for (const auto& nb : graph.neighbors(v)) {
      if (nb.node < v) continue;
      edges.push_back({cv, membership[nb.node], nb.weight});
    }
  }
  return WeightedGraph(k, edges);
}

Dendrogram louvain(const WeightedGraph& graph, const LouvainOptions& options) {
  if (!(graph.total_weight() > 0.0)) throw EmptyGraph();

  Dendrogram dendrogram;
  std::vector<ClusterId> membership(graph.num_nodes());
  for (NodeId v = 0; v < graph.num_nodes(); ++v) membership[v] = v;

  WeightedGraph current = graph;
  while (true) {
    auto moves = move_nodes(current, options.resolution);
    if (!moves.moved && !dendrogram.levels.empty()) break;

    const auto community = canonicalize(moves.community);
    for (auto& m : membership) m = community[m];

    DendrogramLevel level;
    level.membership = membership;
    level.communities =
        community.empty() ? 0 : *std::max_element(community.begin(), community.end()) + 1;
    level.modularity = modularity(graph, membership, options.resolution);
    dendrogram.levels.push_back(std::move(level));

    if (!moves.moved) break;
    current = aggregate(current, community);
  }
  return dendrogram;
}

Partition project_level(const Dendrogram& dendrogram, std::size_t level, const Partition& users) {
  if (level < 1 || level > dendrogram.depth()) throw LevelOutOfRange(level, dendrogram.depth());
  const auto& lvl = dendrogram.levels[level - 1];
  std::vector<std::uint64_t> raw(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto user = users.label(i);
    raw[i] = user < lvl.membership.size() ? lvl.membership[user]
                                          : static_cast<std::uint64_t>(lvl.communities) + user;
  }
  return users.relabeled(raw);
}

void write_level_csv(const DendrogramLevel& level, std::ostream& out) {
  out << "user,community\n";
  for (std::size_t u = 0; u < level.membership.size(); ++u) out << u << ',' << level.membership[u] << '\n';
}

void write_dendrogram_summary(const Dendrogram& dendrogram, std::ostream& out) {
  auto summary = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < dendrogram.depth(); ++i) {
    const auto& lvl = dendrogram.levels[i];
    summary.push_back({{"level", i + 1}, {"communities", lvl.communities}, {"modularity", lvl.modularity}});
  }
  out << summary.dump(2) << '\n';
}

}  // namespace btcreid
