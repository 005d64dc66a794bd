#include "btcreid/hintnet.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "btcreid/errors.hpp"
#include "btcreid/identity.hpp"

namespace btcreid {

HintGraph::HintGraph(std::size_t num_nodes, std::vector<HintEdge> edges)
    : num_nodes_(num_nodes), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (!(e.u < e.v) || e.v >= num_nodes_ || e.weight == 0)
      throw std::invalid_argument("hint edges need u < v < num_nodes and positive weight");
    if (i > 0 && !(edges_[i - 1].u < e.u || (edges_[i - 1].u == e.u && edges_[i - 1].v < e.v)))
      throw std::invalid_argument("hint edges must be sorted and unique");
  }
}

std::uint64_t HintGraph::weight(ClusterId a, ClusterId b) const {
  if (a > b) std::swap(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), HintEdge{a, b, 0},
                             [](const HintEdge& x, const HintEdge& y) {
                               return x.u != y.u ? x.u < y.u : x.v < y.v;
                             });
  return (it != edges_.end() && it->u == a && it->v == b) ? it->weight : 0;
}

std::vector<ClusterId> HintGraph::isolates() const {
  std::vector<bool> linked(num_nodes_, false);
  for (const auto& e : edges_) linked[e.u] = linked[e.v] = true;
  std::vector<ClusterId> out;
  for (std::size_t v = 0; v < num_nodes_; ++v)
    if (!linked[v]) out.push_back(static_cast<ClusterId>(v));
  return out;
}

WeightedGraph HintGraph::to_weighted_graph(bool weighted) const {
  std::vector<WeightedGraph::Edge> edges;
  edges.reserve(edges_.size());
  for (const auto& e : edges_)
    edges.push_back({e.u, e.v, weighted ? static_cast<double>(e.weight) : 1.0});
  return WeightedGraph(num_nodes_, edges);
}

HintGraph build_hint_graph(const Ledger& ledger, const Partition& h1, std::size_t max_recipients) {
  if (max_recipients < 1) throw std::invalid_argument("max_recipients must be at least 1");
  const auto user_of = clusters_by_address_id(ledger, h1);

  std::unordered_map<std::uint64_t, std::uint64_t> weights;
  std::vector<ClusterId> recipients;
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    const auto tx = ledger[i];
    if (tx.is_coinbase || tx.inputs.empty()) continue;

    const ClusterId sender = user_of[tx.inputs.front().address];
    for (const auto& in : tx.inputs) {
      if (user_of[in.address] != sender)
        throw InvalidPartition("transaction " + std::to_string(i) +
                               " has inputs in more than one cluster");
    }

    recipients.clear();
    for (const auto& out : tx.outputs) recipients.push_back(user_of[out.address]);
    std::sort(recipients.begin(), recipients.end());
    recipients.erase(std::unique(recipients.begin(), recipients.end()), recipients.end());

    if (recipients.size() >= max_recipients) continue;
    if (std::binary_search(recipients.begin(), recipients.end(), sender)) continue;

    for (auto r : recipients) {
      const auto u = std::min(sender, r);
      const auto v = std::max(sender, r);
      ++weights[(static_cast<std::uint64_t>(u) << 32) | v];
    }
  }

  std::vector<HintEdge> edges;
  edges.reserve(weights.size());
  for (const auto& [key, w] : weights)
    edges.push_back({static_cast<ClusterId>(key >> 32), static_cast<ClusterId>(key & 0xffffffffu), w});
  std::sort(edges.begin(), edges.end(), [](const HintEdge& a, const HintEdge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  return HintGraph(h1.num_clusters(), std::move(edges));
}

void write_edge_list(const HintGraph& graph, std::ostream& out) {
  for (const auto& e : graph.edges()) out << e.u << ' ' << e.v << ' ' << e.weight << '\n';
}

void write_isolates(const HintGraph& graph, std::ostream& out) {
  for (auto v : graph.isolates()) out << v << '\n';
}

HintGraph read_edge_list(std::istream& edges_in, std::istream& isolates_in) {
  std::vector<HintEdge> edges;
  std::size_t num_nodes = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(edges_in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::uint64_t u = 0, v = 0, w = 0;
    if (!(fields >> u >> v >> w) || u >= v || w == 0 || v > 0xffffffffu)
      throw InvalidPartition("edge list line " + std::to_string(line_no) + ": expected 'u v w' with u < v, w > 0");
    edges.push_back({static_cast<ClusterId>(u), static_cast<ClusterId>(v), w});
    num_nodes = std::max<std::size_t>(num_nodes, v + 1);
  }
  line_no = 0;
  while (std::getline(isolates_in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::uint64_t v = 0;
    if (!(fields >> v) || v > 0xffffffffu)
      throw InvalidPartition("isolate list line " + std::to_string(line_no) + ": expected a node id");
    num_nodes = std::max<std::size_t>(num_nodes, v + 1);
  }
  std::sort(edges.begin(), edges.end(), [](const HintEdge& a, const HintEdge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  return HintGraph(num_nodes, std::move(edges));
}

}  // namespace btcreid
