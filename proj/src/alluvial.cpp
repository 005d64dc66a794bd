#include "btcreid/alluvial.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "btcreid/errors.hpp"

namespace btcreid {

namespace {

using Orders = std::vector<std::vector<ClusterId>>;  // per axis, top to bottom

std::vector<std::size_t> positions_of(const std::vector<ClusterId>& order) {
  std::vector<std::size_t> pos(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) pos[order[p]] = p;
  return pos;
}

// Weighted inversions: pairs of flows whose left ends are strictly ordered
// one way and right ends strictly the other way, each pair counted
// count_a * count_b times.
std::uint64_t crossings_between(std::span<const AlluvialFlow> flows, const std::vector<std::size_t>& left_pos,
                                const std::vector<std::size_t>& right_pos) {
  struct Seg {
    std::size_t l, r;
    std::uint64_t c;
  };
  std::vector<Seg> segs;
  segs.reserve(flows.size());
  for (const auto& f : flows) segs.push_back({left_pos[f.left], right_pos[f.right], f.count});
  std::sort(segs.begin(), segs.end(), [](const Seg& a, const Seg& b) { return a.l != b.l ? a.l < b.l : a.r < b.r; });

  // Fenwick tree of inserted weight by right position.
  const std::size_t n = right_pos.size();
  std::vector<std::uint64_t> tree(n + 1, 0);
  std::uint64_t inserted = 0;
  std::uint64_t total = 0;
  for (const auto& s : segs) {
    std::uint64_t at_or_below = 0;
    for (std::size_t i = s.r + 1; i > 0; i -= i & (~i + 1)) at_or_below += tree[i];
    total += s.c * (inserted - at_or_below);
    for (std::size_t i = s.r + 1; i <= n; i += i & (~i + 1)) tree[i] += s.c;
    inserted += s.c;
  }
  return total;
}

struct Layout {
  std::vector<std::vector<AlluvialFlow>> flows;  // per axis pair
  Orders orders;

  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (std::size_t k = 0; k < flows.size(); ++k)
      sum += crossings_between(flows[k], positions_of(orders[k]), positions_of(orders[k + 1]));
    return sum;
  }

  // Reorders axis `target` by the weighted mean position of its flows'
  // other ends on axis `reference`.
  void reorder(std::size_t target, std::size_t reference) {
    const auto ref_pos = positions_of(orders[reference]);
    const std::size_t k = orders[target].size();
    std::vector<double> weighted(k, 0.0);
    std::vector<double> weight(k, 0.0);
    const bool target_is_right = target > reference;
    for (const auto& f : flows[std::min(target, reference)]) {
      const auto node = target_is_right ? f.right : f.left;
      const auto other = target_is_right ? f.left : f.right;
      weighted[node] += static_cast<double>(f.count) * static_cast<double>(ref_pos[other]);
      weight[node] += static_cast<double>(f.count);
    }
    std::vector<double> barycenter(k);
    for (std::size_t c = 0; c < k; ++c) barycenter[c] = weight[c] > 0.0 ? weighted[c] / weight[c] : 0.0;
    auto& order = orders[target];
    std::sort(order.begin(), order.end(), [&](ClusterId a, ClusterId b) {
      return barycenter[a] != barycenter[b] ? barycenter[a] < barycenter[b] : a < b;
    });
  }
};

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", value);
  return buffer;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

AlluvialSpec alluvial(std::span<const NamedPartition> partitions, std::size_t max_sweeps) {
  if (partitions.size() < 2) throw std::invalid_argument("an alluvial diagram needs at least two partitions");
  for (std::size_t k = 1; k < partitions.size(); ++k)
    require_same_universe(partitions[0].partition, partitions[k].partition);

  Layout layout;
  const std::size_t axes = partitions.size();
  layout.orders.resize(axes);
  for (std::size_t k = 0; k < axes; ++k) {
    layout.orders[k].resize(partitions[k].partition.num_clusters());
    for (std::size_t c = 0; c < layout.orders[k].size(); ++c) layout.orders[k][c] = static_cast<ClusterId>(c);
  }
  layout.flows.resize(axes - 1);
  for (std::size_t k = 0; k + 1 < axes; ++k) {
    std::map<std::pair<ClusterId, ClusterId>, std::uint64_t> counts;
    const auto& left = partitions[k].partition;
    const auto& right = partitions[k + 1].partition;
    for (std::size_t i = 0; i < left.size(); ++i) ++counts[{left.label(i), right.label(i)}];
    for (const auto& [key, count] : counts) layout.flows[k].push_back({k, key.first, key.second, count});
  }

  std::uint64_t best = layout.total();
  for (std::size_t sweep = 0; sweep < max_sweeps && best > 0; ++sweep) {
    Layout candidate = layout;
    for (std::size_t k = 1; k < axes; ++k) candidate.reorder(k, k - 1);
    for (std::size_t k = axes - 1; k-- > 0;) candidate.reorder(k, k + 1);
    const auto score = candidate.total();
    if (score > best || candidate.orders == layout.orders) break;
    layout.orders = std::move(candidate.orders);
    best = score;
  }

  AlluvialSpec spec;
  for (std::size_t k = 0; k < axes; ++k) {
    const auto& p = partitions[k].partition;
    const auto sizes = p.cluster_sizes();
    AlluvialAxis axis;
    axis.name = partitions[k].name;
    for (auto c : layout.orders[k]) axis.nodes.push_back({c, p.cluster_name(c), sizes[c]});
    spec.axes.push_back(std::move(axis));
  }
  for (auto& f : layout.flows) spec.flows.insert(spec.flows.end(), f.begin(), f.end());
  return spec;
}

std::uint64_t crossings(const AlluvialSpec& spec, std::size_t axis) {
  if (axis + 1 >= spec.axes.size()) throw std::out_of_range("no axis pair at this index");
  auto positions = [](const AlluvialAxis& a) {
    ClusterId max_id = 0;
    for (const auto& n : a.nodes) max_id = std::max(max_id, n.id);
    std::vector<std::size_t> pos(a.nodes.empty() ? 0 : max_id + 1, 0);
    for (std::size_t p = 0; p < a.nodes.size(); ++p) pos[a.nodes[p].id] = p;
    return pos;
  };
  std::vector<AlluvialFlow> flows;
  for (const auto& f : spec.flows)
    if (f.axis == axis) flows.push_back(f);
  return crossings_between(flows, positions(spec.axes[axis]), positions(spec.axes[axis + 1]));
}

std::uint64_t total_crossings(const AlluvialSpec& spec) {
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k + 1 < spec.axes.size(); ++k) sum += crossings(spec, k);
  return sum;
}

void write_alluvial_json(const AlluvialSpec& spec, std::ostream& out) {
  using ordered = nlohmann::ordered_json;
  ordered doc;
  auto axes = ordered::array();
  for (const auto& axis : spec.axes) {
    auto clusters = ordered::array();
    for (const auto& n : axis.nodes) clusters.push_back({{"id", n.id}, {"label", n.label}, {"size", n.size}});
    axes.push_back({{"name", axis.name}, {"clusters", std::move(clusters)}});
  }
  auto flows = ordered::array();
  for (const auto& f : spec.flows)
    flows.push_back({{"axis", f.axis}, {"left", f.left}, {"right", f.right}, {"count", f.count}});
  doc["axes"] = std::move(axes);
  doc["flows"] = std::move(flows);
  out << doc.dump(2) << '\n';
}

std::string alluvial_svg(const AlluvialSpec& spec) {
  if (spec.flows.empty() || spec.axes.size() < 2) throw IoFailure("alluvial spec has no flows to draw");

  constexpr double kAxisGap = 320.0;
  constexpr double kBarWidth = 14.0;
  constexpr double kMargin = 60.0;
  constexpr double kPlotHeight = 640.0;
  constexpr double kMaxNodeGap = 4.0;

  std::uint64_t universe = 0;
  for (const auto& n : spec.axes.front().nodes) universe += n.size;

  // Shared vertical scale so equal counts get equal heights on every axis.
  std::vector<double> node_gap(spec.axes.size());
  double scale = kPlotHeight / static_cast<double>(universe);
  for (std::size_t k = 0; k < spec.axes.size(); ++k) {
    const auto nodes = spec.axes[k].nodes.size();
    node_gap[k] = nodes > 1 ? std::min(kMaxNodeGap, 0.25 * kPlotHeight / static_cast<double>(nodes - 1)) : 0.0;
    const double usable = kPlotHeight - node_gap[k] * static_cast<double>(nodes > 0 ? nodes - 1 : 0);
    scale = std::min(scale, usable / static_cast<double>(universe));
  }

  // Node tops per axis, indexed by cluster id.
  std::vector<std::map<ClusterId, double>> top(spec.axes.size());
  std::vector<std::map<ClusterId, std::size_t>> rank(spec.axes.size());
  for (std::size_t k = 0; k < spec.axes.size(); ++k) {
    double y = kMargin;
    for (std::size_t p = 0; p < spec.axes[k].nodes.size(); ++p) {
      const auto& n = spec.axes[k].nodes[p];
      top[k][n.id] = y;
      rank[k][n.id] = p;
      y += static_cast<double>(n.size) * scale + node_gap[k];
    }
  }

  const double width = 2.0 * kMargin + kAxisGap * static_cast<double>(spec.axes.size() - 1) + kBarWidth;
  const double height = 2.0 * kMargin + kPlotHeight + 20.0;
  auto x_of = [&](std::size_t k) { return kMargin + kAxisGap * static_cast<double>(k); };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + format_number(width) +
         "\" height=\"" + format_number(height) + "\" viewBox=\"0 0 " + format_number(width) + " " +
         format_number(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  // Ribbons: inside each node, flows stack in the order of their other end.
  svg += "<g fill-opacity=\"0.45\" stroke=\"none\">\n";
  for (std::size_t k = 0; k + 1 < spec.axes.size(); ++k) {
    std::vector<const AlluvialFlow*> flows;
    for (const auto& f : spec.flows)
      if (f.axis == k) flows.push_back(&f);

    std::map<std::pair<ClusterId, ClusterId>, double> left_offset;
    std::map<std::pair<ClusterId, ClusterId>, double> right_offset;
    auto by_left = flows;
    std::sort(by_left.begin(), by_left.end(), [&](const AlluvialFlow* a, const AlluvialFlow* b) {
      const auto la = rank[k][a->left], lb = rank[k][b->left];
      return la != lb ? la < lb : rank[k + 1][a->right] < rank[k + 1][b->right];
    });
    std::map<ClusterId, double> cursor;
    for (const auto* f : by_left) {
      auto [it, fresh] = cursor.try_emplace(f->left, top[k][f->left]);
      left_offset[{f->left, f->right}] = it->second;
      it->second += static_cast<double>(f->count) * scale;
    }
    auto by_right = flows;
    std::sort(by_right.begin(), by_right.end(), [&](const AlluvialFlow* a, const AlluvialFlow* b) {
      const auto ra = rank[k + 1][a->right], rb = rank[k + 1][b->right];
      return ra != rb ? ra < rb : rank[k][a->left] < rank[k][b->left];
    });
    cursor.clear();
    for (const auto* f : by_right) {
      auto [it, fresh] = cursor.try_emplace(f->right, top[k + 1][f->right]);
      right_offset[{f->left, f->right}] = it->second;
      it->second += static_cast<double>(f->count) * scale;
    }

    const double x0 = x_of(k) + kBarWidth;
    const double x1 = x_of(k + 1);
    const double xm = (x0 + x1) / 2.0;
    for (const auto* f : by_left) {
      const double h = static_cast<double>(f->count) * scale;
      const double y0 = left_offset[{f->left, f->right}];
      const double y1 = right_offset[{f->left, f->right}];
      const int hue = static_cast<int>((rank[k][f->left] * 47) % 360);
      svg += "<path class=\"flow\" fill=\"hsl(" + std::to_string(hue) + ",60%,50%)\" d=\"M" + format_number(x0) +
             "," + format_number(y0) + " C" + format_number(xm) + "," + format_number(y0) + " " +
             format_number(xm) + "," + format_number(y1) + " " + format_number(x1) + "," + format_number(y1) +
             " L" + format_number(x1) + "," + format_number(y1 + h) + " C" + format_number(xm) + "," +
             format_number(y1 + h) + " " + format_number(xm) + "," + format_number(y0 + h) + " " +
             format_number(x0) + "," + format_number(y0 + h) + " Z\"><title>" + std::to_string(f->count) +
             "</title></path>\n";
    }
  }
  svg += "</g>\n";

  svg += "<g font-family=\"sans-serif\" font-size=\"10\">\n";
  for (std::size_t k = 0; k < spec.axes.size(); ++k) {
    const double x = x_of(k);
    svg += "<text class=\"axis-label\" x=\"" + format_number(x + kBarWidth / 2.0) + "\" y=\"" +
           format_number(kMargin - 16.0) + "\" text-anchor=\"middle\" font-size=\"13\">" +
           xml_escape(spec.axes[k].name) + "</text>\n";
    for (const auto& n : spec.axes[k].nodes) {
      const double h = static_cast<double>(n.size) * scale;
      const double y = top[k][n.id];
      svg += "<rect class=\"node\" x=\"" + format_number(x) + "\" y=\"" + format_number(y) + "\" width=\"" +
             format_number(kBarWidth) + "\" height=\"" + format_number(h) +
             "\" fill=\"#333333\"><title>" + xml_escape(n.label) + " (" + std::to_string(n.size) +
             ")</title></rect>\n";
      if (h >= 10.0) {
        svg += "<text x=\"" + format_number(x + kBarWidth + 3.0) + "\" y=\"" + format_number(y + h / 2.0 + 3.0) +
               "\">" + xml_escape(n.label) + "</text>\n";
      }
    }
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

void render_alluvial_svg(const AlluvialSpec& spec, const std::filesystem::path& path) {
  const auto svg = alluvial_svg(spec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write '" + path.string() + "'");
  out << svg;
  if (!out) throw IoFailure("failed writing '" + path.string() + "'");
}

}  // namespace btcreid
