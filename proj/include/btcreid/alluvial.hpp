#pragma once

// Alluvial diagrams comparing several partitions of one address universe.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "btcreid/evalkit.hpp"
#include "btcreid/partition.hpp"

namespace btcreid {

struct AlluvialNode {
  ClusterId id;
  std::string label;
  std::uint64_t size;
  friend bool operator==(const AlluvialNode&, const AlluvialNode&) = default;
};

/// One vertical axis; nodes are listed top to bottom.
struct AlluvialAxis {
  std::string name;
  std::vector<AlluvialNode> nodes;
  friend bool operator==(const AlluvialAxis&, const AlluvialAxis&) = default;
};

/// Addresses going from cluster `left` of axis `axis` to cluster `right` of
/// axis `axis + 1`.
struct AlluvialFlow {
  std::size_t axis;
  ClusterId left;
  ClusterId right;
  std::uint64_t count;
  friend bool operator==(const AlluvialFlow&, const AlluvialFlow&) = default;
};

struct AlluvialSpec {
  std::vector<AlluvialAxis> axes;
  std::vector<AlluvialFlow> flows;  // sorted by (axis, left, right)
  friend bool operator==(const AlluvialSpec&, const AlluvialSpec&) = default;
};

/// Flows between adjacent partitions, with node orders chosen by alternating
/// barycenter sweeps. A sweep is kept only if it does not increase the
/// weighted crossing count; layout stops when orders settle or after
/// `max_sweeps`. Throws UniverseMismatch, or std::invalid_argument for fewer
/// than two partitions.
AlluvialSpec alluvial(std::span<const NamedPartition> partitions, std::size_t max_sweeps = 50);

/// Number of address-line crossings between axis `axis` and `axis + 1`.
std::uint64_t crossings(const AlluvialSpec& spec, std::size_t axis);
std::uint64_t total_crossings(const AlluvialSpec& spec);

void write_alluvial_json(const AlluvialSpec& spec, std::ostream& out);

/// Standalone SVG 1.1 document. Throws IoFailure when there is nothing to draw.
std::string alluvial_svg(const AlluvialSpec& spec);
void render_alluvial_svg(const AlluvialSpec& spec, const std::filesystem::path& path);

}  // namespace btcreid
