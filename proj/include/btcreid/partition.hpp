#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace btcreid {

using ClusterId = std::uint32_t;

/// Relabels arbitrary labels to 0..k-1 in order of first occurrence.
std::vector<ClusterId> canonicalize(std::span<const std::uint64_t> raw);
std::vector<ClusterId> canonicalize(std::span<const ClusterId> raw);

/// Assignment of addresses to clusters.
///
/// Addresses are kept sorted and cluster ids are canonical: the id of a
/// cluster is the rank of its smallest address among the smallest addresses
/// of all clusters. Equal inputs therefore always produce equal partitions.
/// A partition may optionally carry a display name per cluster (ground-truth
/// user labels, or cluster ids read back from a file).
class Partition {
 public:
  Partition() = default;

  /// Groups `addresses[i]` by `raw_labels[i]`. Throws std::invalid_argument on
  /// duplicate or empty addresses or on a length mismatch.
  static Partition from_labels(std::vector<std::string> addresses,
                               std::span<const std::uint64_t> raw_labels);

  /// Groups addresses by a string label, which becomes the cluster name.
  static Partition from_named(std::vector<std::pair<std::string, std::string>> address_labels);

  /// Same universe, new grouping: `raw_labels[i]` groups `addresses()[i]`.
  /// Names are dropped.
  Partition relabeled(std::span<const std::uint64_t> raw_labels) const;

  /// Keeps the addresses for which `keep[i]` is true; names carry over.
  Partition restricted(const std::vector<bool>& keep) const;

  std::size_t size() const noexcept { return addresses_.size(); }
  bool empty() const noexcept { return addresses_.empty(); }
  std::size_t num_clusters() const noexcept { return num_clusters_; }

  const std::vector<std::string>& addresses() const noexcept { return addresses_; }
  std::span<const ClusterId> labels() const noexcept { return labels_; }
  ClusterId label(std::size_t i) const { return labels_[i]; }

  /// Position of `address` in addresses(), if present.
  std::optional<std::size_t> position(std::string_view address) const;
  std::optional<ClusterId> cluster_of(std::string_view address) const;

  bool has_names() const noexcept { return !names_.empty(); }
  /// One name per cluster id; throws std::invalid_argument on a size mismatch.
  void set_cluster_names(std::vector<std::string> names);
  /// Display name of a cluster; its numeric id when unnamed.
  std::string cluster_name(ClusterId id) const;

  std::vector<std::size_t> cluster_sizes() const;

  bool same_universe(const Partition& other) const noexcept {
    return addresses_ == other.addresses_;
  }
  /// True when every cluster of `finer` lies inside one cluster of *this.
  /// Requires the same universe.
  bool coarsens(const Partition& finer) const;

  /// Equality of assignments; cluster names are ignored.
  friend bool operator==(const Partition& a, const Partition& b) {
    return a.addresses_ == b.addresses_ && a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> addresses_;
  std::vector<ClusterId> labels_;
  std::vector<std::string> names_;
  std::size_t num_clusters_ = 0;
};

/// Throws UniverseMismatch listing the symmetric difference when the
/// universes differ.
void require_same_universe(const Partition& a, const Partition& b);

/// Quotes a CSV field when it contains a delimiter, quote or newline.
std::string csv_escape(std::string_view value);

/// `address,cluster` CSV sorted by address.
void write_partition_csv(const Partition& partition, std::ostream& out,
                         std::string_view header = "address,cluster");
void write_partition_csv(const Partition& partition, const std::filesystem::path& path,
                         std::string_view header = "address,cluster");

/// Reads a two-column CSV with a header row; the second column becomes the
/// cluster name.
Partition read_partition_csv(std::istream& in);
Partition read_partition_csv(const std::filesystem::path& path);

}  // namespace btcreid
