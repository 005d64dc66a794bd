#include "btcreid/partition.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "btcreid/errors.hpp"

namespace btcreid {

namespace {

std::string join_head(const std::vector<std::string>& items, std::size_t limit) {
  std::string out;
  for (std::size_t i = 0; i < items.size() && i < limit; ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  if (items.size() > limit) out += ", ... (" + std::to_string(items.size()) + " total)";
  return out;
}

template <typename T>
std::vector<ClusterId> canonicalize_impl(std::span<const T> raw) {
  std::unordered_map<T, ClusterId> ids;
  ids.reserve(raw.size());
  std::vector<ClusterId> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(raw[i], static_cast<ClusterId>(ids.size()));
    out[i] = it->second;
  }
  return out;
}

// Minimal RFC-4180 field handling: quoted fields with doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

std::string csv_escape(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

UniverseMismatch::UniverseMismatch(std::vector<std::string> difference)
    : Error("partitions cover different addresses: " + join_head(difference, 8)),
      difference_(std::move(difference)) {}

std::vector<ClusterId> canonicalize(std::span<const std::uint64_t> raw) {
  return canonicalize_impl(raw);
}

std::vector<ClusterId> canonicalize(std::span<const ClusterId> raw) {
  return canonicalize_impl(raw);
}

Partition Partition::from_labels(std::vector<std::string> addresses,
                                 std::span<const std::uint64_t> raw_labels) {
  if (addresses.size() != raw_labels.size())
    throw std::invalid_argument("address and label counts differ");

  std::vector<std::size_t> order(addresses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return addresses[a] < addresses[b]; });

  Partition p;
  p.addresses_.reserve(addresses.size());
  std::vector<std::uint64_t> sorted_raw;
  sorted_raw.reserve(addresses.size());
  for (auto i : order) {
    if (addresses[i].empty()) throw std::invalid_argument("empty address");
    if (!p.addresses_.empty() && p.addresses_.back() == addresses[i])
      throw std::invalid_argument("duplicate address '" + addresses[i] + "'");
    p.addresses_.push_back(std::move(addresses[i]));
    sorted_raw.push_back(raw_labels[i]);
  }
  p.labels_ = canonicalize(sorted_raw);
  p.num_clusters_ = p.labels_.empty() ? 0 : *std::max_element(p.labels_.begin(), p.labels_.end()) + 1;
  return p;
}

Partition Partition::from_named(std::vector<std::pair<std::string, std::string>> address_labels) {
  std::unordered_map<std::string, std::uint64_t> label_ids;
  std::vector<std::string> label_names;
  std::vector<std::string> addresses;
  std::vector<std::uint64_t> raw;
  addresses.reserve(address_labels.size());
  raw.reserve(address_labels.size());
  for (auto& [address, label] : address_labels) {
    auto [it, inserted] = label_ids.try_emplace(label, label_names.size());
    if (inserted) label_names.push_back(std::move(label));
    addresses.push_back(std::move(address));
    raw.push_back(it->second);
  }
  std::unordered_map<std::string_view, std::uint64_t> raw_by_address;
  raw_by_address.reserve(addresses.size());
  for (std::size_t i = 0; i < addresses.size(); ++i) raw_by_address.emplace(addresses[i], raw[i]);

  Partition p = from_labels(addresses, raw);
  p.names_.resize(p.num_clusters_);
  for (std::size_t pos = 0; pos < p.addresses_.size(); ++pos)
    p.names_[p.labels_[pos]] = label_names[raw_by_address.at(p.addresses_[pos])];
  return p;
}

Partition Partition::relabeled(std::span<const std::uint64_t> raw_labels) const {
  if (raw_labels.size() != addresses_.size())
    throw std::invalid_argument("label count differs from universe size");
  Partition p;
  p.addresses_ = addresses_;
  p.labels_ = canonicalize(raw_labels);
  p.num_clusters_ = p.labels_.empty() ? 0 : *std::max_element(p.labels_.begin(), p.labels_.end()) + 1;
  return p;
}

Partition Partition::restricted(const std::vector<bool>& keep) const {
  if (keep.size() != addresses_.size())
    throw std::invalid_argument("mask size differs from universe size");
  Partition p;
  std::vector<ClusterId> old_labels;
  for (std::size_t i = 0; i < addresses_.size(); ++i) {
    if (!keep[i]) continue;
    p.addresses_.push_back(addresses_[i]);
    old_labels.push_back(labels_[i]);
  }
  p.labels_ = canonicalize(old_labels);
  p.num_clusters_ = p.labels_.empty() ? 0 : *std::max_element(p.labels_.begin(), p.labels_.end()) + 1;
  if (has_names()) {
    p.names_.resize(p.num_clusters_);
    for (std::size_t i = 0; i < old_labels.size(); ++i) p.names_[p.labels_[i]] = names_[old_labels[i]];
  }
  return p;
}

std::optional<std::size_t> Partition::position(std::string_view address) const {
  auto it = std::lower_bound(addresses_.begin(), addresses_.end(), address,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == addresses_.end() || *it != address) return std::nullopt;
  return static_cast<std::size_t>(it - addresses_.begin());
}

std::optional<ClusterId> Partition::cluster_of(std::string_view address) const {
  if (auto pos = position(address)) return labels_[*pos];
  return std::nullopt;
}

void Partition::set_cluster_names(std::vector<std::string> names) {
  if (names.size() != num_clusters_) throw std::invalid_argument("one name per cluster expected");
  names_ = std::move(names);
}

std::string Partition::cluster_name(ClusterId id) const {
  if (has_names()) return names_.at(id);
  return std::to_string(id);
}

std::vector<std::size_t> Partition::cluster_sizes() const {
  std::vector<std::size_t> sizes(num_clusters_, 0);
  for (auto c : labels_) ++sizes[c];
  return sizes;
}

bool Partition::coarsens(const Partition& finer) const {
  require_same_universe(*this, finer);
  std::vector<std::int64_t> image(finer.num_clusters_, -1);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    auto& slot = image[finer.labels_[i]];
    if (slot < 0) {
      slot = labels_[i];
    } else if (slot != static_cast<std::int64_t>(labels_[i])) {
      return false;
    }
  }
  return true;
}

void require_same_universe(const Partition& a, const Partition& b) {
  if (a.same_universe(b)) return;
  std::vector<std::string> diff;
  std::set_symmetric_difference(a.addresses().begin(), a.addresses().end(), b.addresses().begin(),
                                b.addresses().end(), std::back_inserter(diff));
  throw UniverseMismatch(std::move(diff));
}

void write_partition_csv(const Partition& partition, std::ostream& out, std::string_view header) {
  out << header << '\n';
  for (std::size_t i = 0; i < partition.size(); ++i)
    out << csv_escape(partition.addresses()[i]) << ',' << partition.label(i) << '\n';
}

void write_partition_csv(const Partition& partition, const std::filesystem::path& path,
                         std::string_view header) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write '" + path.string() + "'");
  write_partition_csv(partition, out, header);
  if (!out) throw IoFailure("failed writing '" + path.string() + "'");
}

Partition read_partition_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidPartition("partition file is empty");
  std::vector<std::pair<std::string, std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw InvalidPartition("line " + std::to_string(line_no) + ": expected two non-empty columns");
    rows.emplace_back(std::move(fields[0]), std::move(fields[1]));
  }
  try {
    return Partition::from_named(std::move(rows));
  } catch (const std::invalid_argument& e) {
    throw InvalidPartition(e.what());
  }
}

Partition read_partition_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path.string() + "'");
  return read_partition_csv(in);
}

}  // namespace btcreid
