#include "btcreid/identity.hpp"

#include <algorithm>

#include "btcreid/errors.hpp"

namespace btcreid {

namespace {

bool is_input_address(const Transaction& tx, AddressId address) {
  return std::any_of(tx.inputs.begin(), tx.inputs.end(),
                     [&](const TxInput& in) { return in.address == address; });
}

bool fresh_in(const Transaction& tx, const FirstSeen& first_seen, AddressId address) {
  const auto seen = first_seen.at(address);
  return seen && *seen == tx.index;
}

}  // namespace

UnionFind common_input_sets(const Ledger& ledger) {
  UnionFind sets(ledger.addresses().size());
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    const auto inputs = ledger[i].inputs;
    // A path through the inputs: n-1 edges for n addresses.
    for (std::size_t k = 1; k < inputs.size(); ++k) sets.unite(inputs[k - 1].address, inputs[k].address);
  }
  return sets;
}

Partition partition_from_sets(const Ledger& ledger, UnionFind& sets) {
  const auto& names = ledger.addresses().names();
  std::vector<std::uint64_t> roots(names.size());
  for (std::size_t id = 0; id < names.size(); ++id) roots[id] = sets.find(static_cast<std::uint32_t>(id));
  return Partition::from_labels(names, roots);
}

Partition cluster_h1(const Ledger& ledger) {
  auto sets = common_input_sets(ledger);
  return partition_from_sets(ledger, sets);
}

std::optional<AddressId> detect_change_h2(const Transaction& tx, const FirstSeen& first_seen) {
  if (tx.is_coinbase || tx.outputs.size() != 2) return std::nullopt;
  const auto a = tx.outputs[0].address;
  const auto b = tx.outputs[1].address;
  if (a == b) return std::nullopt;

  const auto seen_a = first_seen.at(a);
  const auto seen_b = first_seen.at(b);
  if (!seen_a || !seen_b) return std::nullopt;

  std::optional<AddressId> change;
  if (*seen_a == tx.index && *seen_b < tx.index) change = a;
  if (*seen_b == tx.index && *seen_a < tx.index) change = b;
  if (change && is_input_address(tx, *change)) return std::nullopt;
  return change;
}

std::optional<AddressId> detect_change_h3(const Transaction& tx, const FirstSeen& first_seen) {
  if (tx.is_coinbase) return std::nullopt;
  std::optional<AddressId> fresh;
  for (const auto& out : tx.outputs) {
    if (!fresh_in(tx, first_seen, out.address)) continue;
    if (fresh && *fresh != out.address) return std::nullopt;
    fresh = out.address;
  }
  if (fresh && is_input_address(tx, *fresh)) return std::nullopt;
  return fresh;
}

std::string_view to_string(ChangeHeuristic heuristic) {
  return heuristic == ChangeHeuristic::kH2 ? "h2" : "h3";
}

Partition cluster_with_change(const Ledger& ledger, ChangeHeuristic heuristic) {
  auto sets = common_input_sets(ledger);
  const auto seen = first_seen(ledger);
  const auto detect = heuristic == ChangeHeuristic::kH2 ? detect_change_h2 : detect_change_h3;
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    const auto tx = ledger[i];
    if (tx.inputs.empty()) continue;
    if (auto change = detect(tx, seen)) sets.unite(*change, tx.inputs.front().address);
  }
  return partition_from_sets(ledger, sets);
}

std::vector<ClusterId> clusters_by_address_id(const Ledger& ledger, const Partition& partition) {
  const auto& names = ledger.addresses().names();
  std::vector<ClusterId> clusters(names.size());
  for (std::size_t id = 0; id < names.size(); ++id) {
    const auto cluster = partition.cluster_of(names[id]);
    if (!cluster) throw InvalidPartition("address '" + names[id] + "' is not in the partition");
    clusters[id] = *cluster;
  }
  return clusters;
}

}  // namespace btcreid
