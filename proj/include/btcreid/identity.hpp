#pragma once

// Address clustering heuristics: common-input ownership (H1) and the two
// one-time change address detectors (H2, H3).

#include <optional>
#include <string_view>
#include <vector>

#include "btcreid/ledger.hpp"
#include "btcreid/partition.hpp"
#include "btcreid/union_find.hpp"

namespace btcreid {

/// Clusters addresses that are spent together. Every address of the ledger
/// is in the universe; addresses never co-spent are singletons.
Partition cluster_h1(const Ledger& ledger);

/// Exactly two distinct output addresses, one first seen in this transaction
/// and the other seen before. Coinbase transactions and change addresses that
/// also appear among the inputs are rejected.
std::optional<AddressId> detect_change_h2(const Transaction& tx, const FirstSeen& first_seen);

/// The single output address first seen in this transaction, for
/// non-coinbase transactions where it is not also an input address.
std::optional<AddressId> detect_change_h3(const Transaction& tx, const FirstSeen& first_seen);

enum class ChangeHeuristic { kH2, kH3 };

std::string_view to_string(ChangeHeuristic heuristic);

/// H1 plus one edge per detected change address, linking it to the first
/// input address of its transaction. The result coarsens cluster_h1.
Partition cluster_with_change(const Ledger& ledger, ChangeHeuristic heuristic);

/// Union-find over address ids with the H1 co-input edges applied.
UnionFind common_input_sets(const Ledger& ledger);

/// Canonical address partition of a union-find over the ledger's address ids.
Partition partition_from_sets(const Ledger& ledger, UnionFind& sets);

/// Cluster of every ledger address id under `partition`. Throws
/// InvalidPartition when a ledger address is missing from the partition.
std::vector<ClusterId> clusters_by_address_id(const Ledger& ledger, const Partition& partition);

}  // namespace btcreid
