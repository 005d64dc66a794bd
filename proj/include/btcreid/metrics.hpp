#pragma once

// Partition comparison: mutual-information scores and pairwise precision/recall.
// All logarithms are natural.

#include <cstdint>
#include <span>
#include <vector>

#include "btcreid/partition.hpp"

namespace btcreid {

/// Sparse contingency table of two partitions over one universe.
struct ContingencyTable {
  struct Cell {
    ClusterId row;
    ClusterId col;
    std::uint64_t count;
    friend bool operator==(const Cell&, const Cell&) = default;
  };
  std::vector<std::uint64_t> rows;  // cluster sizes of U
  std::vector<std::uint64_t> cols;  // cluster sizes of V
  std::vector<Cell> cells;          // non-zero cells, sorted by (row, col)
  std::uint64_t total = 0;

  std::uint64_t at(ClusterId row, ClusterId col) const;
};

/// Throws UniverseMismatch.
ContingencyTable contingency(const Partition& u, const Partition& v);
ContingencyTable contingency(std::span<const ClusterId> u, std::span<const ClusterId> v);

double entropy(std::span<const std::uint64_t> cluster_sizes);
double mutual_information(const ContingencyTable& table);
/// E[I(U,V)] when V is a uniformly random relabelling with the same cluster
/// sizes (hypergeometric model).
double expected_mutual_information(const ContingencyTable& table);

/// I(U,V) / sqrt(H(U) H(V)). When either entropy is zero the result is 1 for
/// identical partitions and 0 otherwise.
double nmi(const Partition& u, const Partition& v);
/// (I - E[I]) / (sqrt(H(U) H(V)) - E[I]), with the same zero-entropy
/// convention as nmi; 0 when the denominator vanishes.
double anmi(const Partition& u, const Partition& v);

struct PairCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
  friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

/// Counts over all unordered element pairs. A pair is TP when grouped in
/// both, FP when grouped only by `predicted`, FN when grouped only by `truth`.
PairCounts pair_counts(const Partition& truth, const Partition& predicted);
PairCounts pair_counts(const ContingencyTable& table);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
};

/// precision = 1 when TP+FP = 0, recall = 1 when TP+FN = 0, f1 = 0 when both are 0.
PrecisionRecall precision_recall_f1(const PairCounts& counts);
PrecisionRecall precision_recall_f1(double precision, double recall);

}  // namespace btcreid
