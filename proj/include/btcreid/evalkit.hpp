#pragma once

// Scoring predicted address partitions against a labeled ground truth.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "btcreid/partition.hpp"

namespace btcreid {

/// Known owner of a set of addresses. The partition's cluster names are the
/// user labels.
class GroundTruth {
 public:
  GroundTruth() = default;
  explicit GroundTruth(Partition labeled);
  static GroundTruth from_pairs(std::vector<std::pair<std::string, std::string>> address_users);

  const Partition& partition() const noexcept { return partition_; }
  std::size_t size() const noexcept { return partition_.size(); }
  bool empty() const noexcept { return partition_.empty(); }
  std::size_t num_users() const noexcept { return partition_.num_clusters(); }
  std::string user_of(std::size_t position) const {
    return partition_.cluster_name(partition_.label(position));
  }

  /// Keeps the addresses whose user label starts with `prefix`.
  GroundTruth with_label_prefix(std::string_view prefix) const;

 private:
  Partition partition_;
};

/// `address,user` CSV. Throws InvalidPartition on bad or empty input.
GroundTruth read_ground_truth_csv(std::istream& in);
GroundTruth read_ground_truth_csv(const std::filesystem::path& path);
void write_ground_truth_csv(const GroundTruth& truth, std::ostream& out);
void write_ground_truth_csv(const GroundTruth& truth, const std::filesystem::path& path);

struct AlignOptions {
  /// Drop ground-truth addresses the prediction does not cover instead of
  /// treating them as predicted singletons.
  bool drop_uncovered = false;
};

struct AlignedPair {
  Partition truth;
  Partition predicted;
};

/// Restricts both sides to the ground-truth addresses. Throws EmptyOverlap
/// when the prediction covers none of them.
AlignedPair align(const GroundTruth& truth, const Partition& predicted, const AlignOptions& options = {});

struct NamedPartition {
  std::string name;
  Partition partition;
};

/// Aligns every run to one shared universe: the ground truth first, then the
/// runs in order. With drop_uncovered the universe is the ground-truth
/// addresses covered by every run.
std::vector<NamedPartition> align_all(const GroundTruth& truth, std::span<const NamedPartition> runs,
                                      const AlignOptions& options = {}, std::string truth_name = "gt");

struct EvalRow {
  std::string heuristic;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double nmi = 0.0;
  double anmi = 0.0;
  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

EvalRow evaluate_one(const std::string& name, const AlignedPair& aligned);
std::vector<EvalRow> evaluate(const GroundTruth& truth, std::span<const NamedPartition> runs,
                              const AlignOptions& options = {});

/// `heuristic,precision,recall,f1,nmi,anmi` with six decimals.
void write_eval_csv(std::span<const EvalRow> rows, std::ostream& out);
/// Fixed-width table with two decimals.
std::string format_eval_table(std::span<const EvalRow> rows);

}  // namespace btcreid
