#include "btcreid/evalkit.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "btcreid/errors.hpp"
#include "btcreid/metrics.hpp"

namespace btcreid {

GroundTruth::GroundTruth(Partition labeled) : partition_(std::move(labeled)) {}

GroundTruth GroundTruth::from_pairs(std::vector<std::pair<std::string, std::string>> address_users) {
  for (const auto& [address, user] : address_users)
    if (user.empty()) throw InvalidPartition("empty user label for address '" + address + "'");
  try {
    return GroundTruth(Partition::from_named(std::move(address_users)));
  } catch (const std::invalid_argument& e) {
    throw InvalidPartition(e.what());
  }
}

GroundTruth GroundTruth::with_label_prefix(std::string_view prefix) const {
  std::vector<bool> keep(partition_.size());
  for (std::size_t i = 0; i < partition_.size(); ++i) keep[i] = user_of(i).starts_with(prefix);
  return GroundTruth(partition_.restricted(keep));
}

GroundTruth read_ground_truth_csv(std::istream& in) {
  auto partition = read_partition_csv(in);
  if (partition.empty()) throw InvalidPartition("ground truth has no labeled addresses");
  return GroundTruth(std::move(partition));
}

GroundTruth read_ground_truth_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path.string() + "'");
  return read_ground_truth_csv(in);
}

void write_ground_truth_csv(const GroundTruth& truth, std::ostream& out) {
  out << "address,user\n";
  const auto& p = truth.partition();
  for (std::size_t i = 0; i < p.size(); ++i)
    out << csv_escape(p.addresses()[i]) << ',' << csv_escape(truth.user_of(i)) << '\n';
}

void write_ground_truth_csv(const GroundTruth& truth, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write '" + path.string() + "'");
  write_ground_truth_csv(truth, out);
  if (!out) throw IoFailure("failed writing '" + path.string() + "'");
}

AlignedPair align(const GroundTruth& truth, const Partition& predicted, const AlignOptions& options) {
  const auto& gt = truth.partition();
  std::vector<bool> covered(gt.size());
  std::vector<std::uint64_t> raw(gt.size());
  std::size_t overlap = 0;
  const std::uint64_t singleton_base = predicted.num_clusters();
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (auto c = predicted.cluster_of(gt.addresses()[i])) {
      covered[i] = true;
      raw[i] = *c;
      ++overlap;
    } else {
      raw[i] = singleton_base + i;
    }
  }
  if (overlap == 0) throw EmptyOverlap();

  // Predicted clusters keep their original names; uncovered addresses are
  // named after themselves.
  auto name_clusters = [&](Partition& aligned, const std::vector<std::size_t>& source) {
    std::vector<std::string> names(aligned.num_clusters());
    for (std::size_t k = 0; k < source.size(); ++k) {
      const auto i = source[k];
      names[aligned.label(k)] =
          covered[i] ? predicted.cluster_name(static_cast<ClusterId>(raw[i])) : "~" + gt.addresses()[i];
    }
    aligned.set_cluster_names(std::move(names));
  };

  AlignedPair out;
  std::vector<std::size_t> source;
  std::vector<std::uint64_t> kept;
  if (options.drop_uncovered) {
    out.truth = gt.restricted(covered);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (!covered[i]) continue;
      kept.push_back(raw[i]);
      source.push_back(i);
    }
  } else {
    out.truth = gt;
    kept = raw;
    for (std::size_t i = 0; i < gt.size(); ++i) source.push_back(i);
  }
  out.predicted = out.truth.relabeled(kept);
  name_clusters(out.predicted, source);
  return out;
}

std::vector<NamedPartition> align_all(const GroundTruth& truth, std::span<const NamedPartition> runs,
                                      const AlignOptions& options, std::string truth_name) {
  const auto& gt = truth.partition();
  std::vector<bool> keep(gt.size(), true);
  if (options.drop_uncovered) {
    for (const auto& run : runs)
      for (std::size_t i = 0; i < gt.size(); ++i)
        if (keep[i] && !run.partition.position(gt.addresses()[i])) keep[i] = false;
  }
  const GroundTruth shared(gt.restricted(keep));

  std::vector<NamedPartition> out;
  out.push_back({std::move(truth_name), shared.partition()});
  for (const auto& run : runs) out.push_back({run.name, align(shared, run.partition, {}).predicted});
  return out;
}

EvalRow evaluate_one(const std::string& name, const AlignedPair& aligned) {
  const auto table = contingency(aligned.truth, aligned.predicted);
  const auto pr = precision_recall_f1(pair_counts(table));
  EvalRow row;
  row.heuristic = name;
  row.precision = pr.precision;
  row.recall = pr.recall;
  row.f1 = pr.f1;
  row.nmi = nmi(aligned.truth, aligned.predicted);
  row.anmi = anmi(aligned.truth, aligned.predicted);
  return row;
}

std::vector<EvalRow> evaluate(const GroundTruth& truth, std::span<const NamedPartition> runs,
                              const AlignOptions& options) {
  if (runs.empty()) throw std::invalid_argument("evaluate needs at least one run");
  std::vector<EvalRow> rows;
  rows.reserve(runs.size());
  for (const auto& run : runs) rows.push_back(evaluate_one(run.name, align(truth, run.partition, options)));
  return rows;
}

void write_eval_csv(std::span<const EvalRow> rows, std::ostream& out) {
  out << "heuristic,precision,recall,f1,nmi,anmi\n";
  char buffer[256];
  for (const auto& r : rows) {
    std::snprintf(buffer, sizeof buffer, ",%.6f,%.6f,%.6f,%.6f,%.6f\n", r.precision, r.recall, r.f1, r.nmi,
                  r.anmi);
    out << csv_escape(r.heuristic) << buffer;
  }
}

std::string format_eval_table(std::span<const EvalRow> rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.heuristic.size());
  std::string out;
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, "%-*s | %9s %9s %9s %9s %9s\n", static_cast<int>(width), "Heur.",
                "Precision", "Recall", "F1", "NMI", "aNMI");
  out += buffer;
  out += std::string(width, '-') + "-+-" + std::string(49, '-') + "\n";
  for (const auto& r : rows) {
    std::snprintf(buffer, sizeof buffer, "%-*s | %9.2f %9.2f %9.2f %9.2f %9.2f\n", static_cast<int>(width),
                  r.heuristic.c_str(), r.precision, r.recall, r.f1, r.nmi, r.anmi);
    out += buffer;
  }
  return out;
}

}  // namespace btcreid
