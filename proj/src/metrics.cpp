#include "btcreid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "btcreid/errors.hpp"

namespace btcreid {

namespace {

// Sorting before a compensated sum makes the result independent of the order
// in which terms were produced, so metrics are exactly symmetric.
double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  double compensation = 0.0;
  for (double t : terms) {
    const double next = sum + t;
    if (std::fabs(sum) >= std::fabs(t)) {
      compensation += (sum - next) + t;
    } else {
      compensation += (t - next) + sum;
    }
    sum = next;
  }
  return sum + compensation;
}

std::uint64_t choose2(std::uint64_t k) { return k * (k - (k > 0 ? 1 : 0)) / 2; }

bool identical(const Partition& u, const Partition& v) { return u == v; }

}  // namespace

std::uint64_t ContingencyTable::at(ClusterId row, ClusterId col) const {
  auto it = std::lower_bound(cells.begin(), cells.end(), Cell{row, col, 0}, [](const Cell& a, const Cell& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return (it != cells.end() && it->row == row && it->col == col) ? it->count : 0;
}

ContingencyTable contingency(std::span<const ClusterId> u, std::span<const ClusterId> v) {
  ContingencyTable table;
  table.total = u.size();
  const std::size_t ku = u.empty() ? 0 : *std::max_element(u.begin(), u.end()) + 1;
  const std::size_t kv = v.empty() ? 0 : *std::max_element(v.begin(), v.end()) + 1;
  table.rows.assign(ku, 0);
  table.cols.assign(kv, 0);
  std::unordered_map<std::uint64_t, std::uint64_t> cells;
  for (std::size_t i = 0; i < u.size(); ++i) {
    ++table.rows[u[i]];
    ++table.cols[v[i]];
    ++cells[(static_cast<std::uint64_t>(u[i]) << 32) | v[i]];
  }
  table.cells.reserve(cells.size());
  for (const auto& [key, count] : cells)
    table.cells.push_back({static_cast<ClusterId>(key >> 32), static_cast<ClusterId>(key & 0xffffffffu), count});
  std::sort(table.cells.begin(), table.cells.end(), [](const auto& a, const auto& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return table;
}

ContingencyTable contingency(const Partition& u, const Partition& v) {
  require_same_universe(u, v);
  return contingency(u.labels(), v.labels());
}

double entropy(std::span<const std::uint64_t> cluster_sizes) {
  std::uint64_t n = 0;
  for (auto s : cluster_sizes) n += s;
  if (n == 0) return 0.0;
  std::vector<double> terms;
  terms.reserve(cluster_sizes.size());
  const double total = static_cast<double>(n);
  for (auto s : cluster_sizes) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / total;
    terms.push_back(-p * std::log(p));
  }
  return ordered_sum(terms);
}

double mutual_information(const ContingencyTable& table) {
  if (table.total == 0) return 0.0;
  const double n = static_cast<double>(table.total);
  std::vector<double> terms;
  terms.reserve(table.cells.size());
  for (const auto& cell : table.cells) {
    const double nij = static_cast<double>(cell.count);
    const double ab = static_cast<double>(table.rows[cell.row]) * static_cast<double>(table.cols[cell.col]);
    terms.push_back(nij / n * std::log(n * nij / ab));
  }
  return ordered_sum(terms);
}

double expected_mutual_information(const ContingencyTable& table) {
  const std::uint64_t n = table.total;
  if (n == 0) return 0.0;

  // Clusters of equal size contribute identical terms; group them.
  std::map<std::uint64_t, std::uint64_t> row_sizes;
  std::map<std::uint64_t, std::uint64_t> col_sizes;
  for (auto a : table.rows) ++row_sizes[a];
  for (auto b : table.cols) ++col_sizes[b];

  std::vector<double> log_factorial(n + 1);
  for (std::uint64_t k = 0; k <= n; ++k) log_factorial[k] = std::lgamma(static_cast<double>(k) + 1.0);

  const double nd = static_cast<double>(n);
  std::vector<double> terms;
  std::vector<double> inner;
  for (const auto& [a, ma] : row_sizes) {
    for (const auto& [b, mb] : col_sizes) {
      const double multiplicity = static_cast<double>(ma) * static_cast<double>(mb);
      const double ab = static_cast<double>(a) * static_cast<double>(b);
      // Pairs written as x + y so that swapping a and b gives the same bits.
      const double fixed = (log_factorial[a] + log_factorial[b]) +
                           (log_factorial[n - a] + log_factorial[n - b]) - log_factorial[n];
      const std::uint64_t lo = (a + b > n) ? a + b - n : 1;
      const std::uint64_t hi = std::min(a, b);
      // The nij range and each term are invariant under swapping a and b.
      inner.clear();
      for (std::uint64_t nij = std::max<std::uint64_t>(lo, 1); nij <= hi; ++nij) {
        const double x = static_cast<double>(nij);
        const double log_prob = fixed - log_factorial[nij] -
                                (log_factorial[a - nij] + log_factorial[b - nij]) -
                                log_factorial[n - a - b + nij];
        inner.push_back((x / nd) * std::log(nd * x / ab) * std::exp(log_prob));
      }
      terms.push_back(multiplicity * ordered_sum(inner));
    }
  }
  return ordered_sum(terms);
}

double nmi(const Partition& u, const Partition& v) {
  const auto table = contingency(u, v);
  const double hu = entropy(table.rows);
  const double hv = entropy(table.cols);
  if (hu == 0.0 || hv == 0.0) return identical(u, v) ? 1.0 : 0.0;
  const double value = mutual_information(table) / std::sqrt(hu * hv);
  return std::clamp(value, 0.0, 1.0);
}

double anmi(const Partition& u, const Partition& v) {
  const auto table = contingency(u, v);
  const double hu = entropy(table.rows);
  const double hv = entropy(table.cols);
  if (hu == 0.0 || hv == 0.0) return identical(u, v) ? 1.0 : 0.0;
  const double mi = mutual_information(table);
  const double emi = expected_mutual_information(table);
  const double numerator = mi - emi;
  const double denominator = std::sqrt(hu * hv) - emi;
  // E[I] can only reach sqrt(H(U) H(V)) when every relabelling scores the
  // same; rounding leaves a residue of a few ulps there.
  if (std::abs(denominator) <= 64 * std::numeric_limits<double>::epsilon() * std::sqrt(hu * hv)) return 0.0;
  return std::min(numerator / denominator, 1.0);
}

PairCounts pair_counts(const ContingencyTable& table) {
  std::uint64_t same_both = 0;
  for (const auto& cell : table.cells) same_both += choose2(cell.count);
  std::uint64_t same_truth = 0;
  for (auto a : table.rows) same_truth += choose2(a);
  std::uint64_t same_predicted = 0;
  for (auto b : table.cols) same_predicted += choose2(b);

  PairCounts counts;
  counts.tp = same_both;
  counts.fp = same_predicted - same_both;
  counts.fn = same_truth - same_both;
  counts.tn = choose2(table.total) - counts.tp - counts.fp - counts.fn;
  return counts;
}

PairCounts pair_counts(const Partition& truth, const Partition& predicted) {
  return pair_counts(contingency(truth, predicted));
}

PrecisionRecall precision_recall_f1(double precision, double recall) {
  PrecisionRecall pr;
  pr.precision = precision;
  pr.recall = recall;
  pr.f1 = (precision + recall == 0.0) ? 0.0 : 2.0 * precision * recall / (precision + recall);
  return pr;
}

PrecisionRecall precision_recall_f1(const PairCounts& counts) {
  const double tp = static_cast<double>(counts.tp);
  const double precision = counts.tp + counts.fp == 0 ? 1.0 : tp / static_cast<double>(counts.tp + counts.fp);
  const double recall = counts.tp + counts.fn == 0 ? 1.0 : tp / static_cast<double>(counts.tp + counts.fn);
  return precision_recall_f1(precision, recall);
}

}  // namespace btcreid
