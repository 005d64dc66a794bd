#pragma once

// Ledger builders and brute-force reference implementations shared by the
// unit and acceptance tests. None of the oracles reuse library internals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "btcreid/ledger.hpp"
#include "btcreid/partition.hpp"

namespace btcreid::testing {

using Entries = std::vector<std::pair<std::string, Amount>>;

/// Appends a transaction given by address names.
inline TxIndex add_tx(Ledger& ledger, const Entries& ins, const Entries& outs, Amount fee = 0,
                      bool coinbase = false, std::int64_t timestamp = 0) {
  std::vector<TxInput> inputs;
  std::vector<TxOutput> outputs;
  for (const auto& [a, v] : ins) inputs.push_back({ledger.intern(a), v});
  for (const auto& [a, v] : outs) outputs.push_back({ledger.intern(a), v});
  return ledger.append(timestamp, coinbase, inputs, outputs, fee);
}

inline TxIndex add_coinbase(Ledger& ledger, const Entries& outs) { return add_tx(ledger, {}, outs, 0, true); }

/// Partition from explicit groups of address names.
inline Partition groups(const std::vector<std::vector<std::string>>& clusters) {
  std::vector<std::string> addresses;
  std::vector<std::uint64_t> raw;
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (const auto& a : clusters[c]) {
      addresses.push_back(a);
      raw.push_back(c);
    }
  return Partition::from_labels(std::move(addresses), raw);
}

/// The set of clusters as sets of names; independent of id assignment.
inline std::set<std::set<std::string>> blocks(const Partition& p) {
  std::map<ClusterId, std::set<std::string>> by_id;
  for (std::size_t i = 0; i < p.size(); ++i) by_id[p.label(i)].insert(p.addresses()[i]);
  std::set<std::set<std::string>> out;
  for (auto& [id, members] : by_id) out.insert(std::move(members));
  return out;
}

/// Co-input closure by repeated depth-first search over an adjacency matrix.
inline std::set<std::set<std::string>> brute_h1(const Ledger& ledger) {
  const std::size_t n = ledger.addresses().size();
  std::vector<std::vector<char>> adjacent(n, std::vector<char>(n, 0));
  for (std::size_t t = 0; t < ledger.size(); ++t) {
    const auto tx = ledger[t];
    for (const auto& a : tx.inputs)
      for (const auto& b : tx.inputs) adjacent[a.address][b.address] = 1;
  }
  std::vector<int> component(n, -1);
  std::set<std::set<std::string>> out;
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    std::set<std::string> members;
    std::vector<std::size_t> stack{start};
    component[start] = static_cast<int>(start);
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      members.insert(ledger.address_name(static_cast<AddressId>(x)));
      for (std::size_t y = 0; y < n; ++y)
        if (adjacent[x][y] && component[y] < 0) {
          component[y] = static_cast<int>(start);
          stack.push_back(y);
        }
    }
    out.insert(std::move(members));
  }
  return out;
}

struct BrutePairs {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Every unordered pair classified by label agreement.
inline BrutePairs brute_pairs(const std::vector<std::uint64_t>& truth, const std::vector<std::uint64_t>& predicted) {
  BrutePairs c;
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t j = i + 1; j < truth.size(); ++j) {
      const bool same_t = truth[i] == truth[j];
      const bool same_p = predicted[i] == predicted[j];
      if (same_t && same_p) ++c.tp;
      else if (same_p) ++c.fp;
      else if (same_t) ++c.fn;
      else ++c.tn;
    }
  return c;
}

/// Mutual information straight from the joint label distribution.
inline double brute_mi(const std::vector<std::uint64_t>& u, const std::vector<std::uint64_t>& v) {
  const double n = static_cast<double>(u.size());
  std::map<std::uint64_t, double> pu, pv;
  std::map<std::pair<std::uint64_t, std::uint64_t>, double> joint;
  for (std::size_t i = 0; i < u.size(); ++i) {
    pu[u[i]] += 1;
    pv[v[i]] += 1;
    joint[{u[i], v[i]}] += 1;
  }
  double mi = 0;
  for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (pu[key.first] * pv[key.second]));
  return mi;
}

inline double brute_entropy(const std::vector<std::uint64_t>& u) {
  std::map<std::uint64_t, double> counts;
  for (auto x : u) counts[x] += 1;
  double h = 0;
  for (const auto& [k, c] : counts) h -= c / u.size() * std::log(c / u.size());
  return h;
}

/// E[MI] by averaging over every permutation of v (n <= 8).
inline double brute_emi(const std::vector<std::uint64_t>& u, std::vector<std::uint64_t> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  double sum = 0;
  std::size_t count = 0;
  std::vector<std::uint64_t> permuted(v.size());
  do {
    for (std::size_t i = 0; i < v.size(); ++i) permuted[i] = v[order[i]];
    sum += brute_mi(u, permuted);
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  return sum / static_cast<double>(count);
}

/// Q = 1/2m * sum_ij (A_ij - k_i k_j / 2m) [c_i == c_j] over a dense matrix.
/// `edges` lists undirected (u, v, w); a self-loop contributes 2w to A_ii.
inline double brute_modularity(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges,
                               const std::vector<std::uint32_t>& membership) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (const auto& [u, v, w] : edges) {
    a[u][v] += w;
    a[v][u] += w;
  }
  std::vector<double> k(n, 0.0);
  double two_m = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      k[i] += a[i][j];
      two_m += a[i][j];
    }
  double q = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (membership[i] == membership[j]) q += a[i][j] - k[i] * k[j] / two_m;
  return q / two_m;
}

inline std::vector<std::uint64_t> random_labels(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::uniform_int_distribution<std::uint64_t> pick(0, k - 1);
  std::vector<std::uint64_t> labels(n);
  for (auto& l : labels) l = pick(rng);
  return labels;
}

inline std::vector<std::string> numbered(std::size_t n, const std::string& prefix = "a") {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(prefix + std::to_string(1000000 + i));
  return names;
}

}  // namespace btcreid::testing
