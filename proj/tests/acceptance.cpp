// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <sys/resource.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "btcreid/alluvial.hpp"
#include "btcreid/community.hpp"
#include "btcreid/errors.hpp"
#include "btcreid/evalkit.hpp"
#include "btcreid/hintnet.hpp"
#include "btcreid/identity.hpp"
#include "btcreid/metrics.hpp"
#include "btcreid/simgen.hpp"
#include "cli.hpp"
#include "support.hpp"

using namespace btcreid;
using namespace btcreid::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Collects the first failure of a criterion; later checks still run.
struct Verdict {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      detail = what;
    }
  }
};

Partition from_raw(const std::vector<std::uint64_t>& raw) { return Partition::from_labels(numbered(raw.size()), raw); }

double recall(const Partition& truth, const Partition& predicted) {
  return precision_recall_f1(pair_counts(truth, predicted)).recall;
}

std::string fmt(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.4g", value);
  return buffer;
}

// 1. Closed-form pair counts equal enumeration; self NMI/aNMI is 1.
Verdict metric_oracle() {
  Verdict v;
  const auto start = Clock::now();
  std::mt19937_64 rng(20240501);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 499;
    const auto a = random_labels(rng, n, 1 + rng() % 40);
    const auto b = random_labels(rng, n, 1 + rng() % 40);
    const auto pa = from_raw(a);
    const auto pb = from_raw(b);
    const auto fast = pair_counts(pa, pb);
    const auto slow = brute_pairs(a, b);
    v.require(fast.tp == slow.tp && fast.fp == slow.fp && fast.fn == slow.fn && fast.tn == slow.tn,
              "pair counts differ on trial " + std::to_string(trial));
    v.require(std::abs(nmi(pa, pa) - 1.0) <= 1e-12, "self NMI off on trial " + std::to_string(trial));
    // All-singleton partitions have E[I] = I, where aNMI is defined as 0.
    if (pa.num_clusters() < pa.size())
      v.require(std::abs(anmi(pa, pa) - 1.0) <= 1e-12, "self aNMI off on trial " + std::to_string(trial));
  }
  const double elapsed = seconds_since(start);
  v.require(elapsed < 30.0, "took " + fmt(elapsed) + " s");
  if (v.ok) v.detail = "200 pairs in " + fmt(elapsed) + " s";
  return v;
}

// 2. Random 4-cluster partitions: aNMI averages to ~0 while NMI stays positive.
Verdict chance_correction() {
  Verdict v;
  std::mt19937_64 rng(777);
  double sum_nmi = 0;
  double sum_anmi = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto u = from_raw(random_labels(rng, 200, 4));
    const auto w = from_raw(random_labels(rng, 200, 4));
    sum_nmi += nmi(u, w);
    sum_anmi += anmi(u, w);
  }
  const double mean_nmi = sum_nmi / 100;
  const double mean_anmi = sum_anmi / 100;
  v.require(mean_anmi >= -0.05 && mean_anmi <= 0.05, "mean aNMI " + fmt(mean_anmi));
  v.require(mean_nmi > 0.01, "mean NMI " + fmt(mean_nmi));
  v.detail = "mean NMI " + fmt(mean_nmi) + ", mean aNMI " + fmt(mean_anmi);
  return v;
}

// 3. Published rows: F1 is the harmonic mean of the printed precision and recall.
Verdict table_consistency() {
  struct Row {
    const char* name;
    double precision, recall, f1;
  };
  const Row rows[] = {{"H1", 0.98, 0.77, 0.86},    {"H3", 0.09, 0.83, 0.16},    {"H4-l1", 0.75, 0.79, 0.77},
                      {"H4-l2", 0.50, 0.87, 0.63}, {"H4-l3", 0.27, 0.90, 0.42}, {"H4-l4", 0.25, 0.91, 0.39}};
  Verdict v;
  double worst = 0;
  for (const auto& r : rows) {
    const double f1 = precision_recall_f1(r.precision, r.recall).f1;
    worst = std::max(worst, std::abs(f1 - r.f1));
    v.require(std::abs(f1 - r.f1) <= 0.01, std::string(r.name) + ": computed " + fmt(f1));
  }
  if (v.ok) v.detail = "6 rows, largest gap " + fmt(worst);
  return v;
}

// 4. H1 equals brute-force closure and never merges two users.
Verdict h1_oracle() {
  Verdict v;
  std::size_t largest = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    SimConfig config;
    config.seed = seed;
    config.users = 5 + seed % 20;
    config.txs = 60 + seed % 90;
    config.addr_reuse_prob = 0.1 * static_cast<double>(seed % 6);
    config.change_prob = 0.5 + 0.05 * static_cast<double>(seed % 11);
    config.fanout_max = 1 + seed % 4;
    const auto r = generate(config);
    largest = std::max(largest, r.ledger.addresses().size());
    v.require(r.ledger.addresses().size() <= 500, "seed " + std::to_string(seed) + " exceeds 500 addresses");
    const auto h1 = cluster_h1(r.ledger);
    v.require(blocks(h1) == brute_h1(r.ledger), "closure differs for seed " + std::to_string(seed));
    const auto pr = precision_recall_f1(pair_counts(r.truth.partition(), h1));
    v.require(pr.precision == 1.0, "precision " + fmt(pr.precision) + " for seed " + std::to_string(seed));
  }
  if (v.ok) v.detail = "100 ledgers, up to " + std::to_string(largest) + " addresses";
  return v;
}

// 5. Recall ordering: H3 >= H1, and H4 levels non-decreasing.
Verdict recall_ordering() {
  Verdict v;
  std::size_t ledgers = 0;
  std::size_t levels = 0;
  for (std::uint64_t seed = 1; seed <= 24; ++seed) {
    SimConfig config;
    config.seed = 1000 + seed;
    config.users = 10 + seed * 3;
    config.txs = 400 + 100 * seed;
    config.change_prob = 0.5 + 0.5 * static_cast<double>(seed % 6) / 5.0;
    config.addr_reuse_prob = 0.05 * static_cast<double>(seed % 7);
    const auto r = generate(config);
    const auto& truth = r.truth.partition();
    const auto h1 = cluster_h1(r.ledger);
    const auto h3 = cluster_with_change(r.ledger, ChangeHeuristic::kH3);
    v.require(recall(truth, h3) >= recall(truth, h1), "H3 recall below H1 for seed " + std::to_string(config.seed));

    const auto dendrogram = louvain(build_hint_graph(r.ledger, h1).to_weighted_graph());
    double previous = recall(truth, h1);
    for (std::size_t l = 1; l <= dendrogram.depth(); ++l) {
      const double current = recall(truth, project_level(dendrogram, l, h1));
      v.require(current >= previous, "H4 level " + std::to_string(l) + " recall dropped for seed " +
                                         std::to_string(config.seed));
      previous = current;
    }
    ++ledgers;
    levels += dendrogram.depth();
  }
  if (v.ok) v.detail = std::to_string(ledgers) + " ledgers, " + std::to_string(levels) + " H4 levels";
  return v;
}

std::string dendrogram_bytes(const Dendrogram& d) {
  std::ostringstream out;
  write_dendrogram_summary(d, out);
  for (const auto& level : d.levels) write_level_csv(level, out);
  return out.str();
}

// 6. Louvain: exact clique modularity, recovery, monotone levels, determinism.
Verdict louvain_correctness() {
  Verdict v;
  const std::vector<WeightedGraph::Edge> triangles{{0, 1, 1}, {0, 2, 1}, {1, 2, 1}, {3, 4, 1}, {3, 5, 1}, {4, 5, 1}};
  const WeightedGraph g(6, triangles);
  const std::vector<std::uint32_t> cliques{0, 0, 0, 1, 1, 1};
  v.require(modularity(g, cliques) == 0.5, "Q of the clique split is " + fmt(modularity(g, cliques)));
  const auto d = louvain(g);
  v.require(d.depth() >= 1 && d.levels[0].membership == std::vector<ClusterId>{0, 0, 0, 1, 1, 1},
            "cliques not recovered");

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 30 + rng() % 300;
    std::vector<WeightedGraph::Edge> edges;
    // Planted groups of 10 with sparse noise between them.
    for (std::size_t e = 0; e < 4 * n; ++e) {
      const auto a = static_cast<NodeId>(rng() % n);
      const auto b = rng() % 5 == 0 ? static_cast<NodeId>(rng() % n)
                                    : static_cast<NodeId>(std::min<std::size_t>(n - 1, a / 10 * 10 + rng() % 10));
      edges.push_back({a, b, 1.0});
    }
    const WeightedGraph graph(n, edges);
    const auto first = louvain(graph);
    for (std::size_t l = 1; l < first.depth(); ++l)
      v.require(first.levels[l].modularity >= first.levels[l - 1].modularity - 1e-12,
                "modularity decreased on trial " + std::to_string(trial));
    v.require(dendrogram_bytes(louvain(graph)) == dendrogram_bytes(first),
              "dendrogram differs between runs on trial " + std::to_string(trial));
  }
  if (v.ok) v.detail = "Q = 0.5 exactly; 40 random graphs monotone and repeatable";
  return v;
}

// 7. Hint rule on a directed ledger.
Verdict hint_rule() {
  // Users after H1: S = {s1, s2}, T = {t}, one user per remaining address.
  Ledger ledger;
  add_coinbase(ledger, {{"s1", 100}, {"s2", 100}, {"t", 100}, {"w", 100}});
  // Plain payment: S -> {r1, r2}.
  add_tx(ledger, {{"s1", 50}, {"s2", 50}}, {{"r1", 60}, {"r2", 40}});
  // Same pair again plus a second output to r1: weights grow, no new edges.
  add_tx(ledger, {{"s1", 100}}, {{"r1", 30}, {"r1", 20}, {"r3", 50}});
  // Change back to S: no edges at all from this transaction.
  add_tx(ledger, {{"s2", 50}}, {{"s1", 10}, {"x1", 40}});
  // Ten distinct recipients: excluded.
  Entries ten;
  for (int i = 0; i < 10; ++i) ten.push_back({"m" + std::to_string(i), 10});
  add_tx(ledger, {{"t", 100}}, ten);
  // Nine distinct recipients: kept.
  Entries nine;
  for (int i = 0; i < 9; ++i) nine.push_back({"n" + std::to_string(i), 10});
  nine.push_back({"n0", 10});
  add_tx(ledger, {{"w", 100}}, nine);
  // Reverse direction of an existing pair: r1 -> S adds weight to the same undirected edge.
  add_tx(ledger, {{"r1", 60}}, {{"s2", 60}});

  const auto h1 = cluster_h1(ledger);
  const auto graph = build_hint_graph(ledger, h1);
  auto id = [&](const char* a) { return h1.cluster_of(a).value(); };
  std::map<std::pair<std::string, std::string>, std::uint64_t> expected{
      {{"s1", "r1"}, 3}, {{"s1", "r2"}, 1}, {{"s1", "r3"}, 1}};
  for (int i = 0; i < 9; ++i) expected[{"w", "n" + std::to_string(i)}] = 1;

  std::vector<HintEdge> want;
  for (const auto& [pair, weight] : expected) {
    auto a = id(pair.first.c_str());
    auto b = id(pair.second.c_str());
    if (a > b) std::swap(a, b);
    want.push_back({a, b, weight});
  }
  std::sort(want.begin(), want.end(), [](const HintEdge& x, const HintEdge& y) {
    return x.u != y.u ? x.u < y.u : x.v < y.v;
  });
  Verdict v;
  v.require(id("s1") == id("s2"), "s1 and s2 should share an H1 user");
  v.require(graph.edges() == want, "edge set differs: got " + std::to_string(graph.edges().size()) + " edges");
  if (v.ok) v.detail = std::to_string(want.size()) + " edges match";
  return v;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++count;
  return count;
}

// 8. End-to-end pipeline.
Verdict pipeline_smoke() {
  Verdict v;
  const auto dir = fs::temp_directory_path() / "btcreid_acceptance_pipeline";
  fs::remove_all(dir);
  std::ostringstream out, err;
  const auto start = Clock::now();
  const int code = cli::run({"btcreid", "pipeline", "--seed", "7", "--users", "90", "--txs", "20000", "--out",
                             dir.string()},
                            out, err);
  const double elapsed = seconds_since(start);
  v.require(code == 0, "exit code " + std::to_string(code) + ": " + err.str());
  v.require(elapsed < 60.0, "took " + fmt(elapsed) + " s");
  if (code != 0) return v;

  std::istringstream report(slurp(dir / "report.csv"));
  std::string header;
  std::getline(report, header);
  v.require(header == "heuristic,precision,recall,f1,nmi,anmi", "report header: " + header);
  std::size_t rows = 0;
  for (std::string line; std::getline(report, line);) {
    ++rows;
    v.require(count_of(line, ",") == 5, "report row without 5 metrics: " + line);
  }
  v.require(rows >= 4, "report has " + std::to_string(rows) + " rows");

  const auto spec = nlohmann::json::parse(slurp(dir / "alluvial.json"));
  v.require(spec["axes"].size() == 3, "alluvial has " + std::to_string(spec["axes"].size()) + " axes");
  const auto truth = read_ground_truth_csv(dir / "gt.csv");
  for (std::size_t axis = 0; axis < 2; ++axis) {
    std::uint64_t total = 0;
    std::map<std::uint64_t, std::uint64_t> left_sum, right_sum;
    for (const auto& f : spec["flows"]) {
      if (f["axis"] != axis) continue;
      total += f["count"].get<std::uint64_t>();
      left_sum[f["left"]] += f["count"].get<std::uint64_t>();
      right_sum[f["right"]] += f["count"].get<std::uint64_t>();
    }
    v.require(total == truth.size(), "axis " + std::to_string(axis) + " flow total " + std::to_string(total));
    for (const auto& c : spec["axes"][axis]["clusters"])
      v.require(left_sum[c["id"]] == c["size"], "outgoing flow mismatch on axis " + std::to_string(axis));
    for (const auto& c : spec["axes"][axis + 1]["clusters"])
      v.require(right_sum[c["id"]] == c["size"], "incoming flow mismatch on axis " + std::to_string(axis + 1));
  }

  const auto svg = slurp(dir / "alluvial.svg");
  v.require(svg.rfind("<?xml", 0) == 0 && svg.find("</svg>") != std::string::npos, "SVG is not a complete document");
  v.require(count_of(svg, "class=\"axis-label\"") == 3, "SVG does not show 3 axes");
  v.require(count_of(svg, "class=\"flow\"") == spec["flows"].size(), "SVG ribbon count differs from flows");
  if (v.ok) v.detail = fmt(elapsed) + " s, " + std::to_string(rows) + " report rows, 3 axes";
  fs::remove_all(dir);
  return v;
}

double peak_rss_mib() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<double>(usage.ru_maxrss) / 1024.0;  // KiB on Linux
}

// 9. H1 over a million transactions.
Verdict h1_scale() {
  Verdict v;
  SimConfig config;
  config.seed = 2024;
  config.users = 5000;
  config.txs = 1000000;
  const auto generated = generate(config);
  const auto start = Clock::now();
  const auto h1 = cluster_h1(generated.ledger);
  const double elapsed = seconds_since(start);
  const double rss = peak_rss_mib();
  v.require(generated.ledger.size() == 1000000, "ledger has " + std::to_string(generated.ledger.size()) + " txs");
  v.require(elapsed < 60.0, "cluster_h1 took " + fmt(elapsed) + " s");
  v.require(rss < 2048.0, "peak RSS " + fmt(rss) + " MiB");
  v.detail = fmt(elapsed) + " s, " + std::to_string(h1.size()) + " addresses, peak RSS " + fmt(rss) + " MiB";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"1 metric oracle equivalence", metric_oracle},
      {"2 chance correction", chance_correction},
      {"3 published F1 consistency", table_consistency},
      {"4 H1 oracle and precision", h1_oracle},
      {"5 coarsening recall ordering", recall_ordering},
      {"6 Louvain correctness", louvain_correctness},
      {"7 hint rule conformance", hint_rule},
      {"8 end-to-end pipeline", pipeline_smoke},
      {"9 H1 scale", h1_scale},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failures += v.ok ? 0 : 1;
    std::cout << (v.ok ? "PASS" : "FAIL") << "  " << name << "  (" << v.detail << ")\n" << std::flush;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
  return failures == 0 ? 0 : 1;
}
