#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "btcreid/alluvial.hpp"
#include "btcreid/errors.hpp"
#include "btcreid/evalkit.hpp"
#include "support.hpp"

using namespace btcreid;
using namespace btcreid::testing;

namespace {

GroundTruth truth_of(const std::vector<std::pair<std::string, std::string>>& pairs) {
  return GroundTruth::from_pairs(pairs);
}

/// Weighted inversions between two axes, by looking at every pair of flows.
std::uint64_t brute_crossings(const AlluvialSpec& spec, std::size_t axis) {
  std::map<ClusterId, std::size_t> lpos, rpos;
  for (std::size_t i = 0; i < spec.axes[axis].nodes.size(); ++i) lpos[spec.axes[axis].nodes[i].id] = i;
  for (std::size_t i = 0; i < spec.axes[axis + 1].nodes.size(); ++i) rpos[spec.axes[axis + 1].nodes[i].id] = i;
  std::vector<AlluvialFlow> flows;
  for (const auto& f : spec.flows)
    if (f.axis == axis) flows.push_back(f);
  std::uint64_t total = 0;
  for (const auto& f : flows)
    for (const auto& g : flows)
      if (lpos[f.left] < lpos[g.left] && rpos[f.right] > rpos[g.right]) total += f.count * g.count;
  return total;
}

Partition from_raw(const std::vector<std::uint64_t>& raw) { return Partition::from_labels(numbered(raw.size()), raw); }

}  // namespace

TEST_CASE("ground truth CSV round-trips and rejects empty labels") {
  const auto gt = truth_of({{"b", "bob"}, {"a", "alice"}, {"c", "alice"}, {"d,x", "eve \"q\""}});
  std::stringstream buffer;
  write_ground_truth_csv(gt, buffer);
  CHECK(buffer.str().rfind("address,user\n", 0) == 0);
  const auto back = read_ground_truth_csv(buffer);
  CHECK(back.partition() == gt.partition());
  CHECK(back.user_of(*back.partition().position("d,x")) == "eve \"q\"");
  CHECK(gt.num_users() == 3);
  CHECK_THROWS_AS(truth_of({{"a", ""}}), InvalidPartition);
  std::istringstream empty("address,user\n");
  CHECK_THROWS_AS(read_ground_truth_csv(empty), InvalidPartition);
}

TEST_CASE("label prefix keeps the matching users only") {
  const auto gt = truth_of({{"a", "mining/x"}, {"b", "mining/x"}, {"c", "wallet/y"}});
  const auto mining = gt.with_label_prefix("mining/");
  CHECK(mining.size() == 2);
  CHECK(mining.num_users() == 1);
  CHECK(gt.with_label_prefix("zzz").empty());
}

TEST_CASE("uncovered ground-truth addresses become predicted singletons") {
  const auto gt = truth_of({{"a", "u"}, {"b", "u"}, {"c", "v"}});
  const auto aligned = align(gt, groups({{"a", "b"}}));
  CHECK(blocks(aligned.predicted) == std::set<std::set<std::string>>{{"a", "b"}, {"c"}});
  CHECK(aligned.truth == gt.partition());

  const auto dropped = align(gt, groups({{"a", "b"}}), AlignOptions{true});
  CHECK(dropped.truth.addresses() == std::vector<std::string>{"a", "b"});
  CHECK(dropped.predicted.num_clusters() == 1);
}

TEST_CASE("addresses outside the ground truth are filtered out") {
  const auto gt = truth_of({{"a", "u"}, {"b", "v"}});
  const auto aligned = align(gt, groups({{"a", "x", "y"}, {"b", "z"}}));
  CHECK(aligned.predicted.addresses() == std::vector<std::string>{"a", "b"});
  CHECK(aligned.predicted.num_clusters() == 2);
}

TEST_CASE("disjoint prediction is an empty overlap") {
  const auto gt = truth_of({{"a", "u"}});
  CHECK_THROWS_AS(align(gt, groups({{"q"}})), EmptyOverlap);
}

TEST_CASE("align is idempotent") {
  const auto gt = truth_of({{"a", "u"}, {"b", "u"}, {"c", "v"}, {"d", "v"}});
  const auto once = align(gt, groups({{"a", "c", "z"}, {"b"}}));
  const auto twice = align(GroundTruth(once.truth), once.predicted);
  CHECK(twice.predicted == once.predicted);
  CHECK(twice.truth == once.truth);
}

TEST_CASE("ground truth against itself scores all ones") {
  const auto gt = truth_of({{"a", "u"}, {"b", "u"}, {"c", "v"}, {"d", "w"}, {"e", "w"}});
  const std::vector<NamedPartition> runs{{"gt", gt.partition()}};
  const auto rows = evaluate(gt, runs);
  REQUIRE(rows.size() == 1);
  for (double v : {rows[0].precision, rows[0].recall, rows[0].f1, rows[0].nmi, rows[0].anmi})
    CHECK(std::abs(v - 1.0) < 1e-12);
}

TEST_CASE("rows follow input order and are deterministic") {
  const auto gt = truth_of({{"a", "u"}, {"b", "u"}, {"c", "v"}, {"d", "v"}});
  const std::vector<NamedPartition> runs{
      {"split", groups({{"a"}, {"b"}, {"c"}, {"d"}})},
      {"lump", groups({{"a", "b", "c", "d"}})},
      {"mixed", groups({{"a", "c"}, {"b", "d"}})},
  };
  const auto rows = evaluate(gt, runs);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].heuristic == "split");
  CHECK(rows[1].heuristic == "lump");
  CHECK(rows[2].heuristic == "mixed");
  CHECK(rows[0].precision == 1.0);
  CHECK(rows[0].recall == 0.0);
  CHECK(rows[1].recall == 1.0);
  CHECK(rows == evaluate(gt, runs));

  std::ostringstream csv;
  write_eval_csv(rows, csv);
  CHECK(csv.str().rfind("heuristic,precision,recall,f1,nmi,anmi\nsplit,1.000000,0.000000,0.000000,", 0) == 0);
  const auto table = format_eval_table(rows);
  CHECK(table.find("lump ") != std::string::npos);
  CHECK(table.find("1.00") != std::string::npos);
  CHECK_THROWS_AS(evaluate(gt, std::vector<NamedPartition>{}), std::invalid_argument);
}

TEST_CASE("alluvial counts flows between adjacent axes") {
  const std::vector<NamedPartition> axes{{"A", groups({{"a", "b"}, {"c"}})}, {"B", groups({{"a"}, {"b", "c"}})}};
  const auto spec = alluvial(axes);
  REQUIRE(spec.axes.size() == 2);
  CHECK(spec.flows == std::vector<AlluvialFlow>{{0, 0, 0, 1}, {0, 0, 1, 1}, {0, 1, 1, 1}});
  CHECK(crossings(spec, 0) == 0);
  CHECK_THROWS_AS(alluvial(std::span<const NamedPartition>(axes.data(), 1)), std::invalid_argument);
  const std::vector<NamedPartition> mismatched{{"A", groups({{"a"}})}, {"B", groups({{"b"}})}};
  CHECK_THROWS_AS(alluvial(mismatched), UniverseMismatch);
}

TEST_CASE("identical partitions give a crossing-free perfect matching") {
  std::mt19937_64 rng(1);
  const auto p = from_raw(random_labels(rng, 60, 9));
  const std::vector<NamedPartition> axes{{"x", p}, {"y", p}};
  const auto spec = alluvial(axes);
  CHECK(spec.flows.size() == p.num_clusters());
  for (const auto& f : spec.flows) CHECK(f.left == f.right);
  CHECK(crossings(spec, 0) == 0);
}

TEST_CASE("layout never adds crossings and conserves flow") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 20 + rng() % 200;
    std::vector<NamedPartition> axes;
    for (int k = 0; k < 3; ++k) axes.push_back({"p" + std::to_string(k), from_raw(random_labels(rng, n, 2 + rng() % 8))});
    const auto laid = alluvial(axes);
    const auto raw = alluvial(axes, 0);
    CHECK(total_crossings(laid) <= total_crossings(raw));
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(crossings(laid, k) == brute_crossings(laid, k));
      std::uint64_t sum = 0;
      std::map<ClusterId, std::uint64_t> out_of_left, into_right;
      for (const auto& f : laid.flows)
        if (f.axis == k) {
          sum += f.count;
          out_of_left[f.left] += f.count;
          into_right[f.right] += f.count;
        }
      CHECK(sum == n);
      for (const auto& node : laid.axes[k].nodes) CHECK(out_of_left[node.id] == node.size);
      for (const auto& node : laid.axes[k + 1].nodes) CHECK(into_right[node.id] == node.size);
    }
    for (const auto& axis : laid.axes) {
      std::set<ClusterId> ids;
      for (const auto& node : axis.nodes) ids.insert(node.id);
      CHECK(ids.size() == axis.nodes.size());
      CHECK(*ids.rbegin() == axis.nodes.size() - 1);
    }
    CHECK(alluvial(axes) == laid);
  }
}

TEST_CASE("align_all builds one shared universe with the ground truth first") {
  const auto gt = truth_of({{"a", "u"}, {"b", "u"}, {"c", "v"}});
  const std::vector<NamedPartition> runs{{"h1", groups({{"a", "b"}})}, {"h2", groups({{"a"}, {"b", "c"}})}};
  const auto axes = align_all(gt, runs);
  REQUIRE(axes.size() == 3);
  CHECK(axes[0].name == "gt");
  CHECK(axes[1].partition.size() == 3);
  const auto dropped = align_all(gt, runs, AlignOptions{true});
  CHECK(dropped[0].partition.addresses() == std::vector<std::string>{"a", "b"});
  const auto spec = alluvial(axes);
  CHECK(spec.axes[0].nodes[0].label == "u");
}

TEST_CASE("alluvial JSON and SVG output") {
  const std::vector<NamedPartition> axes{{"A", groups({{"a", "b"}, {"c"}})}, {"B", groups({{"a"}, {"b", "c"}})}};
  const auto spec = alluvial(axes);
  std::ostringstream json_out;
  write_alluvial_json(spec, json_out);
  const auto doc = nlohmann::json::parse(json_out.str());
  CHECK(doc["axes"].size() == 2);
  CHECK(doc["axes"][0]["clusters"][0].contains("label"));
  CHECK(doc["flows"].size() == 3);
  CHECK(doc["flows"][0]["count"] == 1);

  const auto svg = alluvial_svg(spec);
  CHECK(svg.find("<svg") != std::string::npos);
  std::size_t ribbons = 0;
  for (auto pos = svg.find("class=\"flow\""); pos != std::string::npos; pos = svg.find("class=\"flow\"", pos + 1))
    ++ribbons;
  CHECK(ribbons >= 3);
  CHECK(svg == alluvial_svg(spec));

  AlluvialSpec empty;
  empty.axes = spec.axes;
  CHECK_THROWS_AS(alluvial_svg(empty), IoFailure);

  const auto path = std::filesystem::temp_directory_path() / "btcreid_test_alluvial.svg";
  render_alluvial_svg(spec, path);
  std::ifstream in(path);
  std::stringstream read_back;
  read_back << in.rdbuf();
  CHECK(read_back.str() == svg);
  std::filesystem::remove(path);
}
