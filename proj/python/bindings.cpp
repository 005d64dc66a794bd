#include <filesystem>
#include <map>
#include <sstream>

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "btcreid/community.hpp"
#include "btcreid/errors.hpp"
#include "btcreid/evalkit.hpp"
#include "btcreid/hintnet.hpp"
#include "btcreid/identity.hpp"
#include "btcreid/ledger.hpp"
#include "btcreid/metrics.hpp"
#include "btcreid/simgen.hpp"

namespace py = pybind11;
using namespace btcreid;

namespace {

Partition partition_from_dict(const std::map<std::string, std::string>& labels) {
  return Partition::from_named({labels.begin(), labels.end()});
}

std::map<std::string, std::uint32_t> partition_to_dict(const Partition& p) {
  std::map<std::string, std::uint32_t> out;
  for (std::size_t i = 0; i < p.size(); ++i) out.emplace(p.addresses()[i], p.label(i));
  return out;
}

std::vector<Partition> cluster_h4(const Ledger& ledger, std::size_t max_recipients, bool weighted,
                                  double resolution) {
  const auto users = cluster_h1(ledger);
  const auto graph = build_hint_graph(ledger, users, max_recipients).to_weighted_graph(weighted);
  const auto dendrogram = louvain(graph, LouvainOptions{resolution});
  std::vector<Partition> levels;
  for (std::size_t l = 1; l <= dendrogram.depth(); ++l) levels.push_back(project_level(dendrogram, l, users));
  return levels;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Address clustering heuristics, partition metrics and a synthetic ledger generator";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidPartition>(m, "InvalidPartition", base.ptr());
  py::register_exception<UniverseMismatch>(m, "UniverseMismatch", base.ptr());
  py::register_exception<EmptyOverlap>(m, "EmptyOverlap", base.ptr());
  py::register_exception<InfeasibleConfig>(m, "InfeasibleConfig", base.ptr());
  py::register_exception<MalformedRecord>(m, "MalformedRecord", base.ptr());

  py::class_<Partition>(m, "Partition")
      .def(py::init(&partition_from_dict), py::arg("labels"),
           "Build from a mapping address -> cluster label")
      .def_static(
          "from_labels",
          [](std::vector<std::string> addresses, std::vector<std::uint64_t> labels) {
            if (addresses.size() != labels.size()) throw py::value_error("addresses and labels differ in length");
            return Partition::from_labels(std::move(addresses), labels);
          },
          py::arg("addresses"), py::arg("labels"))
      .def("__len__", &Partition::size)
      .def_property_readonly("num_clusters", &Partition::num_clusters)
      .def_property_readonly("addresses", &Partition::addresses)
      .def_property_readonly("labels",
                             [](const Partition& p) {
                               return std::vector<ClusterId>(p.labels().begin(), p.labels().end());
                             })
      .def("cluster_of", &Partition::cluster_of, py::arg("address"))
      .def("cluster_sizes", &Partition::cluster_sizes)
      .def("coarsens", &Partition::coarsens, py::arg("finer"))
      .def("to_dict", &partition_to_dict)
      .def(py::self == py::self)
      .def("__repr__", [](const Partition& p) {
        return "<Partition " + std::to_string(p.size()) + " addresses, " + std::to_string(p.num_clusters()) +
               " clusters>";
      });

  py::class_<GroundTruth>(m, "GroundTruth")
      .def(py::init(
               [](const std::map<std::string, std::string>& users) {
                 return GroundTruth::from_pairs({users.begin(), users.end()});
               }),
           py::arg("users"), "Build from a mapping address -> user label")
      .def_static("read_csv", py::overload_cast<const std::filesystem::path&>(&read_ground_truth_csv))
      .def("write_csv",
           [](const GroundTruth& g, const std::filesystem::path& path) { write_ground_truth_csv(g, path); })
      .def("__len__", &GroundTruth::size)
      .def_property_readonly("num_users", &GroundTruth::num_users)
      .def_property_readonly("partition", &GroundTruth::partition)
      .def("with_label_prefix", &GroundTruth::with_label_prefix, py::arg("prefix"));

  py::class_<Ledger>(m, "Ledger")
      .def("__len__", &Ledger::size)
      .def_property_readonly("num_addresses", [](const Ledger& l) { return l.addresses().size(); })
      .def("violations",
           [](const Ledger& l) {
             std::vector<std::pair<TxIndex, std::string>> out;
             for (const auto& v : validate(l)) out.emplace_back(v.index, std::string(to_string(v.kind)));
             return out;
           })
      .def("to_jsonl", [](const Ledger& l) {
        std::ostringstream out;
        write_ledger(l, out);
        return out.str();
      });

  m.def("parse_ledger", py::overload_cast<const std::filesystem::path&>(&parse_ledger), py::arg("path"));
  m.def(
      "parse_ledger_text",
      [](const std::string& text) {
        std::istringstream in(text);
        return parse_ledger(in);
      },
      py::arg("text"));
  m.def(
      "write_ledger", [](const Ledger& l, const std::filesystem::path& path) { write_ledger(l, path); },
      py::arg("ledger"), py::arg("path"));

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("users", &SimConfig::users)
      .def_readwrite("txs", &SimConfig::txs)
      .def_readwrite("addr_reuse_prob", &SimConfig::addr_reuse_prob)
      .def_readwrite("change_prob", &SimConfig::change_prob)
      .def_readwrite("fanout_max", &SimConfig::fanout_max)
      .def_readwrite("coinbase_every", &SimConfig::coinbase_every)
      .def_readwrite("amount_min", &SimConfig::amount_min)
      .def_readwrite("amount_max", &SimConfig::amount_max);

  m.def(
      "generate",
      [](const SimConfig& config) {
        auto result = generate(config);
        return py::make_tuple(std::move(result.ledger), std::move(result.truth));
      },
      py::arg("config"), "Returns (ledger, ground_truth)");

  m.def("cluster_h1", &cluster_h1, py::arg("ledger"));
  m.def(
      "cluster_h2", [](const Ledger& l) { return cluster_with_change(l, ChangeHeuristic::kH2); },
      py::arg("ledger"));
  m.def(
      "cluster_h3", [](const Ledger& l) { return cluster_with_change(l, ChangeHeuristic::kH3); },
      py::arg("ledger"));
  m.def("cluster_h4", &cluster_h4, py::arg("ledger"), py::arg("max_recipients") = 10,
        py::arg("weighted") = false, py::arg("resolution") = 1.0,
        "One partition per Louvain level, finest first");
  m.def(
      "hint_edges",
      [](const Ledger& l, std::size_t max_recipients) {
        std::vector<std::tuple<ClusterId, ClusterId, std::uint64_t>> out;
        const auto graph = build_hint_graph(l, cluster_h1(l), max_recipients);
        for (const auto& e : graph.edges())
          out.emplace_back(e.u, e.v, e.weight);
        return out;
      },
      py::arg("ledger"), py::arg("max_recipients") = 10, "(u, v, weight) over H1 cluster ids");

  py::class_<PairCounts>(m, "PairCounts")
      .def_readonly("tp", &PairCounts::tp)
      .def_readonly("fp", &PairCounts::fp)
      .def_readonly("fn", &PairCounts::fn)
      .def_readonly("tn", &PairCounts::tn)
      .def("__repr__", [](const PairCounts& c) {
        return "PairCounts(tp=" + std::to_string(c.tp) + ", fp=" + std::to_string(c.fp) +
               ", fn=" + std::to_string(c.fn) + ", tn=" + std::to_string(c.tn) + ")";
      });

  m.def("nmi", &nmi, py::arg("u"), py::arg("v"));
  m.def("anmi", &anmi, py::arg("u"), py::arg("v"));
  m.def("pair_counts", py::overload_cast<const Partition&, const Partition&>(&pair_counts), py::arg("truth"),
        py::arg("predicted"));
  m.def(
      "precision_recall_f1",
      [](const PairCounts& c) {
        const auto r = precision_recall_f1(c);
        return py::make_tuple(r.precision, r.recall, r.f1);
      },
      py::arg("counts"));

  m.def(
      "evaluate",
      [](const GroundTruth& truth, const std::vector<std::pair<std::string, Partition>>& runs,
         bool drop_uncovered) {
        std::vector<NamedPartition> named;
        for (const auto& [name, p] : runs) named.push_back({name, p});
        std::vector<py::dict> rows;
        for (const auto& r : evaluate(truth, named, AlignOptions{drop_uncovered})) {
          py::dict row;
          row["heuristic"] = r.heuristic;
          row["precision"] = r.precision;
          row["recall"] = r.recall;
          row["f1"] = r.f1;
          row["nmi"] = r.nmi;
          row["anmi"] = r.anmi;
          rows.push_back(row);
        }
        return rows;
      },
      py::arg("truth"), py::arg("runs"), py::arg("drop_uncovered") = false,
      "runs: list of (name, Partition); returns one dict per run");
}
