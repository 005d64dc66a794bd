#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "btcreid/alluvial.hpp"
#include "btcreid/community.hpp"
#include "btcreid/errors.hpp"
#include "btcreid/evalkit.hpp"
#include "btcreid/hintnet.hpp"
#include "btcreid/identity.hpp"
#include "btcreid/ledger.hpp"
#include "btcreid/simgen.hpp"

namespace btcreid::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

// Raised for bad flag combinations detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenerateFlags {
  std::string config_file;
  SimConfig config;
};

struct ClusterFlags {
  std::string heuristic = "h1";
  std::size_t max_recipients = 10;
  bool weighted = false;
  double resolution = 1.0;
  std::size_t level = 0;  // 0: every level
};

struct EvalFlags {
  bool drop_uncovered = false;
  std::string label_prefix;
};

// Records how an output set was produced; `argv` replays it exactly.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  ordered_json flags = ordered_json::object();
  std::string out_dir;

  void write(const fs::path& path) const {
    ordered_json doc;
    doc["tool"] = "btcreid";
    doc["version"] = kVersion;
    doc["command"] = command;
    doc["argv"] = argv;
    doc["inputs"] = inputs;
    doc["flags"] = flags;
    doc["out"] = out_dir;
    doc["outputs"] = outputs;
    std::ofstream file(path);
    if (!file) throw IoFailure("cannot write '" + path.string() + "'");
    file << doc.dump(2) << '\n';
  }
};

fs::path prepare_dir(const std::string& dir) {
  fs::path path(dir);
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IoFailure("cannot create output directory '" + dir + "': " + ec.message());
  return path;
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoFailure("cannot write '" + path.string() + "'");
  writer(file);
  if (!file) throw IoFailure("failed writing '" + path.string() + "'");
}

/// "h1.partition.csv" -> "h1", "h4.l2.csv" -> "h4.l2".
std::string run_name(const std::string& path) {
  std::string name = fs::path(path).filename().string();
  for (const std::string suffix : {".csv", ".partition"})
    if (name.size() > suffix.size() && name.ends_with(suffix)) name.resize(name.size() - suffix.size());
  return name;
}

ordered_json to_ordered(const SimConfig& config) {
  nlohmann::json j = config;
  return ordered_json{{"seed", j["seed"]},
                      {"users", j["users"]},
                      {"txs", j["txs"]},
                      {"addr_reuse_prob", j["addr_reuse_prob"]},
                      {"change_prob", j["change_prob"]},
                      {"fanout_max", j["fanout_max"]},
                      {"coinbase_every", j["coinbase_every"]},
                      {"amount_min", j["amount_min"]},
                      {"amount_max", j["amount_max"]}};
}

void add_generate_options(CLI::App& cmd, GenerateFlags& g) {
  cmd.add_option("--config", g.config_file, "JSON file with generator settings (flags override it)")
      ->check(CLI::ExistingFile);
  cmd.add_option("--seed", g.config.seed, "PRNG seed");
  cmd.add_option("--users", g.config.users, "Number of simulated users")->check(CLI::PositiveNumber);
  cmd.add_option("--txs", g.config.txs, "Number of transactions")->check(CLI::PositiveNumber);
  cmd.add_option("--addr-reuse", g.config.addr_reuse_prob, "Probability of paying to a known address")
      ->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--change-prob", g.config.change_prob, "Probability that change goes to a fresh address")
      ->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--fanout-max", g.config.fanout_max, "Maximum recipients per payment")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--coinbase-every", g.config.coinbase_every, "A coinbase every k transactions")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--amount-max", g.config.amount_max, "Largest payment amount")->check(CLI::PositiveNumber);
}

// Flags given on the command line win over the config file.
SimConfig resolve_config(const CLI::App& cmd, const GenerateFlags& g) {
  if (g.config_file.empty()) return g.config;
  std::ifstream in(g.config_file);
  nlohmann::json file_config;
  try {
    file_config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("invalid config file: " + std::string(e.what()));
  }
  SimConfig merged = file_config.get<SimConfig>();
  const nlohmann::json flags = g.config;
  const std::vector<std::pair<const char*, const char*>> names = {
      {"--seed", "seed"},           {"--users", "users"},
      {"--txs", "txs"},             {"--addr-reuse", "addr_reuse_prob"},
      {"--change-prob", "change_prob"}, {"--fanout-max", "fanout_max"},
      {"--coinbase-every", "coinbase_every"}, {"--amount-max", "amount_max"}};
  nlohmann::json merged_json = merged;
  for (const auto& [flag, key] : names)
    if (cmd.count(flag) > 0) merged_json[key] = flags[key];
  return merged_json.get<SimConfig>();
}

struct GeneratedFiles {
  fs::path ledger;
  fs::path truth;
};

GeneratedFiles do_generate(const SimConfig& config, const fs::path& dir, SimResult& result) {
  try {
    result = generate(config);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const InfeasibleConfig& e) {
    throw UsageError(e.what());
  }
  GeneratedFiles files{dir / "ledger.jsonl", dir / "gt.csv"};
  write_ledger(result.ledger, files.ledger);
  write_ground_truth_csv(result.truth, files.truth);
  return files;
}

struct ClusterOutputs {
  std::vector<NamedPartition> runs;
  std::vector<std::string> files;
};

ClusterOutputs do_cluster(const Ledger& ledger, const ClusterFlags& flags, const fs::path& dir,
                          std::ostream& out) {
  ClusterOutputs result;
  auto emit_partition = [&](const std::string& name, const std::string& file, Partition p) {
    const auto path = dir / file;
    write_partition_csv(p, path);
    result.files.push_back(path.string());
    result.runs.push_back({name, std::move(p)});
  };

  if (flags.heuristic == "h1") {
    emit_partition("h1", "h1.partition.csv", cluster_h1(ledger));
  } else if (flags.heuristic == "h2") {
    emit_partition("h2", "h2.partition.csv", cluster_with_change(ledger, ChangeHeuristic::kH2));
  } else if (flags.heuristic == "h3") {
    emit_partition("h3", "h3.partition.csv", cluster_with_change(ledger, ChangeHeuristic::kH3));
  } else {
    const auto users = cluster_h1(ledger);
    const auto hints = build_hint_graph(ledger, users, flags.max_recipients);
    write_file(dir / "h4.hint.edges", [&](std::ostream& f) { write_edge_list(hints, f); });
    write_file(dir / "h4.hint.isolates", [&](std::ostream& f) { write_isolates(hints, f); });
    result.files.push_back((dir / "h4.hint.edges").string());
    result.files.push_back((dir / "h4.hint.isolates").string());

    const auto graph = hints.to_weighted_graph(flags.weighted);
    const auto dendrogram = louvain(graph, LouvainOptions{flags.resolution});
    write_file(dir / "h4.summary.json", [&](std::ostream& f) { write_dendrogram_summary(dendrogram, f); });
    result.files.push_back((dir / "h4.summary.json").string());

    std::vector<std::size_t> levels;
    if (flags.level > 0) {
      if (flags.level > dendrogram.depth()) throw LevelOutOfRange(flags.level, dendrogram.depth());
      levels.push_back(flags.level);
    } else {
      for (std::size_t l = 1; l <= dendrogram.depth(); ++l) levels.push_back(l);
    }
    for (auto l : levels) {
      const auto tag = "h4.l" + std::to_string(l);
      write_file(dir / ("h4.dendrogram.l" + std::to_string(l) + ".csv"),
                 [&](std::ostream& f) { write_level_csv(dendrogram.levels[l - 1], f); });
      result.files.push_back((dir / ("h4.dendrogram.l" + std::to_string(l) + ".csv")).string());
      emit_partition(tag, tag + ".csv", project_level(dendrogram, l, users));
    }
    out << "h4: " << hints.num_nodes() << " users, " << hints.edges().size() << " hint edges, "
        << dendrogram.depth() << " level(s)\n";
    for (std::size_t l = 0; l < dendrogram.depth(); ++l)
      out << "  level " << l + 1 << ": " << dendrogram.levels[l].communities << " communities, modularity "
          << dendrogram.levels[l].modularity << '\n';
  }
  return result;
}

GroundTruth load_truth(const std::string& path, const EvalFlags& flags) {
  auto truth = read_ground_truth_csv(fs::path(path));
  if (!flags.label_prefix.empty()) {
    truth = truth.with_label_prefix(flags.label_prefix);
    if (truth.empty()) throw InvalidPartition("no ground-truth label starts with '" + flags.label_prefix + "'");
  }
  return truth;
}

std::vector<NamedPartition> load_runs(const std::vector<std::string>& paths) {
  std::vector<NamedPartition> runs;
  for (const auto& p : paths) runs.push_back({run_name(p), read_partition_csv(fs::path(p))});
  return runs;
}

std::vector<std::string> do_evaluate(const GroundTruth& truth, const std::vector<NamedPartition>& runs,
                                     const EvalFlags& flags, const fs::path& dir, std::ostream& out) {
  const auto rows = evaluate(truth, runs, AlignOptions{flags.drop_uncovered});
  const auto csv = dir / "report.csv";
  const auto txt = dir / "report.txt";
  const auto table = format_eval_table(rows);
  write_file(csv, [&](std::ostream& f) { write_eval_csv(rows, f); });
  write_file(txt, [&](std::ostream& f) { f << table; });
  out << table;
  return {csv.string(), txt.string()};
}

std::vector<std::string> do_alluvial(const GroundTruth& truth, const std::vector<NamedPartition>& runs,
                                     const EvalFlags& flags, std::size_t max_sweeps, const std::string& svg,
                                     const fs::path& dir, std::ostream& out) {
  const auto axes = align_all(truth, runs, AlignOptions{flags.drop_uncovered});
  const auto spec = alluvial(axes, max_sweeps);
  const auto json_path = dir / "alluvial.json";
  write_file(json_path, [&](std::ostream& f) { write_alluvial_json(spec, f); });
  std::vector<std::string> files{json_path.string()};
  if (!svg.empty()) {
    render_alluvial_svg(spec, svg);
    files.push_back(svg);
  }
  out << "alluvial: " << spec.axes.size() << " axes, " << spec.flows.size() << " flows, "
      << total_crossings(spec) << " crossings\n";
  return files;
}

void add_cluster_options(CLI::App& cmd, ClusterFlags& c, bool with_heuristic) {
  if (with_heuristic) {
    cmd.add_option("--heuristic", c.heuristic, "h1, h2, h3 or h4")
        ->check(CLI::IsMember({"h1", "h2", "h3", "h4"}));
    cmd.add_option("--level", c.level, "Only write this H4 dendrogram level (1-based)")
        ->check(CLI::PositiveNumber);
  }
  cmd.add_option("--max-recipients", c.max_recipients, "H4: hint edges need fewer recipient users than this")
      ->check(CLI::PositiveNumber);
  cmd.add_flag("--weighted", c.weighted, "H4: use hint counts as edge weights");
  cmd.add_option("--resolution", c.resolution, "H4: modularity resolution")->check(CLI::PositiveNumber);
}

void add_eval_options(CLI::App& cmd, EvalFlags& e) {
  cmd.add_flag("--drop-uncovered", e.drop_uncovered,
               "Drop ground-truth addresses absent from a partition instead of making them singletons");
  cmd.add_option("--label-prefix", e.label_prefix, "Only keep ground-truth users whose label has this prefix");
}

ordered_json cluster_flags_json(const ClusterFlags& c) {
  return {{"heuristic", c.heuristic},
          {"level", c.level},
          {"max_recipients", c.max_recipients},
          {"weighted", c.weighted},
          {"resolution", c.resolution}};
}

ordered_json eval_flags_json(const EvalFlags& e) {
  return {{"drop_uncovered", e.drop_uncovered}, {"label_prefix", e.label_prefix}};
}

int replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  std::ifstream in(manifest_path);
  if (!in) throw IoFailure("cannot open '" + manifest_path + "'");
  const auto doc = nlohmann::json::parse(in);
  const auto argv = doc.at("argv").get<std::vector<std::string>>();
  if (argv.size() < 2 || argv[1] == "replay") throw UsageError("manifest has no replayable command");
  return run(argv, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bitcoin address re-identification: clustering heuristics, evaluation and alluvial diagrams",
               "btcreid"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string out_dir = ".";

  GenerateFlags gen;
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic ledger and its ground truth");
  add_generate_options(*generate_cmd, gen);
  generate_cmd->add_option("--out", out_dir, "Output directory");

  std::string ledger_path;
  std::string truth_path;
  auto* describe_cmd = app.add_subcommand("describe", "Summarize a ledger and its ground truth");
  describe_cmd->add_option("ledger", ledger_path, "JSON-lines ledger")->required()->check(CLI::ExistingFile);
  describe_cmd->add_option("truth", truth_path, "Ground-truth CSV")->check(CLI::ExistingFile);

  auto* validate_cmd = app.add_subcommand("validate", "List ledger invariant violations");
  validate_cmd->add_option("ledger", ledger_path, "JSON-lines ledger")->required()->check(CLI::ExistingFile);

  ClusterFlags clus;
  auto* cluster_cmd = app.add_subcommand("cluster", "Cluster ledger addresses with one heuristic");
  cluster_cmd->add_option("ledger", ledger_path, "JSON-lines ledger")->required()->check(CLI::ExistingFile);
  add_cluster_options(*cluster_cmd, clus, true);
  cluster_cmd->add_option("--out", out_dir, "Output directory");

  EvalFlags evalf;
  std::vector<std::string> partition_paths;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score partitions against a ground truth");
  evaluate_cmd->add_option("truth", truth_path, "Ground-truth CSV (address,user)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("partitions", partition_paths, "Partition CSVs (address,cluster)")
      ->required()
      ->check(CLI::ExistingFile);
  add_eval_options(*evaluate_cmd, evalf);
  evaluate_cmd->add_option("--out", out_dir, "Output directory");

  std::string svg_path;
  std::size_t max_sweeps = 50;
  auto* alluvial_cmd = app.add_subcommand("alluvial", "Alluvial diagram of the ground truth and partitions");
  alluvial_cmd->add_option("truth", truth_path, "Ground-truth CSV (address,user)")
      ->required()
      ->check(CLI::ExistingFile);
  alluvial_cmd->add_option("partitions", partition_paths, "Partition CSVs, one axis each")
      ->required()
      ->check(CLI::ExistingFile);
  alluvial_cmd->add_option("--svg", svg_path, "Also render an SVG to this path");
  alluvial_cmd->add_option("--max-sweeps", max_sweeps, "Barycenter sweep limit");
  add_eval_options(*alluvial_cmd, evalf);
  alluvial_cmd->add_option("--out", out_dir, "Output directory");

  auto* pipeline_cmd = app.add_subcommand("pipeline", "generate, cluster with every heuristic, evaluate, alluvial");
  add_generate_options(*pipeline_cmd, gen);
  add_cluster_options(*pipeline_cmd, clus, false);
  add_eval_options(*pipeline_cmd, evalf);
  pipeline_cmd->add_option("--out", out_dir, "Output directory");

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  RunManifest manifest;
  manifest.argv = args;
  manifest.out_dir = out_dir;

  try {
    if (*generate_cmd) {
      const auto config = resolve_config(*generate_cmd, gen);
      const auto dir = prepare_dir(out_dir);
      SimResult result;
      const auto files = do_generate(config, dir, result);
      const auto summary = describe(result.ledger, result.truth);
      out << to_json(summary).dump(2) << '\n';
      manifest.command = "generate";
      manifest.flags = to_ordered(config);
      manifest.outputs = {files.ledger.string(), files.truth.string()};
      manifest.write(dir / "generate.manifest.json");
    } else if (*describe_cmd) {
      const auto ledger = parse_ledger(fs::path(ledger_path));
      const auto truth = truth_path.empty() ? GroundTruth{} : read_ground_truth_csv(fs::path(truth_path));
      out << to_json(describe(ledger, truth)).dump(2) << '\n';
    } else if (*validate_cmd) {
      // Load without the parser's own checks being fatal is not possible, so
      // a parse error is itself the (first) violation.
      const auto ledger = parse_ledger(fs::path(ledger_path));
      const auto violations = validate(ledger);
      for (const auto& v : violations) out << v.index << ' ' << to_string(v.kind) << '\n';
      if (!violations.empty()) return kDataError;
      out << "ok: " << ledger.size() << " transactions\n";
    } else if (*cluster_cmd) {
      const auto ledger = parse_ledger(fs::path(ledger_path));
      const auto dir = prepare_dir(out_dir);
      auto result = do_cluster(ledger, clus, dir, out);
      manifest.command = "cluster";
      manifest.inputs = {ledger_path};
      manifest.flags = cluster_flags_json(clus);
      manifest.outputs = result.files;
      manifest.write(dir / ("cluster-" + clus.heuristic + ".manifest.json"));
    } else if (*evaluate_cmd) {
      const auto truth = load_truth(truth_path, evalf);
      const auto runs = load_runs(partition_paths);
      const auto dir = prepare_dir(out_dir);
      manifest.command = "evaluate";
      manifest.inputs = {truth_path};
      manifest.inputs.insert(manifest.inputs.end(), partition_paths.begin(), partition_paths.end());
      manifest.flags = eval_flags_json(evalf);
      manifest.outputs = do_evaluate(truth, runs, evalf, dir, out);
      manifest.write(dir / "evaluate.manifest.json");
    } else if (*alluvial_cmd) {
      const auto truth = load_truth(truth_path, evalf);
      const auto runs = load_runs(partition_paths);
      const auto dir = prepare_dir(out_dir);
      manifest.command = "alluvial";
      manifest.inputs = {truth_path};
      manifest.inputs.insert(manifest.inputs.end(), partition_paths.begin(), partition_paths.end());
      manifest.flags = eval_flags_json(evalf);
      manifest.flags["max_sweeps"] = max_sweeps;
      manifest.flags["svg"] = svg_path;
      manifest.outputs = do_alluvial(truth, runs, evalf, max_sweeps, svg_path, dir, out);
      manifest.write(dir / "alluvial.manifest.json");
    } else if (*pipeline_cmd) {
      const auto config = resolve_config(*pipeline_cmd, gen);
      const auto dir = prepare_dir(out_dir);
      SimResult generated;
      const auto files = do_generate(config, dir, generated);
      manifest.outputs = {files.ledger.string(), files.truth.string()};

      // Cluster from the written file so the run matches `cluster` exactly.
      const auto ledger = parse_ledger(files.ledger);
      std::vector<NamedPartition> runs;
      for (const char* h : {"h1", "h2", "h3", "h4"}) {
        ClusterFlags step = clus;
        step.heuristic = h;
        auto result = do_cluster(ledger, step, dir, out);
        runs.insert(runs.end(), std::make_move_iterator(result.runs.begin()),
                    std::make_move_iterator(result.runs.end()));
        manifest.outputs.insert(manifest.outputs.end(), result.files.begin(), result.files.end());
      }

      const auto truth = evalf.label_prefix.empty() ? generated.truth
                                                    : generated.truth.with_label_prefix(evalf.label_prefix);
      if (truth.empty()) throw InvalidPartition("no ground-truth label starts with '" + evalf.label_prefix + "'");
      auto reports = do_evaluate(truth, runs, evalf, dir, out);
      manifest.outputs.insert(manifest.outputs.end(), reports.begin(), reports.end());

      // Ground truth, H1 and the second H4 level (or the deepest one available).
      std::size_t h4_levels = 0;
      for (const auto& r : runs) h4_levels += r.name.starts_with("h4.l") ? 1 : 0;
      const auto h4_pick = "h4.l" + std::to_string(std::min<std::size_t>(2, h4_levels));
      std::vector<NamedPartition> axes;
      for (const auto& r : runs)
        if (r.name == "h1" || r.name == h4_pick) axes.push_back(r);
      auto diagrams = do_alluvial(truth, axes, evalf, 50, (dir / "alluvial.svg").string(), dir, out);
      manifest.outputs.insert(manifest.outputs.end(), diagrams.begin(), diagrams.end());

      manifest.command = "pipeline";
      manifest.flags = to_ordered(config);
      manifest.flags["cluster"] = cluster_flags_json(clus);
      manifest.flags["evaluate"] = eval_flags_json(evalf);
      manifest.write(dir / "pipeline.manifest.json");
    } else if (*replay_cmd) {
      return replay(manifest_path, out, err);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const LevelOutOfRange& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

}  // namespace btcreid::cli
