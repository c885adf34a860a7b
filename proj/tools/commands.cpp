#include "commands.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "gcd/checkpoint.hpp"
#include "gcd/config.hpp"
#include "gcd/dataset.hpp"
#include "gcd/error.hpp"
#include "gcd/eval.hpp"
#include "gcd/trainer.hpp"

namespace fs = std::filesystem;

namespace gcd::cli {

namespace {

constexpr const char* kIncomplete = ".incomplete";

class Interrupted : public std::runtime_error {
 public:
  Interrupted() : std::runtime_error("interrupted; partial artifacts carry the .incomplete suffix") {}
};

const std::map<std::string, std::string>& key_help() {
  static const std::map<std::string, std::string> help = {
      {"data", "embedding file (.gcde binary or .csv)"},
      {"run_dir", "directory for run artifacts"},
      {"alpha", "weight of the JS term; the swapped term gets 1 - alpha"},
      {"tau_sup", "temperature of the supervised contrastive term"},
      {"tau_u", "temperature of the prototype softmax"},
      {"sinkhorn_epsilon", "entropic regularization of the Sinkhorn codes"},
      {"sinkhorn_iters", "Sinkhorn iterations"},
      {"weak_noise_sigma", "Gaussian noise of the weak view"},
      {"strong_noise_sigma", "Gaussian noise of the strong view"},
      {"strong_mask_fraction", "fraction of coordinates zeroed in the strong view"},
      {"view_seed", "seed of the view generator"},
      {"batch_size", "mini-batch size"},
      {"epochs", "training epochs"},
      {"learning_rate", "initial SGD learning rate (cosine decay)"},
      {"k_proto", "number of prototypes"},
      {"hidden_dim", "hidden width of the projection head"},
      {"out_dim", "output dimension of the projection head"},
      {"seed", "training seed"},
      {"use_sup", "enable the supervised contrastive term (0/1)"},
      {"use_js", "enable the JS consistency term (0/1)"},
      {"use_swap", "enable the swapped prediction term (0/1)"},
      {"m", "neighbors per node in the similarity graph"},
      {"min_gain", "smallest modularity gain accepted by a Louvain move"},
  };
  return help;
}

std::string flag_name(const std::string& key) {
  std::string flag = "--" + key;
  for (char& c : flag) {
    if (c == '_') c = '-';
  }
  return flag;
}

// Config keys exposed as flags; flags win over --config.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "key=value config file applied before flags");
    for (const auto& key : config_keys()) {
      app.add_option(flag_name(key), values[key], key_help().at(key));
    }
  }

  RunConfig resolve(const CLI::App& app) const {
    RunConfig config;
    if (!config_file.empty()) config = load_config(config_file);
    for (const auto& key : config_keys()) {
      if (app.count(flag_name(key)) > 0) apply_setting(config, key, values.at(key));
    }
    config.validate();
    return config;
  }
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

fs::path incomplete(const fs::path& path) { return fs::path(path.string() + kIncomplete); }

void commit(const fs::path& path) { fs::rename(incomplete(path), path); }

void write_history(const std::vector<EpochRecord>& history, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : history) {
    out << r.epoch << '\t' << r.loss.total << '\t' << r.loss.sup << '\t' << r.loss.js << '\t' << r.loss.swap
        << '\t' << r.learning_rate << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

EmbeddingDataset load_data(const std::string& path) {
  return load_embeddings(path, format_for_path(path));
}

struct TrainedRun {
  Checkpoint checkpoint;
  EmbeddingDataset data;
};

// Shared by train and pipeline: persists the config, trains, writes the
// checkpoint and history.
TrainedRun train_into(const RunConfig& config, std::ostream& err, const std::atomic<bool>* stop) {
  require(!config.data.empty(), "--data is required");
  require(!config.run_dir.empty(), "--run-dir is required");
  const fs::path dir = config.run_dir;
  fs::create_directories(dir);
  for (const char* name : {"checkpoint.gcdh", "history.tsv", "assignments.tsv", "report.txt"}) {
    fs::remove(dir / name);
    fs::remove(incomplete(dir / name));
  }
  save_config(config, dir / "config.txt");

  TrainedRun run{{config.train, {}, {}}, load_data(config.data)};
  TrainOptions options;
  options.stop = stop;
  TrainResult result = train(run.data, config.train, options);
  for (const auto& r : result.history) {
    err << "epoch " << r.epoch << " loss " << r.loss.total << " (sup " << r.loss.sup << ", js " << r.loss.js
        << ", swap " << r.loss.swap << ")\n";
  }
  run.checkpoint.head = std::move(result.head);
  run.checkpoint.prototypes = std::move(result.prototypes);

  save_checkpoint(run.checkpoint, incomplete(dir / "checkpoint.gcdh"));
  write_history(result.history, incomplete(dir / "history.tsv"));
  if (!result.completed) throw Interrupted();
  commit(dir / "checkpoint.gcdh");
  commit(dir / "history.tsv");
  return run;
}

Partition assign_communities(const Checkpoint& checkpoint, const EmbeddingDataset& data, int neighbors,
                             double min_gain, const std::string& graph_path) {
  const SimilarityGraph graph = build_graph(embed(data, checkpoint.head), data, neighbors);
  if (!graph_path.empty()) write_edge_list(graph, graph_path);
  LouvainOptions options;
  options.min_gain = min_gain;
  return louvain(graph, options);
}

std::string report_text(const Partition& partition, const EmbeddingDataset& data) {
  std::ostringstream ss;
  if (data.eval_truth && data.known_mask) {
    const EvalReport report = evaluate(partition, data);
    print_report_table(report, ss);
    print_report_keys(report, ss);
  } else {
    ss << "no evaluation labels in the data file\nk=" << partition.num_communities << '\n';
  }
  return ss.str();
}

int cmd_synth(const SynthSpec& synth, const SplitSpec& split, const std::string& output) {
  const EmbeddingDataset data = make_split(generate_synthetic(synth), split);
  save_embeddings(data, output, format_for_path(output));
  return kOk;
}

int cmd_train(const RunConfig& config, std::ostream& err, const std::atomic<bool>* stop) {
  train_into(config, err, stop);
  return kOk;
}

int cmd_assign(const std::string& checkpoint_path, const std::string& data_path, int neighbors,
               double min_gain, const std::string& output, const std::string& graph_path) {
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  RunConfig config;
  config.train = checkpoint.spec;
  config.data = data_path;
  config.neighbors = neighbors;
  config.min_gain = min_gain;
  config.validate();
  save_config(config, output + ".config.txt");

  const EmbeddingDataset data = load_data(data_path);
  const Partition partition = assign_communities(checkpoint, data, neighbors, min_gain, graph_path);
  write_partition(partition, output);
  return kOk;
}

int cmd_eval(const std::string& data_path, const std::string& assignments, std::ostream& out) {
  const EmbeddingDataset data = load_data(data_path);
  const Partition partition = read_partition(assignments);
  if (static_cast<Eigen::Index>(partition.community.size()) != data.size()) {
    throw std::runtime_error("assignments cover " + std::to_string(partition.community.size()) +
                             " instances but the data file has " + std::to_string(data.size()));
  }
  if (!data.eval_truth || !data.known_mask) throw std::runtime_error("data file has no evaluation labels");
  const EvalReport report = evaluate(partition, data);
  print_report_table(report, out);
  print_report_keys(report, out);
  return kOk;
}

int cmd_pipeline(const RunConfig& config, std::ostream& out, std::ostream& err, const std::atomic<bool>* stop) {
  const TrainedRun run = train_into(config, err, stop);
  const fs::path dir = config.run_dir;
  const Partition partition =
      assign_communities(run.checkpoint, run.data, config.neighbors, config.min_gain, "");
  write_partition(partition, incomplete(dir / "assignments.tsv"));
  commit(dir / "assignments.tsv");

  const std::string report = report_text(partition, run.data);
  {
    std::ofstream f(incomplete(dir / "report.txt"), std::ios::trunc);
    f << report;
    if (!f) throw IoError("write failed for " + (dir / "report.txt").string());
  }
  commit(dir / "report.txt");
  out << report;
  return kOk;
}

}  // namespace

void write_partition(const Partition& partition, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < partition.community.size(); ++i) out << i << '\t' << partition.community[i] << '\n';
  out << "k=" << partition.num_communities << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Partition read_partition(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<int> labels;
  std::optional<int> footer;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto bad = [&] { return ParseError(ParseError::Kind::kBadValue, line_no, "malformed assignment at line " + std::to_string(line_no)); };
    if (footer) throw bad();
    if (line.rfind("k=", 0) == 0) {
      try {
        footer = std::stoi(line.substr(2));
      } catch (const std::exception&) {
        throw bad();
      }
      continue;
    }
    std::istringstream ss(line);
    std::size_t id = 0;
    int community = 0;
    if (!(ss >> id >> community) || id != labels.size() || community < 0) throw bad();
    labels.push_back(community);
  }
  if (!footer || labels.empty()) {
    throw ParseError(ParseError::Kind::kTruncated, line_no, "assignment file lacks rows or the k= footer");
  }
  Partition p = Partition::from_labels(labels);
  if (p.num_communities != *footer) {
    throw ParseError(ParseError::Kind::kBadValue, line_no, "footer k does not match the assignments");
  }
  return p;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* stop) {
  CLI::App app{"Generalized category discovery over precomputed embeddings"};
  app.name("gcd");
  app.require_subcommand(1);

  SynthSpec synth;
  SplitSpec split;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic Gaussian embedding file");
  synth_cmd->add_option("--classes", synth.num_classes, "number of classes")->required();
  synth_cmd->add_option("--per-class", synth.points_per_class, "points per class")->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "feature dimension")->capture_default_str();
  synth_cmd->add_option("--separation", synth.center_separation, "distance between class centers")
      ->capture_default_str();
  synth_cmd->add_option("--stddev", synth.cluster_stddev, "per-coordinate spread")->capture_default_str();
  synth_cmd->add_option("--known-fraction", split.known_class_fraction, "fraction of known classes")
      ->capture_default_str();
  synth_cmd->add_option("--labeled-fraction", split.labeled_instance_fraction,
                        "labeled fraction of each known class")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "seed for data and split")->capture_default_str();
  synth_cmd->add_option("-o,--output", synth_out, "output path")->required();

  ConfigFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train the projection head; writes checkpoint and history");
  train_flags.attach(*train_cmd);

  std::string checkpoint_path, assign_data, assign_out, graph_out;
  int neighbors = RunConfig{}.neighbors;
  double min_gain = RunConfig{}.min_gain;
  auto* assign_cmd = app.add_subcommand("assign", "cluster embeddings with a trained head");
  assign_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint from train")->required();
  assign_cmd->add_option("--data", assign_data, "embedding file")->required();
  assign_cmd->add_option("--m", neighbors, "neighbors per node")->capture_default_str();
  assign_cmd->add_option("--min-gain", min_gain, "smallest accepted modularity gain")->capture_default_str();
  assign_cmd->add_option("-o,--output", assign_out, "assignment file")->required();
  assign_cmd->add_option("--graph", graph_out, "also write the graph as an edge list");

  std::string eval_data, eval_assignments;
  auto* eval_cmd = app.add_subcommand("eval", "score assignments against ground truth");
  eval_cmd->add_option("--data", eval_data, "embedding file with evaluation labels")->required();
  eval_cmd->add_option("--assignments", eval_assignments, "assignment file")->required();

  ConfigFlags pipeline_flags;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "train, assign and evaluate in one run directory");
  pipeline_flags.attach(*pipeline_cmd);

  std::vector<const char*> argv{"gcd"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth, split, synth_out);
    if (*train_cmd) return cmd_train(train_flags.resolve(*train_cmd), err, stop);
    if (*assign_cmd) return cmd_assign(checkpoint_path, assign_data, neighbors, min_gain, assign_out, graph_out);
    if (*eval_cmd) return cmd_eval(eval_data, eval_assignments, out);
    if (*pipeline_cmd) return cmd_pipeline(pipeline_flags.resolve(*pipeline_cmd), out, err, stop);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace gcd::cli
