#include "mvsel/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvsel/downstream.hpp"
#include "mvsel/graphlap.hpp"
#include "mvsel/io.hpp"
#include "mvsel/pipeline.hpp"
#include "mvsel/rng.hpp"
#include "mvsel/simgen.hpp"

namespace mvsel::cli {

using nlohmann::json;

std::string format_percent(double fraction) {
  if (!std::isfinite(fraction) || fraction < 0) throw std::invalid_argument("format_percent: invalid fraction");
  // The small offset keeps decimal halves such as 2.675 from rounding down
  // because of their binary representation.
  const auto hundredths = static_cast<long long>(std::floor(fraction * 10000.0 + 0.5 + 1e-7));
  std::string frac = std::to_string(hundredths % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(hundredths / 100) + "." + frac;
}

namespace {

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- manifest

class RunRecorder {
 public:
  RunRecorder(std::string command, fs::path out_dir) : command_(std::move(command)), out_dir_(std::move(out_dir)) {
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec || !fs::is_directory(out_dir_))
      throw io::IoError("cannot create output directory " + out_dir_.string());
    start_ = std::chrono::steady_clock::now();
  }

  void input(const fs::path& path) { inputs_[path.string()] = io::file_digest(path); }
  void seed(std::uint64_t s) { seed_ = s; }
  void config(const TrainConfig& cfg) { config_ = json::parse(io::config_to_json(cfg)); }
  void parameters(json params) { params_ = std::move(params); }

  fs::path path(const std::string& name) const { return out_dir_ / name; }
  void output(const std::string& name) { outputs_.push_back(name); }

  // Entries are keyed by command, so running several commands into one
  // directory accumulates their records.
  void finish() {
    const fs::path manifest_path = out_dir_ / "manifest.json";
    json manifest = json::object();
    if (fs::exists(manifest_path)) {
      try {
        manifest = json::parse(io::read_text(manifest_path));
      } catch (const json::parse_error&) {
        manifest = json::object();
      }
      if (!manifest.is_object() || !manifest.contains("runs") || !manifest["runs"].is_object())
        manifest = json::object();
    }
    manifest["tool"] = "mvsel";
    manifest["tool_version"] = kToolVersion;
    json entry;
    entry["command"] = command_;
    entry["parameters"] = params_;
    entry["config"] = config_;
    entry["seed"] = seed_ ? json(*seed_) : json(nullptr);
    entry["inputs"] = inputs_;
    json outs = json::array();
    for (const auto& name : outputs_) {
      if (!fs::exists(out_dir_ / name)) throw io::IoError("expected output " + name + " was not written");
      outs.push_back({{"file", name}, {"digest", io::file_digest(out_dir_ / name)}});
    }
    entry["outputs"] = std::move(outs);
    entry["duration_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest["runs"][command_] = std::move(entry);
    io::write_text(manifest_path, manifest.dump(2) + '\n');
  }

 private:
  std::string command_;
  fs::path out_dir_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::optional<std::uint64_t> seed_;
  json config_ = nullptr;
  json params_ = json::object();
};

std::string view_file(std::size_t d) { return "views_" + std::to_string(d + 1) + ".csv"; }
std::string numbered(const std::string& stem, std::size_t d, const std::string& ext) {
  return stem + "_" + std::to_string(d + 1) + ext;
}

std::vector<Matrix> load_views(const std::vector<fs::path>& paths, RunRecorder& rec) {
  if (paths.empty()) throw CommandError("at least one --view file is required");
  std::vector<Matrix> views;
  for (const auto& p : paths) {
    views.push_back(io::read_matrix_csv(p));
    rec.input(p);
  }
  for (std::size_t d = 0; d < views.size(); ++d) {
    if (views[d].rows() != views.front().rows())
      throw CommandError("view " + paths[d].string() + " has " + std::to_string(views[d].rows()) + " rows, expected " +
                         std::to_string(views.front().rows()));
    if (views[d].cols() < 1) throw CommandError("view " + paths[d].string() + " has no columns");
  }
  return views;
}

std::vector<int> load_labels(const fs::path& path, Index n, RunRecorder& rec) {
  auto labels = io::read_labels(path);
  rec.input(path);
  if (static_cast<Index>(labels.size()) != n)
    throw CommandError("labels file " + path.string() + " has " + std::to_string(labels.size()) + " entries, expected " +
                       std::to_string(n));
  return labels;
}

std::vector<std::vector<Index>> load_selections(const std::vector<fs::path>& paths, const std::vector<Index>& dims,
                                                RunRecorder& rec) {
  if (paths.size() != dims.size())
    throw CommandError("expected " + std::to_string(dims.size()) + " selection files, got " +
                       std::to_string(paths.size()));
  std::vector<std::vector<Index>> out;
  for (std::size_t d = 0; d < paths.size(); ++d) {
    auto list = io::read_index_list(paths[d]);
    rec.input(paths[d]);
    if (list.indices.empty()) throw CommandError("selection file " + paths[d].string() + " is empty");
    std::set<Index> seen;
    for (Index v : list.indices) {
      if (v >= dims[d])
        throw CommandError("selection file " + paths[d].string() + ": index " + std::to_string(v) +
                           " is out of range for " + std::to_string(dims[d]) + " columns");
      if (!seen.insert(v).second)
        throw CommandError("selection file " + paths[d].string() + ": duplicate index " + std::to_string(v));
    }
    out.push_back(std::move(list.indices));
  }
  return out;
}

void check_dims(const std::vector<Matrix>& views, const std::vector<Index>& dims) {
  if (views.size() != dims.size())
    throw CommandError("checkpoint has " + std::to_string(dims.size()) + " views, got " + std::to_string(views.size()) +
                       " view files");
  for (std::size_t d = 0; d < views.size(); ++d)
    if (views[d].cols() != dims[d])
      throw CommandError("view " + std::to_string(d + 1) + " has " + std::to_string(views[d].cols()) +
                         " columns, checkpoint expects " + std::to_string(dims[d]));
}

std::vector<Index> dims_of(const std::vector<Matrix>& views) {
  std::vector<Index> dims;
  for (const auto& v : views) dims.push_back(v.cols());
  return dims;
}

TrainConfig resolve_config(const std::optional<fs::path>& path, const TrainConfig& fallback,
                           const std::optional<int>& max_iters, const std::optional<std::uint64_t>& seed,
                           RunRecorder& rec) {
  TrainConfig cfg = fallback;
  if (path) {
    cfg = io::read_config(*path);
    rec.input(*path);
  }
  if (max_iters) {
    if (*max_iters < 0) throw CommandError("--max-iters must be non-negative");
    cfg.max_iters = *max_iters;
  }
  if (seed) cfg.seed = *seed;
  rec.config(cfg);
  rec.seed(cfg.seed);
  return cfg;
}

// -------------------------------------------------------------- simulate

SimulatedData simulate_one(const SimulateOptions& o, Index n1, Index n2, std::uint64_t seed) {
  if (o.scenario == "nonlinear") return gen_nonlinear(n1, n2, o.p1, o.p2, seed);
  if (o.scenario == "linear") return gen_linear(n1, o.p1, o.p2, o.rho1, o.rho2, o.c, seed);
  if (o.scenario == "scale_free" || o.scenario == "lattice" || o.scenario == "cluster") {
    GraphScenarioParams params;
    params.topology = parse_topology(o.scenario);
    params.p1 = o.p1;
    params.p2 = o.p2;
    params.n1 = n1;
    params.n2 = n2;
    params.seed = seed;
    params.graph_seed = o.seed;  // the held-out draw shares the training graph
    return gen_graph_scenario(params);
  }
  throw CommandError("unknown scenario '" + o.scenario + "' (expected nonlinear, linear, scale_free, lattice or cluster)");
}

void write_dataset(const SimulatedData& sim, const fs::path& dir, const std::string& prefix, bool with_truth,
                   RunRecorder& rec) {
  for (std::size_t d = 0; d < sim.data.views.size(); ++d) {
    io::write_matrix_csv(dir / view_file(d), sim.data.views[d]);
    rec.output(prefix + view_file(d));
  }
  io::write_labels(dir / "labels.csv", *sim.data.labels);
  rec.output(prefix + "labels.csv");
  if (!with_truth) return;
  for (std::size_t d = 0; d < sim.truth.signals.size(); ++d) {
    const std::string name = numbered("truth", d, ".txt");
    io::write_index_list(dir / name, sim.truth.signals[d], sim.data.views[d].cols());
    rec.output(prefix + name);
  }
  for (std::size_t d = 0; d < sim.graphs.size(); ++d) {
    const std::string name = numbered("graph", d, ".txt");
    io::write_text(dir / name, format_edge_list(sim.graphs[d]));
    rec.output(prefix + name);
  }
}

// -------------------------------------------------------- shared pipeline

struct PipelineOutcome {
  FitResult stage1, stage2, stage3;
  FeatureSelection selection;
  SvmModel svm;
  std::vector<int> predictions;
};

// Standardize on the training rows, then stages 1-3 and the SVM.
PipelineOutcome run_pipeline(const std::vector<Matrix>& train_views, const std::vector<int>& train_labels,
                             const std::vector<Matrix>& test_views, const TrainConfig& cfg) {
  PipelineOutcome out;
  const auto standardized = standardize_views(train_views);
  MultiviewDataset train;
  train.views = standardized.views;
  out.stage1 = stage1_train(train, cfg);
  out.selection = rank_features(reconstruct(out.stage1.networks, out.stage1.latent), cfg.r_fraction);
  out.stage2 = stage2_train(subset_views(train, out.selection), cfg);
  SvmOptions so;
  so.C = cfg.svm_c;
  so.gamma = cfg.svm_gamma_or_default();
  out.svm = svm_fit(out.stage2.latent, train_labels, so);
  MultiviewDataset test;
  test.views = apply_standardization(test_views, standardized.stats);
  out.stage3 = stage3_infer(subset_views(test, out.selection), out.stage2.networks, cfg);
  out.predictions = svm_predict(out.svm, out.stage3.latent);
  return out;
}

std::vector<Matrix> take_rows(const std::vector<Matrix>& views, const std::vector<Index>& rows) {
  std::vector<Matrix> out;
  for (const auto& v : views) out.push_back(v(rows, Eigen::all));
  return out;
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

// ------------------------------------------------------------------ commands

void cmd_simulate(const SimulateOptions& o) {
  RunRecorder rec("simulate", o.out_dir);
  rec.seed(o.seed);
  rec.parameters({{"scenario", o.scenario}, {"n1", o.n1}, {"n2", o.n2}, {"p1", o.p1}, {"p2", o.p2},
                  {"n_per_class", o.n_per_class}, {"rho1", o.rho1}, {"rho2", o.rho2}, {"c", o.c},
                  {"test_n1", o.test_n1}, {"test_n2", o.test_n2}});
  if (o.test_n1 < 0 || o.test_n2 < 0) throw CommandError("test sizes must be non-negative");
  const bool linear = o.scenario == "linear";
  const SimulatedData train = simulate_one(o, linear ? o.n_per_class : o.n1, o.n2, o.seed);
  write_dataset(train, o.out_dir, "", true, rec);
  if (o.test_n1 > 0 || o.test_n2 > 0) {
    if (linear ? o.test_n1 < 1 : (o.test_n1 < 1 || o.test_n2 < 1))
      throw CommandError("the held-out draw needs a positive size for every class");
    const std::uint64_t test_seed = Rng(o.seed).substream("simulate/test").next_u64();
    const SimulatedData test = simulate_one(o, o.test_n1, o.test_n2, test_seed);
    const fs::path dir = o.out_dir / "test";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io::IoError("cannot create " + dir.string());
    write_dataset(test, dir, "test/", false, rec);
  }
  rec.finish();
}

void cmd_train(const TrainOptions& o) {
  RunRecorder rec("train", o.out_dir);
  const auto views = load_views(o.views, rec);
  TrainConfig cfg = resolve_config(o.config, TrainConfig{}, o.max_iters, o.seed, rec);
  std::optional<std::vector<Matrix>> laplacians;
  if (!o.graphs.empty()) cfg.use_laplacian = true;
  if (cfg.use_laplacian) {
    if (o.graphs.size() != views.size())
      throw CommandError("Laplacian smoothing needs one --graph file per view (" + std::to_string(views.size()) +
                         "), got " + std::to_string(o.graphs.size()));
    laplacians.emplace();
    for (std::size_t d = 0; d < views.size(); ++d) {
      GraphSpec g;
      try {
        g = parse_edge_list(io::read_text(o.graphs[d]), views[d].cols());
      } catch (const std::invalid_argument& e) {
        throw CommandError(o.graphs[d].string() + ": " + e.what());
      }
      rec.input(o.graphs[d]);
      laplacians->push_back(build_laplacian(g).normalized);
    }
    rec.config(cfg);
  }

  const auto standardized = standardize_views(views);
  MultiviewDataset data;
  data.views = standardized.views;
  const FitResult fit = stage1_train(data, cfg, laplacians);

  io::Checkpoint ckpt;
  ckpt.stage = 1;
  ckpt.config = cfg;
  ckpt.networks = fit.networks;
  ckpt.latent = fit.latent;
  ckpt.standardization = standardized.stats;
  ckpt.view_dims = dims_of(views);
  ckpt.converged = fit.converged;
  ckpt.iterations_run = fit.iterations_run;
  io::write_checkpoint(rec.path("checkpoint_stage1.json"), ckpt);
  rec.output("checkpoint_stage1.json");
  io::write_loss_trace(rec.path("loss_trace_stage1.csv"), fit.loss_trace);
  rec.output("loss_trace_stage1.csv");
  io::write_matrix_csv(rec.path("latent_stage1.csv"), fit.latent, "z");
  rec.output("latent_stage1.csv");
  rec.finish();
}

void cmd_rank(const RankOptions& o) {
  RunRecorder rec("rank", o.out_dir);
  const io::Checkpoint ckpt = io::read_checkpoint(o.checkpoint);
  rec.input(o.checkpoint);
  if (ckpt.stage != 1) throw CommandError("rank needs a stage-1 checkpoint, got stage " + std::to_string(ckpt.stage));
  const auto recons = reconstruct(ckpt.networks, ckpt.latent);
  FeatureSelection selection;
  if (!o.top.empty()) {
    if (o.r_fraction) throw CommandError("--r and --top are mutually exclusive");
    if (o.top.size() != recons.size())
      throw CommandError("--top must be given once per view (" + std::to_string(recons.size()) + ")");
    for (std::size_t d = 0; d < o.top.size(); ++d)
      if (o.top[d] < 1 || o.top[d] > ckpt.view_dims[d])
        throw CommandError("--top " + std::to_string(o.top[d]) + " is out of range for view " + std::to_string(d + 1));
    rec.parameters({{"top", o.top}});
    selection = rank_features_top_k(recons, o.top);
  } else {
    const double r = o.r_fraction.value_or(ckpt.config.r_fraction);
    if (!(r > 0 && r <= 1)) throw CommandError("--r must lie in (0, 1]");
    rec.parameters({{"r_fraction", r}});
    selection = rank_features(recons, r);
  }
  for (std::size_t d = 0; d < selection.indices.size(); ++d) {
    const std::string name = numbered("selection", d, ".txt");
    io::write_index_list(rec.path(name), selection.indices[d], ckpt.view_dims[d]);
    rec.output(name);
  }
  rec.finish();
}

void cmd_refit(const RefitOptions& o) {
  RunRecorder rec("refit", o.out_dir);
  const auto views = load_views(o.views, rec);
  const io::Checkpoint stage1 = io::read_checkpoint(o.checkpoint);
  rec.input(o.checkpoint);
  if (stage1.stage != 1) throw CommandError("refit needs a stage-1 checkpoint, got stage " + std::to_string(stage1.stage));
  check_dims(views, stage1.view_dims);
  const auto selection = load_selections(o.selections, stage1.view_dims, rec);
  const TrainConfig cfg = resolve_config(o.config, stage1.config, o.max_iters, o.seed, rec);
  std::optional<std::vector<int>> labels;
  if (o.labels) labels = load_labels(*o.labels, views.front().rows(), rec);

  MultiviewDataset data;
  data.views = apply_standardization(views, stage1.standardization);
  const FitResult fit = stage2_train(subset_views(data, selection), cfg);

  io::Checkpoint ckpt;
  ckpt.stage = 2;
  ckpt.config = cfg;
  ckpt.networks = fit.networks;
  ckpt.latent = fit.latent;
  ckpt.standardization = stage1.standardization;
  ckpt.view_dims = stage1.view_dims;
  ckpt.selection = selection;
  ckpt.converged = fit.converged;
  ckpt.iterations_run = fit.iterations_run;
  io::write_checkpoint(rec.path("checkpoint_stage2.json"), ckpt);
  rec.output("checkpoint_stage2.json");
  io::write_loss_trace(rec.path("loss_trace_stage2.csv"), fit.loss_trace);
  rec.output("loss_trace_stage2.csv");
  io::write_matrix_csv(rec.path("latent_stage2.csv"), fit.latent, "z");
  rec.output("latent_stage2.csv");
  if (labels) {
    SvmOptions so;
    so.C = cfg.svm_c;
    so.gamma = cfg.svm_gamma_or_default();
    io::write_svm(rec.path("svm_model.json"), svm_fit(fit.latent, *labels, so));
    rec.output("svm_model.json");
  }
  rec.finish();
}

void cmd_predict(const PredictOptions& o) {
  RunRecorder rec("predict", o.out_dir);
  const auto views = load_views(o.views, rec);
  const io::Checkpoint stage2 = io::read_checkpoint(o.checkpoint);
  rec.input(o.checkpoint);
  if (stage2.stage != 2 || !stage2.selection)
    throw CommandError("predict needs a stage-2 checkpoint, got stage " + std::to_string(stage2.stage));
  check_dims(views, stage2.view_dims);
  const TrainConfig cfg = resolve_config(std::nullopt, stage2.config, o.max_iters, o.seed, rec);
  std::optional<SvmModel> model;
  if (o.classifier) {
    model = io::read_svm(*o.classifier);
    rec.input(*o.classifier);
    if (model->num_features != stage2.networks.front().input_width())
      throw CommandError("classifier expects " + std::to_string(model->num_features) +
                         " latent components, the checkpoint has " +
                         std::to_string(stage2.networks.front().input_width()));
  }

  MultiviewDataset data;
  data.views = apply_standardization(views, stage2.standardization);
  const FitResult fit = stage3_infer(subset_views(data, *stage2.selection), stage2.networks, cfg);
  io::write_loss_trace(rec.path("loss_trace_stage3.csv"), fit.loss_trace);
  rec.output("loss_trace_stage3.csv");
  io::write_matrix_csv(rec.path("latent_stage3.csv"), fit.latent, "z");
  rec.output("latent_stage3.csv");
  if (model) {
    io::write_labels(rec.path("predictions.csv"), svm_predict(*model, fit.latent));
    rec.output("predictions.csv");
  }
  rec.finish();
}

void cmd_evaluate(const EvaluateOptions& o) {
  RunRecorder rec("evaluate", o.out_dir);
  std::vector<std::string> header, row;
  if (o.predictions.has_value() != o.actual.has_value())
    throw CommandError("--pred and --actual must be given together");
  if (o.predictions) {
    const auto pred = io::read_labels(*o.predictions);
    const auto actual = io::read_labels(*o.actual);
    rec.input(*o.predictions);
    rec.input(*o.actual);
    if (pred.size() != actual.size())
      throw CommandError("prediction and label files differ in length (" + std::to_string(pred.size()) + " vs " +
                         std::to_string(actual.size()) + ")");
    header.push_back("error_rate");
    row.push_back(format_percent(error_rate(pred, actual)));
  }
  if (o.selections.size() != o.truths.size())
    throw CommandError("need one --truth file per --selection file");
  if (!o.num_variables.empty() && o.num_variables.size() != o.truths.size())
    throw CommandError("--variables must be given once per view");
  for (std::size_t d = 0; d < o.selections.size(); ++d) {
    const auto sel = io::read_index_list(o.selections[d]);
    const auto truth = io::read_index_list(o.truths[d]);
    rec.input(o.selections[d]);
    rec.input(o.truths[d]);
    if (truth.indices.empty()) throw CommandError("truth file " + o.truths[d].string() + " lists no signals");
    Index p = 0;
    if (!o.num_variables.empty()) p = o.num_variables[d];
    else if (truth.num_variables) p = *truth.num_variables;
    else if (sel.num_variables) p = *sel.num_variables;
    else throw CommandError("cannot tell the number of variables for view " + std::to_string(d + 1));
    const auto m = selection_metrics(sel.indices, truth.indices, p);
    const std::string v = std::to_string(d + 1);
    header.insert(header.end(), {"tpr_" + v, "fpr_" + v, "f_" + v});
    row.insert(row.end(), {format_percent(m.tpr), format_percent(m.fpr), format_percent(m.f_measure)});
  }
  if (header.empty()) throw CommandError("nothing to evaluate: give --pred/--actual and/or --selection/--truth");
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += '\n';
  for (std::size_t i = 0; i < row.size(); ++i) text += (i ? "," : "") + row[i];
  text += '\n';
  io::write_text(rec.path("metrics.csv"), text);
  rec.output("metrics.csv");
  rec.finish();
}

void cmd_hypersearch(const HypersearchOptions& o) {
  RunRecorder rec("hypersearch", o.out_dir);
  const auto views = load_views(o.views, rec);
  const Index n = views.front().rows();
  const auto labels = load_labels(o.labels, n, rec);
  const SearchSpace space = io::read_space(o.space);
  rec.input(o.space);
  const TrainConfig base = resolve_config(o.config, TrainConfig{}, std::nullopt, std::nullopt, rec);
  rec.seed(o.seed);
  if (o.n_draws < 1) throw CommandError("--n-draws must be at least 1");
  if (n < 5) throw CommandError("hypersearch needs at least 5 samples");

  // 80/20 split by row order after a seeded shuffle.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng shuffle = Rng(o.seed).substream("hypersearch/split");
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);
  const auto n_valid = static_cast<std::size_t>(std::max<Index>(1, (n + 4) / 5));
  const std::vector<Index> train_rows(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_valid));
  const std::vector<Index> valid_rows(order.end() - static_cast<std::ptrdiff_t>(n_valid), order.end());
  const auto train_views = take_rows(views, train_rows);
  const auto valid_views = take_rows(views, valid_rows);
  std::vector<int> train_labels, valid_labels;
  for (Index i : train_rows) train_labels.push_back(labels[static_cast<std::size_t>(i)]);
  for (Index i : valid_rows) valid_labels.push_back(labels[static_cast<std::size_t>(i)]);
  if (std::set<int>(train_labels.begin(), train_labels.end()).size() < 2)
    throw CommandError("the training split contains a single class");

  std::vector<std::map<std::string, double>> drawn;
  std::vector<TrainConfig> configs;
  try {
    configs = random_search(space, o.n_draws, o.seed, base, dims_of(views), &drawn);
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  rec.parameters({{"n_draws", o.n_draws}, {"train_rows", train_rows.size()}, {"validation_rows", valid_rows.size()}});

  std::vector<double> errors(configs.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> failures(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        const auto outcome = run_pipeline(train_views, train_labels, valid_views, configs[i]);
        errors[i] = error_rate(outcome.predictions, valid_labels);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  unsigned workers = o.workers ? o.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, configs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<std::size_t> ranking(configs.size());
  std::iota(ranking.begin(), ranking.end(), std::size_t{0});
  std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) {
    const bool fa = std::isnan(errors[a]), fb = std::isnan(errors[b]);
    if (fa != fb) return fb;
    return !fa && errors[a] < errors[b];
  });

  std::string text = "rank,draw";
  for (const auto& [key, values] : space) text += "," + key;
  text += ",validation_error,status\n";
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    const std::size_t i = ranking[r];
    text += std::to_string(r + 1) + "," + std::to_string(i + 1);
    for (const auto& [key, values] : space) text += "," + io::format_double(drawn[i].at(key));
    if (std::isnan(errors[i])) text += ",NA,failed: " + csv_safe(failures[i]) + "\n";
    else text += "," + format_percent(errors[i]) + ",ok\n";
  }
  io::write_text(rec.path("leaderboard.csv"), text);
  rec.output("leaderboard.csv");
  rec.finish();
}

// ----------------------------------------------------------------- parsing

namespace {

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

template <typename T>
void set_if(CLI::Option* opt, const T& value, std::optional<T>& target) {
  if (opt->count() > 0) target = value;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interpretable multiview feature selection with deep decoders"};
  app.name("mvsel");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Generate a benchmark dataset");
  s->add_option("scenario", sim.scenario, "nonlinear, linear, scale_free, lattice or cluster")->required();
  s->add_option("--n1", sim.n1, "Class-1 size");
  s->add_option("--n2", sim.n2, "Class-2 size");
  s->add_option("--p1", sim.p1, "Variables in view 1");
  s->add_option("--p2", sim.p2, "Variables in view 2");
  s->add_option("--n-per-class", sim.n_per_class, "Class size for the linear scenario");
  s->add_option("--rho1", sim.rho1);
  s->add_option("--rho2", sim.rho2);
  s->add_option("--c", sim.c, "Class separation for the linear scenario");
  s->add_option("--test-n1", sim.test_n1, "Held-out class-1 size (per-class size for linear)");
  s->add_option("--test-n2", sim.test_n2, "Held-out class-2 size");
  s->add_option("--seed", sim.seed);
  s->add_option("--out-dir", sim.out_dir)->required();

  TrainOptions tr;
  int tr_iters = 0;
  std::uint64_t tr_seed = 0;
  std::string tr_config;
  auto* t = app.add_subcommand("train", "Stage 1: feature-selection training");
  t->add_option("--view", tr.views, "View CSV, once per view in order")->required();
  auto* t_config = t->add_option("--config", tr_config, "Run config JSON");
  t->add_option("--graph", tr.graphs, "Edge list per view; enables Laplacian smoothing");
  auto* t_iters = t->add_option("--max-iters", tr_iters);
  auto* t_seed = t->add_option("--seed", tr_seed);
  t->add_option("--out-dir", tr.out_dir)->required();

  RankOptions rk;
  double rk_r = 0;
  auto* r = app.add_subcommand("rank", "Select the top columns of each view");
  r->add_option("--checkpoint", rk.checkpoint, "Stage-1 checkpoint")->required();
  auto* r_r = r->add_option("--r", rk_r, "Fraction of columns to keep");
  r->add_option("--top", rk.top, "Number of columns to keep, once per view")->excludes(r_r);
  r->add_option("--out-dir", rk.out_dir)->required();

  RefitOptions rf;
  int rf_iters = 0;
  std::uint64_t rf_seed = 0;
  std::string rf_config, rf_labels;
  auto* f = app.add_subcommand("refit", "Stage 2: constrained re-fit on the selected columns");
  f->add_option("--view", rf.views)->required();
  f->add_option("--checkpoint", rf.checkpoint, "Stage-1 checkpoint")->required();
  f->add_option("--selection", rf.selections, "Selection file per view")->required();
  auto* f_config = f->add_option("--config", rf_config);
  auto* f_labels = f->add_option("--labels", rf_labels, "Class labels; fits an SVM on the latent code");
  auto* f_iters = f->add_option("--max-iters", rf_iters);
  auto* f_seed = f->add_option("--seed", rf_seed);
  f->add_option("--out-dir", rf.out_dir)->required();

  PredictOptions pr;
  int pr_iters = 0;
  std::uint64_t pr_seed = 0;
  std::string pr_classifier;
  auto* p = app.add_subcommand("predict", "Stage 3: infer latent codes for new samples");
  p->add_option("--view", pr.views)->required();
  p->add_option("--checkpoint", pr.checkpoint, "Stage-2 checkpoint")->required();
  auto* p_classifier = p->add_option("--classifier", pr_classifier, "SVM model written by refit");
  auto* p_iters = p->add_option("--max-iters", pr_iters);
  auto* p_seed = p->add_option("--seed", pr_seed);
  p->add_option("--out-dir", pr.out_dir)->required();

  EvaluateOptions ev;
  std::string ev_pred, ev_actual;
  auto* e = app.add_subcommand("evaluate", "Error rate and selection metrics as percentages");
  auto* e_pred = e->add_option("--pred", ev_pred);
  auto* e_actual = e->add_option("--actual", ev_actual);
  e->add_option("--selection", ev.selections);
  e->add_option("--truth", ev.truths);
  e->add_option("--variables", ev.num_variables, "Variables per view when truth files lack a header");
  e->add_option("--out-dir", ev.out_dir)->required();

  HypersearchOptions hs;
  std::string hs_config;
  auto* h = app.add_subcommand("hypersearch", "Random search over a hyperparameter grid");
  h->add_option("--view", hs.views)->required();
  h->add_option("--labels", hs.labels)->required();
  h->add_option("--space", hs.space, "Search space JSON")->required();
  auto* h_config = h->add_option("--config", hs_config, "Base config JSON");
  h->add_option("--n-draws", hs.n_draws);
  h->add_option("--seed", hs.seed);
  h->add_option("--workers", hs.workers, "Concurrent candidates (0 = available cores)");
  h->add_option("--out-dir", hs.out_dir)->required();

  std::vector<std::string> argv_store{"mvsel"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    if (ex.get_exit_code() == 0) return app.exit(ex, out, err);
    err << "mvsel: error: " << one_line(ex.what()) << '\n';
    return ex.get_exit_code();
  }

  try {
    if (s->parsed()) {
      cmd_simulate(sim);
    } else if (t->parsed()) {
      if (t_config->count()) tr.config = tr_config;
      set_if(t_iters, tr_iters, tr.max_iters);
      set_if(t_seed, tr_seed, tr.seed);
      cmd_train(tr);
    } else if (r->parsed()) {
      set_if(r_r, rk_r, rk.r_fraction);
      cmd_rank(rk);
    } else if (f->parsed()) {
      if (f_config->count()) rf.config = rf_config;
      if (f_labels->count()) rf.labels = rf_labels;
      set_if(f_iters, rf_iters, rf.max_iters);
      set_if(f_seed, rf_seed, rf.seed);
      cmd_refit(rf);
    } else if (p->parsed()) {
      if (p_classifier->count()) pr.classifier = pr_classifier;
      set_if(p_iters, pr_iters, pr.max_iters);
      set_if(p_seed, pr_seed, pr.seed);
      cmd_predict(pr);
    } else if (e->parsed()) {
      if (e_pred->count()) ev.predictions = ev_pred;
      if (e_actual->count()) ev.actual = ev_actual;
      cmd_evaluate(ev);
    } else if (h->parsed()) {
      if (h_config->count()) hs.config = hs_config;
      cmd_hypersearch(hs);
    }
  } catch (const std::exception& ex) {
    err << "mvsel: error: " << one_line(ex.what()) << '\n';
    return 1;
  }
  return 0;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mvsel::cli
