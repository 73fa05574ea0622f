// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

// esr: train, evaluate, sweep, explain, count and synthesize.

#include "esr/gradcam.hpp"
#include "esr/metrics.hpp"
#include "esr/model_io.hpp"
#include "esr/run_config.hpp"
#include "esr/synth.hpp"
#include "esr/training.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace esr;

namespace {

using Real = float;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<int> level;
  std::optional<int> branches;
  std::optional<int> epochs;
  std::optional<int> batch;
  bool deterministic = false;
  std::optional<int> threads;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--strategy", o.strategy, "Training strategy")
      ->check(CLI::IsMember({"fixed", "varied", "frozen", "interleaved", "bagging"}));
  cmd->add_option("--level", o.level, "Branching level")->check(CLI::PositiveNumber);
  cmd->add_option("--branches", o.branches, "Ensemble size")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", o.epochs, "Epochs per branch")->check(CLI::PositiveNumber);
  cmd->add_option("--batch", o.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  cmd->add_flag("--deterministic", o.deterministic, "Reproducible logs (wall time written as 0)");
  cmd->add_option("--threads", o.threads, "Worker threads (default: $ESR_NET_THREADS or 1)")
      ->check(CLI::PositiveNumber);
}

int resolve_threads(const Overrides& o) {
  if (o.threads) return *o.threads;
  if (const char* env = std::getenv("ESR_NET_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("ESR_NET_THREADS must be a positive integer, got '" + std::string(env) + "'");
  }
  return 1;
}

RunConfig resolve_config(const std::string& path, const Overrides& o) {
  RunConfig rc = load_run_config(path);
  auto& t = rc.training;
  if (o.seed) t.seed = *o.seed;
  if (o.strategy) {
    const double lr = t.strategy.lr_new_branch;
    t.strategy = TrainingStrategy::from_variant(strategy_from_string(*o.strategy), lr);
  }
  if (o.level) rc.architecture.branching_level = *o.level;
  if (o.branches) rc.branches = *o.branches;
  if (o.epochs) t.epochs_per_branch = *o.epochs;
  if (o.batch) t.batch_size = *o.batch;
  if (o.deterministic) t.deterministic = true;
  t.threads = resolve_threads(o);
  rc.validate();
  return rc;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const auto probe = dir / ".write-test";
  std::ofstream f(probe);
  if (!f) throw std::runtime_error("output directory " + dir.string() + " is not writable");
  f.close();
  fs::remove(probe);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct Splits {
  LabeledSet<Real> train, validation, test;
};

Splits make_splits(const DatasetIndex& index, const RunConfig& rc, int trial,
                   const std::optional<DatasetIndex>& val_index) {
  Splits s;
  const auto pre = rc.preprocess();
  if (val_index) {
    s.train = make_labeled_set<Real>(index, index.all_indices(), pre);
    s.validation = make_labeled_set<Real>(*val_index, val_index->all_indices(), pre);
    s.test = s.validation;
    // Fold tags for leave-one-fold-out come from subjects when available.
    try {
      const auto plan = make_subject_folds(index, rc.folds);
      s.train = make_labeled_set<Real>(index, index.all_indices(), pre, &plan);
    } catch (const std::exception&) {
    }
    return s;
  }
  const auto plan = make_subject_folds(index, rc.folds);
  const auto tr = plan.trial(trial, rc.train_folds);
  s.train = make_labeled_set<Real>(index, plan.samples_of(tr.train), pre, &plan);
  const std::vector<int> v{tr.validation}, t{tr.test};
  s.validation = make_labeled_set<Real>(index, plan.samples_of(v), pre, &plan);
  s.test = make_labeled_set<Real>(index, plan.samples_of(t), pre, &plan);
  return s;
}

struct TrainOutcome {
  TrainingLog log;
  MetricsReport report;
  Index params = 0;
  std::vector<EsrModel<Real>> models;  // one ESR, or the traditional-ensemble members
};

TrainOutcome train_and_evaluate(const RunConfig& rc, const Splits& s, const std::optional<fs::path>& ckpt_dir) {
  TrainOutcome o;
  TrainConfig tc = rc.training;
  tc.checkpoint_dir = ckpt_dir;
  PredictOptions po;
  po.threads = tc.threads;
  po.vote = rc.vote;
  const auto variant = tc.strategy.variant;
  if (variant == StrategyVariant::TraditionalBagging) {
    std::vector<TrainingLog> logs;
    o.models = train_traditional_ensemble(rc.architecture, s.train, s.validation, tc, rc.branches, &logs);
    for (std::size_t i = 0; i < logs.size(); ++i) {
      for (auto r : logs[i].records) {
        r.branch = static_cast<int>(i);
        o.log.records.push_back(r);
      }
    }
    std::vector<std::vector<Prediction>> preds;
    for (auto& m : o.models) {
      preds.push_back(predict(m, s.test, po));
      o.params += m.count_parameters().total();
    }
    const auto combined = combine_members(preds, rc.vote);
    o.report = evaluate_predictions(combined, s.test.labels, affect_targets(s.test), s.test.num_classes);
    return o;
  }
  EsrModel<Real> model(rc.architecture, tc.seed);
  if (variant == StrategyVariant::Interleaved) {
    while (model.ensemble_size() < rc.branches) model.add_branch();
    o.log = train_interleaved(model, s.train, s.validation, tc);
  } else {
    o.log = train_esr(model, s.train, s.validation, tc, rc.branches);
  }
  o.report = evaluate(model, s.test, po);
  o.params = model.count_parameters().total();
  o.models.push_back(std::move(model));
  return o;
}

std::optional<DatasetIndex> load_optional(const std::string& root, const std::string& manifest, int classes) {
  if (manifest.empty()) return std::nullopt;
  return load_dataset(root, fs::path(root) / manifest, classes);
}

DatasetIndex load_required(const std::string& root, const std::string& manifest, int classes) {
  if (root.empty()) throw std::invalid_argument("--data is required");
  return load_dataset(root, fs::path(root) / manifest, classes);
}

// ---------------------------------------------------------------------------

struct DataArgs {
  std::string config;
  std::string data;
  std::string manifest = "manifest.csv";
  std::string val_manifest;
  std::string out = "esr-out";
  int trial = 0;
};

int cmd_train(const DataArgs& a, const Overrides& o) {
  const RunConfig rc = resolve_config(a.config, o);
  const fs::path out = a.out;
  ensure_dir(out);
  const auto index = load_required(a.data, a.manifest, rc.classes);
  const auto val = load_optional(a.data, a.val_manifest, rc.classes);
  std::cout << format_histogram(index) << '\n';
  const auto splits = make_splits(index, rc, a.trial, val);
  std::cout << "train " << splits.train.size() << ", validation " << splits.validation.size() << ", test "
            << splits.test.size() << " samples\n";
  auto outcome = train_and_evaluate(rc, splits, out / "checkpoints");
  write_text(out / "run_config.json", run_config_to_json(rc) + "\n");
  outcome.log.write_csv(out / "train_log.csv");
  if (outcome.models.size() == 1) {
    save_checkpoint(out / "model.ckpt", outcome.models[0]);
  } else {
    for (std::size_t i = 0; i < outcome.models.size(); ++i) {
      save_checkpoint(out / ("member" + std::to_string(i) + ".ckpt"), outcome.models[i]);
    }
  }
  write_metrics_csv(out / "metrics.csv", outcome.report);
  write_text(out / "report.txt", format_report(outcome.report));
  write_confusion_pgm(out / "confusion.pgm", outcome.report);
  std::cout << format_report(outcome.report);
  std::cout << "parameters " << outcome.params << "\nwrote " << out.string() << '\n';
  return 0;
}

int cmd_eval(const std::vector<std::string>& checkpoints, const DataArgs& a, const Overrides& o,
             const std::string& vote) {
  if (checkpoints.empty()) throw std::invalid_argument("--checkpoint is required");
  const fs::path out = a.out;
  ensure_dir(out);
  std::vector<EsrModel<Real>> models;
  for (const auto& c : checkpoints) models.push_back(load_checkpoint<Real>(c));
  const auto& arch = models[0].config();
  for (const auto& m : models) {
    if (m.config().input != arch.input || m.config().num_classes != arch.num_classes) {
      throw std::invalid_argument("checkpoints disagree on input shape or class count");
    }
  }
  Standardization standard;
  if (!a.config.empty()) standard = load_run_config(a.config).standardization;
  const auto index = load_required(a.data, a.manifest, arch.num_classes);
  PreprocessConfig pre{arch.input.channels, arch.input.height, arch.input.width, standard};
  const auto set = make_labeled_set<Real>(index, index.all_indices(), pre);
  PredictOptions po;
  po.threads = resolve_threads(o);
  po.vote = vote == "mean" ? VoteRule::MeanProbability : VoteRule::Plurality;
  std::vector<std::vector<Prediction>> preds;
  for (auto& m : models) preds.push_back(predict(m, set, po));
  const auto combined = preds.size() == 1 ? preds[0] : combine_members(preds, po.vote);
  const auto report = evaluate_predictions(combined, set.labels, affect_targets(set), set.num_classes);
  write_metrics_csv(out / "metrics.csv", report);
  write_text(out / "report.txt", format_report(report));
  write_confusion_pgm(out / "confusion.pgm", report);
  std::cout << format_report(report) << "wrote " << out.string() << '\n';
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_sweep(const DataArgs& a, Overrides o, std::optional<int> level_min, std::optional<int> level_max,
              const std::string& strategies, int trials) {
  o.level.reset();
  RunConfig base = resolve_config(a.config, o);
  const int stages = base.architecture.stage_count();
  const int lo = level_min.value_or(1), hi = level_max.value_or(stages);
  if (lo < 1 || hi > stages || lo > hi) {
    throw std::invalid_argument("level range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                "] is outside [1, " + std::to_string(stages) + "] for this architecture");
  }
  if (trials < 1) throw std::invalid_argument("--trials must be positive");
  auto names = split_list(strategies);
  if (names.empty()) names.push_back(to_string(base.training.strategy.variant));
  for (const auto& n : names) strategy_from_string(n);
  const fs::path out = a.out;
  ensure_dir(out);
  const auto index = load_required(a.data, a.manifest, base.classes);
  const auto val = load_optional(a.data, a.val_manifest, base.classes);
  if (!val && trials > base.folds) throw std::invalid_argument("more trials than folds");

  struct Job {
    int level;
    std::string strategy;
    int trial;
    Index params = 0;
    double accuracy = 0.0;
    double wall = 0.0;
  };
  std::vector<Job> jobs;
  for (int l = lo; l <= hi; ++l)
    for (const auto& s : names)
      for (int t = 0; t < trials; ++t) jobs.push_back({l, s, t});

  const int threads = base.training.threads;
  std::atomic<std::size_t> next{0};
  std::mutex io;
  std::exception_ptr failure;
  auto worker = [&] {
    try {
      for (std::size_t k = next++; k < jobs.size(); k = next++) {
        auto& job = jobs[k];
        RunConfig rc = base;
        rc.architecture.branching_level = job.level;
        rc.training.threads = 1;
        rc.training.strategy =
            TrainingStrategy::from_variant(strategy_from_string(job.strategy), base.training.strategy.lr_new_branch);
        rc.training.seed = base.training.seed + static_cast<std::uint64_t>(job.trial);
        rc.validate();
        const auto t0 = std::chrono::steady_clock::now();
        const auto splits = make_splits(index, rc, job.trial, val);
        const auto outcome = train_and_evaluate(rc, splits, std::nullopt);
        job.params = outcome.params;
        job.accuracy = outcome.report.accuracy;
        job.wall = rc.training.deterministic
                       ? 0.0
                       : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::lock_guard lock(io);
        std::cout << "level " << job.level << " " << job.strategy << " trial " << job.trial << ": accuracy "
                  << job.accuracy << " (" << job.params << " parameters)\n";
      }
    } catch (...) {
      std::lock_guard lock(io);
      if (!failure) failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, threads); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::ofstream rows(out / "sweep.csv", std::ios::binary);
  rows.precision(17);
  rows << "level,strategy,trial,params,ensemble_accuracy,wall_time_s\n";
  for (const auto& j : jobs) {
    rows << j.level << ',' << j.strategy << ',' << j.trial << ',' << j.params << ',' << j.accuracy << ','
         << j.wall << '\n';
  }
  std::ofstream summary(out / "sweep_summary.csv", std::ios::binary);
  summary.precision(17);
  summary << "level,strategy,trials,params,mean_accuracy,std_accuracy\n";
  std::cout << "\nlevel  strategy      params  accuracy\n";
  for (int l = lo; l <= hi; ++l) {
    for (const auto& s : names) {
      std::vector<double> acc;
      Index params = 0;
      for (const auto& j : jobs)
        if (j.level == l && j.strategy == s) {
          acc.push_back(j.accuracy);
          params = j.params;
        }
      double mean = 0, var = 0;
      for (double x : acc) mean += x / double(acc.size());
      for (double x : acc) var += (x - mean) * (x - mean);
      const double sd = acc.size() > 1 ? std::sqrt(var / double(acc.size() - 1)) : 0.0;
      summary << l << ',' << s << ',' << acc.size() << ',' << params << ',' << mean << ',' << sd << '\n';
      std::cout << std::setw(5) << l << "  " << std::left << std::setw(12) << s << std::right << std::setw(8)
                << params << "  " << std::fixed << std::setprecision(4) << mean << " +- " << sd << '\n'
                << std::defaultfloat;
    }
  }
  std::cout << "wrote " << (out / "sweep.csv").string() << '\n';
  return 0;
}

int cmd_explain(const std::string& checkpoint, const std::string& config, const std::string& image_path,
                std::optional<int> target, std::optional<int> layer, int branch, const std::string& out_dir,
                const Overrides& o) {
  if (image_path.empty()) throw std::invalid_argument("--image is required");
  std::optional<EsrModel<Real>> model;
  Standardization standard;
  if (!checkpoint.empty()) {
    model.emplace(load_checkpoint<Real>(checkpoint));
    if (!config.empty()) standard = load_run_config(config).standardization;
  } else if (!config.empty()) {
    // Untrained model: the map before any weight update.
    const RunConfig rc = resolve_config(config, o);
    standard = rc.standardization;
    model.emplace(rc.architecture, rc.training.seed);
    for (int b = 0; b < rc.branches; ++b) model->add_branch();
  } else {
    throw std::invalid_argument("--checkpoint or --config is required");
  }
  const fs::path out = out_dir;
  ensure_dir(out);
  const auto& arch = model->config();
  const Image img = read_image(image_path);
  const PreprocessConfig pre{arch.input.channels, arch.input.height, arch.input.width, standard};
  const auto x = preprocess<Real>(img, pre);
  int cls = 0;
  if (target) {
    cls = *target;
  } else {
    LabeledSet<Real> one;
    one.num_classes = arch.num_classes;
    one.images.push_back(x);
    one.labels.push_back(-1);
    one.affect.push_back({Real(NAN), Real(NAN)});
    one.groups.push_back(-1);
    cls = predict(*model, one).front().ensemble_class;
  }
  std::vector<int> branches;
  if (branch >= 0) {
    branches.push_back(branch);
  } else {
    for (int b = 0; b < model->ensemble_size(); ++b) branches.push_back(b);
  }
  std::vector<Eigen::MatrixXd> maps;
  const Image base = img.width == arch.input.width && img.height == arch.input.height
                         ? img
                         : resize_bilinear(img, arch.input.width, arch.input.height);
  for (int b : branches) {
    const auto m = grad_cam(*model, b, x, cls, layer);
    maps.push_back(m.values);
    write_image(out / ("branch" + std::to_string(b) + "_heatmap.png"), render_heatmap(m.values, base));
    write_map_csv(out / ("branch" + std::to_string(b) + "_map.csv"), m.values);
    std::cout << "branch " << b << ": class " << cls << ", layer " << m.layer << " ("
              << describe(arch.layers[static_cast<std::size_t>(m.layer)]) << "), map " << m.values.rows() << "x"
              << m.values.cols() << ", max " << m.values.maxCoeff() << '\n';
  }
  if (maps.size() >= 2) std::cout << "diversity " << diversity_score(maps) << '\n';
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

ArchitectureConfig architecture_for_count(const std::string& config, const std::string& arch,
                                          const std::string& preset, int* branches) {
  if (!config.empty()) {
    const auto rc = load_run_config(config);
    if (branches && *branches <= 0) *branches = rc.branches;
    return rc.architecture;
  }
  if (!arch.empty()) return load_architecture(arch);
  if (preset == "lab") return lab_architecture();
  if (preset == "wild") return wild_architecture();
  if (preset == "desk") return desk_architecture();
  throw std::invalid_argument("one of --config, --arch or --preset {lab,wild,desk} is required");
}

int cmd_count(const std::string& config, const std::string& arch_path, const std::string& preset,
              std::optional<int> branches_opt, std::optional<int> level, bool affect, bool search) {
  if (search) {
    const auto hits = search_lab_architecture();
    std::cout << "lab topology candidates matching 131208 / 524832 / 355104 / 243936: " << hits.size() << '\n';
    for (const auto& h : hits) {
      std::cout << "  stage 1: " << h.first_filters << " filters " << h.first_kernel << "x" << h.first_kernel
                << "; stages 2-5: " << h.filters << " filters " << h.kernel << "x" << h.kernel
                << (h.batchnorm ? "; batch norm" : "; no batch norm") << '\n';
    }
    if (config.empty() && arch_path.empty() && preset.empty()) return hits.empty() ? 1 : 0;
  }
  int branches = branches_opt.value_or(0);
  ArchitectureConfig arch = architecture_for_count(config, arch_path, preset, &branches);
  if (branches <= 0) branches = 4;
  if (level) arch.branching_level = *level;
  arch.validate();
  const Index single = count_parameters(arch.with_level(arch.stage_count()), 1, affect).total();
  const Index te = static_cast<Index>(branches) * single;
  std::cout << arch.name << ": input " << arch.input.channels << "x" << arch.input.height << "x"
            << arch.input.width << ", " << arch.stage_count() << " stages, " << arch.num_classes << " classes\n";
  std::cout << "single network                 " << std::setw(10) << single << '\n';
  std::cout << "traditional ensemble (" << branches << ")       " << std::setw(10) << te << '\n';
  for (int l = 1; l <= arch.stage_count(); ++l) {
    const auto c = count_parameters(arch.with_level(l), branches, affect);
    const double reduction = 100.0 * (1.0 - double(c.total()) / double(te));
    std::cout << "ESR-" << branches << " level " << l << "                " << std::setw(10) << c.total()
              << "   shared " << std::setw(9) << c.shared << "   per branch " << std::setw(9)
              << c.branches.front() << "   " << std::fixed << std::setprecision(1) << reduction
              << "% fewer than the traditional ensemble" << std::defaultfloat << '\n';
  }
  const auto c = count_parameters(arch, branches, affect);
  std::cout << "selected level " << arch.branching_level << ": total " << c.total() << " = shared " << c.shared
            << " + " << branches << " x " << c.branches.front();
  if (affect) std::cout << " + " << branches << " x " << c.affect_heads.front() << " (affect heads)";
  std::cout << '\n';
  return 0;
}

int cmd_synth(SynthConfig sc, const std::string& out) {
  if (out.empty()) throw std::invalid_argument("--out is required");
  const auto index = generate_synthetic(sc);
  write_dataset(index, out);
  std::cout << "wrote " << index.size() << " images of " << sc.subjects << " subjects to " << out << '\n'
            << format_histogram(index) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensembles with shared representations for facial expression recognition"};
  app.require_subcommand(1);

  DataArgs data;
  Overrides overrides;
  auto add_data = [&](CLI::App* cmd, bool manifests = true) {
    cmd->add_option("--config", data.config, "Run configuration (JSON)");
    cmd->add_option("--data", data.data, "Dataset root directory");
    if (manifests) {
      cmd->add_option("--manifest", data.manifest, "Manifest CSV relative to --data")->capture_default_str();
      cmd->add_option("--val-manifest", data.val_manifest,
                      "Separate validation/test manifest; disables fold splitting");
    }
    cmd->add_option("--out", data.out, "Output directory")->capture_default_str();
  };

  auto* train = app.add_subcommand("train", "Train an ESR or a traditional ensemble on one trial");
  add_data(train);
  train->add_option("--trial", data.trial, "Cross-validation trial (test fold)")->capture_default_str();
  add_overrides(train, overrides);
  train->get_option("--config")->required();

  std::vector<std::string> checkpoints;
  std::string vote = "plurality";
  auto* eval = app.add_subcommand("eval", "Evaluate checkpoints on a manifest");
  add_data(eval);
  eval->add_option("--checkpoint", checkpoints, "Checkpoint; repeat to combine independent networks")
      ->required();
  eval->add_option("--vote", vote, "Ensemble rule")->check(CLI::IsMember({"plurality", "mean"}));
  eval->add_option("--threads", overrides.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::optional<int> level_min, level_max;
  std::string strategies;
  int trials = 1;
  auto* sweep = app.add_subcommand("sweep", "Accuracy and size over branching levels and strategies");
  add_data(sweep);
  add_overrides(sweep, overrides);
  sweep->add_option("--level-min", level_min, "First branching level");
  sweep->add_option("--level-max", level_max, "Last branching level");
  sweep->add_option("--strategies", strategies, "Comma-separated strategies (default: from config)");
  sweep->add_option("--trials", trials, "Trials per cell (folds 0..n-1)")->capture_default_str();
  sweep->get_option("--config")->required();

  std::string checkpoint, image;
  std::optional<int> target, layer;
  int branch = -1;
  auto* explain = app.add_subcommand("explain", "Grad-CAM heat maps per branch");
  explain->add_option("--checkpoint", checkpoint, "Trained checkpoint");
  explain->add_option("--config", data.config, "Run configuration; without a checkpoint, an untrained model");
  explain->add_option("--image", image, "Input image (PGM/PPM/PNG)")->required();
  explain->add_option("--class", target, "Target class (default: ensemble prediction)");
  explain->add_option("--layer", layer, "Layer index (default: last spatial layer)");
  explain->add_option("--branch", branch, "Branch index (default: all)");
  explain->add_option("--out", data.out, "Output directory")->capture_default_str();
  explain->add_option("--seed", overrides.seed, "Seed of the untrained model");
  explain->add_option("--branches", overrides.branches, "Branches of the untrained model");

  std::string arch_path, preset;
  std::optional<int> count_branches, count_level;
  bool affect = false, search = false;
  auto* count = app.add_subcommand("count", "Parameter breakdown per part and branching level");
  count->add_option("--config", data.config, "Run configuration");
  count->add_option("--arch", arch_path, "Architecture file");
  count->add_option("--preset", preset, "Built-in architecture")->check(CLI::IsMember({"lab", "wild", "desk"}));
  count->add_option("--branches", count_branches, "Ensemble size")->check(CLI::PositiveNumber);
  count->add_option("--level", count_level, "Branching level")->check(CLI::PositiveNumber);
  count->add_flag("--affect", affect, "Include arousal/valence heads");
  count->add_flag("--search", search, "Run the lab architecture search");

  SynthConfig sc;
  std::string synth_out;
  bool no_affect = false;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic expression dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--classes", sc.classes, "Expression classes (2-8)")->capture_default_str();
  synth->add_option("--subjects", sc.subjects, "Subjects")->capture_default_str();
  synth->add_option("--per-subject", sc.samples_per_subject, "Images per subject")->capture_default_str();
  synth->add_option("--size", sc.size, "Image side in pixels")->capture_default_str();
  synth->add_option("--seed", sc.seed, "Random seed")->capture_default_str();
  synth->add_option("--noise", sc.noise, "Pixel noise sigma")->capture_default_str();
  synth->add_option("--variation", sc.subject_variation, "Identity variation scale")->capture_default_str();
  synth->add_flag("--no-affect", no_affect, "Leave arousal/valence empty");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(data, overrides);
    if (*eval) return cmd_eval(checkpoints, data, overrides, vote);
    if (*sweep) return cmd_sweep(data, overrides, level_min, level_max, strategies, trials);
    if (*explain) return cmd_explain(checkpoint, data.config, image, target, layer, branch, data.out, overrides);
    if (*count) return cmd_count(data.config, arch_path, preset, count_branches, count_level, affect, search);
    if (*synth) {
      sc.affect = !no_affect;
      return cmd_synth(sc, synth_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
