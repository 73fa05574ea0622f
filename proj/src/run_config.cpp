// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/run_config.hpp"

#include "esr/model_io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace esr {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  bool ok = false;
  if constexpr (std::is_same_v<T, bool>) {
    ok = v.is_boolean();
  } else if constexpr (std::is_integral_v<T>) {
    ok = v.is_number_integer();
  } else if constexpr (std::is_floating_point_v<T>) {
    ok = v.is_number();
  } else {
    ok = v.is_string();
  }
  if (!ok) throw ConfigError(where + ": '" + key + "' has the wrong type");
  dst = v.get<T>();
}

std::vector<double> read_reals(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  std::vector<double> out;
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": '" + key + "' must be a number or list");
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(where + ": '" + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

AugmentationConfig parse_augmentation(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "standard") return AugmentationConfig::standard();
    if (s == "none") return {};
    throw ConfigError("augmentation: expected 'standard', 'none' or an object");
  }
  const std::string where = "training.augmentation";
  check_keys(j, {"brightness", "contrast", "flip_probability", "max_rotation_deg", "translation", "rescale"},
             where);
  AugmentationConfig a;
  read(j, "brightness", a.brightness, where);
  read(j, "contrast", a.contrast, where);
  read(j, "flip_probability", a.flip_probability, where);
  read(j, "max_rotation_deg", a.max_rotation_deg, where);
  read(j, "translation", a.translation, where);
  read(j, "rescale", a.rescale, where);
  try {
    a.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return a;
}

}  // namespace

std::string to_string(SubsetPolicy p) {
  switch (p) {
    case SubsetPolicy::All: return "all";
    case SubsetPolicy::LeaveOneFoldOut: return "leave-one-fold-out";
    case SubsetPolicy::ClassBalanced: return "class-balanced";
    case SubsetPolicy::QuadrantBalanced: return "quadrant-balanced";
  }
  return "?";
}

SubsetPolicy subset_policy_from_string(const std::string& name) {
  for (auto p : {SubsetPolicy::All, SubsetPolicy::LeaveOneFoldOut, SubsetPolicy::ClassBalanced,
                 SubsetPolicy::QuadrantBalanced}) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown subset policy '" + name +
                    "' (expected all, leave-one-fold-out, class-balanced or quadrant-balanced)");
}

PreprocessConfig RunConfig::preprocess() const {
  PreprocessConfig p;
  p.channels = architecture.input.channels;
  p.height = architecture.input.height;
  p.width = architecture.input.width;
  p.standardization = standardization;
  return p;
}

void RunConfig::validate() const {
  architecture.validate();
  if (branches < 1) throw ConfigError("branches must be positive");
  if (classes != architecture.num_classes) {
    throw ConfigError("data.classes (" + std::to_string(classes) + ") differs from architecture num_classes (" +
                      std::to_string(architecture.num_classes) + ")");
  }
  if (folds < 3) throw ConfigError("data.folds must be at least 3");
  if (train_folds < 1 || train_folds > folds - 2) throw ConfigError("data.train_folds must be in [1, folds-2]");
  try {
    training.validate();
    training.strategy.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("training: ") + e.what());
  }
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("run config: malformed JSON: ") + e.what());
  }
  check_keys(j, {"architecture", "branches", "training", "data", "vote"}, "run config");
  RunConfig rc;
  if (!j.contains("architecture")) throw ConfigError("run config: missing 'architecture'");
  const auto& arch = j.at("architecture");
  if (arch.is_string()) {
    rc.architecture = load_architecture(base_dir / arch.get<std::string>());
  } else {
    rc.architecture = architecture_from_json(arch.dump());
  }
  rc.classes = rc.architecture.num_classes;
  read(j, "branches", rc.branches, "run config");
  if (j.contains("vote")) {
    std::string v;
    read(j, "vote", v, "run config");
    if (v == "plurality") {
      rc.vote = VoteRule::Plurality;
    } else if (v == "mean") {
      rc.vote = VoteRule::MeanProbability;
    } else {
      throw ConfigError("run config: vote must be 'plurality' or 'mean'");
    }
  }

  if (j.contains("training")) {
    const auto& t = j.at("training");
    const std::string where = "training";
    check_keys(t,
               {"epochs_per_branch", "batch_size", "momentum", "strategy", "lr", "lr_trained_branches",
                "lr_shared", "schedule", "subset", "subset_cap", "augmentation", "seed", "deterministic",
                "early_stop", "early_stop_delta"},
               where);
    auto& tc = rc.training;
    read(t, "epochs_per_branch", tc.epochs_per_branch, where);
    read(t, "batch_size", tc.batch_size, where);
    read(t, "momentum", tc.momentum, where);
    double lr = tc.schedule.initial;
    read(t, "lr", lr, where);
    std::string strategy = "fixed";
    read(t, "strategy", strategy, where);
    try {
      tc.strategy = TrainingStrategy::from_variant(strategy_from_string(strategy), lr);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
    read(t, "lr_trained_branches", tc.strategy.lr_trained_branches, where);
    read(t, "lr_shared", tc.strategy.lr_shared, where);
    tc.schedule.initial = lr;
    if (t.contains("schedule")) {
      const auto& s = t.at("schedule");
      check_keys(s, {"initial", "decay_factor", "decay_every"}, "training.schedule");
      read(s, "initial", tc.schedule.initial, "training.schedule");
      read(s, "decay_factor", tc.schedule.decay_factor, "training.schedule");
      read(s, "decay_every", tc.schedule.decay_every, "training.schedule");
    }
    if (t.contains("subset")) {
      std::string s;
      read(t, "subset", s, where);
      tc.subset = subset_policy_from_string(s);
    }
    read(t, "subset_cap", tc.subset_cap, where);
    if (t.contains("augmentation")) tc.augmentation = parse_augmentation(t.at("augmentation"));
    std::int64_t seed = 0;
    if (t.contains("seed")) {
      read(t, "seed", seed, where);
      if (seed < 0) throw ConfigError("training: seed must be nonnegative");
      tc.seed = static_cast<std::uint64_t>(seed);
    }
    read(t, "deterministic", tc.deterministic, where);
    read(t, "early_stop", tc.early_stop, where);
    read(t, "early_stop_delta", tc.early_stop_delta, where);
  }

  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d, {"classes", "folds", "train_folds", "mean", "std"}, "data");
    read(d, "classes", rc.classes, "data");
    read(d, "folds", rc.folds, "data");
    read(d, "train_folds", rc.train_folds, "data");
    if (d.contains("mean")) rc.standardization.mean = read_reals(d, "mean", "data");
    if (d.contains("std")) rc.standardization.stddev = read_reals(d, "std", "data");
    for (double s : rc.standardization.stddev)
      if (!(s > 0.0)) throw ConfigError("data: std entries must be positive");
  }
  rc.validate();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string run_config_to_json(const RunConfig& rc) {
  json j;
  j["architecture"] = json::parse(architecture_to_json(rc.architecture));
  j["branches"] = rc.branches;
  const auto& t = rc.training;
  j["training"] = {
      {"epochs_per_branch", t.epochs_per_branch},
      {"batch_size", t.batch_size},
      {"momentum", t.momentum},
      {"strategy", to_string(t.strategy.variant)},
      {"lr", t.strategy.lr_new_branch},
      {"lr_shared", t.strategy.lr_shared},
      {"lr_trained_branches", t.strategy.lr_trained_branches},
      {"schedule",
       {{"initial", t.schedule.initial}, {"decay_factor", t.schedule.decay_factor}, {"decay_every", t.schedule.decay_every}}},
      {"subset", to_string(t.subset)},
      {"subset_cap", t.subset_cap},
      {"augmentation",
       {{"brightness", t.augmentation.brightness},
        {"contrast", t.augmentation.contrast},
        {"flip_probability", t.augmentation.flip_probability},
        {"max_rotation_deg", t.augmentation.max_rotation_deg},
        {"translation", t.augmentation.translation},
        {"rescale", t.augmentation.rescale}}},
      {"seed", t.seed},
      {"deterministic", t.deterministic},
      {"early_stop", t.early_stop},
      {"early_stop_delta", t.early_stop_delta},
  };
  j["data"] = {{"classes", rc.classes},
               {"folds", rc.folds},
               {"train_folds", rc.train_folds},
               {"mean", rc.standardization.mean},
               {"std", rc.standardization.stddev}};
  j["vote"] = rc.vote == VoteRule::Plurality ? "plurality" : "mean";
  return j.dump(2);
}

}  // namespace esr
