// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run files: architecture, training and data settings in one JSON document.
//
//   {
//     "architecture": { ... } | "lab.json",     // inline or a path relative to the file
//     "branches": 4,
//     "training": {
//       "epochs_per_branch": 300, "batch_size": 32, "momentum": 0.9,
//       "strategy": "varied", "lr": 0.1, "lr_trained_branches": 0.02,
//       "schedule": {"decay_factor": 0.5, "decay_every": 250},
//       "subset": "leave-one-fold-out", "subset_cap": 5000,
//       "augmentation": {"brightness": 0.2, ...} | "standard" | "none",
//       "seed": 0, "deterministic": true
//     },
//     "data": {"classes": 8, "folds": 10, "train_folds": 4, "mean": [0.5], "std": [0.5]},
//     "vote": "plurality"
//   }
//
// Every section and key is optional except the architecture.

#include "esr/data.hpp"
#include "esr/metrics.hpp"
#include "esr/model.hpp"
#include "esr/training.hpp"

#include <filesystem>
#include <string>

namespace esr {

struct RunConfig {
  ArchitectureConfig architecture;
  int branches = 4;
  TrainConfig training;
  int classes = 8;
  int folds = 10;
  int train_folds = 4;
  Standardization standardization;
  VoteRule vote = VoteRule::Plurality;

  [[nodiscard]] PreprocessConfig preprocess() const;
  void validate() const;
};

std::string to_string(SubsetPolicy policy);
SubsetPolicy subset_policy_from_string(const std::string& name);

/// Throws ConfigError naming the offending key.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);

}  // namespace esr
