// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Branch-by-branch ESR training, interleaved training, the traditional
// ensemble baseline and the two fine-tuning curricula.

#include "esr/data.hpp"
#include "esr/metrics.hpp"
#include "esr/model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace esr {

enum class StrategyVariant { FixedLR, VariedLR, Frozen, Interleaved, TraditionalBagging };

std::string to_string(StrategyVariant variant);
/// Accepts the CLI names fixed, varied, frozen, interleaved and bagging.
StrategyVariant strategy_from_string(const std::string& name);

/// Learning rates per model part while a new branch is trained. The
/// optimizer runs at lr_new_branch; the other parts get the ratio as their
/// multiplier.
struct TrainingStrategy {
  StrategyVariant variant = StrategyVariant::FixedLR;
  double lr_shared = 0.1;
  double lr_trained_branches = 0.1;
  double lr_new_branch = 0.1;

  void validate() const;

  static TrainingStrategy fixed(double lr = 0.1) { return {StrategyVariant::FixedLR, lr, lr, lr}; }
  static TrainingStrategy varied(double lr = 0.1, double lr_trained = 0.02) {
    return {StrategyVariant::VariedLR, lr, lr_trained, lr};
  }
  static TrainingStrategy frozen(double lr = 0.1) { return {StrategyVariant::Frozen, 0.0, 0.0, lr}; }
  static TrainingStrategy interleaved(double lr = 0.1) {
    return {StrategyVariant::Interleaved, lr, lr, lr};
  }
  static TrainingStrategy bagging(double lr = 0.1) {
    return {StrategyVariant::TraditionalBagging, lr, lr, lr};
  }
  static TrainingStrategy from_variant(StrategyVariant variant, double lr = 0.1);
};

struct LrSchedule {
  double initial = 0.1;
  double decay_factor = 0.5;
  int decay_every = 250;

  void validate() const;
  [[nodiscard]] double lr_at(int epoch) const;

  static LrSchedule lab() { return {0.1, 0.5, 250}; }
  static LrSchedule wild() { return {0.1, 0.5, 10}; }
  static LrSchedule transfer() { return {0.1, 0.75, 10}; }
};

/// initial * decay_factor^floor(epoch / decay_every).
double lr_at_epoch(const LrSchedule& schedule, int epoch);

enum class SubsetPolicy {
  All,              // every training sample
  LeaveOneFoldOut,  // branch b skips the b-th training group (mod group count)
  ClassBalanced,    // per-class capped draw, fresh per branch
  QuadrantBalanced, // per-quadrant capped draw of affect targets
};

struct TrainConfig {
  int epochs_per_branch = 300;
  int batch_size = 32;
  double momentum = 0.9;
  TrainingStrategy strategy;
  LrSchedule schedule;
  std::uint64_t seed = 0;
  SubsetPolicy subset = SubsetPolicy::LeaveOneFoldOut;
  int subset_cap = 5000;
  AugmentationConfig augmentation;
  bool deterministic = true;           // zero wall-time column, fixed ordering
  int threads = 1;                     // validation inference
  std::optional<std::filesystem::path> checkpoint_dir;
  bool early_stop = false;             // stop adding branches once the ensemble stalls
  double early_stop_delta = 0.002;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;       // 0-based within the branch phase
  int branch = 0;      // 0-based branch being trained (interleaved: ensemble size - 1)
  double lr = 0.0;
  double train_loss = 0.0;
  std::vector<double> val_branches;  // one metric per branch present
  double val_ensemble = 0.0;
  double wall_time_s = 0.0;
};

struct TrainingLog {
  std::string metric = "accuracy";  // "rmse" for affect tuning
  std::vector<EpochRecord> records;

  /// Header: epoch,branch,lr,train_loss,val_<metric>_branches,val_<metric>_ensemble,wall_time_s.
  /// Branch values are joined with ';'. Doubles use 17 significant digits.
  [[nodiscard]] std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  void append(const TrainingLog& other);
};

template <typename Scalar>
struct TrainHooks {
  /// Before the first update of a branch phase (epoch 0 milestone).
  std::function<void(int branch, EsrModel<Scalar>&)> on_branch_start;
  /// After every epoch, with the just-written record.
  std::function<void(const EpochRecord&, EsrModel<Scalar>&)> on_epoch_end;
};

class TrainingDiverged : public NumericalFault {
 public:
  using NumericalFault::NumericalFault;
};

/// Sum of per-branch cross-entropies over the first `branches` outputs
/// (all when negative).
template <typename Scalar>
Var<Scalar> combined_loss(Tape<Scalar>& tape, const BranchOutput<Scalar>& outputs,
                          std::span<const int> labels, int branches = -1);

/// Sum of per-branch RMSEs of the affect heads.
template <typename Scalar>
Var<Scalar> combined_affect_loss(Tape<Scalar>& tape, const BranchOutput<Scalar>& outputs,
                                 const Tensor<Scalar>& targets, int branches = -1);

/// Grows `model` to `ensemble_size` branches, one phase per new branch.
/// The first branch always trains jointly with the trunk at lr_new_branch.
/// On a NaN loss the model is restored to the last completed epoch and
/// TrainingDiverged is thrown.
template <typename Scalar>
TrainingLog train_esr(EsrModel<Scalar>& model, const LabeledSet<Scalar>& train,
                      const LabeledSet<Scalar>& validation, const TrainConfig& config,
                      int ensemble_size, const TrainHooks<Scalar>& hooks = {});

/// All present branches trained together on the combined loss for
/// epochs_per_branch epochs over identical mini-batches.
template <typename Scalar>
TrainingLog train_interleaved(EsrModel<Scalar>& model, const LabeledSet<Scalar>& train,
                              const LabeledSet<Scalar>& validation, const TrainConfig& config,
                              const TrainHooks<Scalar>& hooks = {});

/// Seed of the i-th member of a traditional ensemble.
std::uint64_t member_seed(std::uint64_t seed, int member);

/// `members` independent single-branch networks; member i trains on every
/// training group except the i-th.
template <typename Scalar>
std::vector<EsrModel<Scalar>> train_traditional_ensemble(const ArchitectureConfig& config,
                                                         const LabeledSet<Scalar>& train,
                                                         const LabeledSet<Scalar>& validation,
                                                         const TrainConfig& train_config, int members,
                                                         std::vector<TrainingLog>* logs = nullptr);

/// Sequential affect-head training on quadrant-balanced subsets. The head of
/// the current branch runs at schedule.initial, earlier heads at the
/// strategy's trained-branch ratio; everything else stays frozen.
template <typename Scalar>
TrainingLog fine_tune_affect(EsrModel<Scalar>& model, const LabeledSet<Scalar>& train,
                             const LabeledSet<Scalar>& validation, const TrainConfig& config,
                             const TrainHooks<Scalar>& hooks = {});

/// Sequential per-branch fine-tuning of a pretrained model on a new dataset.
/// Branches not yet reached are frozen and left out of the loss. Throws
/// CheckpointError when the model's architecture hash differs from
/// `expected_hash`.
template <typename Scalar>
TrainingLog fine_tune_transfer(EsrModel<Scalar>& model, std::uint64_t expected_hash,
                               const LabeledSet<Scalar>& train, const LabeledSet<Scalar>& validation,
                               const TrainConfig& config, const TrainHooks<Scalar>& hooks = {});

/// Training indices used for branch `branch` under `config.subset`.
template <typename Scalar>
std::vector<std::size_t> branch_subset(const LabeledSet<Scalar>& train, const TrainConfig& config,
                                       int branch);

}  // namespace esr
