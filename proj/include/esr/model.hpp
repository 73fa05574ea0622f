// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Ensemble with shared representations: a trunk of convolutional stages
// whose output feeds every branch. A stage is a convolution together with
// the batch-norm / ReLU / max-pool layers that follow it; the branching
// level L puts stages 1..L in the trunk.

#include "esr/ops.hpp"
#include "esr/optim.hpp"
#include "esr/random.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace esr {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LayerKind { Conv, BatchNorm, MaxPool, GlobalAvgPool, Linear, Relu };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int filters = 0;   // conv
  int kernel = 0;    // conv, maxpool
  int stride = 1;    // conv, maxpool
  int padding = 0;   // conv
  int features = 0;  // linear

  static LayerSpec conv(int filters, int kernel, int stride = 1, int padding = 0) {
    return {LayerKind::Conv, filters, kernel, stride, padding, 0};
  }
  static LayerSpec batchnorm() { return {LayerKind::BatchNorm}; }
  static LayerSpec maxpool(int kernel, int stride) { return {LayerKind::MaxPool, 0, kernel, stride}; }
  static LayerSpec gap() { return {LayerKind::GlobalAvgPool}; }
  static LayerSpec linear(int features) { return {LayerKind::Linear, 0, 0, 1, 0, features}; }
  static LayerSpec relu() { return {LayerKind::Relu}; }

  bool operator==(const LayerSpec&) const = default;
};

std::string describe(const LayerSpec& spec);

struct InputShape {
  int channels = 1;
  int height = 96;
  int width = 96;
  bool operator==(const InputShape&) const = default;
};

struct ArchitectureConfig {
  std::string name = "esr";
  InputShape input;
  std::vector<LayerSpec> layers;  // full single-network stack, head included
  int branching_level = 1;
  int num_classes = 8;

  /// Number of convolutional stages.
  [[nodiscard]] int stage_count() const;
  /// Index of the first branch-private layer.
  [[nodiscard]] std::size_t split_index() const;
  [[nodiscard]] std::vector<LayerSpec> trunk() const;
  [[nodiscard]] std::vector<LayerSpec> branch_template() const;

  /// Output shape of every layer for one sample, (C, H, W) or (F).
  /// Throws ConfigError naming the first incompatible pair.
  [[nodiscard]] std::vector<Shape> activation_shapes() const;

  /// Shape of the trunk output for one sample.
  [[nodiscard]] Shape trunk_output_shape() const;

  /// Full structural validation; throws ConfigError.
  void validate() const;

  [[nodiscard]] ArchitectureConfig with_level(int level) const {
    ArchitectureConfig c = *this;
    c.branching_level = level;
    return c;
  }

  bool operator==(const ArchitectureConfig&) const = default;
};

/// Learnable-scalar counts. Batch-norm running statistics are buffers and
/// are not counted.
struct ParameterCounts {
  Index shared = 0;
  std::vector<Index> branches;
  std::vector<Index> affect_heads;

  [[nodiscard]] Index branch_total() const;
  [[nodiscard]] Index affect_total() const;
  [[nodiscard]] Index total() const { return shared + branch_total() + affect_total(); }
};

/// Counts for `ensemble_size` branches straight from the config.
ParameterCounts count_parameters(const ArchitectureConfig& config, int ensemble_size,
                                 bool affect_heads = false);

Index count_layer_parameters(const LayerSpec& spec, Index in_channels, Index in_features);

enum class Part { Shared, Branches, AffectHeads };

/// Selects a part of the model. Branch ranges are 0-based and inclusive;
/// last < 0 means "through the last branch".
struct Selector {
  Part part = Part::Shared;
  int first = 0;
  int last = -1;

  static Selector shared() { return {Part::Shared}; }
  static Selector branches(int first = 0, int last = -1) { return {Part::Branches, first, last}; }
  static Selector branch(int b) { return {Part::Branches, b, b}; }
  static Selector affect_heads(int first = 0, int last = -1) {
    return {Part::AffectHeads, first, last};
  }
  static Selector affect_head(int b) { return {Part::AffectHeads, b, b}; }
};

template <typename Scalar>
struct Layer {
  LayerSpec spec;
  std::vector<Parameter<Scalar>> params;  // conv/linear: weight, bias; batchnorm: gamma, beta
  BatchNormStats<Scalar> stats;

  /// A batch-norm layer whose gamma is frozen always runs in eval mode.
  Var<Scalar> forward(Tape<Scalar>& tape, const Var<Scalar>& x, Mode mode);
};

template <typename Scalar>
struct Branch {
  std::vector<Layer<Scalar>> layers;
  std::optional<Layer<Scalar>> affect;  // 2-output linear on relu(emotion logits)
};

template <typename Scalar>
struct BranchOutput {
  std::vector<Var<Scalar>> emotion_logits;  // one N x classes value per branch
  std::vector<Var<Scalar>> affect;          // one N x 2 (arousal, valence) per branch, if attached
};

/// Every layer output of one forward pass, for saliency probes.
template <typename Scalar>
struct ForwardTrace {
  std::vector<Var<Scalar>> trunk;
  std::vector<std::vector<Var<Scalar>>> branches;
};

template <typename Scalar>
class EsrModel {
 public:
  /// Builds and initializes the trunk; the model starts with zero branches.
  EsrModel(ArchitectureConfig config, std::uint64_t seed);

  /// Appends a freshly initialized branch and returns the new ensemble size.
  int add_branch();

  [[nodiscard]] int ensemble_size() const { return static_cast<int>(branches_.size()); }
  [[nodiscard]] const ArchitectureConfig& config() const { return config_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] bool has_affect_heads() const { return affect_attached_; }

  /// Trunk runs once; its output feeds every branch.
  BranchOutput<Scalar> forward(Tape<Scalar>& tape, const Tensor<Scalar>& batch, Mode mode,
                               ForwardTrace<Scalar>* trace = nullptr);
  BranchOutput<Scalar> forward(Tape<Scalar>& tape, const Var<Scalar>& batch, Mode mode,
                               ForwardTrace<Scalar>* trace = nullptr);

  /// Adds a 2-output head to every branch and freezes everything else.
  void attach_affect_heads();

  [[nodiscard]] ParameterCounts count_parameters() const;
  /// Scalars with a nonzero learning-rate multiplier.
  [[nodiscard]] Index count_trainable() const;

  /// Applies `multiplier` to every parameter the selector resolves to.
  void set_lr_multiplier(const Selector& selector, Scalar multiplier);
  void set_trainable(const Selector& selector, Scalar multiplier) { set_lr_multiplier(selector, multiplier); }

  std::vector<Parameter<Scalar>*> parameters();
  std::vector<Parameter<Scalar>*> parameters(const Selector& selector);
  [[nodiscard]] std::vector<const Parameter<Scalar>*> parameters() const;

  /// FNV-1a over all parameter values of the selected part.
  [[nodiscard]] std::uint64_t checksum(const Selector& selector) const;

  std::vector<Layer<Scalar>>& trunk() { return trunk_; }
  [[nodiscard]] const std::vector<Layer<Scalar>>& trunk() const { return trunk_; }
  std::vector<Branch<Scalar>>& branches() { return branches_; }
  [[nodiscard]] const std::vector<Branch<Scalar>>& branches() const { return branches_; }

  void zero_grad();

 private:
  Layer<Scalar> make_layer(const LayerSpec& spec, const Shape& in_shape, const std::string& prefix,
                           std::mt19937_64& rng) const;
  std::vector<const Parameter<Scalar>*> select(const Selector& selector) const;

  ArchitectureConfig config_;
  std::uint64_t seed_;
  std::vector<Layer<Scalar>> trunk_;
  std::vector<Branch<Scalar>> branches_;
  bool affect_attached_ = false;
};

}  // namespace esr
