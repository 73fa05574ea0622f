// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Architecture files (JSON), reference architectures, the parameter-count
// search that recovers them, and versioned binary checkpoints.

#include "esr/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace esr {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Architecture document, e.g.
///   {"name": "lab", "input": {"channels": 1, "height": 96, "width": 96},
///    "num_classes": 8, "branching_level": 3,
///    "layers": [{"kind": "conv", "filters": 32, "kernel": 5, "stride": 1, "padding": 2}, ...]}
/// Unknown keys and wrongly typed values raise ConfigError.
std::string architecture_to_json(const ArchitectureConfig& config, int indent = 2);
ArchitectureConfig architecture_from_json(const std::string& text);
ArchitectureConfig load_architecture(const std::filesystem::path& path);
void save_architecture(const std::filesystem::path& path, const ArchitectureConfig& config);

/// FNV-1a of the canonical (compact, key-sorted) JSON form.
std::uint64_t config_hash(const ArchitectureConfig& config);

/// Five-stage gray-scale network for 96 x 96 lab images.
ArchitectureConfig lab_architecture(int branching_level = 3);
/// Eight-stage color network for in-the-wild images, shared up to stage 4.
ArchitectureConfig wild_architecture(int branching_level = 4);
/// Lab topology scaled down for single-core experiments.
ArchitectureConfig desk_architecture(int branching_level = 3, int size = 24, int width_first = 8,
                                     int width_rest = 16);

/// Five-stage lab topology: conv-BN-ReLU stages, pooling after stages
/// 2..4, global average pooling and a linear head.
struct LabCandidate {
  int first_filters = 32;
  int first_kernel = 5;
  int filters = 64;  // stages 2..5
  int kernel = 3;    // stages 2..5
  bool batchnorm = true;

  [[nodiscard]] ArchitectureConfig to_config(int branching_level) const;
  bool operator==(const LabCandidate&) const = default;
};

struct LabSearchSpace {
  std::vector<int> first_filters{8, 16, 24, 32, 48, 64, 96, 128};
  std::vector<int> first_kernels{3, 5, 7};
  std::vector<int> filters{16, 32, 48, 64, 96, 128};
  std::vector<int> kernels{3, 5};
  std::vector<bool> batchnorm{true, false};
};

struct LabTargets {
  Index single = 131'208;
  Index traditional = 524'832;  // four independent networks
  Index esr_level3 = 355'104;   // ESR-4
  Index esr_level4 = 243'936;   // ESR-4
};

/// Every candidate in the space whose counts hit all targets exactly.
std::vector<LabCandidate> search_lab_architecture(const LabSearchSpace& space = {},
                                                  const LabTargets& targets = {});

/// Writes the model: magic "ESRCKPT", u32 version, u64 config hash, u32 scalar
/// size, u32 branch count, u8 affect flag, u64 seed, the architecture JSON,
/// then (name, shape, values) for every parameter and every batch-norm buffer.
template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const EsrModel<Scalar>& model);

/// Rebuilds a model from a checkpoint. When `expected` is given, its hash
/// must equal the stored one.
template <typename Scalar>
EsrModel<Scalar> load_checkpoint(const std::filesystem::path& path,
                                 const ArchitectureConfig* expected = nullptr);

/// Reads only the stored architecture.
ArchitectureConfig checkpoint_architecture(const std::filesystem::path& path);

}  // namespace esr
