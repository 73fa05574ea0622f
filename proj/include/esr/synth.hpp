// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Procedural gray-scale "faces" with posed expressions, used as a small
// stand-in for lab expression datasets. Every subject poses a rotating
// sequence of classes, so subject-independent folds stay class balanced.

#include "esr/data.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace esr {

struct SynthConfig {
  int classes = 8;              // at most 8
  int subjects = 120;
  int samples_per_subject = 11;
  int size = 48;                // square output in pixels
  std::uint64_t seed = 0;
  bool affect = true;           // emit arousal/valence columns
  double noise = 10.0;          // pixel noise sigma, 8-bit units
  double subject_variation = 1.0;  // scales identity-specific shape offsets

  void validate() const;
};

/// Names of the synthetic expression classes, index-aligned with labels.
const char* synth_class_name(int label);

/// Builds the dataset in memory. Paths are "<subject>/<nn>.pgm".
DatasetIndex generate_synthetic(const SynthConfig& config);

/// Writes every image under `root` and the manifest to `root/manifest`.
void write_dataset(const DatasetIndex& index, const std::filesystem::path& root,
                   const std::string& manifest = "manifest.csv");

}  // namespace esr
