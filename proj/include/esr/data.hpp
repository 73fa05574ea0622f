// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dataset ingestion, subject-independent folding, balanced subsetting,
// preprocessing and on-line augmentation.

#include "esr/image_io.hpp"
#include "esr/tensor.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace esr {

/// Manifest header, exactly as it must appear on the first line.
inline constexpr const char* kManifestHeader = "path,emotion,arousal,valence,subject";

class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, std::vector<std::size_t> rows)
      : std::runtime_error(what), rows_(std::move(rows)) {}
  /// 1-based manifest line numbers (header is line 1).
  [[nodiscard]] const std::vector<std::size_t>& rows() const { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

struct Sample {
  std::string path;  // relative to the dataset root
  Image image;
  std::optional<int> emotion;
  std::optional<double> arousal;
  std::optional<double> valence;
  std::optional<std::string> subject;

  [[nodiscard]] bool has_affect() const { return arousal.has_value() && valence.has_value(); }
};

struct DatasetIndex {
  std::vector<Sample> samples;
  std::string split;  // manifest stem, e.g. "train"
  int num_classes = 8;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] std::vector<std::size_t> class_histogram() const;
  [[nodiscard]] std::vector<std::size_t> all_indices() const;
};

/// Parses a manifest and decodes every referenced image. Errors list the
/// offending manifest lines.
DatasetIndex load_dataset(const std::filesystem::path& root, const std::filesystem::path& manifest,
                          int num_classes = 8);

/// Writes the manifest rows of `index` (images are not touched).
void write_manifest(const std::filesystem::path& manifest, const DatasetIndex& index);

std::string format_histogram(const DatasetIndex& index);

/// Subject-to-fold assignment plus per-fold sample lists.
struct FoldPlan {
  int k = 10;
  std::vector<std::string> subjects;        // sorted subject ids
  std::map<std::string, int> fold_of_subject;
  std::vector<std::vector<std::size_t>> folds;  // sample indices per fold

  struct Trial {
    int test = 0;
    int validation = 1;
    std::vector<int> train;
  };

  /// Trial t: test fold t, validation fold t+1 (mod k), training folds the
  /// first `train_folds` of the rest in ascending order.
  [[nodiscard]] Trial trial(int t, int train_folds = 4) const;

  [[nodiscard]] std::vector<std::size_t> samples_of(std::span<const int> fold_ids) const;
};

/// Round-robin subjects (sorted by id) over k folds.
FoldPlan make_subject_folds(const DatasetIndex& index, int k);

/// Per class, min(cap, available) candidates drawn uniformly without replacement.
/// Output is ordered by class, then by draw.
std::vector<std::size_t> balanced_subset(const DatasetIndex& index,
                                         std::span<const std::size_t> candidates, int cap,
                                         std::uint64_t seed);
std::vector<std::size_t> balanced_subset(const DatasetIndex& index, int cap, std::uint64_t seed);

/// Circumplex quadrant: bit 1 = arousal >= 0, bit 0 = valence >= 0.
int affect_quadrant(double arousal, double valence);

std::vector<std::size_t> quadrant_balanced_subset(const DatasetIndex& index,
                                                  std::span<const std::size_t> candidates, int cap,
                                                  std::uint64_t seed);
std::vector<std::size_t> quadrant_balanced_subset(const DatasetIndex& index, int cap,
                                                  std::uint64_t seed);

struct Standardization {
  std::vector<double> mean{0.5};
  std::vector<double> stddev{0.5};

  [[nodiscard]] double mean_of(int c) const { return mean[std::min<std::size_t>(c, mean.size() - 1)]; }
  [[nodiscard]] double std_of(int c) const { return stddev[std::min<std::size_t>(c, stddev.size() - 1)]; }
};

struct PreprocessConfig {
  int channels = 1;
  int height = 96;
  int width = 96;
  Standardization standardization;
};

/// Channel conversion, bilinear resize, scale to [0,1], per-channel
/// standardization. Returns C x H x W.
template <typename Scalar>
Tensor<Scalar> preprocess(const Image& image, const PreprocessConfig& config);

/// Bilinear resize with half-pixel centers; same-size input is returned verbatim.
Image resize_bilinear(const Image& image, int width, int height);

struct AugmentationConfig {
  double brightness = 0.0;        // additive shift drawn from [-b, b]
  double contrast = 0.0;          // gain drawn from [1-c, 1+c] around the image mean
  double flip_probability = 0.0;
  double max_rotation_deg = 0.0;  // at most 30
  double translation = 0.0;       // fraction of the extent, [-t, t]
  double rescale = 0.0;           // zoom drawn from [1-s, 1+s]

  void validate() const;
  static AugmentationConfig standard() { return {0.2, 0.2, 0.5, 30.0, 0.1, 0.1}; }
};

/// Concrete draw of the random transform, exposed for testing.
struct AugmentationDraw {
  double brightness = 0.0;
  double contrast = 1.0;
  bool flip = false;
  double rotation_deg = 0.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
  double scale = 1.0;
};

AugmentationDraw draw_augmentation(const AugmentationConfig& config, int height, int width,
                                   std::uint64_t seed);

/// Applies one transform to a C x H x W tensor. Out-of-frame samples replicate the edge.
template <typename Scalar>
Tensor<Scalar> apply_augmentation(const Tensor<Scalar>& chw, const AugmentationDraw& draw);

template <typename Scalar>
Tensor<Scalar> augment(const Tensor<Scalar>& chw, const AugmentationConfig& config,
                       std::uint64_t seed) {
  return apply_augmentation(chw, draw_augmentation(config, static_cast<int>(chw.dim(1)),
                                                   static_cast<int>(chw.dim(2)), seed));
}

/// Preprocessed tensors and targets, ready for batching.
template <typename Scalar>
struct LabeledSet {
  std::vector<Tensor<Scalar>> images;  // C x H x W each
  std::vector<int> labels;             // -1 when absent
  std::vector<std::array<Scalar, 2>> affect;  // (arousal, valence); NaN when absent
  std::vector<int> groups;             // fold id per sample, -1 when unknown
  int num_classes = 8;

  [[nodiscard]] std::size_t size() const { return images.size(); }
  [[nodiscard]] bool empty() const { return images.empty(); }
  [[nodiscard]] LabeledSet subset(std::span<const std::size_t> indices) const;
  [[nodiscard]] std::vector<std::size_t> indices_in_groups(std::span<const int> groups) const;
};

/// `folds`, when given, tags each sample with its fold id.
template <typename Scalar>
LabeledSet<Scalar> make_labeled_set(const DatasetIndex& index, std::span<const std::size_t> indices,
                                    const PreprocessConfig& config, const FoldPlan* folds = nullptr);

/// Stacks the selected samples into an N x C x H x W batch.
template <typename Scalar>
Tensor<Scalar> stack_batch(const LabeledSet<Scalar>& set, std::span<const std::size_t> indices);

}  // namespace esr
