// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Grad-CAM saliency per branch, heat-map rendering and a diversity score.

#include "esr/image_io.hpp"
#include "esr/model.hpp"
#include "esr/training.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace esr {

struct SaliencyMap {
  Eigen::MatrixXd values;  // H x W of the target layer, in [0, 1]
  int branch = 0;
  int target_class = 0;
  int layer = 0;           // index into ArchitectureConfig::layers
};

/// Channel weights are spatial means of `gradients`; the map is the
/// rectified weighted channel sum divided by its maximum, or all zeros when
/// nothing is positive. Both tensors are C x H x W.
Eigen::MatrixXd grad_cam_from(const Tensor<double>& activations, const Tensor<double>& gradients);

/// Divides by the maximum; all-zero input stays zero.
Eigen::MatrixXd normalize_map(const Eigen::MatrixXd& map);

/// Output of the last spatial layer before global pooling.
int default_gradcam_layer(const ArchitectureConfig& config);

/// Eval-mode forward and backward of one sample (C x H x W or 1 x C x H x W)
/// from the target-class logit of `branch`. `layer` must produce a spatial
/// activation; default_gradcam_layer when empty.
template <typename Scalar>
SaliencyMap grad_cam(EsrModel<Scalar>& model, int branch, const Tensor<Scalar>& input, int target_class,
                     std::optional<int> layer = std::nullopt);

/// Jet colormap of v in [0, 1] as RGB in [0, 1].
std::array<double, 3> jet(double v);

/// Bilinear upsampling of `map` to the base size, jet colors blended at 0.5
/// over the gray base. Returns RGB.
Image render_heatmap(const Eigen::MatrixXd& map, const Image& base);

/// Bilinear resize of a real-valued map with half-pixel centers.
Eigen::MatrixXd upsample_map(const Eigen::MatrixXd& map, int height, int width);

/// 1 - mean pairwise cosine similarity; a pair with a zero map counts as 0.
double diversity_score(std::span<const Eigen::MatrixXd> maps);

/// "row,col,value" lines.
void write_map_csv(const std::filesystem::path& path, const Eigen::MatrixXd& map);

struct MilestoneMap {
  int branch = 0;
  int epoch = 0;  // completed epochs when captured; 0 = before any update
  SaliencyMap map;
};

/// Hooks that capture a map of the branch being trained after each
/// milestone epoch count and after the final epoch.
template <typename Scalar>
TrainHooks<Scalar> gradcam_milestone_hooks(Tensor<Scalar> probe, int target_class, int final_epoch,
                                           std::vector<MilestoneMap>* out,
                                           std::vector<int> milestones = {0, 1, 50});

}  // namespace esr
