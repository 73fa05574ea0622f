// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace esr {

Eigen::MatrixXd normalize_map(const Eigen::MatrixXd& map) {
  const double m = map.size() ? map.maxCoeff() : 0.0;
  if (!(m > 0.0)) return Eigen::MatrixXd::Zero(map.rows(), map.cols());
  return map / m;
}

Eigen::MatrixXd grad_cam_from(const Tensor<double>& a, const Tensor<double>& g) {
  if (a.rank() != 3 || a.shape() != g.shape()) {
    throw ShapeError("grad_cam: activations and gradients must share a C x H x W shape, got " +
                     shape_to_string(a.shape()) + " and " + shape_to_string(g.shape()));
  }
  const Index c = a.dim(0), h = a.dim(1), w = a.dim(2);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(h, w);
  for (Index k = 0; k < c; ++k) {
    const double weight = g.values().segment(k * h * w, h * w).mean();
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) sum(y, x) += weight * a[(k * h + y) * w + x];
  }
  return normalize_map(sum.cwiseMax(0.0));
}

int default_gradcam_layer(const ArchitectureConfig& config) {
  const auto shapes = config.activation_shapes();
  for (int i = static_cast<int>(shapes.size()) - 1; i >= 0; --i) {
    if (shapes[static_cast<std::size_t>(i)].size() == 3) return i;
  }
  throw ConfigError("architecture has no spatial layer");
}

template <typename Scalar>
SaliencyMap grad_cam(EsrModel<Scalar>& model, int branch, const Tensor<Scalar>& input, int target_class,
                     std::optional<int> layer) {
  const auto& cfg = model.config();
  if (branch < 0 || branch >= model.ensemble_size()) {
    throw std::out_of_range("grad_cam: branch " + std::to_string(branch) + " outside [0, " +
                            std::to_string(model.ensemble_size()) + ")");
  }
  if (target_class < 0 || target_class >= cfg.num_classes) {
    throw std::out_of_range("grad_cam: class " + std::to_string(target_class) + " outside [0, " +
                            std::to_string(cfg.num_classes) + ")");
  }
  const int lid = layer.value_or(default_gradcam_layer(cfg));
  const auto shapes = cfg.activation_shapes();
  if (lid < 0 || lid >= static_cast<int>(shapes.size())) {
    throw std::out_of_range("grad_cam: layer " + std::to_string(lid) + " does not exist");
  }
  if (shapes[static_cast<std::size_t>(lid)].size() != 3) {
    throw std::invalid_argument("grad_cam: layer " + std::to_string(lid) + " (" +
                                describe(cfg.layers[static_cast<std::size_t>(lid)]) +
                                ") has no spatial output");
  }
  Tensor<Scalar> batch = input;
  if (input.rank() == 3) {
    Shape s{1};
    s.insert(s.end(), input.shape().begin(), input.shape().end());
    batch = input.reshaped(s);
  }
  if (batch.rank() != 4 || batch.dim(0) != 1) throw ShapeError("grad_cam: expected a single sample");

  Tape<Scalar> tape;
  const auto x = make_var(batch, true);
  ForwardTrace<Scalar> trace;
  const auto out = model.forward(tape, x, Mode::Eval, &trace);
  const auto split = static_cast<int>(cfg.split_index());
  const Var<Scalar> act = lid < split ? trace.trunk[static_cast<std::size_t>(lid)]
                                      : trace.branches[static_cast<std::size_t>(branch)]
                                                      [static_cast<std::size_t>(lid - split)];
  const auto score = pick_column(tape, out.emotion_logits[static_cast<std::size_t>(branch)], target_class);
  tape.backward(score);

  const Shape chw(act->value.shape().begin() + 1, act->value.shape().end());
  Tensor<double> a = act->value.template cast<double>().reshaped(chw);
  Tensor<double> g = act->has_grad() ? act->grad.template cast<double>().reshaped(chw) : Tensor<double>(chw);
  model.zero_grad();
  SaliencyMap m;
  m.values = grad_cam_from(a, g);
  m.branch = branch;
  m.target_class = target_class;
  m.layer = lid;
  return m;
}

std::array<double, 3> jet(double v) {
  auto c = [](double x) { return std::clamp(x, 0.0, 1.0); };
  return {c(1.5 - std::abs(4.0 * v - 3.0)), c(1.5 - std::abs(4.0 * v - 2.0)), c(1.5 - std::abs(4.0 * v - 1.0))};
}

Eigen::MatrixXd upsample_map(const Eigen::MatrixXd& map, int height, int width) {
  if (map.size() == 0 || height < 1 || width < 1) throw std::invalid_argument("upsample_map: empty input");
  if (map.rows() == height && map.cols() == width) return map;
  Eigen::MatrixXd out(height, width);
  const double sy = double(map.rows()) / height, sx = double(map.cols()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(map.rows() - 1));
    const auto y0 = static_cast<Index>(fy);
    const Index y1 = std::min<Index>(y0 + 1, map.rows() - 1);
    const double wy = fy - double(y0);
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(map.cols() - 1));
      const auto x0 = static_cast<Index>(fx);
      const Index x1 = std::min<Index>(x0 + 1, map.cols() - 1);
      const double wx = fx - double(x0);
      out(y, x) = (map(y0, x0) * (1 - wx) + map(y0, x1) * wx) * (1 - wy) +
                  (map(y1, x0) * (1 - wx) + map(y1, x1) * wx) * wy;
    }
  }
  return out;
}

Image render_heatmap(const Eigen::MatrixXd& map, const Image& base) {
  if (base.empty()) throw ImageError("render_heatmap: empty base image");
  const Eigen::MatrixXd up = upsample_map(map, base.height, base.width);
  Image out(base.width, base.height, 3);
  for (int y = 0; y < base.height; ++y) {
    for (int x = 0; x < base.width; ++x) {
      const double gray = base.channels == 1
                              ? base.at(x, y)
                              : 0.299 * base.at(x, y, 0) + 0.587 * base.at(x, y, 1) + 0.114 * base.at(x, y, 2);
      const auto rgb = jet(std::clamp(up(y, x), 0.0, 1.0));
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(0.5 * 255.0 * rgb[static_cast<std::size_t>(c)] + 0.5 * gray));
      }
    }
  }
  return out;
}

double diversity_score(std::span<const Eigen::MatrixXd> maps) {
  if (maps.size() < 2) throw std::invalid_argument("diversity_score: need at least two maps");
  for (const auto& m : maps) {
    if (m.rows() != maps[0].rows() || m.cols() != maps[0].cols()) {
      throw ShapeError("diversity_score: maps differ in shape");
    }
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (std::size_t j = i + 1; j < maps.size(); ++j, ++pairs) {
      const double ni = maps[i].norm(), nj = maps[j].norm();
      if (ni == 0.0 || nj == 0.0) continue;
      sum += maps[i].cwiseProduct(maps[j]).sum() / (ni * nj);
    }
  }
  return 1.0 - sum / double(pairs);
}

void write_map_csv(const std::filesystem::path& path, const Eigen::MatrixXd& map) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "row,col,value\n";
  for (Index y = 0; y < map.rows(); ++y)
    for (Index x = 0; x < map.cols(); ++x) out << y << ',' << x << ',' << map(y, x) << '\n';
}

template <typename Scalar>
TrainHooks<Scalar> gradcam_milestone_hooks(Tensor<Scalar> probe, int target_class, int final_epoch,
                                           std::vector<MilestoneMap>* out, std::vector<int> milestones) {
  TrainHooks<Scalar> hooks;
  const bool at_start = std::find(milestones.begin(), milestones.end(), 0) != milestones.end();
  hooks.on_branch_start = [=](int branch, EsrModel<Scalar>& model) {
    if (at_start) out->push_back({branch, 0, grad_cam(model, branch, probe, target_class)});
  };
  hooks.on_epoch_end = [=](const EpochRecord& rec, EsrModel<Scalar>& model) {
    const int done = rec.epoch + 1;
    const bool hit = std::find(milestones.begin(), milestones.end(), done) != milestones.end();
    if (hit || done == final_epoch) {
      out->push_back({rec.branch, done, grad_cam(model, rec.branch, probe, target_class)});
    }
  };
  return hooks;
}

template SaliencyMap grad_cam<float>(EsrModel<float>&, int, const Tensor<float>&, int, std::optional<int>);
template SaliencyMap grad_cam<double>(EsrModel<double>&, int, const Tensor<double>&, int, std::optional<int>);
template TrainHooks<float> gradcam_milestone_hooks<float>(Tensor<float>, int, int, std::vector<MilestoneMap>*,
                                                          std::vector<int>);
template TrainHooks<double> gradcam_milestone_hooks<double>(Tensor<double>, int, int,
                                                            std::vector<MilestoneMap>*, std::vector<int>);

}  // namespace esr
