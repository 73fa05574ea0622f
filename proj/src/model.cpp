// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace esr {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::GlobalAvgPool: return "gap";
    case LayerKind::Linear: return "linear";
    case LayerKind::Relu: return "relu";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& name) {
  for (auto k : {LayerKind::Conv, LayerKind::BatchNorm, LayerKind::MaxPool,
                 LayerKind::GlobalAvgPool, LayerKind::Linear, LayerKind::Relu}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown layer kind '" + name + "'");
}

std::string describe(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::Conv:
      return "conv(filters=" + std::to_string(s.filters) + ", kernel=" + std::to_string(s.kernel) +
             ", stride=" + std::to_string(s.stride) + ", padding=" + std::to_string(s.padding) + ")";
    case LayerKind::MaxPool:
      return "maxpool(kernel=" + std::to_string(s.kernel) + ", stride=" + std::to_string(s.stride) +
             ")";
    case LayerKind::Linear: return "linear(features=" + std::to_string(s.features) + ")";
    default: return to_string(s.kind);
  }
}

int ArchitectureConfig::stage_count() const {
  return static_cast<int>(std::count_if(layers.begin(), layers.end(),
                                        [](const LayerSpec& s) { return s.kind == LayerKind::Conv; }));
}

std::size_t ArchitectureConfig::split_index() const {
  int seen = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::Conv) {
      if (seen == branching_level) return i;
      ++seen;
    }
    if (layers[i].kind == LayerKind::GlobalAvgPool) return i;
  }
  return layers.size();
}

std::vector<LayerSpec> ArchitectureConfig::trunk() const {
  return {layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(split_index())};
}

std::vector<LayerSpec> ArchitectureConfig::branch_template() const {
  return {layers.begin() + static_cast<std::ptrdiff_t>(split_index()), layers.end()};
}

std::vector<Shape> ArchitectureConfig::activation_shapes() const {
  std::vector<Shape> shapes;
  Shape cur{input.channels, input.height, input.width};
  if (input.channels < 1 || input.height < 1 || input.width < 1) {
    throw ConfigError("input shape must be positive");
  }
  std::string prev = "input";
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& s = layers[i];
    const std::string here = "layer " + std::to_string(i) + " " + describe(s);
    auto incompatible = [&](const std::string& why) {
      return ConfigError("incompatible pair: " + prev + " -> " + here + ": " + why + " (input " +
                         shape_to_string(cur) + ")");
    };
    switch (s.kind) {
      case LayerKind::Conv: {
        if (cur.size() != 3) throw incompatible("convolution needs a spatial input");
        if (s.filters < 1 || s.kernel < 1 || s.stride < 1 || s.padding < 0) {
          throw incompatible("convolution hyperparameters must be positive");
        }
        if (s.kernel > cur[1] + 2 * s.padding || s.kernel > cur[2] + 2 * s.padding) {
          throw incompatible("kernel exceeds padded input");
        }
        cur = {s.filters, window_output_extent(cur[1], s.kernel, s.stride, s.padding),
               window_output_extent(cur[2], s.kernel, s.stride, s.padding)};
        break;
      }
      case LayerKind::BatchNorm:
        if (cur.size() != 3) throw incompatible("batch norm needs a spatial input");
        break;
      case LayerKind::MaxPool:
        if (cur.size() != 3) throw incompatible("max pooling needs a spatial input");
        if (s.kernel < 1 || s.stride < 1) throw incompatible("pooling hyperparameters must be positive");
        if (s.kernel > cur[1] || s.kernel > cur[2]) throw incompatible("pool kernel exceeds input");
        cur = {cur[0], window_output_extent(cur[1], s.kernel, s.stride, 0),
               window_output_extent(cur[2], s.kernel, s.stride, 0)};
        break;
      case LayerKind::GlobalAvgPool:
        if (cur.size() != 3) throw incompatible("global average pooling needs a spatial input");
        cur = {cur[0]};
        break;
      case LayerKind::Linear:
        if (cur.size() != 1) throw incompatible("linear layer needs a flat input");
        if (s.features < 1) throw incompatible("linear features must be positive");
        cur = {s.features};
        break;
      case LayerKind::Relu: break;
    }
    shapes.push_back(cur);
    prev = here;
  }
  return shapes;
}

Shape ArchitectureConfig::trunk_output_shape() const {
  const auto shapes = activation_shapes();
  const auto split = split_index();
  if (split == 0) return Shape{input.channels, input.height, input.width};
  return shapes[split - 1];
}

void ArchitectureConfig::validate() const {
  if (layers.empty()) throw ConfigError("architecture has no layers");
  if (layers.front().kind != LayerKind::Conv) {
    throw ConfigError("architecture must start with a convolutional stage");
  }
  if (num_classes < 1) throw ConfigError("num_classes must be positive");
  const auto gap = std::find_if(layers.begin(), layers.end(), [](const LayerSpec& s) {
    return s.kind == LayerKind::GlobalAvgPool;
  });
  if (gap == layers.end()) throw ConfigError("architecture needs a global average pooling head");
  for (auto it = gap + 1; it != layers.end(); ++it) {
    if (it->kind != LayerKind::Linear && it->kind != LayerKind::Relu) {
      throw ConfigError("only linear/relu layers may follow global average pooling, found " +
                        describe(*it));
    }
  }
  if (layers.back().kind != LayerKind::Linear || layers.back().features != num_classes) {
    throw ConfigError("last layer must be linear with num_classes (" + std::to_string(num_classes) +
                      ") features");
  }
  const int stages = stage_count();
  if (branching_level < 1 || branching_level > stages) {
    throw ConfigError("branching level " + std::to_string(branching_level) +
                      " outside the valid range [1, " + std::to_string(stages) + "]");
  }
  (void)activation_shapes();
}

Index ParameterCounts::branch_total() const {
  return std::accumulate(branches.begin(), branches.end(), Index{0});
}

Index ParameterCounts::affect_total() const {
  return std::accumulate(affect_heads.begin(), affect_heads.end(), Index{0});
}

Index count_layer_parameters(const LayerSpec& spec, Index in_channels, Index in_features) {
  switch (spec.kind) {
    case LayerKind::Conv:
      return Index{spec.filters} * in_channels * spec.kernel * spec.kernel + spec.filters;
    case LayerKind::BatchNorm: return 2 * in_channels;
    case LayerKind::Linear: return Index{spec.features} * in_features + spec.features;
    default: return 0;
  }
}

ParameterCounts count_parameters(const ArchitectureConfig& config, int ensemble_size,
                                 bool affect_heads) {
  config.validate();
  const auto shapes = config.activation_shapes();
  const auto split = config.split_index();
  Index shared = 0;
  Index branch = 0;
  Shape in{config.input.channels, config.input.height, config.input.width};
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const Index n = count_layer_parameters(config.layers[i], in[0], in[0]);
    (i < split ? shared : branch) += n;
    in = shapes[i];
  }
  ParameterCounts c;
  c.shared = shared;
  c.branches.assign(static_cast<std::size_t>(ensemble_size), branch);
  if (affect_heads) {
    c.affect_heads.assign(static_cast<std::size_t>(ensemble_size),
                          count_layer_parameters(LayerSpec::linear(2), 0, config.num_classes));
  }
  return c;
}

// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> Layer<Scalar>::forward(Tape<Scalar>& tape, const Var<Scalar>& x, Mode mode) {
  switch (spec.kind) {
    case LayerKind::Conv:
      return conv2d(tape, x, params[0].var(), params[1].var(), spec.stride, spec.padding);
    case LayerKind::BatchNorm:
      // Frozen batch norm keeps its running statistics.
      return batchnorm2d(tape, x, params[0].var(), params[1].var(), stats,
                         params[0].trainable() ? mode : Mode::Eval);
    case LayerKind::MaxPool: return maxpool2d(tape, x, spec.kernel, spec.stride);
    case LayerKind::GlobalAvgPool: return global_avg_pool(tape, x);
    case LayerKind::Linear: return linear(tape, x, params[0].var(), params[1].var());
    case LayerKind::Relu: return relu(tape, x);
  }
  throw std::logic_error("unreachable layer kind");
}

template <typename Scalar>
EsrModel<Scalar>::EsrModel(ArchitectureConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  config_.validate();
  auto rng = make_rng(seed_, 0);
  const auto shapes = config_.activation_shapes();
  Shape in{config_.input.channels, config_.input.height, config_.input.width};
  const auto split = config_.split_index();
  for (std::size_t i = 0; i < split; ++i) {
    trunk_.push_back(make_layer(config_.layers[i], in, "shared." + std::to_string(i), rng));
    in = shapes[i];
  }
}

template <typename Scalar>
Layer<Scalar> EsrModel<Scalar>::make_layer(const LayerSpec& spec, const Shape& in_shape,
                                           const std::string& prefix,
                                           std::mt19937_64& rng) const {
  Layer<Scalar> layer;
  layer.spec = spec;
  auto uniform = [&](Shape shape, double bound) {
    Tensor<Scalar> t(std::move(shape));
    for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(esr::uniform(rng, -bound, bound));
    return t;
  };
  const std::string tag = prefix + "." + to_string(spec.kind);
  switch (spec.kind) {
    case LayerKind::Conv: {
      const Index fan_in = in_shape[0] * spec.kernel * spec.kernel;
      layer.params.emplace_back(tag + ".weight",
                                uniform({spec.filters, in_shape[0], spec.kernel, spec.kernel},
                                        std::sqrt(6.0 / double(fan_in))));
      layer.params.emplace_back(tag + ".bias", uniform({spec.filters}, 1.0 / std::sqrt(double(fan_in))));
      break;
    }
    case LayerKind::BatchNorm:
      layer.params.emplace_back(tag + ".gamma", Tensor<Scalar>::constant({in_shape[0]}, Scalar(1)));
      layer.params.emplace_back(tag + ".beta", Tensor<Scalar>::zeros({in_shape[0]}));
      layer.stats = BatchNormStats<Scalar>(in_shape[0]);
      break;
    case LayerKind::Linear: {
      const Index fan_in = in_shape[0];
      layer.params.emplace_back(tag + ".weight", uniform({spec.features, fan_in},
                                                         std::sqrt(6.0 / double(fan_in))));
      layer.params.emplace_back(tag + ".bias", uniform({spec.features}, 1.0 / std::sqrt(double(fan_in))));
      break;
    }
    default: break;
  }
  return layer;
}

template <typename Scalar>
int EsrModel<Scalar>::add_branch() {
  const int b = ensemble_size();
  auto rng = make_rng(seed_, 1000 + static_cast<std::uint64_t>(b));
  const auto shapes = config_.activation_shapes();
  const auto split = config_.split_index();
  Shape in = config_.trunk_output_shape();
  Branch<Scalar> branch;
  for (std::size_t i = split; i < config_.layers.size(); ++i) {
    branch.layers.push_back(make_layer(config_.layers[i], in,
                                       "branch" + std::to_string(b) + "." + std::to_string(i), rng));
    in = shapes[i];
  }
  if (affect_attached_) {
    auto arng = make_rng(seed_, 5000 + static_cast<std::uint64_t>(b));
    branch.affect = make_layer(LayerSpec::linear(2), Shape{config_.num_classes},
                               "affect" + std::to_string(b), arng);
  }
  branches_.push_back(std::move(branch));
  return ensemble_size();
}

template <typename Scalar>
BranchOutput<Scalar> EsrModel<Scalar>::forward(Tape<Scalar>& tape, const Tensor<Scalar>& batch,
                                               Mode mode, ForwardTrace<Scalar>* trace) {
  return forward(tape, make_var(batch, false), mode, trace);
}

template <typename Scalar>
BranchOutput<Scalar> EsrModel<Scalar>::forward(Tape<Scalar>& tape, const Var<Scalar>& batch,
                                               Mode mode, ForwardTrace<Scalar>* trace) {
  if (branches_.empty()) throw std::logic_error("forward: model has no branches");
  const auto& s = batch->value.shape();
  if (s.size() != 4 || s[1] != config_.input.channels || s[2] != config_.input.height ||
      s[3] != config_.input.width) {
    throw ShapeError("forward: batch shape " + shape_to_string(s) + " does not match input [Nx" +
                     std::to_string(config_.input.channels) + "x" +
                     std::to_string(config_.input.height) + "x" +
                     std::to_string(config_.input.width) + "]");
  }
  Var<Scalar> x = batch;
  for (auto& layer : trunk_) {
    x = layer.forward(tape, x, mode);
    if (trace) trace->trunk.push_back(x);
  }
  if (trace) trace->branches.assign(branches_.size(), {});
  BranchOutput<Scalar> out;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    Var<Scalar> y = x;
    for (auto& layer : branches_[b].layers) {
      y = layer.forward(tape, y, mode);
      if (trace) trace->branches[b].push_back(y);
    }
    out.emotion_logits.push_back(y);
    if (branches_[b].affect) {
      out.affect.push_back(branches_[b].affect->forward(tape, relu(tape, y), mode));
    }
  }
  return out;
}

template <typename Scalar>
void EsrModel<Scalar>::attach_affect_heads() {
  if (branches_.empty()) throw std::logic_error("attach_affect_heads: model has no branches");
  if (affect_attached_) throw std::logic_error("attach_affect_heads: heads already attached");
  // Frozen first so the new heads keep their unit multiplier.
  for (auto* p : parameters()) p->set_lr_multiplier(Scalar(0));
  affect_attached_ = true;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    auto rng = make_rng(seed_, 5000 + b);
    branches_[b].affect = make_layer(LayerSpec::linear(2), Shape{config_.num_classes},
                                     "affect" + std::to_string(b), rng);
  }
}

template <typename Scalar>
ParameterCounts EsrModel<Scalar>::count_parameters() const {
  ParameterCounts c;
  for (const auto& l : trunk_)
    for (const auto& p : l.params) c.shared += p.size();
  for (const auto& br : branches_) {
    Index n = 0;
    for (const auto& l : br.layers)
      for (const auto& p : l.params) n += p.size();
    c.branches.push_back(n);
    if (br.affect) {
      Index a = 0;
      for (const auto& p : br.affect->params) a += p.size();
      c.affect_heads.push_back(a);
    }
  }
  return c;
}

template <typename Scalar>
Index EsrModel<Scalar>::count_trainable() const {
  Index n = 0;
  for (const auto* p : parameters()) n += p->trainable() ? p->size() : 0;
  return n;
}

template <typename Scalar>
std::vector<const Parameter<Scalar>*> EsrModel<Scalar>::select(const Selector& sel) const {
  std::vector<const Parameter<Scalar>*> out;
  const int e = ensemble_size();
  const int first = std::max(sel.first, 0);
  const int last = sel.last < 0 ? e - 1 : std::min(sel.last, e - 1);
  switch (sel.part) {
    case Part::Shared:
      for (const auto& l : trunk_)
        for (const auto& p : l.params) out.push_back(&p);
      break;
    case Part::Branches:
      for (int b = first; b <= last; ++b)
        for (const auto& l : branches_[static_cast<std::size_t>(b)].layers)
          for (const auto& p : l.params) out.push_back(&p);
      break;
    case Part::AffectHeads:
      for (int b = first; b <= last; ++b) {
        const auto& br = branches_[static_cast<std::size_t>(b)];
        if (br.affect)
          for (const auto& p : br.affect->params) out.push_back(&p);
      }
      break;
  }
  return out;
}

template <typename Scalar>
std::vector<Parameter<Scalar>*> EsrModel<Scalar>::parameters(const Selector& selector) {
  std::vector<Parameter<Scalar>*> out;
  for (const auto* p : std::as_const(*this).select(selector)) {
    out.push_back(const_cast<Parameter<Scalar>*>(p));
  }
  return out;
}

template <typename Scalar>
std::vector<Parameter<Scalar>*> EsrModel<Scalar>::parameters() {
  std::vector<Parameter<Scalar>*> out;
  for (const auto* p : std::as_const(*this).parameters()) out.push_back(const_cast<Parameter<Scalar>*>(p));
  return out;
}

template <typename Scalar>
std::vector<const Parameter<Scalar>*> EsrModel<Scalar>::parameters() const {
  std::vector<const Parameter<Scalar>*> out;
  for (const auto& l : trunk_)
    for (const auto& p : l.params) out.push_back(&p);
  for (const auto& br : branches_) {
    for (const auto& l : br.layers)
      for (const auto& p : l.params) out.push_back(&p);
    if (br.affect)
      for (const auto& p : br.affect->params) out.push_back(&p);
  }
  return out;
}

template <typename Scalar>
void EsrModel<Scalar>::set_lr_multiplier(const Selector& selector, Scalar multiplier) {
  auto params = parameters(selector);
  if (params.empty()) throw std::invalid_argument("set_lr_multiplier: selector matches no parameters");
  for (auto* p : params) p->set_lr_multiplier(multiplier);
}

template <typename Scalar>
std::uint64_t EsrModel<Scalar>::checksum(const Selector& selector) const {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto* p : select(selector)) {
    h = fnv1a(p->value().data(), static_cast<std::size_t>(p->size()) * sizeof(Scalar), h);
  }
  return h;
}

template <typename Scalar>
void EsrModel<Scalar>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template struct Layer<float>;
template struct Layer<double>;
template class EsrModel<float>;
template class EsrModel<double>;

}  // namespace esr
