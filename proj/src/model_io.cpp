// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/model_io.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace esr {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'E', 'S', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

json layer_to_json(const LayerSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  switch (s.kind) {
    case LayerKind::Conv:
      j["filters"] = s.filters;
      j["kernel"] = s.kernel;
      j["stride"] = s.stride;
      j["padding"] = s.padding;
      break;
    case LayerKind::MaxPool:
      j["kernel"] = s.kernel;
      j["stride"] = s.stride;
      break;
    case LayerKind::Linear: j["features"] = s.features; break;
    default: break;
  }
  return j;
}

json config_to_json(const ArchitectureConfig& c) {
  json j;
  j["name"] = c.name;
  j["input"] = {{"channels", c.input.channels}, {"height", c.input.height}, {"width", c.input.width}};
  j["num_classes"] = c.num_classes;
  j["branching_level"] = c.branching_level;
  j["layers"] = json::array();
  for (const auto& s : c.layers) j["layers"].push_back(layer_to_json(s));
  return j;
}

int get_int(const json& j, const char* key, const std::string& where, std::optional<int> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing key '" + key + "'");
  }
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + ": '" + key + "' must be an integer");
  return v.get<int>();
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

LayerSpec layer_from_json(const json& j, std::size_t i) {
  const std::string where = "layers[" + std::to_string(i) + "]";
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError(where + ": needs a string 'kind'");
  }
  LayerSpec s;
  try {
    s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  switch (s.kind) {
    case LayerKind::Conv:
      check_keys(j, {"kind", "filters", "kernel", "stride", "padding"}, where);
      s.filters = get_int(j, "filters", where);
      s.kernel = get_int(j, "kernel", where);
      s.stride = get_int(j, "stride", where, 1);
      s.padding = get_int(j, "padding", where, 0);
      break;
    case LayerKind::MaxPool:
      check_keys(j, {"kind", "kernel", "stride"}, where);
      s.kernel = get_int(j, "kernel", where);
      s.stride = get_int(j, "stride", where, s.kernel);
      break;
    case LayerKind::Linear:
      check_keys(j, {"kind", "features"}, where);
      s.features = get_int(j, "features", where);
      break;
    default: check_keys(j, {"kind"}, where); break;
  }
  return s;
}

ArchitectureConfig config_from_json(const json& j) {
  check_keys(j, {"name", "input", "num_classes", "branching_level", "layers"}, "architecture");
  ArchitectureConfig c;
  if (j.contains("name")) {
    if (!j.at("name").is_string()) throw ConfigError("architecture: 'name' must be a string");
    c.name = j.at("name").get<std::string>();
  }
  if (!j.contains("input")) throw ConfigError("architecture: missing key 'input'");
  check_keys(j.at("input"), {"channels", "height", "width"}, "input");
  c.input.channels = get_int(j.at("input"), "channels", "input");
  c.input.height = get_int(j.at("input"), "height", "input");
  c.input.width = get_int(j.at("input"), "width", "input");
  c.num_classes = get_int(j, "num_classes", "architecture", 8);
  c.branching_level = get_int(j, "branching_level", "architecture");
  if (!j.contains("layers") || !j.at("layers").is_array()) {
    throw ConfigError("architecture: 'layers' must be an array");
  }
  const auto& layers = j.at("layers");
  for (std::size_t i = 0; i < layers.size(); ++i) c.layers.push_back(layer_from_json(layers[i], i));
  c.validate();
  return c;
}

std::vector<LayerSpec> stage(int filters, int kernel, bool pool, bool bn = true) {
  std::vector<LayerSpec> v{LayerSpec::conv(filters, kernel, 1, kernel / 2)};
  if (bn) v.push_back(LayerSpec::batchnorm());
  v.push_back(LayerSpec::relu());
  if (pool) v.push_back(LayerSpec::maxpool(2, 2));
  return v;
}

void append(std::vector<LayerSpec>& to, const std::vector<LayerSpec>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

// Binary helpers, little-endian host order.
template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError(path.string() + ": truncated checkpoint");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, const std::filesystem::path& path) {
  const auto n = get<std::uint64_t>(in, path);
  if (n > (1ULL << 30)) throw CheckpointError(path.string() + ": corrupt string length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw CheckpointError(path.string() + ": truncated checkpoint");
  return s;
}

template <typename Vector>
void put_array(std::ostream& out, const std::string& name, const Shape& shape, const Vector& values,
               double multiplier) {
  put_string(out, name);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put<std::int64_t>(out, d);
  put<double>(out, multiplier);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(values[0])));
}

struct Header {
  std::uint64_t hash = 0;
  std::uint32_t scalar_size = 0;
  std::uint32_t branches = 0;
  bool affect = false;
  std::uint64_t seed = 0;
  ArchitectureConfig config;
};

Header read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw CheckpointError(path.string() + ": not an esr checkpoint");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Header h;
  h.hash = get<std::uint64_t>(in, path);
  h.scalar_size = get<std::uint32_t>(in, path);
  h.branches = get<std::uint32_t>(in, path);
  h.affect = get<std::uint8_t>(in, path) != 0;
  h.seed = get<std::uint64_t>(in, path);
  try {
    h.config = architecture_from_json(get_string(in, path));
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": stored architecture is invalid: " + e.what());
  }
  if (config_hash(h.config) != h.hash) {
    throw CheckpointError(path.string() + ": stored architecture does not match its hash");
  }
  return h;
}

template <typename Scalar>
std::vector<std::pair<std::string, BatchNormStats<Scalar>*>> bn_buffers(EsrModel<Scalar>& m) {
  std::vector<std::pair<std::string, BatchNormStats<Scalar>*>> out;
  auto visit = [&](std::vector<Layer<Scalar>>& layers) {
    for (auto& l : layers) {
      if (l.spec.kind != LayerKind::BatchNorm) continue;
      std::string base = l.params[0].name();
      base.resize(base.size() - std::strlen("gamma"));
      out.emplace_back(base, &l.stats);
    }
  };
  visit(m.trunk());
  for (auto& b : m.branches()) visit(b.layers);
  return out;
}

}  // namespace

std::string architecture_to_json(const ArchitectureConfig& config, int indent) {
  return config_to_json(config).dump(indent);
}

ArchitectureConfig architecture_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("architecture: malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

ArchitectureConfig load_architecture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open architecture file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return architecture_from_json(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_architecture(const std::filesystem::path& path, const ArchitectureConfig& config) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write architecture file " + path.string());
  out << architecture_to_json(config) << '\n';
}

std::uint64_t config_hash(const ArchitectureConfig& config) {
  const std::string canonical = config_to_json(config).dump();
  return fnv1a(canonical.data(), canonical.size());
}

ArchitectureConfig lab_architecture(int branching_level) {
  return LabCandidate{}.to_config(branching_level);
}

ArchitectureConfig wild_architecture(int branching_level) {
  ArchitectureConfig c;
  c.name = "wild";
  c.input = {3, 96, 96};
  append(c.layers, stage(64, 5, false));
  append(c.layers, stage(128, 3, true));
  append(c.layers, stage(128, 3, false));
  append(c.layers, stage(128, 3, true));
  append(c.layers, stage(128, 3, false));
  append(c.layers, stage(256, 3, true));
  append(c.layers, stage(256, 3, false));
  append(c.layers, stage(512, 3, false));
  c.layers.push_back(LayerSpec::gap());
  c.layers.push_back(LayerSpec::linear(8));
  c.branching_level = branching_level;
  c.validate();
  return c;
}

ArchitectureConfig desk_architecture(int branching_level, int size, int width_first, int width_rest) {
  ArchitectureConfig c = LabCandidate{width_first, 5, width_rest, 3, true}.to_config(branching_level);
  c.name = "desk";
  c.input = {1, size, size};
  c.validate();
  return c;
}

ArchitectureConfig LabCandidate::to_config(int branching_level) const {
  ArchitectureConfig c;
  c.name = "lab";
  c.input = {1, 96, 96};
  append(c.layers, stage(first_filters, first_kernel, false, batchnorm));
  append(c.layers, stage(filters, kernel, true, batchnorm));
  append(c.layers, stage(filters, kernel, true, batchnorm));
  append(c.layers, stage(filters, kernel, true, batchnorm));
  append(c.layers, stage(filters, kernel, false, batchnorm));
  c.layers.push_back(LayerSpec::gap());
  c.layers.push_back(LayerSpec::linear(8));
  c.branching_level = branching_level;
  c.validate();
  return c;
}

std::vector<LabCandidate> search_lab_architecture(const LabSearchSpace& space, const LabTargets& targets) {
  std::vector<LabCandidate> hits;
  for (int f1 : space.first_filters)
    for (int k1 : space.first_kernels)
      for (int f : space.filters)
        for (int k : space.kernels)
          for (bool bn : space.batchnorm) {
            const LabCandidate cand{f1, k1, f, k, bn};
            const auto single = count_parameters(cand.to_config(5), 1).total();
            if (single != targets.single || 4 * single != targets.traditional) continue;
            if (count_parameters(cand.to_config(3), 4).total() != targets.esr_level3) continue;
            if (count_parameters(cand.to_config(4), 4).total() != targets.esr_level4) continue;
            hits.push_back(cand);
          }
  return hits;
}

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const EsrModel<Scalar>& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, config_hash(model.config()));
    put<std::uint32_t>(out, sizeof(Scalar));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.ensemble_size()));
    put<std::uint8_t>(out, model.has_affect_heads() ? 1 : 0);
    put<std::uint64_t>(out, model.seed());
    put_string(out, architecture_to_json(model.config(), -1));
    const auto params = model.parameters();
    auto& mutable_model = const_cast<EsrModel<Scalar>&>(model);
    const auto buffers = bn_buffers(mutable_model);
    put<std::uint64_t>(out, params.size() + 2 * buffers.size());
    for (const auto* p : params) {
      put_array(out, p->name(), p->value().shape(), p->value().values(), double(p->lr_multiplier()));
    }
    for (const auto& [base, stats] : buffers) {
      put_array(out, base + "running_mean", Shape{stats->mean.size()}, stats->mean, 0.0);
      put_array(out, base + "running_var", Shape{stats->var.size()}, stats->var, 0.0);
    }
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

template <typename Scalar>
EsrModel<Scalar> load_checkpoint(const std::filesystem::path& path, const ArchitectureConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const Header h = read_header(in, path);
  if (expected && config_hash(*expected) != h.hash) {
    throw CheckpointError(path.string() + ": architecture hash mismatch (checkpoint " +
                          std::to_string(h.hash) + ", expected " + std::to_string(config_hash(*expected)) +
                          ")");
  }
  if (h.scalar_size != sizeof(Scalar)) {
    throw CheckpointError(path.string() + ": stored scalar size " + std::to_string(h.scalar_size) +
                          " does not match the requested type");
  }
  EsrModel<Scalar> model(h.config, h.seed);
  for (std::uint32_t b = 0; b < h.branches; ++b) model.add_branch();
  if (h.affect) model.attach_affect_heads();

  std::map<std::string, Parameter<Scalar>*> by_name;
  for (auto* p : model.parameters()) by_name[p->name()] = p;
  std::map<std::string, typename Tensor<Scalar>::Vector*> buffers;
  for (auto& [base, stats] : bn_buffers(model)) {
    buffers[base + "running_mean"] = &stats->mean;
    buffers[base + "running_var"] = &stats->var;
  }
  const auto count = get<std::uint64_t>(in, path);
  if (count != by_name.size() + buffers.size()) {
    throw CheckpointError(path.string() + ": array count does not match the architecture");
  }
  std::set<std::string> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = get_string(in, path);
    const auto rank = get<std::uint32_t>(in, path);
    if (rank > 8) throw CheckpointError(path.string() + ": corrupt rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = get<std::int64_t>(in, path);
    const double multiplier = get<double>(in, path);
    if (!seen.insert(name).second) throw CheckpointError(path.string() + ": duplicate array " + name);
    Scalar* dst = nullptr;
    Index n = 0;
    if (auto it = by_name.find(name); it != by_name.end()) {
      if (it->second->value().shape() != shape) {
        throw CheckpointError(path.string() + ": shape mismatch for " + name);
      }
      dst = it->second->value().data();
      n = it->second->size();
      it->second->set_lr_multiplier(static_cast<Scalar>(multiplier));
    } else if (auto bt = buffers.find(name); bt != buffers.end()) {
      if (shape.size() != 1 || shape[0] != bt->second->size()) {
        throw CheckpointError(path.string() + ": shape mismatch for " + name);
      }
      dst = bt->second->data();
      n = bt->second->size();
    } else {
      throw CheckpointError(path.string() + ": unknown array " + name);
    }
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * sizeof(Scalar)));
    if (!in) throw CheckpointError(path.string() + ": truncated checkpoint");
  }
  return model;
}

ArchitectureConfig checkpoint_architecture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return read_header(in, path).config;
}

template void save_checkpoint<float>(const std::filesystem::path&, const EsrModel<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const EsrModel<double>&);
template EsrModel<float> load_checkpoint<float>(const std::filesystem::path&, const ArchitectureConfig*);
template EsrModel<double> load_checkpoint<double>(const std::filesystem::path&, const ArchitectureConfig*);

}  // namespace esr
