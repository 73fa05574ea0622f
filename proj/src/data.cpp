// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/data.hpp"

#include "esr/random.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace esr {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_real(const std::string& s, bool& ok) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) ok = false;
    return v;
  } catch (const std::exception&) {
    ok = false;
    return std::nullopt;
  }
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::size_t> DatasetIndex::class_histogram() const {
  std::vector<std::size_t> h(static_cast<std::size_t>(num_classes), 0);
  for (const auto& s : samples) {
    if (s.emotion) ++h[static_cast<std::size_t>(*s.emotion)];
  }
  return h;
}

std::vector<std::size_t> DatasetIndex::all_indices() const {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

DatasetIndex load_dataset(const std::filesystem::path& root, const std::filesystem::path& manifest,
                          int num_classes) {
  std::ifstream in(manifest);
  if (!in) throw DatasetError("cannot open manifest " + manifest.string(), {});
  std::string line;
  if (!std::getline(in, line)) throw DatasetError("manifest " + manifest.string() + " is empty", {});
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader) {
    throw DatasetError("manifest header must be '" + std::string(kManifestHeader) + "', got '" +
                           line + "'",
                       {1});
  }
  DatasetIndex index;
  index.split = manifest.stem().string();
  index.num_classes = num_classes;
  std::vector<std::size_t> bad_rows;
  std::ostringstream problems;
  std::set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    auto fail = [&](const std::string& why) {
      bad_rows.push_back(lineno);
      problems << "\n  line " << lineno << ": " << why;
    };
    if (fields.size() != 5) {
      fail("expected 5 fields, got " + std::to_string(fields.size()));
      continue;
    }
    for (auto& f : fields) f = trim(f);
    Sample s;
    s.path = fields[0];
    bool ok = true;
    if (s.path.empty()) {
      fail("empty path");
      continue;
    }
    if (!seen.insert(s.path).second) {
      fail("duplicate path " + s.path);
      continue;
    }
    if (!fields[1].empty()) {
      try {
        std::size_t used = 0;
        const int e = std::stoi(fields[1], &used);
        if (used != fields[1].size() || e < 0 || e >= num_classes) ok = false;
        s.emotion = e;
      } catch (const std::exception&) {
        ok = false;
      }
      if (!ok) {
        fail("emotion label '" + fields[1] + "' outside [0, " + std::to_string(num_classes) + ")");
        continue;
      }
    }
    s.arousal = parse_real(fields[2], ok);
    s.valence = parse_real(fields[3], ok);
    if (!ok || (s.arousal && std::abs(*s.arousal) > 1.0) || (s.valence && std::abs(*s.valence) > 1.0)) {
      fail("arousal/valence must be reals in [-1, 1]");
      continue;
    }
    if (s.arousal.has_value() != s.valence.has_value()) {
      fail("arousal and valence must be given together");
      continue;
    }
    if (!s.emotion && !s.arousal) {
      fail("row has no supervision signal");
      continue;
    }
    if (!fields[4].empty()) s.subject = fields[4];
    try {
      s.image = read_image(root / s.path);
    } catch (const ImageError& e) {
      fail(e.what());
      continue;
    }
    if (s.image.empty()) {
      fail("image is empty");
      continue;
    }
    index.samples.push_back(std::move(s));
  }
  if (!bad_rows.empty()) {
    throw DatasetError("manifest " + manifest.string() + " has " + std::to_string(bad_rows.size()) +
                           " bad row(s):" + problems.str(),
                       std::move(bad_rows));
  }
  if (index.samples.empty()) throw DatasetError("manifest " + manifest.string() + " has no rows", {});
  return index;
}

void write_manifest(const std::filesystem::path& manifest, const DatasetIndex& index) {
  std::ofstream out(manifest);
  if (!out) throw DatasetError("cannot write manifest " + manifest.string(), {});
  out << kManifestHeader << '\n';
  for (const auto& s : index.samples) {
    out << s.path << ',' << (s.emotion ? std::to_string(*s.emotion) : "") << ','
        << (s.arousal ? format_real(*s.arousal) : "") << ','
        << (s.valence ? format_real(*s.valence) : "") << ',' << s.subject.value_or("") << '\n';
  }
}

std::string format_histogram(const DatasetIndex& index) {
  std::ostringstream os;
  const auto h = index.class_histogram();
  std::size_t total = 0;
  os << "class histogram (" << index.split << "):";
  for (std::size_t c = 0; c < h.size(); ++c) {
    os << ' ' << c << '=' << h[c];
    total += h[c];
  }
  os << " total=" << total;
  return os.str();
}

// ---------------------------------------------------------------------------

FoldPlan::Trial FoldPlan::trial(int t, int train_folds) const {
  if (t < 0 || t >= k) throw std::out_of_range("trial index outside [0, k)");
  if (train_folds < 1 || train_folds > k - 2) {
    throw std::invalid_argument("train fold count must be in [1, k-2]");
  }
  Trial tr;
  tr.test = t;
  tr.validation = (t + 1) % k;
  for (int f = 0; f < k && static_cast<int>(tr.train.size()) < train_folds; ++f) {
    if (f != tr.test && f != tr.validation) tr.train.push_back(f);
  }
  return tr;
}

std::vector<std::size_t> FoldPlan::samples_of(std::span<const int> fold_ids) const {
  std::vector<std::size_t> out;
  for (int f : fold_ids) {
    const auto& v = folds.at(static_cast<std::size_t>(f));
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

FoldPlan make_subject_folds(const DatasetIndex& index, int k) {
  if (k < 2) throw std::invalid_argument("make_subject_folds: k must be at least 2");
  std::vector<std::size_t> missing;
  std::set<std::string> subjects;
  for (std::size_t i = 0; i < index.samples.size(); ++i) {
    const auto& s = index.samples[i].subject;
    if (!s) {
      missing.push_back(i);
    } else {
      subjects.insert(*s);
    }
  }
  if (!missing.empty()) {
    throw DatasetError("make_subject_folds: " + std::to_string(missing.size()) +
                           " sample(s) lack a subject id",
                       missing);
  }
  if (static_cast<int>(subjects.size()) < k) {
    throw std::invalid_argument("make_subject_folds: " + std::to_string(subjects.size()) +
                                " subjects cannot fill " + std::to_string(k) + " folds");
  }
  FoldPlan plan;
  plan.k = k;
  plan.subjects.assign(subjects.begin(), subjects.end());
  for (std::size_t i = 0; i < plan.subjects.size(); ++i) {
    plan.fold_of_subject[plan.subjects[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  plan.folds.assign(static_cast<std::size_t>(k), {});
  for (std::size_t i = 0; i < index.samples.size(); ++i) {
    const int f = plan.fold_of_subject.at(*index.samples[i].subject);
    plan.folds[static_cast<std::size_t>(f)].push_back(i);
  }
  return plan;
}

namespace {

template <typename KeyFn>
std::vector<std::size_t> capped_draw(std::span<const std::size_t> candidates, int groups, int cap,
                                     std::uint64_t seed, KeyFn key) {
  if (cap < 1) throw std::invalid_argument("subset cap must be at least 1");
  std::vector<std::vector<std::size_t>> by_group(static_cast<std::size_t>(groups));
  for (auto i : candidates) {
    const int g = key(i);
    if (g >= 0) by_group[static_cast<std::size_t>(g)].push_back(i);
  }
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < by_group.size(); ++g) {
    auto& pool = by_group[g];
    auto rng = make_rng(seed, g);
    shuffle(pool.begin(), pool.end(), rng);
    const auto take = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(cap));
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

}  // namespace

std::vector<std::size_t> balanced_subset(const DatasetIndex& index,
                                         std::span<const std::size_t> candidates, int cap,
                                         std::uint64_t seed) {
  return capped_draw(candidates, index.num_classes, cap, seed, [&](std::size_t i) {
    const auto& e = index.samples[i].emotion;
    return e ? *e : -1;
  });
}

std::vector<std::size_t> balanced_subset(const DatasetIndex& index, int cap, std::uint64_t seed) {
  const auto all = index.all_indices();
  return balanced_subset(index, all, cap, seed);
}

int affect_quadrant(double arousal, double valence) {
  return (arousal >= 0.0 ? 2 : 0) | (valence >= 0.0 ? 1 : 0);
}

std::vector<std::size_t> quadrant_balanced_subset(const DatasetIndex& index,
                                                  std::span<const std::size_t> candidates, int cap,
                                                  std::uint64_t seed) {
  const bool any = std::any_of(candidates.begin(), candidates.end(),
                               [&](std::size_t i) { return index.samples[i].has_affect(); });
  if (!any) throw DatasetError("quadrant_balanced_subset: no sample carries arousal/valence", {});
  return capped_draw(candidates, 4, cap, seed, [&](std::size_t i) {
    const auto& s = index.samples[i];
    return s.has_affect() ? affect_quadrant(*s.arousal, *s.valence) : -1;
  });
}

std::vector<std::size_t> quadrant_balanced_subset(const DatasetIndex& index, int cap,
                                                  std::uint64_t seed) {
  const auto all = index.all_indices();
  return quadrant_balanced_subset(index, all, cap, seed);
}

// ---------------------------------------------------------------------------

namespace {

// Planar float image, row-major per channel.
struct Planes {
  int width = 0, height = 0, channels = 0;
  std::vector<double> data;
  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  [[nodiscard]] double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

Planes to_planes(const Image& img, int channels) {
  Planes p{img.width, img.height, channels,
           std::vector<double>(static_cast<std::size_t>(img.width) * img.height * channels)};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (channels == img.channels) {
        for (int c = 0; c < channels; ++c) p.at(c, y, x) = img.at(x, y, c);
      } else if (channels == 1) {
        // ITU-R BT.601 luma
        p.at(0, y, x) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
      } else {
        for (int c = 0; c < channels; ++c) p.at(c, y, x) = img.at(x, y, 0);
      }
    }
  }
  return p;
}

Planes resize_planes(const Planes& in, int width, int height) {
  if (in.width == width && in.height == height) return in;
  Planes out{width, height, in.channels,
             std::vector<double>(static_cast<std::size_t>(width) * height * in.channels)};
  const double sx = double(in.width) / width;
  const double sy = double(in.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(in.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, in.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(in.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, in.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < in.channels; ++c) {
        const double top = in.at(c, y0, x0) * (1 - wx) + in.at(c, y0, x1) * wx;
        const double bot = in.at(c, y1, x0) * (1 - wx) + in.at(c, y1, x1) * wx;
        out.at(c, y, x) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace

Image resize_bilinear(const Image& image, int width, int height) {
  if (image.empty()) throw ImageError("resize_bilinear: zero-area image");
  if (width < 1 || height < 1) throw ImageError("resize_bilinear: target must be positive");
  if (image.width == width && image.height == height) return image;
  const Planes p = resize_planes(to_planes(image, image.channels), width, height);
  Image out(width, height, image.channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < image.channels; ++c)
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(p.at(c, y, x), 0.0, 255.0)));
  return out;
}

template <typename Scalar>
Tensor<Scalar> preprocess(const Image& image, const PreprocessConfig& config) {
  if (image.empty()) throw ImageError("preprocess: zero-area image");
  if (image.channels != 1 && image.channels != 3) {
    throw ImageError("preprocess: unsupported channel count " + std::to_string(image.channels));
  }
  if (config.channels != 1 && config.channels != 3) {
    throw ImageError("preprocess: target channel count must be 1 or 3");
  }
  const Planes p = resize_planes(to_planes(image, config.channels), config.width, config.height);
  Tensor<Scalar> out(Shape{config.channels, config.height, config.width});
  const auto plane = static_cast<Index>(config.height) * config.width;
  for (int c = 0; c < config.channels; ++c) {
    const double m = config.standardization.mean_of(c);
    const double s = config.standardization.std_of(c);
    for (Index i = 0; i < plane; ++i) {
      out[c * plane + i] = static_cast<Scalar>((p.data[static_cast<std::size_t>(c * plane + i)] / 255.0 - m) / s);
    }
  }
  return out;
}

void AugmentationConfig::validate() const {
  if (max_rotation_deg < 0.0 || max_rotation_deg > 30.0) {
    throw std::invalid_argument("augmentation: max rotation must be in [0, 30] degrees");
  }
  if (flip_probability < 0.0 || flip_probability > 1.0) {
    throw std::invalid_argument("augmentation: flip probability must be in [0, 1]");
  }
  if (brightness < 0.0 || contrast < 0.0 || contrast >= 1.0 || translation < 0.0 ||
      translation >= 0.5 || rescale < 0.0 || rescale >= 1.0) {
    throw std::invalid_argument("augmentation: magnitudes out of range");
  }
}

AugmentationDraw draw_augmentation(const AugmentationConfig& config, int height, int width,
                                   std::uint64_t seed) {
  config.validate();
  auto rng = make_rng(seed, 0xa7);
  AugmentationDraw d;
  auto sym = [&](double mag) { return mag * (2.0 * uniform01(rng) - 1.0); };
  d.brightness = sym(config.brightness);
  d.contrast = 1.0 + sym(config.contrast);
  d.flip = uniform01(rng) < config.flip_probability;
  d.rotation_deg = sym(config.max_rotation_deg);
  d.shift_x = sym(config.translation) * width;
  d.shift_y = sym(config.translation) * height;
  d.scale = 1.0 + sym(config.rescale);
  return d;
}

template <typename Scalar>
Tensor<Scalar> apply_augmentation(const Tensor<Scalar>& chw, const AugmentationDraw& d) {
  if (chw.rank() != 3) throw ShapeError("augment: expected a C x H x W tensor");
  const Index ch = chw.dim(0);
  const Index h = chw.dim(1);
  const Index w = chw.dim(2);
  Tensor<Scalar> out(chw.shape());
  const bool geometric =
      d.flip || d.rotation_deg != 0.0 || d.shift_x != 0.0 || d.shift_y != 0.0 || d.scale != 1.0;
  if (!geometric) {
    out = chw;
  } else {
    const double theta = d.rotation_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    const double cx = (double(w) - 1.0) / 2.0;
    const double cy = (double(h) - 1.0) / 2.0;
    for (Index y = 0; y < h; ++y) {
      for (Index x = 0; x < w; ++x) {
        // Inverse map: undo shift, rotation and zoom, then the flip.
        const double qx = (double(x) - cx - d.shift_x) / d.scale;
        const double qy = (double(y) - cy - d.shift_y) / d.scale;
        double sx = cs * qx + sn * qy;
        const double sy = -sn * qx + cs * qy;
        if (d.flip) sx = -sx;
        const double fx = std::clamp(sx + cx, 0.0, double(w - 1));
        const double fy = std::clamp(sy + cy, 0.0, double(h - 1));
        const Index x0 = static_cast<Index>(fx);
        const Index y0 = static_cast<Index>(fy);
        const Index x1 = std::min(x0 + 1, w - 1);
        const Index y1 = std::min(y0 + 1, h - 1);
        const double wx = fx - double(x0);
        const double wy = fy - double(y0);
        for (Index c = 0; c < ch; ++c) {
          const Scalar* p = chw.data() + c * h * w;
          double v;
          if (wx == 0.0 && wy == 0.0) {
            v = p[y0 * w + x0];
          } else {
            v = (p[y0 * w + x0] * (1 - wx) + p[y0 * w + x1] * wx) * (1 - wy) +
                (p[y1 * w + x0] * (1 - wx) + p[y1 * w + x1] * wx) * wy;
          }
          out[(c * h + y) * w + x] = static_cast<Scalar>(v);
        }
      }
    }
  }
  if (d.contrast != 1.0 || d.brightness != 0.0) {
    for (Index c = 0; c < ch; ++c) {
      auto seg = out.values().segment(c * h * w, h * w);
      const Scalar mean = seg.mean();
      if (d.contrast != 1.0) seg.array() = (seg.array() - mean) * Scalar(d.contrast) + mean;
      if (d.brightness != 0.0) seg.array() += Scalar(d.brightness);
    }
  }
  return out;
}

template <typename Scalar>
LabeledSet<Scalar> LabeledSet<Scalar>::subset(std::span<const std::size_t> indices) const {
  LabeledSet s;
  s.num_classes = num_classes;
  for (auto i : indices) {
    s.images.push_back(images.at(i));
    s.labels.push_back(labels.at(i));
    s.affect.push_back(affect.at(i));
    s.groups.push_back(groups.at(i));
  }
  return s;
}

template <typename Scalar>
std::vector<std::size_t> LabeledSet<Scalar>::indices_in_groups(std::span<const int> wanted) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (std::find(wanted.begin(), wanted.end(), groups[i]) != wanted.end()) out.push_back(i);
  }
  return out;
}

template <typename Scalar>
LabeledSet<Scalar> make_labeled_set(const DatasetIndex& index, std::span<const std::size_t> indices,
                                    const PreprocessConfig& config, const FoldPlan* folds) {
  LabeledSet<Scalar> set;
  set.num_classes = index.num_classes;
  const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
  for (auto i : indices) {
    const auto& s = index.samples.at(i);
    set.images.push_back(preprocess<Scalar>(s.image, config));
    set.labels.push_back(s.emotion.value_or(-1));
    set.affect.push_back(s.has_affect() ? std::array<Scalar, 2>{Scalar(*s.arousal), Scalar(*s.valence)}
                                        : std::array<Scalar, 2>{nan, nan});
    int g = -1;
    if (folds && s.subject) g = folds->fold_of_subject.at(*s.subject);
    set.groups.push_back(g);
  }
  return set;
}

template <typename Scalar>
Tensor<Scalar> stack_batch(const LabeledSet<Scalar>& set, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("stack_batch: empty batch");
  const auto& first = set.images.at(indices[0]);
  Shape shape{static_cast<Index>(indices.size())};
  shape.insert(shape.end(), first.shape().begin(), first.shape().end());
  Tensor<Scalar> batch(shape);
  const Index stride = first.size();
  for (std::size_t n = 0; n < indices.size(); ++n) {
    batch.values().segment(static_cast<Index>(n) * stride, stride) = set.images.at(indices[n]).values();
  }
  return batch;
}

#define ESR_INSTANTIATE_DATA(S)                                                                  \
  template Tensor<S> preprocess<S>(const Image&, const PreprocessConfig&);                      \
  template Tensor<S> apply_augmentation<S>(const Tensor<S>&, const AugmentationDraw&);          \
  template struct LabeledSet<S>;                                                                \
  template LabeledSet<S> make_labeled_set<S>(const DatasetIndex&, std::span<const std::size_t>, \
                                             const PreprocessConfig&, const FoldPlan*);         \
  template Tensor<S> stack_batch<S>(const LabeledSet<S>&, std::span<const std::size_t>);

ESR_INSTANTIATE_DATA(float)
ESR_INSTANTIATE_DATA(double)

#undef ESR_INSTANTIATE_DATA

}  // namespace esr
