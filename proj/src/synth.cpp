// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/synth.hpp"

#include "esr/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace esr {
namespace {

// Displacements from the neutral face at full intensity.
struct Expression {
  double curvature;   // mouth corners up (+) or down (-)
  double opening;     // lip separation
  double brow_raise;
  double brow_tilt;   // inner brow ends up (+) or down (-)
  double eye_open;    // multiplier on eye height
  double asymmetry;   // one-sided mouth pull
  double arousal;
  double valence;
};

constexpr std::array<const char*, 8> kNames = {"neutral", "happy",   "sad",   "surprise",
                                               "fear",    "disgust", "anger", "contempt"};

constexpr std::array<Expression, 8> kExpressions = {{
    {0.00, 0.00, 0.00, 0.00, 1.0, 0.00, 0.0, 0.0},
    {0.14, 0.04, 0.02, 0.00, 0.8, 0.00, 0.5, 0.8},
    {-0.12, 0.00, 0.00, 0.07, 0.8, 0.00, -0.4, -0.6},
    {0.00, 0.16, 0.09, 0.00, 1.6, 0.00, 0.8, 0.3},
    {-0.05, 0.09, 0.06, 0.07, 1.5, 0.00, 0.7, -0.6},
    {-0.07, 0.03, -0.05, -0.04, 0.6, 0.00, 0.3, -0.7},
    {-0.03, 0.00, -0.06, -0.09, 0.9, 0.00, 0.7, -0.5},
    {0.03, 0.00, 0.00, 0.00, 1.0, 0.09, 0.2, -0.4},
}};

struct Identity {
  double tone, background, cx, cy, rx, ry, eye_spacing, eye_y, eye_size, mouth_y, mouth_width;
  double rest_curvature, rest_brow;
};

Identity draw_identity(std::mt19937_64& rng, double variation) {
  Identity id{};
  id.tone = uniform(rng, 130, 190);
  id.background = uniform(rng, 30, 80);
  id.cx = variation * uniform(rng, -0.05, 0.05);
  id.cy = variation * uniform(rng, -0.05, 0.05);
  id.rx = 0.62 + variation * uniform(rng, -0.05, 0.05);
  id.ry = 0.80 + variation * uniform(rng, -0.05, 0.05);
  id.eye_spacing = 0.28 + variation * uniform(rng, -0.04, 0.04);
  id.eye_y = -0.18 + variation * uniform(rng, -0.04, 0.04);
  id.eye_size = 0.10 + variation * uniform(rng, -0.015, 0.015);
  id.mouth_y = 0.38 + variation * uniform(rng, -0.05, 0.05);
  id.mouth_width = 0.26 + variation * uniform(rng, -0.04, 0.04);
  id.rest_curvature = variation * uniform(rng, -0.03, 0.03);
  id.rest_brow = variation * uniform(rng, -0.02, 0.02);
  return id;
}

// Coverage in [0, 1] from a signed distance (negative inside), edge width w.
double coverage(double sd, double w) { return std::clamp(0.5 - sd / w, 0.0, 1.0); }

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double t = std::clamp(((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
  return std::hypot(px - ax - t * dx, py - ay - t * dy);
}

Image render(const Identity& id, const Expression& e, double intensity, double noise,
             std::mt19937_64& rng, int size) {
  const double curv = id.rest_curvature + intensity * e.curvature;
  const double open = intensity * e.opening;
  const double raise = id.rest_brow + intensity * e.brow_raise;
  const double tilt = intensity * e.brow_tilt;
  const double eye_h = id.eye_size * 0.55 * (1.0 + intensity * (e.eye_open - 1.0));
  const double asym = intensity * e.asymmetry;
  const double pixel = 2.0 / size;
  const double edge = 1.5 * pixel;

  Image img(size, size, 1);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) * pixel - 1.0;
      const double v = (y + 0.5) * pixel - 1.0;
      double value = id.background + 10.0 * v;

      const double fu = (u - id.cx) / id.rx, fv = (v - id.cy) / id.ry;
      const double face = coverage((std::sqrt(fu * fu + fv * fv) - 1.0) * std::min(id.rx, id.ry), edge);
      value += face * (id.tone - value);

      for (int side : {-1, 1}) {
        const double ex = id.cx + side * id.eye_spacing;
        const double ey = id.cy + id.eye_y;
        const double du = (u - ex) / id.eye_size, dv = (v - ey) / std::max(eye_h, 0.2 * pixel);
        const double eye = coverage((std::sqrt(du * du + dv * dv) - 1.0) * std::min(id.eye_size, eye_h), edge);
        value += eye * (id.tone - 100.0 - value);

        const double by = ey - id.eye_size - 0.10 - raise;
        const double inner_x = ex - side * 0.11, outer_x = ex + side * 0.13;
        const double brow = coverage(
            segment_distance(u, v, inner_x, by - tilt, outer_x, by + 0.5 * tilt) - 0.025, edge);
        value += brow * (id.tone - 110.0 - value);
      }

      const double t = (u - id.cx) / id.mouth_width;
      if (std::abs(t) <= 1.0 + edge / id.mouth_width) {
        const double tc = std::clamp(t, -1.0, 1.0);
        const double base = id.cy + id.mouth_y - curv * tc * tc + curv * 0.5 - asym * std::max(tc, 0.0);
        const double half = 0.5 * open * (1.0 - tc * tc) + 0.022;
        const double sd_v = std::abs(v - base) - half;
        const double sd_u = (std::abs(t) - 1.0) * id.mouth_width;
        const double mouth = coverage(std::max(sd_v, sd_u), edge);
        value += mouth * (id.tone - 90.0 - value);
      }

      value += noise * normal(rng);
      img.at(x, y) = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
    }
  }
  return img;
}

}  // namespace

void SynthConfig::validate() const {
  if (classes < 2 || classes > 8) throw std::invalid_argument("synth: classes must be in [2, 8]");
  if (subjects < 1 || samples_per_subject < 1) {
    throw std::invalid_argument("synth: subjects and samples per subject must be positive");
  }
  if (size < 8) throw std::invalid_argument("synth: size must be at least 8 pixels");
  if (noise < 0.0 || subject_variation < 0.0) {
    throw std::invalid_argument("synth: noise and variation must be nonnegative");
  }
}

const char* synth_class_name(int label) {
  if (label < 0 || label >= static_cast<int>(kNames.size())) throw std::out_of_range("synth class");
  return kNames[static_cast<std::size_t>(label)];
}

DatasetIndex generate_synthetic(const SynthConfig& config) {
  config.validate();
  DatasetIndex index;
  index.split = "synthetic";
  index.num_classes = config.classes;
  for (int s = 0; s < config.subjects; ++s) {
    auto id_rng = make_rng(config.seed, static_cast<std::uint64_t>(s));
    const Identity id = draw_identity(id_rng, config.subject_variation);
    char subject[16];
    std::snprintf(subject, sizeof subject, "s%03d", s);
    for (int i = 0; i < config.samples_per_subject; ++i) {
      auto rng = make_rng(config.seed, 1'000'000ULL + static_cast<std::uint64_t>(s) * 1000 + i);
      const int label = (s + i) % config.classes;
      const Expression& e = kExpressions[static_cast<std::size_t>(label)];
      const double intensity = uniform(rng, 0.5, 1.0);
      Sample sample;
      char name[32];
      std::snprintf(name, sizeof name, "%s/%02d.pgm", subject, i);
      sample.path = name;
      sample.subject = subject;
      sample.emotion = label;
      sample.image = render(id, e, intensity, config.noise, rng, config.size);
      if (config.affect) {
        auto jitter = [&] { return 0.05 * normal(rng); };
        sample.arousal = std::clamp(intensity * e.arousal + jitter(), -1.0, 1.0);
        sample.valence = std::clamp(intensity * e.valence + jitter(), -1.0, 1.0);
      }
      index.samples.push_back(std::move(sample));
    }
  }
  return index;
}

void write_dataset(const DatasetIndex& index, const std::filesystem::path& root,
                   const std::string& manifest) {
  std::filesystem::create_directories(root);
  for (const auto& s : index.samples) {
    const auto path = root / s.path;
    std::filesystem::create_directories(path.parent_path());
    write_image(path, s.image);
  }
  write_manifest(root / manifest, index);
}

}  // namespace esr
