// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "checks.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace esr {
namespace {

TEST(GradCam, HandComputedTwoChannelCase) {
  Tensor<double> a({2, 2, 2}, {1, 2, 0, 1, 2, 0, 1, 1});
  Tensor<double> g({2, 2, 2}, {1, 1, 1, 1, -1, 0, -1, 0});
  // Weights 1 and -0.5: sum [[0, 2], [-0.5, 0.5]], rectified and divided by 2.
  Eigen::MatrixXd expected(2, 2);
  expected << 0, 1, 0, 0.25;
  EXPECT_LT((grad_cam_from(a, g) - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(grad_cam_from(a, Tensor<double>({2, 2, 1})), ShapeError);
}

TEST(GradCam, AllNegativeMapIsZero) {
  Tensor<double> a = Tensor<double>::constant({1, 3, 3}, 1.0);
  Tensor<double> g = Tensor<double>::constant({1, 3, 3}, -2.0);
  EXPECT_EQ(grad_cam_from(a, g), Eigen::MatrixXd::Zero(3, 3));
  EXPECT_EQ(normalize_map(Eigen::MatrixXd::Zero(2, 2)), Eigen::MatrixXd::Zero(2, 2));
  Eigen::MatrixXd m(1, 2);
  m << 2, 4;
  EXPECT_DOUBLE_EQ(normalize_map(m)(0, 0), 0.5);
}

TEST(GradCam, DefaultLayerMatchesLinearHeadOracle) {
  // Global pooling then a linear head: d(logit_c)/dA_k = W_ck / (H W), so
  // the map is relu(sum_k W_ck A_k) up to normalization.
  const auto arch = desk_architecture(3, 24, 4, 8);
  const int layer = default_gradcam_layer(arch);
  EXPECT_EQ(arch.layers[static_cast<std::size_t>(layer) + 1].kind, LayerKind::GlobalAvgPool);
  EsrModel<double> model(arch, 17);
  model.add_branch();
  model.add_branch();
  auto rng = make_rng(17, 1);
  const auto x = checks::random_tensor({1, 1, 24, 24}, rng);
  for (int b = 0; b < 2; ++b) {
    for (int c : {0, 5}) {
      const auto map = grad_cam(model, b, x, c);
      Tape<double> tape(false);
      ForwardTrace<double> trace;
      model.forward(tape, x, Mode::Eval, &trace);
      const auto& act =
          trace.branches[static_cast<std::size_t>(b)][static_cast<std::size_t>(layer) - arch.split_index()]->value;
      const auto& w = model.branches()[static_cast<std::size_t>(b)].layers.back().params[0].value();
      const Index k = act.dim(1), h = act.dim(2), wd = act.dim(3);
      Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(h, wd);
      for (Index ch = 0; ch < k; ++ch)
        for (Index y = 0; y < h; ++y)
          for (Index z = 0; z < wd; ++z) ref(y, z) += w.at(c, ch) * act.at(0, ch, y, z);
      ref = normalize_map(ref.cwiseMax(0.0));
      ASSERT_EQ(map.values.rows(), h);
      EXPECT_LT((map.values - ref).cwiseAbs().maxCoeff(), 1e-10) << "branch " << b << " class " << c;
      EXPECT_EQ(map.layer, layer);
    }
  }
}

TEST(GradCam, ShapesAndErrors) {
  const auto arch = desk_architecture(3, 24, 4, 8);
  EsrModel<float> model(arch, 2);
  model.add_branch();
  const Tensor<float> x({1, 24, 24});
  const auto shapes = arch.activation_shapes();
  const auto m = grad_cam(model, 0, x, 1, 0);
  EXPECT_EQ(m.values.rows(), shapes[0][1]);
  EXPECT_EQ(m.values.cols(), shapes[0][2]);
  EXPECT_THROW(grad_cam(model, 1, x, 0), std::out_of_range);
  EXPECT_THROW(grad_cam(model, 0, x, 8), std::out_of_range);
  EXPECT_THROW(grad_cam(model, 0, x, 0, static_cast<int>(arch.layers.size()) - 1), std::invalid_argument);
  EXPECT_THROW(grad_cam(model, 0, x, 0, 99), std::out_of_range);
  EXPECT_THROW(grad_cam(model, 0, Tensor<float>({2, 1, 24, 24}), 0), ShapeError);
  // No gradient should linger on the parameters afterwards.
  for (const auto* p : model.parameters()) EXPECT_FALSE(p->has_grad());
}

TEST(Heatmap, UpsampleJetAndRender) {
  Eigen::MatrixXd m(1, 2);
  m << 0.0, 1.0;
  const auto up = upsample_map(m, 1, 4);
  EXPECT_DOUBLE_EQ(up(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(up(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(up(0, 2), 0.75);
  EXPECT_DOUBLE_EQ(up(0, 3), 1.0);
  EXPECT_EQ(upsample_map(m, 1, 2), m);
  EXPECT_THROW(upsample_map(Eigen::MatrixXd(0, 0), 2, 2), std::invalid_argument);

  const auto lo = jet(0.0), mid = jet(0.5), hi = jet(1.0);
  EXPECT_DOUBLE_EQ(lo[0], 0.0);
  EXPECT_DOUBLE_EQ(lo[2], 0.5);
  EXPECT_DOUBLE_EQ(mid[1], 1.0);
  EXPECT_DOUBLE_EQ(hi[0], 0.5);
  EXPECT_DOUBLE_EQ(hi[2], 0.0);

  const Image base(4, 1, 1, 100);
  const auto img = render_heatmap(m, base);
  EXPECT_EQ(img.channels, 3);
  EXPECT_EQ(img.width, 4);
  EXPECT_GT(img.at(3, 0, 0), img.at(0, 0, 0));
  EXPECT_THROW(render_heatmap(m, Image{}), ImageError);
}

TEST(Heatmap, DiversityScore) {
  Eigen::MatrixXd a(1, 2), b(1, 2), z = Eigen::MatrixXd::Zero(1, 2);
  a << 1, 0;
  b << 0, 1;
  const std::vector<Eigen::MatrixXd> same{a, a}, orth{a, b}, with_zero{a, z};
  EXPECT_NEAR(diversity_score(same), 0.0, 1e-15);
  EXPECT_NEAR(diversity_score(orth), 1.0, 1e-15);
  EXPECT_NEAR(diversity_score(with_zero), 1.0, 1e-15);
  const std::vector<Eigen::MatrixXd> one{a};
  EXPECT_THROW(diversity_score(one), std::invalid_argument);
  const std::vector<Eigen::MatrixXd> mixed{a, Eigen::MatrixXd::Ones(2, 2)};
  EXPECT_THROW(diversity_score(mixed), ShapeError);
}

TEST(Heatmap, CsvLayout) {
  const auto path = std::filesystem::temp_directory_path() / "esr-map.csv";
  Eigen::MatrixXd m(2, 2);
  m << 0, 0.5, 1, 0.25;
  write_map_csv(path, m);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "row,col,value");
  EXPECT_EQ(lines[2].substr(0, 4), "0,1,");
}

TEST(Milestones, CapturedPerBranch) {
  SynthConfig sc;
  sc.subjects = 6;
  sc.samples_per_subject = 4;
  sc.size = 24;
  const auto index = generate_synthetic(sc);
  const auto set = make_labeled_set<float>(index, index.all_indices(), {1, 24, 24, {}});
  EsrModel<float> model(desk_architecture(3, 24, 4, 8), 8);
  TrainConfig tc;
  tc.epochs_per_branch = 3;
  tc.batch_size = 8;
  tc.subset = SubsetPolicy::All;
  tc.strategy = TrainingStrategy::fixed(0.05);
  tc.schedule = {0.05, 0.5, 100};
  std::vector<MilestoneMap> maps;
  const auto hooks = gradcam_milestone_hooks<float>(set.images[0], set.labels[0], 3, &maps, {0, 1});
  train_esr(model, set, set, tc, 2, hooks);
  std::vector<std::pair<int, int>> seen;
  for (const auto& m : maps) seen.emplace_back(m.branch, m.epoch);
  EXPECT_EQ(seen, (std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {0, 3}, {1, 0}, {1, 1}, {1, 3}}));
}

}  // namespace
}  // namespace esr
