// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "checks.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace esr {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("esr-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Architecture, LabCountsPerLevel) {
  const auto lab = lab_architecture();
  const Index single = count_parameters(lab.with_level(5), 1).total();
  EXPECT_EQ(single, 131'208);
  EXPECT_EQ(count_parameters(lab.with_level(3), 4).total(), 355'104);
  EXPECT_EQ(count_parameters(lab.with_level(4), 4).total(), 243'936);
}

TEST(Architecture, StructuralIdentitiesHoldForEveryLevel) {
  for (const auto& arch : {lab_architecture(), wild_architecture(), desk_architecture()}) {
    const Index single = count_parameters(arch.with_level(arch.stage_count()), 1).total();
    Index previous = -1;
    for (int level = 1; level <= arch.stage_count(); ++level) {
      for (int e : {1, 4, 9}) {
        const auto c = count_parameters(arch.with_level(level), e);
        ASSERT_EQ(static_cast<int>(c.branches.size()), e);
        EXPECT_EQ(c.total(), c.shared + e * c.branches.front());
        if (e == 1) EXPECT_EQ(c.total(), single);
      }
      const Index four = count_parameters(arch.with_level(level), 4).total();
      if (previous >= 0) EXPECT_LT(four, previous) << arch.name << " level " << level;
      EXPECT_LE(four, 4 * single);
      previous = four;
    }
  }
}

TEST(Architecture, SearchFindsExactlyTheLabTopology) {
  const auto hits = search_lab_architecture();
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits.front(), LabCandidate{});
  EXPECT_EQ(hits.front().to_config(3), lab_architecture(3));
}

TEST(Architecture, WildScale) {
  const auto c = count_parameters(wild_architecture(), 9, true);
  EXPECT_NEAR(double(c.total()), 20e6, 2e6);
  EXPECT_EQ(c.affect_heads.size(), 9u);
}

TEST(Architecture, ValidationNamesTheProblem) {
  auto a = lab_architecture();
  a.branching_level = 6;
  EXPECT_THROW(a.validate(), ConfigError);
  a = lab_architecture();
  a.input.height = a.input.width = 4;
  try {
    a.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("layer"), std::string::npos) << e.what();
  }
}

TEST(Architecture, JsonRoundTripAndUnknownKeys) {
  for (const auto& arch : {lab_architecture(), wild_architecture(), desk_architecture(2, 32, 4, 8)}) {
    const auto back = architecture_from_json(architecture_to_json(arch));
    EXPECT_EQ(back, arch);
    EXPECT_EQ(config_hash(back), config_hash(arch));
  }
  EXPECT_NE(config_hash(lab_architecture(3)), config_hash(lab_architecture(4)));
  EXPECT_THROW(architecture_from_json(R"({"name": "x", "bogus": 1})"), ConfigError);
  EXPECT_THROW(architecture_from_json("{"), ConfigError);
}

TEST(Model, ForwardShapesAndBranchGrowth) {
  EsrModel<float> m(desk_architecture(3, 24, 4, 8), 1);
  EXPECT_EQ(m.ensemble_size(), 0);
  EXPECT_EQ(m.add_branch(), 1);
  EXPECT_EQ(m.add_branch(), 2);
  Tape<float> tape(false);
  const auto out = m.forward(tape, Tensor<float>({3, 1, 24, 24}), Mode::Eval);
  ASSERT_EQ(out.emotion_logits.size(), 2u);
  EXPECT_EQ(out.emotion_logits[1]->value.shape(), (Shape{3, 8}));
  EXPECT_TRUE(out.affect.empty());
  EXPECT_THROW(m.forward(tape, Tensor<float>({1, 1, 20, 24}), Mode::Eval), ShapeError);
}

TEST(Model, TrunkRunsOncePerForward) {
  EsrModel<float> m(desk_architecture(3, 24, 4, 8), 1);
  for (int i = 0; i < 4; ++i) m.add_branch();
  Tape<float> tape;
  m.forward(tape, Tensor<float>({2, 1, 24, 24}), Mode::Train);
  // Stages 1..3 in the trunk, two in each branch.
  EXPECT_EQ(tape.count("conv2d"), 3u + 4u * 2u);
}

TEST(Model, CopiesAreIndependentSnapshots) {
  EsrModel<float> m(desk_architecture(), 4);
  m.add_branch();
  EsrModel<float> copy = m;
  m.parameters().front()->value()[0] += 1.0f;
  EXPECT_NE(m.checksum(Selector::shared()), copy.checksum(Selector::shared()));
}

TEST(Model, SeedDeterminesInitialization) {
  EsrModel<float> a(desk_architecture(), 4), b(desk_architecture(), 4), c(desk_architecture(), 5);
  a.add_branch();
  b.add_branch();
  c.add_branch();
  EXPECT_EQ(a.checksum(Selector::shared()), b.checksum(Selector::shared()));
  EXPECT_EQ(a.checksum(Selector::branch(0)), b.checksum(Selector::branch(0)));
  EXPECT_NE(a.checksum(Selector::shared()), c.checksum(Selector::shared()));
}

TEST(Model, LrMultiplierSelectors) {
  EsrModel<float> m(desk_architecture(), 1);
  for (int i = 0; i < 3; ++i) m.add_branch();
  const Index all = m.count_trainable();
  m.set_trainable(Selector::shared(), 0.0f);
  m.set_trainable(Selector::branches(0, 1), 0.0f);
  const auto counts = m.count_parameters();
  EXPECT_EQ(m.count_trainable(), counts.branches[2]);
  m.set_lr_multiplier(Selector::branches(), 1.0f);
  EXPECT_EQ(m.count_trainable(), all - counts.shared);
  EXPECT_THROW(m.set_lr_multiplier(Selector::branch(3), 1.0f), std::invalid_argument);
}

TEST(Model, FrozenBatchNormKeepsRunningStatistics) {
  EsrModel<float> m(desk_architecture(), 1);
  m.add_branch();
  m.set_trainable(Selector::shared(), 0.0f);
  const auto& bn = m.trunk()[1];
  ASSERT_EQ(bn.spec.kind, LayerKind::BatchNorm);
  const auto before = bn.stats.mean;
  auto rng = make_rng(1, 1);
  Tape<float> tape;
  m.forward(tape, checks::random_tensor({4, 1, 24, 24}, rng).cast<float>(), Mode::Train);
  EXPECT_EQ(m.trunk()[1].stats.mean, before);
  EXPECT_NE(m.branches()[0].layers[1].stats.mean, Eigen::VectorXf::Zero(16));
}

TEST(Model, AffectHeadsFreezeEverythingElse) {
  EsrModel<float> m(desk_architecture(), 1);
  m.add_branch();
  m.add_branch();
  m.attach_affect_heads();
  EXPECT_TRUE(m.has_affect_heads());
  EXPECT_EQ(m.count_trainable(), m.count_parameters().affect_total());
  Tape<float> tape(false);
  const auto out = m.forward(tape, Tensor<float>({2, 1, 24, 24}), Mode::Eval);
  ASSERT_EQ(out.affect.size(), 2u);
  EXPECT_EQ(out.affect[0]->value.shape(), (Shape{2, 2}));
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto dir = scratch_dir("ckpt");
  EsrModel<float> m(desk_architecture(), 8);
  m.add_branch();
  m.add_branch();
  m.trunk()[1].stats.mean[3] = 0.25f;
  save_checkpoint(dir / "m.ckpt", m);
  EXPECT_FALSE(fs::exists(dir / "m.ckpt.tmp"));
  const auto arch = desk_architecture();
  auto back = load_checkpoint<float>(dir / "m.ckpt", &arch);
  EXPECT_EQ(back.ensemble_size(), 2);
  EXPECT_EQ(back.checksum(Selector::shared()), m.checksum(Selector::shared()));
  EXPECT_EQ(back.checksum(Selector::branches()), m.checksum(Selector::branches()));
  EXPECT_EQ(back.trunk()[1].stats.mean[3], 0.25f);
  EXPECT_EQ(checkpoint_architecture(dir / "m.ckpt"), arch);

  Tape<float> t1(false), t2(false);
  auto rng = make_rng(2, 2);
  const auto x = checks::random_tensor({2, 1, 24, 24}, rng).cast<float>();
  const auto a = m.forward(t1, x, Mode::Eval), b = back.forward(t2, x, Mode::Eval);
  EXPECT_EQ(checksum(a.emotion_logits[1]->value), checksum(b.emotion_logits[1]->value));
}

TEST(Checkpoint, HashMismatchAndCorruptionAreRejected) {
  const auto dir = scratch_dir("ckpt-bad");
  EsrModel<float> m(desk_architecture(3), 8);
  m.add_branch();
  save_checkpoint(dir / "m.ckpt", m);
  const auto other = desk_architecture(2);
  EXPECT_THROW(load_checkpoint<float>(dir / "m.ckpt", &other), CheckpointError);
  EXPECT_THROW(load_checkpoint<double>(dir / "m.ckpt"), CheckpointError);
  {
    std::ofstream f(dir / "junk.ckpt", std::ios::binary);
    f << "not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint<float>(dir / "junk.ckpt"), CheckpointError);
  EXPECT_THROW(load_checkpoint<float>(dir / "missing.ckpt"), CheckpointError);
  fs::resize_file(dir / "m.ckpt", fs::file_size(dir / "m.ckpt") - 5);
  EXPECT_THROW(load_checkpoint<float>(dir / "m.ckpt"), CheckpointError);
}

}  // namespace
}  // namespace esr
