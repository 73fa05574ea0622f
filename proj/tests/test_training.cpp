// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "checks.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

namespace esr {
namespace {

struct Tiny {
  DatasetIndex index;
  FoldPlan folds;
  LabeledSet<float> train;
  LabeledSet<float> val;
  ArchitectureConfig arch = desk_architecture(3, 24, 4, 8);
};

const Tiny& tiny() {
  static const Tiny t = [] {
    Tiny t;
    SynthConfig sc;
    sc.subjects = 10;
    sc.samples_per_subject = 8;
    sc.size = 24;
    sc.seed = 3;
    t.index = generate_synthetic(sc);
    t.folds = make_subject_folds(t.index, 5);
    const PreprocessConfig pre{1, 24, 24, {}};
    const int train_folds[] = {0, 1, 2};
    const int val_fold[] = {3};
    const auto tr = t.folds.samples_of(train_folds);
    const auto va = t.folds.samples_of(val_fold);
    t.train = make_labeled_set<float>(t.index, tr, pre, &t.folds);
    t.val = make_labeled_set<float>(t.index, va, pre, &t.folds);
    return t;
  }();
  return t;
}

TrainConfig quick(TrainingStrategy s, int epochs = 2) {
  TrainConfig c;
  c.epochs_per_branch = epochs;
  c.batch_size = 8;
  c.strategy = s;
  c.schedule = {s.lr_new_branch, 0.5, 250};
  c.seed = 11;
  c.subset = SubsetPolicy::All;
  return c;
}

TEST(Schedule, StepDecay) {
  const auto s = LrSchedule::lab();
  EXPECT_DOUBLE_EQ(s.lr_at(0), 0.1);
  EXPECT_DOUBLE_EQ(s.lr_at(249), 0.1);
  EXPECT_DOUBLE_EQ(s.lr_at(250), 0.05);
  EXPECT_DOUBLE_EQ(s.lr_at(500), 0.025);
  EXPECT_DOUBLE_EQ(lr_at_epoch(LrSchedule::transfer(), 20), 0.1 * 0.75 * 0.75);
  EXPECT_THROW(s.lr_at(-1), std::invalid_argument);
  EXPECT_THROW((LrSchedule{0.1, 0.5, 0}.validate()), std::invalid_argument);
  EXPECT_THROW((LrSchedule{0.1, 1.5, 10}.validate()), std::invalid_argument);
}

TEST(Strategy, NamesAndValidation) {
  for (auto v : {StrategyVariant::FixedLR, StrategyVariant::VariedLR, StrategyVariant::Frozen,
                 StrategyVariant::Interleaved, StrategyVariant::TraditionalBagging}) {
    EXPECT_EQ(strategy_from_string(to_string(v)), v);
    EXPECT_NO_THROW(TrainingStrategy::from_variant(v).validate());
  }
  EXPECT_THROW(strategy_from_string("adam"), std::invalid_argument);
  EXPECT_THROW((TrainingStrategy{StrategyVariant::Frozen, 0.1, 0.0, 0.1}.validate()), std::invalid_argument);
  EXPECT_THROW((TrainingStrategy{StrategyVariant::VariedLR, 0.1, 0.2, 0.1}.validate()), std::invalid_argument);
  EXPECT_THROW((TrainingStrategy{StrategyVariant::FixedLR, 0.1, 0.1, 0.05}.validate()), std::invalid_argument);
}

TEST(Training, MultipliersFollowStrategy) {
  const auto& t = tiny();
  EsrModel<float> m(t.arch, 1);
  TrainHooks<float> hooks;
  std::vector<std::array<float, 3>> seen;
  hooks.on_branch_start = [&](int b, EsrModel<float>& model) {
    const float shared = model.parameters(Selector::shared()).front()->lr_multiplier();
    const float old = b > 0 ? model.parameters(Selector::branch(0)).front()->lr_multiplier() : -1.0f;
    const float fresh = model.parameters(Selector::branch(b)).front()->lr_multiplier();
    seen.push_back({shared, old, fresh});
  };
  train_esr(m, t.train, t.val, quick(TrainingStrategy::varied(0.1, 0.02), 1), 2, hooks);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_FLOAT_EQ(seen[0][0], 1.0f);
  EXPECT_FLOAT_EQ(seen[0][2], 1.0f);
  EXPECT_FLOAT_EQ(seen[1][0], 1.0f);
  EXPECT_FLOAT_EQ(seen[1][1], 0.2f);
  EXPECT_FLOAT_EQ(seen[1][2], 1.0f);
}

TEST(Training, FrozenLeavesEarlierPartsBitExact) {
  const auto& t = tiny();
  EsrModel<float> m(t.arch, 2);
  std::uint64_t shared = 0, first = 0;
  TrainHooks<float> hooks;
  hooks.on_branch_start = [&](int b, EsrModel<float>& model) {
    if (b == 1) {
      shared = model.checksum(Selector::shared());
      first = model.checksum(Selector::branch(0));
    }
  };
  hooks.on_epoch_end = [&](const EpochRecord& r, EsrModel<float>& model) {
    if (r.branch == 1) {
      EXPECT_EQ(model.checksum(Selector::shared()), shared);
      EXPECT_EQ(model.checksum(Selector::branch(0)), first);
    }
  };
  train_esr(m, t.train, t.val, quick(TrainingStrategy::frozen(0.05)), 2, hooks);

  // Same run under the fixed strategy moves both.
  EsrModel<float> f(t.arch, 2);
  train_esr(f, t.train, t.val, quick(TrainingStrategy::fixed(0.05), 2), 1);
  const auto pre = f.checksum(Selector::shared());
  train_esr(f, t.train, t.val, quick(TrainingStrategy::fixed(0.05), 2), 2);
  EXPECT_NE(f.checksum(Selector::shared()), pre);
}

TEST(Training, SingleBranchIgnoresStrategy) {
  const auto& t = tiny();
  std::set<std::uint64_t> sums;
  for (auto s : {TrainingStrategy::fixed(0.05), TrainingStrategy::varied(0.05, 0.01),
                 TrainingStrategy::frozen(0.05)}) {
    EsrModel<float> m(t.arch, 5);
    train_esr(m, t.train, t.val, quick(s), 1);
    sums.insert(m.checksum(Selector::shared()) ^ m.checksum(Selector::branches()));
  }
  EXPECT_EQ(sums.size(), 1u);
}

TEST(Training, LogIsDeterministicAndComplete) {
  const auto& t = tiny();
  auto run = [&] {
    EsrModel<float> m(t.arch, 9);
    return train_esr(m, t.train, t.val, quick(TrainingStrategy::fixed(0.05), 3), 2).to_csv();
  };
  const std::string a = run(), b = run();
  EXPECT_EQ(a, b);

  std::istringstream in(a);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,branch,lr,train_loss,val_accuracy_branches,val_accuracy_ensemble,wall_time_s");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "0") << line;
  }
  EXPECT_EQ(rows, 3 * 2);
}

TEST(Training, RecordsCarryOneValuePerBranch) {
  const auto& t = tiny();
  EsrModel<float> m(t.arch, 4);
  const auto log = train_esr(m, t.train, t.val, quick(TrainingStrategy::fixed(0.05), 1), 3);
  ASSERT_EQ(log.records.size(), 3u);
  for (int b = 0; b < 3; ++b) {
    EXPECT_EQ(log.records[b].branch, b);
    EXPECT_EQ(log.records[b].val_branches.size(), std::size_t(b + 1));
    EXPECT_GE(log.records[b].val_ensemble, 0.0);
    EXPECT_LE(log.records[b].val_ensemble, 1.0);
  }
}

TEST(Training, DivergenceRestoresLastCompletedEpoch) {
  const auto& t = tiny();
  EsrModel<float> m(t.arch, 6);
  std::uint64_t completed = 0;
  TrainHooks<float> hooks;
  hooks.on_epoch_end = [&](const EpochRecord& r, EsrModel<float>& model) {
    if (r.epoch != 1) return;
    completed = model.checksum(Selector::shared());
    model.parameters(Selector::shared()).front()->value()[0] = std::numeric_limits<float>::quiet_NaN();
  };
  EXPECT_THROW(train_esr(m, t.train, t.val, quick(TrainingStrategy::fixed(0.05), 4), 1, hooks),
               TrainingDiverged);
  EXPECT_EQ(m.checksum(Selector::shared()), completed);
  for (const auto* p : m.parameters()) EXPECT_TRUE(p->value().all_finite());
}

TEST(Training, InterleavedUpdatesEveryBranch) {
  const auto& t = tiny();
  EsrModel<float> m(t.arch, 3);
  for (int i = 0; i < 3; ++i) m.add_branch();
  std::vector<std::uint64_t> before;
  for (int b = 0; b < 3; ++b) before.push_back(m.checksum(Selector::branch(b)));
  const auto log = train_interleaved(m, t.train, t.val, quick(TrainingStrategy::interleaved(0.05), 2));
  EXPECT_EQ(log.records.size(), 2u);
  for (int b = 0; b < 3; ++b) EXPECT_NE(m.checksum(Selector::branch(b)), before[b]);
}

TEST(Training, CombinedLossIsSumOfBranchLosses) {
  const auto r = checks::combined_loss_identities(desk_architecture(3, 24, 4, 8), 3, 4);
  EXPECT_LT(r.loss_rel_error, 1e-12);
  EXPECT_LT(r.trunk_grad_rel_error, 1e-10);
}

TEST(Traditional, MembersAreIndependentAndGroupLimited) {
  const auto& t = tiny();
  auto c = quick(TrainingStrategy::bagging(0.05), 1);
  EXPECT_THROW(train_traditional_ensemble(t.arch, t.train, t.val, c, 4), std::invalid_argument);
  EXPECT_THROW(train_traditional_ensemble(t.arch, t.train, t.val, c, 1), std::invalid_argument);
  const auto members = train_traditional_ensemble(t.arch, t.train, t.val, c, 3);
  ASSERT_EQ(members.size(), 3u);
  for (const auto& m : members) EXPECT_EQ(m.ensemble_size(), 1);
  EXPECT_NE(members[0].checksum(Selector::shared()), members[1].checksum(Selector::shared()));
  EXPECT_NE(member_seed(7, 0), member_seed(7, 1));
}

TEST(Subsets, LeaveOneFoldOutSkipsOneGroupPerBranch) {
  const auto& t = tiny();
  auto c = quick(TrainingStrategy::fixed());
  c.subset = SubsetPolicy::LeaveOneFoldOut;
  std::set<int> all(t.train.groups.begin(), t.train.groups.end());
  ASSERT_EQ(all.size(), 3u);
  const std::vector<int> groups(all.begin(), all.end());
  for (int b = 0; b < 5; ++b) {
    const auto idx = branch_subset(t.train, c, b);
    std::set<int> present;
    for (auto i : idx) present.insert(t.train.groups[i]);
    EXPECT_EQ(present.size(), 2u);
    EXPECT_EQ(present.count(groups[static_cast<std::size_t>(b) % 3]), 0u);
  }
}

TEST(Subsets, ClassBalancedRespectsCapAndVariesByBranch) {
  const auto& t = tiny();
  auto c = quick(TrainingStrategy::fixed());
  c.subset = SubsetPolicy::ClassBalanced;
  c.subset_cap = 2;
  const auto a = branch_subset(t.train, c, 0), b = branch_subset(t.train, c, 1);
  std::vector<int> per(8, 0);
  for (auto i : a) ++per[static_cast<std::size_t>(t.train.labels[i])];
  for (int n : per) EXPECT_LE(n, 2);
  EXPECT_EQ(a.size(), 16u);
  EXPECT_NE(a, b);
  EXPECT_EQ(a, branch_subset(t.train, c, 0));
}

TEST(Affect, FineTuneTouchesOnlyHeads) {
  const auto& t = tiny();
  EsrModel<float> m(t.arch, 12);
  train_esr(m, t.train, t.val, quick(TrainingStrategy::fixed(0.05), 1), 2);
  m.attach_affect_heads();
  const auto shared = m.checksum(Selector::shared()), branches = m.checksum(Selector::branches());
  auto c = quick(TrainingStrategy::varied(0.05, 0.01), 1);
  c.subset = SubsetPolicy::QuadrantBalanced;
  c.subset_cap = 10;
  const auto log = fine_tune_affect(m, t.train, t.val, c);
  EXPECT_EQ(log.metric, "rmse");
  EXPECT_EQ(log.records.size(), 2u);
  EXPECT_EQ(m.checksum(Selector::shared()), shared);
  EXPECT_EQ(m.checksum(Selector::branches()), branches);
}

TEST(Transfer, HashMismatchIsRejected) {
  const auto& t = tiny();
  EsrModel<float> m(t.arch, 13);
  m.add_branch();
  EXPECT_THROW(fine_tune_transfer(m, config_hash(t.arch) ^ 1, t.train, t.val,
                                  quick(TrainingStrategy::fixed(0.05), 1)),
               CheckpointError);
  const auto log = fine_tune_transfer(m, config_hash(t.arch), t.train, t.val,
                                      quick(TrainingStrategy::varied(0.05, 0.01), 1));
  EXPECT_EQ(log.records.size(), 1u);
}

}  // namespace
}  // namespace esr
