// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "checks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace esr {
namespace {

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(static_cast<Index>(r.size()), static_cast<Index>(r.begin()->size()));
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

TEST(Vote, PluralityAndTieBreaks) {
  // Two votes for class 1 beat one confident vote for class 0.
  EXPECT_EQ(ensemble_vote(rows({{0.9, 0.1, 0.0}, {0.4, 0.6, 0.0}, {0.3, 0.7, 0.0}})), 1);
  EXPECT_EQ(ensemble_vote(rows({{0.9, 0.1, 0.0}, {0.4, 0.6, 0.0}, {0.3, 0.7, 0.0}}), VoteRule::MeanProbability), 0);
  // 1-1 tie: class 0 has the higher mean probability.
  EXPECT_EQ(ensemble_vote(rows({{0.9, 0.1}, {0.45, 0.55}})), 0);
  // Tie on votes and means goes to the lower index.
  EXPECT_EQ(ensemble_vote(rows({{0.7, 0.3}, {0.3, 0.7}})), 0);
  // Only tied classes compete on the mean; class 2 has the top mean but no vote.
  const auto split = rows({{0.40, 0.25, 0.35}, {0.40, 0.25, 0.35}, {0.25, 0.40, 0.35}, {0.25, 0.40, 0.35}});
  EXPECT_EQ(ensemble_vote(split), 0);
  EXPECT_EQ(ensemble_vote(split, VoteRule::MeanProbability), 2);
  // Equal row maxima go to the lower index, as argmax does.
  EXPECT_EQ(ensemble_vote(rows({{0.1, 0.45, 0.45}, {0.2, 0.3, 0.5}, {0.0, 0.6, 0.4}})), 1);
  EXPECT_THROW(ensemble_vote(Eigen::MatrixXd(0, 3)), std::invalid_argument);
}

TEST(Vote, AgreesWithReferenceOnEveryPattern) {
  for (int e : {2, 3, 4}) {
    const auto r = checks::enumerate_votes(e, 3);
    EXPECT_GT(r.patterns, 0);
    EXPECT_GT(r.ties, 0);
    EXPECT_EQ(r.mismatches, 0) << "branches " << e;
  }
}

TEST(Vote, AffectIsMeanPerDimension) {
  const auto a = ensemble_affect(rows({{0.2, -0.4}, {0.6, 0.0}}));
  EXPECT_DOUBLE_EQ(a[0], 0.4);
  EXPECT_DOUBLE_EQ(a[1], -0.2);
}

TEST(TTest, TextbookReferences) {
  for (const auto& ref : checks::ttest_references()) {
    const auto r = paired_t_test_detail(ref.a, ref.b);
    EXPECT_NEAR(r.t, ref.t, 1e-3) << ref.name;
    EXPECT_DOUBLE_EQ(r.df, ref.df) << ref.name;
    EXPECT_NEAR(r.p, ref.p, 1e-4) << ref.name;
  }
}

TEST(TTest, DegenerateAndDirectional) {
  const std::vector<double> a{0.7, 0.8, 0.75, 0.9, 0.6};
  EXPECT_DOUBLE_EQ(paired_t_test(a, a), 1.0);
  std::vector<double> b = a;
  for (auto& v : b) v += 0.1;
  EXPECT_LT(paired_t_test(b, a), 1e-3) << "constant nonzero difference";
  // Symmetric in the sign of the difference.
  const std::vector<double> c{0.1, 0.5, 0.2, 0.9, 0.4};
  EXPECT_DOUBLE_EQ(paired_t_test(a, c), paired_t_test(c, a));
  EXPECT_THROW(paired_t_test(a, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(paired_t_test(std::vector<double>{1.0}, std::vector<double>{2.0}), std::invalid_argument);
}

TEST(TTest, DistributionTails) {
  EXPECT_NEAR(student_t_two_sided(0.0, 5.0), 1.0, 1e-12);
  // Cauchy: P(|T| >= 1) = 1/2.
  EXPECT_NEAR(student_t_two_sided(1.0, 1.0), 0.5, 1e-10);
  // df = 2 has the closed form 1 - t / sqrt(2 + t^2).
  for (double t : {0.5, 1.7, 4.0}) EXPECT_NEAR(student_t_two_sided(t, 2.0), 1.0 - t / std::sqrt(2.0 + t * t), 1e-10);
  EXPECT_NEAR(regularized_incomplete_beta(1.0, 1.0, 0.3), 0.3, 1e-12);
  EXPECT_NEAR(regularized_incomplete_beta(2.0, 3.0, 0.4), 0.5248, 1e-12);
}

TEST(Report, ConfusionAndRecall) {
  std::vector<Prediction> preds(5);
  const int predicted[] = {0, 1, 1, 2, 0};
  const std::vector<int> labels{0, 1, 2, 2, -1};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    preds[i].ensemble_class = predicted[i];
    preds[i].branch_probabilities = Eigen::MatrixXd::Zero(2, 3);
    preds[i].branch_probabilities(0, predicted[i]) = 1.0;
    preds[i].branch_probabilities(1, 0) = 1.0;
  }
  const auto r = evaluate_predictions(preds, labels, {}, 3);
  EXPECT_EQ(r.samples, 5u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_EQ(r.confusion_counts(2, 1), 1);
  EXPECT_EQ(r.confusion_counts(2, 2), 1);
  EXPECT_DOUBLE_EQ(r.confusion(2, 1), 0.5);
  EXPECT_DOUBLE_EQ(r.per_class_recall[2], 0.5);
  ASSERT_EQ(r.branch_accuracies.size(), 2u);
  EXPECT_DOUBLE_EQ(r.branch_accuracies[0], 0.75);
  EXPECT_DOUBLE_EQ(r.branch_accuracies[1], 0.25);
  const auto s = residual_error_report(r);
  EXPECT_EQ(s.best_branch, 0);
  EXPECT_DOUBLE_EQ(s.gap, 0.0);
  EXPECT_FALSE(format_report(r).empty());
}

TEST(Report, AffectRmseSkipsMissingTargets) {
  std::vector<Prediction> preds(3);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<std::array<double, 2>> targets{{0.0, 0.0}, {1.0, -1.0}, {nan, nan}};
  for (auto& p : preds) {
    p.branch_probabilities = Eigen::MatrixXd::Constant(1, 2, 0.5);
    p.ensemble_class = 0;
    p.branch_affect = Eigen::MatrixXd::Zero(1, 2);
    p.affect = std::array<double, 2>{0.0, 0.0};
  }
  const auto r = evaluate_predictions(preds, std::vector<int>{-1, -1, -1}, targets, 2);
  ASSERT_TRUE(r.rmse_arousal.has_value());
  EXPECT_NEAR(*r.rmse_arousal, std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(*r.rmse_valence, std::sqrt(0.5), 1e-12);
}

TEST(Report, FilesAreWritten) {
  const auto dir = std::filesystem::temp_directory_path() / "esr-metrics";
  std::filesystem::create_directories(dir);
  MetricsReport r;
  r.samples = 2;
  r.accuracy = 0.5;
  r.confusion_counts = Eigen::MatrixXi::Identity(2, 2);
  r.confusion = Eigen::MatrixXd::Identity(2, 2);
  r.per_class_recall = Eigen::VectorXd::Ones(2);
  write_metrics_csv(dir / "m.csv", r);
  write_confusion_pgm(dir / "c.pgm", r, 4);
  std::ifstream in(dir / "m.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "metric,value");
  const auto img = read_image(dir / "c.pgm");
  EXPECT_EQ(img.width, 8);
  EXPECT_EQ(img.at(0, 0), 255);
  EXPECT_EQ(img.at(7, 0), 0);
}

TEST(Predict, IndependentOfThreadsAndBatching) {
  EsrModel<float> m(desk_architecture(3, 24, 4, 8), 21);
  for (int i = 0; i < 3; ++i) m.add_branch();
  SynthConfig sc;
  sc.subjects = 3;
  sc.samples_per_subject = 7;
  sc.size = 24;
  const auto index = generate_synthetic(sc);
  const auto set = make_labeled_set<float>(index, index.all_indices(), {1, 24, 24, {}});
  PredictOptions a;
  a.batch_size = 4;
  PredictOptions b = a;
  b.threads = 3;
  const auto pa = predict(m, set, a), pb = predict(m, set, b);
  ASSERT_EQ(pa.size(), set.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].branch_probabilities, pb[i].branch_probabilities);
    EXPECT_EQ(pa[i].ensemble_class, pb[i].ensemble_class);
    EXPECT_NEAR(pa[i].branch_probabilities.row(0).sum(), 1.0, 1e-5);
  }
  PredictOptions first;
  first.branches = 1;
  const auto p1 = predict(m, set, first);
  EXPECT_EQ(p1[0].branch_probabilities.rows(), 1);

  // Members combined from single-branch predictions.
  std::vector<std::vector<Prediction>> members{p1, p1};
  const auto combined = combine_members(members);
  EXPECT_EQ(combined[0].branch_probabilities.rows(), 2);
  EXPECT_EQ(combined[0].ensemble_class, p1[0].ensemble_class);
}

}  // namespace
}  // namespace esr
