// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Ensemble decisions, evaluation reports and the paired t-test.

#include "esr/data.hpp"
#include "esr/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace esr {

enum class VoteRule {
  Plurality,        // most frequent per-branch argmax
  MeanProbability,  // argmax of the averaged probability vectors
};

struct Prediction {
  Eigen::MatrixXd branch_probabilities;  // E x C, rows are softmax outputs
  Eigen::MatrixXd branch_affect;         // E x 2 (arousal, valence), empty without heads
  int ensemble_class = -1;
  std::optional<std::array<double, 2>> affect;
};

/// Plurality over row argmaxes. Ties go to the tied class with the highest
/// mean probability, then to the lowest index.
int ensemble_vote(const Eigen::MatrixXd& branch_probabilities, VoteRule rule = VoteRule::Plurality);

/// Per-dimension mean of E x 2 branch outputs.
std::array<double, 2> ensemble_affect(const Eigen::MatrixXd& branch_affect);

struct PredictOptions {
  int batch_size = 64;
  int threads = 1;
  VoteRule vote = VoteRule::Plurality;
  int branches = -1;  // use only the first n branches; -1 = all
};

/// Eval-mode pass over `set`. Batches are fixed slices of the input, so the
/// result does not depend on the thread count.
template <typename Scalar>
std::vector<Prediction> predict(EsrModel<Scalar>& model, const LabeledSet<Scalar>& set,
                                const PredictOptions& options = {});

/// Stacks single-branch predictions of independent networks into one
/// ensemble prediction per sample.
std::vector<Prediction> combine_members(std::span<const std::vector<Prediction>> members,
                                        VoteRule vote = VoteRule::Plurality);

struct MetricsReport {
  std::size_t samples = 0;
  double accuracy = 0.0;
  Eigen::VectorXd per_class_recall;   // NaN for classes without support
  Eigen::MatrixXi confusion_counts;   // rows: true class, cols: predicted
  Eigen::MatrixXd confusion;          // row-normalized; empty rows stay zero
  std::vector<double> branch_accuracies;
  std::optional<double> rmse_arousal;
  std::optional<double> rmse_valence;
  std::vector<double> branch_affect_rmse;  // over both dimensions
};

/// Samples with label -1 are left out of the emotion metrics, samples with
/// NaN targets out of the affect metrics.
MetricsReport evaluate_predictions(std::span<const Prediction> predictions, std::span<const int> labels,
                                   std::span<const std::array<double, 2>> affect, int num_classes);

template <typename Scalar>
MetricsReport evaluate(EsrModel<Scalar>& model, const LabeledSet<Scalar>& set,
                       const PredictOptions& options = {});

/// Affect targets of a labeled set, widened to double.
template <typename Scalar>
std::vector<std::array<double, 2>> affect_targets(const LabeledSet<Scalar>& set);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double mean_difference = 0.0;
};

/// Two-sided paired t-test on a - b. All-zero differences give p = 1.
TTestResult paired_t_test_detail(std::span<const double> a, std::span<const double> b);
double paired_t_test(std::span<const double> a, std::span<const double> b);

/// I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);
/// P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);

struct ResidualErrorSummary {
  int best_branch = -1;
  double best_branch_accuracy = 0.0;
  double ensemble_accuracy = 0.0;
  double gap = 0.0;  // ensemble minus best branch
};

ResidualErrorSummary residual_error_report(const MetricsReport& report);

std::string format_report(const MetricsReport& report);

/// Two-column "metric,value" CSV.
void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);
/// Normalized confusion matrix as a gray image, `cell` pixels per entry.
void write_confusion_pgm(const std::filesystem::path& path, const MetricsReport& report, int cell = 16);

}  // namespace esr
