// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/metrics.hpp"

#include "esr/image_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace esr {

int ensemble_vote(const Eigen::MatrixXd& probs, VoteRule rule) {
  if (probs.rows() < 1 || probs.cols() < 1) throw std::invalid_argument("ensemble_vote: no branches");
  const Eigen::VectorXd mean = probs.colwise().mean().transpose();
  if (rule == VoteRule::MeanProbability) {
    Index best = 0;
    for (Index c = 1; c < mean.size(); ++c)
      if (mean[c] > mean[best]) best = c;
    return static_cast<int>(best);
  }
  std::vector<int> votes(static_cast<std::size_t>(probs.cols()), 0);
  for (Index b = 0; b < probs.rows(); ++b) {
    Index arg = 0;
    for (Index c = 1; c < probs.cols(); ++c)
      if (probs(b, c) > probs(b, arg)) arg = c;
    ++votes[static_cast<std::size_t>(arg)];
  }
  int best = 0;
  for (int c = 1; c < static_cast<int>(votes.size()); ++c) {
    const auto vc = votes[static_cast<std::size_t>(c)];
    const auto vb = votes[static_cast<std::size_t>(best)];
    if (vc > vb || (vc == vb && mean[c] > mean[best])) best = c;
  }
  return best;
}

std::array<double, 2> ensemble_affect(const Eigen::MatrixXd& branch_affect) {
  if (branch_affect.rows() < 1 || branch_affect.cols() != 2) {
    throw std::invalid_argument("ensemble_affect: expected E x 2 branch outputs");
  }
  const Eigen::RowVector2d m = branch_affect.colwise().mean();
  return {m[0], m[1]};
}

template <typename Scalar>
std::vector<Prediction> predict(EsrModel<Scalar>& model, const LabeledSet<Scalar>& set,
                                const PredictOptions& options) {
  if (set.empty()) throw std::invalid_argument("predict: empty split");
  if (options.batch_size < 1) throw std::invalid_argument("predict: batch size must be positive");
  const int e = model.ensemble_size();
  const int used = options.branches < 0 ? e : std::min(options.branches, e);
  if (used < 1) throw std::invalid_argument("predict: model has no branches");
  const std::size_t n = set.size();
  const std::size_t bs = static_cast<std::size_t>(options.batch_size);
  const std::size_t batches = (n + bs - 1) / bs;
  std::vector<Prediction> out(n);

  auto run_batch = [&](std::size_t k) {
    std::vector<std::size_t> idx;
    for (std::size_t i = k * bs; i < std::min(n, (k + 1) * bs); ++i) idx.push_back(i);
    Tape<Scalar> tape(false);
    const auto result = model.forward(tape, stack_batch(set, idx), Mode::Eval);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      Prediction& p = out[idx[r]];
      p.branch_probabilities.resize(used, set.num_classes);
      if (!result.affect.empty()) p.branch_affect.resize(used, 2);
      for (int b = 0; b < used; ++b) {
        const auto probs = softmax_rows(result.emotion_logits[static_cast<std::size_t>(b)]->value);
        for (Index c = 0; c < probs.dim(1); ++c) {
          p.branch_probabilities(b, c) = double(probs.at(static_cast<Index>(r), c));
        }
        if (!result.affect.empty()) {
          const auto& a = result.affect[static_cast<std::size_t>(b)]->value;
          p.branch_affect(b, 0) = double(a.at(static_cast<Index>(r), 0));
          p.branch_affect(b, 1) = double(a.at(static_cast<Index>(r), 1));
        }
      }
      p.ensemble_class = ensemble_vote(p.branch_probabilities, options.vote);
      if (p.branch_affect.size() > 0) p.affect = ensemble_affect(p.branch_affect);
    }
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(batches)));
  if (threads == 1) {
    for (std::size_t k = 0; k < batches; ++k) run_batch(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t k = next++; k < batches; k = next++) run_batch(k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<Prediction> combine_members(std::span<const std::vector<Prediction>> members, VoteRule vote) {
  if (members.empty()) throw std::invalid_argument("combine_members: no members");
  const std::size_t n = members[0].size();
  for (const auto& m : members) {
    if (m.size() != n) throw std::invalid_argument("combine_members: members disagree on sample count");
  }
  std::vector<Prediction> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Index rows = 0;
    bool affect = true;
    for (const auto& m : members) {
      rows += m[i].branch_probabilities.rows();
      affect = affect && m[i].branch_affect.size() > 0;
    }
    Prediction& p = out[i];
    p.branch_probabilities.resize(rows, members[0][i].branch_probabilities.cols());
    if (affect) p.branch_affect.resize(rows, 2);
    Index r = 0;
    for (const auto& m : members) {
      const auto& src = m[i];
      p.branch_probabilities.middleRows(r, src.branch_probabilities.rows()) = src.branch_probabilities;
      if (affect) p.branch_affect.middleRows(r, src.branch_affect.rows()) = src.branch_affect;
      r += src.branch_probabilities.rows();
    }
    p.ensemble_class = ensemble_vote(p.branch_probabilities, vote);
    if (affect) p.affect = ensemble_affect(p.branch_affect);
  }
  return out;
}

MetricsReport evaluate_predictions(std::span<const Prediction> predictions, std::span<const int> labels,
                                   std::span<const std::array<double, 2>> affect, int num_classes) {
  if (predictions.empty()) throw std::invalid_argument("evaluate: empty split");
  if (labels.size() != predictions.size() || (!affect.empty() && affect.size() != predictions.size())) {
    throw std::invalid_argument("evaluate: targets and predictions differ in length");
  }
  MetricsReport r;
  r.samples = predictions.size();
  const Index e = predictions[0].branch_probabilities.rows();
  r.confusion_counts = Eigen::MatrixXi::Zero(num_classes, num_classes);
  std::vector<std::size_t> branch_correct(static_cast<std::size_t>(e), 0);
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int y = labels[i];
    if (y < 0) continue;
    if (y >= num_classes) throw std::out_of_range("evaluate: label outside class range");
    ++labeled;
    const auto& p = predictions[i];
    ++r.confusion_counts(y, p.ensemble_class);
    for (Index b = 0; b < e; ++b) {
      Index arg = 0;
      for (Index c = 1; c < p.branch_probabilities.cols(); ++c)
        if (p.branch_probabilities(b, c) > p.branch_probabilities(b, arg)) arg = c;
      if (arg == y) ++branch_correct[static_cast<std::size_t>(b)];
    }
  }
  r.confusion = Eigen::MatrixXd::Zero(num_classes, num_classes);
  r.per_class_recall = Eigen::VectorXd::Constant(num_classes, std::numeric_limits<double>::quiet_NaN());
  if (labeled > 0) {
    r.accuracy = double(r.confusion_counts.trace()) / double(labeled);
    for (int c = 0; c < num_classes; ++c) {
      const int support = r.confusion_counts.row(c).sum();
      if (support == 0) continue;
      r.confusion.row(c) = r.confusion_counts.row(c).cast<double>() / double(support);
      r.per_class_recall[c] = r.confusion(c, c);
    }
    for (auto k : branch_correct) r.branch_accuracies.push_back(double(k) / double(labeled));
  }
  if (!affect.empty() && predictions[0].affect) {
    double sa = 0, sv = 0;
    std::vector<double> sb(static_cast<std::size_t>(e), 0.0);
    std::size_t m = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const auto& t = affect[i];
      if (std::isnan(t[0]) || std::isnan(t[1])) continue;
      const auto& p = predictions[i];
      ++m;
      sa += std::pow((*p.affect)[0] - t[0], 2);
      sv += std::pow((*p.affect)[1] - t[1], 2);
      for (Index b = 0; b < e; ++b) {
        sb[static_cast<std::size_t>(b)] +=
            std::pow(p.branch_affect(b, 0) - t[0], 2) + std::pow(p.branch_affect(b, 1) - t[1], 2);
      }
    }
    if (m > 0) {
      r.rmse_arousal = std::sqrt(sa / double(m));
      r.rmse_valence = std::sqrt(sv / double(m));
      for (double s : sb) r.branch_affect_rmse.push_back(std::sqrt(s / double(2 * m)));
    }
  }
  return r;
}

template <typename Scalar>
std::vector<std::array<double, 2>> affect_targets(const LabeledSet<Scalar>& set) {
  std::vector<std::array<double, 2>> t;
  t.reserve(set.size());
  for (const auto& a : set.affect) t.push_back({double(a[0]), double(a[1])});
  return t;
}

template <typename Scalar>
MetricsReport evaluate(EsrModel<Scalar>& model, const LabeledSet<Scalar>& set,
                       const PredictOptions& options) {
  if (set.empty()) throw std::invalid_argument("evaluate: empty split");
  const auto preds = predict(model, set, options);
  const auto targets = affect_targets(set);
  return evaluate_predictions(preds, set.labels, targets, set.num_classes);
}

// ---------------------------------------------------------------------------

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete beta: a and b must be positive");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete beta: x outside [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (df <= 0.0) throw std::invalid_argument("student t: df must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

TTestResult paired_t_test_detail(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired_t_test: need at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  TTestResult r;
  r.df = double(n - 1);
  r.mean_difference = std::accumulate(d.begin(), d.end(), 0.0) / double(n);
  if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) return r;
  double ss = 0.0;
  for (double x : d) ss += (x - r.mean_difference) * (x - r.mean_difference);
  const double se = std::sqrt(ss / r.df / double(n));
  if (se == 0.0) {
    r.t = std::copysign(std::numeric_limits<double>::infinity(), r.mean_difference);
    r.p = 0.0;
    return r;
  }
  r.t = r.mean_difference / se;
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

double paired_t_test(std::span<const double> a, std::span<const double> b) {
  return paired_t_test_detail(a, b).p;
}

ResidualErrorSummary residual_error_report(const MetricsReport& report) {
  if (report.branch_accuracies.empty()) {
    throw std::invalid_argument("residual_error_report: no per-branch accuracies");
  }
  ResidualErrorSummary s;
  const auto it = std::max_element(report.branch_accuracies.begin(), report.branch_accuracies.end());
  s.best_branch = static_cast<int>(it - report.branch_accuracies.begin());
  s.best_branch_accuracy = *it;
  s.ensemble_accuracy = report.accuracy;
  s.gap = report.branch_accuracies.size() == 1 ? 0.0 : s.ensemble_accuracy - s.best_branch_accuracy;
  return s;
}

std::string format_report(const MetricsReport& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "samples            " << r.samples << '\n';
  os << "ensemble accuracy  " << r.accuracy << '\n';
  for (std::size_t b = 0; b < r.branch_accuracies.size(); ++b) {
    os << "branch " << b + 1 << " accuracy  " << r.branch_accuracies[b] << '\n';
  }
  if (!r.branch_accuracies.empty()) {
    const auto s = residual_error_report(r);
    os << "best branch        " << s.best_branch + 1 << " (" << s.best_branch_accuracy << ")\n";
    os << "ensemble gain      " << std::showpos << s.gap << std::noshowpos << '\n';
  }
  if (r.rmse_arousal) {
    os << "rmse arousal       " << *r.rmse_arousal << '\n';
    os << "rmse valence       " << *r.rmse_valence << '\n';
  }
  os << "per-class recall  ";
  for (Index c = 0; c < r.per_class_recall.size(); ++c) {
    os << ' ';
    if (std::isnan(r.per_class_recall[c])) {
      os << "  -   ";
    } else {
      os << r.per_class_recall[c];
    }
  }
  os << "\nconfusion (rows: true, cols: predicted)\n";
  for (Index i = 0; i < r.confusion.rows(); ++i) {
    for (Index j = 0; j < r.confusion.cols(); ++j) os << (j ? " " : "  ") << r.confusion(i, j);
    os << '\n';
  }
  return os.str();
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "metric,value\n";
  out << "samples," << r.samples << '\n';
  out << "accuracy," << r.accuracy << '\n';
  for (std::size_t b = 0; b < r.branch_accuracies.size(); ++b) {
    out << "branch" << b << "_accuracy," << r.branch_accuracies[b] << '\n';
  }
  for (Index c = 0; c < r.per_class_recall.size(); ++c) {
    out << "recall_class" << c << ',';
    if (!std::isnan(r.per_class_recall[c])) out << r.per_class_recall[c];
    out << '\n';
  }
  if (r.rmse_arousal) {
    out << "rmse_arousal," << *r.rmse_arousal << '\n';
    out << "rmse_valence," << *r.rmse_valence << '\n';
  }
  for (Index i = 0; i < r.confusion.rows(); ++i)
    for (Index j = 0; j < r.confusion.cols(); ++j)
      out << "confusion_" << i << '_' << j << ',' << r.confusion(i, j) << '\n';
}

void write_confusion_pgm(const std::filesystem::path& path, const MetricsReport& r, int cell) {
  if (cell < 1) throw std::invalid_argument("confusion image: cell must be positive");
  const int k = static_cast<int>(r.confusion.rows());
  if (k == 0) throw std::invalid_argument("confusion image: empty matrix");
  Image img(k * cell, k * cell, 1);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const auto v = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(r.confusion(i, j), 0.0, 1.0)));
      for (int y = 0; y < cell; ++y)
        for (int x = 0; x < cell; ++x) img.at(j * cell + x, i * cell + y) = v;
    }
  write_image(path, img);
}

#define ESR_INSTANTIATE_METRICS(S)                                                              \
  template std::vector<Prediction> predict<S>(EsrModel<S>&, const LabeledSet<S>&,               \
                                              const PredictOptions&);                           \
  template MetricsReport evaluate<S>(EsrModel<S>&, const LabeledSet<S>&, const PredictOptions&); \
  template std::vector<std::array<double, 2>> affect_targets<S>(const LabeledSet<S>&);

ESR_INSTANTIATE_METRICS(float)
ESR_INSTANTIATE_METRICS(double)

#undef ESR_INSTANTIATE_METRICS

}  // namespace esr
