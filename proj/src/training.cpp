// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/training.hpp"

#include "esr/model_io.hpp"
#include "esr/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace esr {

std::string to_string(StrategyVariant v) {
  switch (v) {
    case StrategyVariant::FixedLR: return "fixed";
    case StrategyVariant::VariedLR: return "varied";
    case StrategyVariant::Frozen: return "frozen";
    case StrategyVariant::Interleaved: return "interleaved";
    case StrategyVariant::TraditionalBagging: return "bagging";
  }
  return "?";
}

StrategyVariant strategy_from_string(const std::string& name) {
  for (auto v : {StrategyVariant::FixedLR, StrategyVariant::VariedLR, StrategyVariant::Frozen,
                 StrategyVariant::Interleaved, StrategyVariant::TraditionalBagging}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown strategy '" + name +
                              "' (expected fixed, varied, frozen, interleaved or bagging)");
}

TrainingStrategy TrainingStrategy::from_variant(StrategyVariant variant, double lr) {
  switch (variant) {
    case StrategyVariant::FixedLR: return fixed(lr);
    case StrategyVariant::VariedLR: return varied(lr, 0.2 * lr);
    case StrategyVariant::Frozen: return frozen(lr);
    case StrategyVariant::Interleaved: return interleaved(lr);
    case StrategyVariant::TraditionalBagging: return bagging(lr);
  }
  throw std::invalid_argument("unknown strategy variant");
}

void TrainingStrategy::validate() const {
  if (!(lr_new_branch > 0.0)) throw std::invalid_argument("strategy: lr_new_branch must be positive");
  if (lr_shared < 0.0 || lr_trained_branches < 0.0) {
    throw std::invalid_argument("strategy: learning rates must be nonnegative");
  }
  switch (variant) {
    case StrategyVariant::FixedLR:
    case StrategyVariant::Interleaved:
    case StrategyVariant::TraditionalBagging:
      if (lr_shared != lr_new_branch || lr_trained_branches != lr_new_branch) {
        throw std::invalid_argument("strategy " + to_string(variant) + ": all learning rates must agree");
      }
      break;
    case StrategyVariant::Frozen:
      if (lr_shared != 0.0 || lr_trained_branches != 0.0) {
        throw std::invalid_argument("strategy frozen: shared and trained-branch rates must be 0");
      }
      break;
    case StrategyVariant::VariedLR:
      if (!(lr_trained_branches < lr_shared)) {
        throw std::invalid_argument("strategy varied: trained branches need a smaller rate than the trunk");
      }
      break;
  }
}

void LrSchedule::validate() const {
  if (!(initial > 0.0)) throw std::invalid_argument("schedule: initial rate must be positive");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw std::invalid_argument("schedule: decay factor must be in (0, 1]");
  }
  if (decay_every < 1) throw std::invalid_argument("schedule: decay interval must be positive");
}

double LrSchedule::lr_at(int epoch) const {
  if (epoch < 0) throw std::invalid_argument("schedule: epoch must be nonnegative");
  return initial * std::pow(decay_factor, epoch / decay_every);
}

double lr_at_epoch(const LrSchedule& schedule, int epoch) { return schedule.lr_at(epoch); }

void TrainConfig::validate() const {
  if (epochs_per_branch < 1) throw std::invalid_argument("train: epochs per branch must be positive");
  if (batch_size < 1) throw std::invalid_argument("train: batch size must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("train: momentum must be in [0, 1)");
  if (subset_cap < 1) throw std::invalid_argument("train: subset cap must be positive");
  if (threads < 1) throw std::invalid_argument("train: threads must be positive");
  schedule.validate();
  augmentation.validate();
}

// ---------------------------------------------------------------------------

std::string TrainingLog::to_csv() const {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "epoch,branch,lr,train_loss,val_" << metric << "_branches,val_" << metric
     << "_ensemble,wall_time_s\n";
  for (const auto& r : records) {
    os << r.epoch << ',' << r.branch << ',' << r.lr << ',' << r.train_loss << ',';
    for (std::size_t i = 0; i < r.val_branches.size(); ++i) os << (i ? ";" : "") << r.val_branches[i];
    os << ',' << r.val_ensemble << ',' << r.wall_time_s << '\n';
  }
  return os.str();
}

void TrainingLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write training log " + path.string());
  out << to_csv();
}

void TrainingLog::append(const TrainingLog& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
}

template <typename Scalar>
Var<Scalar> combined_loss(Tape<Scalar>& tape, const BranchOutput<Scalar>& outputs,
                          std::span<const int> labels, int branches) {
  const int n = branches < 0 ? static_cast<int>(outputs.emotion_logits.size())
                             : std::min<int>(branches, static_cast<int>(outputs.emotion_logits.size()));
  if (n < 1) throw std::invalid_argument("combined_loss: no branch outputs");
  std::vector<Var<Scalar>> terms;
  for (int b = 0; b < n; ++b) {
    terms.push_back(softmax_cross_entropy(tape, outputs.emotion_logits[static_cast<std::size_t>(b)], labels));
  }
  return n == 1 ? terms[0] : add<Scalar>(tape, terms);
}

template <typename Scalar>
Var<Scalar> combined_affect_loss(Tape<Scalar>& tape, const BranchOutput<Scalar>& outputs,
                                 const Tensor<Scalar>& targets, int branches) {
  const int n = branches < 0 ? static_cast<int>(outputs.affect.size())
                             : std::min<int>(branches, static_cast<int>(outputs.affect.size()));
  if (n < 1) throw std::invalid_argument("combined_affect_loss: no affect outputs");
  std::vector<Var<Scalar>> terms;
  for (int b = 0; b < n; ++b) {
    terms.push_back(rmse_loss(tape, outputs.affect[static_cast<std::size_t>(b)], targets));
  }
  return n == 1 ? terms[0] : add<Scalar>(tape, terms);
}

std::uint64_t member_seed(std::uint64_t seed, int member) {
  return splitmix64(seed ^ (0x5bd1e995ULL * static_cast<std::uint64_t>(member + 1)));
}

namespace {

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(seed ^ (a * 0x9e3779b97f4a7c15ULL)) ^ b) ^ c);
}

bool is_identity(const AugmentationConfig& a) {
  return a.brightness == 0.0 && a.contrast == 0.0 && a.flip_probability == 0.0 &&
         a.max_rotation_deg == 0.0 && a.translation == 0.0 && a.rescale == 0.0;
}

template <typename Scalar>
bool has_affect(const LabeledSet<Scalar>& set, std::size_t i) {
  return !std::isnan(set.affect[i][0]) && !std::isnan(set.affect[i][1]);
}

template <typename Scalar>
std::vector<int> sorted_groups(const LabeledSet<Scalar>& set) {
  std::set<int> g;
  for (int x : set.groups)
    if (x >= 0) g.insert(x);
  return {g.begin(), g.end()};
}

std::vector<std::size_t> capped_groups(const std::vector<std::vector<std::size_t>>& by_key, int cap,
                                       std::uint64_t seed) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < by_key.size(); ++k) {
    auto pool = by_key[k];
    auto rng = make_rng(seed, k);
    shuffle(pool.begin(), pool.end(), rng);
    const auto take = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(cap));
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

enum class Target { Emotion, Affect };

struct Phase {
  int branch = 0;         // tag written to the log
  int loss_branches = 1;  // first n outputs enter the loss
  Target target = Target::Emotion;
  std::vector<std::size_t> indices;
  std::uint64_t stream = 0;
  std::string checkpoint_tag;
};

template <typename Scalar>
struct Validation {
  std::vector<double> branches;
  double ensemble = 0.0;
};

template <typename Scalar>
Validation<Scalar> validate_model(EsrModel<Scalar>& model, const LabeledSet<Scalar>& val, Target target,
                                  int threads) {
  Validation<Scalar> v;
  if (val.empty()) return v;
  PredictOptions opt;
  opt.threads = threads;
  const auto report = evaluate(model, val, opt);
  if (target == Target::Emotion) {
    v.branches = report.branch_accuracies;
    v.ensemble = report.accuracy;
  } else {
    v.branches = report.branch_affect_rmse;
    if (report.rmse_arousal) {
      v.ensemble = std::sqrt(0.5 * (*report.rmse_arousal * *report.rmse_arousal +
                                    *report.rmse_valence * *report.rmse_valence));
    }
  }
  return v;
}

template <typename Scalar>
void run_phase(EsrModel<Scalar>& model, const LabeledSet<Scalar>& train, const LabeledSet<Scalar>& val,
               const TrainConfig& config, const Phase& phase, TrainingLog& log,
               const TrainHooks<Scalar>& hooks) {
  if (phase.indices.empty()) throw std::invalid_argument("training: empty training subset");
  for (auto* p : model.parameters()) p->momentum_buffer().setZero();
  if (hooks.on_branch_start) hooks.on_branch_start(phase.branch, model);

  const auto start = std::chrono::steady_clock::now();
  const bool augment_on = !is_identity(config.augmentation);
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  EsrModel<Scalar> last_good = model;
  double best = phase.target == Target::Emotion ? -1.0 : std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < config.epochs_per_branch; ++epoch) {
    const double lr = config.schedule.lr_at(epoch);
    auto order = phase.indices;
    auto rng = make_rng(derive(config.seed, phase.stream), static_cast<std::uint64_t>(epoch));
    shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t first = 0; first < order.size(); first += bs) {
      const std::size_t last = std::min(order.size(), first + bs);
      // A lone trailing sample gives degenerate batch statistics.
      if (last - first < 2 && order.size() >= 2) break;
      const std::span<const std::size_t> idx(order.data() + first, last - first);
      Tensor<Scalar> batch = stack_batch(train, idx);
      if (augment_on) {
        const Index stride = batch.size() / static_cast<Index>(idx.size());
        const Shape chw(batch.shape().begin() + 1, batch.shape().end());
        for (std::size_t r = 0; r < idx.size(); ++r) {
          const auto seed = derive(config.seed, phase.stream, static_cast<std::uint64_t>(epoch), first + r);
          const auto aug = augment(train.images[idx[r]], config.augmentation, seed);
          batch.values().segment(static_cast<Index>(r) * stride, stride) = aug.values();
        }
      }
      Tape<Scalar> tape;
      const auto out = model.forward(tape, batch, Mode::Train);
      Var<Scalar> loss;
      if (phase.target == Target::Emotion) {
        std::vector<int> labels;
        for (auto i : idx) labels.push_back(train.labels[i]);
        loss = combined_loss(tape, out, labels, phase.loss_branches);
      } else {
        Tensor<Scalar> targets(Shape{static_cast<Index>(idx.size()), 2});
        for (std::size_t r = 0; r < idx.size(); ++r) {
          targets.at(static_cast<Index>(r), 0) = train.affect[idx[r]][0];
          targets.at(static_cast<Index>(r), 1) = train.affect[idx[r]][1];
        }
        loss = combined_affect_loss(tape, out, targets, phase.loss_branches);
      }
      const double value = double(loss->value[0]);
      auto diverged = [&](const char* what) {
        model = last_good;
        return TrainingDiverged(std::string("training diverged: non-finite ") + what + " at branch " +
                                std::to_string(phase.branch) + ", epoch " + std::to_string(epoch) +
                                "; model restored to the last completed epoch");
      };
      if (!std::isfinite(value)) throw diverged("loss");
      model.zero_grad();
      tape.backward(loss);
      auto params = model.parameters();
      try {
        sgd_momentum_step<Scalar>(params, static_cast<Scalar>(lr), static_cast<Scalar>(config.momentum));
      } catch (const NumericalFault&) {
        throw diverged("gradient");
      }
      loss_sum += value * double(idx.size());
      loss_count += idx.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.branch = phase.branch;
    rec.lr = lr;
    rec.train_loss = loss_count ? loss_sum / double(loss_count) : 0.0;
    const auto v = validate_model(model, val, phase.target, config.threads);
    rec.val_branches = v.branches;
    rec.val_ensemble = v.ensemble;
    rec.wall_time_s = config.deterministic
                          ? 0.0
                          : std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.records.push_back(rec);
    last_good = model;

    if (config.checkpoint_dir && !val.empty()) {
      const bool better = phase.target == Target::Emotion ? v.ensemble > best : v.ensemble < best;
      if (better) {
        best = v.ensemble;
        save_checkpoint(*config.checkpoint_dir / (phase.checkpoint_tag + "_best.ckpt"), model);
      }
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(rec, model);
  }
  if (config.checkpoint_dir) {
    save_checkpoint(*config.checkpoint_dir / (phase.checkpoint_tag + ".ckpt"), model);
  }
}

template <typename Scalar>
std::vector<std::size_t> labeled_indices(const LabeledSet<Scalar>& set, Target target) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (target == Target::Emotion ? set.labels[i] >= 0 : has_affect(set, i)) out.push_back(i);
  }
  return out;
}

template <typename Scalar>
std::vector<std::size_t> subset_for(const LabeledSet<Scalar>& train, const TrainConfig& config, int branch,
                                    Target target) {
  const auto candidates = labeled_indices(train, target);
  switch (config.subset) {
    case SubsetPolicy::All: return candidates;
    case SubsetPolicy::LeaveOneFoldOut: {
      const auto groups = sorted_groups(train);
      if (groups.size() < 2) {
        throw std::invalid_argument(
            "leave-one-fold-out subsets need at least two fold-tagged training groups");
      }
      const int skip = groups[static_cast<std::size_t>(branch) % groups.size()];
      std::vector<std::size_t> out;
      for (auto i : candidates)
        if (train.groups[i] != skip) out.push_back(i);
      return out;
    }
    case SubsetPolicy::ClassBalanced: {
      std::vector<std::vector<std::size_t>> by(static_cast<std::size_t>(train.num_classes));
      for (auto i : candidates)
        if (train.labels[i] >= 0) by[static_cast<std::size_t>(train.labels[i])].push_back(i);
      return capped_groups(by, config.subset_cap, derive(config.seed, 77, static_cast<std::uint64_t>(branch)));
    }
    case SubsetPolicy::QuadrantBalanced: {
      std::vector<std::vector<std::size_t>> by(4);
      for (auto i : candidates) {
        if (!has_affect(train, i)) continue;
        by[static_cast<std::size_t>(affect_quadrant(train.affect[i][0], train.affect[i][1]))].push_back(i);
      }
      if (std::all_of(by.begin(), by.end(), [](const auto& v) { return v.empty(); })) {
        throw std::invalid_argument("quadrant-balanced subsets need arousal/valence targets");
      }
      return capped_groups(by, config.subset_cap, derive(config.seed, 78, static_cast<std::uint64_t>(branch)));
    }
  }
  return candidates;
}

}  // namespace

template <typename Scalar>
std::vector<std::size_t> branch_subset(const LabeledSet<Scalar>& train, const TrainConfig& config, int branch) {
  return subset_for(train, config,
                    branch, config.subset == SubsetPolicy::QuadrantBalanced ? Target::Affect : Target::Emotion);
}

template <typename Scalar>
TrainingLog train_esr(EsrModel<Scalar>& model, const LabeledSet<Scalar>& train,
                      const LabeledSet<Scalar>& validation, const TrainConfig& config, int ensemble_size,
                      const TrainHooks<Scalar>& hooks) {
  config.validate();
  config.strategy.validate();
  if (train.empty()) throw std::invalid_argument("train_esr: empty training set");
  if (ensemble_size < 1) throw std::invalid_argument("train_esr: ensemble size must be positive");
  const auto& s = config.strategy;
  TrainingLog log;
  double previous = -1.0;
  while (model.ensemble_size() < ensemble_size) {
    const int b = model.add_branch() - 1;
    if (b == 0) {
      model.set_lr_multiplier(Selector::shared(), Scalar(1));
    } else {
      model.set_lr_multiplier(Selector::shared(), static_cast<Scalar>(s.lr_shared / s.lr_new_branch));
      model.set_lr_multiplier(Selector::branches(0, b - 1),
                              static_cast<Scalar>(s.lr_trained_branches / s.lr_new_branch));
    }
    model.set_lr_multiplier(Selector::branch(b), Scalar(1));
    Phase phase;
    phase.branch = b;
    phase.loss_branches = b + 1;
    phase.indices = subset_for(train, config, b, Target::Emotion);
    phase.stream = static_cast<std::uint64_t>(b);
    phase.checkpoint_tag = "branch" + std::to_string(b);
    run_phase(model, train, validation, config, phase, log, hooks);

    const double current = log.records.back().val_ensemble;
    if (config.early_stop && !validation.empty() && b > 0 && current - previous < config.early_stop_delta) {
      break;
    }
    previous = current;
  }
  return log;
}

template <typename Scalar>
TrainingLog train_interleaved(EsrModel<Scalar>& model, const LabeledSet<Scalar>& train,
                              const LabeledSet<Scalar>& validation, const TrainConfig& config,
                              const TrainHooks<Scalar>& hooks) {
  config.validate();
  config.strategy.validate();
  if (train.empty()) throw std::invalid_argument("train_interleaved: empty training set");
  if (model.ensemble_size() < 1) throw std::invalid_argument("train_interleaved: add branches first");
  const auto& s = config.strategy;
  model.set_lr_multiplier(Selector::shared(), static_cast<Scalar>(s.lr_shared / s.lr_new_branch));
  model.set_lr_multiplier(Selector::branches(), Scalar(1));
  Phase phase;
  phase.branch = model.ensemble_size() - 1;
  phase.loss_branches = model.ensemble_size();
  phase.indices = labeled_indices(train, Target::Emotion);
  phase.stream = 0;
  phase.checkpoint_tag = "interleaved";
  TrainingLog log;
  run_phase(model, train, validation, config, phase, log, hooks);
  return log;
}

template <typename Scalar>
std::vector<EsrModel<Scalar>> train_traditional_ensemble(const ArchitectureConfig& arch,
                                                         const LabeledSet<Scalar>& train,
                                                         const LabeledSet<Scalar>& validation,
                                                         const TrainConfig& train_config, int members,
                                                         std::vector<TrainingLog>* logs) {
  train_config.validate();
  if (members < 2) throw std::invalid_argument("traditional ensemble: need at least two members");
  const auto groups = sorted_groups(train);
  if (static_cast<int>(groups.size()) < members) {
    throw std::invalid_argument("traditional ensemble: " + std::to_string(groups.size()) +
                                " training folds cannot serve " + std::to_string(members) + " members");
  }
  std::vector<EsrModel<Scalar>> out;
  for (int i = 0; i < members; ++i) {
    TrainConfig c = train_config;
    c.seed = member_seed(train_config.seed, i);
    if (c.checkpoint_dir) c.checkpoint_dir = *c.checkpoint_dir / ("member" + std::to_string(i));
    EsrModel<Scalar> model(arch, c.seed);
    model.add_branch();
    Phase phase;
    phase.branch = 0;
    phase.loss_branches = 1;
    for (auto idx : labeled_indices(train, Target::Emotion))
      if (train.groups[idx] != groups[static_cast<std::size_t>(i)]) phase.indices.push_back(idx);
    phase.stream = 0;
    phase.checkpoint_tag = "branch0";
    TrainingLog log;
    run_phase(model, train, validation, c, phase, log, TrainHooks<Scalar>{});
    if (logs) logs->push_back(std::move(log));
    out.push_back(std::move(model));
  }
  return out;
}

template <typename Scalar>
TrainingLog fine_tune_affect(EsrModel<Scalar>& model, const LabeledSet<Scalar>& train,
                             const LabeledSet<Scalar>& validation, const TrainConfig& config,
                             const TrainHooks<Scalar>& hooks) {
  config.validate();
  if (!model.has_affect_heads()) throw std::logic_error("fine_tune_affect: attach affect heads first");
  if (train.empty()) throw std::invalid_argument("fine_tune_affect: empty training set");
  const auto& s = config.strategy;
  if (!(s.lr_new_branch > 0.0) || s.lr_trained_branches < 0.0) {
    throw std::invalid_argument("fine_tune_affect: invalid head learning rates");
  }
  model.set_lr_multiplier(Selector::shared(), Scalar(0));
  model.set_lr_multiplier(Selector::branches(), Scalar(0));
  TrainingLog log;
  log.metric = "rmse";
  const int e = model.ensemble_size();
  for (int b = 0; b < e; ++b) {
    if (b > 0) {
      model.set_lr_multiplier(Selector::affect_heads(0, b - 1),
                              static_cast<Scalar>(s.lr_trained_branches / s.lr_new_branch));
    }
    model.set_lr_multiplier(Selector::affect_head(b), Scalar(1));
    if (b + 1 < e) model.set_lr_multiplier(Selector::affect_heads(b + 1, e - 1), Scalar(0));
    Phase phase;
    phase.branch = b;
    phase.loss_branches = b + 1;
    phase.target = Target::Affect;
    phase.indices = subset_for(train, config, b, Target::Affect);
    phase.stream = 100 + static_cast<std::uint64_t>(b);
    phase.checkpoint_tag = "affect" + std::to_string(b);
    run_phase(model, train, validation, config, phase, log, hooks);
  }
  return log;
}

template <typename Scalar>
TrainingLog fine_tune_transfer(EsrModel<Scalar>& model, std::uint64_t expected_hash,
                               const LabeledSet<Scalar>& train, const LabeledSet<Scalar>& validation,
                               const TrainConfig& config, const TrainHooks<Scalar>& hooks) {
  config.validate();
  config.strategy.validate();
  const auto actual = config_hash(model.config());
  if (actual != expected_hash) {
    throw CheckpointError("fine_tune_transfer: model architecture hash " + std::to_string(actual) +
                          " does not match the expected " + std::to_string(expected_hash));
  }
  if (train.empty()) throw std::invalid_argument("fine_tune_transfer: empty training set");
  if (model.ensemble_size() < 1) throw std::invalid_argument("fine_tune_transfer: model has no branches");
  const auto& s = config.strategy;
  const int e = model.ensemble_size();
  TrainingLog log;
  for (int b = 0; b < e; ++b) {
    model.set_lr_multiplier(Selector::shared(), static_cast<Scalar>(s.lr_shared / s.lr_new_branch));
    if (b > 0) {
      model.set_lr_multiplier(Selector::branches(0, b - 1),
                              static_cast<Scalar>(s.lr_trained_branches / s.lr_new_branch));
    }
    model.set_lr_multiplier(Selector::branch(b), Scalar(1));
    if (b + 1 < e) model.set_lr_multiplier(Selector::branches(b + 1, e - 1), Scalar(0));
    Phase phase;
    phase.branch = b;
    phase.loss_branches = b + 1;
    phase.indices = subset_for(train, config, b, Target::Emotion);
    phase.stream = 200 + static_cast<std::uint64_t>(b);
    phase.checkpoint_tag = "transfer" + std::to_string(b);
    run_phase(model, train, validation, config, phase, log, hooks);
  }
  return log;
}

#define ESR_INSTANTIATE_TRAINING(S)                                                                \
  template Var<S> combined_loss<S>(Tape<S>&, const BranchOutput<S>&, std::span<const int>, int);  \
  template Var<S> combined_affect_loss<S>(Tape<S>&, const BranchOutput<S>&, const Tensor<S>&, int); \
  template TrainingLog train_esr<S>(EsrModel<S>&, const LabeledSet<S>&, const LabeledSet<S>&,     \
                                    const TrainConfig&, int, const TrainHooks<S>&);               \
  template TrainingLog train_interleaved<S>(EsrModel<S>&, const LabeledSet<S>&,                   \
                                            const LabeledSet<S>&, const TrainConfig&,             \
                                            const TrainHooks<S>&);                                \
  template std::vector<EsrModel<S>> train_traditional_ensemble<S>(                                \
      const ArchitectureConfig&, const LabeledSet<S>&, const LabeledSet<S>&, const TrainConfig&,  \
      int, std::vector<TrainingLog>*);                                                            \
  template TrainingLog fine_tune_affect<S>(EsrModel<S>&, const LabeledSet<S>&,                    \
                                           const LabeledSet<S>&, const TrainConfig&,              \
                                           const TrainHooks<S>&);                                 \
  template TrainingLog fine_tune_transfer<S>(EsrModel<S>&, std::uint64_t, const LabeledSet<S>&,   \
                                             const LabeledSet<S>&, const TrainConfig&,            \
                                             const TrainHooks<S>&);                               \
  template std::vector<std::size_t> branch_subset<S>(const LabeledSet<S>&, const TrainConfig&, int);

ESR_INSTANTIATE_TRAINING(float)
ESR_INSTANTIATE_TRAINING(double)

#undef ESR_INSTANTIATE_TRAINING

}  // namespace esr
