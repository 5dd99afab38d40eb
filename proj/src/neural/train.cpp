#include "povmnet/neural/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "povmnet/errors.hpp"
#include "povmnet/rng.hpp"

namespace povmnet::neural {

void adam_step(Eigen::VectorXd& values, const Eigen::VectorXd& grads, AdamState& state, const AdamHyper& hyper) {
  if (grads.size() != values.size() || state.first_moment.size() != values.size() ||
      state.second_moment.size() != values.size())
    throw DimensionError("adam_step: shape mismatch");
  ++state.step;
  state.first_moment = hyper.beta1 * state.first_moment + (1.0 - hyper.beta1) * grads;
  state.second_moment = hyper.beta2 * state.second_moment + (1.0 - hyper.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  values.array() -= hyper.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + hyper.epsilon);
}

std::vector<Example> dataset_examples(const Dataset& dataset, LabelKind label) {
  const std::size_t col = dataset.label_index(label);
  std::vector<Example> out;
  for (const auto& rec : dataset.records)
    for (const auto& b : rec.batches) out.push_back({&b, rec.labels[col]});
  return out;
}

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg, const Dataset& train_set,
                  const Dataset& val_set) {
  if (cfg.epochs < 1 || cfg.minibatch_size < 1) throw std::invalid_argument("train: epochs and minibatch size must be positive");
  if (train_set.system.n_sites != val_set.system.n_sites)
    throw DimensionError("train: training and validation sets have different chain lengths");
  const auto train_examples = dataset_examples(train_set, cfg.label);
  const auto val_examples = dataset_examples(val_set, cfg.label);
  if (train_examples.empty() || val_examples.empty()) throw std::invalid_argument("train: empty dataset");

  ModelParams params = init_params(model_cfg, cfg.seed);
  params.config.seed = cfg.seed;
  AdamState adam = AdamState::zeros(params.values.size());
  const AdamHyper hyper{model_cfg.learning_rate};

  TrainResult result;
  result.best = params;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_examples.size());
  std::vector<Example> minibatch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, {0x5348UL, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double train_total = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.minibatch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch_size));
        minibatch.clear();
        for (std::size_t k = start; k < end; ++k) minibatch.push_back(train_examples[order[k]]);
        const auto lg = gradients(params, minibatch);
        if (!std::isfinite(lg.loss)) throw NumericalError("non-finite training loss");
        train_total += lg.loss * static_cast<double>(minibatch.size());
        adam_step(params.values, lg.gradient, adam, hyper);
      }
      if (!params.all_finite()) throw NumericalError("non-finite parameters after update");
    } catch (const NumericalError& e) {
      result.diverged = true;
      result.message = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }

    EpochRecord rec{epoch, train_total / static_cast<double>(order.size()), 0.0};
    try {
      rec.val_loss = mean_loss(params, val_examples);
    } catch (const NumericalError&) {
      rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    }
    result.history.push_back(rec);
    if (cfg.on_epoch) cfg.on_epoch(rec);
    if (!std::isfinite(rec.val_loss) || !std::isfinite(rec.train_loss)) {
      result.diverged = true;
      result.message = "epoch " + std::to_string(epoch) + ": non-finite loss";
      break;
    }
    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.best = params;
    }
  }
  return result;
}

double EnsemblePrediction::mean_aleatoric_variance() const {
  double s = 0.0;
  for (const auto& m : members) s += m.sigma * m.sigma;
  return s / static_cast<double>(members.size());
}

double EnsemblePrediction::member_mean_variance() const {
  double s = 0.0;
  for (const auto& m : members) s += (m.mean - mean) * (m.mean - mean);
  return s / static_cast<double>(members.size());
}

EnsemblePrediction combine_predictions(std::span<const Prediction> members) {
  if (members.empty()) throw std::invalid_argument("ensemble needs at least one member");
  EnsemblePrediction out;
  out.members.assign(members.begin(), members.end());
  const double m = static_cast<double>(members.size());
  double second = 0.0;
  double first = 0.0;
  for (const auto& p : members) {
    second += p.sigma * p.sigma + p.mean * p.mean;
    first += p.mean;
  }
  out.mean = first / m;
  const double var = second / m - out.mean * out.mean;
  out.sigma = std::sqrt(std::max(var, 0.0));
  return out;
}

EnsemblePrediction ensemble_predict(std::span<const ModelParams> members, const PovmBatch& batch) {
  std::vector<Prediction> preds;
  preds.reserve(members.size());
  for (const auto& p : members) preds.push_back(predict(p, batch));
  return combine_predictions(preds);
}

std::uint64_t member_seed(std::uint64_t base, int member) {
  return derive_seed(base, {0x4d454dUL, static_cast<std::uint64_t>(member)});
}

}  // namespace povmnet::neural
