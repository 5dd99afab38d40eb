#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "povmnet/dataio.hpp"
#include "povmnet/neural/model.hpp"

namespace povmnet::neural {

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step = 0;

  static AdamState zeros(Eigen::Index n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0}; }
};

struct AdamHyper {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update of `values` in place.
void adam_step(Eigen::VectorXd& values, const Eigen::VectorXd& grads, AdamState& state, const AdamHyper& hyper = {});

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainConfig {
  int epochs = 4000;
  int minibatch_size = 10;
  std::uint64_t seed = 0;  // init and shuffling
  LabelKind label = LabelKind::kHce;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ModelParams best;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::vector<EpochRecord> history;
  bool diverged = false;
  std::string message;
};

/// Every (record, batch) pair of `dataset` as a labeled example.
std::vector<Example> dataset_examples(const Dataset& dataset, LabelKind label);

/// Shuffled minibatch Adam. After each epoch the full validation set is
/// scored; the returned parameters are those with the lowest validation loss.
/// A non-finite loss or gradient stops training and sets `diverged`.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg, const Dataset& train_set,
                  const Dataset& val_set);

struct EnsemblePrediction {
  std::vector<Prediction> members;
  double mean = 0.0;
  double sigma = 0.0;  // total: aleatoric + member disagreement

  double total_variance() const { return sigma * sigma; }
  double mean_aleatoric_variance() const;
  double member_mean_variance() const;  // population variance of member means
};

/// sigma^2 = (1/M) sum(sigma_m^2 + mean_m^2) - ((1/M) sum mean_m)^2.
EnsemblePrediction combine_predictions(std::span<const Prediction> members);
EnsemblePrediction ensemble_predict(std::span<const ModelParams> members, const PovmBatch& batch);

/// Seed of ensemble member `member` derived from the base seed.
std::uint64_t member_seed(std::uint64_t base, int member);

}  // namespace povmnet::neural
