#pragma once

// Set-regression network mapping a batch of POVM outcome strings to a
// Gaussian estimate (mean, sigma):
//
//   one-hot (N_M, N, 4) --stacked LSTM over sites--> (N_M, F)
//     --fully connected single-head GAT layers--> (N_M, F')
//     --sum over samples--> F' --dense tanh layers, linear output--> (mean, r)
//
// sigma^2 = exp(clamp(r, -10, 10)). All parameters live in one flat vector
// whose layout is described by ParameterLayout, in this order:
//   per LSTM layer:  w_input (4H x in), w_hidden (4H x H), bias (4H);
//                    gate blocks ordered input, forget, candidate, output
//   per GAT layer:   weight (out x in), att_src (out), att_dst (out)
//   per dense layer: weight (out x in), bias (out)
// Matrices are stored column-major.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "povmnet/povm.hpp"

namespace povmnet::neural {

struct ModelConfig {
  int input_features = 4;
  std::vector<int> rnn_features{20, 20, 20};
  std::vector<int> gat_features{10, 10};
  std::vector<int> dfnn_features{4, 2};
  double learning_rate = 5e-4;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ParamBlock {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 1;
  Eigen::Index size() const { return rows * cols; }
};

class ParameterLayout {
 public:
  struct Lstm {
    int in = 0, hidden = 0;
    ParamBlock w_input, w_hidden, bias;
  };
  struct Gat {
    int in = 0, out = 0;
    ParamBlock weight, att_src, att_dst;
  };
  struct Dense {
    int in = 0, out = 0;
    ParamBlock weight, bias;
  };

  explicit ParameterLayout(const ModelConfig& cfg);

  Eigen::Index size() const { return size_; }
  const std::vector<Lstm>& lstm() const { return lstm_; }
  const std::vector<Gat>& gat() const { return gat_; }
  const std::vector<Dense>& dense() const { return dense_; }
  /// Every block in storage order.
  std::vector<ParamBlock> blocks() const;

 private:
  ParamBlock add(std::string name, Eigen::Index rows, Eigen::Index cols);
  Eigen::Index size_ = 0;
  std::vector<Lstm> lstm_;
  std::vector<Gat> gat_;
  std::vector<Dense> dense_;
};

inline Eigen::Map<const Eigen::MatrixXd> view(const Eigen::VectorXd& flat, const ParamBlock& b) {
  return {flat.data() + b.offset, b.rows, b.cols};
}
inline Eigen::Map<Eigen::MatrixXd> view(Eigen::VectorXd& flat, const ParamBlock& b) {
  return {flat.data() + b.offset, b.rows, b.cols};
}
inline Eigen::Map<const Eigen::VectorXd> vview(const Eigen::VectorXd& flat, const ParamBlock& b) {
  return {flat.data() + b.offset, b.size()};
}
inline Eigen::Map<Eigen::VectorXd> vview(Eigen::VectorXd& flat, const ParamBlock& b) {
  return {flat.data() + b.offset, b.size()};
}

struct ModelParams {
  ModelConfig config;
  Eigen::VectorXd values;

  ParameterLayout layout() const { return ParameterLayout(config); }
  bool all_finite() const { return values.allFinite(); }
};

/// Glorot-uniform weights, zero biases, forget-gate bias +1.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

/// All-zero parameters of the right shape.
ModelParams zero_params(const ModelConfig& cfg);

struct Prediction {
  double mean = 0.0;
  double sigma = 1.0;
  double log_variance = 0.0;
};

inline constexpr double kLogVarianceClamp = 10.0;

/// Per-sample embedding (N_M x F) of a one-hot batch, in input order.
Eigen::MatrixXd lstm_embed(const OneHotTensor& one_hot, const ModelParams& params);

/// One graph-attention layer (`layer` indexes the GAT stack).
Eigen::MatrixXd gat_layer(const Eigen::MatrixXd& nodes, const ModelParams& params, int layer);

/// Sum over nodes followed by the dense head.
Prediction pool_and_head(const Eigen::MatrixXd& nodes, const ModelParams& params);

/// Full network. Samples are put into lexicographic order first, so the
/// result is bitwise invariant under permutations of the batch.
Prediction predict(const ModelParams& params, const PovmBatch& batch);

/// (S - mean)^2 / sigma^2 + ln sigma^2.
double nll_loss(const Prediction& pred, double label);

struct Example {
  const PovmBatch* batch = nullptr;
  double label = 0.0;
};

struct LossAndGradient {
  double loss = 0.0;            // mean over the minibatch
  Eigen::VectorXd gradient;     // same layout as ModelParams::values
  std::vector<double> losses;   // per example
};

/// Exact reverse-mode gradient of the mean NLL over `minibatch`. Throws
/// NumericalError naming the first parameter block with a non-finite entry.
LossAndGradient gradients(const ModelParams& params, std::span<const Example> minibatch);

/// Mean NLL without gradients.
double mean_loss(const ModelParams& params, std::span<const Example> examples);

}  // namespace povmnet::neural
