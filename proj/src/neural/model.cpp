#include "povmnet/neural/model.hpp"

#include <cmath>
#include <stdexcept>

#include "povmnet/rng.hpp"

namespace povmnet::neural {

void ModelConfig::validate() const {
  auto positive = [](const std::vector<int>& v, const char* what) {
    if (v.empty()) throw std::invalid_argument(std::string(what) + ": at least one layer required");
    for (int w : v)
      if (w < 1) throw std::invalid_argument(std::string(what) + ": widths must be positive");
  };
  if (input_features < 1) throw std::invalid_argument("input_features must be positive");
  positive(rnn_features, "rnn_features");
  positive(gat_features, "gat_features");
  positive(dfnn_features, "dfnn_features");
  if (dfnn_features.back() != 2) throw std::invalid_argument("final dense width must be 2 (mean, log-variance)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
}

ParamBlock ParameterLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  ParamBlock b{std::move(name), size_, rows, cols};
  size_ += rows * cols;
  return b;
}

ParameterLayout::ParameterLayout(const ModelConfig& cfg) {
  cfg.validate();
  int in = cfg.input_features;
  for (std::size_t l = 0; l < cfg.rnn_features.size(); ++l) {
    const int h = cfg.rnn_features[l];
    const std::string p = "lstm" + std::to_string(l) + ".";
    Lstm layer{in, h, add(p + "w_input", 4 * h, in), add(p + "w_hidden", 4 * h, h), add(p + "bias", 4 * h, 1)};
    lstm_.push_back(std::move(layer));
    in = h;
  }
  for (std::size_t l = 0; l < cfg.gat_features.size(); ++l) {
    const int out = cfg.gat_features[l];
    const std::string p = "gat" + std::to_string(l) + ".";
    Gat layer{in, out, add(p + "weight", out, in), add(p + "att_src", out, 1), add(p + "att_dst", out, 1)};
    gat_.push_back(std::move(layer));
    in = out;
  }
  for (std::size_t l = 0; l < cfg.dfnn_features.size(); ++l) {
    const int out = cfg.dfnn_features[l];
    const std::string p = "dense" + std::to_string(l) + ".";
    Dense layer{in, out, add(p + "weight", out, in), add(p + "bias", out, 1)};
    dense_.push_back(std::move(layer));
    in = out;
  }
}

std::vector<ParamBlock> ParameterLayout::blocks() const {
  std::vector<ParamBlock> out;
  for (const auto& l : lstm_) out.insert(out.end(), {l.w_input, l.w_hidden, l.bias});
  for (const auto& l : gat_) out.insert(out.end(), {l.weight, l.att_src, l.att_dst});
  for (const auto& l : dense_) out.insert(out.end(), {l.weight, l.bias});
  return out;
}

ModelParams zero_params(const ModelConfig& cfg) {
  const ParameterLayout layout(cfg);
  return ModelParams{cfg, Eigen::VectorXd::Zero(layout.size())};
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = zero_params(cfg);
  const ParameterLayout layout(cfg);
  Rng rng(seed);
  auto glorot = [&](const ParamBlock& b, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    auto m = view(p.values, b);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-limit, limit);
  };
  for (const auto& l : layout.lstm()) {
    glorot(l.w_input, l.in, l.hidden);
    glorot(l.w_hidden, l.hidden, l.hidden);
    vview(p.values, l.bias).segment(l.hidden, l.hidden).setOnes();
  }
  for (const auto& l : layout.gat()) {
    glorot(l.weight, l.in, l.out);
    glorot(l.att_src, 2.0 * l.out, 1.0);
    glorot(l.att_dst, 2.0 * l.out, 1.0);
  }
  for (const auto& l : layout.dense()) glorot(l.weight, l.in, l.out);
  return p;
}

}  // namespace povmnet::neural
