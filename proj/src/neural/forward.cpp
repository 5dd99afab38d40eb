// Forward pass and hand-derived reverse pass of the estimator network.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "povmnet/errors.hpp"
#include "povmnet/neural/model.hpp"

namespace povmnet::neural {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLeakySlope = 0.2;

struct LstmTape {
  std::vector<MatrixXd> gates;  // activated i, f, g, o blocks, B x 4H
  std::vector<MatrixXd> cell;
  std::vector<MatrixXd> tanh_cell;
  std::vector<MatrixXd> hidden;
};

struct GatTape {
  MatrixXd input, wh, pre, attn, z, out;
};

struct HeadTape {
  VectorXd pooled;
  std::vector<VectorXd> act;  // output of each dense layer (tanh applied for hidden layers)
  double raw_log_variance = 0.0;
};

struct Tape {
  std::vector<MatrixXd> steps;  // one-hot inputs per site, B x 4
  std::vector<LstmTape> lstm;
  std::vector<GatTape> gat;
  HeadTape head;
  Prediction pred;
};

template <typename Derived>
void sigmoid_inplace(Eigen::MatrixBase<Derived>&& m) {
  m = (1.0 + (-m.array()).exp()).inverse().matrix();
}

std::vector<std::size_t> canonical_order(const PovmBatch& batch) {
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto sa = batch.sample(a);
    auto sb = batch.sample(b);
    return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end());
  });
  return order;
}

std::vector<MatrixXd> steps_from_batch(const PovmBatch& batch, const std::vector<std::size_t>& order, int features) {
  const auto rows = static_cast<Eigen::Index>(order.size());
  std::vector<MatrixXd> steps(static_cast<std::size_t>(batch.n_sites), MatrixXd::Zero(rows, features));
  for (Eigen::Index r = 0; r < rows; ++r) {
    auto s = batch.sample(order[static_cast<std::size_t>(r)]);
    for (int t = 0; t < batch.n_sites; ++t) {
      if (s[t] < 1 || s[t] > features) throw std::invalid_argument("network input: symbol out of range");
      steps[t](r, s[t] - 1) = 1.0;
    }
  }
  return steps;
}

std::vector<MatrixXd> steps_from_one_hot(const OneHotTensor& x, int features) {
  const auto [n_samples, n_sites, depth] = x.shape();
  if (static_cast<int>(depth) != features) throw DimensionError("one-hot depth does not match input_features");
  std::vector<MatrixXd> steps(n_sites, MatrixXd::Zero(static_cast<Eigen::Index>(n_samples), features));
  for (std::size_t s = 0; s < n_samples; ++s)
    for (std::size_t t = 0; t < n_sites; ++t)
      for (int k = 0; k < features; ++k) steps[t](static_cast<Eigen::Index>(s), k) = x(s, static_cast<int>(t), k);
  return steps;
}

void lstm_forward(const ModelParams& p, const ParameterLayout& layout, Tape& tape) {
  if (tape.steps.empty()) throw DimensionError("lstm: empty sequence");
  const auto T = tape.steps.size();
  const Eigen::Index B = tape.steps[0].rows();
  tape.lstm.resize(layout.lstm().size());
  for (std::size_t l = 0; l < layout.lstm().size(); ++l) {
    const auto& L = layout.lstm()[l];
    const int H = L.hidden;
    const auto wx = view(p.values, L.w_input);
    const auto wh = view(p.values, L.w_hidden);
    const auto b = vview(p.values, L.bias);
    LstmTape& lt = tape.lstm[l];
    lt.gates.resize(T);
    lt.cell.resize(T);
    lt.tanh_cell.resize(T);
    lt.hidden.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      const MatrixXd& x = l == 0 ? tape.steps[t] : tape.lstm[l - 1].hidden[t];
      if (x.cols() != L.in) throw DimensionError("lstm: input width mismatch");
      MatrixXd& z = lt.gates[t];
      z.noalias() = x * wx.transpose();
      if (t > 0) z.noalias() += lt.hidden[t - 1] * wh.transpose();
      z.rowwise() += b.transpose();
      sigmoid_inplace(z.leftCols(2 * H));
      z.middleCols(2 * H, H) = z.middleCols(2 * H, H).array().tanh().matrix();
      sigmoid_inplace(z.rightCols(H));
      if (t > 0)
        lt.cell[t] = z.middleCols(H, H).cwiseProduct(lt.cell[t - 1]) + z.leftCols(H).cwiseProduct(z.middleCols(2 * H, H));
      else
        lt.cell[t] = z.leftCols(H).cwiseProduct(z.middleCols(2 * H, H));
      lt.tanh_cell[t] = lt.cell[t].array().tanh().matrix();
      lt.hidden[t] = z.rightCols(H).cwiseProduct(lt.tanh_cell[t]);
    }
    (void)B;
  }
}

MatrixXd gat_forward(const ModelParams& p, const ParameterLayout::Gat& G, const MatrixXd& input, GatTape& gt) {
  if (input.cols() != G.in) throw DimensionError("gat: input width mismatch");
  if (input.rows() < 1) throw DimensionError("gat: at least one node required");
  const auto w = view(p.values, G.weight);
  const auto a_src = vview(p.values, G.att_src);
  const auto a_dst = vview(p.values, G.att_dst);
  gt.input = input;
  gt.wh.noalias() = input * w.transpose();
  const VectorXd s = gt.wh * a_src;
  const VectorXd d = gt.wh * a_dst;
  gt.pre = s.replicate(1, s.size());
  gt.pre.rowwise() += d.transpose();
  gt.attn = gt.pre.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
  const VectorXd row_max = gt.attn.rowwise().maxCoeff();
  gt.attn = (gt.attn.colwise() - row_max).array().exp().matrix();
  const VectorXd row_sum = gt.attn.rowwise().sum();
  gt.attn.array().colwise() /= row_sum.array();
  gt.z.noalias() = gt.attn * gt.wh;
  gt.out = gt.z.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
  return gt.out;
}

Prediction head_forward(const ModelParams& p, const ParameterLayout& layout, const MatrixXd& nodes, HeadTape& ht) {
  ht.pooled = nodes.colwise().sum().transpose();
  ht.act.clear();
  VectorXd a = ht.pooled;
  const auto& dense = layout.dense();
  for (std::size_t k = 0; k < dense.size(); ++k) {
    if (a.size() != dense[k].in) throw DimensionError("dense: input width mismatch");
    VectorXd z = view(p.values, dense[k].weight) * a + vview(p.values, dense[k].bias);
    if (k + 1 < dense.size()) z = z.array().tanh().matrix();
    ht.act.push_back(z);
    a = std::move(z);
  }
  ht.raw_log_variance = a(1);
  Prediction pred;
  pred.mean = a(0);
  pred.log_variance = std::clamp(a(1), -kLogVarianceClamp, kLogVarianceClamp);
  pred.sigma = std::exp(0.5 * pred.log_variance);
  if (!std::isfinite(pred.mean) || !std::isfinite(pred.log_variance))
    throw NumericalError("network produced a non-finite output");
  return pred;
}

Prediction run_forward(const ModelParams& p, const ParameterLayout& layout, Tape& tape) {
  lstm_forward(p, layout, tape);
  const MatrixXd* nodes = &tape.lstm.back().hidden.back();
  tape.gat.resize(layout.gat().size());
  for (std::size_t l = 0; l < layout.gat().size(); ++l) {
    gat_forward(p, layout.gat()[l], *nodes, tape.gat[l]);
    nodes = &tape.gat[l].out;
  }
  tape.pred = head_forward(p, layout, *nodes, tape.head);
  return tape.pred;
}

// Accumulates scale * dLoss/dtheta into grad.
void run_backward(const ModelParams& p, const ParameterLayout& layout, const Tape& tape, double d_mean,
                  double d_raw_log_variance, double scale, VectorXd& grad) {
  const auto& dense = layout.dense();
  // Dense head.
  VectorXd dz(2);
  dz << scale * d_mean, scale * d_raw_log_variance;
  for (std::size_t k = dense.size(); k-- > 0;) {
    if (k + 1 < dense.size()) dz = dz.cwiseProduct((1.0 - tape.head.act[k].array().square()).matrix());
    const VectorXd& a_prev = k == 0 ? tape.head.pooled : tape.head.act[k - 1];
    view(grad, dense[k].weight).noalias() += dz * a_prev.transpose();
    vview(grad, dense[k].bias) += dz;
    dz = view(p.values, dense[k].weight).transpose() * dz;
  }
  // Sum pooling broadcasts the pooled gradient to every node.
  const Eigen::Index B = tape.gat.empty() ? tape.lstm.back().hidden.back().rows() : tape.gat.back().out.rows();
  MatrixXd d_nodes = dz.transpose().replicate(B, 1);

  // Graph attention stack.
  for (std::size_t l = layout.gat().size(); l-- > 0;) {
    const auto& G = layout.gat()[l];
    const GatTape& gt = tape.gat[l];
    const auto w = view(p.values, G.weight);
    const auto a_src = vview(p.values, G.att_src);
    const auto a_dst = vview(p.values, G.att_dst);

    const MatrixXd dz_gat = d_nodes.cwiseProduct(gt.z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); }));
    const MatrixXd d_attn = dz_gat * gt.wh.transpose();
    MatrixXd d_wh = gt.attn.transpose() * dz_gat;
    const VectorXd row_dot = gt.attn.cwiseProduct(d_attn).rowwise().sum();
    MatrixXd d_pre = gt.attn.cwiseProduct(d_attn.colwise() - row_dot);
    d_pre.array() *= gt.pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; }).array();
    const VectorXd d_s = d_pre.rowwise().sum();
    const VectorXd d_d = d_pre.colwise().sum().transpose();
    d_wh.noalias() += d_s * a_src.transpose();
    d_wh.noalias() += d_d * a_dst.transpose();
    vview(grad, G.att_src).noalias() += gt.wh.transpose() * d_s;
    vview(grad, G.att_dst).noalias() += gt.wh.transpose() * d_d;
    view(grad, G.weight).noalias() += d_wh.transpose() * gt.input;
    d_nodes = d_wh * w;
  }

  // LSTM stack, top layer first; only the last hidden state of the top layer
  // feeds the graph.
  const std::size_t T = tape.steps.size();
  std::vector<MatrixXd> d_hidden_ext(T);
  d_hidden_ext[T - 1] = std::move(d_nodes);
  for (std::size_t l = layout.lstm().size(); l-- > 0;) {
    const auto& L = layout.lstm()[l];
    const int H = L.hidden;
    const LstmTape& lt = tape.lstm[l];
    const auto wx = view(p.values, L.w_input);
    const auto wh = view(p.values, L.w_hidden);
    auto g_wx = view(grad, L.w_input);
    auto g_wh = view(grad, L.w_hidden);
    auto g_b = vview(grad, L.bias);
    std::vector<MatrixXd> d_input(l > 0 ? T : 0);
    MatrixXd dh_next, dc_next;
    MatrixXd dzg;
    for (std::size_t t = T; t-- > 0;) {
      const MatrixXd& z = lt.gates[t];
      const Eigen::Index rows = z.rows();
      MatrixXd dh = d_hidden_ext[t].size() ? d_hidden_ext[t] : MatrixXd::Zero(rows, H);
      if (dh_next.size()) dh += dh_next;
      const auto i = z.leftCols(H).array();
      const auto f = z.middleCols(H, H).array();
      const auto g = z.middleCols(2 * H, H).array();
      const auto o = z.rightCols(H).array();
      const auto tc = lt.tanh_cell[t].array();
      MatrixXd dc = (dh.array() * o * (1.0 - tc.square())).matrix();
      if (dc_next.size()) dc += dc_next;
      dzg.resize(rows, 4 * H);
      dzg.leftCols(H) = (dc.array() * g * i * (1.0 - i)).matrix();
      if (t > 0)
        dzg.middleCols(H, H) = (dc.array() * lt.cell[t - 1].array() * f * (1.0 - f)).matrix();
      else
        dzg.middleCols(H, H).setZero();
      dzg.middleCols(2 * H, H) = (dc.array() * i * (1.0 - g.square())).matrix();
      dzg.rightCols(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
      dc_next = (dc.array() * f).matrix();

      const MatrixXd& x = l == 0 ? tape.steps[t] : tape.lstm[l - 1].hidden[t];
      g_wx.noalias() += dzg.transpose() * x;
      g_b += dzg.colwise().sum().transpose();
      if (t > 0) {
        g_wh.noalias() += dzg.transpose() * lt.hidden[t - 1];
        dh_next.noalias() = dzg * wh;
      }
      if (l > 0) d_input[t].noalias() = dzg * wx;
    }
    if (l > 0) d_hidden_ext = std::move(d_input);
  }
}

void check_gradient_finite(const ParameterLayout& layout, const VectorXd& grad) {
  if (grad.allFinite()) return;
  for (const auto& b : layout.blocks())
    if (!grad.segment(b.offset, b.size()).allFinite())
      throw NumericalError("non-finite gradient in parameter block '" + b.name + "'");
  throw NumericalError("non-finite gradient");
}

void check_params(const ModelParams& params, int n_sites) {
  const ParameterLayout layout(params.config);
  if (params.values.size() != layout.size()) throw DimensionError("parameter vector does not match model config");
  if (n_sites < 1) throw DimensionError("batch has no sites");
}

}  // namespace

Eigen::MatrixXd lstm_embed(const OneHotTensor& one_hot, const ModelParams& params) {
  const ParameterLayout layout(params.config);
  if (params.values.size() != layout.size()) throw DimensionError("parameter vector does not match model config");
  Tape tape;
  tape.steps = steps_from_one_hot(one_hot, params.config.input_features);
  lstm_forward(params, layout, tape);
  return tape.lstm.back().hidden.back();
}

Eigen::MatrixXd gat_layer(const Eigen::MatrixXd& nodes, const ModelParams& params, int layer) {
  const ParameterLayout layout(params.config);
  if (layer < 0 || layer >= static_cast<int>(layout.gat().size())) throw std::out_of_range("gat_layer: bad layer index");
  GatTape gt;
  return gat_forward(params, layout.gat()[static_cast<std::size_t>(layer)], nodes, gt);
}

Prediction pool_and_head(const Eigen::MatrixXd& nodes, const ModelParams& params) {
  const ParameterLayout layout(params.config);
  HeadTape ht;
  return head_forward(params, layout, nodes, ht);
}

Prediction predict(const ModelParams& params, const PovmBatch& batch) {
  check_params(params, batch.n_sites);
  const ParameterLayout layout(params.config);
  thread_local Tape tape;
  tape.steps = steps_from_batch(batch, canonical_order(batch), params.config.input_features);
  return run_forward(params, layout, tape);
}

double nll_loss(const Prediction& pred, double label) {
  if (!(pred.sigma > 0.0)) throw std::invalid_argument("nll_loss: sigma must be positive");
  const double var = pred.sigma * pred.sigma;
  const double diff = label - pred.mean;
  return diff * diff / var + std::log(var);
}

LossAndGradient gradients(const ModelParams& params, std::span<const Example> minibatch) {
  if (minibatch.empty()) throw std::invalid_argument("gradients: empty minibatch");
  const ParameterLayout layout(params.config);
  LossAndGradient out;
  out.gradient = VectorXd::Zero(layout.size());
  const double scale = 1.0 / static_cast<double>(minibatch.size());
  for (const Example& ex : minibatch) {
    check_params(params, ex.batch->n_sites);
    thread_local Tape tape;
    tape.steps = steps_from_batch(*ex.batch, canonical_order(*ex.batch), params.config.input_features);
    const Prediction pred = run_forward(params, layout, tape);
    const double inv_var = std::exp(-pred.log_variance);
    const double diff = ex.label - pred.mean;
    const double loss = diff * diff * inv_var + pred.log_variance;
    const double d_mean = -2.0 * diff * inv_var;
    const double r = tape.head.raw_log_variance;
    const double d_r = (r > -kLogVarianceClamp && r < kLogVarianceClamp) ? 1.0 - diff * diff * inv_var : 0.0;
    run_backward(params, layout, tape, d_mean, d_r, scale, out.gradient);
    out.losses.push_back(loss);
    out.loss += scale * loss;
  }
  check_gradient_finite(layout, out.gradient);
  return out;
}

double mean_loss(const ModelParams& params, std::span<const Example> examples) {
  if (examples.empty()) throw std::invalid_argument("mean_loss: no examples");
  double total = 0.0;
  for (const Example& ex : examples) total += nll_loss(predict(params, *ex.batch), ex.label);
  return total / static_cast<double>(examples.size());
}

}  // namespace povmnet::neural
