#include "coinfer/neural.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coinfer/error.hpp"
#include "coinfer/kernels.hpp"

namespace coinfer {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;  // ln(2*pi)
}

DenseNet::DenseNet(std::size_t input_dim, std::span<const std::size_t> widths,
                   std::span<const Activation> activations)
    : input_dim_(input_dim),
      widths_(widths.begin(), widths.end()),
      acts_(activations.begin(), activations.end()) {
  if (widths_.empty() || widths_.size() != acts_.size()) {
    throw ContractError("DenseNet: widths/activations size mismatch");
  }
  std::size_t off = 0;
  std::size_t in = input_dim_;
  for (std::size_t l = 0; l < widths_.size(); ++l) {
    Layer layer;
    layer.in = in;
    layer.out = widths_[l];
    layer.act = acts_[l];
    layer.w_off = off;
    off += layer.in * layer.out;
    layer.b_off = off;
    off += layer.out;
    layers_.push_back(layer);
    in = layer.out;
  }
  params_.assign(off, 0.0);
  grads_.assign(off, 0.0);
  act_out_.resize(layers_.size() + 1);
  preact_.resize(layers_.size());
}

std::size_t DenseNet::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().out;
}

std::span<const double> DenseNet::forward(std::span<const double> x) {
  if (x.size() != input_dim_) {
    throw ContractError("DenseNet::forward: input has " +
                        std::to_string(x.size()) + " entries, expected " +
                        std::to_string(input_dim_));
  }
  act_out_[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    preact_[l].resize(layer.out);
    act_out_[l + 1].resize(layer.out);
    kernels::matvec(params_.data() + layer.w_off, act_out_[l].data(),
                    preact_[l].data(), layer.out, layer.in);
    const double* bias = params_.data() + layer.b_off;
    for (std::size_t i = 0; i < layer.out; ++i) preact_[l][i] += bias[i];
    if (layer.act == Activation::relu) {
      kernels::relu(preact_[l].data(), act_out_[l + 1].data(), layer.out);
    } else {
      act_out_[l + 1] = preact_[l];
    }
  }
  recorded_ = true;
  return act_out_.back();
}

std::span<const double> DenseNet::backward(std::span<const double> dLdy) {
  if (!recorded_) {
    throw ContractError("DenseNet::backward: no recorded forward pass");
  }
  if (dLdy.size() != output_dim()) {
    throw ContractError("DenseNet::backward: gradient size mismatch");
  }
  da_.assign(dLdy.begin(), dLdy.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    dz_.resize(layer.out);
    if (layer.act == Activation::relu) {
      kernels::relu_grad(preact_[li].data(), da_.data(), dz_.data(),
                         layer.out);
    } else {
      dz_ = da_;
    }
    kernels::axpy(1.0, dz_.data(), grads_.data() + layer.b_off, layer.out);
    kernels::outer_acc(grads_.data() + layer.w_off, dz_.data(),
                       act_out_[li].data(), layer.out, layer.in);
    dx_.resize(layer.in);
    kernels::matvec_t(params_.data() + layer.w_off, dz_.data(), dx_.data(),
                      layer.out, layer.in);
    da_ = dx_;
  }
  return da_;
}

void DenseNet::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void DenseNet::init_orthogonal(RngStream& rng, double output_gain) {
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& layer = layers_[li];
    const bool last = (li + 1 == layers_.size());
    const double gain = last ? output_gain : std::sqrt(2.0);
    const std::size_t rows = layer.out;
    const std::size_t cols = layer.in;
    std::vector<double> m(rows * cols);
    for (double& v : m) v = rng.normal();
    // Orthonormalize along the smaller dimension (modified Gram-Schmidt on
    // rows, transposing when rows > cols).
    const bool transpose = rows > cols;
    const std::size_t nvec = transpose ? cols : rows;
    const std::size_t dim = transpose ? rows : cols;
    auto at = [&](std::size_t vec, std::size_t i) -> double& {
      return transpose ? m[i * cols + vec] : m[vec * cols + i];
    };
    for (std::size_t v = 0; v < nvec; ++v) {
      for (std::size_t u = 0; u < v; ++u) {
        double proj = 0.0;
        for (std::size_t i = 0; i < dim; ++i) proj += at(u, i) * at(v, i);
        for (std::size_t i = 0; i < dim; ++i) at(v, i) -= proj * at(u, i);
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) norm += at(v, i) * at(v, i);
      norm = std::sqrt(norm);
      if (norm < 1e-12) norm = 1.0;
      for (std::size_t i = 0; i < dim; ++i) at(v, i) /= norm;
    }
    for (std::size_t i = 0; i < rows * cols; ++i) {
      params_[layer.w_off + i] = gain * m[i];
    }
    std::fill(params_.begin() + static_cast<std::ptrdiff_t>(layer.b_off),
              params_.begin() + static_cast<std::ptrdiff_t>(layer.b_off + layer.out),
              0.0);
  }
}

bool DenseNet::params_finite() const {
  for (double p : params_) {
    if (!std::isfinite(p)) return false;
  }
  return true;
}

AdamOptimizer::AdamOptimizer(std::size_t n, double alpha, double beta1,
                             double beta2, double eps)
    : alpha_(alpha), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.assign(n, 0.0);
  v_.assign(n, 0.0);
}

bool AdamOptimizer::step(std::span<double> params,
                         std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ContractError("Adam: parameter/gradient size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) {
      ++rejected_;
      return false;
    }
  }
  ++t_;
  kernels::adam_update(params.data(), grads.data(), m_.data(), v_.data(),
                       params.size(), t_, alpha_, beta1_, beta2_, eps_);
  return true;
}

void AdamOptimizer::restore(std::span<const double> m,
                            std::span<const double> v, std::uint64_t t) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw ContractError("Adam: restore size mismatch");
  }
  std::copy(m.begin(), m.end(), m_.begin());
  std::copy(v.begin(), v.end(), v_.begin());
  t_ = t;
}

double clip_gradient_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

CategoricalDist CategoricalDist::from_logits(std::span<const double> logits) {
  if (logits.empty()) throw ContractError("categorical: no logits");
  CategoricalDist d;
  d.probs.resize(logits.size());
  double max_logit = logits[0];
  for (double l : logits) max_logit = std::max(max_logit, l);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    d.probs[i] = std::exp(logits[i] - max_logit);
    sum += d.probs[i];
  }
  double entropy = 0.0;
  for (double& p : d.probs) {
    p /= sum;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  d.entropy = entropy;
  return d;
}

std::size_t CategoricalDist::sample(RngStream& rng) const {
  return rng.categorical(probs);
}

std::size_t CategoricalDist::argmax() const {
  return static_cast<std::size_t>(
      std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double CategoricalDist::log_prob(std::size_t k) const {
  return std::log(probs[k]);
}

void CategoricalDist::backward(std::size_t k, double scale_lp,
                               double scale_ent,
                               std::span<double> dlogits) const {
  // d log p_k / d z_j = [j == k] - p_j
  // d H / d z_j       = -p_j (log p_j + H)
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double pj = probs[j];
    double g = scale_lp * ((j == k ? 1.0 : 0.0) - pj);
    if (scale_ent != 0.0 && pj > 0.0) {
      g += scale_ent * (-pj * (std::log(pj) + entropy));
    }
    dlogits[j] += g;
  }
}

GaussianHead GaussianHead::from_outputs(double mean, double log_std_raw) {
  GaussianHead h;
  h.mean = mean;
  h.log_std_raw = log_std_raw;
  h.log_std = std::clamp(log_std_raw, kLogStdMin, kLogStdMax);
  h.stddev = std::exp(h.log_std);
  return h;
}

double GaussianHead::sample(RngStream& rng) const {
  return mean + stddev * rng.normal();
}

double GaussianHead::log_prob(double a) const {
  const double z = (a - mean) / stddev;
  return -0.5 * kLogTwoPi - log_std - 0.5 * z * z;
}

double GaussianHead::entropy() const {
  return 0.5 * (kLogTwoPi + 1.0) + log_std;
}

std::array<double, 2> GaussianHead::backward(double a, double scale_lp,
                                             double scale_ent) const {
  const double z = (a - mean) / stddev;
  const double d_mean = scale_lp * z / stddev;
  double d_log_std = scale_lp * (z * z - 1.0) + scale_ent;
  // Clamp gate: no gradient through log-std outside the clamp range.
  if (log_std_raw <= kLogStdMin || log_std_raw >= kLogStdMax) d_log_std = 0.0;
  return {d_mean, d_log_std};
}

HybridActorNet::HybridActorNet(std::size_t obs_dim, int partition_choices,
                               int channel_choices,
                               std::span<const std::size_t> trunk_widths,
                               std::size_t branch_hidden, RngStream& init_rng)
    : partition_choices_(partition_choices), channel_choices_(channel_choices) {
  if (partition_choices < 1 || channel_choices < 1) {
    throw ContractError("actor: head sizes must be >= 1");
  }
  if (trunk_widths.empty()) throw ContractError("actor: empty trunk");
  std::vector<Activation> trunk_acts(trunk_widths.size(), Activation::relu);
  trunk_ = DenseNet(obs_dim, trunk_widths, trunk_acts);

  const std::size_t trunk_out = trunk_widths.back();
  const std::array<Activation, 2> branch_acts = {Activation::relu,
                                                 Activation::identity};
  const std::array<std::size_t, 2> pb_widths = {
      branch_hidden, static_cast<std::size_t>(partition_choices)};
  const std::array<std::size_t, 2> cb_widths = {
      branch_hidden, static_cast<std::size_t>(channel_choices)};
  const std::array<std::size_t, 2> pw_widths = {branch_hidden, 2};
  partition_branch_ = DenseNet(trunk_out, pb_widths, branch_acts);
  channel_branch_ = DenseNet(trunk_out, cb_widths, branch_acts);
  power_branch_ = DenseNet(trunk_out, pw_widths, branch_acts);

  trunk_.init_orthogonal(init_rng, std::sqrt(2.0));
  partition_branch_.init_orthogonal(init_rng, 0.01);
  channel_branch_.init_orthogonal(init_rng, 0.01);
  power_branch_.init_orthogonal(init_rng, 0.01);
  trunk_grad_.resize(trunk_out);
}

HybridActorNet HybridActorNet::from_parts(DenseNet trunk,
                                          DenseNet partition_branch,
                                          DenseNet channel_branch,
                                          DenseNet power_branch) {
  if (power_branch.output_dim() != 2) {
    throw ContractError("actor: power branch must emit (mean, log_std)");
  }
  HybridActorNet a;
  a.partition_choices_ = static_cast<int>(partition_branch.output_dim());
  a.channel_choices_ = static_cast<int>(channel_branch.output_dim());
  a.trunk_ = std::move(trunk);
  a.partition_branch_ = std::move(partition_branch);
  a.channel_branch_ = std::move(channel_branch);
  a.power_branch_ = std::move(power_branch);
  a.trunk_grad_.resize(a.trunk_.output_dim());
  return a;
}

HybridActorNet::Eval HybridActorNet::forward(std::span<const double> obs) {
  const std::span<const double> t = trunk_.forward(obs);
  Eval e;
  e.partition = CategoricalDist::from_logits(partition_branch_.forward(t));
  e.channel = CategoricalDist::from_logits(channel_branch_.forward(t));
  const std::span<const double> pw = power_branch_.forward(t);
  e.power = GaussianHead::from_outputs(pw[0], pw[1]);
  return e;
}

void HybridActorNet::backward(const Eval& eval, std::size_t partition_k,
                              std::size_t channel_k, double power_a,
                              double scale_lp, double scale_ent) {
  std::vector<double> d_pb(eval.partition.probs.size(), 0.0);
  eval.partition.backward(partition_k, scale_lp, scale_ent, d_pb);
  std::vector<double> d_cb(eval.channel.probs.size(), 0.0);
  eval.channel.backward(channel_k, scale_lp, scale_ent, d_cb);
  const std::array<double, 2> d_pw =
      eval.power.backward(power_a, scale_lp, scale_ent);

  std::fill(trunk_grad_.begin(), trunk_grad_.end(), 0.0);
  std::span<const double> dt = partition_branch_.backward(d_pb);
  kernels::axpy(1.0, dt.data(), trunk_grad_.data(), trunk_grad_.size());
  dt = channel_branch_.backward(d_cb);
  kernels::axpy(1.0, dt.data(), trunk_grad_.data(), trunk_grad_.size());
  dt = power_branch_.backward(std::span<const double>(d_pw.data(), 2));
  kernels::axpy(1.0, dt.data(), trunk_grad_.data(), trunk_grad_.size());
  trunk_.backward(trunk_grad_);
}

void HybridActorNet::zero_grad() {
  trunk_.zero_grad();
  partition_branch_.zero_grad();
  channel_branch_.zero_grad();
  power_branch_.zero_grad();
}

bool HybridActorNet::params_finite() const {
  return trunk_.params_finite() && partition_branch_.params_finite() &&
         channel_branch_.params_finite() && power_branch_.params_finite();
}

DenseNet make_critic(std::size_t obs_dim, std::span<const std::size_t> hidden,
                     RngStream& init_rng) {
  std::vector<std::size_t> widths(hidden.begin(), hidden.end());
  widths.push_back(1);
  std::vector<Activation> acts(hidden.size(), Activation::relu);
  acts.push_back(Activation::identity);
  DenseNet critic(obs_dim, widths, acts);
  critic.init_orthogonal(init_rng, 1.0);
  return critic;
}

}  // namespace coinfer
