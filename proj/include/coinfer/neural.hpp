#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "coinfer/rng.hpp"

namespace coinfer {

enum class Activation { identity, relu };

// Fully connected network with a recorded forward pass and exact
// reverse-mode gradients. Parameters and gradients live in flat arrays
// (per-layer weight blocks followed by the bias) so the optimizer and
// checkpoints can treat a net as one vector.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::size_t input_dim, std::span<const std::size_t> widths,
           std::span<const Activation> activations);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const;
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  const std::vector<Activation>& activations() const { return acts_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> grads() { return grads_; }
  std::span<const double> grads() const { return grads_; }

  // Records activations for a later backward(). Throws ContractError on a
  // shape mismatch.
  std::span<const double> forward(std::span<const double> x);
  // Accumulates parameter gradients for the recorded forward; returns
  // dL/dinput. Throws ContractError without a recorded forward.
  std::span<const double> backward(std::span<const double> dLdy);
  void zero_grad();

  // Orthogonal-style init: Gaussian matrices orthonormalized and scaled.
  // Hidden layers get gain sqrt(2) (rectified-linear), the output layer gets
  // `output_gain`. Biases start at zero.
  void init_orthogonal(RngStream& rng, double output_gain);

  bool params_finite() const;

 private:
  struct Layer {
    std::size_t in = 0, out = 0;
    Activation act = Activation::identity;
    std::size_t w_off = 0, b_off = 0;
  };

  std::size_t input_dim_ = 0;
  std::vector<std::size_t> widths_;
  std::vector<Activation> acts_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
  std::vector<double> grads_;
  // forward record
  std::vector<std::vector<double>> act_out_;  // act_out_[0] = input copy
  std::vector<std::vector<double>> preact_;
  std::vector<double> dx_, dz_, da_;
  bool recorded_ = false;
};

// Bias-corrected adaptive-moment optimizer over one flat parameter array.
// step() rejects non-finite gradients (parameters untouched) and counts the
// rejections.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::size_t n, double alpha, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  bool step(std::span<double> params, std::span<const double> grads);

  std::uint64_t step_count() const { return t_; }
  std::uint64_t rejected_count() const { return rejected_; }
  double learning_rate() const { return alpha_; }

  std::span<const double> m() const { return m_; }
  std::span<const double> v() const { return v_; }
  // Restores optimizer state (checkpoint load).
  void restore(std::span<const double> m, std::span<const double> v,
               std::uint64_t t);

 private:
  double alpha_ = 1e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::uint64_t t_ = 0;
  std::uint64_t rejected_ = 0;
  std::vector<double> m_, v_;
};

// Scales `grads` so its L2 norm is at most max_norm; returns the pre-clip
// norm. No-op when max_norm <= 0.
double clip_gradient_norm(std::span<double> grads, double max_norm);

// ---- Policy heads ----

// Softmax distribution over logits (max-shifted for stability).
struct CategoricalDist {
  std::vector<double> probs;
  double entropy = 0.0;

  static CategoricalDist from_logits(std::span<const double> logits);
  std::size_t sample(RngStream& rng) const;
  std::size_t argmax() const;
  double log_prob(std::size_t k) const;
  // Adds d(scale_lp * log p_k + scale_ent * H)/dlogits into dlogits.
  void backward(std::size_t k, double scale_lp, double scale_ent,
                std::span<double> dlogits) const;
};

// Unbounded Gaussian policy head built from two branch outputs (mean and a
// raw log-std that is clamped to [-5, 2]). Log-probabilities and entropy are
// those of the unclipped Gaussian; execution-time clipping of the sampled
// action is the caller's concern.
struct GaussianHead {
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  double mean = 0.0;
  double log_std_raw = 0.0;
  double log_std = 0.0;
  double stddev = 1.0;

  static GaussianHead from_outputs(double mean, double log_std_raw);
  double sample(RngStream& rng) const;
  double log_prob(double a) const;
  double entropy() const;
  // d(scale_lp * log_prob(a) + scale_ent * H)/d(mean, log_std_raw); the
  // log-std component is gated to zero where the clamp is active.
  std::array<double, 2> backward(double a, double scale_lp,
                                 double scale_ent) const;
};

// Actor network with a shared trunk and three output branches: partition
// logits, channel logits, and the Gaussian power head (mean, log-std).
class HybridActorNet {
 public:
  HybridActorNet() = default;
  HybridActorNet(std::size_t obs_dim, int partition_choices,
                 int channel_choices, std::span<const std::size_t> trunk_widths,
                 std::size_t branch_hidden, RngStream& init_rng);

  // Reassembles an actor from serialized nets (head sizes are inferred from
  // the branch output widths).
  static HybridActorNet from_parts(DenseNet trunk, DenseNet partition_branch,
                                   DenseNet channel_branch,
                                   DenseNet power_branch);

  struct Eval {
    CategoricalDist partition;
    CategoricalDist channel;
    GaussianHead power;
  };

  Eval forward(std::span<const double> obs);
  // Backward for the most recent forward. scale_lp multiplies the joint
  // log-probability of (partition_k, channel_k, power_a); scale_ent
  // multiplies the joint entropy.
  void backward(const Eval& eval, std::size_t partition_k,
                std::size_t channel_k, double power_a, double scale_lp,
                double scale_ent);
  void zero_grad();

  int partition_choices() const { return partition_choices_; }
  int channel_choices() const { return channel_choices_; }
  std::size_t obs_dim() const { return trunk_.input_dim(); }

  DenseNet& trunk() { return trunk_; }
  DenseNet& partition_branch() { return partition_branch_; }
  DenseNet& channel_branch() { return channel_branch_; }
  DenseNet& power_branch() { return power_branch_; }
  const DenseNet& trunk() const { return trunk_; }
  const DenseNet& partition_branch() const { return partition_branch_; }
  const DenseNet& channel_branch() const { return channel_branch_; }
  const DenseNet& power_branch() const { return power_branch_; }

  bool params_finite() const;

 private:
  int partition_choices_ = 0;
  int channel_choices_ = 0;
  DenseNet trunk_, partition_branch_, channel_branch_, power_branch_;
  std::vector<double> trunk_grad_;
};

// Critic: dense net ending in one linear value output.
DenseNet make_critic(std::size_t obs_dim, std::span<const std::size_t> hidden,
                     RngStream& init_rng);

}  // namespace coinfer
