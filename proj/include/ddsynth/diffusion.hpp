#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddsynth {

struct DiffusionConfig {
  int steps = 50;
  double beta_start = 0.002;  // linear variance schedule endpoints
  double beta_end = 0.4;
  int length = 64;            // segment length the denoiser sees (l_max)
  int embed_dim = 16;         // sinusoidal step embedding
  int hidden = 128;
  int epochs = 200;
  int batch_size = 32;
  int draws_per_segment = 8;  // noisy draws per training segment per epoch
  double learning_rate = 2e-3;
  double lr_decay = 0.985;    // per epoch
  double ema_decay = 0.998;   // weight averaging; the averaged weights are the trained model
  std::uint64_t seed = 0;
};

/// Linear variance schedule with cumulative products.
struct NoiseSchedule {
  Eigen::VectorXd beta;       // beta_1..beta_N at index t-1
  Eigen::VectorXd alpha;      // 1 - beta
  Eigen::VectorXd alpha_bar;  // prod_{s<=t} alpha_s

  NoiseSchedule() = default;
  NoiseSchedule(int steps, double beta_start, double beta_end);
  int steps() const { return static_cast<int>(beta.size()); }
};

/// Columns are samples.
using Batch = Eigen::MatrixXd;

/// F_theta(x_t, t, p): a two-hidden-layer SiLU MLP over [x_t ; embed(t) ; p] estimating the clean segment.
/// The noise estimate is derived from it (DiffusionModel::predict_noise).
class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(int length, int embed_dim, int hidden, std::mt19937_64& rng);

  int length() const { return length_; }
  int embed_dim() const { return embed_dim_; }
  int hidden() const { return hidden_; }

  Eigen::VectorXd embed(int t) const;
  Batch predict(const Batch& x_t, const std::vector<int>& t, const Batch& pattern) const;

  /// Column-weighted mean squared error sum_j w_j |F_j - target_j|^2 / size, and its gradient w.r.t. all
  /// parameters (flattened in the order of parameters()). Empty weights mean all ones.
  double loss(const Batch& x_t, const std::vector<int>& t, const Batch& pattern, const Batch& target,
              const Eigen::VectorXd& weights = {}) const;
  double loss_gradient(const Batch& x_t, const std::vector<int>& t, const Batch& pattern, const Batch& target,
                       Eigen::VectorXd& grad, const Eigen::VectorXd& weights = {}) const;

  Eigen::Index parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta);

 private:
  Batch input(const Batch& x_t, const std::vector<int>& t, const Batch& pattern) const;

  int length_ = 0, embed_dim_ = 0, hidden_ = 0;
  Eigen::MatrixXd W1_, W2_, W3_;
  Eigen::VectorXd b1_, b2_, b3_;
};

class DiffusionDiverged : public std::runtime_error {
 public:
  DiffusionDiverged(int step) : std::runtime_error("diffusion training diverged (NaN loss) at step " + std::to_string(step)), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct DiffusionModel {
  DiffusionConfig config;
  NoiseSchedule schedule;
  Denoiser denoiser;
  std::vector<double> loss_trace;  // probe-set noise-prediction loss after each epoch

  /// eps_theta(x_t, t, p) = (x_t - sqrt(abar_t) F_theta) / sqrt(1 - abar_t).
  Batch predict_noise(const Batch& x_t, const std::vector<int>& t, const Batch& pattern) const;
  /// mean |eps - eps_theta|^2.
  double noise_loss(const Batch& x_t, const std::vector<int>& t, const Batch& pattern, const Batch& eps) const;
  /// Per-column signal-to-noise ratio abar_t / (1 - abar_t); it turns the clean-segment error into the noise error.
  Eigen::VectorXd snr(const std::vector<int>& t) const;

  /// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, for t in 1..N.
  Batch forward_noise(const Batch& x0, int t, const Batch& eps) const;
  /// Mean of p(x_{t-1} | x_t) given a noise estimate.
  Batch reverse_mean(const Batch& x_t, int t, const Batch& eps_hat) const;
  /// Mean of the true posterior q(x_{t-1} | x_t, x0).
  Batch posterior_mean(const Batch& x_t, int t, const Batch& x0) const;
};

/// One training example: a normalised segment in [0, 1] (length l_max) and its pattern.
struct DiffusionSample {
  Eigen::VectorXd segment;
  Eigen::VectorXd pattern;
};

DiffusionModel train_pattern_diffusion(const std::vector<DiffusionSample>& data, const DiffusionConfig& cfg);

/// Ancestral sampling conditioned on `pattern`, returned in normalised [0, 1] units (length l_max).
Eigen::VectorXd sample_normalized(const DiffusionModel& model, const Eigen::Ref<const Eigen::VectorXd>& pattern,
                                  std::uint64_t seed);

/// Denormalised segment: sample * beta, first alpha samples.
Eigen::VectorXd sample_pattern(const DiffusionModel& model, const Eigen::Ref<const Eigen::VectorXd>& pattern, int alpha,
                               double beta, std::uint64_t seed);

}  // namespace ddsynth
