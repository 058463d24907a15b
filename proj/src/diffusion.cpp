#include "ddsynth/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ddsynth {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Eigen::MatrixXd silu(const Eigen::MatrixXd& z) { return (z.array() * sigmoid(z).array()).matrix(); }

Eigen::MatrixXd silu_grad(const Eigen::MatrixXd& z) {
  const Eigen::ArrayXXd s = sigmoid(z).array();
  return (s * (1.0 + z.array() * (1.0 - s))).matrix();
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

template <typename M>
void pack(Eigen::VectorXd& out, Eigen::Index& pos, const M& m) {
  out.segment(pos, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  pos += m.size();
}

template <typename M>
void unpack(M& m, Eigen::Index& pos, const Eigen::Ref<const Eigen::VectorXd>& in) {
  Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = in.segment(pos, m.size());
  pos += m.size();
}

}  // namespace

NoiseSchedule::NoiseSchedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("diffusion needs at least one step");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || (steps > 1 && !(beta_start < beta_end)))
    throw std::invalid_argument("noise schedule must satisfy 0 < beta_1 < ... < beta_N < 1");
  beta = Eigen::VectorXd::LinSpaced(steps, beta_start, steps == 1 ? beta_start : beta_end);
  alpha = 1.0 - beta.array();
  alpha_bar.resize(steps);
  double prod = 1.0;
  for (int t = 0; t < steps; ++t) alpha_bar(t) = prod *= alpha(t);
}

// ---------------------------------------------------------------------------

Denoiser::Denoiser(int length, int embed_dim, int hidden, std::mt19937_64& rng)
    : length_(length), embed_dim_(embed_dim), hidden_(hidden) {
  if (length < 1 || embed_dim < 2 || embed_dim % 2 != 0 || hidden < 1)
    throw std::invalid_argument("invalid denoiser shape");
  const int in = 2 * length + embed_dim;
  auto uniform = [&](Eigen::Index r, Eigen::Index c, double fan_in) {
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };
  W1_ = uniform(hidden, in, in);
  b1_ = uniform(hidden, 1, in);
  W2_ = uniform(hidden, hidden, hidden);
  b2_ = uniform(hidden, 1, hidden);
  W3_ = uniform(length, hidden, hidden);
  b3_ = uniform(length, 1, hidden);
}

Eigen::VectorXd Denoiser::embed(int t) const {
  Eigen::VectorXd e(embed_dim_);
  const int half = embed_dim_ / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e(2 * i) = std::sin(t * freq);
    e(2 * i + 1) = std::cos(t * freq);
  }
  return e;
}

Batch Denoiser::input(const Batch& x_t, const std::vector<int>& t, const Batch& pattern) const {
  if (x_t.rows() != length_ || pattern.rows() != length_ || pattern.cols() != x_t.cols() ||
      static_cast<Eigen::Index>(t.size()) != x_t.cols())
    throw std::invalid_argument("denoiser input has the wrong shape");
  Batch in(2 * length_ + embed_dim_, x_t.cols());
  in.topRows(length_) = x_t;
  for (Eigen::Index j = 0; j < x_t.cols(); ++j) in.col(j).segment(length_, embed_dim_) = embed(t[static_cast<std::size_t>(j)]);
  in.bottomRows(length_) = 2.0 * pattern.array() - 1.0;
  return in;
}

Batch Denoiser::predict(const Batch& x_t, const std::vector<int>& t, const Batch& pattern) const {
  const Batch in = input(x_t, t, pattern);
  const Eigen::MatrixXd a1 = silu((W1_ * in).colwise() + b1_);
  const Eigen::MatrixXd a2 = silu((W2_ * a1).colwise() + b2_);
  return (W3_ * a2).colwise() + b3_;
}

double Denoiser::loss(const Batch& x_t, const std::vector<int>& t, const Batch& pattern, const Batch& target,
                      const Eigen::VectorXd& weights) const {
  const Eigen::MatrixXd diff = predict(x_t, t, pattern) - target;
  const Eigen::VectorXd col = diff.colwise().squaredNorm().transpose();
  return (weights.size() ? col.dot(weights) : col.sum()) / static_cast<double>(target.size());
}

double Denoiser::loss_gradient(const Batch& x_t, const std::vector<int>& t, const Batch& pattern, const Batch& target,
                               Eigen::VectorXd& grad, const Eigen::VectorXd& weights) const {
  const Batch in = input(x_t, t, pattern);
  const Eigen::MatrixXd z1 = (W1_ * in).colwise() + b1_;
  const Eigen::MatrixXd a1 = silu(z1);
  const Eigen::MatrixXd z2 = (W2_ * a1).colwise() + b2_;
  const Eigen::MatrixXd a2 = silu(z2);
  Eigen::MatrixXd diff = ((W3_ * a2).colwise() + b3_) - target;
  const double n = static_cast<double>(target.size());
  const Eigen::VectorXd col = diff.colwise().squaredNorm().transpose();
  const double value = (weights.size() ? col.dot(weights) : col.sum()) / n;

  Eigen::MatrixXd dy = 2.0 * diff / n;
  if (weights.size()) dy *= weights.asDiagonal();
  const Eigen::MatrixXd dz2 = ((W3_.transpose() * dy).array() * silu_grad(z2).array()).matrix();
  const Eigen::MatrixXd dz1 = ((W2_.transpose() * dz2).array() * silu_grad(z1).array()).matrix();

  grad.resize(parameter_count());
  Eigen::Index pos = 0;
  pack(grad, pos, Eigen::MatrixXd(dz1 * in.transpose()));
  pack(grad, pos, Eigen::VectorXd(dz1.rowwise().sum()));
  pack(grad, pos, Eigen::MatrixXd(dz2 * a1.transpose()));
  pack(grad, pos, Eigen::VectorXd(dz2.rowwise().sum()));
  pack(grad, pos, Eigen::MatrixXd(dy * a2.transpose()));
  pack(grad, pos, Eigen::VectorXd(dy.rowwise().sum()));
  return value;
}

Eigen::Index Denoiser::parameter_count() const {
  return W1_.size() + b1_.size() + W2_.size() + b2_.size() + W3_.size() + b3_.size();
}

Eigen::VectorXd Denoiser::parameters() const {
  Eigen::VectorXd theta(parameter_count());
  Eigen::Index pos = 0;
  pack(theta, pos, W1_);
  pack(theta, pos, b1_);
  pack(theta, pos, W2_);
  pack(theta, pos, b2_);
  pack(theta, pos, W3_);
  pack(theta, pos, b3_);
  return theta;
}

void Denoiser::set_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta) {
  if (theta.size() != parameter_count()) throw std::invalid_argument("parameter vector has the wrong length");
  Eigen::Index pos = 0;
  unpack(W1_, pos, theta);
  unpack(b1_, pos, theta);
  unpack(W2_, pos, theta);
  unpack(b2_, pos, theta);
  unpack(W3_, pos, theta);
  unpack(b3_, pos, theta);
}

// ---------------------------------------------------------------------------

Batch DiffusionModel::forward_noise(const Batch& x0, int t, const Batch& eps) const {
  const double ab = schedule.alpha_bar(t - 1);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

Batch DiffusionModel::predict_noise(const Batch& x_t, const std::vector<int>& t, const Batch& pattern) const {
  const Batch x0 = denoiser.predict(x_t, t, pattern);
  Batch eps(x_t.rows(), x_t.cols());
  for (Eigen::Index j = 0; j < x_t.cols(); ++j) {
    const double ab = schedule.alpha_bar(t[static_cast<std::size_t>(j)] - 1);
    eps.col(j) = (x_t.col(j) - std::sqrt(ab) * x0.col(j)) / std::sqrt(1.0 - ab);
  }
  return eps;
}

double DiffusionModel::noise_loss(const Batch& x_t, const std::vector<int>& t, const Batch& pattern, const Batch& eps) const {
  return (predict_noise(x_t, t, pattern) - eps).squaredNorm() / static_cast<double>(eps.size());
}

Eigen::VectorXd DiffusionModel::snr(const std::vector<int>& t) const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(t.size()));
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double ab = schedule.alpha_bar(t[j] - 1);
    w(static_cast<Eigen::Index>(j)) = ab / (1.0 - ab);
  }
  return w;
}

Batch DiffusionModel::reverse_mean(const Batch& x_t, int t, const Batch& eps_hat) const {
  const double b = schedule.beta(t - 1), a = schedule.alpha(t - 1), ab = schedule.alpha_bar(t - 1);
  return (x_t - (b / std::sqrt(1.0 - ab)) * eps_hat) / std::sqrt(a);
}

Batch DiffusionModel::posterior_mean(const Batch& x_t, int t, const Batch& x0) const {
  const double b = schedule.beta(t - 1), a = schedule.alpha(t - 1), ab = schedule.alpha_bar(t - 1);
  const double ab_prev = t > 1 ? schedule.alpha_bar(t - 2) : 1.0;
  return (std::sqrt(ab_prev) * b / (1.0 - ab)) * x0 + (std::sqrt(a) * (1.0 - ab_prev) / (1.0 - ab)) * x_t;
}

DiffusionModel train_pattern_diffusion(const std::vector<DiffusionSample>& data, const DiffusionConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("no training segments for the diffusion model");
  for (const auto& d : data)
    if (d.segment.size() != cfg.length || d.pattern.size() != cfg.length)
      throw std::invalid_argument("training segments must have length " + std::to_string(cfg.length));
  std::mt19937_64 rng(cfg.seed);
  DiffusionModel model;
  model.config = cfg;
  model.schedule = NoiseSchedule(cfg.steps, cfg.beta_start, cfg.beta_end);
  model.denoiser = Denoiser(cfg.length, cfg.embed_dim, cfg.hidden, rng);
  std::uniform_int_distribution<int> step(1, cfg.steps);

  auto make_batch = [&](const std::vector<std::size_t>& idx, const std::vector<int>& ts, Batch& x_t, Batch& pat, Batch& x0) {
    const auto B = static_cast<Eigen::Index>(idx.size());
    x_t.resize(cfg.length, B);
    pat.resize(cfg.length, B);
    x0.resize(cfg.length, B);
    const Batch eps = gaussian(cfg.length, B, rng);
    for (Eigen::Index j = 0; j < B; ++j) {
      const auto& d = data[idx[static_cast<std::size_t>(j)]];
      const double ab = model.schedule.alpha_bar(ts[static_cast<std::size_t>(j)] - 1);
      x0.col(j) = 2.0 * d.segment.array() - 1.0;
      x_t.col(j) = std::sqrt(ab) * x0.col(j) + std::sqrt(1.0 - ab) * eps.col(j);
      pat.col(j) = d.pattern;
    }
  };

  // Fixed probe set for the loss trace: every segment at stratified steps.
  std::vector<std::size_t> probe_idx;
  std::vector<int> probe_t;
  const std::size_t probe_size = std::max<std::size_t>(128, data.size());
  for (std::size_t i = 0; i < probe_size; ++i) {
    probe_idx.push_back(i % data.size());
    probe_t.push_back(1 + static_cast<int>(i % static_cast<std::size_t>(cfg.steps)));
  }
  Batch probe_x, probe_p, probe_x0;
  make_batch(probe_idx, probe_t, probe_x, probe_p, probe_x0);
  const Eigen::VectorXd probe_w = model.snr(probe_t);

  Eigen::VectorXd theta = model.denoiser.parameters();
  Eigen::VectorXd ema = theta;
  Denoiser averaged = model.denoiser;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size()), v = Eigen::VectorXd::Zero(theta.size()), grad;
  constexpr double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  int global_step = 0;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < data.size(); ++i)
    for (int r = 0; r < std::max(1, cfg.draws_per_segment); ++r) order.push_back(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
      const auto last = std::min(order.size(), first + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(first), order.begin() + static_cast<std::ptrdiff_t>(last));
      std::vector<int> ts(idx.size());
      for (auto& t : ts) t = step(rng);
      Batch x_t, pat, x0;
      make_batch(idx, ts, x_t, pat, x0);
      // |eps - eps_theta|^2 == snr * |x0 - F_theta|^2
      const double loss = model.denoiser.loss_gradient(x_t, ts, pat, x0, grad, model.snr(ts));
      ++global_step;
      if (!std::isfinite(loss) || !grad.allFinite()) throw DiffusionDiverged(global_step);
      m = b1 * m + (1.0 - b1) * grad;
      v = b2 * v + (1.0 - b2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(b1, global_step), c2 = 1.0 - std::pow(b2, global_step);
      theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + adam_eps);
      model.denoiser.set_parameters(theta);
      const double d = std::min(cfg.ema_decay, 1.0 - 1.0 / (1.0 + global_step));
      ema = d * ema + (1.0 - d) * theta;
    }
    averaged.set_parameters(ema);
    const double probe = averaged.loss(probe_x, probe_t, probe_p, probe_x0, probe_w);
    if (!std::isfinite(probe)) throw DiffusionDiverged(global_step);
    model.loss_trace.push_back(probe);
  }
  model.denoiser = std::move(averaged);
  return model;
}

Eigen::VectorXd sample_normalized(const DiffusionModel& model, const Eigen::Ref<const Eigen::VectorXd>& pattern,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int L = model.denoiser.length();
  Batch x = gaussian(L, 1, rng);
  const Batch p = pattern;
  for (int t = model.schedule.steps(); t >= 1; --t) {
    const Batch eps_hat = model.predict_noise(x, {t}, p);
    x = model.reverse_mean(x, t, eps_hat);
    if (t > 1) x += std::sqrt(model.schedule.beta(t - 1)) * gaussian(L, 1, rng);
  }
  return ((x.col(0).array().min(1.0).max(-1.0) + 1.0) / 2.0).matrix();
}

Eigen::VectorXd sample_pattern(const DiffusionModel& model, const Eigen::Ref<const Eigen::VectorXd>& pattern, int alpha,
                               double beta, std::uint64_t seed) {
  if (alpha < 0) throw std::invalid_argument("segment length must be non-negative");
  if (beta == 0.0) return Eigen::VectorXd::Zero(alpha);
  const Eigen::VectorXd s = sample_normalized(model, pattern, seed) * beta;
  Eigen::VectorXd out(alpha);
  const Eigen::Index m = std::min<Eigen::Index>(alpha, s.size());
  out.head(m) = s.head(m);
  if (alpha > m) out.tail(alpha - m).setConstant(s(s.size() - 1));
  return out;
}

}  // namespace ddsynth
