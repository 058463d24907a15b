#include "ddsynth/diffusion.hpp"
#include "ddsynth/dtw.hpp"
#include "support/sawtooth.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ddsynth;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

DiffusionModel untrained(int length, int steps = 50) {
  DiffusionConfig cfg;
  cfg.length = length;
  cfg.steps = steps;
  DiffusionModel m;
  m.config = cfg;
  m.schedule = NoiseSchedule(cfg.steps, cfg.beta_start, cfg.beta_end);
  std::mt19937_64 rng(1);
  m.denoiser = Denoiser(cfg.length, cfg.embed_dim, cfg.hidden, rng);
  return m;
}

const DiffusionModel& sawtooth_model() {
  static const DiffusionModel model = [] {
    DiffusionConfig cfg;
    cfg.length = 64;
    cfg.epochs = 200;
    cfg.seed = 7;
    return train_pattern_diffusion(testing::sawtooth_family(32, 64, 3), cfg);
  }();
  return model;
}

}  // namespace

TEST_CASE("noise schedule") {
  NoiseSchedule s(50, 0.002, 0.4);
  REQUIRE(s.steps() == 50);
  CHECK(s.beta(0) > 0);
  CHECK(s.beta(49) < 1);
  for (int t = 1; t < 50; ++t) {
    CHECK(s.beta(t) > s.beta(t - 1));
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  }
  CHECK(s.alpha_bar(49) < 1e-4);
  CHECK_THROWS(NoiseSchedule(50, 0.0, 0.4));
  CHECK_THROWS(NoiseSchedule(50, 0.3, 0.2));
  CHECK_THROWS(NoiseSchedule(50, 0.1, 1.0));
  CHECK_THROWS(NoiseSchedule(0, 0.1, 0.2));
}

TEST_CASE("forward process ends near a standard normal") {
  const auto model = untrained(16);
  const int draws = 10000;
  std::mt19937_64 rng(22);
  const Eigen::VectorXd x0 = 2.0 * testing::sawtooth(16, 2).array() - 1.0;
  const Batch eps = gaussian(16, draws, rng);
  const Batch x = model.forward_noise(x0.replicate(1, draws), model.schedule.steps(), eps);
  const Eigen::VectorXd mean = x.rowwise().mean();
  const Eigen::VectorXd var = (x.colwise() - mean).rowwise().squaredNorm() / (draws - 1);
  const double mean_bound = 3.0 * std::sqrt(1.0 / draws);
  const double var_bound = 3.0 * std::sqrt(2.0 / (draws - 1));
  for (Eigen::Index i = 0; i < 16; ++i) {
    CHECK(std::abs(mean(i)) <= mean_bound);
    CHECK(std::abs(var(i) - 1.0) <= var_bound);
  }
}

TEST_CASE("one reverse step with the true noise gives the posterior mean") {
  const auto model = untrained(8);
  std::mt19937_64 rng(4);
  for (int t = 1; t <= model.schedule.steps(); ++t) {
    const Batch x0 = gaussian(8, 3, rng), eps = gaussian(8, 3, rng);
    const Batch x_t = model.forward_noise(x0, t, eps);
    const Batch a = model.reverse_mean(x_t, t, eps), b = model.posterior_mean(x_t, t, x0);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("denoiser architecture") {
  std::mt19937_64 rng(0);
  Denoiser d(64, 16, 128, rng);
  const Eigen::Index in = 2 * 64 + 16;
  CHECK(d.parameter_count() == 128 * in + 128 + 128 * 128 + 128 + 64 * 128 + 64);
  const Eigen::VectorXd theta = d.parameters();
  CHECK(theta.allFinite());
  Denoiser e(64, 16, 128, rng);
  e.set_parameters(theta);
  CHECK(e.parameters() == theta);
  const Batch out = d.predict(Batch::Zero(64, 2), {1, 50}, Batch::Zero(64, 2));
  CHECK(out.rows() == 64);
  CHECK(out.cols() == 2);
  CHECK_THROWS(d.predict(Batch::Zero(63, 1), {1}, Batch::Zero(64, 1)));
  CHECK(d.embed(3).size() == 16);
  CHECK(d.embed(3) != d.embed(4));
}

TEST_CASE("denoiser gradient matches central finite differences") {
  std::mt19937_64 rng(12);
  Denoiser d(64, 16, 128, rng);
  const Batch x = gaussian(64, 4, rng), target = gaussian(64, 4, rng);
  Batch p = gaussian(64, 4, rng).cwiseAbs().cwiseMin(1.0);
  const std::vector<int> t{1, 10, 25, 50};
  const auto model = untrained(64);
  const Eigen::VectorXd w = model.snr(t);
  Eigen::VectorXd grad;
  d.loss_gradient(x, t, p, target, grad, w);
  const Eigen::VectorXd theta = d.parameters();
  std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
  const double h = 1e-5;
  for (int k = 0; k < 10; ++k) {
    const Eigen::Index i = pick(rng);
    Eigen::VectorXd tp = theta, tm = theta;
    tp(i) += h;
    tm(i) -= h;
    d.set_parameters(tp);
    const double lp = d.loss(x, t, p, target, w);
    d.set_parameters(tm);
    const double lm = d.loss(x, t, p, target, w);
    d.set_parameters(theta);
    const double fd = (lp - lm) / (2 * h);
    const double rel = std::abs(fd - grad(i)) / std::max({std::abs(fd), std::abs(grad(i)), 1e-8});
    CAPTURE(i);
    CAPTURE(fd);
    CAPTURE(grad(i));
    CHECK(rel <= 1e-4);
  }
}

TEST_CASE("weighted clean-segment loss equals the noise-prediction loss") {
  auto model = untrained(16);
  std::mt19937_64 rng(6);
  const std::vector<int> t{1, 2, 17, 50};
  const Batch x0 = gaussian(16, 4, rng), eps = gaussian(16, 4, rng), p = gaussian(16, 4, rng).cwiseAbs();
  Batch x_t(16, 4);
  for (int j = 0; j < 4; ++j) x_t.col(j) = model.forward_noise(x0.col(j), t[static_cast<std::size_t>(j)], eps.col(j));
  const double direct = model.noise_loss(x_t, t, p, eps);
  CHECK(model.denoiser.loss(x_t, t, p, x0, model.snr(t)) == doctest::Approx(direct).epsilon(1e-9));
  Eigen::VectorXd grad;
  CHECK(model.denoiser.loss_gradient(x_t, t, p, x0, grad, model.snr(t)) == doctest::Approx(direct).epsilon(1e-9));
  CHECK(model.denoiser.loss(x_t, t, p, x0) == doctest::Approx((model.denoiser.predict(x_t, t, p) - x0).squaredNorm() / 64));
}

TEST_CASE("training is deterministic per seed") {
  DiffusionConfig cfg;
  cfg.length = 16;
  cfg.hidden = 32;
  cfg.epochs = 3;
  cfg.seed = 5;
  const auto data = testing::sawtooth_family(8, 16, 1);
  const auto a = train_pattern_diffusion(data, cfg), b = train_pattern_diffusion(data, cfg);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.denoiser.parameters() == b.denoiser.parameters());
  cfg.seed = 6;
  CHECK(train_pattern_diffusion(data, cfg).denoiser.parameters() != a.denoiser.parameters());

  CHECK_THROWS(train_pattern_diffusion({}, cfg));
  cfg.length = 17;
  CHECK_THROWS(train_pattern_diffusion(data, cfg));
}

TEST_CASE("divergent training reports the step") {
  DiffusionConfig cfg;
  cfg.length = 16;
  cfg.hidden = 16;
  cfg.epochs = 20;
  cfg.learning_rate = 1e200;
  cfg.lr_decay = 1.0;
  try {
    train_pattern_diffusion(testing::sawtooth_family(8, 16, 1), cfg);
    FAIL("expected divergence");
  } catch (const DiffusionDiverged& e) {
    CHECK(e.step() >= 1);
    CHECK(std::string(e.what()).find(std::to_string(e.step())) != std::string::npos);
  }
}

TEST_CASE("toy training loss settles") {
  const auto& model = sawtooth_model();
  const auto& trace = model.loss_trace;
  REQUIRE(trace.size() == 200);
  std::vector<double> ma;
  for (std::size_t i = 19; i < trace.size(); ++i) {
    double s = 0;
    for (std::size_t j = i - 19; j <= i; ++j) s += trace[j];
    ma.push_back(s / 20);
  }
  // ma[k] covers epochs k..k+19; the final half of training starts at epoch 100.
  for (std::size_t k = 100 - 19 + 1; k < ma.size(); ++k) {
    CAPTURE(k);
    CHECK(ma[k] <= ma[k - 1]);
  }
  CHECK(trace.back() < trace.front());
  CHECK(model.denoiser.parameters().allFinite());
}

TEST_CASE("samples resemble the sawtooth family") {
  const auto& model = sawtooth_model();
  const auto family = testing::sawtooth_family(32, 64, 3);
  double intra = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < family.size(); ++i)
    for (std::size_t j = i + 1; j < family.size(); ++j, ++pairs) intra += dtw_distance(family[i].segment, family[j].segment);
  intra /= pairs;

  const Eigen::VectorXd pattern = testing::sawtooth(64, 4);
  double sampled = 0;
  for (std::uint64_t s = 0; s < 100; ++s) sampled += dtw_distance(sample_normalized(model, pattern, s), pattern);
  sampled /= 100;
  MESSAGE("intra-family DTW " << intra << ", sample DTW " << sampled);
  CHECK(sampled <= 2 * intra);
}

TEST_CASE("sampling contracts") {
  const auto model = untrained(16, 10);
  const Eigen::VectorXd p = testing::sawtooth(16, 2);
  CHECK(sample_pattern(model, p, 12, 5.0, 9) == sample_pattern(model, p, 12, 5.0, 9));
  CHECK(sample_pattern(model, p, 12, 5.0, 9) != sample_pattern(model, p, 12, 5.0, 10));
  CHECK(sample_pattern(model, p, 12, 0.0, 9) == Eigen::VectorXd::Zero(12));
  const auto s = sample_pattern(model, p, 12, 5.0, 3);
  CHECK(s.size() == 12);
  CHECK(s.minCoeff() >= 0.0);
  CHECK(s.maxCoeff() <= 5.0);
  CHECK(sample_pattern(model, p, 20, 1.0, 3).size() == 20);
  const auto n = sample_normalized(model, p, 3);
  CHECK(n.size() == 16);
  CHECK((s - 5.0 * n.head(12)).cwiseAbs().maxCoeff() <= 1e-12);
}
