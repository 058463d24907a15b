#include "ddsynth/markov.hpp"
#include "ddsynth/segmentation.hpp"
#include "ddsynth/temporal_model.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace ddsynth;

namespace {

std::vector<StateTriplet> alternating(int n) {
  std::vector<StateTriplet> c;
  for (int i = 0; i < n; ++i) c.push_back({i % 2, 20 + i % 2, 5.0 + i % 2});
  return c;
}

/// Series made of rising and falling ramps of length 32 in Markov order, each with its own magnitude.
std::vector<TimeSeries> two_pattern_corpus(std::uint64_t seed, int series = 8, int segments = 10) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(20.0, 60.0);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::bernoulli_distribution stay(0.3);
  std::vector<TimeSeries> out;
  for (int s = 0; s < series; ++s) {
    std::vector<double> v;
    double level = 100.0;
    int pattern = static_cast<int>(rng() % 2);
    for (int k = 0; k < segments; ++k) {
      const double beta = mag(rng);
      for (int i = 0; i < 32; ++i) {
        const double x = static_cast<double>(i) / 31;
        v.push_back(level + (pattern == 0 ? x : 1.0 - x) * beta - (pattern == 0 ? 0.0 : beta) + noise(rng));
      }
      level = v.back();
      if (!stay(rng)) pattern = 1 - pattern;
    }
    TimeSeries t;
    t.values = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).cwiseMax(0.0);
    t.duration = static_cast<double>(v.size());
    out.push_back(t);
  }
  return out;
}

TemporalTrainConfig small_config() {
  TemporalTrainConfig cfg;
  cfg.segment = {.l_min = 16, .l_max = 32, .match_threshold = 0.0, .min_support = 3};
  cfg.diffusion.seed = 3;
  return cfg;
}

const ClusterTemporalModel& planted_model() {
  static const ClusterTemporalModel model = train_cluster_model(two_pattern_corpus(1), 0, small_config());
  return model;
}

}  // namespace

TEST_CASE("add-one smoothing on an alternating chain") {
  auto m = fit_state_model({alternating(101)}, 2);
  const Eigen::MatrixXd P = m.chain.transition_matrix();
  CHECK(m.chain.counts()(0, 1) == 50);
  CHECK(P(0, 1) == doctest::Approx(51.0 / 52.0));
  CHECK(P(0, 1) >= 0.97);
  CHECK(P(1, 0) >= 0.97);
  CHECK((P.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
  CHECK(m.initial.size() == 1);
  CHECK(m.pattern_count() == 2);
}

TEST_CASE("a single-state model repeats its state") {
  std::vector<StateTriplet> chain(10, StateTriplet{0, 24, 7.5});
  auto m = fit_state_model({chain}, 1);
  auto out = evolve_states(m, chain.front(), 50, 9);
  REQUIRE(out.size() == 50);
  for (const auto& t : out) CHECK(t == chain.front());
}

TEST_CASE("sampled chains follow the fitted transition matrix") {
  std::mt19937_64 rng(4);
  std::vector<StateTriplet> chain;
  int state = 0;
  for (int i = 0; i < 300; ++i) {
    chain.push_back({state, 16 + static_cast<int>(rng() % 10), static_cast<double>(rng() % 100)});
    state = static_cast<int>(rng() % 3 == 0 ? (state + 1) % 3 : rng() % 3);
  }
  auto m = fit_state_model({chain}, 3);
  auto out = evolve_states(m, chain.front(), 10000, 17);
  std::vector<std::size_t> ids;
  for (const auto& t : out) ids.push_back(static_cast<std::size_t>(t.pattern));
  const Eigen::MatrixXd emp = empirical_transitions(ids, 3);
  CHECK((emp - m.chain.transition_matrix()).cwiseAbs().maxCoeff() <= 0.05);

  for (std::size_t i = 1; i < out.size(); ++i) {
    const auto& pool = m.conditional.at({out[i - 1].pattern, out[i].pattern});
    const bool found = std::find(pool.begin(), pool.end(), std::make_pair(out[i].alpha, out[i].beta)) != pool.end();
    CHECK(found);
    if (!found) break;
  }
  CHECK(evolve_states(m, chain.front(), 100, 5) == evolve_states(m, chain.front(), 100, 5));
}

TEST_CASE("unseen transitions fall back to the next pattern's sizes") {
  auto m = fit_state_model({{{0, 16, 1.0}, {0, 17, 2.0}}, {{1, 30, 9.0}}}, 3);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto next = next_state(m, {0, 16, 1.0}, rng);
    if (next.pattern == 1) CHECK(next.alpha == 30);
    if (next.pattern == 2) CHECK(next.alpha == 16);
  }
}

TEST_CASE("state model errors") {
  CHECK_THROWS(fit_state_model({}, 2));
  CHECK_THROWS(fit_state_model({{}}, 2));
  CHECK_THROWS(fit_state_model({{{5, 16, 1.0}}}, 2));
}

TEST_CASE("Markov chain sampling") {
  MarkovChain c(2);
  c.observe_sequence({0, 1, 0, 1, 0});
  std::mt19937_64 rng(2);
  auto s = c.sample(0, 20, rng);
  REQUIRE(s.size() == 20);
  CHECK(s.front() == 0);
  CHECK(c.sample(0, 0, rng).empty());
}

TEST_CASE("generated series respect length and clamp") {
  const auto& model = planted_model();
  const auto short_series = generate_series(model, 10, 1);
  CHECK(short_series.size() == 10);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = generate_series(model, 500, seed);
    REQUIRE(s.size() == 500);
    CHECK(s.values.minCoeff() >= 0.0);
    CHECK(s.values.allFinite());
    CHECK(s.duration == doctest::Approx(500 * model.bin_width));
  }
  CHECK(generate_series(model, 200, 4).values == generate_series(model, 200, 4).values);
  CHECK_THROWS(generate_series(model, 0, 4));
}

TEST_CASE("generated series are made of the learned patterns") {
  const auto& model = planted_model();
  CHECK(model.library.size() >= 2);
  SegmentConfig frozen = model.segment;
  frozen.grow_library = false;
  int matched = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = generate_series(model, 320, seed);
    const auto seg = segment_series(s.values, frozen, model.library);
    for (bool m : seg.matched) matched += m, ++total;
  }
  MESSAGE("matched " << matched << " of " << total << " windows, threshold " << model.segment.match_threshold);
  CHECK(static_cast<double>(matched) / total >= 0.8);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  Eigen::VectorXd noise(320);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = u(rng);
  const auto contrast = segment_series(noise, frozen, model.library);
  const auto hits = std::count(contrast.matched.begin(), contrast.matched.end(), true);
  CHECK(static_cast<double>(hits) / static_cast<double>(contrast.matched.size()) < 0.5);
}

TEST_CASE("short training series are padded") {
  TimeSeries tiny;
  tiny.values = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
  auto cfg = small_config();
  cfg.diffusion.epochs = 2;
  cfg.diffusion.hidden = 16;
  auto m = train_cluster_model({tiny}, 4, cfg);
  CHECK(m.cluster == 4);
  CHECK(m.library.size() >= 1);
  CHECK(generate_series(m, 40, 1).size() == 40);
  CHECK_THROWS(train_cluster_model({}, 0, cfg));
}
