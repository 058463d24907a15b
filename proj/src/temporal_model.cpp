#include "ddsynth/temporal_model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ddsynth {

StateTransitionModel fit_state_model(const std::vector<std::vector<StateTriplet>>& chains, int pattern_count) {
  bool any = false;
  for (const auto& c : chains) any |= !c.empty();
  if (!any) throw std::invalid_argument("cannot fit a state model on empty chains");
  if (pattern_count < 1) throw std::invalid_argument("state model needs at least one pattern");
  StateTransitionModel m;
  m.chain = MarkovChain(static_cast<std::size_t>(pattern_count));
  m.by_pattern.resize(static_cast<std::size_t>(pattern_count));
  for (const auto& c : chains) {
    if (c.empty()) continue;
    m.initial.push_back(c.front());
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i].pattern < 0 || c[i].pattern >= pattern_count)
        throw std::invalid_argument("triplet references unknown pattern " + std::to_string(c[i].pattern));
      m.by_pattern[static_cast<std::size_t>(c[i].pattern)].emplace_back(c[i].alpha, c[i].beta);
      if (i == 0) continue;
      m.chain.observe(static_cast<std::size_t>(c[i - 1].pattern), static_cast<std::size_t>(c[i].pattern));
      m.conditional[{c[i - 1].pattern, c[i].pattern}].emplace_back(c[i].alpha, c[i].beta);
    }
  }
  return m;
}

StateTriplet next_state(const StateTransitionModel& model, const StateTriplet& current, std::mt19937_64& rng) {
  const int next = static_cast<int>(model.chain.next(static_cast<std::size_t>(current.pattern), rng));
  const std::vector<std::pair<int, double>>* pool = nullptr;
  if (auto it = model.conditional.find({current.pattern, next}); it != model.conditional.end()) pool = &it->second;
  else if (!model.by_pattern[static_cast<std::size_t>(next)].empty()) pool = &model.by_pattern[static_cast<std::size_t>(next)];
  if (!pool) return {next, current.alpha, current.beta};
  const auto& [alpha, beta] = (*pool)[std::uniform_int_distribution<std::size_t>(0, pool->size() - 1)(rng)];
  return {next, alpha, beta};
}

std::vector<StateTriplet> evolve_states(const StateTransitionModel& model, const StateTriplet& start, std::size_t length,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<StateTriplet> out;
  if (length == 0) return out;
  out.push_back(start);
  while (out.size() < length) out.push_back(next_state(model, out.back(), rng));
  return out;
}

std::vector<DiffusionSample> diffusion_samples(const std::vector<Eigen::VectorXd>& series,
                                               const std::vector<std::vector<StateTriplet>>& chains,
                                               const PatternLibrary& library, int l_max) {
  std::vector<DiffusionSample> out;
  for (std::size_t s = 0; s < series.size(); ++s) {
    Eigen::Index pos = 0;
    for (const auto& t : chains[s]) {
      const Eigen::Index len = std::min<Eigen::Index>(t.alpha, l_max);
      const auto w = series[s].segment(pos, len);
      pos += t.alpha;
      if (t.beta <= 0.0 || value_span(w) <= 0.0) continue;
      const auto& p = library[t.pattern].values;
      DiffusionSample d;
      d.pattern = p;
      d.segment.resize(l_max);
      d.segment.head(len) = minmax_normalize(w);
      if (len < l_max) d.segment.tail(l_max - len) = p.tail(l_max - len);
      out.push_back(std::move(d));
    }
  }
  if (out.empty())
    for (const auto& p : library.patterns) out.push_back({p.values, p.values});
  return out;
}

ClusterTemporalModel train_cluster_model(const std::vector<TimeSeries>& members, int cluster,
                                         const TemporalTrainConfig& cfg) {
  if (members.empty()) throw std::invalid_argument("cluster " + std::to_string(cluster) + " has no series");
  ClusterTemporalModel m;
  m.cluster = cluster;
  m.bin_width = members.front().bin_width;
  std::vector<Eigen::VectorXd> series;
  for (const auto& s : members) {
    if (s.size() >= cfg.segment.l_min) {
      series.push_back(s.values);
    } else {
      // Short episodes are edge-padded so they still contribute a segment.
      Eigen::VectorXd padded(cfg.segment.l_min);
      padded.head(s.size()) = s.values;
      padded.tail(cfg.segment.l_min - s.size()).setConstant(s.values(s.size() - 1));
      series.push_back(padded);
    }
    m.initial_levels.push_back(s.values(0));
  }
  m.segment = cfg.segment;
  if (m.segment.match_threshold <= 0.0)
    m.segment.match_threshold = calibrate_threshold(series, cfg.segment.l_max, cfg.threshold_quantile);
  auto corpus = segment_corpus(series, m.segment);
  m.library = std::move(corpus.library);
  m.states = fit_state_model(corpus.chains, m.library.size());
  auto dcfg = cfg.diffusion;
  dcfg.length = m.segment.l_max;
  m.diffusion = train_pattern_diffusion(diffusion_samples(series, corpus.chains, m.library, m.segment.l_max), dcfg);
  return m;
}

TimeSeries generate_series(const ClusterTemporalModel& model, Eigen::Index target_len, std::uint64_t seed) {
  if (target_len < 1) throw std::invalid_argument("target length must be positive");
  std::mt19937_64 rng(seed);
  StateTriplet state{0, model.segment.l_max, 1.0};
  if (!model.states.initial.empty())
    state = model.states.initial[std::uniform_int_distribution<std::size_t>(0, model.states.initial.size() - 1)(rng)];
  double level = 0.0;
  if (!model.initial_levels.empty())
    level = model.initial_levels[std::uniform_int_distribution<std::size_t>(0, model.initial_levels.size() - 1)(rng)];

  std::vector<double> values;
  bool first = true;
  while (static_cast<Eigen::Index>(values.size()) < target_len) {
    const auto seg_seed = rng();
    const Eigen::VectorXd seg = sample_pattern(model.diffusion, model.library[state.pattern].values,
                                               std::max(1, state.alpha), state.beta, seg_seed);
    const double anchor = first ? level : values.back();
    const double offset = anchor - seg(0);
    for (Eigen::Index i = 0; i < seg.size(); ++i) values.push_back(seg(i) + offset);
    first = false;
    state = next_state(model.states, state, rng);
  }
  TimeSeries out;
  out.bin_width = model.bin_width;
  out.values = Eigen::Map<Eigen::VectorXd>(values.data(), target_len).cwiseMax(0.0);
  out.duration = static_cast<double>(target_len) * model.bin_width;
  return out;
}

}  // namespace ddsynth
