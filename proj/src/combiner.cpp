#include "ddsynth/combiner.hpp"

#include "ddsynth/hash.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

namespace ddsynth {

namespace {

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

}  // namespace

std::string to_string(CombineMethod m) {
  switch (m) {
    case CombineMethod::Random: return "random";
    case CombineMethod::Markov: return "markov";
    case CombineMethod::Imitative: return "imitative";
  }
  return "imitative";
}

CombineMethod combine_method_from_string(const std::string& s) {
  if (s == "random") return CombineMethod::Random;
  if (s == "markov") return CombineMethod::Markov;
  if (s == "imitative") return CombineMethod::Imitative;
  throw std::invalid_argument("unknown combination method '" + s + "' (expected random, markov or imitative)");
}

MetadataChain combine_random(const MetadataChain& m, const CombinationConfig& cfg) {
  if (m.empty()) throw std::invalid_argument("random combination needs a non-empty source chain");
  if (cfg.counts < 1) throw std::invalid_argument("counts must be at least 1");
  std::set<std::string> attacks;
  std::set<int> clusters;
  std::vector<double> durations;
  for (const auto& t : m) {
    attacks.insert(t.attack);
    clusters.insert(t.cluster);
    durations.push_back(t.duration);
  }
  const double longest = *std::max_element(durations.begin(), durations.end());
  if (!(cfg.total_time > longest))
    throw std::invalid_argument("total time " + std::to_string(cfg.total_time) + " must exceed the longest duration " +
                                std::to_string(longest));
  const std::vector<std::string> attack_list(attacks.begin(), attacks.end());
  const std::vector<int> cluster_list(clusters.begin(), clusters.end());
  std::mt19937_64 rng(cfg.seed);
  MetadataChain out;
  for (int i = 0; i < cfg.counts; ++i) {
    Metadata t;
    t.attack = pick(attack_list, rng);
    t.cluster = pick(cluster_list, rng);
    t.duration = pick(durations, rng);
    t.start = std::uniform_real_distribution<double>(0.0, cfg.total_time - t.duration)(rng);
    out.push_back(std::move(t));
  }
  sort_chain(out);
  return out;
}

std::size_t MetadataMarkov::state_of(const Metadata& m) const {
  const auto key = std::make_pair(m.attack, m.cluster);
  const auto it = std::lower_bound(states.begin(), states.end(), key);
  if (it == states.end() || *it != key)
    throw std::invalid_argument("unknown state (" + m.attack + ", " + std::to_string(m.cluster) + ")");
  return static_cast<std::size_t>(it - states.begin());
}

MetadataMarkov fit_metadata_markov(const MetadataChain& m) {
  if (m.size() < 2) throw std::invalid_argument("markov combination needs at least two tuples, got " + std::to_string(m.size()));
  MetadataMarkov out;
  std::set<std::pair<std::string, int>> states;
  for (const auto& t : m) states.emplace(t.attack, t.cluster);
  out.states.assign(states.begin(), states.end());
  out.chain = MarkovChain(out.states.size());
  out.durations.resize(out.states.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.durations[out.state_of(m[i])].push_back(m[i].duration);
    if (i == 0) continue;
    out.chain.observe(out.state_of(m[i - 1]), out.state_of(m[i]));
    out.gaps.push_back(m[i].start - m[i - 1].start);
  }
  return out;
}

MetadataChain combine_markov(const MetadataChain& m, const CombinationConfig& cfg) {
  if (cfg.counts < 1) throw std::invalid_argument("counts must be at least 1");
  const auto model = fit_metadata_markov(m);
  std::mt19937_64 rng(cfg.seed);
  MetadataChain out;
  std::size_t state = model.state_of(m.front());
  double start = m.front().start;
  for (int i = 0; i < cfg.counts; ++i) {
    if (i > 0) {
      state = model.chain.next(state, rng);
      start += pick(model.gaps, rng);
    }
    Metadata t;
    t.attack = model.states[state].first;
    t.cluster = model.states[state].second;
    t.start = start;
    t.duration = pick(model.durations[state], rng);
    out.push_back(std::move(t));
  }
  return out;
}

MetadataChain combine_imitative(const MetadataChain& m) { return m; }

MetadataChain combine(const MetadataChain& m, const CombinationConfig& cfg) {
  switch (cfg.method) {
    case CombineMethod::Random: return combine_random(m, cfg);
    case CombineMethod::Markov: return combine_markov(m, cfg);
    case CombineMethod::Imitative: return combine_imitative(m);
  }
  return combine_imitative(m);
}

std::vector<double> series_to_timestamps(const TimeSeries& s, double start, double duration, std::uint64_t seed) {
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  if (s.size() == 0) return {};
  const double w = duration / static_cast<double>(s.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out;
  for (Eigen::Index b = 0; b < s.size(); ++b) {
    const double c = std::nearbyint(std::max(0.0, s.values(b)));
    const double lo = start + static_cast<double>(b) * w;
    for (double k = 0; k < c; ++k) {
      double t = lo + u(rng) * w;
      // Keep every timestamp inside its own bin despite rounding.
      while (t > lo && std::floor((t - start) / w) > static_cast<double>(b)) t = std::nextafter(t, lo);
      while (std::floor((t - start) / w) < static_cast<double>(b)) t = std::nextafter(t, lo + w);
      out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

TraceDataset assemble_trace(const MetadataChain& chain, const AssemblySources& sources, std::uint64_t seed) {
  TraceDataset out;
  out.provenance = "synthetic";
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& tuple = chain[i];
    const auto series_it = sources.series.find(tuple.cluster);
    if (series_it == sources.series.end())
      throw std::invalid_argument("no series generator for cluster " + std::to_string(tuple.cluster));
    const auto packet_it = sources.packets.find(tuple.attack);
    if (packet_it == sources.packets.end())
      throw std::invalid_argument("no packet source for attack type '" + tuple.attack + "'");
    const auto series = series_it->second(tuple, derive_seed(seed, 3 * i));
    const auto ts = series_to_timestamps(series, tuple.start, tuple.duration, derive_seed(seed, 3 * i + 1));
    auto packets = packet_it->second(ts.size(), derive_seed(seed, 3 * i + 2));
    if (packets.size() != ts.size())
      throw std::runtime_error("packet source for '" + tuple.attack + "' returned " + std::to_string(packets.size()) +
                               " packets, expected " + std::to_string(ts.size()));
    for (std::size_t k = 0; k < ts.size(); ++k) {
      packets[k].timestamp = ts[k];
      packets[k].label = tuple.attack;
      out.packets.push_back(std::move(packets[k]));
    }
  }
  std::stable_sort(out.packets.begin(), out.packets.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });
  return out;
}

}  // namespace ddsynth
