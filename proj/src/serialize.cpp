#include "ddsynth/serialize.hpp"

#include <nlohmann/json.hpp>

#include <sstream>
#include <stdexcept>

namespace ddsynth {

namespace {

using json = nlohmann::ordered_json;

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json series_json(const TimeSeries& s) {
  return {{"attack", s.attack}, {"bin_width", s.bin_width}, {"origin", s.origin}, {"duration", s.duration},
          {"values", to_vec(s.values)}};
}

TimeSeries series_of(const json& j) {
  TimeSeries s;
  s.attack = j.at("attack").get<std::string>();
  s.bin_width = j.at("bin_width").get<double>();
  s.origin = j.at("origin").get<double>();
  s.duration = j.at("duration").get<double>();
  s.values = from_vec(j.at("values").get<std::vector<double>>());
  return s;
}

json diffusion_config_json(const DiffusionConfig& c) {
  return {{"steps", c.steps},
          {"beta_start", c.beta_start},
          {"beta_end", c.beta_end},
          {"length", c.length},
          {"embed_dim", c.embed_dim},
          {"hidden", c.hidden},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"draws_per_segment", c.draws_per_segment},
          {"learning_rate", c.learning_rate},
          {"lr_decay", c.lr_decay},
          {"ema_decay", c.ema_decay},
          {"seed", c.seed}};
}

DiffusionConfig diffusion_config_of(const json& j) {
  DiffusionConfig c;
  c.steps = j.at("steps").get<int>();
  c.beta_start = j.at("beta_start").get<double>();
  c.beta_end = j.at("beta_end").get<double>();
  c.length = j.at("length").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.draws_per_segment = j.at("draws_per_segment").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lr_decay = j.at("lr_decay").get<double>();
  c.ema_decay = j.at("ema_decay").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json triplet_json(const StateTriplet& t) { return json::array({t.pattern, t.alpha, t.beta}); }
StateTriplet triplet_of(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<double>()}; }

json sizes_json(const std::vector<std::pair<int, double>>& v) {
  json a = json::array();
  for (const auto& [alpha, beta] : v) a.push_back(json::array({alpha, beta}));
  return a;
}

std::vector<std::pair<int, double>> sizes_of(const json& j) {
  std::vector<std::pair<int, double>> out;
  for (const auto& e : j) out.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
  return out;
}

}  // namespace

std::string chain_to_jsonl(const MetadataChain& chain) {
  std::string out;
  for (const auto& m : chain)
    out += json{{"attack", m.attack}, {"cluster", m.cluster}, {"start", m.start}, {"duration", m.duration}}.dump() + "\n";
  return out;
}

MetadataChain chain_from_jsonl(const std::string& text) {
  MetadataChain chain;
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      chain.push_back({j.at("attack").get<std::string>(), j.at("cluster").get<int>(), j.at("start").get<double>(),
                       j.at("duration").get<double>()});
    } catch (const std::exception& e) {
      throw std::runtime_error("metadata chain line " + std::to_string(n) + ": " + e.what());
    }
  }
  return chain;
}

std::string series_to_json(const TimeSeries& s) { return series_json(s).dump(); }
TimeSeries series_from_json(const std::string& text) { return series_of(json::parse(text)); }

std::string temporal_model_to_json(const ClusterTemporalModel& m) {
  json j;
  j["cluster"] = m.cluster;
  j["bin_width"] = m.bin_width;
  j["segment"] = {{"l_min", m.segment.l_min},
                  {"l_max", m.segment.l_max},
                  {"match_threshold", m.segment.match_threshold},
                  {"min_support", m.segment.min_support},
                  {"grow_library", m.segment.grow_library}};
  j["patterns"] = json::array();
  for (const auto& p : m.library.patterns) j["patterns"].push_back({{"support", p.support}, {"values", to_vec(p.values)}});

  json states;
  const auto& counts = m.states.chain.counts();
  states["counts"] = json::array();
  for (Eigen::Index r = 0; r < counts.rows(); ++r) states["counts"].push_back(to_vec(counts.row(r).transpose()));
  states["conditional"] = json::array();
  for (const auto& [key, pool] : m.states.conditional)
    states["conditional"].push_back({{"from", key.first}, {"to", key.second}, {"sizes", sizes_json(pool)}});
  states["by_pattern"] = json::array();
  for (const auto& pool : m.states.by_pattern) states["by_pattern"].push_back(sizes_json(pool));
  states["initial"] = json::array();
  for (const auto& t : m.states.initial) states["initial"].push_back(triplet_json(t));
  j["states"] = std::move(states);

  j["diffusion"] = {{"config", diffusion_config_json(m.diffusion.config)},
                    {"loss_trace", m.diffusion.loss_trace},
                    {"parameters", to_vec(m.diffusion.denoiser.parameters())}};
  j["initial_levels"] = m.initial_levels;
  return j.dump();
}

ClusterTemporalModel temporal_model_from_json(const std::string& text) {
  const auto j = json::parse(text);
  ClusterTemporalModel m;
  m.cluster = j.at("cluster").get<int>();
  m.bin_width = j.at("bin_width").get<double>();
  const auto& seg = j.at("segment");
  m.segment.l_min = seg.at("l_min").get<int>();
  m.segment.l_max = seg.at("l_max").get<int>();
  m.segment.match_threshold = seg.at("match_threshold").get<double>();
  m.segment.min_support = seg.at("min_support").get<int>();
  m.segment.grow_library = seg.at("grow_library").get<bool>();
  for (const auto& p : j.at("patterns")) m.library.patterns.push_back({from_vec(p.at("values").get<std::vector<double>>()), p.at("support").get<int>()});

  const auto& states = j.at("states");
  const auto n = static_cast<Eigen::Index>(states.at("counts").size());
  Eigen::MatrixXd counts(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = states.at("counts").at(static_cast<std::size_t>(r)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != n) throw std::invalid_argument("state transition counts are not square");
    counts.row(r) = from_vec(row).transpose();
  }
  m.states.chain = MarkovChain(counts);
  for (const auto& c : states.at("conditional"))
    m.states.conditional[{c.at("from").get<int>(), c.at("to").get<int>()}] = sizes_of(c.at("sizes"));
  for (const auto& pool : states.at("by_pattern")) m.states.by_pattern.push_back(sizes_of(pool));
  for (const auto& t : states.at("initial")) m.states.initial.push_back(triplet_of(t));

  const auto& diff = j.at("diffusion");
  m.diffusion.config = diffusion_config_of(diff.at("config"));
  const auto& cfg = m.diffusion.config;
  m.diffusion.schedule = NoiseSchedule(cfg.steps, cfg.beta_start, cfg.beta_end);
  std::mt19937_64 rng(0);
  m.diffusion.denoiser = Denoiser(cfg.length, cfg.embed_dim, cfg.hidden, rng);
  m.diffusion.denoiser.set_parameters(from_vec(diff.at("parameters").get<std::vector<double>>()));
  m.diffusion.loss_trace = diff.at("loss_trace").get<std::vector<double>>();
  m.initial_levels = j.at("initial_levels").get<std::vector<double>>();
  return m;
}

}  // namespace ddsynth
