#include "ddsynth/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ddsynth {

namespace {

void check_comparable(const FeatureDistribution& p, const FeatureDistribution& q) {
  if (!(p.scope == q.scope) || p.group_width != q.group_width || p.probs.rows() != q.probs.rows() ||
      p.probs.cols() != q.probs.cols())
    throw std::invalid_argument("distributions cover different scopes ('" + p.scope.name + "' vs '" + q.scope.name + "')");
}

double kl_to_mixture(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& m) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) s += p(i) * std::log2(p(i) / m(i));
  return s;
}

std::vector<TernaryVector> encode_all(const TraceDataset& d, const FieldLayout& layout, const char* side) {
  std::vector<TernaryVector> rows;
  rows.reserve(d.packets.size());
  for (std::size_t i = 0; i < d.packets.size(); ++i) {
    try {
      rows.push_back(encode_packet(d.packets[i], layout));
    } catch (const EncodeError& e) {
      throw std::invalid_argument(std::string(side) + " packet " + std::to_string(i) + ": " + e.what());
    }
  }
  return rows;
}

Protocol dominant_protocol(const std::vector<TernaryVector>& rows, const FieldLayout& layout) {
  std::array<std::size_t, 3> counts{};
  for (const auto& r : rows)
    if (auto p = infer_protocol(r, layout)) ++counts[static_cast<std::size_t>(*p)];
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[best]) best = i;
  return static_cast<Protocol>(best);
}

MetricReport compare(const std::vector<TernaryVector>& real, const std::vector<TernaryVector>& synth,
                     const FieldLayout& layout, int g) {
  if (real.empty() || synth.empty()) throw std::invalid_argument("evaluation needs non-empty real and synthetic sets");
  MetricReport r;
  r.group_width = g;
  r.real_samples = real.size();
  r.synth_samples = synth.size();
  for (const auto& scope : {FeatureScope::all_features(), FeatureScope::protocol(dominant_protocol(real, layout), layout)}) {
    const auto p = feature_distribution(real, scope, g), q = feature_distribution(synth, scope, g);
    r.scopes.push_back({scope.name, jsd(p, q), tvd(p, q), hellinger(p, q)});
  }
  return r;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

FeatureScope FeatureScope::all_features() { return {"all_features", {0, kNprintWidth}}; }

FeatureScope FeatureScope::protocol(Protocol p, const FieldLayout& layout) {
  return {"protocol:" + std::string(to_string(p)), layout.protocol_span(p)};
}

int ternary_state(const std::int8_t* values, int width) {
  int s = 0;
  for (int i = 0; i < width; ++i) s = 3 * s + values[i] + 1;
  return s;
}

FeatureDistribution feature_distribution(const std::vector<TernaryVector>& rows, const FeatureScope& scope, int g) {
  if (rows.empty()) throw std::invalid_argument("feature distribution of an empty packet set");
  if (g < 1 || g > 12) throw std::invalid_argument("group width must be in [1, 12]");
  const int width = scope.columns.size();
  if (width <= 0 || scope.columns.begin < 0 || scope.columns.end > kNprintWidth || width % g != 0)
    throw std::invalid_argument("scope '" + scope.name + "' is not a whole number of groups of width " + std::to_string(g));
  int states = 1;
  for (int i = 0; i < g; ++i) states *= 3;
  FeatureDistribution d;
  d.scope = scope;
  d.group_width = g;
  d.samples = rows.size();
  d.probs = Eigen::MatrixXd::Zero(states, width / g);
  for (const auto& r : rows)
    for (int k = 0; k < width / g; ++k) d.probs(ternary_state(r.data() + scope.columns.begin + k * g, g), k) += 1.0;
  d.probs /= static_cast<double>(rows.size());
  return d;
}

Eigen::VectorXd column_jsd(const FeatureDistribution& p, const FeatureDistribution& q) {
  check_comparable(p, q);
  Eigen::VectorXd out(p.groups());
  for (Eigen::Index k = 0; k < p.groups(); ++k) {
    const Eigen::VectorXd m = 0.5 * (p.probs.col(k) + q.probs.col(k));
    const double v = 0.5 * kl_to_mixture(p.probs.col(k), m) + 0.5 * kl_to_mixture(q.probs.col(k), m);
    out(k) = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

Eigen::VectorXd column_tvd(const FeatureDistribution& p, const FeatureDistribution& q) {
  check_comparable(p, q);
  return (0.5 * (p.probs - q.probs).cwiseAbs().colwise().sum()).transpose().cwiseMin(1.0);
}

Eigen::VectorXd column_hellinger(const FeatureDistribution& p, const FeatureDistribution& q) {
  check_comparable(p, q);
  const Eigen::MatrixXd diff = p.probs.cwiseSqrt() - q.probs.cwiseSqrt();
  return (diff.colwise().norm() / std::sqrt(2.0)).transpose().cwiseMin(1.0);
}

double jsd(const FeatureDistribution& p, const FeatureDistribution& q) { return column_jsd(p, q).mean(); }
double tvd(const FeatureDistribution& p, const FeatureDistribution& q) { return column_tvd(p, q).mean(); }
double hellinger(const FeatureDistribution& p, const FeatureDistribution& q) { return column_hellinger(p, q).mean(); }

double row_validity(const std::vector<TernaryVector>& rows, const FieldLayout& layout) {
  if (rows.empty()) return 0.0;
  std::size_t valid = 0;
  for (const auto& r : rows) {
    const auto d = decode_vector(r, layout);
    valid += d.decodable() && validate_packet(*d.packet).pass();
  }
  return static_cast<double>(valid) / static_cast<double>(rows.size());
}

MetricReport evaluate(const TraceDataset& real, const TraceDataset& synth, const FieldLayout& layout, int g) {
  if (real.packets.empty() || synth.packets.empty())
    throw std::invalid_argument("evaluation needs non-empty real and synthetic sets");
  auto r = compare(encode_all(real, layout, "real"), encode_all(synth, layout, "synthetic"), layout, g);
  auto rate = [](const TraceDataset& d) {
    std::size_t n = 0;
    for (const auto& p : d.packets) n += validate_packet(p).pass();
    return static_cast<double>(n) / static_cast<double>(d.packets.size());
  };
  r.validity = rate(synth);
  r.real_validity = rate(real);
  return r;
}

MetricReport evaluate(const std::vector<TernaryVector>& real, const std::vector<TernaryVector>& synth,
                      const FieldLayout& layout, int g) {
  auto r = compare(real, synth, layout, g);
  r.validity = row_validity(synth, layout);
  r.real_validity = row_validity(real, layout);
  return r;
}

const ScopeMetrics& MetricReport::scope(const std::string& name) const {
  for (const auto& s : scopes)
    if (s.scope == name) return s;
  throw std::out_of_range("report has no scope '" + name + "'");
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["group_width"] = group_width;
  j["real_samples"] = real_samples;
  j["synth_samples"] = synth_samples;
  j["validity"] = validity;
  j["real_validity"] = real_validity;
  j["scopes"] = nlohmann::ordered_json::array();
  for (const auto& s : scopes)
    j["scopes"].push_back({{"scope", s.scope}, {"jsd", s.jsd}, {"tvd", s.tvd}, {"hellinger", s.hellinger}});
  return j.dump(2) + "\n";
}

std::string MetricReport::to_text() const {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-16s %8s %8s %8s %8s\n", "scope", "JSD", "TVD", "HD", "Valid");
  out << line;
  for (const auto& s : scopes) {
    std::snprintf(line, sizeof line, "%-16s %8s %8s %8s %8s\n", s.scope.c_str(), fixed(s.jsd).c_str(),
                  fixed(s.tvd).c_str(), fixed(s.hellinger).c_str(), fixed(validity).c_str());
    out << line;
  }
  out << "real packets " << real_samples << ", synthetic packets " << synth_samples << ", real validity "
      << fixed(real_validity) << ", group width " << group_width << "\n";
  return out.str();
}

void write_distribution_csv(const FeatureDistribution& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# scope " << d.scope.name << ' ' << d.scope.columns.begin << ' ' << d.scope.columns.end << ' '
      << d.group_width << ' ' << d.samples << '\n';
  out << "group,state,probability\n";
  char buf[64];
  for (Eigen::Index k = 0; k < d.groups(); ++k)
    for (Eigen::Index s = 0; s < d.states(); ++s)
      if (d.probs(s, k) != 0.0) {
        std::snprintf(buf, sizeof buf, "%.17g", d.probs(s, k));
        out << k << ',' << s << ',' << buf << '\n';
      }
}

FeatureDistribution read_distribution_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string tag, word;
  FeatureDistribution d;
  in >> tag >> word >> d.scope.name >> d.scope.columns.begin >> d.scope.columns.end >> d.group_width >> d.samples;
  if (tag != "#" || word != "scope" || !in) throw std::runtime_error(path.string() + ": missing scope line");
  int states = 1;
  for (int i = 0; i < d.group_width; ++i) states *= 3;
  d.probs = Eigen::MatrixXd::Zero(states, d.scope.columns.size() / d.group_width);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    long k = 0, s = 0;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "%ld,%ld,%lf", &k, &s, &v) != 3 || k < 0 || k >= d.groups() || s < 0 || s >= d.states())
      throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    d.probs(s, k) = v;
  }
  return d;
}

}  // namespace ddsynth
