#include "ddsynth/surrogate.hpp"

#include "ddsynth/hash.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <random>
#include <stdexcept>

namespace ddsynth {

namespace {

int slot(std::int8_t v) { return v + 1; }

}  // namespace

std::string to_string(const SurrogateCategory& c) { return std::string(to_string(c.protocol)) + "/" + c.label; }

const SurrogateColumns& SurrogateModel::at(const SurrogateCategory& c) const {
  const auto it = categories.find(c);
  if (it == categories.end()) throw std::out_of_range("surrogate has no category " + to_string(c));
  return it->second;
}

SurrogateColumns::Mask structural_mask(Protocol p, const FieldLayout& layout) {
  SurrogateColumns::Mask mask = SurrogateColumns::Mask::Constant(true);
  const auto ip = layout.span(Region::Ipv4), l4 = layout.protocol_span(p);
  mask.segment(ip.begin, ip.size()).setConstant(false);
  mask.segment(l4.begin, l4.size()).setConstant(false);
  for (const char* name : {"ipv4.version", "ipv4.ihl", "ipv4.proto"}) {
    const auto& f = layout.field(name);
    mask.segment(f.begin, f.width).setConstant(true);
  }
  return mask;
}

std::vector<ColumnSpan> rule_fields(Protocol p, const FieldLayout& layout) {
  auto span_of = [&](const char* first, const char* last) {
    const auto& a = layout.field(first);
    const auto& b = layout.field(last);
    return ColumnSpan{a.begin, b.begin + b.width};
  };
  std::vector<ColumnSpan> out{span_of("ipv4.total_length", "ipv4.total_length"), span_of("ipv4.flags", "ipv4.frag_offset")};
  switch (p) {
    case Protocol::TCP: out.push_back(span_of("tcp.data_offset", "tcp.flags")); break;
    case Protocol::UDP: out.push_back(span_of("udp.length", "udp.length")); break;
    case Protocol::ICMP: out.push_back(span_of("icmp.type", "icmp.type")); break;
  }
  return out;
}

SurrogateColumns fit_columns(const std::vector<TernaryVector>& rows, Protocol protocol, const FieldLayout& layout) {
  if (rows.empty()) throw std::invalid_argument("surrogate category needs at least one packet");
  Eigen::Matrix<double, kNprintWidth, 3> counts = Eigen::Matrix<double, kNprintWidth, 3>::Zero();
  for (const auto& r : rows)
    for (int c = 0; c < kNprintWidth; ++c) counts(c, slot(r(c))) += 1.0;

  SurrogateColumns m;
  m.support = rows.size();
  m.pinned = structural_mask(protocol, layout);
  for (int c = 0; c < kNprintWidth; ++c) {
    Eigen::Index best = 0;
    counts.row(c).maxCoeff(&best);
    m.modal(c) = static_cast<std::int8_t>(best - 1);
    const auto observed = (counts.row(c).array() > 0).count();
    if (observed <= 1) m.pinned(c) = true;
    if (m.pinned(c)) {
      m.probs(c, best) = 1.0;
      continue;
    }
    Eigen::RowVector3d smoothed = counts.row(c).array() + 1.0;
    if (counts(c, 0) == 0.0) smoothed(0) = 0.0;
    m.probs.row(c) = smoothed / smoothed.sum();
  }
  for (const auto& span : rule_fields(protocol, layout)) {
    if (m.pinned.segment(span.begin, span.size()).all()) continue;
    std::map<std::vector<std::int8_t>, std::size_t> seen;
    for (const auto& r : rows) ++seen[std::vector<std::int8_t>(r.data() + span.begin, r.data() + span.end)];
    JointField f;
    f.begin = span.begin;
    f.width = span.size();
    for (auto& [value, n] : seen) {
      f.values.push_back(value);
      f.probs.push_back(static_cast<double>(n) / static_cast<double>(rows.size()));
    }
    m.fields.push_back(std::move(f));
    m.pinned.segment(span.begin, span.size()).setConstant(false);
    m.joint.segment(span.begin, span.size()).setConstant(true);
    m.probs.middleRows(span.begin, span.size()) = counts.middleRows(span.begin, span.size()) / static_cast<double>(rows.size());
  }
  return m;
}

SurrogateModel fit_surrogate(const TraceDataset& dataset, const FieldLayout& layout, std::vector<std::string>* warnings) {
  std::map<SurrogateCategory, std::vector<TernaryVector>> rows;
  for (std::size_t i = 0; i < dataset.packets.size(); ++i) {
    const auto& p = dataset.packets[i];
    SurrogateCategory key{p.protocol(), p.label};
    try {
      rows[key].push_back(encode_packet(p, layout));
    } catch (const EncodeError& e) {
      rows.try_emplace(key);
      if (warnings) warnings->push_back("packet " + std::to_string(i) + " skipped: " + e.what());
    }
  }
  SurrogateModel model;
  model.layout_id = layout.id();
  for (const auto& [key, r] : rows) {
    if (r.empty()) {
      if (warnings) warnings->push_back("category " + to_string(key) + " has no encodable packets; skipped");
      continue;
    }
    model.categories.emplace(key, fit_columns(r, key.protocol, layout));
  }
  return model;
}

std::vector<TernaryVector> sample_packets(const SurrogateModel& model, const SurrogateCategory& category, std::size_t n,
                                          std::uint64_t seed) {
  const auto& m = model.at(category);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TernaryVector> out(n, m.modal);
  for (auto& v : out)
    for (int c = 0; c < kNprintWidth; ++c) {
      if (m.pinned(c) || m.joint(c)) continue;
      const double x = u(rng);
      v(c) = x < m.probs(c, 0) ? -1 : x < m.probs(c, 0) + m.probs(c, 1) ? 0 : 1;
    }
  for (auto& v : out)
    for (const auto& f : m.fields) {
      double x = u(rng);
      std::size_t k = 0;
      while (k + 1 < f.probs.size() && x >= f.probs[k]) x -= f.probs[k++];
      std::copy(f.values[k].begin(), f.values[k].end(), v.data() + f.begin);
    }
  return out;
}

std::vector<PacketRecord> sample_records(const SurrogateModel& model, const SurrogateCategory& category, std::size_t n,
                                         std::uint64_t seed, const FieldLayout& layout) {
  std::vector<PacketRecord> out;
  out.reserve(n);
  const std::size_t limit = 100 * n + 100;
  std::size_t drawn = 0;
  for (std::uint64_t round = 0; out.size() < n; ++round) {
    const auto batch = sample_packets(model, category, n - out.size(), derive_seed(seed, round));
    for (const auto& v : batch) {
      auto d = decode_vector(v, layout);
      if (!d.decodable()) continue;
      d.packet->label = category.label;
      out.push_back(std::move(*d.packet));
    }
    drawn += batch.size();
    if (out.size() < n && drawn >= limit)
      throw std::runtime_error("surrogate category " + to_string(category) + " keeps producing undecodable rows");
  }
  return out;
}

std::string SurrogateModel::to_json() const {
  nlohmann::ordered_json j;
  j["layout_id"] = layout_id;
  j["categories"] = nlohmann::ordered_json::array();
  for (const auto& [key, m] : categories) {
    nlohmann::ordered_json c;
    c["protocol"] = std::string(ddsynth::to_string(key.protocol));
    c["label"] = key.label;
    c["support"] = m.support;
    std::vector<int> pinned, modal;
    std::vector<std::array<double, 3>> probs;
    for (int i = 0; i < kNprintWidth; ++i) {
      pinned.push_back(m.pinned(i) ? 1 : 0);
      modal.push_back(m.modal(i));
      probs.push_back({m.probs(i, 0), m.probs(i, 1), m.probs(i, 2)});
    }
    c["pinned"] = pinned;
    c["modal"] = modal;
    c["probs"] = probs;
    c["joint_fields"] = nlohmann::ordered_json::array();
    for (const auto& f : m.fields)
      c["joint_fields"].push_back({{"begin", f.begin}, {"width", f.width}, {"values", f.values}, {"probs", f.probs}});
    j["categories"].push_back(std::move(c));
  }
  return j.dump();
}

SurrogateModel SurrogateModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SurrogateModel model;
  model.layout_id = j.at("layout_id").get<std::string>();
  for (const auto& c : j.at("categories")) {
    SurrogateCategory key{protocol_from_string(c.at("protocol").get<std::string>()), c.at("label").get<std::string>()};
    SurrogateColumns m;
    m.support = c.at("support").get<std::size_t>();
    const auto pinned = c.at("pinned").get<std::vector<int>>();
    const auto modal = c.at("modal").get<std::vector<int>>();
    const auto probs = c.at("probs").get<std::vector<std::array<double, 3>>>();
    if (pinned.size() != kNprintWidth || modal.size() != kNprintWidth || probs.size() != kNprintWidth)
      throw std::invalid_argument("surrogate category " + to_string(key) + " has the wrong width");
    for (int i = 0; i < kNprintWidth; ++i) {
      m.pinned(i) = pinned[static_cast<std::size_t>(i)] != 0;
      m.modal(i) = static_cast<std::int8_t>(modal[static_cast<std::size_t>(i)]);
      for (int s = 0; s < 3; ++s) m.probs(i, s) = probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)];
    }
    for (const auto& jf : c.at("joint_fields")) {
      JointField f;
      f.begin = jf.at("begin").get<int>();
      f.width = jf.at("width").get<int>();
      f.values = jf.at("values").get<std::vector<std::vector<std::int8_t>>>();
      f.probs = jf.at("probs").get<std::vector<double>>();
      if (f.begin < 0 || f.width < 1 || f.begin + f.width > kNprintWidth || f.values.size() != f.probs.size() || f.values.empty())
        throw std::invalid_argument("surrogate category " + to_string(key) + " has a malformed joint field");
      for (const auto& v : f.values)
        if (static_cast<int>(v.size()) != f.width)
          throw std::invalid_argument("surrogate category " + to_string(key) + " has a malformed joint field");
      m.joint.segment(f.begin, f.width).setConstant(true);
      m.fields.push_back(std::move(f));
    }
    model.categories.emplace(std::move(key), std::move(m));
  }
  return model;
}

}  // namespace ddsynth
