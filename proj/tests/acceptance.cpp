// One PASS/FAIL line per acceptance criterion, each checked at its stated tolerance and time limit.
#include "ddsynth/combiner.hpp"
#include "ddsynth/diffusion.hpp"
#include "ddsynth/dtw.hpp"
#include "ddsynth/if_cluster.hpp"
#include "ddsynth/metrics.hpp"
#include "ddsynth/nprint.hpp"
#include "ddsynth/pipeline.hpp"
#include "ddsynth/prompt.hpp"
#include "ddsynth/surrogate.hpp"

#include "support/ari.hpp"
#include "support/dtw_oracle.hpp"
#include "support/fixture.hpp"
#include "support/planted.hpp"
#include "support/random_packets.hpp"
#include "support/sawtooth.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>

using namespace ddsynth;
using namespace ddsynth::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0 || elapsed < limit_s;
  const bool pass = o.pass && in_time;
  failures += !pass;
  std::ostringstream limit;
  if (limit_s > 0) limit << " / limit " << limit_s << " s";
  std::printf("%s  %-34s %8.3f s%s  %s%s\n", pass ? "PASS" : "FAIL", name.c_str(), elapsed, limit.str().c_str(),
              o.detail.c_str(), in_time ? "" : " [time limit exceeded]");
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

TernaryVector random_ternary(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(-1, 1);
  TernaryVector v;
  for (int c = 0; c < kNprintWidth; ++c) v(c) = static_cast<std::int8_t>(d(rng));
  return v;
}

Outcome codec_round_trip() {
  std::mt19937_64 rng(2024);
  std::vector<PacketRecord> packets;
  for (Protocol proto : kAllProtocols)
    for (int i = 0; i < 1000; ++i) packets.push_back(random_valid_packet(rng, proto));
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t ok = 0;
  for (const auto& p : packets) {
    const auto d = decode_vector(encode_packet(p));
    ok += d.decodable() && d.holes == 0 && same_headers(*d.packet, p);
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {ok == packets.size() && s < 1.0,
          std::to_string(ok) + "/" + std::to_string(packets.size()) + " identical, codec time " + fmt("%.3f s", s)};
}

Outcome image_noise() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> noise(-20, 20);
  int exact = 0;
  std::size_t ambiguous = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TernaryVector> rows;
    for (int i = 0; i < 32; ++i) rows.push_back(random_ternary(rng));
    auto img = pack_image(rows);
    for (Eigen::Index i = 0; i < img.raster.size(); ++i)
      img.raster.data()[i] = static_cast<std::uint8_t>(std::clamp(int{img.raster.data()[i]} + noise(rng), 0, 255));
    const auto out = unpack_image(img);
    exact += out.rows == rows;
    ambiguous += out.ambiguous_pixels;
  }
  return {exact == 100, std::to_string(exact) + "/100 images exact, " + std::to_string(ambiguous) + " ambiguous pixels"};
}

Outcome metric_axioms() {
  const auto& d = fixture_trace();
  const auto same = evaluate(d, d);
  double worst_same = 0.0;
  for (const auto& s : same.scopes) worst_same = std::max({worst_same, std::abs(s.jsd), std::abs(s.tvd), std::abs(s.hellinger)});
  const auto disjoint = evaluate(std::vector<TernaryVector>{TernaryVector::Constant(0)},
                                 std::vector<TernaryVector>{TernaryVector::Constant(1)});
  double worst_disjoint = 0.0;
  for (const auto& s : disjoint.scopes)
    worst_disjoint = std::max({worst_disjoint, std::abs(s.jsd - 1), std::abs(s.tvd - 1), std::abs(s.hellinger - 1)});
  return {worst_same <= 1e-9 && worst_disjoint <= 1e-9,
          "self max " + fmt("%.2e", worst_same) + ", disjoint max |x-1| " + fmt("%.2e", worst_disjoint)};
}

Outcome random_baseline() {
  const auto real = encode_all(fixture_trace());
  const auto random = uniform_ternary_rows(real.size(), 99);
  const auto r = evaluate(real, random);
  const auto& all = r.scope("all_features");
  return {all.jsd >= 0.6 && all.tvd >= 0.9 && r.validity <= 0.01,
          "JSD " + fmt("%.4f", all.jsd) + " TVD " + fmt("%.4f", all.tvd) + " HD " + fmt("%.4f", all.hellinger) +
              " validity " + fmt("%.4f", r.validity)};
}

Outcome surrogate_quality() {
  const auto& d = fixture_trace();
  const auto model = fit_surrogate(d);
  std::map<Protocol, std::pair<std::size_t, std::size_t>> tally;
  std::vector<TernaryVector> synth;
  std::uint64_t seed = 100;
  for (const auto& [cat, cols] : model.categories)
    for (const auto& v : sample_packets(model, cat, cols.support, ++seed)) {
      const auto dec = decode_vector(v);
      auto& [valid, total] = tally[cat.protocol];
      valid += dec.decodable() && validate_packet(*dec.packet).pass();
      ++total;
      synth.push_back(v);
    }
  bool pass = tally.size() == 3;
  std::string detail;
  for (const auto& [p, vt] : tally) {
    const double rate = static_cast<double>(vt.first) / static_cast<double>(vt.second);
    pass &= rate >= 0.95;
    detail += std::string(to_string(p)) + " validity " + fmt("%.4f", rate) + ", ";
  }
  const double j = evaluate(encode_all(d), synth).scope("all_features").jsd;
  pass &= j <= 0.15;
  return {pass, detail + "all-features JSD " + fmt("%.4f", j)};
}

Outcome golden_brown() {
  const auto table = ColorTable::load(data_dir() / "colors.csv");
  const auto& c = map_subnet(Subnet24::parse("153.101.21.0/24"), table);
  return {c.name == "Golden Brown", "153.101.21.0/24 -> " + c.name};
}

Outcome dtw_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  int match = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd a(len(rng)), b(len(rng));
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = u(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = u(rng);
    const double oracle = brute_force_dtw(a, b), got = dtw_distance(a, b);
    const double rel = std::abs(got - oracle) / std::max(1.0, std::abs(oracle));
    worst = std::max(worst, rel);
    match += rel <= 1e-12;
  }
  return {match == 100, std::to_string(match) + "/100 pairs match, max relative difference " + fmt("%.1e", worst)};
}

Outcome if_ari() {
  bool pass = true;
  std::string detail = "ARI";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto [series, truth] = planted_families(seed);
    const auto r = if_cluster(series, {.k = 3, .seed = seed});
    const double ari = adjusted_rand_index(r.assignment, truth);
    pass &= ari >= 0.9;
    detail += " " + fmt("%.3f", ari);
  }
  return {pass, detail};
}

Batch gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Batch m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

DiffusionModel untrained(int length) {
  DiffusionModel m;
  m.config.length = length;
  m.schedule = NoiseSchedule(m.config.steps, m.config.beta_start, m.config.beta_end);
  std::mt19937_64 rng(1);
  m.denoiser = Denoiser(length, m.config.embed_dim, m.config.hidden, rng);
  return m;
}

Outcome diffusion() {
  std::string detail;
  bool pass = true;

  std::mt19937_64 rng(12);
  Denoiser d(64, 16, 128, rng);
  const Batch x = gaussian(64, 4, rng), target = gaussian(64, 4, rng);
  const Batch p = gaussian(64, 4, rng).cwiseAbs().cwiseMin(1.0);
  const std::vector<int> t{1, 10, 25, 50};
  const Eigen::VectorXd w = untrained(64).snr(t);
  Eigen::VectorXd grad;
  d.loss_gradient(x, t, p, target, grad, w);
  const Eigen::VectorXd theta = d.parameters();
  std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Eigen::Index i = pick(rng);
    Eigen::VectorXd tp = theta, tm = theta;
    tp(i) += 1e-5;
    tm(i) -= 1e-5;
    d.set_parameters(tp);
    const double lp = d.loss(x, t, p, target, w);
    d.set_parameters(tm);
    const double lm = d.loss(x, t, p, target, w);
    d.set_parameters(theta);
    const double fd = (lp - lm) / 2e-5;
    worst = std::max(worst, std::abs(fd - grad(i)) / std::max({std::abs(fd), std::abs(grad(i)), 1e-8}));
  }
  pass &= worst <= 1e-4;
  detail += "gradient rel err " + fmt("%.1e", worst);

  const auto m16 = untrained(16);
  const int draws = 10000;
  const Eigen::VectorXd x0 = 2.0 * sawtooth(16, 2).array() - 1.0;
  const Batch xn = m16.forward_noise(x0.replicate(1, draws), m16.schedule.steps(), gaussian(16, draws, rng));
  const Eigen::VectorXd mean = xn.rowwise().mean();
  const Eigen::VectorXd var = (xn.colwise() - mean).rowwise().squaredNorm() / (draws - 1);
  const bool moments = mean.cwiseAbs().maxCoeff() <= 3.0 * std::sqrt(1.0 / draws) &&
                       (var.array() - 1.0).abs().maxCoeff() <= 3.0 * std::sqrt(2.0 / (draws - 1));
  pass &= moments;
  detail += std::string(", endpoint moments ") + (moments ? "within" : "outside") + " 3 sigma";

  DiffusionConfig cfg;
  cfg.length = 64;
  cfg.epochs = 200;
  cfg.seed = 7;
  const auto family = sawtooth_family(32, 64, 3);
  const auto model = train_pattern_diffusion(family, cfg);
  const auto& trace = model.loss_trace;
  std::vector<double> ma;
  for (std::size_t i = 19; i < trace.size(); ++i) {
    double s = 0;
    for (std::size_t j = i - 19; j <= i; ++j) s += trace[j];
    ma.push_back(s / 20);
  }
  bool settles = trace.size() == 200;
  for (std::size_t k = 100 - 19 + 1; k < ma.size(); ++k) settles &= ma[k] <= ma[k - 1];
  pass &= settles;
  detail += std::string(", loss MA ") + (settles ? "non-increasing" : "increases") + " over final half";

  double intra = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < family.size(); ++i)
    for (std::size_t j = i + 1; j < family.size(); ++j, ++pairs) intra += dtw_distance(family[i].segment, family[j].segment);
  intra /= pairs;
  const Eigen::VectorXd pattern = sawtooth(64, 4);
  double sampled = 0;
  for (std::uint64_t s = 0; s < 100; ++s) sampled += dtw_distance(sample_normalized(model, pattern, s), pattern);
  sampled /= 100;
  pass &= sampled <= 2 * intra;
  detail += ", sample DTW " + fmt("%.3f", sampled) + " vs 2x spread " + fmt("%.3f", 2 * intra);
  return {pass, detail};
}

MetadataChain random_chain(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> attacks{"syn-flood", "udp-flood", "icmp-flood"};
  MetadataChain m;
  double start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    start += std::uniform_real_distribution<double>(0.0, 20.0)(rng);
    m.push_back({attacks[rng() % 3], static_cast<int>(rng() % 4), start, std::uniform_real_distribution<double>(1.0, 30.0)(rng)});
  }
  return m;
}

Outcome combination() {
  bool identity = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = random_chain(40, seed);
    identity &= combine(m, {.method = CombineMethod::Imitative, .seed = seed}) == m;
  }

  const auto m = random_chain(30, 3);
  const CombinationConfig rc{.method = CombineMethod::Random, .total_time = 100.0, .seed = 5, .counts = 10000};
  const auto rnd = combine(m, rc);
  std::size_t inside = 0;
  for (const auto& t : rnd) inside += t.start >= 0.0 && t.start + t.duration <= rc.total_time;

  const auto src = random_chain(200, 9);
  const auto model = fit_metadata_markov(src);
  const auto out = combine(src, {.method = CombineMethod::Markov, .seed = 4, .counts = 10000});
  std::vector<std::size_t> ids;
  for (const auto& t : out) ids.push_back(model.state_of(t));
  const double linf = (empirical_transitions(ids, model.states.size()) - model.chain.transition_matrix()).cwiseAbs().maxCoeff();

  return {identity && rnd.size() == 10000 && inside == 10000 && out.size() == 10000 && linf <= 0.05,
          std::string("imitative identity ") + (identity ? "yes" : "no") + ", random starts inside " + std::to_string(inside) +
              "/10000, Markov L-inf " + fmt("%.4f", linf)};
}

TimeSeries series_of(std::vector<double> v) {
  TimeSeries s;
  s.values = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return s;
}

Outcome conservation() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 200);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = u(rng);
    const double start = u(rng) * 1000, duration = 0.1 + u(rng);
    const auto ts = series_to_timestamps(series_of(v), start, duration, rng());
    std::vector<double> counts(static_cast<std::size_t>(n), 0.0);
    bool ok = true;
    for (double t : ts) {
      const auto b = static_cast<long>(std::floor((t - start) / (duration / n)));
      if (b < 0 || b >= n) ok = false;
      else counts[static_cast<std::size_t>(b)] += 1;
    }
    for (int b = 0; b < n; ++b) ok &= counts[static_cast<std::size_t>(b)] == std::nearbyint(v[static_cast<std::size_t>(b)]);
    exact += ok;
  }

  AssemblySources src;
  std::map<std::string, std::size_t> expected;
  const MetadataChain chain = random_chain(30, 21);
  for (int c = 0; c < 4; ++c)
    src.series[c] = [](const Metadata& t, std::uint64_t seed) {
      std::mt19937_64 r(seed);
      std::vector<double> v(static_cast<std::size_t>(std::max(2.0, std::round(t.duration))));
      for (auto& x : v) x = std::uniform_real_distribution<double>(0.0, 9.0)(r);
      return series_of(v);
    };
  for (const auto& label : {"syn-flood", "udp-flood", "icmp-flood"})
    src.packets[label] = [](std::size_t n, std::uint64_t) { return std::vector<PacketRecord>(n, make_udp(1, 2, 3, 4, 10)); };
  // The wrapper tallies what each tuple's series asks for; the trace must carry exactly that per label.
  for (auto& [c, f] : src.series) {
    const auto inner = f;
    f = [inner, &expected](const Metadata& t, std::uint64_t seed) {
      auto s = inner(t, seed);
      for (Eigen::Index i = 0; i < s.size(); ++i) expected[t.attack] += static_cast<std::size_t>(std::nearbyint(s.values(i)));
      return s;
    };
  }
  const auto trace = assemble_trace(chain, src, 5);
  std::map<std::string, std::size_t> got;
  for (const auto& p : trace.packets) ++got[p.label];
  std::size_t total_expected = 0;
  for (const auto& [k, v] : expected) total_expected += v;
  const bool labels = got == expected;
  return {exact == 100 && labels, std::to_string(exact) + "/100 series re-bin exactly, per-label counts " +
                                      (labels ? "preserved" : "differ") + " (" + std::to_string(trace.packets.size()) + "/" +
                                      std::to_string(total_expected) + " packets)"};
}

Outcome end_to_end() {
  const auto cfg = PipelineConfig::load(data_dir() / "fixtures" / "pipeline.json");
  const auto a = fresh_dir("ddsynth_acceptance_run_a"), b = fresh_dir("ddsynth_acceptance_run_b");
  run_pipeline(cfg, a);
  run_pipeline(cfg, b);
  const auto ta = tree_contents(a), tb = tree_contents(b);
  std::size_t differing = 0;
  for (const auto& [k, v] : ta) differing += !tb.count(k) || tb.at(k) != v;
  differing += tb.size() > ta.size() ? tb.size() - ta.size() : 0;
  const bool report = ta.count("report/report.json") != 0;
  return {differing == 0 && report && ta.size() == tb.size(),
          std::to_string(ta.size()) + " artifacts, " + std::to_string(differing) + " differ" +
              (report ? ", metric report emitted" : ", no metric report")};
}

}  // namespace

int main() {
  criterion("codec round trip", 1, codec_round_trip);
  criterion("image round trip with pixel noise", 0, image_noise);
  criterion("metric axioms", 0, metric_axioms);
  criterion("random-baseline direction", 5, random_baseline);
  criterion("surrogate quality", 30, surrogate_quality);
  criterion("worked mapping example", 0, golden_brown);
  criterion("DTW oracle equivalence", 10, dtw_oracle);
  criterion("IF clustering planted recovery", 60, if_ari);
  criterion("diffusion correctness", 300, diffusion);
  criterion("combination contracts", 30, combination);
  criterion("conservation", 5, conservation);
  criterion("end-to-end determinism", 600, end_to_end);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
