#include "ddsynth/pipeline.hpp"

#include "ddsynth/field_bridge.hpp"
#include "ddsynth/hash.hpp"
#include "ddsynth/metrics.hpp"
#include "ddsynth/serialize.hpp"
#include "ddsynth/surrogate.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace ddsynth {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw std::invalid_argument("unknown config key " + where + "." + k);
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

constexpr const char* kSeedNames[] = {"cluster", "temporal", "generate", "fields", "combine", "assemble"};

std::uint64_t* seed_slot(PipelineSeeds& s, std::size_t i) {
  std::uint64_t* slots[] = {&s.cluster, &s.temporal, &s.generate, &s.fields, &s.combine, &s.assemble};
  return slots[i];
}

std::uint64_t seed_at(const PipelineSeeds& s, std::size_t i) { return *seed_slot(const_cast<PipelineSeeds&>(s), i); }

}  // namespace

// ---------------------------------------------------------------------------
// Config

PipelineConfig PipelineConfig::from_json(const std::string& text, const fs::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  const auto j = json::parse(text);
  reject_unknown(j, "config", {"input", "colors", "workspace", "layout", "prompts", "temporal", "fields", "combination", "seeds"});

  const auto& input = j.at("input");
  reject_unknown(input, "input", {"trace", "labels"});
  c.trace = input.at("trace").get<std::string>();
  read_opt(input, "labels", c.labels);
  c.colors = j.at("colors").get<std::string>();
  read_opt(j, "workspace", c.workspace);
  read_opt(j, "layout", c.layout_id);
  if (c.layout_id != FieldLayout::standard().id()) throw std::invalid_argument("unknown layout " + c.layout_id);
  if (j.contains("prompts")) c.templates = PromptTemplates::from_json(j.at("prompts").dump());

  if (j.contains("temporal")) {
    const auto& t = j.at("temporal");
    reject_unknown(t, "temporal", {"bin_width", "idle_gap", "k", "period", "fourier_k", "resample_len", "l_min", "l_max",
                                   "match_threshold", "threshold_quantile", "min_support", "diffusion"});
    read_opt(t, "bin_width", c.bin_width);
    read_opt(t, "idle_gap", c.idle_gap);
    read_opt(t, "k", c.cluster.k);
    read_opt(t, "period", c.cluster.period);
    read_opt(t, "fourier_k", c.cluster.fourier_k);
    read_opt(t, "resample_len", c.cluster.resample_len);
    read_opt(t, "l_min", c.temporal.segment.l_min);
    read_opt(t, "l_max", c.temporal.segment.l_max);
    c.temporal.segment.match_threshold = 0.0;
    read_opt(t, "match_threshold", c.temporal.segment.match_threshold);
    read_opt(t, "threshold_quantile", c.temporal.threshold_quantile);
    read_opt(t, "min_support", c.temporal.segment.min_support);
    if (t.contains("diffusion")) {
      const auto& d = t.at("diffusion");
      reject_unknown(d, "temporal.diffusion", {"steps", "beta_start", "beta_end", "embed_dim", "hidden", "epochs",
                                               "batch_size", "draws_per_segment", "learning_rate", "lr_decay", "ema_decay"});
      auto& dc = c.temporal.diffusion;
      read_opt(d, "steps", dc.steps);
      read_opt(d, "beta_start", dc.beta_start);
      read_opt(d, "beta_end", dc.beta_end);
      read_opt(d, "embed_dim", dc.embed_dim);
      read_opt(d, "hidden", dc.hidden);
      read_opt(d, "epochs", dc.epochs);
      read_opt(d, "batch_size", dc.batch_size);
      read_opt(d, "draws_per_segment", dc.draws_per_segment);
      read_opt(d, "learning_rate", dc.learning_rate);
      read_opt(d, "lr_decay", dc.lr_decay);
      read_opt(d, "ema_decay", dc.ema_decay);
    }
  } else {
    c.temporal.segment.match_threshold = 0.0;
  }
  if (c.bin_width <= 0.0) throw std::invalid_argument("temporal.bin_width must be positive");
  if (c.cluster.k < 1) throw std::invalid_argument("temporal.k must be at least 1");
  if (c.temporal.segment.l_min < 2 || c.temporal.segment.l_max < c.temporal.segment.l_min)
    throw std::invalid_argument("temporal.l_min/l_max must satisfy 2 <= l_min <= l_max");

  if (j.contains("fields")) {
    const auto& f = j.at("fields");
    reject_unknown(f, "fields", {"images_per_prompt", "rows_per_image"});
    read_opt(f, "images_per_prompt", c.images_per_prompt);
    read_opt(f, "rows_per_image", c.rows_per_image);
  }
  if (c.images_per_prompt < 1 || c.rows_per_image < 1)
    throw std::invalid_argument("fields.images_per_prompt and fields.rows_per_image must be positive");

  if (j.contains("combination")) {
    const auto& m = j.at("combination");
    reject_unknown(m, "combination", {"method", "total_time", "counts"});
    if (m.contains("method")) c.method = combine_method_from_string(m.at("method").get<std::string>());
    read_opt(m, "total_time", c.total_time);
    read_opt(m, "counts", c.counts);
  }

  const auto& seeds = j.at("seeds");
  reject_unknown(seeds, "seeds", {"cluster", "temporal", "generate", "fields", "combine", "assemble"});
  for (std::size_t i = 0; i < std::size(kSeedNames); ++i) {
    if (!seeds.contains(kSeedNames[i])) throw std::invalid_argument(std::string("seeds.") + kSeedNames[i] + " is required");
    *seed_slot(c.seeds, i) = seeds.at(kSeedNames[i]).get<std::uint64_t>();
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  try {
    return from_json(read_text(path), path.parent_path());
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void PipelineConfig::set_master_seed(std::uint64_t seed) {
  for (std::size_t i = 0; i < std::size(kSeedNames); ++i) *seed_slot(seeds, i) = derive_seed(seed, i);
}

fs::path PipelineConfig::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

std::string PipelineConfig::to_json() const {
  const auto& dc = temporal.diffusion;
  json j;
  j["input"] = {{"trace", trace}, {"labels", labels}};
  j["colors"] = colors;
  j["layout"] = layout_id;
  j["prompts"] = json::parse(templates.to_json());
  j["temporal"] = {{"bin_width", bin_width},
                   {"idle_gap", idle_gap},
                   {"k", cluster.k},
                   {"period", cluster.period},
                   {"fourier_k", cluster.fourier_k},
                   {"resample_len", cluster.resample_len},
                   {"l_min", temporal.segment.l_min},
                   {"l_max", temporal.segment.l_max},
                   {"match_threshold", temporal.segment.match_threshold},
                   {"threshold_quantile", temporal.threshold_quantile},
                   {"min_support", temporal.segment.min_support},
                   {"diffusion",
                    {{"steps", dc.steps},
                     {"beta_start", dc.beta_start},
                     {"beta_end", dc.beta_end},
                     {"embed_dim", dc.embed_dim},
                     {"hidden", dc.hidden},
                     {"epochs", dc.epochs},
                     {"batch_size", dc.batch_size},
                     {"draws_per_segment", dc.draws_per_segment},
                     {"learning_rate", dc.learning_rate},
                     {"lr_decay", dc.lr_decay},
                     {"ema_decay", dc.ema_decay}}}};
  j["fields"] = {{"images_per_prompt", images_per_prompt}, {"rows_per_image", rows_per_image}};
  j["combination"] = {{"method", to_string(method)}, {"total_time", total_time}, {"counts", counts}};
  json s;
  for (std::size_t i = 0; i < std::size(kSeedNames); ++i) s[kSeedNames[i]] = seed_at(seeds, i);
  j["seeds"] = std::move(s);
  return j.dump(2) + "\n";
}

std::string PipelineConfig::hash() const { return hex64(fnv1a64(to_json())); }

// ---------------------------------------------------------------------------
// Stages

namespace {

constexpr std::string_view kStageNames[] = {"ingest",       "encode",   "prompts", "fit-surrogate", "train-temporal",
                                            "gen-temporal", "gen-fields", "combine", "assemble",      "eval"};

constexpr const char* kConfigCopy = "config.json";
constexpr const char* kDataset = "dataset.csv";
constexpr const char* kIngestInfo = "ingest.json";
constexpr const char* kEncoded = "encoded";
constexpr const char* kGenerateRequests = "prompts/generate.jsonl";
constexpr const char* kSurrogate = "models/surrogate.json";
constexpr const char* kChain = "models/chain.jsonl";
constexpr const char* kTemporal = "models/temporal.json";
constexpr const char* kSeries = "temporal/series.json";
constexpr const char* kGenerated = "generated";
constexpr const char* kCombined = "combined/chain.jsonl";
constexpr const char* kSynthCsv = "synthetic/trace.csv";
constexpr const char* kSynthPcap = "synthetic/trace.pcap";
constexpr const char* kImportReport = "synthetic/import_report.json";
constexpr const char* kReportJson = "report/report.json";
constexpr const char* kReportText = "report/report.txt";
constexpr const char* kDistributions = "report/distributions";

Stage producer_of(const std::string& artifact) {
  for (Stage s : kStages)
    for (const auto& out : stage_artifacts(s).outputs)
      if (out == artifact) return s;
  throw std::logic_error("no stage produces " + artifact);
}

fs::path state_path(const fs::path& ws, Stage s) { return ws / "state" / (std::string(to_string(s)) + ".json"); }

void check_inputs(Stage s, const PipelineConfig& cfg, const fs::path& ws) {
  const auto h = cfg.hash();
  std::set<Stage> checked;
  for (const auto& in : stage_artifacts(s).inputs) {
    const Stage p = producer_of(in);
    if (!fs::exists(ws / in)) throw StageOrderError(p, in);
    if (!checked.insert(p).second) continue;
    const auto sp = state_path(ws, p);
    if (!fs::exists(sp)) throw StageOrderError(p, "state of " + std::string(to_string(p)));
    const auto recorded = json::parse(read_text(sp)).at("config_hash").get<std::string>();
    if (recorded != h)
      throw ConfigMismatchError(in + " was produced under config " + recorded + " but the current config is " + h +
                                "; re-run '" + std::string(to_string(p)) + "'");
  }
}

/// Every regular file under the declared outputs, with its digest, in path order.
json output_digests(Stage s, const fs::path& ws) {
  std::map<std::string, std::string> files;
  for (const auto& out : stage_artifacts(s).outputs) {
    const auto p = ws / out;
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file()) files[fs::relative(e.path(), ws).generic_string()] = hex64(fnv1a64(read_text(e.path())));
    } else if (fs::exists(p)) {
      files[out] = hex64(fnv1a64(read_text(p)));
    }
  }
  json j = json::object();
  for (const auto& [k, v] : files) j[k] = v;
  return j;
}

/// Reads a JSON artifact and checks its embedded config hash.
json load_artifact(const fs::path& ws, const std::string& rel, const std::string& hash) {
  auto j = json::parse(read_text(ws / rel));
  const auto recorded = j.at("config_hash").get<std::string>();
  if (recorded != hash)
    throw ConfigMismatchError(rel + " carries config hash " + recorded + " but the current config is " + hash);
  return j;
}

struct Context {
  const PipelineConfig& cfg;
  fs::path ws;
  std::string hash;
  const StageLogger& log;
  Stage stage;

  void info(const std::string& msg) const {
    if (log) log(stage, msg);
  }
  fs::path at(const std::string& rel) const { return ws / rel; }
};

TraceDataset load_dataset(const Context& c) {
  auto d = ingest_csv(c.at(kDataset)).dataset;
  const auto info = load_artifact(c.ws, kIngestInfo, c.hash);
  d.epoch = info.at("epoch").get<double>();
  return d;
}

ColorTable load_colors(const Context& c) { return ColorTable::load(c.cfg.resolve(c.cfg.colors)); }

std::map<int, ClusterTemporalModel> load_temporal(const Context& c) {
  const auto j = load_artifact(c.ws, kTemporal, c.hash);
  std::map<int, ClusterTemporalModel> models;
  for (const auto& m : j.at("clusters")) {
    auto model = temporal_model_from_json(m.dump());
    models.emplace(model.cluster, std::move(model));
  }
  return models;
}

Eigen::Index target_length(const Metadata& t, double bin_width) {
  return std::max<Eigen::Index>(2, static_cast<Eigen::Index>(std::llround(t.duration / bin_width)));
}

const ClusterTemporalModel& model_for(const std::map<int, ClusterTemporalModel>& models, int cluster) {
  const auto it = models.find(cluster);
  if (it == models.end()) throw std::runtime_error("no temporal model for cluster " + std::to_string(cluster));
  return it->second;
}

void stage_ingest(const Context& c) {
  const auto path = c.cfg.resolve(c.cfg.trace);
  TraceDataset d;
  if (path.extension() == ".csv") {
    d = ingest_csv(path).dataset;
  } else {
    const auto rules = c.cfg.labels.empty() ? LabelRules{} : LabelRules::load(c.cfg.resolve(c.cfg.labels));
    d = ingest_pcap(path, rules);
  }
  if (d.packets.empty()) throw EmptyTraceError("no admissible packets in " + c.cfg.trace);
  write_text(c.at(kConfigCopy), c.cfg.to_json());
  write_csv(d, c.at(kDataset));
  json counts = json::object();
  std::map<std::string, std::size_t> per_label;
  for (const auto& p : d.packets) ++per_label[p.label];
  for (const auto& [k, v] : per_label) counts[k] = v;
  const json info = {{"config_hash", c.hash}, {"source", c.cfg.trace},    {"epoch", d.epoch},
                     {"packets", d.packets.size()}, {"skipped", d.skipped}, {"labels", counts}};
  write_text(c.at(kIngestInfo), info.dump(2) + "\n");
  c.info(std::to_string(d.packets.size()) + " packets, " + std::to_string(d.skipped) + " frames skipped");
}

void stage_encode(const Context& c) {
  const auto d = load_dataset(c);
  const auto catalog = ViewCatalog::from_dataset(d, c.cfg.templates);
  const auto entries = export_training_pairs(d, catalog, load_colors(c), c.at(kEncoded), FieldLayout::standard(), c.hash);
  c.info(std::to_string(entries.size()) + " training images");
}

void stage_prompts(const Context& c) {
  const auto d = load_dataset(c);
  const auto catalog = ViewCatalog::from_dataset(d, c.cfg.templates);
  const auto requests = generation_manifest(d, catalog, load_colors(c), c.cfg.images_per_prompt, c.cfg.rows_per_image);
  fs::create_directories(c.at(kGenerateRequests).parent_path());
  write_manifest(c.at(kGenerateRequests), requests);
  c.info(std::to_string(requests.size()) + " generation requests");
}

void stage_fit_surrogate(const Context& c) {
  const auto d = load_dataset(c);
  std::vector<std::string> warnings;
  const auto model = fit_surrogate(d, FieldLayout::standard(), &warnings);
  for (const auto& w : warnings) c.info("warning: " + w);
  const json j = {{"config_hash", c.hash}, {"model", json::parse(model.to_json())}};
  write_text(c.at(kSurrogate), j.dump() + "\n");
  c.info(std::to_string(model.categories.size()) + " categories");
}

void stage_train_temporal(const Context& c) {
  const auto d = load_dataset(c);
  const auto series = split_episodes(d, c.cfg.bin_width, c.cfg.idle_gap);
  auto ccfg = c.cfg.cluster;
  ccfg.k = std::min<int>(ccfg.k, static_cast<int>(series.size()));
  ccfg.seed = c.cfg.seeds.cluster;
  const auto clustering = if_cluster(series, ccfg);
  write_text(c.at(kChain), chain_to_jsonl(clustering.chain));

  std::map<int, std::vector<TimeSeries>> members;
  for (std::size_t i = 0; i < series.size(); ++i) members[clustering.assignment[i]].push_back(series[i]);
  json clusters = json::array();
  for (const auto& [cluster, group] : members) {
    auto tcfg = c.cfg.temporal;
    tcfg.diffusion.seed = derive_seed(c.cfg.seeds.temporal, static_cast<std::uint64_t>(cluster));
    const auto model = train_cluster_model(group, cluster, tcfg);
    c.info("cluster " + std::to_string(cluster) + ": " + std::to_string(group.size()) + " series, " +
           std::to_string(model.library.size()) + " patterns");
    clusters.push_back(json::parse(temporal_model_to_json(model)));
  }
  const json j = {{"config_hash", c.hash}, {"bin_width", c.cfg.bin_width}, {"clusters", std::move(clusters)}};
  write_text(c.at(kTemporal), j.dump() + "\n");
  c.info(std::to_string(series.size()) + " episodes in " + std::to_string(members.size()) + " clusters");
}

void stage_gen_temporal(const Context& c) {
  const auto models = load_temporal(c);
  const auto chain = chain_from_jsonl(read_text(c.at(kChain)));
  json out = json::array();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& t = chain[i];
    const auto& model = model_for(models, t.cluster);
    auto s = generate_series(model, target_length(t, model.bin_width), derive_seed(c.cfg.seeds.generate, i));
    s.attack = t.attack;
    s.origin = t.start;
    out.push_back({{"cluster", t.cluster}, {"series", json::parse(series_to_json(s))}});
  }
  const json j = {{"config_hash", c.hash}, {"series", std::move(out)}};
  write_text(c.at(kSeries), j.dump() + "\n");
  c.info(std::to_string(chain.size()) + " series");
}

void stage_gen_fields(const Context& c) {
  const auto requests = read_manifest(c.at(kGenerateRequests));
  const auto j = load_artifact(c.ws, kSurrogate, c.hash);
  const auto model = SurrogateModel::from_json(j.at("model").dump());
  render_surrogate_images(requests, model, c.at(kGenerated), c.cfg.seeds.fields);
  write_manifest(c.at(kGenerated) / kManifestName, requests);
  c.info(std::to_string(requests.size()) + " images");
}

void stage_combine(const Context& c) {
  const auto chain = chain_from_jsonl(read_text(c.at(kChain)));
  if (chain.empty()) throw std::runtime_error("metadata chain is empty");
  CombinationConfig cc;
  cc.method = c.cfg.method;
  cc.seed = c.cfg.seeds.combine;
  cc.counts = c.cfg.counts > 0 ? c.cfg.counts : static_cast<int>(chain.size());
  cc.total_time = c.cfg.total_time;
  if (cc.total_time <= 0.0) {
    double span = 0.0, longest = 0.0;
    for (const auto& t : chain) {
      span = std::max(span, t.start + t.duration);
      longest = std::max(longest, t.duration);
    }
    cc.total_time = span > longest ? span : 2.0 * longest + c.cfg.bin_width;
  }
  const auto combined = combine(chain, cc);
  write_text(c.at(kCombined), chain_to_jsonl(combined));
  c.info(to_string(cc.method) + ": " + std::to_string(combined.size()) + " tuples");
}

void stage_assemble(const Context& c) {
  const auto chain = chain_from_jsonl(read_text(c.at(kCombined)));
  const auto models = load_temporal(c);
  const auto manifest = read_manifest(c.at(kGenerated) / kManifestName);
  const auto imported = import_generated_images(manifest, c.at(kGenerated));
  if (imported.format_errors() > 0) c.info(std::to_string(imported.format_errors()) + " generated images rejected");

  std::map<std::string, std::vector<PacketRecord>> pools;
  for (const auto& p : imported.packets) pools[p.packet.label].push_back(p.packet);

  AssemblySources sources;
  for (const auto& [cluster, model] : models) {
    const ClusterTemporalModel* m = &model;
    sources.series[cluster] = [m](const Metadata& t, std::uint64_t seed) {
      return generate_series(*m, target_length(t, m->bin_width), seed);
    };
  }
  for (const auto& t : chain) {
    if (sources.packets.count(t.attack)) continue;
    const auto it = pools.find(t.attack);
    if (it == pools.end() || it->second.empty())
      throw std::runtime_error("no generated packets for attack type " + t.attack);
    const auto* pool = &it->second;
    sources.packets[t.attack] = [pool](std::size_t n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::size_t> pick(0, pool->size() - 1);
      std::vector<PacketRecord> out;
      out.reserve(n);
      for (std::size_t i = 0; i < n; ++i) out.push_back((*pool)[pick(rng)]);
      return out;
    };
  }
  auto trace = assemble_trace(chain, sources, c.cfg.seeds.assemble);
  trace.epoch = load_artifact(c.ws, kIngestInfo, c.hash).at("epoch").get<double>();
  fs::create_directories(c.at(kSynthCsv).parent_path());
  write_csv(trace, c.at(kSynthCsv));
  write_pcap(trace, c.at(kSynthPcap));

  json images = json::array();
  for (const auto& r : imported.images)
    images.push_back({{"image_path", r.image_path},
                      {"rows", r.rows},
                      {"undecodable", r.undecodable},
                      {"valid", r.valid},
                      {"ambiguous_pixels", r.ambiguous_pixels},
                      {"error", r.error}});
  const json report = {{"config_hash", c.hash},
                       {"images", std::move(images)},
                       {"format_errors", imported.format_errors()},
                       {"validity", imported.validity_rate()},
                       {"pool_packets", imported.packets.size()},
                       {"packets", trace.packets.size()}};
  write_text(c.at(kImportReport), report.dump(2) + "\n");
  c.info(std::to_string(trace.packets.size()) + " packets from " + std::to_string(chain.size()) + " tuples");
}

std::vector<TernaryVector> encode_rows(const TraceDataset& d) {
  std::vector<TernaryVector> rows;
  rows.reserve(d.packets.size());
  for (const auto& p : d.packets) rows.push_back(encode_packet(p));
  return rows;
}

void stage_eval(const Context& c) {
  const auto real = load_dataset(c);
  const auto synth = ingest_csv(c.at(kSynthCsv)).dataset;
  const auto real_rows = encode_rows(real), synth_rows = encode_rows(synth);
  auto report = evaluate(real_rows, synth_rows);
  report.config_hash = c.hash;
  write_text(c.at(kReportJson), report.to_json());
  write_text(c.at(kReportText), report.to_text());

  fs::create_directories(c.at(kDistributions));
  for (const auto& s : report.scopes) {
    const auto scope = s.scope == "all_features" ? FeatureScope::all_features()
                                                  : FeatureScope::protocol(protocol_from_string(s.scope.substr(9)));
    std::string name = s.scope;
    std::replace(name.begin(), name.end(), ':', '_');
    write_distribution_csv(feature_distribution(real_rows, scope, report.group_width),
                           c.at(kDistributions) / ("real_" + name + ".csv"));
    write_distribution_csv(feature_distribution(synth_rows, scope, report.group_width),
                           c.at(kDistributions) / ("synthetic_" + name + ".csv"));
  }
  const auto& all = report.scope("all_features");
  std::ostringstream msg;
  msg << std::fixed << std::setprecision(4) << "JSD " << all.jsd << " TVD " << all.tvd << " HD " << all.hellinger
      << " validity " << report.validity;
  c.info(msg.str());
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void append_log(const fs::path& ws, const json& line) {
  fs::create_directories(ws / "logs");
  std::ofstream out(ws / "logs" / "stages.jsonl", std::ios::app);
  out << line.dump() << "\n";
}

}  // namespace

std::string_view to_string(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

Stage stage_from_string(std::string_view name) {
  for (Stage s : kStages)
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown stage " + std::string(name));
}

StageArtifacts stage_artifacts(Stage s) {
  switch (s) {
    case Stage::Ingest: return {{}, {kConfigCopy, kDataset, kIngestInfo}};
    case Stage::Encode: return {{kDataset, kIngestInfo}, {kEncoded}};
    case Stage::Prompts: return {{kDataset, kIngestInfo}, {kGenerateRequests}};
    case Stage::FitSurrogate: return {{kDataset, kIngestInfo}, {kSurrogate}};
    case Stage::TrainTemporal: return {{kDataset, kIngestInfo}, {kChain, kTemporal}};
    case Stage::GenTemporal: return {{kChain, kTemporal}, {kSeries}};
    case Stage::GenFields: return {{kGenerateRequests, kSurrogate}, {kGenerated}};
    case Stage::Combine: return {{kChain}, {kCombined}};
    case Stage::Assemble: return {{kCombined, kTemporal, kGenerated, kIngestInfo}, {kSynthCsv, kSynthPcap, kImportReport}};
    case Stage::Eval: return {{kDataset, kIngestInfo, kSynthCsv}, {kReportJson, kReportText, kDistributions}};
  }
  throw std::logic_error("bad stage");
}

void run_stage(Stage s, const PipelineConfig& cfg, const fs::path& workspace, const StageLogger& log) {
  check_inputs(s, cfg, workspace);
  for (const auto& out : stage_artifacts(s).outputs) fs::remove_all(workspace / out);
  fs::remove(state_path(workspace, s));

  const Context c{cfg, workspace, cfg.hash(), log, s};
  const auto started = std::chrono::steady_clock::now();
  append_log(workspace, {{"stage", to_string(s)}, {"event", "start"}, {"time", utc_now()}, {"config_hash", c.hash}});
  switch (s) {
    case Stage::Ingest: stage_ingest(c); break;
    case Stage::Encode: stage_encode(c); break;
    case Stage::Prompts: stage_prompts(c); break;
    case Stage::FitSurrogate: stage_fit_surrogate(c); break;
    case Stage::TrainTemporal: stage_train_temporal(c); break;
    case Stage::GenTemporal: stage_gen_temporal(c); break;
    case Stage::GenFields: stage_gen_fields(c); break;
    case Stage::Combine: stage_combine(c); break;
    case Stage::Assemble: stage_assemble(c); break;
    case Stage::Eval: stage_eval(c); break;
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  json inputs = json::array();
  for (const auto& in : stage_artifacts(s).inputs) inputs.push_back(in);
  const json state = {{"stage", to_string(s)},
                      {"config_hash", c.hash},
                      {"inputs", std::move(inputs)},
                      {"outputs", output_digests(s, workspace)}};
  write_text(state_path(workspace, s), state.dump(2) + "\n");
  append_log(workspace, {{"stage", to_string(s)}, {"event", "done"}, {"time", utc_now()}, {"elapsed_s", elapsed}});
}

void run_pipeline(const PipelineConfig& cfg, const fs::path& workspace, const StageLogger& log) {
  for (Stage s : kStages) run_stage(s, cfg, workspace, log);
}

}  // namespace ddsynth
