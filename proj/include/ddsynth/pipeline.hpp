#pragma once

#include "ddsynth/combiner.hpp"
#include "ddsynth/if_cluster.hpp"
#include "ddsynth/prompt.hpp"
#include "ddsynth/temporal_model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ddsynth {

struct PipelineSeeds {
  std::uint64_t cluster = 1;
  std::uint64_t temporal = 2;
  std::uint64_t generate = 3;
  std::uint64_t fields = 4;
  std::uint64_t combine = 5;
  std::uint64_t assemble = 6;
};

/// Everything a pipeline run depends on. Paths are kept as written and resolved against `base_dir`.
struct PipelineConfig {
  std::filesystem::path base_dir;
  std::string trace;      // .pcap or canonical .csv
  std::string labels;     // label rules, pcap input only
  std::string colors;
  std::string workspace;  // default workspace, may be overridden
  std::string layout_id = "nprint-hdr-v1";
  PromptTemplates templates;

  double bin_width = 1.0;
  double idle_gap = 10.0;
  IfClusterConfig cluster;  // seed comes from `seeds.cluster`
  TemporalTrainConfig temporal;

  std::size_t images_per_prompt = 1;
  std::size_t rows_per_image = 256;

  CombineMethod method = CombineMethod::Imitative;
  double total_time = 0.0;  // 0: the observed chain's span
  int counts = 0;           // 0: as many tuples as observed

  PipelineSeeds seeds;

  static PipelineConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  /// Derives every stage seed from one master seed.
  void set_master_seed(std::uint64_t seed);

  std::filesystem::path resolve(const std::string& p) const;
  /// Canonical serialization: every field, fixed key order.
  std::string to_json() const;
  /// fnv1a64 of the canonical serialization, hex.
  std::string hash() const;
};

enum class Stage { Ingest, Encode, Prompts, FitSurrogate, TrainTemporal, GenTemporal, GenFields, Combine, Assemble, Eval };
inline constexpr Stage kStages[] = {Stage::Ingest,      Stage::Encode,    Stage::Prompts, Stage::FitSurrogate,
                                    Stage::TrainTemporal, Stage::GenTemporal, Stage::GenFields, Stage::Combine,
                                    Stage::Assemble,    Stage::Eval};
std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view name);

/// A required upstream artifact is missing.
class StageOrderError : public std::runtime_error {
 public:
  StageOrderError(Stage needed, const std::string& artifact)
      : std::runtime_error("missing " + artifact + "; run '" + std::string(to_string(needed)) + "' first"), needed_(needed) {}
  Stage needed() const { return needed_; }

 private:
  Stage needed_;
};

/// An upstream artifact was produced under a different configuration.
class ConfigMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using StageLogger = std::function<void(Stage, const std::string&)>;

/// Workspace-relative files a stage reads and writes.
struct StageArtifacts {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};
StageArtifacts stage_artifacts(Stage s);

/// Runs one stage inside `workspace`. Progress lines go to `log` and, with wall-clock fields, to
/// `logs/stages.jsonl`; no other output depends on the clock.
void run_stage(Stage s, const PipelineConfig& cfg, const std::filesystem::path& workspace, const StageLogger& log = {});
void run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& workspace, const StageLogger& log = {});

}  // namespace ddsynth
