#pragma once

#include "ddsynth/nprint.hpp"
#include "ddsynth/prompt.hpp"
#include "ddsynth/surrogate.hpp"
#include "ddsynth/trace.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ddsynth {

/// One line of the prompt/image manifest shared with the external image generator.
/// `image_path` is relative to the manifest's directory.
struct ManifestEntry {
  std::string image_path;
  std::string prompt;
  PromptPhase phase = PromptPhase::Train;
  std::map<std::string, std::string> view_categories;
  std::string layout_id;
  std::size_t row_count = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

std::string to_json_line(const ManifestEntry& e);
ManifestEntry parse_manifest_line(const std::string& line);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

inline constexpr const char* kManifestName = "manifest.jsonl";

/// Writes one image (plus sidecar and prompt text) per 1024-row window of every single-view
/// category, and `manifest.jsonl`, under `out_dir`.
std::vector<ManifestEntry> export_training_pairs(const TraceDataset& dataset, const ViewCatalog& catalog,
                                                 const ColorTable& table, const std::filesystem::path& out_dir,
                                                 const FieldLayout& layout = FieldLayout::standard(),
                                                 const std::string& config_hash = {});

/// Generation requests: one multi-view prompt per (protocol, attack type) pair present in the data,
/// `images_per_prompt` images of `rows_per_image` rows each. Image paths are bare file names, relative to
/// the directory the images are generated into.
std::vector<ManifestEntry> generation_manifest(const TraceDataset& dataset, const ViewCatalog& catalog,
                                               const ColorTable& table, std::size_t images_per_prompt,
                                               std::size_t rows_per_image,
                                               const FieldLayout& layout = FieldLayout::standard());

/// Fulfils generation requests with the surrogate in place of the image model.
void render_surrogate_images(const std::vector<ManifestEntry>& requests, const SurrogateModel& model,
                             const std::filesystem::path& base_dir, std::uint64_t seed);

struct ImportedPacket {
  PacketRecord packet;
  std::map<std::string, std::string> categories;
};

struct ImageReport {
  std::string image_path;
  std::size_t rows = 0;
  std::size_t undecodable = 0;
  std::size_t valid = 0;
  std::size_t ambiguous_pixels = 0;
  std::string error;  // non-empty: the file was rejected

  double undecodable_rate() const { return rows ? static_cast<double>(undecodable) / static_cast<double>(rows) : 0.0; }
  double validity_rate() const { return rows ? static_cast<double>(valid) / static_cast<double>(rows) : 0.0; }
};

struct ImportResult {
  std::vector<ImportedPacket> packets;
  std::vector<ImageReport> images;

  std::size_t format_errors() const;
  /// Valid rows over all rows of accepted images.
  double validity_rate() const;
};

/// Unpacks and decodes every listed image. Row labels come from the attack-type category, then the
/// sidecar, then "generated". Undecodable rows are counted and dropped.
ImportResult import_generated_images(const std::vector<ManifestEntry>& manifest, const std::filesystem::path& base_dir,
                                     const FieldLayout& layout = FieldLayout::standard());

}  // namespace ddsynth
