#include "ddsynth/field_bridge.hpp"

#include "ddsynth/hash.hpp"
#include "ddsynth/image_io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <stdexcept>

namespace ddsynth {

namespace {

namespace fs = std::filesystem;

bool in_category(const PacketRecord& p, View view, const std::string& category) {
  switch (view) {
    case View::Protocol: return to_string(p.protocol()) == category;
    case View::Subnet: return Subnet24::of(p.ip.dst).str() == category;
    case View::AttackType: return p.label == category;
  }
  return false;
}

std::map<std::string, std::string> category_map(const PromptSpec& spec) {
  std::map<std::string, std::string> out;
  for (const auto& [view, name] : spec.categories) out[std::string(to_string(view))] = name;
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text << '\n';
}

}  // namespace

std::string to_json_line(const ManifestEntry& e) {
  nlohmann::ordered_json j;
  j["image_path"] = e.image_path;
  j["prompt"] = e.prompt;
  j["phase"] = std::string(to_string(e.phase));
  j["view_categories"] = e.view_categories;
  j["layout_id"] = e.layout_id;
  j["row_count"] = e.row_count;
  return j.dump();
}

ManifestEntry parse_manifest_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  ManifestEntry e;
  e.image_path = j.at("image_path").get<std::string>();
  e.prompt = j.at("prompt").get<std::string>();
  const auto phase = j.at("phase").get<std::string>();
  if (phase == "train") e.phase = PromptPhase::Train;
  else if (phase == "generate") e.phase = PromptPhase::Generate;
  else throw std::invalid_argument("unknown manifest phase '" + phase + "'");
  e.view_categories = j.at("view_categories").get<std::map<std::string, std::string>>();
  e.layout_id = j.at("layout_id").get<std::string>();
  e.row_count = j.at("row_count").get<std::size_t>();
  return e;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& e : entries) out << to_json_line(e) << '\n';
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      out.push_back(parse_manifest_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ManifestEntry> export_training_pairs(const TraceDataset& dataset, const ViewCatalog& catalog,
                                                 const ColorTable& table, const fs::path& out_dir,
                                                 const FieldLayout& layout, const std::string& config_hash) {
  if (dataset.packets.empty()) throw std::invalid_argument("cannot export an empty dataset");
  fs::create_directories(out_dir / "train");
  std::vector<ManifestEntry> manifest;
  for (View view : kViews) {
    const auto& cats = catalog.categories(view);
    for (std::size_t j = 0; j < cats.size(); ++j) {
      std::vector<TernaryVector> rows;
      std::vector<std::string> protocols, labels;
      for (std::size_t i = 0; i < dataset.packets.size(); ++i) {
        const auto& p = dataset.packets[i];
        if (!in_category(p, view, cats[j])) continue;
        try {
          rows.push_back(encode_packet(p, layout));
        } catch (const EncodeError& e) {
          throw std::invalid_argument("packet " + std::to_string(i) + ": " + e.what());
        }
        protocols.emplace_back(to_string(p.protocol()));
        labels.push_back(p.label);
      }
      if (rows.empty()) continue;
      const auto prompt = training_prompt(view, j, catalog, table);
      const auto images = pack_images(rows);
      for (std::size_t w = 0; w < images.size(); ++w) {
        const std::string stem = "train/" + std::string(to_string(view)) + "-" + std::to_string(j) + "-" + std::to_string(w);
        const auto first = w * static_cast<std::size_t>(kMaxImageRows);
        const auto count = static_cast<std::size_t>(images[w].height());
        write_png(out_dir / (stem + ".png"), images[w].raster);
        ImageSidecar side;
        side.layout_id = layout.id();
        side.row_count = count;
        side.window_index = w;
        side.first_row = first;
        side.view_categories = category_map(prompt);
        side.row_protocols.assign(protocols.begin() + static_cast<std::ptrdiff_t>(first),
                                  protocols.begin() + static_cast<std::ptrdiff_t>(first + count));
        side.row_labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(first),
                               labels.begin() + static_cast<std::ptrdiff_t>(first + count));
        side.config_hash = config_hash;
        write_sidecar(out_dir / (stem + ".json"), side);
        write_text(out_dir / (stem + ".txt"), prompt.text);
        manifest.push_back({stem + ".png", prompt.text, PromptPhase::Train, side.view_categories, layout.id(), count});
      }
    }
  }
  write_manifest(out_dir / kManifestName, manifest);
  return manifest;
}

std::vector<ManifestEntry> generation_manifest(const TraceDataset& dataset, const ViewCatalog& catalog,
                                               const ColorTable& table, std::size_t images_per_prompt,
                                               std::size_t rows_per_image, const FieldLayout& layout) {
  if (rows_per_image < 1 || rows_per_image > static_cast<std::size_t>(kMaxImageRows))
    throw std::invalid_argument("rows per image must be in [1, " + std::to_string(kMaxImageRows) + "]");
  std::set<std::pair<std::string, Protocol>> pairs;
  for (const auto& p : dataset.packets) pairs.emplace(p.label, p.protocol());
  std::vector<ManifestEntry> out;
  for (const auto& [label, proto] : pairs) {
    const auto a = catalog.index_of(View::AttackType, label);
    const auto pr = catalog.index_of(View::Protocol, to_string(proto));
    const auto spec = generation_prompt({{View::Protocol, pr}, {View::AttackType, a}}, catalog, table);
    for (std::size_t k = 0; k < images_per_prompt; ++k) {
      ManifestEntry e;
      e.image_path = "gen-" + std::to_string(a) + "-" + std::string(to_string(proto)) + "-" + std::to_string(k) + ".png";
      e.prompt = spec.text;
      e.phase = PromptPhase::Generate;
      e.view_categories = category_map(spec);
      e.layout_id = layout.id();
      e.row_count = rows_per_image;
      out.push_back(std::move(e));
    }
  }
  return out;
}

void render_surrogate_images(const std::vector<ManifestEntry>& requests, const SurrogateModel& model,
                             const fs::path& base_dir, std::uint64_t seed) {
  for (std::size_t k = 0; k < requests.size(); ++k) {
    const auto& e = requests[k];
    if (e.layout_id != model.layout_id)
      throw std::invalid_argument("request " + e.image_path + " uses layout '" + e.layout_id + "' but the surrogate has '" +
                                  model.layout_id + "'");
    const SurrogateCategory cat{protocol_from_string(e.view_categories.at("protocol")), e.view_categories.at("attack_type")};
    const auto rows = sample_packets(model, cat, e.row_count, derive_seed(seed, k));
    const auto path = base_dir / e.image_path;
    fs::create_directories(path.parent_path());
    write_png(path, pack_image(rows).raster);
  }
}

std::size_t ImportResult::format_errors() const {
  std::size_t n = 0;
  for (const auto& r : images) n += !r.error.empty();
  return n;
}

double ImportResult::validity_rate() const {
  std::size_t rows = 0, valid = 0;
  for (const auto& r : images) {
    rows += r.rows;
    valid += r.valid;
  }
  return rows ? static_cast<double>(valid) / static_cast<double>(rows) : 0.0;
}

ImportResult import_generated_images(const std::vector<ManifestEntry>& manifest, const fs::path& base_dir,
                                     const FieldLayout& layout) {
  ImportResult result;
  for (const auto& e : manifest) {
    ImageReport report;
    report.image_path = e.image_path;
    const auto path = base_dir / e.image_path;
    RgbRaster raster;
    try {
      if (e.layout_id != layout.id()) throw std::invalid_argument("layout '" + e.layout_id + "' is not '" + layout.id() + "'");
      raster = read_png(path);
      if (raster.cols() != 3 * kNprintWidth)
        throw ImageSizeError("image is " + std::to_string(raster.cols() / 3) + " px wide, expected " +
                             std::to_string(kNprintWidth));
    } catch (const std::exception& ex) {
      report.error = ex.what();
      result.images.push_back(std::move(report));
      continue;
    }
    std::optional<ImageSidecar> side;
    if (fs::exists(sidecar_path(path))) side = read_sidecar(sidecar_path(path));
    const auto unpacked = unpack_raster(raster);
    report.rows = unpacked.rows.size();
    report.ambiguous_pixels = unpacked.ambiguous_pixels;
    const auto attack = e.view_categories.find("attack_type");
    for (std::size_t i = 0; i < unpacked.rows.size(); ++i) {
      auto d = decode_vector(unpacked.rows[i], layout);
      if (!d.decodable()) {
        ++report.undecodable;
        continue;
      }
      if (attack != e.view_categories.end()) d.packet->label = attack->second;
      else if (side && i < side->row_labels.size()) d.packet->label = side->row_labels[i];
      else d.packet->label = "generated";
      report.valid += validate_packet(*d.packet).pass();
      result.packets.push_back({std::move(*d.packet), e.view_categories});
    }
    result.images.push_back(std::move(report));
  }
  return result;
}

}  // namespace ddsynth
