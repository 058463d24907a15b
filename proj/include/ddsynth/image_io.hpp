#pragma once

#include "ddsynth/nprint.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ddsynth {

void write_png(const std::filesystem::path& path, const RgbRaster& raster);
/// Reads any 8/16-bit PNG and converts it to 8-bit RGB.
RgbRaster read_png(const std::filesystem::path& path);

/// Per-image manifest binding rows to categories.
struct ImageSidecar {
  std::string layout_id;
  std::size_t row_count = 0;
  std::vector<std::string> row_protocols;
  std::vector<std::string> row_labels;
  std::map<std::string, std::string> view_categories;
  std::size_t window_index = 0;
  std::size_t first_row = 0;
  std::string config_hash;
};

void write_sidecar(const std::filesystem::path& path, const ImageSidecar& sidecar);
ImageSidecar read_sidecar(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& image_path);

}  // namespace ddsynth
