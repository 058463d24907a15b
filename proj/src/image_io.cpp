#include "ddsynth/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace ddsynth {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::filesystem::path& path, const RgbRaster& raster) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng error writing " + path.string());
  }
  png_init_io(png, fp.get());
  const auto width = static_cast<png_uint_32>(raster.cols() / 3);
  const auto height = static_cast<png_uint_32>(raster.rows());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 r = 0; r < height; ++r) {
    auto* row = const_cast<png_bytep>(raster.data() + static_cast<std::ptrdiff_t>(r) * raster.cols());
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RgbRaster read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng error reading " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  RgbRaster raster(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width) * 3);
  for (png_uint_32 r = 0; r < height; ++r) png_read_row(png, raster.data() + static_cast<std::ptrdiff_t>(r) * raster.cols(), nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return raster;
}

std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
  auto p = image_path;
  p.replace_extension(".json");
  return p;
}

void write_sidecar(const std::filesystem::path& path, const ImageSidecar& s) {
  nlohmann::ordered_json j;
  j["layout_id"] = s.layout_id;
  j["row_count"] = s.row_count;
  j["window_index"] = s.window_index;
  j["first_row"] = s.first_row;
  j["view_categories"] = s.view_categories;
  j["row_protocols"] = s.row_protocols;
  j["row_labels"] = s.row_labels;
  j["config_hash"] = s.config_hash;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

ImageSidecar read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sidecar " + path.string());
  const auto j = nlohmann::json::parse(in);
  ImageSidecar s;
  s.layout_id = j.at("layout_id").get<std::string>();
  s.row_count = j.at("row_count").get<std::size_t>();
  s.window_index = j.value("window_index", std::size_t{0});
  s.first_row = j.value("first_row", std::size_t{0});
  s.view_categories = j.value("view_categories", std::map<std::string, std::string>{});
  s.row_protocols = j.value("row_protocols", std::vector<std::string>{});
  s.row_labels = j.value("row_labels", std::vector<std::string>{});
  s.config_hash = j.value("config_hash", std::string{});
  return s;
}

}  // namespace ddsynth
