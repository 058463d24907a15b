#pragma once

#include "ddsynth/packet.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddsynth {

inline constexpr int kNprintWidth = 1088;
inline constexpr int kMaxImageRows = 1024;

/// One packet as a fixed-width ternary row: 1 / 0 for present header bits, -1 for absent.
using TernaryVector = Eigen::Matrix<std::int8_t, kNprintWidth, 1>;
/// Rows are packets.
using TernaryMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, kNprintWidth, Eigen::RowMajor>;
/// Interleaved 8-bit RGB, `3 * kNprintWidth` columns per row.
using RgbRaster = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Region : std::uint8_t { Ipv4, Tcp, Udp, Icmp, Ipv4Options };

struct ColumnSpan {
  int begin = 0;
  int end = 0;  // exclusive
  int size() const { return end - begin; }
  bool contains(int col) const { return col >= begin && col < end; }
};

struct FieldSpec {
  std::string name;
  Region region;
  int begin;  // first column, MSB
  int width;  // bits
};

/// Column layout of the ternary encoding. Spans are disjoint, ordered and cover [0, 1088):
///   ipv4 0-159, tcp 160-639 (fixed header 160-319, options 320-639), udp 640-703,
///   icmp 704-767, ipv4 options 768-1087.
class FieldLayout {
 public:
  static const FieldLayout& standard();

  const std::string& id() const { return id_; }
  ColumnSpan span(Region r) const { return spans_[static_cast<std::size_t>(r)]; }
  /// Fixed-header part of a layer-4 span; used to decide which protocol a row carries.
  ColumnSpan core_span(Protocol p) const;
  ColumnSpan protocol_span(Protocol p) const;
  const FieldSpec& field(const std::string& name) const;
  const std::vector<FieldSpec>& fields() const { return fields_; }
  ColumnSpan tcp_options() const { return {span(Region::Tcp).begin + 160, span(Region::Tcp).end}; }

 private:
  FieldLayout();
  std::string id_;
  std::array<ColumnSpan, 5> spans_;
  std::vector<FieldSpec> fields_;
};

class EncodeError : public std::invalid_argument {
 public:
  explicit EncodeError(const std::string& field)
      : std::invalid_argument("value of field '" + field + "' exceeds its bit width"), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

TernaryVector encode_packet(const PacketRecord& p, const FieldLayout& layout = FieldLayout::standard());

struct DecodeResult {
  std::optional<PacketRecord> packet;  // nullopt: undecodable row
  std::size_t holes = 0;               // -1 entries read as 0 inside claimed spans
  bool decodable() const { return packet.has_value(); }
};

/// Total decoder for arbitrary ternary rows, including noisy generated ones.
DecodeResult decode_vector(const TernaryVector& v, const FieldLayout& layout = FieldLayout::standard());

/// Protocol whose fixed-header span is majority non-(-1); nullopt when none is.
std::optional<Protocol> infer_protocol(const TernaryVector& v, const FieldLayout& layout = FieldLayout::standard());

// ---------------------------------------------------------------------------
// Images

struct Rgb {
  std::uint8_t r, g, b;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kColorAbsent{0, 0, 255};  // -1
inline constexpr Rgb kColorZero{255, 0, 0};    //  0
inline constexpr Rgb kColorOne{0, 255, 0};     //  1

Rgb ternary_color(std::int8_t value);

struct NearestColor {
  std::int8_t value;
  bool ambiguous;
};
/// Nearest of the three pure colors in RGB Euclidean distance; ties resolve blue < red < green.
NearestColor nearest_ternary(Rgb pixel);

struct BitImage {
  TernaryMatrix ternary;
  RgbRaster raster;
  int height() const { return static_cast<int>(ternary.rows()); }
};

class ImageSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

BitImage pack_image(const std::vector<TernaryVector>& rows);
RgbRaster render_raster(const TernaryMatrix& ternary);

struct UnpackResult {
  std::vector<TernaryVector> rows;
  std::size_t ambiguous_pixels = 0;
};
UnpackResult unpack_raster(const RgbRaster& raster);
inline UnpackResult unpack_image(const BitImage& img) { return unpack_raster(img.raster); }

/// Splits rows into consecutive windows of at most 1024 rows.
std::vector<BitImage> pack_images(const std::vector<TernaryVector>& rows);

inline Rgb pixel_at(const RgbRaster& raster, int row, int col) {
  return {raster(row, 3 * col), raster(row, 3 * col + 1), raster(row, 3 * col + 2)};
}

}  // namespace ddsynth
