#include "ddsynth/image_io.hpp"
#include "ddsynth/nprint.hpp"
#include "support/random_packets.hpp"

#include <doctest.h>

#include <filesystem>
#include <algorithm>
#include <cmath>
#include <random>

using namespace ddsynth;

namespace {

TernaryVector random_ternary(std::mt19937_64& rng) {
  TernaryVector v;
  for (int c = 0; c < kNprintWidth; ++c) v(c) = static_cast<std::int8_t>(static_cast<int>(rng() % 3) - 1);
  return v;
}

// Brute-force nearest of the three pure colors, written independently of the codec.
std::int8_t nearest_oracle(int r, int g, int b) {
  const int pure[3][3] = {{0, 0, 255}, {255, 0, 0}, {0, 255, 0}};
  int best = 0;
  long best_d = -1;
  for (int k = 0; k < 3; ++k) {
    const long d = (r - pure[k][0]) * (r - pure[k][0]) + (g - pure[k][1]) * (g - pure[k][1]) +
                   (b - pure[k][2]) * (b - pure[k][2]);
    if (best_d < 0 || d < best_d) best = k, best_d = d;
  }
  return static_cast<std::int8_t>(best - 1);
}

}  // namespace

TEST_CASE("layout spans are disjoint, ordered and cover every column") {
  const auto& layout = FieldLayout::standard();
  CHECK(layout.id() == "nprint-hdr-v1");
  int next = 0;
  for (Region r : {Region::Ipv4, Region::Tcp, Region::Udp, Region::Icmp, Region::Ipv4Options}) {
    CHECK(layout.span(r).begin == next);
    next = layout.span(r).end;
  }
  CHECK(next == kNprintWidth);

  std::vector<int> owner(kNprintWidth, 0);
  for (const auto& f : layout.fields()) {
    const auto span = layout.span(f.region);
    CHECK(span.contains(f.begin));
    CHECK(span.contains(f.begin + f.width - 1));
    for (int c = f.begin; c < f.begin + f.width; ++c) ++owner[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < kNprintWidth; ++c) CHECK(owner[static_cast<std::size_t>(c)] == 1);
}

TEST_CASE("ICMP encoding leaves tcp and udp spans absent") {
  const auto& layout = FieldLayout::standard();
  const auto v = encode_packet(make_icmp(1, 2, 8, 0));
  for (Region r : {Region::Tcp, Region::Udp, Region::Ipv4Options}) {
    const auto s = layout.span(r);
    CHECK((v.segment(s.begin, s.size()).array() == -1).all());
  }
  const auto icmp = layout.span(Region::Icmp);
  CHECK((v.segment(icmp.begin, icmp.size()).array() != -1).all());
}

TEST_CASE("SYN flag serializes at the SYN bit position") {
  const auto& f = FieldLayout::standard().field("tcp.flags");
  REQUIRE(f.width == 9);
  const auto v = encode_packet(make_tcp(1, 2, 3, 4, TcpHeader::kSYN));
  for (int i = 0; i < 9; ++i) CHECK(v(f.begin + i) == (i == 7 ? 1 : 0));
}

TEST_CASE("values wider than the field raise an error naming it") {
  auto p = make_tcp(1, 2, 3, 4, TcpHeader::kSYN);
  p.ip.ihl = 16;
  try {
    encode_packet(p);
    FAIL("expected EncodeError");
  } catch (const EncodeError& e) {
    CHECK(e.field() == "ipv4.ihl");
  }
  auto q = make_tcp(1, 2, 3, 4, TcpHeader::kSYN);
  std::get<TcpHeader>(q.l4).options.assign(44, 1);
  CHECK_THROWS_AS(encode_packet(q), EncodeError);
}

TEST_CASE("encode then decode reproduces every header field") {
  std::mt19937_64 rng(2024);
  for (Protocol proto : kAllProtocols)
    for (int i = 0; i < 300; ++i) {
      const auto p = ddsynth::testing::random_valid_packet(rng, proto);
      const auto d = decode_vector(encode_packet(p));
      REQUIRE(d.decodable());
      CHECK(d.holes == 0);
      CHECK(same_headers(*d.packet, p));
      CHECK(d.packet->timestamp == 0.0);
    }
}

TEST_CASE("absent columns make a row undecodable") {
  CHECK_FALSE(decode_vector(TernaryVector::Constant(-1)).decodable());
  CHECK_FALSE(infer_protocol(TernaryVector::Constant(-1)).has_value());
}

TEST_CASE("zeroed data offset decodes into a packet failing R5") {
  auto v = encode_packet(make_tcp(1, 2, 3, 4, TcpHeader::kSYN));
  const auto& f = FieldLayout::standard().field("tcp.data_offset");
  for (int i = 0; i < f.width; ++i) v(f.begin + i) = 0;
  const auto d = decode_vector(v);
  REQUIRE(d.decodable());
  CHECK(d.packet->protocol() == Protocol::TCP);
  const auto verdict = validate_packet(*d.packet);
  CHECK(std::find(verdict.violated.begin(), verdict.violated.end(), Rule::R5) != verdict.violated.end());
}

TEST_CASE("holes inside a claimed span read as zero and are counted") {
  auto v = encode_packet(make_udp(1, 2, 53, 53, 10));
  const auto& f = FieldLayout::standard().field("udp.checksum");
  for (int i = 0; i < 4; ++i) v(f.begin + i) = -1;
  const auto d = decode_vector(v);
  REQUIRE(d.decodable());
  CHECK(d.holes == 4);
  CHECK(d.packet->protocol() == Protocol::UDP);
}

TEST_CASE("every encoded row obeys the ternary and absent-span invariants") {
  std::mt19937_64 rng(5);
  const auto& layout = FieldLayout::standard();
  for (Protocol proto : kAllProtocols)
    for (int i = 0; i < 50; ++i) {
      const auto v = encode_packet(ddsynth::testing::random_valid_packet(rng, proto));
      CHECK(((v.array() >= -1) && (v.array() <= 1)).all());
      for (Protocol other : kAllProtocols) {
        if (other == proto) continue;
        const auto s = layout.protocol_span(other);
        CHECK((v.segment(s.begin, s.size()).array() == -1).all());
      }
      CHECK(infer_protocol(v) == proto);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("pack of one row has height one") {
  std::mt19937_64 rng(1);
  const auto v = random_ternary(rng);
  const auto img = pack_image({v});
  CHECK(img.height() == 1);
  CHECK(img.ternary.row(0).transpose() == v);
  CHECK(unpack_image(img).rows == std::vector<TernaryVector>{v});
}

TEST_CASE("raster pixels are the three pure colors") {
  std::mt19937_64 rng(3);
  std::vector<TernaryVector> rows;
  for (int i = 0; i < 8; ++i) rows.push_back(random_ternary(rng));
  const auto img = pack_image(rows);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < kNprintWidth; ++c) CHECK(pixel_at(img.raster, r, c) == ternary_color(img.ternary(r, c)));
}

TEST_CASE("nearest-color rule") {
  CHECK(nearest_ternary({250, 5, 5}).value == 0);
  CHECK_FALSE(nearest_ternary({250, 5, 5}).ambiguous);
  CHECK(nearest_ternary({5, 250, 5}).value == 1);
  CHECK(nearest_ternary({5, 5, 250}).value == -1);
  // (0,0,0) is equidistant from all three: blue wins.
  const auto tie = nearest_ternary({0, 0, 0});
  CHECK(tie.value == -1);
  CHECK(tie.ambiguous);
  // Equidistant from red and green only.
  const auto rg = nearest_ternary({128, 128, 200});
  CHECK(rg.value == -1);
  const auto rg2 = nearest_ternary({200, 200, 0});
  CHECK(rg2.value == 0);
  CHECK(rg2.ambiguous);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 20000; ++i) {
    const int r = static_cast<int>(rng() % 256), g = static_cast<int>(rng() % 256), b = static_cast<int>(rng() % 256);
    CHECK(nearest_ternary({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)}).value ==
          nearest_oracle(r, g, b));
  }
}

TEST_CASE("ternary to color map is injective") {
  CHECK(ternary_color(-1) != ternary_color(0));
  CHECK(ternary_color(0) != ternary_color(1));
  CHECK(ternary_color(-1) != ternary_color(1));
  for (std::int8_t t : {-1, 0, 1}) CHECK(nearest_ternary(ternary_color(t)).value == t);
}

TEST_CASE("image size limits") {
  CHECK_THROWS_AS(pack_image({}), ImageSizeError);
  std::vector<TernaryVector> rows(1025, TernaryVector::Constant(0));
  CHECK_THROWS_AS(pack_image(rows), ImageSizeError);
  const auto windows = pack_images(rows);
  REQUIRE(windows.size() == 2);
  CHECK(windows[0].height() == 1024);
  CHECK(windows[1].height() == 1);
  CHECK_THROWS_AS(unpack_raster(RgbRaster::Zero(2, 30)), ImageSizeError);
}

TEST_CASE("noisy raster unpacks to the original ternary matrix") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> noise(-20, 20);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<TernaryVector> rows;
    for (int i = 0; i < 64; ++i) rows.push_back(random_ternary(rng));
    auto img = pack_image(rows);
    for (Eigen::Index i = 0; i < img.raster.size(); ++i) {
      const int v = std::clamp(int{img.raster.data()[i]} + noise(rng), 0, 255);
      img.raster.data()[i] = static_cast<std::uint8_t>(v);
    }
    const auto out = unpack_image(img);
    CHECK(out.ambiguous_pixels == 0);
    CHECK(out.rows == rows);
  }
}

TEST_CASE("png and sidecar files round trip") {
  std::mt19937_64 rng(8);
  std::vector<TernaryVector> rows;
  for (int i = 0; i < 10; ++i) rows.push_back(random_ternary(rng));
  const auto img = pack_image(rows);
  const auto dir = std::filesystem::temp_directory_path() / "ddsynth_test_nprint";
  std::filesystem::create_directories(dir);
  const auto path = dir / "img.png";
  write_png(path, img.raster);
  const auto back = read_png(path);
  CHECK(back == img.raster);
  CHECK(unpack_raster(back).rows == rows);

  ImageSidecar s;
  s.layout_id = FieldLayout::standard().id();
  s.row_count = 10;
  s.row_protocols.assign(10, "TCP");
  s.row_labels.assign(10, "syn-flood");
  s.view_categories = {{"protocol", "TCP"}};
  s.window_index = 2;
  s.first_row = 2048;
  s.config_hash = "00000000000000ff";
  write_sidecar(sidecar_path(path), s);
  const auto t = read_sidecar(dir / "img.json");
  CHECK(t.layout_id == s.layout_id);
  CHECK(t.row_count == 10);
  CHECK(t.row_labels == s.row_labels);
  CHECK(t.view_categories == s.view_categories);
  CHECK(t.window_index == 2);
  CHECK(t.first_row == 2048);
  CHECK(t.config_hash == s.config_hash);
  std::filesystem::remove_all(dir);
}
