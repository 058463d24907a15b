#include "ddsynth/nprint.hpp"

#include <algorithm>

namespace ddsynth {

namespace {

constexpr ColumnSpan kIpv4{0, 160};
constexpr ColumnSpan kTcp{160, 640};
constexpr ColumnSpan kUdp{640, 704};
constexpr ColumnSpan kIcmp{704, 768};
constexpr ColumnSpan kIpv4Options{768, 1088};

}  // namespace

FieldLayout::FieldLayout() : id_("nprint-hdr-v1") {
  spans_ = {kIpv4, kTcp, kUdp, kIcmp, kIpv4Options};
  auto add = [this](std::string name, Region region, int begin, int width) {
    fields_.push_back({std::move(name), region, begin, width});
  };
  add("ipv4.version", Region::Ipv4, 0, 4);
  add("ipv4.ihl", Region::Ipv4, 4, 4);
  add("ipv4.tos", Region::Ipv4, 8, 8);
  add("ipv4.total_length", Region::Ipv4, 16, 16);
  add("ipv4.id", Region::Ipv4, 32, 16);
  add("ipv4.flags", Region::Ipv4, 48, 3);
  add("ipv4.frag_offset", Region::Ipv4, 51, 13);
  add("ipv4.ttl", Region::Ipv4, 64, 8);
  add("ipv4.proto", Region::Ipv4, 72, 8);
  add("ipv4.checksum", Region::Ipv4, 80, 16);
  add("ipv4.src", Region::Ipv4, 96, 32);
  add("ipv4.dst", Region::Ipv4, 128, 32);

  add("tcp.sport", Region::Tcp, 160, 16);
  add("tcp.dport", Region::Tcp, 176, 16);
  add("tcp.seq", Region::Tcp, 192, 32);
  add("tcp.ack", Region::Tcp, 224, 32);
  add("tcp.data_offset", Region::Tcp, 256, 4);
  add("tcp.reserved", Region::Tcp, 260, 3);
  add("tcp.flags", Region::Tcp, 263, 9);
  add("tcp.window", Region::Tcp, 272, 16);
  add("tcp.checksum", Region::Tcp, 288, 16);
  add("tcp.urgent", Region::Tcp, 304, 16);
  add("tcp.options", Region::Tcp, 320, 320);

  add("udp.sport", Region::Udp, 640, 16);
  add("udp.dport", Region::Udp, 656, 16);
  add("udp.length", Region::Udp, 672, 16);
  add("udp.checksum", Region::Udp, 688, 16);

  add("icmp.type", Region::Icmp, 704, 8);
  add("icmp.code", Region::Icmp, 712, 8);
  add("icmp.checksum", Region::Icmp, 720, 16);
  add("icmp.rest", Region::Icmp, 736, 32);

  add("ipv4.options", Region::Ipv4Options, 768, 320);
}

const FieldLayout& FieldLayout::standard() {
  static const FieldLayout layout;
  return layout;
}

ColumnSpan FieldLayout::core_span(Protocol p) const {
  switch (p) {
    case Protocol::TCP: return {span(Region::Tcp).begin, span(Region::Tcp).begin + 160};
    case Protocol::UDP: return span(Region::Udp);
    case Protocol::ICMP: return span(Region::Icmp);
  }
  return {};
}

ColumnSpan FieldLayout::protocol_span(Protocol p) const {
  switch (p) {
    case Protocol::TCP: return span(Region::Tcp);
    case Protocol::UDP: return span(Region::Udp);
    case Protocol::ICMP: return span(Region::Icmp);
  }
  return {};
}

const FieldSpec& FieldLayout::field(const std::string& name) const {
  auto it = std::find_if(fields_.begin(), fields_.end(), [&](const FieldSpec& f) { return f.name == name; });
  if (it == fields_.end()) throw std::out_of_range("unknown layout field '" + name + "'");
  return *it;
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

class BitWriter {
 public:
  BitWriter(TernaryVector& v, const FieldLayout& layout) : v_(v), layout_(layout) {}

  void put(const std::string& name, std::uint64_t value) {
    const auto& f = layout_.field(name);
    if (f.width < 64 && (value >> f.width) != 0) throw EncodeError(name);
    for (int i = 0; i < f.width; ++i)
      v_(f.begin + i) = static_cast<std::int8_t>((value >> (f.width - 1 - i)) & 1u);
  }

 private:
  TernaryVector& v_;
  const FieldLayout& layout_;
};

class BitReader {
 public:
  BitReader(const TernaryVector& v, const FieldLayout& layout) : v_(v), layout_(layout) {}

  std::uint64_t get(const std::string& name) {
    const auto& f = layout_.field(name);
    return read(f.begin, f.width);
  }

  std::uint64_t read(int begin, int width) {
    std::uint64_t value = 0;
    for (int i = 0; i < width; ++i) {
      const auto bit = v_(begin + i);
      if (bit < 0) ++holes;
      value = (value << 1) | (bit == 1 ? 1u : 0u);
    }
    return value;
  }

  std::size_t holes = 0;

 private:
  const TernaryVector& v_;
  const FieldLayout& layout_;
};

}  // namespace

TernaryVector encode_packet(const PacketRecord& p, const FieldLayout& layout) {
  TernaryVector v = TernaryVector::Constant(-1);
  BitWriter w(v, layout);
  const auto& ip = p.ip;
  w.put("ipv4.version", ip.version);
  w.put("ipv4.ihl", ip.ihl);
  w.put("ipv4.tos", ip.tos);
  w.put("ipv4.total_length", ip.total_length);
  w.put("ipv4.id", ip.id);
  w.put("ipv4.flags", ip.flags);
  w.put("ipv4.frag_offset", ip.frag_offset);
  w.put("ipv4.ttl", ip.ttl);
  w.put("ipv4.proto", ip.proto);
  w.put("ipv4.checksum", ip.checksum);
  w.put("ipv4.src", ip.src);
  w.put("ipv4.dst", ip.dst);

  if (const auto* tcp = p.tcp()) {
    w.put("tcp.sport", p.src_port.value_or(0));
    w.put("tcp.dport", p.dst_port.value_or(0));
    w.put("tcp.seq", tcp->seq);
    w.put("tcp.ack", tcp->ack);
    w.put("tcp.data_offset", tcp->data_offset);
    w.put("tcp.reserved", tcp->reserved);
    w.put("tcp.flags", tcp->flags);
    w.put("tcp.window", tcp->window);
    w.put("tcp.checksum", tcp->checksum);
    w.put("tcp.urgent", tcp->urgent);
    const auto opts = layout.tcp_options();
    if (static_cast<int>(tcp->options.size()) * 8 > opts.size()) throw EncodeError("tcp.options");
    for (std::size_t byte = 0; byte < tcp->options.size(); ++byte)
      for (int bit = 0; bit < 8; ++bit)
        v(opts.begin + static_cast<int>(byte) * 8 + bit) = static_cast<std::int8_t>((tcp->options[byte] >> (7 - bit)) & 1);
  } else if (const auto* udp = p.udp()) {
    w.put("udp.sport", p.src_port.value_or(0));
    w.put("udp.dport", p.dst_port.value_or(0));
    w.put("udp.length", udp->length);
    w.put("udp.checksum", udp->checksum);
  } else if (const auto* icmp = p.icmp()) {
    w.put("icmp.type", icmp->type);
    w.put("icmp.code", icmp->code);
    w.put("icmp.checksum", icmp->checksum);
    w.put("icmp.rest", icmp->rest);
  }
  return v;
}

std::optional<Protocol> infer_protocol(const TernaryVector& v, const FieldLayout& layout) {
  std::optional<Protocol> best;
  double best_fraction = 0.0;
  for (Protocol p : kAllProtocols) {
    const auto span = layout.core_span(p);
    const auto live = (v.segment(span.begin, span.size()).array() != -1).count();
    const double fraction = static_cast<double>(live) / span.size();
    if (2 * live > span.size() && fraction > best_fraction) {
      best = p;
      best_fraction = fraction;
    }
  }
  return best;
}

DecodeResult decode_vector(const TernaryVector& v, const FieldLayout& layout) {
  DecodeResult result;
  const auto proto = infer_protocol(v, layout);
  if (!proto) return result;

  BitReader r(v, layout);
  PacketRecord p;
  p.timestamp = 0.0;
  p.label.clear();
  auto& ip = p.ip;
  ip.version = static_cast<std::uint8_t>(r.get("ipv4.version"));
  ip.ihl = static_cast<std::uint8_t>(r.get("ipv4.ihl"));
  ip.tos = static_cast<std::uint8_t>(r.get("ipv4.tos"));
  ip.total_length = static_cast<std::uint16_t>(r.get("ipv4.total_length"));
  ip.id = static_cast<std::uint16_t>(r.get("ipv4.id"));
  ip.flags = static_cast<std::uint8_t>(r.get("ipv4.flags"));
  ip.frag_offset = static_cast<std::uint16_t>(r.get("ipv4.frag_offset"));
  ip.ttl = static_cast<std::uint8_t>(r.get("ipv4.ttl"));
  ip.proto = static_cast<std::uint8_t>(r.get("ipv4.proto"));
  ip.checksum = static_cast<std::uint16_t>(r.get("ipv4.checksum"));
  ip.src = static_cast<std::uint32_t>(r.get("ipv4.src"));
  ip.dst = static_cast<std::uint32_t>(r.get("ipv4.dst"));

  switch (*proto) {
    case Protocol::TCP: {
      TcpHeader tcp;
      p.src_port = static_cast<std::uint16_t>(r.get("tcp.sport"));
      p.dst_port = static_cast<std::uint16_t>(r.get("tcp.dport"));
      tcp.seq = static_cast<std::uint32_t>(r.get("tcp.seq"));
      tcp.ack = static_cast<std::uint32_t>(r.get("tcp.ack"));
      tcp.data_offset = static_cast<std::uint8_t>(r.get("tcp.data_offset"));
      tcp.reserved = static_cast<std::uint8_t>(r.get("tcp.reserved"));
      tcp.flags = static_cast<std::uint16_t>(r.get("tcp.flags"));
      tcp.window = static_cast<std::uint16_t>(r.get("tcp.window"));
      tcp.checksum = static_cast<std::uint16_t>(r.get("tcp.checksum"));
      tcp.urgent = static_cast<std::uint16_t>(r.get("tcp.urgent"));
      // Option bytes run until the first byte that is mostly absent.
      const auto opts = layout.tcp_options();
      for (int byte = 0; byte * 8 < opts.size(); ++byte) {
        const int begin = opts.begin + byte * 8;
        const auto live = (v.segment(begin, 8).array() != -1).count();
        if (2 * live <= 8) break;
        tcp.options.push_back(static_cast<std::uint8_t>(r.read(begin, 8)));
      }
      p.l4 = std::move(tcp);
      break;
    }
    case Protocol::UDP: {
      p.src_port = static_cast<std::uint16_t>(r.get("udp.sport"));
      p.dst_port = static_cast<std::uint16_t>(r.get("udp.dport"));
      UdpHeader udp;
      udp.length = static_cast<std::uint16_t>(r.get("udp.length"));
      udp.checksum = static_cast<std::uint16_t>(r.get("udp.checksum"));
      p.l4 = udp;
      break;
    }
    case Protocol::ICMP: {
      IcmpHeader icmp;
      icmp.type = static_cast<std::uint8_t>(r.get("icmp.type"));
      icmp.code = static_cast<std::uint8_t>(r.get("icmp.code"));
      icmp.checksum = static_cast<std::uint16_t>(r.get("icmp.checksum"));
      icmp.rest = static_cast<std::uint32_t>(r.get("icmp.rest"));
      p.l4 = icmp;
      break;
    }
  }
  result.holes = r.holes;
  result.packet = std::move(p);
  return result;
}

// ---------------------------------------------------------------------------
// Images

Rgb ternary_color(std::int8_t value) {
  if (value < 0) return kColorAbsent;
  return value == 0 ? kColorZero : kColorOne;
}

NearestColor nearest_ternary(Rgb px) {
  auto dist2 = [&](Rgb c) {
    const int dr = int{px.r} - c.r, dg = int{px.g} - c.g, db = int{px.b} - c.b;
    return dr * dr + dg * dg + db * db;
  };
  const std::array<int, 3> d = {dist2(kColorAbsent), dist2(kColorZero), dist2(kColorOne)};
  const auto best = std::min_element(d.begin(), d.end()) - d.begin();
  const bool ambiguous = std::count(d.begin(), d.end(), d[static_cast<std::size_t>(best)]) > 1;
  return {static_cast<std::int8_t>(best - 1), ambiguous};
}

RgbRaster render_raster(const TernaryMatrix& ternary) {
  RgbRaster raster(ternary.rows(), 3 * kNprintWidth);
  for (Eigen::Index r = 0; r < ternary.rows(); ++r)
    for (int c = 0; c < kNprintWidth; ++c) {
      const Rgb px = ternary_color(ternary(r, c));
      raster(r, 3 * c) = px.r;
      raster(r, 3 * c + 1) = px.g;
      raster(r, 3 * c + 2) = px.b;
    }
  return raster;
}

BitImage pack_image(const std::vector<TernaryVector>& rows) {
  if (rows.empty()) throw ImageSizeError("cannot pack an image with zero rows");
  if (rows.size() > static_cast<std::size_t>(kMaxImageRows))
    throw ImageSizeError("image has " + std::to_string(rows.size()) + " rows; at most 1024 allowed");
  BitImage img;
  img.ternary.resize(static_cast<Eigen::Index>(rows.size()), kNprintWidth);
  for (std::size_t i = 0; i < rows.size(); ++i) img.ternary.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  img.raster = render_raster(img.ternary);
  return img;
}

std::vector<BitImage> pack_images(const std::vector<TernaryVector>& rows) {
  std::vector<BitImage> out;
  for (std::size_t first = 0; first < rows.size(); first += kMaxImageRows) {
    const auto last = std::min(rows.size(), first + kMaxImageRows);
    out.push_back(pack_image(std::vector<TernaryVector>(rows.begin() + static_cast<std::ptrdiff_t>(first),
                                                        rows.begin() + static_cast<std::ptrdiff_t>(last))));
  }
  return out;
}

UnpackResult unpack_raster(const RgbRaster& raster) {
  if (raster.cols() != 3 * kNprintWidth)
    throw ImageSizeError("raster must be exactly 1088 pixels wide, got " + std::to_string(raster.cols() / 3));
  if (raster.rows() > kMaxImageRows) throw ImageSizeError("raster taller than 1024 rows");
  UnpackResult out;
  out.rows.resize(static_cast<std::size_t>(raster.rows()));
  for (Eigen::Index r = 0; r < raster.rows(); ++r) {
    auto& row = out.rows[static_cast<std::size_t>(r)];
    for (int c = 0; c < kNprintWidth; ++c) {
      const auto nearest = nearest_ternary(pixel_at(raster, static_cast<int>(r), c));
      row(c) = nearest.value;
      if (nearest.ambiguous) ++out.ambiguous_pixels;
    }
  }
  return out;
}

}  // namespace ddsynth
