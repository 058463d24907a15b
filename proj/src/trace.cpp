#include "ddsynth/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ddsynth {

AttackCatalog::AttackCatalog(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  for (std::size_t i = 0; i < labels_.size(); ++i) ids_.emplace(labels_[i], i);
}

std::size_t AttackCatalog::id(const std::string& label) const {
  auto it = ids_.find(label);
  if (it == ids_.end()) throw std::out_of_range("unknown attack type '" + label + "'");
  return it->second;
}

AttackCatalog TraceDataset::attack_catalog() const {
  std::vector<std::string> labels;
  labels.reserve(packets.size());
  for (const auto& p : packets) labels.push_back(p.label);
  return AttackCatalog(std::move(labels));
}

void normalize_time(TraceDataset& dataset) {
  auto& pk = dataset.packets;
  std::stable_sort(pk.begin(), pk.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });
  if (pk.empty()) return;
  const double t0 = pk.front().timestamp;
  if (t0 == 0.0) return;
  for (auto& p : pk) p.timestamp -= t0;
  dataset.epoch += t0;
}

// ---------------------------------------------------------------------------
// Label rules

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

template <typename T>
T parse_uint(std::string_view text, const std::string& what) {
  unsigned long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw std::invalid_argument("unparsable " + what + " '" + std::string(text) + "'");
  return static_cast<T>(v);
}

std::pair<std::uint32_t, std::uint32_t> parse_cidr(const std::string& text) {
  auto slash = text.find('/');
  const std::uint32_t addr = parse_ipv4(text.substr(0, slash));
  unsigned len = 32;
  if (slash != std::string::npos) len = parse_uint<unsigned>(std::string_view(text).substr(slash + 1), "prefix length");
  if (len > 32) throw std::invalid_argument("prefix length out of range in '" + text + "'");
  const std::uint32_t mask = len == 0 ? 0u : ~std::uint32_t{0} << (32 - len);
  return {addr & mask, mask};
}

std::pair<unsigned, unsigned> parse_range(const std::string& text) {
  auto dash = text.find('-');
  if (dash == std::string::npos) {
    auto v = parse_uint<unsigned>(text, "port");
    return {v, v};
  }
  return {parse_uint<unsigned>(std::string_view(text).substr(0, dash), "port"),
          parse_uint<unsigned>(std::string_view(text).substr(dash + 1), "port")};
}

std::uint16_t parse_tcp_flag_letters(const std::string& letters) {
  std::uint16_t flags = 0;
  for (char c : letters) {
    switch (std::toupper(static_cast<unsigned char>(c))) {
      case 'F': flags |= TcpHeader::kFIN; break;
      case 'S': flags |= TcpHeader::kSYN; break;
      case 'R': flags |= TcpHeader::kRST; break;
      case 'P': flags |= TcpHeader::kPSH; break;
      case 'A': flags |= TcpHeader::kACK; break;
      case 'U': flags |= TcpHeader::kURG; break;
      case 'E': flags |= TcpHeader::kECE; break;
      case 'C': flags |= TcpHeader::kCWR; break;
      case 'N': flags |= TcpHeader::kNS; break;
      default: throw std::invalid_argument(std::string("unknown TCP flag letter '") + c + "'");
    }
  }
  return flags;
}

std::function<bool(const PacketRecord&)> compile_term(const std::string& term) {
  auto eq = term.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("label rule term without '=': '" + term + "'");
  const std::string key = lower(trim(term.substr(0, eq)));
  const std::string value = trim(term.substr(eq + 1));
  if (key == "proto") {
    const Protocol proto = protocol_from_string(value);
    return [proto](const PacketRecord& p) { return p.protocol() == proto; };
  }
  if (key == "src" || key == "dst") {
    auto [net, mask] = parse_cidr(value);
    const bool src = key == "src";
    return [=](const PacketRecord& p) { return ((src ? p.ip.src : p.ip.dst) & mask) == net; };
  }
  if (key == "sport" || key == "dport") {
    auto [lo, hi] = parse_range(value);
    const bool src = key == "sport";
    return [=](const PacketRecord& p) {
      const auto& port = src ? p.src_port : p.dst_port;
      return port && *port >= lo && *port <= hi;
    };
  }
  if (key == "tcpflags") {
    const auto flags = parse_tcp_flag_letters(value);
    return [flags](const PacketRecord& p) { return p.tcp() && p.tcp()->flags == flags; };
  }
  if (key == "tcphas") {
    const auto flags = parse_tcp_flag_letters(value);
    return [flags](const PacketRecord& p) { return p.tcp() && (p.tcp()->flags & flags) == flags; };
  }
  if (key == "icmptype") {
    const auto type = parse_uint<unsigned>(value, "icmp type");
    return [type](const PacketRecord& p) { return p.icmp() && p.icmp()->type == type; };
  }
  throw std::invalid_argument("unknown label rule key '" + key + "'");
}

}  // namespace

bool LabelRule::matches(const PacketRecord& p) const {
  return std::all_of(predicates.begin(), predicates.end(), [&](const auto& pred) { return pred(p); });
}

LabelRules LabelRules::parse(const std::string& text) {
  LabelRules out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto arrow = line.find("->");
    if (arrow == std::string::npos)
      throw std::invalid_argument("label rule line " + std::to_string(line_no) + ": missing '->'");
    LabelRule rule;
    rule.label = trim(line.substr(arrow + 2));
    if (rule.label.empty() || rule.label.find(',') != std::string::npos)
      throw std::invalid_argument("label rule line " + std::to_string(line_no) + ": invalid label");
    const std::string predicate = trim(line.substr(0, arrow));
    if (predicate != "*") {
      std::size_t pos = 0;
      while (pos <= predicate.size()) {
        auto amp = predicate.find("&&", pos);
        auto term = trim(predicate.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos));
        if (term.empty())
          throw std::invalid_argument("label rule line " + std::to_string(line_no) + ": empty term");
        try {
          rule.predicates.push_back(compile_term(term));
        } catch (const std::invalid_argument& e) {
          throw std::invalid_argument("label rule line " + std::to_string(line_no) + ": " + e.what());
        }
        rule.terms.push_back(term);
        if (amp == std::string::npos) break;
        pos = amp + 2;
      }
    }
    out.rules_.push_back(std::move(rule));
  }
  return out;
}

LabelRules LabelRules::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label rules " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

std::string LabelRules::classify(const PacketRecord& p) const {
  for (const auto& rule : rules_)
    if (rule.matches(p)) return rule.label;
  return default_label;
}

// ---------------------------------------------------------------------------
// pcap reading

namespace {

constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::uint32_t kLinkRaw = 101;
constexpr std::uint32_t kLinkIpv4 = 228;

std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }
std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  std::uint32_t u32(std::size_t off) const {
    std::uint32_t v = std::uint32_t{bytes_[off]} | (std::uint32_t{bytes_[off + 1]} << 8) |
                      (std::uint32_t{bytes_[off + 2]} << 16) | (std::uint32_t{bytes_[off + 3]} << 24);
    if (swap_) v = __builtin_bswap32(v);
    return v;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  bool swap_;
};

/// Parses an IPv4 datagram; returns nullopt if it is not an admissible TCP/UDP/ICMP packet.
std::optional<PacketRecord> parse_ipv4_packet(const std::uint8_t* data, std::size_t len) {
  if (len < 20 || (data[0] >> 4) != 4) return std::nullopt;
  PacketRecord p;
  auto& ip = p.ip;
  ip.version = data[0] >> 4;
  ip.ihl = data[0] & 0x0f;
  ip.tos = data[1];
  ip.total_length = be16(data + 2);
  ip.id = be16(data + 4);
  const std::uint16_t frag = be16(data + 6);
  ip.flags = static_cast<std::uint8_t>(frag >> 13);
  ip.frag_offset = frag & 0x1fff;
  ip.ttl = data[8];
  ip.proto = data[9];
  ip.checksum = be16(data + 10);
  ip.src = be32(data + 12);
  ip.dst = be32(data + 16);
  const std::size_t hdr = std::size_t{ip.ihl} * 4;
  if (ip.ihl < 5 || hdr > len || ip.frag_offset != 0) return std::nullopt;
  const auto proto = protocol_from_number(ip.proto);
  if (!proto) return std::nullopt;
  const std::uint8_t* l4 = data + hdr;
  const std::size_t l4len = len - hdr;
  switch (*proto) {
    case Protocol::TCP: {
      if (l4len < 20) return std::nullopt;
      TcpHeader tcp;
      p.src_port = be16(l4);
      p.dst_port = be16(l4 + 2);
      tcp.seq = be32(l4 + 4);
      tcp.ack = be32(l4 + 8);
      tcp.data_offset = l4[12] >> 4;
      tcp.reserved = (l4[12] >> 1) & 0x7;
      tcp.flags = static_cast<std::uint16_t>(((l4[12] & 0x1) << 8) | l4[13]);
      tcp.window = be16(l4 + 14);
      tcp.checksum = be16(l4 + 16);
      tcp.urgent = be16(l4 + 18);
      const std::size_t opt_len = tcp.data_offset > 5 ? (std::size_t{tcp.data_offset} - 5) * 4 : 0;
      if (20 + opt_len > l4len) return std::nullopt;
      tcp.options.assign(l4 + 20, l4 + 20 + opt_len);
      p.l4 = std::move(tcp);
      break;
    }
    case Protocol::UDP: {
      if (l4len < 8) return std::nullopt;
      p.src_port = be16(l4);
      p.dst_port = be16(l4 + 2);
      p.l4 = UdpHeader{be16(l4 + 4), be16(l4 + 6)};
      break;
    }
    case Protocol::ICMP: {
      if (l4len < 8) return std::nullopt;
      p.l4 = IcmpHeader{l4[0], l4[1], be16(l4 + 2), be32(l4 + 4)};
      break;
    }
  }
  return p;
}

}  // namespace

TraceDataset ingest_pcap_bytes(const std::vector<std::uint8_t>& bytes, const LabelRules& rules,
                               const std::string& provenance) {
  if (bytes.size() < 24) throw IngestError("truncated pcap global header", bytes.size());
  std::uint32_t magic = std::uint32_t{bytes[0]} | (std::uint32_t{bytes[1]} << 8) | (std::uint32_t{bytes[2]} << 16) |
                        (std::uint32_t{bytes[3]} << 24);
  bool swap = false;
  bool nano = false;
  if (magic == kMagicMicro || magic == kMagicNano) {
    nano = magic == kMagicNano;
  } else if (__builtin_bswap32(magic) == kMagicMicro || __builtin_bswap32(magic) == kMagicNano) {
    swap = true;
    nano = __builtin_bswap32(magic) == kMagicNano;
  } else {
    throw IngestError("not a classic pcap file (bad magic)", 0);
  }
  ByteReader rd(bytes, swap);
  const std::uint32_t link = rd.u32(20);
  if (link != kLinkEthernet && link != kLinkRaw && link != kLinkIpv4)
    throw IngestError("unsupported link type " + std::to_string(link), 20);

  struct Stamped {
    std::int64_t sec;
    std::int64_t frac;
    PacketRecord packet;
  };
  std::vector<Stamped> admitted;
  TraceDataset out;
  out.provenance = provenance;

  std::size_t off = 24;
  while (off < bytes.size()) {
    if (off + 16 > bytes.size()) throw IngestError("truncated pcap record header", off);
    const std::int64_t sec = rd.u32(off);
    const std::int64_t frac = rd.u32(off + 4);
    const std::uint32_t incl = rd.u32(off + 8);
    if (off + 16 + incl > bytes.size()) throw IngestError("truncated pcap record body", off);
    const std::uint8_t* frame = bytes.data() + off + 16;
    std::size_t len = incl;
    off += 16 + incl;

    if (link == kLinkEthernet) {
      if (len < 14) {
        ++out.skipped;
        continue;
      }
      std::uint16_t ethertype = be16(frame + 12);
      std::size_t hdr = 14;
      if (ethertype == 0x8100 && len >= 18) {
        ethertype = be16(frame + 16);
        hdr = 18;
      }
      if (ethertype != 0x0800) {
        ++out.skipped;
        continue;
      }
      frame += hdr;
      len -= hdr;
    }
    auto packet = parse_ipv4_packet(frame, len);
    if (!packet) {
      ++out.skipped;
      continue;
    }
    admitted.push_back({sec, frac, std::move(*packet)});
  }
  if (admitted.empty()) throw EmptyTraceError("pcap contains no admissible IPv4 TCP/UDP/ICMP packets");

  const double unit = nano ? 1e-9 : 1e-6;
  auto first = std::min_element(admitted.begin(), admitted.end(), [](const Stamped& a, const Stamped& b) {
    return a.sec != b.sec ? a.sec < b.sec : a.frac < b.frac;
  });
  const std::int64_t sec0 = first->sec;
  const std::int64_t frac0 = first->frac;
  out.epoch = static_cast<double>(sec0) + static_cast<double>(frac0) * unit;
  out.packets.reserve(admitted.size());
  for (auto& s : admitted) {
    s.packet.timestamp = static_cast<double>(s.sec - sec0) + static_cast<double>(s.frac - frac0) * unit;
    s.packet.label = rules.classify(s.packet);
    out.packets.push_back(std::move(s.packet));
  }
  std::stable_sort(out.packets.begin(), out.packets.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });
  return out;
}

TraceDataset ingest_pcap(const std::filesystem::path& path, const LabelRules& rules) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string(), 0);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ingest_pcap_bytes(bytes, rules, path.string());
}

// ---------------------------------------------------------------------------
// pcap writing

namespace {

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v >> 16));
  put16(out, static_cast<std::uint16_t>(v));
}
void put32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::vector<std::uint8_t> serialize_headers(const PacketRecord& p, bool zero_checksums) {
  std::vector<std::uint8_t> out;
  const auto& ip = p.ip;
  out.push_back(static_cast<std::uint8_t>((ip.version << 4) | (ip.ihl & 0x0f)));
  out.push_back(ip.tos);
  put16(out, ip.total_length);
  put16(out, ip.id);
  put16(out, static_cast<std::uint16_t>((ip.flags << 13) | (ip.frag_offset & 0x1fff)));
  out.push_back(ip.ttl);
  out.push_back(ip.proto);
  put16(out, zero_checksums ? 0 : ip.checksum);
  put32(out, ip.src);
  put32(out, ip.dst);
  // IP options are not modeled; pad with end-of-list bytes so the header length stays consistent.
  while (out.size() < std::size_t{ip.ihl} * 4) out.push_back(0);

  if (const auto* tcp = p.tcp()) {
    put16(out, p.src_port.value_or(0));
    put16(out, p.dst_port.value_or(0));
    put32(out, tcp->seq);
    put32(out, tcp->ack);
    out.push_back(static_cast<std::uint8_t>((tcp->data_offset << 4) | ((tcp->reserved & 0x7) << 1) |
                                            ((tcp->flags >> 8) & 0x1)));
    out.push_back(static_cast<std::uint8_t>(tcp->flags & 0xff));
    put16(out, tcp->window);
    put16(out, zero_checksums ? 0 : tcp->checksum);
    put16(out, tcp->urgent);
    out.insert(out.end(), tcp->options.begin(), tcp->options.end());
    const std::size_t want = std::size_t{ip.ihl} * 4 + std::size_t{tcp->data_offset} * 4;
    while (out.size() < want) out.push_back(0);
  } else if (const auto* udp = p.udp()) {
    put16(out, p.src_port.value_or(0));
    put16(out, p.dst_port.value_or(0));
    put16(out, udp->length);
    put16(out, zero_checksums ? 0 : udp->checksum);
  } else if (const auto* icmp = p.icmp()) {
    out.push_back(icmp->type);
    out.push_back(icmp->code);
    put16(out, zero_checksums ? 0 : icmp->checksum);
    put32(out, icmp->rest);
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> pcap_bytes(const TraceDataset& dataset, PcapWriteOptions opts) {
  std::vector<std::uint8_t> out;
  put32le(out, kMagicMicro);
  out.push_back(2), out.push_back(0);  // version 2.4, little endian
  out.push_back(4), out.push_back(0);
  put32le(out, 0);
  put32le(out, 0);
  put32le(out, 65535);
  put32le(out, kLinkEthernet);

  const auto epoch_us = static_cast<std::int64_t>(std::llround(dataset.epoch * 1e6));
  for (const auto& p : dataset.packets) {
    const std::int64_t us = epoch_us + static_cast<std::int64_t>(std::llround(p.timestamp * 1e6));
    auto headers = serialize_headers(p, opts.zero_checksums);
    const std::uint32_t incl = static_cast<std::uint32_t>(14 + headers.size());
    const std::uint32_t orig = static_cast<std::uint32_t>(14 + std::max<std::size_t>(p.ip.total_length, headers.size()));
    put32le(out, static_cast<std::uint32_t>(us / 1000000));
    put32le(out, static_cast<std::uint32_t>(us % 1000000));
    put32le(out, incl);
    put32le(out, orig);
    static constexpr std::uint8_t eth[14] = {0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 1, 0x08, 0x00};
    out.insert(out.end(), std::begin(eth), std::end(eth));
    out.insert(out.end(), headers.begin(), headers.end());
  }
  return out;
}

void write_pcap(const TraceDataset& dataset, const std::filesystem::path& path, PcapWriteOptions opts) {
  auto bytes = pcap_bytes(dataset, opts);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// CSV

const std::vector<std::string> kCsvColumns = {
    "ts",     "proto",   "sip",  "dip",  "sport", "dport", "ip_ver", "ihl",  "tos",  "tot_len",
    "ip_id",  "ip_flags", "frag_off", "ttl", "ip_ck", "l4f1", "l4f2", "l4f3", "l4f4", "l4f5",
    "l4f6",   "l4f7",    "l4f8", "label"};

namespace {

std::string hex_encode(const std::vector<std::uint8_t>& bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

std::vector<std::uint8_t> hex_decode(const std::string& s) {
  if (s.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < s.size(); i += 2) {
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + i + 2, v, 16);
    if (ec != std::errc{} || ptr != s.data() + i + 2) throw std::invalid_argument("bad hex '" + s + "'");
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(sep, pos);
    cells.push_back(line.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return cells;
}

class RowParser {
 public:
  explicit RowParser(const std::vector<std::string>& cells) : cells_(cells) {}

  const std::string& cell(std::size_t i) const { return cells_[i]; }
  bool empty(std::size_t i) const { return cells_[i].empty(); }

  std::uint64_t uint(std::size_t i, std::uint64_t max, const char* name) const {
    if (cells_[i].empty()) throw std::invalid_argument(std::string("missing ") + name);
    std::uint64_t v = 0;
    const auto& c = cells_[i];
    auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
    if (ec == std::errc::result_out_of_range) throw std::invalid_argument(std::string(name) + " out of range");
    if (ec != std::errc{} || ptr != c.data() + c.size())
      throw std::invalid_argument(std::string("unparsable ") + name + " '" + c + "'");
    if (v > max) throw std::invalid_argument(std::string(name) + " out of range");
    return v;
  }

 private:
  const std::vector<std::string>& cells_;
};

PacketRecord parse_row(const std::vector<std::string>& cells) {
  if (cells.size() != kCsvColumns.size())
    throw std::invalid_argument("expected " + std::to_string(kCsvColumns.size()) + " columns, got " +
                                std::to_string(cells.size()));
  RowParser r(cells);
  PacketRecord p;
  {
    const auto& c = r.cell(0);
    double ts = 0;
    auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), ts);
    if (ec != std::errc{} || ptr != c.data() + c.size() || c.empty())
      throw std::invalid_argument("unparsable ts '" + c + "'");
    if (!std::isfinite(ts) || ts < 0) throw std::invalid_argument("ts out of range");
    p.timestamp = ts;
  }
  const Protocol proto = protocol_from_string(r.cell(1));
  p.ip.src = parse_ipv4(r.cell(2));
  p.ip.dst = parse_ipv4(r.cell(3));
  if (proto == Protocol::ICMP) {
    if (!r.empty(4) || !r.empty(5)) throw std::invalid_argument("ICMP row must not carry ports");
  } else {
    p.src_port = static_cast<std::uint16_t>(r.uint(4, 65535, "port"));
    p.dst_port = static_cast<std::uint16_t>(r.uint(5, 65535, "port"));
  }
  p.ip.version = static_cast<std::uint8_t>(r.uint(6, 15, "ip_ver"));
  p.ip.ihl = static_cast<std::uint8_t>(r.uint(7, 15, "ihl"));
  p.ip.tos = static_cast<std::uint8_t>(r.uint(8, 255, "tos"));
  p.ip.total_length = static_cast<std::uint16_t>(r.uint(9, 65535, "tot_len"));
  p.ip.id = static_cast<std::uint16_t>(r.uint(10, 65535, "ip_id"));
  p.ip.flags = static_cast<std::uint8_t>(r.uint(11, 7, "ip_flags"));
  p.ip.frag_offset = static_cast<std::uint16_t>(r.uint(12, 0x1fff, "frag_off"));
  p.ip.ttl = static_cast<std::uint8_t>(r.uint(13, 255, "ttl"));
  p.ip.checksum = static_cast<std::uint16_t>(r.uint(14, 65535, "ip_ck"));
  p.ip.proto = ip_proto_number(proto);

  auto require_empty_from = [&](std::size_t first) {
    for (std::size_t i = first; i <= 22; ++i)
      if (!r.empty(i)) throw std::invalid_argument(kCsvColumns[i] + " must be empty for " + std::string(to_string(proto)));
  };
  switch (proto) {
    case Protocol::TCP: {
      TcpHeader tcp;
      tcp.seq = static_cast<std::uint32_t>(r.uint(15, 0xffffffffu, "tcp seq"));
      tcp.ack = static_cast<std::uint32_t>(r.uint(16, 0xffffffffu, "tcp ack"));
      tcp.data_offset = static_cast<std::uint8_t>(r.uint(17, 15, "tcp data_offset"));
      const auto flags12 = r.uint(18, 0xfff, "tcp flags");
      tcp.reserved = static_cast<std::uint8_t>(flags12 >> 9);
      tcp.flags = static_cast<std::uint16_t>(flags12 & 0x1ff);
      tcp.window = static_cast<std::uint16_t>(r.uint(19, 65535, "tcp window"));
      tcp.checksum = static_cast<std::uint16_t>(r.uint(20, 65535, "tcp checksum"));
      tcp.urgent = static_cast<std::uint16_t>(r.uint(21, 65535, "tcp urgent"));
      tcp.options = hex_decode(r.cell(22));
      if (tcp.options.size() > 40) throw std::invalid_argument("tcp options out of range");
      p.l4 = std::move(tcp);
      break;
    }
    case Protocol::UDP:
      p.l4 = UdpHeader{static_cast<std::uint16_t>(r.uint(15, 65535, "udp length")),
                       static_cast<std::uint16_t>(r.uint(16, 65535, "udp checksum"))};
      require_empty_from(17);
      break;
    case Protocol::ICMP:
      p.l4 = IcmpHeader{static_cast<std::uint8_t>(r.uint(15, 255, "icmp type")),
                        static_cast<std::uint8_t>(r.uint(16, 255, "icmp code")),
                        static_cast<std::uint16_t>(r.uint(17, 65535, "icmp checksum")),
                        static_cast<std::uint32_t>(r.uint(18, 0xffffffffu, "icmp rest"))};
      require_empty_from(19);
      break;
  }
  p.label = r.cell(23);
  if (p.label.empty()) throw std::invalid_argument("missing label");
  return p;
}

}  // namespace

CsvIngestResult ingest_csv_text(const std::string& text, CsvOptions opts, const std::string& provenance) {
  CsvIngestResult result;
  result.dataset.provenance = provenance;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw CsvRowError("missing header row", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  for (const auto& col : kCsvColumns)
    if (std::find(header.begin(), header.end(), col) == header.end()) throw CsvRowError("missing column '" + col + "'", 1);
  if (header != kCsvColumns) throw CsvRowError("columns out of order; expected canonical schema", 1);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      result.dataset.packets.push_back(parse_row(split(line, ',')));
    } catch (const std::invalid_argument& e) {
      CsvRowError err(e.what(), line_no);
      if (opts.strict) throw err;
      result.row_errors.push_back(err);
    }
  }
  if (result.dataset.packets.empty()) throw EmptyTraceError("CSV trace contains no admissible rows");
  normalize_time(result.dataset);
  return result;
}

CsvIngestResult ingest_csv(const std::filesystem::path& path, CsvOptions opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ingest_csv_text(text, opts, path.string());
}

std::string to_csv(const TraceDataset& dataset) {
  std::string out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i) out += ',';
    out += kCsvColumns[i];
  }
  out += '\n';
  for (const auto& p : dataset.packets) {
    std::vector<std::string> c(kCsvColumns.size());
    c[0] = format_double(p.timestamp);
    c[1] = std::string(to_string(p.protocol()));
    c[2] = format_ipv4(p.ip.src);
    c[3] = format_ipv4(p.ip.dst);
    if (p.src_port) c[4] = std::to_string(*p.src_port);
    if (p.dst_port) c[5] = std::to_string(*p.dst_port);
    c[6] = std::to_string(p.ip.version);
    c[7] = std::to_string(p.ip.ihl);
    c[8] = std::to_string(p.ip.tos);
    c[9] = std::to_string(p.ip.total_length);
    c[10] = std::to_string(p.ip.id);
    c[11] = std::to_string(p.ip.flags);
    c[12] = std::to_string(p.ip.frag_offset);
    c[13] = std::to_string(p.ip.ttl);
    c[14] = std::to_string(p.ip.checksum);
    if (const auto* tcp = p.tcp()) {
      c[15] = std::to_string(tcp->seq);
      c[16] = std::to_string(tcp->ack);
      c[17] = std::to_string(tcp->data_offset);
      c[18] = std::to_string((unsigned{tcp->reserved} << 9) | tcp->flags);
      c[19] = std::to_string(tcp->window);
      c[20] = std::to_string(tcp->checksum);
      c[21] = std::to_string(tcp->urgent);
      c[22] = hex_encode(tcp->options);
    } else if (const auto* udp = p.udp()) {
      c[15] = std::to_string(udp->length);
      c[16] = std::to_string(udp->checksum);
    } else if (const auto* icmp = p.icmp()) {
      c[15] = std::to_string(icmp->type);
      c[16] = std::to_string(icmp->code);
      c[17] = std::to_string(icmp->checksum);
      c[18] = std::to_string(icmp->rest);
    }
    c[23] = p.label;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i) out += ',';
      out += c[i];
    }
    out += '\n';
  }
  return out;
}

void write_csv(const TraceDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_csv(dataset);
}

}  // namespace ddsynth
