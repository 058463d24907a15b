#include "ddsynth/packet.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace ddsynth {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::TCP: return "TCP";
    case Protocol::UDP: return "UDP";
    case Protocol::ICMP: return "ICMP";
  }
  return "?";
}

Protocol protocol_from_string(std::string_view name) {
  std::string upper(name);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "TCP") return Protocol::TCP;
  if (upper == "UDP") return Protocol::UDP;
  if (upper == "ICMP") return Protocol::ICMP;
  throw std::invalid_argument("unknown protocol '" + std::string(name) + "'");
}

std::uint8_t ip_proto_number(Protocol p) {
  switch (p) {
    case Protocol::TCP: return 6;
    case Protocol::UDP: return 17;
    case Protocol::ICMP: return 1;
  }
  return 0;
}

std::optional<Protocol> protocol_from_number(std::uint8_t number) {
  switch (number) {
    case 6: return Protocol::TCP;
    case 17: return Protocol::UDP;
    case 1: return Protocol::ICMP;
    default: return std::nullopt;
  }
}

bool same_headers(const PacketRecord& a, const PacketRecord& b) {
  return a.ip == b.ip && a.src_port == b.src_port && a.dst_port == b.dst_port && a.l4 == b.l4;
}

void check_invariants(const PacketRecord& p) {
  if (!std::isfinite(p.timestamp) || p.timestamp < 0.0)
    throw std::invalid_argument("packet timestamp must be finite and non-negative");
  if (p.ip.proto != ip_proto_number(p.protocol()))
    throw std::invalid_argument("ip.proto disagrees with layer-4 protocol");
  const bool has_ports = p.protocol() != Protocol::ICMP;
  if (p.src_port.has_value() != has_ports || p.dst_port.has_value() != has_ports)
    throw std::invalid_argument("port presence disagrees with protocol");
  if (const auto* tcp = p.tcp(); tcp && tcp->options.size() > 40)
    throw std::invalid_argument("tcp options exceed 40 bytes");
}

namespace {

PacketRecord make_base(std::uint32_t src, std::uint32_t dst, Protocol proto, std::uint16_t total_length) {
  PacketRecord p;
  p.ip.proto = ip_proto_number(proto);
  p.ip.total_length = total_length;
  p.ip.flags = Ipv4Header::kFlagDF;
  p.ip.src = src;
  p.ip.dst = dst;
  return p;
}

}  // namespace

PacketRecord make_tcp(std::uint32_t src, std::uint32_t dst, std::uint16_t sport, std::uint16_t dport,
                      std::uint16_t flags) {
  auto p = make_base(src, dst, Protocol::TCP, 40);
  p.src_port = sport;
  p.dst_port = dport;
  TcpHeader tcp;
  tcp.flags = flags;
  tcp.window = 65535;
  p.l4 = tcp;
  return p;
}

PacketRecord make_udp(std::uint32_t src, std::uint32_t dst, std::uint16_t sport, std::uint16_t dport,
                      std::uint16_t payload_len) {
  auto p = make_base(src, dst, Protocol::UDP, static_cast<std::uint16_t>(28 + payload_len));
  p.src_port = sport;
  p.dst_port = dport;
  p.l4 = UdpHeader{static_cast<std::uint16_t>(8 + payload_len), 0};
  return p;
}

PacketRecord make_icmp(std::uint32_t src, std::uint32_t dst, std::uint8_t type, std::uint8_t code) {
  auto p = make_base(src, dst, Protocol::ICMP, 28);
  p.l4 = IcmpHeader{type, code, 0, 0};
  return p;
}

std::string format_ipv4(std::uint32_t addr) {
  return std::to_string(addr >> 24) + '.' + std::to_string((addr >> 16) & 0xff) + '.' +
         std::to_string((addr >> 8) & 0xff) + '.' + std::to_string(addr & 0xff);
}

std::uint32_t parse_ipv4(std::string_view text) {
  std::uint32_t out = 0;
  const char* it = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned value = 0;
    auto [next, ec] = std::from_chars(it, end, value);
    if (ec != std::errc{} || next == it || value > 255)
      throw std::invalid_argument("malformed IPv4 address '" + std::string(text) + "'");
    out = (out << 8) | value;
    it = next;
    if (octet < 3) {
      if (it == end || *it != '.') throw std::invalid_argument("malformed IPv4 address '" + std::string(text) + "'");
      ++it;
    }
  }
  if (it != end) throw std::invalid_argument("malformed IPv4 address '" + std::string(text) + "'");
  return out;
}

std::string_view to_string(Rule r) {
  static constexpr std::array<std::string_view, 10> names = {"R1", "R2", "R3", "R4", "R5",
                                                             "R6", "R7", "R8", "R9", "R10"};
  return names[static_cast<std::size_t>(r) - 1];
}

bool icmp_type_assigned(std::uint8_t type) {
  // IANA ICMP type registry: assigned (including deprecated) and experimentation values.
  if (type == 0 || type == 253 || type == 254) return true;
  if (type >= 3 && type <= 6) return true;
  if (type >= 8 && type <= 18) return true;
  if (type >= 30 && type <= 43) return true;
  return false;
}

ValidityVerdict validate_packet(const PacketRecord& p) {
  ValidityVerdict v;
  const auto& ip = p.ip;
  if (ip.version != 4) v.violated.push_back(Rule::R1);
  if (ip.ihl < 5) v.violated.push_back(Rule::R2);
  if (ip.total_length < 4u * ip.ihl) v.violated.push_back(Rule::R3);
  const auto by_number = protocol_from_number(ip.proto);
  if (!by_number || *by_number != p.protocol()) v.violated.push_back(Rule::R4);

  if (const auto* tcp = p.tcp()) {
    if (tcp->data_offset < 5) v.violated.push_back(Rule::R5);
    if (tcp->reserved != 0) v.violated.push_back(Rule::R6);
    const bool syn = tcp->flags & TcpHeader::kSYN;
    const bool fin = tcp->flags & TcpHeader::kFIN;
    const bool rst = tcp->flags & TcpHeader::kRST;
    if ((syn && fin) || (syn && rst)) v.violated.push_back(Rule::R7);
  }
  if (const auto* udp = p.udp()) {
    if (udp->length < 8) v.violated.push_back(Rule::R8);
  }
  if (const auto* icmp = p.icmp()) {
    if (!icmp_type_assigned(icmp->type)) v.violated.push_back(Rule::R9);
  }
  const bool df = ip.flags & Ipv4Header::kFlagDF;
  const bool mf = ip.flags & Ipv4Header::kFlagMF;
  if (df && (mf || ip.frag_offset != 0)) v.violated.push_back(Rule::R10);
  return v;
}

}  // namespace ddsynth
