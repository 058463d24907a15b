#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ddsynth {

enum class Protocol : std::uint8_t { TCP = 0, UDP = 1, ICMP = 2 };

inline constexpr Protocol kAllProtocols[] = {Protocol::TCP, Protocol::UDP, Protocol::ICMP};

std::string_view to_string(Protocol p);
Protocol protocol_from_string(std::string_view name);
std::uint8_t ip_proto_number(Protocol p);
std::optional<Protocol> protocol_from_number(std::uint8_t number);

/// IPv4 header without options. `flags` holds the 3 flag bits (reserved, DF, MF), MSB first.
struct Ipv4Header {
  std::uint8_t version = 4;
  std::uint8_t ihl = 5;
  std::uint8_t tos = 0;
  std::uint16_t total_length = 20;
  std::uint16_t id = 0;
  std::uint8_t flags = 0;
  std::uint16_t frag_offset = 0;
  std::uint8_t ttl = 64;
  std::uint8_t proto = 6;
  std::uint16_t checksum = 0;
  std::uint32_t src = 0;
  std::uint32_t dst = 0;

  static constexpr std::uint8_t kFlagReserved = 0b100;
  static constexpr std::uint8_t kFlagDF = 0b010;
  static constexpr std::uint8_t kFlagMF = 0b001;

  friend bool operator==(const Ipv4Header&, const Ipv4Header&) = default;
};

struct TcpHeader {
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint8_t data_offset = 5;
  std::uint8_t reserved = 0;  // 3 bits
  std::uint16_t flags = 0;    // 9 bits: NS CWR ECE URG ACK PSH RST SYN FIN
  std::uint16_t window = 0;
  std::uint16_t checksum = 0;
  std::uint16_t urgent = 0;
  std::vector<std::uint8_t> options;  // at most 40 bytes

  static constexpr std::uint16_t kFIN = 1u << 0;
  static constexpr std::uint16_t kSYN = 1u << 1;
  static constexpr std::uint16_t kRST = 1u << 2;
  static constexpr std::uint16_t kPSH = 1u << 3;
  static constexpr std::uint16_t kACK = 1u << 4;
  static constexpr std::uint16_t kURG = 1u << 5;
  static constexpr std::uint16_t kECE = 1u << 6;
  static constexpr std::uint16_t kCWR = 1u << 7;
  static constexpr std::uint16_t kNS = 1u << 8;

  friend bool operator==(const TcpHeader&, const TcpHeader&) = default;
};

struct UdpHeader {
  std::uint16_t length = 8;
  std::uint16_t checksum = 0;

  friend bool operator==(const UdpHeader&, const UdpHeader&) = default;
};

struct IcmpHeader {
  std::uint8_t type = 8;
  std::uint8_t code = 0;
  std::uint16_t checksum = 0;
  std::uint32_t rest = 0;  // identifier/sequence or type-specific word

  friend bool operator==(const IcmpHeader&, const IcmpHeader&) = default;
};

using L4Header = std::variant<TcpHeader, UdpHeader, IcmpHeader>;

/// One parsed IPv4 packet. The active alternative of `l4` determines the protocol,
/// so fields of the other two protocols are absent by construction.
struct PacketRecord {
  double timestamp = 0.0;
  Ipv4Header ip;
  std::optional<std::uint16_t> src_port;
  std::optional<std::uint16_t> dst_port;
  L4Header l4 = TcpHeader{};
  std::string label = "benign";

  Protocol protocol() const { return static_cast<Protocol>(l4.index()); }

  const TcpHeader* tcp() const { return std::get_if<TcpHeader>(&l4); }
  const UdpHeader* udp() const { return std::get_if<UdpHeader>(&l4); }
  const IcmpHeader* icmp() const { return std::get_if<IcmpHeader>(&l4); }

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

/// Header-level equality: every field except timestamp and label.
bool same_headers(const PacketRecord& a, const PacketRecord& b);

/// Throws std::invalid_argument if a structural invariant of the record is broken
/// (protocol/port presence, proto number agreement, timestamp finiteness).
void check_invariants(const PacketRecord& p);

/// Convenience builders producing well-formed packets.
PacketRecord make_tcp(std::uint32_t src, std::uint32_t dst, std::uint16_t sport, std::uint16_t dport,
                      std::uint16_t flags);
PacketRecord make_udp(std::uint32_t src, std::uint32_t dst, std::uint16_t sport, std::uint16_t dport,
                      std::uint16_t payload_len);
PacketRecord make_icmp(std::uint32_t src, std::uint32_t dst, std::uint8_t type, std::uint8_t code);

std::string format_ipv4(std::uint32_t addr);
std::uint32_t parse_ipv4(std::string_view text);

// ---------------------------------------------------------------------------
// Validity rules

enum class Rule : std::uint8_t { R1 = 1, R2, R3, R4, R5, R6, R7, R8, R9, R10 };

std::string_view to_string(Rule r);

struct ValidityVerdict {
  std::vector<Rule> violated;
  bool pass() const { return violated.empty(); }
};

/// Structural protocol-conformance check. Checksums are not verified.
ValidityVerdict validate_packet(const PacketRecord& p);

bool icmp_type_assigned(std::uint8_t type);

}  // namespace ddsynth
