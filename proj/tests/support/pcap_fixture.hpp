#pragma once

// Byte-level classic pcap writer used as an independent oracle for ingestion tests.
// It deliberately shares no code with the library's own writer.

#include <algorithm>
#include <cstdint>
#include <vector>

namespace ddsynth::testing {

class PcapFixture {
 public:
  explicit PcapFixture(bool big_endian = false, std::uint32_t link = 1) : be_(big_endian) {
    u32(0xa1b2c3d4);
    u16(2), u16(4);
    u32(0), u32(0), u32(262144), u32(link);
  }

  void frame(std::uint32_t sec, std::uint32_t usec, const std::vector<std::uint8_t>& bytes) {
    u32(sec), u32(usec), u32(static_cast<std::uint32_t>(bytes.size())), u32(static_cast<std::uint32_t>(bytes.size()));
    out_.insert(out_.end(), bytes.begin(), bytes.end());
  }

  const std::vector<std::uint8_t>& bytes() const { return out_; }

  static std::vector<std::uint8_t> ethernet(std::uint16_t ethertype, const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> f(14 + payload.size());
    for (std::uint8_t i = 0; i < 12; ++i) f[i] = static_cast<std::uint8_t>(i + 1);
    f[12] = static_cast<std::uint8_t>(ethertype >> 8);
    f[13] = static_cast<std::uint8_t>(ethertype);
    std::copy(payload.begin(), payload.end(), f.begin() + 14);
    return f;
  }

 private:
  void u16(std::uint16_t v) {
    if (be_) {
      out_.push_back(static_cast<std::uint8_t>(v >> 8));
      out_.push_back(static_cast<std::uint8_t>(v));
    } else {
      out_.push_back(static_cast<std::uint8_t>(v));
      out_.push_back(static_cast<std::uint8_t>(v >> 8));
    }
  }
  void u32(std::uint32_t v) {
    if (be_) {
      u16(static_cast<std::uint16_t>(v >> 16));
      u16(static_cast<std::uint16_t>(v));
    } else {
      u16(static_cast<std::uint16_t>(v));
      u16(static_cast<std::uint16_t>(v >> 16));
    }
  }

  bool be_;
  std::vector<std::uint8_t> out_;
};

/// Network-order builder for IPv4 + L4 header bytes.
struct HeaderBytes {
  std::vector<std::uint8_t> b;
  HeaderBytes& u8(std::uint8_t v) {
    b.push_back(v);
    return *this;
  }
  HeaderBytes& u16(std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
    return *this;
  }
  HeaderBytes& u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v >> 16));
    return u16(static_cast<std::uint16_t>(v));
  }
};

}  // namespace ddsynth::testing
