// Writes the bundled fixture trace: benign background plus SYN, UDP-reflection and ICMP floods.
#include "ddsynth/trace.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>

using namespace ddsynth;

namespace {

std::mt19937_64 rng;

std::uint32_t uniform(std::uint32_t lo, std::uint32_t hi) { return std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng); }

template <typename T>
T pick(std::initializer_list<T> xs) {
  return *(xs.begin() + uniform(0, static_cast<std::uint32_t>(xs.size() - 1)));
}

/// `n` arrival times in [t0, t1) with density proportional to `shape` (values in [0, 1]).
std::vector<double> arrivals(std::size_t n, double t0, double t1, const std::function<double(double)>& shape) {
  std::uniform_real_distribution<double> t(t0, t1), u(0.0, 1.0);
  std::vector<double> out;
  while (out.size() < n) {
    const double x = t(rng);
    if (u(rng) < shape((x - t0) / (t1 - t0))) out.push_back(std::round(x * 1e6) / 1e6);
  }
  return out;
}

void finish_ip(PacketRecord& p, std::uint8_t ttl) {
  p.ip.id = static_cast<std::uint16_t>(uniform(0, 65535));
  p.ip.ttl = ttl;
  p.ip.checksum = static_cast<std::uint16_t>(uniform(0, 65535));
}

PacketRecord syn_flood() {
  const std::uint32_t src = (pick<std::uint32_t>({0x2d4c0000u, 0x5b1e0000u, 0xb9220000u, 0x67150000u})) | uniform(0, 0xffff);
  auto p = make_tcp(src, 0x99651500u | uniform(1, 254), static_cast<std::uint16_t>(uniform(1024, 65535)),
                    pick<std::uint16_t>({80, 443}), TcpHeader::kSYN);
  p.ip.flags = 0;
  auto& tcp = std::get<TcpHeader>(p.l4);
  tcp.seq = uniform(0, 0xffffffffu);
  tcp.window = pick<std::uint16_t>({1024, 8192, 29200, 65535});
  tcp.checksum = static_cast<std::uint16_t>(uniform(0, 65535));
  if (uniform(0, 1)) {
    tcp.options = {2, 4, 0x05, 0xb4};
    tcp.data_offset = 6;
  }
  p.ip.total_length = static_cast<std::uint16_t>(20 + 4 * tcp.data_offset);
  finish_ip(p, static_cast<std::uint8_t>(pick<int>({64, 128, 255}) - static_cast<int>(uniform(0, 12))));
  return p;
}

PacketRecord udp_flood() {
  const auto payload = static_cast<std::uint16_t>(uniform(100, 1400));
  auto p = make_udp(0xc6336400u | uniform(1, 10), 0xcb007100u | uniform(1, 20), pick<std::uint16_t>({53, 123, 19}),
                    static_cast<std::uint16_t>(uniform(1024, 65535)), payload);
  p.ip.flags = 0;
  std::get<UdpHeader>(p.l4).checksum = static_cast<std::uint16_t>(uniform(0, 65535));
  finish_ip(p, static_cast<std::uint8_t>(uniform(40, 60)));
  return p;
}

PacketRecord icmp_flood() {
  auto p = make_icmp(uniform(0x01000000u, 0xdfffffffu), 0x9965150au, 8, 0);
  p.ip.flags = 0;
  auto& icmp = std::get<IcmpHeader>(p.l4);
  icmp.rest = uniform(0, 0xffffffffu);
  icmp.checksum = static_cast<std::uint16_t>(uniform(0, 65535));
  p.ip.total_length = static_cast<std::uint16_t>(28 + pick<int>({0, 32, 56}));
  finish_ip(p, static_cast<std::uint8_t>(uniform(100, 128)));
  return p;
}

PacketRecord benign_tcp() {
  const auto payload = pick<int>({0, 0, 0, 120, 517, 1460});
  auto p = make_tcp(0x0a000000u | uniform(2, 40), 0xc0a8010au | uniform(0, 2), static_cast<std::uint16_t>(uniform(32768, 60999)),
                    443, payload ? TcpHeader::kPSH | TcpHeader::kACK : TcpHeader::kACK);
  auto& tcp = std::get<TcpHeader>(p.l4);
  tcp.seq = uniform(0, 0xffffffffu);
  tcp.ack = uniform(0, 0xffffffffu);
  tcp.window = static_cast<std::uint16_t>(uniform(64000, 65535));
  tcp.checksum = static_cast<std::uint16_t>(uniform(0, 65535));
  p.ip.total_length = static_cast<std::uint16_t>(40 + payload);
  finish_ip(p, 64);
  return p;
}

PacketRecord benign_dns() {
  auto p = make_udp(0x0a000000u | uniform(2, 40), 0xc0a80135u, static_cast<std::uint16_t>(uniform(32768, 60999)), 53,
                    static_cast<std::uint16_t>(uniform(20, 60)));
  p.ip.flags = 0;
  std::get<UdpHeader>(p.l4).checksum = static_cast<std::uint16_t>(uniform(0, 65535));
  finish_ip(p, 64);
  return p;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write the bundled fixture trace and its label rules"};
  std::filesystem::path out_dir = "data/fixtures";
  std::uint64_t seed = 7;
  app.add_option("-o,--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  CLI11_PARSE(app, argc, argv);
  rng.seed(seed);

  TraceDataset d;
  auto add = [&](std::size_t n, double t0, double t1, const std::function<double(double)>& shape,
                 PacketRecord (*make)()) {
    for (double t : arrivals(n, t0, t1, shape)) {
      auto p = make();
      p.timestamp = t;
      d.packets.push_back(std::move(p));
    }
  };
  const auto flat = [](double) { return 1.0; };
  add(280, 0.0, 300.0, flat, benign_tcp);
  add(70, 0.0, 300.0, flat, benign_dns);
  // Pulse wave: five bursts.
  add(450, 20.0, 80.0, [](double x) { return std::fmod(x * 5.0, 1.0) < 0.4 ? 1.0 : 0.08; }, syn_flood);
  add(300, 180.0, 230.0, [](double x) { return 0.2 + 0.8 * std::fmod(x * 4.0, 1.0); }, syn_flood);
  add(500, 100.0, 160.0, [](double x) { return 0.1 + 0.9 * x; }, udp_flood);
  add(400, 240.0, 290.0, [](double x) { return 0.55 + 0.45 * std::sin(2.0 * kPi * 6.0 * x); }, icmp_flood);
  normalize_time(d);
  d.epoch = 1700000000.0;

  std::filesystem::create_directories(out_dir);
  const std::string rules =
      "# fixture labels\n"
      "proto=tcp && tcpflags=S -> syn_flood\n"
      "proto=udp && dst=203.0.113.0/24 -> udp_flood\n"
      "proto=icmp && icmptype=8 -> icmp_flood\n"
      "* -> benign\n";
  std::ofstream(out_dir / "labels.rules") << rules;
  write_pcap(d, out_dir / "fixture.pcap");
  const auto check = ingest_pcap(out_dir / "fixture.pcap", LabelRules::parse(rules));
  std::map<std::string, std::size_t> counts;
  for (const auto& p : check.packets) ++counts[p.label];
  std::cout << "wrote " << check.packets.size() << " packets to " << (out_dir / "fixture.pcap").string() << "\n";
  for (const auto& [label, n] : counts) std::cout << "  " << label << " " << n << "\n";
  return 0;
}
