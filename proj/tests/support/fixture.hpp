#pragma once

#include "ddsynth/nprint.hpp"
#include "ddsynth/trace.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <random>
#include <string>
#include <vector>

namespace ddsynth::testing {

inline std::filesystem::path data_dir() { return DDSYNTH_DATA_DIR; }

/// The bundled 2000-packet trace with its label rules applied.
inline const TraceDataset& fixture_trace() {
  static const TraceDataset d =
      ingest_pcap(data_dir() / "fixtures" / "fixture.pcap", LabelRules::load(data_dir() / "fixtures" / "labels.rules"));
  return d;
}

inline std::vector<TernaryVector> encode_all(const TraceDataset& d) {
  std::vector<TernaryVector> rows;
  for (const auto& p : d.packets) rows.push_back(encode_packet(p));
  return rows;
}

inline std::vector<TernaryVector> uniform_ternary_rows(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(-1, 1);
  std::vector<TernaryVector> rows(n);
  for (auto& v : rows)
    for (int c = 0; c < kNprintWidth; ++c) v(c) = static_cast<std::int8_t>(d(rng));
  return rows;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Contents of every regular file under `root`, keyed by relative path, skipping the `skip` subdirectory.
inline std::map<std::string, std::string> tree_contents(const std::filesystem::path& root, const std::string& skip = "logs") {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), root).generic_string();
    if (rel.rfind(skip + "/", 0) == 0) continue;
    out[rel] = read_file(e.path());
  }
  return out;
}

}  // namespace ddsynth::testing
