#pragma once

#include "ddsynth/packet.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddsynth {

/// Dense attack-type registry: ids are contiguous from 0 in lexicographic label order.
class AttackCatalog {
 public:
  AttackCatalog() = default;
  explicit AttackCatalog(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& name(std::size_t id) const { return labels_.at(id); }
  std::size_t id(const std::string& label) const;
  bool contains(const std::string& label) const { return ids_.count(label) != 0; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> ids_;
};

struct TraceDataset {
  std::vector<PacketRecord> packets;  // sorted by timestamp, rebased to `epoch`
  double epoch = 0.0;                 // absolute seconds of timestamp 0
  std::string provenance;
  std::size_t skipped = 0;            // frames that were not admissible IPv4 TCP/UDP/ICMP

  AttackCatalog attack_catalog() const;
};

/// Sorts packets by timestamp (stable) and rebases so the first packet is at 0.
void normalize_time(TraceDataset& dataset);

class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EmptyTraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CsvRowError : public std::runtime_error {
 public:
  CsvRowError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// Labeling

/// One `predicate -> label` rule. The predicate is a conjunction of terms
/// (`proto=tcp`, `src=10.0.0.0/8`, `dst=1.2.3.0/24`, `sport=53`, `dport=1000-2000`,
/// `tcpflags=S`, `icmptype=8`) joined by `&&`; `*` matches everything.
struct LabelRule {
  std::vector<std::string> terms;  // raw text, kept for diagnostics
  std::string label;
  std::vector<std::function<bool(const PacketRecord&)>> predicates;

  bool matches(const PacketRecord& p) const;
};

class LabelRules {
 public:
  LabelRules() = default;
  static LabelRules parse(const std::string& text);
  static LabelRules load(const std::filesystem::path& path);

  /// First matching rule wins; `default_label` applies when nothing matches.
  std::string classify(const PacketRecord& p) const;
  const std::vector<LabelRule>& rules() const { return rules_; }
  std::string default_label = "benign";

 private:
  std::vector<LabelRule> rules_;
};

// ---------------------------------------------------------------------------
// pcap

TraceDataset ingest_pcap(const std::filesystem::path& path, const LabelRules& rules);
TraceDataset ingest_pcap_bytes(const std::vector<std::uint8_t>& bytes, const LabelRules& rules,
                               const std::string& provenance = "memory");

struct PcapWriteOptions {
  bool zero_checksums = false;
};

/// Writes an Ethernet-framed classic pcap (microsecond resolution). Header bytes are
/// serialized from the record fields; payload is not modeled, so `caplen` covers headers only.
std::vector<std::uint8_t> pcap_bytes(const TraceDataset& dataset, PcapWriteOptions opts = {});
void write_pcap(const TraceDataset& dataset, const std::filesystem::path& path, PcapWriteOptions opts = {});

// ---------------------------------------------------------------------------
// CSV

/// Column order of the canonical CSV. l4f1..l4f8 map per protocol:
///   TCP:  seq, ack, data_offset, flags12 (reserved<<9 | NS..FIN), window, checksum, urgent, options(hex)
///   UDP:  length, checksum
///   ICMP: type, code, checksum, rest-of-header
extern const std::vector<std::string> kCsvColumns;

struct CsvOptions {
  bool strict = true;
};

struct CsvIngestResult {
  TraceDataset dataset;
  std::vector<CsvRowError> row_errors;  // lenient mode only
};

CsvIngestResult ingest_csv(const std::filesystem::path& path, CsvOptions opts = {});
CsvIngestResult ingest_csv_text(const std::string& text, CsvOptions opts = {},
                                const std::string& provenance = "memory");

std::string to_csv(const TraceDataset& dataset);
void write_csv(const TraceDataset& dataset, const std::filesystem::path& path);

}  // namespace ddsynth
