#pragma once

#include "ddsynth/nprint.hpp"
#include "ddsynth/trace.hpp"

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ddsynth {

struct SurrogateCategory {
  Protocol protocol = Protocol::TCP;
  std::string label;
  friend auto operator<=>(const SurrogateCategory&, const SurrogateCategory&) = default;
};

std::string to_string(const SurrogateCategory& c);

/// A field drawn as a whole from its observed values.
struct JointField {
  int begin = 0;
  int width = 0;
  std::vector<std::vector<std::int8_t>> values;  // sorted
  std::vector<double> probs;
};

/// Ternary distribution for one (protocol, label) category. Columns are independent except inside
/// joint fields.
struct SurrogateColumns {
  using Probabilities = Eigen::Matrix<double, kNprintWidth, 3>;  // columns: P(-1), P(0), P(1)
  using Mask = Eigen::Array<bool, kNprintWidth, 1>;

  Probabilities probs = Probabilities::Zero();  // marginals, including joint-field columns
  Mask pinned = Mask::Constant(false);          // sampled value is always `modal`
  Mask joint = Mask::Constant(false);           // covered by an entry of `fields`
  TernaryVector modal = TernaryVector::Constant(-1);
  std::vector<JointField> fields;
  std::size_t support = 0;  // training rows
};

/// Per-category stand-in for the image generator.
struct SurrogateModel {
  std::string layout_id;
  std::map<SurrogateCategory, SurrogateColumns> categories;

  const SurrogateColumns& at(const SurrogateCategory& c) const;
  bool contains(const SurrogateCategory& c) const { return categories.count(c) != 0; }

  std::string to_json() const;
  static SurrogateModel from_json(const std::string& text);
};

/// Columns fixed by the protocol: ipv4 version, ihl and proto, plus every column outside the
/// ipv4 and protocol spans.
SurrogateColumns::Mask structural_mask(Protocol p, const FieldLayout& layout = FieldLayout::standard());

/// Fields that validity rules constrain: ipv4 total length, flags with fragment offset, and the
/// protocol's offset/flags word, UDP length or ICMP type.
std::vector<ColumnSpan> rule_fields(Protocol p, const FieldLayout& layout = FieldLayout::standard());

/// Fits one category per (protocol, label) present in the data. Structural columns and columns
/// with a single observed value are pinned to their modal value. Rule fields that vary are drawn
/// from their empirical values. Other columns get add-one smoothing over {0, 1}, plus -1 when the
/// column was ever absent.
SurrogateModel fit_surrogate(const TraceDataset& dataset, const FieldLayout& layout = FieldLayout::standard(),
                             std::vector<std::string>* warnings = nullptr);

SurrogateColumns fit_columns(const std::vector<TernaryVector>& rows, Protocol protocol,
                             const FieldLayout& layout = FieldLayout::standard());

std::vector<TernaryVector> sample_packets(const SurrogateModel& model, const SurrogateCategory& category, std::size_t n,
                                          std::uint64_t seed);

/// Decoded surrogate packets labelled with the category. Undecodable draws are redrawn.
std::vector<PacketRecord> sample_records(const SurrogateModel& model, const SurrogateCategory& category, std::size_t n,
                                         std::uint64_t seed, const FieldLayout& layout = FieldLayout::standard());

}  // namespace ddsynth
