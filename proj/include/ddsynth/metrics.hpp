#pragma once

#include "ddsynth/nprint.hpp"
#include "ddsynth/trace.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace ddsynth {

/// Contiguous column range a distribution is computed over.
struct FeatureScope {
  std::string name;
  ColumnSpan columns;

  static FeatureScope all_features();
  static FeatureScope protocol(Protocol p, const FieldLayout& layout = FieldLayout::standard());
  friend bool operator==(const FeatureScope& a, const FeatureScope& b) {
    return a.name == b.name && a.columns.begin == b.columns.begin && a.columns.end == b.columns.end;
  }
};

/// Empirical distribution of each group of `group_width` adjacent columns over its 3^g ternary
/// patterns. With g = 1 this is the per-column distribution over {-1, 0, 1}.
struct FeatureDistribution {
  FeatureScope scope;
  int group_width = 1;
  Eigen::MatrixXd probs;  // states x groups; each column sums to 1
  std::size_t samples = 0;

  Eigen::Index groups() const { return probs.cols(); }
  Eigen::Index states() const { return probs.rows(); }
};

/// Pattern index of `width` ternary values, most significant first, digit = value + 1.
int ternary_state(const std::int8_t* values, int width);

FeatureDistribution feature_distribution(const std::vector<TernaryVector>& rows, const FeatureScope& scope,
                                         int group_width = 1);

/// Per-group divergences. JSD uses base-2 logarithms; TVD = 1/2 sum |p - q|;
/// HD = (1/sqrt 2) |sqrt p - sqrt q|_2.
Eigen::VectorXd column_jsd(const FeatureDistribution& p, const FeatureDistribution& q);
Eigen::VectorXd column_tvd(const FeatureDistribution& p, const FeatureDistribution& q);
Eigen::VectorXd column_hellinger(const FeatureDistribution& p, const FeatureDistribution& q);

/// Means of the per-group values over the scope.
double jsd(const FeatureDistribution& p, const FeatureDistribution& q);
double tvd(const FeatureDistribution& p, const FeatureDistribution& q);
double hellinger(const FeatureDistribution& p, const FeatureDistribution& q);

struct ScopeMetrics {
  std::string scope;
  double jsd = 0.0;
  double tvd = 0.0;
  double hellinger = 0.0;
};

struct MetricReport {
  std::vector<ScopeMetrics> scopes;  // all features, then the dominant protocol
  double validity = 0.0;             // synthetic side
  double real_validity = 0.0;
  std::size_t real_samples = 0;
  std::size_t synth_samples = 0;
  int group_width = 8;
  std::string config_hash;

  const ScopeMetrics& scope(const std::string& name) const;
  std::string to_json() const;
  /// Fixed-width table: scope, JSD, TVD, HD, Valid.
  std::string to_text() const;
};

inline constexpr int kReportGroupWidth = 8;

/// Validity of ternary rows: undecodable rows count as invalid.
double row_validity(const std::vector<TernaryVector>& rows, const FieldLayout& layout = FieldLayout::standard());

MetricReport evaluate(const TraceDataset& real, const TraceDataset& synth,
                      const FieldLayout& layout = FieldLayout::standard(), int group_width = kReportGroupWidth);

/// Same comparison on already-encoded rows, e.g. images that never decoded into packets.
MetricReport evaluate(const std::vector<TernaryVector>& real, const std::vector<TernaryVector>& synth,
                      const FieldLayout& layout = FieldLayout::standard(), int group_width = kReportGroupWidth);

/// `group,state,probability` rows for every non-zero probability, preceded by a
/// `# scope <name> <begin> <end> <group_width> <samples>` line.
void write_distribution_csv(const FeatureDistribution& d, const std::filesystem::path& path);
FeatureDistribution read_distribution_csv(const std::filesystem::path& path);

}  // namespace ddsynth
