#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <random>
#include <vector>

namespace ddsynth {

/// First-order chain over states 0..n-1 with add-one smoothed transitions:
/// P(j | i) = (count(i, j) + 1) / (count(i, .) + n).
class MarkovChain {
 public:
  MarkovChain() = default;
  explicit MarkovChain(std::size_t states) : counts_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states))) {}
  explicit MarkovChain(Eigen::MatrixXd counts) : counts_(std::move(counts)) {}

  std::size_t states() const { return static_cast<std::size_t>(counts_.rows()); }
  void observe(std::size_t from, std::size_t to) { counts_(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) += 1.0; }
  void observe_sequence(const std::vector<std::size_t>& seq) {
    for (std::size_t i = 1; i < seq.size(); ++i) observe(seq[i - 1], seq[i]);
  }

  const Eigen::MatrixXd& counts() const { return counts_; }

  Eigen::MatrixXd transition_matrix() const {
    Eigen::MatrixXd p = counts_.array() + 1.0;
    p.array().colwise() /= p.rowwise().sum().array();
    return p;
  }

  std::size_t next(std::size_t from, std::mt19937_64& rng) const {
    const Eigen::VectorXd row = counts_.row(static_cast<Eigen::Index>(from)).transpose().array() + 1.0;
    std::discrete_distribution<std::size_t> d(row.data(), row.data() + row.size());
    return d(rng);
  }

  /// `length` states starting with `start`.
  std::vector<std::size_t> sample(std::size_t start, std::size_t length, std::mt19937_64& rng) const {
    std::vector<std::size_t> out;
    if (length == 0) return out;
    out.push_back(start);
    while (out.size() < length) out.push_back(next(out.back(), rng));
    return out;
  }

 private:
  Eigen::MatrixXd counts_;
};

/// Empirical transition frequencies of a state sequence (rows with no visits stay zero).
inline Eigen::MatrixXd empirical_transitions(const std::vector<std::size_t>& seq, std::size_t states) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  for (std::size_t i = 1; i < seq.size(); ++i) c(static_cast<Eigen::Index>(seq[i - 1]), static_cast<Eigen::Index>(seq[i])) += 1.0;
  for (Eigen::Index r = 0; r < c.rows(); ++r)
    if (c.row(r).sum() > 0) c.row(r) /= c.row(r).sum();
  return c;
}

}  // namespace ddsynth
