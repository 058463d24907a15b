#include "ddsynth/if_cluster.hpp"

#include "ddsynth/dtw.hpp"
#include "ddsynth/kmedoids.hpp"
#include "ddsynth/spectral.hpp"
#include "ddsynth/stl.hpp"

#include <algorithm>
#include <stdexcept>

namespace ddsynth {

void sort_chain(MetadataChain& chain) {
  std::stable_sort(chain.begin(), chain.end(), [](const Metadata& a, const Metadata& b) { return a.start < b.start; });
}

DistanceBundle if_distances(const std::vector<TimeSeries>& seqs, const IfClusterConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(seqs.size());
  if (cfg.resample_len < 4) throw std::invalid_argument("resample_len must be at least 4");
  std::vector<Eigen::VectorXd> intensity, mode;
  for (const auto& s : seqs) {
    const auto d = decompose(resample_linear(s.values, cfg.resample_len), cfg.period);
    intensity.push_back(d.intensity());
    mode.push_back(d.mode());
  }
  const Eigen::Index K = std::min<Eigen::Index>(cfg.fourier_k, cfg.resample_len / 2);
  std::vector<Eigen::VectorXd> spectra;
  for (const auto& m : mode) spectra.push_back(fourier_magnitudes(m, K));

  DistanceBundle b;
  b.intensity = Eigen::MatrixXd::Zero(n, n);
  b.periodic = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      b.intensity(i, j) = b.intensity(j, i) = dtw_distance(intensity[ui], intensity[uj]);
      b.periodic(i, j) = b.periodic(j, i) = (spectra[ui] - spectra[uj]).norm();
    }
  b.combined = (b.intensity.array().square() + b.periodic.array().square()).sqrt();
  return b;
}

IfClusterResult if_cluster(const std::vector<TimeSeries>& seqs, const IfClusterConfig& cfg) {
  if (cfg.k < 1) throw std::invalid_argument("k must be at least 1");
  if (static_cast<std::size_t>(cfg.k) > seqs.size())
    throw std::invalid_argument("k = " + std::to_string(cfg.k) + " exceeds the number of series " +
                                std::to_string(seqs.size()));
  IfClusterResult r;
  r.distances = if_distances(seqs, cfg);
  const auto p = pam(r.distances.combined, cfg.k, cfg.seed);
  r.assignment = p.labels;
  r.medoids = p.medoids;
  r.effective_clusters = p.effective_clusters;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    r.chain.push_back({seqs[i].attack, r.assignment[i], seqs[i].origin, seqs[i].duration});
  sort_chain(r.chain);
  return r;
}

}  // namespace ddsynth
