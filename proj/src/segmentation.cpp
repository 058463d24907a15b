#include "ddsynth/segmentation.hpp"

#include "ddsynth/dtw.hpp"
#include "ddsynth/timeseries.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace ddsynth {

namespace {

void check_config(const SegmentConfig& cfg) {
  if (cfg.l_min < 2) throw std::invalid_argument("l_min must be at least 2");
  if (cfg.l_min > cfg.l_max)
    throw std::invalid_argument("l_min (" + std::to_string(cfg.l_min) + ") exceeds l_max (" + std::to_string(cfg.l_max) + ")");
}

/// Segment lengths that leave either nothing or at least l_min samples behind, longest first.
std::vector<int> admissible_lengths(int remaining, const SegmentConfig& cfg) {
  std::vector<int> out;
  for (int L = std::min(cfg.l_max, remaining); L >= cfg.l_min; --L)
    if (remaining - L == 0 || remaining - L >= cfg.l_min) out.push_back(L);
  return out;
}

Eigen::VectorXd edge_pad(const Eigen::VectorXd& x, Eigen::Index n) {
  Eigen::VectorXd out(n);
  const Eigen::Index m = std::min(n, x.size());
  out.head(m) = x.head(m);
  if (n > m) out.tail(n - m).setConstant(x(m - 1));
  return out;
}

struct Sweep {
  const SegmentConfig& cfg;
  PatternLibrary& lib;
  std::vector<StateTriplet> triplets;
  std::vector<bool> matched;
  std::vector<std::size_t> pending;  // flat segments, resolved once the library is final

  void run(const Eigen::Ref<const Eigen::VectorXd>& s) {
    const auto n = static_cast<int>(s.size());
    if (n < cfg.l_min)
      throw std::invalid_argument("series of length " + std::to_string(n) + " is shorter than l_min " +
                                  std::to_string(cfg.l_min));
    for (int pos = 0; pos < n;) {
      const int remaining = n - pos;
      auto lengths = admissible_lengths(remaining, cfg);
      bool attach_tail = false;
      if (lengths.empty()) {
        lengths.push_back(std::min(cfg.l_max, remaining));
        attach_tail = true;
      }
      int chosen = -1, chosen_pattern = -1;
      bool flat = false;
      for (int L : lengths) {
        const auto w = s.segment(pos, L);
        if (value_span(w) <= 0.0) {
          chosen = L;
          flat = true;
          break;
        }
        double best = std::numeric_limits<double>::infinity();
        int best_id = -1;
        for (int id = 0; id < lib.size(); ++id) {
          const double d = prefix_distance(w, lib[id]);
          if (d < best) best = d, best_id = id;
        }
        if (best_id >= 0 && best <= cfg.match_threshold) {
          chosen = L;
          chosen_pattern = best_id;
          break;
        }
      }
      bool was_matched = chosen > 0;
      if (chosen < 0) {
        chosen = lengths.front();
        const auto w = s.segment(pos, chosen);
        if (cfg.grow_library || lib.size() == 0) {
          lib.patterns.push_back({edge_pad(minmax_normalize(w), cfg.l_max), 0});
          chosen_pattern = lib.size() - 1;
        } else {
          double best = std::numeric_limits<double>::infinity();
          for (int id = 0; id < lib.size(); ++id) {
            const double d = prefix_distance(w, lib[id]);
            if (d < best) best = d, chosen_pattern = id;
          }
        }
      }
      const int alpha = attach_tail ? remaining : chosen;
      StateTriplet t{chosen_pattern, alpha, value_span(s.segment(pos, alpha))};
      if (flat) {
        t.beta = 0.0;
        pending.push_back(triplets.size());
      } else if (cfg.grow_library) {
        ++lib.patterns[static_cast<std::size_t>(chosen_pattern)].support;
      }
      triplets.push_back(t);
      matched.push_back(was_matched);
      pos += alpha;
    }
  }
};

int most_supported(const PatternLibrary& lib) {
  int best = 0;
  for (int id = 1; id < lib.size(); ++id)
    if (lib[id].support > lib[best].support) best = id;
  return best;
}

void resolve_flat(PatternLibrary& lib, std::vector<std::vector<StateTriplet>*> chains,
                  const std::vector<std::vector<std::size_t>>& pending, int l_max, bool count_support) {
  std::size_t flats = 0;
  for (const auto& p : pending) flats += p.size();
  if (flats == 0) return;
  if (lib.size() == 0) lib.patterns.push_back({Eigen::VectorXd::LinSpaced(l_max, 0.0, 1.0), 0});
  const int target = most_supported(lib);
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (auto i : pending[c]) (*chains[c])[i].pattern = target;
  if (count_support) lib.patterns[static_cast<std::size_t>(target)].support += static_cast<int>(flats);
}

/// Folds patterns with support below min_support into the nearest supported pattern and compacts ids.
void merge_low_support(PatternLibrary& lib, std::vector<std::vector<StateTriplet>*> chains, int min_support) {
  if (lib.size() == 0) return;
  std::vector<bool> keep(static_cast<std::size_t>(lib.size()));
  bool any = false;
  for (int id = 0; id < lib.size(); ++id) any |= keep[static_cast<std::size_t>(id)] = lib[id].support >= min_support;
  if (!any) keep[static_cast<std::size_t>(most_supported(lib))] = true;

  std::vector<int> target(static_cast<std::size_t>(lib.size()));
  for (int id = 0; id < lib.size(); ++id) {
    if (keep[static_cast<std::size_t>(id)]) {
      target[static_cast<std::size_t>(id)] = id;
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (int other = 0; other < lib.size(); ++other) {
      if (!keep[static_cast<std::size_t>(other)]) continue;
      const double d = dtw_distance(lib[id].values, lib[other].values);
      if (d < best) best = d, target[static_cast<std::size_t>(id)] = other;
    }
    lib.patterns[static_cast<std::size_t>(target[static_cast<std::size_t>(id)])].support += lib[id].support;
  }
  std::vector<int> compact(static_cast<std::size_t>(lib.size()), -1);
  PatternLibrary out;
  for (int id = 0; id < lib.size(); ++id)
    if (keep[static_cast<std::size_t>(id)]) {
      compact[static_cast<std::size_t>(id)] = out.size();
      out.patterns.push_back(lib[id]);
    }
  for (auto* chain : chains)
    for (auto& t : *chain)
      t.pattern = compact[static_cast<std::size_t>(target[static_cast<std::size_t>(t.pattern)])];
  lib = std::move(out);
}

}  // namespace

double prefix_distance(const Eigen::Ref<const Eigen::VectorXd>& window, const Pattern& p) {
  const Eigen::Index L = std::min(window.size(), p.values.size());
  return dtw_distance(minmax_normalize(window.head(L)), minmax_normalize(p.values.head(L)));
}

Segmentation segment_series(const Eigen::Ref<const Eigen::VectorXd>& s, const SegmentConfig& cfg, PatternLibrary library) {
  check_config(cfg);
  Sweep sweep{cfg, library, {}, {}, {}};
  sweep.run(s);
  Segmentation out;
  out.triplets = std::move(sweep.triplets);
  out.matched = std::move(sweep.matched);
  resolve_flat(library, {&out.triplets}, {sweep.pending}, cfg.l_max, cfg.grow_library);
  if (cfg.grow_library) merge_low_support(library, {&out.triplets}, cfg.min_support);
  out.library = std::move(library);
  return out;
}

CorpusSegmentation segment_corpus(const std::vector<Eigen::VectorXd>& series, const SegmentConfig& cfg) {
  check_config(cfg);
  CorpusSegmentation out;
  std::vector<std::vector<std::size_t>> pending;
  for (const auto& s : series) {
    Sweep sweep{cfg, out.library, {}, {}, {}};
    sweep.run(s);
    out.chains.push_back(std::move(sweep.triplets));
    pending.push_back(std::move(sweep.pending));
  }
  std::vector<std::vector<StateTriplet>*> chains;
  for (auto& c : out.chains) chains.push_back(&c);
  resolve_flat(out.library, chains, pending, cfg.l_max, cfg.grow_library);
  if (cfg.grow_library) merge_low_support(out.library, chains, cfg.min_support);
  return out;
}

Eigen::VectorXd reconstruct_segment(const StateTriplet& t, const PatternLibrary& lib) {
  if (t.alpha < 0) throw std::invalid_argument("segment length must be non-negative");
  if (t.beta == 0.0) return Eigen::VectorXd::Zero(t.alpha);
  const auto& p = lib[t.pattern].values;
  const double span = value_span(p);
  if (!(span > 0.0)) throw std::invalid_argument("pattern " + std::to_string(t.pattern) + " has zero span");
  return edge_pad(p * (t.beta / span), t.alpha);
}

double calibrate_threshold(const std::vector<Eigen::VectorXd>& series, int l_max, double quantile) {
  if (l_max < 2) throw std::invalid_argument("l_max must be at least 2");
  std::vector<Eigen::VectorXd> windows;
  const int stride = std::max(1, l_max / 2);
  for (const auto& s : series)
    for (Eigen::Index pos = 0; pos + l_max <= s.size(); pos += stride) windows.push_back(minmax_normalize(s.segment(pos, l_max)));
  if (windows.size() < 2) return 0.05 * l_max;
  constexpr std::size_t kMaxWindows = 200;
  if (windows.size() > kMaxWindows) {
    std::vector<Eigen::VectorXd> picked;
    for (std::size_t i = 0; i < kMaxWindows; ++i) picked.push_back(windows[i * windows.size() / kMaxWindows]);
    windows = std::move(picked);
  }
  std::vector<double> d;
  for (std::size_t i = 0; i < windows.size(); ++i)
    for (std::size_t j = i + 1; j < windows.size(); ++j) d.push_back(dtw_distance(windows[i], windows[j]));
  std::sort(d.begin(), d.end());
  const double pos = quantile * static_cast<double>(d.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, d.size() - 1);
  return d[lo] + (pos - static_cast<double>(lo)) * (d[hi] - d[lo]);
}

}  // namespace ddsynth
