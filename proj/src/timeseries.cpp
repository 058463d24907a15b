#include "ddsynth/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ddsynth {

TimeSeries bin_timestamps(const std::vector<double>& ts, double bin_width, std::string attack) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin_width must be positive");
  if (ts.empty()) throw std::invalid_argument("cannot bin an empty timestamp list");
  const auto [lo, hi] = std::minmax_element(ts.begin(), ts.end());
  TimeSeries s;
  s.bin_width = bin_width;
  s.origin = *lo;
  s.duration = std::max(*hi - *lo, bin_width);
  s.attack = std::move(attack);
  const auto bins = static_cast<Eigen::Index>(std::floor((*hi - *lo) / bin_width)) + 1;
  s.values = Eigen::VectorXd::Zero(std::max<Eigen::Index>(bins, 2));
  for (double t : ts) {
    auto b = static_cast<Eigen::Index>(std::floor((t - s.origin) / bin_width));
    s.values(std::clamp<Eigen::Index>(b, 0, bins - 1)) += 1.0;
  }
  return s;
}

std::vector<TimeSeries> split_episodes(const TraceDataset& dataset, double bin_width, double idle_gap) {
  std::map<std::string, std::vector<double>> by_label;
  for (const auto& p : dataset.packets) by_label[p.label].push_back(p.timestamp);
  std::vector<TimeSeries> out;
  for (auto& [label, ts] : by_label) {
    std::sort(ts.begin(), ts.end());
    std::size_t first = 0;
    for (std::size_t i = 1; i <= ts.size(); ++i) {
      if (i < ts.size() && ts[i] - ts[i - 1] <= idle_gap) continue;
      out.push_back(bin_timestamps(std::vector<double>(ts.begin() + static_cast<std::ptrdiff_t>(first),
                                                       ts.begin() + static_cast<std::ptrdiff_t>(i)),
                                   bin_width, label));
      first = i;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const TimeSeries& a, const TimeSeries& b) {
    return a.origin < b.origin || (a.origin == b.origin && a.attack < b.attack);
  });
  return out;
}

}  // namespace ddsynth
