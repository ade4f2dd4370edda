#include "dosematch/dose.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "dosematch/errors.hpp"

namespace dosematch {

int DoseBinning::apply(double treatment) const {
  if (!std::isfinite(treatment) || treatment < 0.0) {
    throw ValidationError("dose binning: treatment must be finite and nonnegative, got " +
                          std::to_string(treatment));
  }
  // First threshold that is >= treatment; values above all thresholds land in the top level.
  auto it = std::lower_bound(thresholds.begin(), thresholds.end(), treatment);
  return static_cast<int>(it - thresholds.begin());
}

std::vector<int> DoseBinning::apply(const std::vector<double>& treatments) const {
  std::vector<int> out;
  out.reserve(treatments.size());
  for (double t : treatments) out.push_back(apply(t));
  return out;
}

namespace {

// Cuts `sorted` into `groups` equal-frequency groups and returns the
// groups-1 upper edges. Each edge is an observed value; the group it closes
// includes every value tied with it.
std::vector<double> equal_frequency_edges(const std::vector<double>& sorted, int groups, double floor) {
  std::vector<double> edges;
  const std::size_t m = sorted.size();
  double prev = floor;
  for (int k = 1; k < groups; ++k) {
    const std::size_t target = (static_cast<std::size_t>(k) * m + groups - 1) / groups;  // ceil(k*m/groups)
    std::size_t idx = target == 0 ? 0 : target - 1;
    // A tie run straddling the cut moves whole into the lower group; if that
    // collapses onto the previous edge, advance to the next distinct value.
    while (idx < m && sorted[idx] <= prev) ++idx;
    if (idx >= m - 1 || sorted[idx] >= sorted.back()) {
      throw ValidationError("dose binning: too many tied treatment values to form " +
                            std::to_string(groups) + " distinct groups");
    }
    edges.push_back(sorted[idx]);
    prev = sorted[idx];
  }
  return edges;
}

}  // namespace

DoseBinning fit_dose_bins(const std::vector<double>& treatments, int levels) {
  if (levels < 2) throw ValidationError("dose binning: need at least 2 levels");
  for (double t : treatments) {
    if (!std::isfinite(t) || t < 0.0) {
      throw ValidationError("dose binning: treatments must be finite and nonnegative");
    }
  }
  const std::set<double> distinct(treatments.begin(), treatments.end());
  if (distinct.size() < static_cast<std::size_t>(levels)) {
    throw ValidationError("dose binning: " + std::to_string(distinct.size()) +
                          " distinct treatment values, need at least " + std::to_string(levels));
  }

  std::vector<double> positives;
  for (double t : treatments) {
    if (t > 0.0) positives.push_back(t);
  }
  std::sort(positives.begin(), positives.end());

  DoseBinning b;
  if (positives.size() < treatments.size()) {
    b.thresholds.push_back(0.0);
    auto edges = equal_frequency_edges(positives, levels - 1, 0.0);
    b.thresholds.insert(b.thresholds.end(), edges.begin(), edges.end());
  } else {
    b.zero_level = false;
    b.thresholds = equal_frequency_edges(positives, levels, -1.0);
  }
  return b;
}

nlohmann::ordered_json to_json(const DoseBinning& binning) {
  return {{"thresholds", binning.thresholds}, {"zero_level", binning.zero_level}};
}

DoseBinning binning_from_json(const nlohmann::json& j) {
  DoseBinning b;
  b.thresholds = j.at("thresholds").get<std::vector<double>>();
  b.zero_level = j.value("zero_level", true);
  if (b.thresholds.empty()) throw ValidationError("dose binning: empty thresholds");
  if (b.thresholds.front() < 0.0) throw ValidationError("dose binning: negative first threshold");
  for (std::size_t i = 1; i < b.thresholds.size(); ++i) {
    if (!(b.thresholds[i] > b.thresholds[i - 1])) {
      throw ValidationError("dose binning: thresholds must be strictly increasing");
    }
  }
  return b;
}

}  // namespace dosematch
