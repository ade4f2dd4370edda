#pragma once

#include <vector>

#include "json.hpp"

namespace dosematch {

/// Ordinal treatment levels defined by ascending thresholds t[0] < t[1] < ...
/// Dose 0 iff treatment <= t[0]; dose d iff t[d-1] < treatment <= t[d];
/// dose D-1 iff treatment > t[D-2].
struct DoseBinning {
  std::vector<double> thresholds;
  /// False when the fit found no zero treatments and fell back to plain
  /// equal-frequency levels over all values.
  bool zero_level = true;

  int levels() const { return static_cast<int>(thresholds.size()) + 1; }

  /// Throws ValidationError on negative or non-finite treatment.
  int apply(double treatment) const;
  std::vector<int> apply(const std::vector<double>& treatments) const;

  bool operator==(const DoseBinning&) const = default;
};

/// Level 0 holds exactly the zero treatments; the positive treatments are cut
/// into `levels - 1` equal-frequency groups, ties staying in the lower group.
/// Without any zeros the whole sample is cut into `levels` equal-frequency
/// groups and `zero_level` is cleared.
DoseBinning fit_dose_bins(const std::vector<double>& treatments, int levels = 3);

nlohmann::ordered_json to_json(const DoseBinning& binning);
DoseBinning binning_from_json(const nlohmann::json& j);

}  // namespace dosematch
