#pragma once

#include <string>
#include <vector>

#include "dosematch/dataset.hpp"
#include "dosematch/matching.hpp"
#include "json.hpp"

namespace dosematch {

/// Distribution summary of dose-normalized pair effects.
struct EffectReport {
  double ate = 0.0;
  int n_pairs = 0;
  double min = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  std::vector<double> effects;  // one per pair, in matching order

  // Mean outcome of the higher- and lower-dose member over all pairs, and
  // their ratio (a relative-change summary; NaN when the low mean is zero).
  double mean_outcome_high = 0.0;
  double mean_outcome_low = 0.0;
  double outcome_ratio = 0.0;
};

/// (y_i - y_j) / (z_i - z_j); throws ValidationError when z_i == z_j.
double pair_effect(double y_i, int z_i, double y_j, int z_j);

/// Mean and type-7 quantiles of the pair effects. Pair indices refer to
/// positions in `units`, which must carry doses. Throws on an empty matching.
EffectReport average_treatment_effect(const Matching& matching, const UnitTable& units);

/// Report over an already computed list of pair effects (used when pooling
/// batches). Outcome means are left at zero.
EffectReport summarize_effects(std::vector<double> effects);

nlohmann::ordered_json to_json(const EffectReport& report, bool include_effects = true);

/// `label, ATE, min, 25%, 75%, max` rows.
std::string format_effect_table(const std::vector<std::pair<std::string, EffectReport>>& rows,
                                const std::string& label_header = "year");

}  // namespace dosematch
