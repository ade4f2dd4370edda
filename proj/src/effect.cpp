#include "dosematch/effect.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "dosematch/errors.hpp"
#include "dosematch/stats.hpp"

namespace dosematch {

double pair_effect(double y_i, int z_i, double y_j, int z_j) {
  if (z_i == z_j) throw ValidationError("pair effect: both units have dose " + std::to_string(z_i));
  return (y_i - y_j) / static_cast<double>(z_i - z_j);
}

EffectReport summarize_effects(std::vector<double> effects) {
  if (effects.empty()) throw ValidationError("no pairs");
  EffectReport r;
  r.n_pairs = static_cast<int>(effects.size());
  r.ate = stats::mean(effects);
  r.min = stats::quantile(effects, 0.0);
  r.q25 = stats::quantile(effects, 0.25);
  r.q75 = stats::quantile(effects, 0.75);
  r.max = stats::quantile(effects, 1.0);
  r.effects = std::move(effects);
  return r;
}

EffectReport average_treatment_effect(const Matching& matching, const UnitTable& units) {
  if (matching.pairs.empty()) throw ValidationError("no pairs");
  std::vector<double> effects;
  effects.reserve(matching.pairs.size());
  double high = 0.0;
  double low = 0.0;
  for (auto [i, j] : matching.pairs) {
    if (i < 0 || j < 0 || static_cast<std::size_t>(std::max(i, j)) >= units.size()) {
      throw ValidationError("pair index outside the unit table");
    }
    const Unit& a = units[static_cast<std::size_t>(i)];
    const Unit& b = units[static_cast<std::size_t>(j)];
    if (!a.dose || !b.dose) throw ValidationError("matched unit without a dose");
    effects.push_back(pair_effect(a.outcome, *a.dose, b.outcome, *b.dose));
    const bool a_high = *a.dose > *b.dose;
    high += a_high ? a.outcome : b.outcome;
    low += a_high ? b.outcome : a.outcome;
  }
  EffectReport r = summarize_effects(std::move(effects));
  r.mean_outcome_high = high / r.n_pairs;
  r.mean_outcome_low = low / r.n_pairs;
  r.outcome_ratio = r.mean_outcome_low > 0.0 ? r.mean_outcome_high / r.mean_outcome_low
                                             : std::numeric_limits<double>::quiet_NaN();
  return r;
}

nlohmann::ordered_json to_json(const EffectReport& r, bool include_effects) {
  nlohmann::ordered_json j;
  j["ate"] = r.ate;
  j["n_pairs"] = r.n_pairs;
  j["min"] = r.min;
  j["q25"] = r.q25;
  j["q75"] = r.q75;
  j["max"] = r.max;
  j["mean_outcome_high"] = r.mean_outcome_high;
  j["mean_outcome_low"] = r.mean_outcome_low;
  // JSON has no NaN; null marks an undefined ratio.
  j["outcome_ratio"] = std::isfinite(r.outcome_ratio) ? nlohmann::ordered_json(r.outcome_ratio) : nullptr;
  if (include_effects) j["effects"] = r.effects;
  return j;
}

std::string format_effect_table(const std::vector<std::pair<std::string, EffectReport>>& rows,
                                const std::string& label_header) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %9s %9s %9s %9s %9s\n", label_header.c_str(), "ATE", "min", "25%", "75%", "max");
  out << buf;
  for (const auto& [label, r] : rows) {
    std::snprintf(buf, sizeof buf, "%-8s %9.2f %9.2f %9.2f %9.2f %9.2f\n", label.c_str(), r.ate, r.min, r.q25, r.q75,
                  r.max);
    out << buf;
  }
  return out.str();
}

}  // namespace dosematch
