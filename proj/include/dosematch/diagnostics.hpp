#pragma once

#include <span>
#include <string>
#include <vector>

#include "dosematch/dataset.hpp"
#include "dosematch/matching.hpp"
#include "json.hpp"

namespace dosematch {

struct SpearmanResult {
  double rho = 0.0;
  double p = 1.0;  // two-sided, t approximation with n-2 df
};

/// Rank correlation with average ranks for ties. Needs equal lengths >= 3 and
/// non-constant inputs.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

/// counts[low][high] of matched pairs by (lower dose, higher dose).
struct DoseDiffMatrix {
  int levels = 0;
  std::vector<std::vector<int>> counts;

  int count(int low, int high) const { return counts.at(low).at(high); }
  int total() const;
  /// Fraction of pairs whose dose gap equals `gap`.
  double share_with_gap(int gap) const;
};

DoseDiffMatrix dose_difference_matrix(const Matching& matching, const UnitTable& units);

struct BalanceRow {
  std::string name;
  double mean_high = 0.0;
  double mean_low = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  /// False when the Welch statistic is undefined (zero variance in both
  /// groups with different means).
  bool defined = true;
};

/// Welch t-test per confounder between the higher-dose and lower-dose members
/// of every pair. `units` supplies doses and the (raw) confounder values.
std::vector<BalanceRow> confounder_balance(const Matching& matching, const UnitTable& units);

struct StratifiedBalance {
  int cells = 0;           // (stratum, confounder, adjacent dose pair) cells tested
  int not_rejected = 0;    // cells with p >= alpha
  double fraction() const { return cells == 0 ? 1.0 : static_cast<double>(not_rejected) / cells; }
};

/// Balancing-property check on fitted scores: stratify units into score
/// quantile strata and, within each stratum, Welch-test every confounder
/// between adjacent dose groups. Cells with fewer than two units in a group
/// are skipped. `units` must carry scores and doses.
StratifiedBalance stratified_balance(const UnitTable& units, int strata = 5, double alpha = 0.01);

nlohmann::ordered_json to_json(const DoseDiffMatrix& m);
nlohmann::ordered_json to_json(const SpearmanResult& s);

/// `confounder,mean_high,mean_low,t_stat,p_value,df,defined`
std::string format_balance_csv(const std::vector<BalanceRow>& rows);
/// Fixed-width `name  high  low  t-test  p-value` table.
std::string format_balance_table(const std::vector<BalanceRow>& rows);

}  // namespace dosematch
