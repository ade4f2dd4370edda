#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace dosematch {

/// One neighbourhood: its confounders, continuous treatment, ordinal dose,
/// outcome, and (once a model is fitted) its propensity score.
struct Unit {
  std::string id;
  std::vector<double> confounders;
  double treatment = 0.0;
  std::optional<int> dose;
  double outcome = 0.0;
  std::optional<double> score;

  bool operator==(const Unit&) const = default;
};

/// Validated, immutable population of units sharing one confounder layout.
///
/// Construction checks that ids are unique, every unit carries exactly one
/// finite value per confounder name, treatment and outcome are nonnegative,
/// and set doses lie in [0, levels-1]. Derived tables are produced by the
/// `with_*` members so the original stays untouched.
class UnitTable {
 public:
  UnitTable(std::vector<Unit> units, std::vector<std::string> confounder_names, int levels = 3);

  const std::vector<Unit>& units() const { return units_; }
  const std::vector<std::string>& confounder_names() const { return names_; }
  int levels() const { return levels_; }
  std::size_t size() const { return units_.size(); }
  std::size_t num_confounders() const { return names_.size(); }
  const Unit& operator[](std::size_t i) const { return units_[i]; }

  /// Column `p` of the confounder matrix.
  std::vector<double> column(std::size_t p) const;
  std::vector<double> treatments() const;
  std::vector<double> outcomes() const;

  UnitTable with_doses(const std::vector<int>& doses) const;
  UnitTable with_scores(const std::vector<double>& scores) const;
  UnitTable with_confounders(const std::vector<std::vector<double>>& rows) const;
  UnitTable with_levels(int levels) const;

  bool operator==(const UnitTable&) const = default;

 private:
  std::vector<Unit> units_;
  std::vector<std::string> names_;
  int levels_;
};

/// Column names used when reading a units CSV. An empty `confounders`
/// list means "every column that is not id/treatment/outcome/dose/score".
struct UnitSchema {
  std::string id = "id";
  std::string treatment = "treatment";
  std::string outcome = "outcome";
  std::string dose = "dose";
  std::string score = "score";
  std::vector<std::string> confounders;
};

UnitTable load_units(const std::string& path, const UnitSchema& schema = {}, int levels = 3);
UnitTable parse_units(const std::string& text, const UnitSchema& schema = {}, int levels = 3,
                      const std::string& source = "<memory>");

/// Columns: id, confounders..., treatment, outcome, then dose and score when
/// every unit has one.
std::string format_units(const UnitTable& table);
void save_units(const UnitTable& table, const std::string& path);

struct ColumnScaling {
  std::string name;
  double mean = 0.0;
  double stddev = 1.0;

  bool operator==(const ColumnScaling&) const = default;
};

/// Per-confounder z-score parameters.
struct ScalingParams {
  std::vector<ColumnScaling> columns;

  std::vector<double> apply(const std::vector<double>& raw) const;
  std::vector<double> invert(const std::vector<double>& standardized) const;

  bool operator==(const ScalingParams&) const = default;
};

struct Standardized {
  UnitTable table;
  ScalingParams scaling;
};

/// Z-scores every confounder column with the sample (n-1) standard deviation.
/// Throws ValidationError naming any constant column.
Standardized standardize_confounders(const UnitTable& table);

/// Applies `scaling.invert` to every unit.
UnitTable unstandardize_confounders(const UnitTable& table, const ScalingParams& scaling);

/// {name: {mean, std}} in confounder order.
nlohmann::ordered_json to_json(const ScalingParams& scaling);
ScalingParams scaling_from_json(const nlohmann::json& j, const std::vector<std::string>& order);

}  // namespace dosematch
