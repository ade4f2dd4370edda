#include "dosematch/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "dosematch/csv.hpp"
#include "dosematch/errors.hpp"
#include "dosematch/io.hpp"

namespace dosematch {

UnitTable::UnitTable(std::vector<Unit> units, std::vector<std::string> confounder_names, int levels)
    : units_(std::move(units)), names_(std::move(confounder_names)), levels_(levels) {
  if (levels_ < 2) throw ValidationError("number of dose levels must be at least 2");
  std::unordered_set<std::string> seen_names;
  for (const auto& n : names_) {
    if (!seen_names.insert(n).second) throw ValidationError("duplicate confounder name '" + n + "'");
  }
  std::unordered_set<std::string> ids;
  for (std::size_t r = 0; r < units_.size(); ++r) {
    const Unit& u = units_[r];
    const std::string where = "unit '" + u.id + "' (row " + std::to_string(r + 1) + ")";
    if (u.id.empty()) throw ValidationError("row " + std::to_string(r + 1) + ": empty unit id");
    if (!ids.insert(u.id).second) throw ValidationError("duplicate unit id '" + u.id + "'");
    if (u.confounders.size() != names_.size()) {
      throw ValidationError(where + ": expected " + std::to_string(names_.size()) +
                            " confounders, got " + std::to_string(u.confounders.size()));
    }
    for (std::size_t p = 0; p < u.confounders.size(); ++p) {
      if (!std::isfinite(u.confounders[p])) {
        throw ValidationError(where + ": non-finite confounder '" + names_[p] + "'");
      }
    }
    if (!std::isfinite(u.treatment) || u.treatment < 0.0) {
      throw ValidationError(where + ": treatment must be finite and nonnegative");
    }
    if (!std::isfinite(u.outcome) || u.outcome < 0.0) {
      throw ValidationError(where + ": outcome must be finite and nonnegative");
    }
    if (u.dose && (*u.dose < 0 || *u.dose >= levels_)) {
      throw ValidationError(where + ": dose " + std::to_string(*u.dose) + " outside [0, " +
                            std::to_string(levels_ - 1) + "]");
    }
    if (u.score && !std::isfinite(*u.score)) throw ValidationError(where + ": non-finite score");
  }
}

std::vector<double> UnitTable::column(std::size_t p) const {
  std::vector<double> out;
  out.reserve(units_.size());
  for (const auto& u : units_) out.push_back(u.confounders.at(p));
  return out;
}

std::vector<double> UnitTable::treatments() const {
  std::vector<double> out;
  out.reserve(units_.size());
  for (const auto& u : units_) out.push_back(u.treatment);
  return out;
}

std::vector<double> UnitTable::outcomes() const {
  std::vector<double> out;
  out.reserve(units_.size());
  for (const auto& u : units_) out.push_back(u.outcome);
  return out;
}

UnitTable UnitTable::with_doses(const std::vector<int>& doses) const {
  if (doses.size() != units_.size()) throw ValidationError("dose vector length mismatch");
  auto units = units_;
  for (std::size_t i = 0; i < units.size(); ++i) units[i].dose = doses[i];
  return UnitTable(std::move(units), names_, levels_);
}

UnitTable UnitTable::with_scores(const std::vector<double>& scores) const {
  if (scores.size() != units_.size()) throw ValidationError("score vector length mismatch");
  auto units = units_;
  for (std::size_t i = 0; i < units.size(); ++i) units[i].score = scores[i];
  return UnitTable(std::move(units), names_, levels_);
}

UnitTable UnitTable::with_confounders(const std::vector<std::vector<double>>& rows) const {
  if (rows.size() != units_.size()) throw ValidationError("confounder row count mismatch");
  auto units = units_;
  for (std::size_t i = 0; i < units.size(); ++i) units[i].confounders = rows[i];
  return UnitTable(std::move(units), names_, levels_);
}

UnitTable UnitTable::with_levels(int levels) const { return UnitTable(units_, names_, levels); }

UnitTable parse_units(const std::string& text, const UnitSchema& schema, int levels,
                      const std::string& source) {
  csv::Table t = csv::parse(text, source);
  const std::size_t id_col = t.require(schema.id);
  const std::size_t treat_col = t.require(schema.treatment);
  const std::size_t out_col = t.require(schema.outcome);
  const int dose_col = t.find(schema.dose);
  const int score_col = t.find(schema.score);

  std::vector<std::size_t> conf_cols;
  std::vector<std::string> names;
  if (schema.confounders.empty()) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      const int ci = static_cast<int>(c);
      if (c == id_col || c == treat_col || c == out_col || ci == dose_col || ci == score_col) continue;
      conf_cols.push_back(c);
      names.push_back(t.header[c]);
    }
  } else {
    for (const auto& name : schema.confounders) {
      conf_cols.push_back(t.require(name));
      names.push_back(name);
    }
  }
  if (conf_cols.empty()) throw SchemaError(source + ": no confounder columns");

  std::vector<Unit> units;
  units.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = r + 1;
    Unit u;
    u.id = row[id_col];
    for (std::size_t k = 0; k < conf_cols.size(); ++k) {
      u.confounders.push_back(csv::parse_double(row[conf_cols[k]], line, names[k], source));
    }
    u.treatment = csv::parse_double(row[treat_col], line, schema.treatment, source);
    u.outcome = csv::parse_double(row[out_col], line, schema.outcome, source);
    if (u.treatment < 0.0) {
      throw ValidationError(source + ": row " + std::to_string(line) + ": negative treatment");
    }
    if (u.outcome < 0.0) {
      throw ValidationError(source + ": row " + std::to_string(line) + ": negative outcome");
    }
    if (dose_col >= 0 && !row[dose_col].empty()) {
      u.dose = static_cast<int>(csv::parse_int(row[dose_col], line, schema.dose, source));
    }
    if (score_col >= 0 && !row[score_col].empty()) {
      u.score = csv::parse_double(row[score_col], line, schema.score, source);
    }
    units.push_back(std::move(u));
  }
  return UnitTable(std::move(units), std::move(names), levels);
}

UnitTable load_units(const std::string& path, const UnitSchema& schema, int levels) {
  return parse_units(read_text_file(path), schema, levels, path);
}

std::string format_units(const UnitTable& table) {
  const bool with_dose = table.size() > 0 && std::all_of(table.units().begin(), table.units().end(),
                                                          [](const Unit& u) { return u.dose.has_value(); });
  const bool with_score = table.size() > 0 && std::all_of(table.units().begin(), table.units().end(),
                                                           [](const Unit& u) { return u.score.has_value(); });
  std::ostringstream out;
  std::vector<std::string> header{"id"};
  for (const auto& n : table.confounder_names()) header.push_back(n);
  header.push_back("treatment");
  header.push_back("outcome");
  if (with_dose) header.push_back("dose");
  if (with_score) header.push_back("score");
  csv::write_row(out, header);
  for (const auto& u : table.units()) {
    std::vector<std::string> row{u.id};
    for (double v : u.confounders) row.push_back(csv::format_double(v));
    row.push_back(csv::format_double(u.treatment));
    row.push_back(csv::format_double(u.outcome));
    if (with_dose) row.push_back(std::to_string(*u.dose));
    if (with_score) row.push_back(csv::format_double(*u.score));
    csv::write_row(out, row);
  }
  return out.str();
}

void save_units(const UnitTable& table, const std::string& path) {
  write_file_atomic(path, format_units(table));
}

std::vector<double> ScalingParams::apply(const std::vector<double>& raw) const {
  if (raw.size() != columns.size()) throw ValidationError("scaling: dimension mismatch");
  std::vector<double> out(raw.size());
  for (std::size_t p = 0; p < raw.size(); ++p) out[p] = (raw[p] - columns[p].mean) / columns[p].stddev;
  return out;
}

std::vector<double> ScalingParams::invert(const std::vector<double>& standardized) const {
  if (standardized.size() != columns.size()) throw ValidationError("scaling: dimension mismatch");
  std::vector<double> out(standardized.size());
  for (std::size_t p = 0; p < standardized.size(); ++p) {
    out[p] = standardized[p] * columns[p].stddev + columns[p].mean;
  }
  return out;
}

Standardized standardize_confounders(const UnitTable& table) {
  const std::size_t n = table.size();
  if (n < 2) throw ValidationError("standardization needs at least two units");
  ScalingParams scaling;
  for (std::size_t p = 0; p < table.num_confounders(); ++p) {
    const auto col = table.column(p);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const auto& name = table.confounder_names()[p];
    if (!(sd > 0.0) || sd <= 1e-14 * std::max(1.0, std::abs(mean))) {
      throw ValidationError("confounder '" + name + "' is constant and cannot be standardized");
    }
    scaling.columns.push_back({name, mean, sd});
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (const auto& u : table.units()) rows.push_back(scaling.apply(u.confounders));
  return {table.with_confounders(rows), std::move(scaling)};
}

UnitTable unstandardize_confounders(const UnitTable& table, const ScalingParams& scaling) {
  std::vector<std::vector<double>> rows;
  rows.reserve(table.size());
  for (const auto& u : table.units()) rows.push_back(scaling.invert(u.confounders));
  return table.with_confounders(rows);
}

nlohmann::ordered_json to_json(const ScalingParams& scaling) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& c : scaling.columns) j[c.name] = {{"mean", c.mean}, {"std", c.stddev}};
  return j;
}

ScalingParams scaling_from_json(const nlohmann::json& j, const std::vector<std::string>& order) {
  ScalingParams s;
  for (const auto& name : order) {
    if (!j.contains(name)) throw SchemaError("scaling: missing confounder '" + name + "'");
    const auto& e = j.at(name);
    const double sd = e.at("std").get<double>();
    if (!(sd > 0.0)) throw ValidationError("scaling: nonpositive std for '" + name + "'");
    s.columns.push_back({name, e.at("mean").get<double>(), sd});
  }
  return s;
}

}  // namespace dosematch
