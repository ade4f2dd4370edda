#include "dosematch/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "dosematch/csv.hpp"
#include "dosematch/errors.hpp"
#include "dosematch/stats.hpp"

namespace dosematch {

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
  if (x.size() < 3) throw ValidationError("spearman: need at least 3 observations");
  const auto rx = stats::average_ranks(x);
  const auto ry = stats::average_ranks(y);
  const double mx = stats::mean(rx);
  const double my = stats::mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("spearman: constant input");
  SpearmanResult r;
  r.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(x.size()) - 2.0;
  if (std::abs(r.rho) >= 1.0) {
    r.p = 0.0;
  } else {
    const double t = r.rho * std::sqrt(df / (1.0 - r.rho * r.rho));
    r.p = stats::student_t_two_sided_p(t, df);
  }
  return r;
}

int DoseDiffMatrix::total() const {
  int t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), 0);
  return t;
}

double DoseDiffMatrix::share_with_gap(int gap) const {
  const int t = total();
  if (t == 0) return 0.0;
  int c = 0;
  for (int low = 0; low < levels; ++low) {
    if (low + gap < levels && gap > 0) c += counts[low][low + gap];
  }
  return static_cast<double>(c) / t;
}

DoseDiffMatrix dose_difference_matrix(const Matching& matching, const UnitTable& units) {
  DoseDiffMatrix m;
  m.levels = units.levels();
  m.counts.assign(m.levels, std::vector<int>(m.levels, 0));
  for (auto [i, j] : matching.pairs) {
    const auto& a = units[static_cast<std::size_t>(i)];
    const auto& b = units[static_cast<std::size_t>(j)];
    if (!a.dose || !b.dose) throw ValidationError("dose matrix: matched unit without a dose");
    if (*a.dose == *b.dose) throw ValidationError("dose matrix: matched pair shares dose " + std::to_string(*a.dose));
    ++m.counts[std::min(*a.dose, *b.dose)][std::max(*a.dose, *b.dose)];
  }
  return m;
}

std::vector<BalanceRow> confounder_balance(const Matching& matching, const UnitTable& units) {
  if (matching.pairs.empty()) throw ValidationError("balance: no pairs");
  const std::size_t P = units.num_confounders();
  std::vector<std::vector<double>> high(P), low(P);
  for (auto [i, j] : matching.pairs) {
    const auto& a = units[static_cast<std::size_t>(i)];
    const auto& b = units[static_cast<std::size_t>(j)];
    if (!a.dose || !b.dose) throw ValidationError("balance: matched unit without a dose");
    const bool a_high = *a.dose > *b.dose;
    const Unit& h = a_high ? a : b;
    const Unit& l = a_high ? b : a;
    for (std::size_t p = 0; p < P; ++p) {
      high[p].push_back(h.confounders[p]);
      low[p].push_back(l.confounders[p]);
    }
  }
  std::vector<BalanceRow> rows;
  for (std::size_t p = 0; p < P; ++p) {
    BalanceRow row;
    row.name = units.confounder_names()[p];
    row.mean_high = stats::mean(high[p]);
    row.mean_low = stats::mean(low[p]);
    if (high[p].size() >= 2) {
      const auto w = stats::welch_t_test(high[p], low[p]);
      row.t_stat = w.t;
      row.p_value = w.p;
      row.df = w.df;
      row.defined = w.defined;
    } else {
      row.defined = false;
      row.p_value = 1.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

StratifiedBalance stratified_balance(const UnitTable& units, int strata, double alpha) {
  if (strata < 1) throw ValidationError("stratified balance: need at least one stratum");
  const std::size_t n = units.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (const auto& u : units.units()) {
    if (!u.score || !u.dose) throw ValidationError("stratified balance: units need scores and doses");
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return *units[a].score < *units[b].score;
  });
  StratifiedBalance out;
  for (int s = 0; s < strata; ++s) {
    const std::size_t lo = n * static_cast<std::size_t>(s) / static_cast<std::size_t>(strata);
    const std::size_t hi = n * static_cast<std::size_t>(s + 1) / static_cast<std::size_t>(strata);
    for (int d = 0; d + 1 < units.levels(); ++d) {
      for (std::size_t p = 0; p < units.num_confounders(); ++p) {
        std::vector<double> a, b;
        for (std::size_t k = lo; k < hi; ++k) {
          const Unit& u = units[order[k]];
          if (*u.dose == d) a.push_back(u.confounders[p]);
          if (*u.dose == d + 1) b.push_back(u.confounders[p]);
        }
        if (a.size() < 2 || b.size() < 2) continue;
        ++out.cells;
        if (stats::welch_t_test(a, b).p >= alpha) ++out.not_rejected;
      }
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const DoseDiffMatrix& m) {
  nlohmann::ordered_json j;
  j["levels"] = m.levels;
  nlohmann::ordered_json cells = nlohmann::ordered_json::object();
  for (int low = 0; low < m.levels; ++low) {
    for (int high = low + 1; high < m.levels; ++high) {
      cells["(" + std::to_string(low) + "," + std::to_string(high) + ")"] = m.counts[low][high];
    }
  }
  j["counts"] = cells;
  j["total"] = m.total();
  nlohmann::ordered_json shares = nlohmann::ordered_json::object();
  for (int gap = 1; gap < m.levels; ++gap) shares[std::to_string(gap)] = m.share_with_gap(gap);
  j["share_by_gap"] = shares;
  return j;
}

nlohmann::ordered_json to_json(const SpearmanResult& s) { return {{"rho", s.rho}, {"p", s.p}}; }

std::string format_balance_csv(const std::vector<BalanceRow>& rows) {
  std::ostringstream out;
  csv::write_row(out, {"confounder", "mean_high", "mean_low", "t_stat", "p_value", "df", "defined"});
  for (const auto& r : rows) {
    csv::write_row(out, {r.name, csv::format_double(r.mean_high), csv::format_double(r.mean_low),
                         r.defined ? csv::format_double(r.t_stat) : "", csv::format_double(r.p_value),
                         std::isfinite(r.df) ? csv::format_double(r.df) : "", r.defined ? "true" : "false"});
  }
  return out.str();
}

std::string format_balance_table(const std::vector<BalanceRow>& rows) {
  std::size_t width = 10;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %12s %12s %8s %8s\n", static_cast<int>(width), "", "high", "low", "t-test",
                "p-value");
  out << buf;
  for (const auto& r : rows) {
    if (r.defined) {
      std::snprintf(buf, sizeof buf, "%-*s %12.2f %12.2f %8.2f %8.2f\n", static_cast<int>(width), r.name.c_str(),
                    r.mean_high, r.mean_low, r.t_stat, r.p_value);
    } else {
      std::snprintf(buf, sizeof buf, "%-*s %12.2f %12.2f %8s %8s\n", static_cast<int>(width), r.name.c_str(),
                    r.mean_high, r.mean_low, "n/a", "n/a");
    }
    out << buf;
  }
  return out.str();
}

}  // namespace dosematch
