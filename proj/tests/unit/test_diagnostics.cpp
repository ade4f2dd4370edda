#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dosematch/diagnostics.hpp"
#include "dosematch/errors.hpp"

using namespace dosematch;

namespace {

// Pearson correlation of average ranks, ranks computed by counting.
double rank_formula_rho(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

UnitTable paired_units(const std::vector<std::vector<double>>& conf, const std::vector<int>& doses) {
  std::vector<Unit> units;
  std::vector<std::string> names;
  for (std::size_t p = 0; p < conf[0].size(); ++p) names.push_back("c" + std::to_string(p));
  for (std::size_t i = 0; i < conf.size(); ++i) {
    Unit u;
    u.id = "u" + std::to_string(i);
    u.confounders = conf[i];
    u.dose = doses[i];
    units.push_back(u);
  }
  return UnitTable(units, names, 3);
}

}  // namespace

TEST_CASE("spearman: small monotone and antitone cases") {
  CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}).rho == doctest::Approx(1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}).rho == doctest::Approx(-1.0));
}

TEST_CASE("spearman: 100-point monotone, antitone, rank invariance, symmetry") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> n;
  std::vector<double> x, y;
  for (int i = 0; i < 100; ++i) {
    x.push_back(n(gen));
    y.push_back(n(gen));
  }
  std::vector<double> up, down, ex;
  for (double v : x) {
    up.push_back(v * v * v + 2.0);
    down.push_back(-std::exp(v));
    ex.push_back(std::exp(v));
  }
  CHECK(spearman(x, up).rho == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman(x, down).rho == doctest::Approx(-1.0).epsilon(1e-12));
  const auto base = spearman(x, y);
  CHECK(spearman(ex, y).rho == base.rho);
  CHECK(spearman(y, x).rho == base.rho);
  CHECK(base.p > 0.0);
  CHECK(base.p <= 1.0);
}

TEST_CASE("spearman: 20 points with ties match the average-rank formula") {
  const std::vector<double> x{1, 2, 2, 3, 4, 4, 4, 5, 6, 7, 7, 8, 9, 9, 10, 11, 12, 12, 13, 14};
  const std::vector<double> y{2, 1, 3, 3, 5, 4, 6, 6, 6, 8, 7, 9, 9, 12, 10, 10, 11, 15, 13, 13};
  CHECK(spearman(x, y).rho == doctest::Approx(rank_formula_rho(x, y)).epsilon(1e-12));
}

TEST_CASE("spearman: errors") {
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ValidationError);
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), ValidationError);
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), ValidationError);
}

TEST_CASE("dose matrix: counts, total and two-level share") {
  DoseDiffMatrix m;
  m.levels = 3;
  m.counts = {{0, 103, 119}, {0, 0, 38}, {0, 0, 0}};
  CHECK(m.total() == 260);
  CHECK(m.share_with_gap(2) == doctest::Approx(119.0 / 260.0));
  CHECK(std::round(m.share_with_gap(2) * 1000.0) / 10.0 == 45.8);
  CHECK(m.share_with_gap(1) == doctest::Approx(141.0 / 260.0));

  const auto t = paired_units({{0.0}, {0.0}}, {2, 0});
  const auto single = dose_difference_matrix(Matching{{{0, 1}}, 0.0}, t);
  CHECK(single.count(0, 2) == 1);
  CHECK(single.total() == 1);
  const auto j = to_json(single);
  CHECK(j.dump().find("counts") != std::string::npos);
}

TEST_CASE("dose matrix: a same-dose pair is rejected") {
  const auto t = paired_units({{0.0}, {0.0}}, {1, 1});
  CHECK_THROWS_AS(dose_difference_matrix(Matching{{{0, 1}}, 0.0}, t), ValidationError);
}

TEST_CASE("balance: identical confounders give t = 0, p = 1") {
  std::vector<std::vector<double>> conf;
  std::vector<int> doses;
  Matching m;
  for (int k = 0; k < 10; ++k) {
    conf.push_back({1.0 * k, 5.0});
    conf.push_back({1.0 * k, 5.0});
    doses.push_back(k % 2);
    doses.push_back(2);
    m.pairs.push_back({2 * k, 2 * k + 1});
  }
  const auto rows = confounder_balance(m, paired_units(conf, doses));
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.t_stat == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK(r.defined);
  }
}

TEST_CASE("balance: dwellings-sold magnitude anchor (3.29 vs 3.22 over 260 pairs)") {
  // reconstructed equal-variance samples: common sd s chosen so the Welch t is 0.79
  const int n = 260;
  const double s = 0.07 / (0.79 * std::sqrt(2.0 / n));
  std::vector<std::vector<double>> conf;
  std::vector<int> doses;
  Matching m;
  for (int k = 0; k < n; ++k) {
    // deterministic +-1 pattern with sample variance ~ s^2
    const double z = (k % 2 ? 1.0 : -1.0) * s * std::sqrt((n - 1.0) / n);
    conf.push_back({3.29 + z});
    conf.push_back({3.22 - z});
    doses.push_back(1 + k % 2);
    doses.push_back(0);
    m.pairs.push_back({2 * k, 2 * k + 1});
  }
  const auto row = confounder_balance(m, paired_units(conf, doses))[0];
  CHECK(row.mean_high == doctest::Approx(3.29));
  CHECK(row.mean_low == doctest::Approx(3.22));
  CHECK(std::abs(row.t_stat) == doctest::Approx(0.79).epsilon(0.01));
  CHECK(row.p_value == doctest::Approx(0.43).epsilon(0.02));
}

TEST_CASE("balance t is invariant under affine rescaling of a confounder") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n;
  std::vector<std::vector<double>> conf, scaled;
  std::vector<int> doses;
  Matching m;
  for (int k = 0; k < 30; ++k) {
    for (int side = 0; side < 2; ++side) {
      const double v = n(gen) + 0.3 * side;
      conf.push_back({v});
      scaled.push_back({1e5 * v - 42.0});
      doses.push_back(side == 0 ? 0 : 1 + k % 2);
    }
    m.pairs.push_back({2 * k, 2 * k + 1});
  }
  const auto a = confounder_balance(m, paired_units(conf, doses))[0];
  const auto b = confounder_balance(m, paired_units(scaled, doses))[0];
  CHECK(b.t_stat == doctest::Approx(a.t_stat).epsilon(1e-9));
  CHECK(b.p_value == doctest::Approx(a.p_value).epsilon(1e-9));
}

TEST_CASE("balance output formats") {
  const std::vector<BalanceRow> rows{{"crime_rate", 95.5, 93.25, 0.5, 0.61, 50.0, true}};
  const auto csv = format_balance_csv(rows);
  CHECK(csv.rfind("confounder,mean_high,mean_low,t_stat,p_value,df,defined\n", 0) == 0);
  CHECK(csv.find("crime_rate,95.5,93.25,0.5,0.61,50,true") != std::string::npos);
  CHECK(format_balance_table(rows).find("crime_rate") != std::string::npos);
}

TEST_CASE("stratified balance on well-specified data") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Unit> units;
  for (int i = 0; i < 3000; ++i) {
    Unit unit;
    unit.id = "u" + std::to_string(i);
    unit.confounders = {n(gen), n(gen), n(gen)};
    const double score = 0.8 * unit.confounders[0] - 0.4 * unit.confounders[1];
    const double q = u(gen);
    const double latent = score + std::log(q / (1 - q));
    unit.dose = latent < -0.7 ? 0 : (latent < 0.7 ? 1 : 2);
    unit.score = score;
    units.push_back(unit);
  }
  const auto r = stratified_balance(UnitTable(units, {"a", "b", "c"}, 3), 5, 0.01);
  CHECK(r.cells > 0);
  CHECK(r.fraction() >= 0.9);
}
