#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "dosematch/effect.hpp"
#include "dosematch/errors.hpp"

using namespace dosematch;

namespace {

UnitTable units_with(const std::vector<std::pair<double, int>>& outcome_dose) {
  std::vector<Unit> units;
  for (std::size_t i = 0; i < outcome_dose.size(); ++i) {
    Unit u;
    u.id = "u" + std::to_string(i);
    u.confounders = {0.0};
    u.outcome = outcome_dose[i].first;
    u.dose = outcome_dose[i].second;
    units.push_back(u);
  }
  return UnitTable(units, {"x"}, 3);
}

}  // namespace

TEST_CASE("pair_effect") {
  CHECK(pair_effect(3.0, 2, 1.0, 0) == 1.0);
  CHECK(pair_effect(1.0, 0, 3.0, 2) == 1.0);
  CHECK(pair_effect(4.0, 1, 4.0, 2) == 0.0);
  CHECK_THROWS_AS(pair_effect(3.0, 1, 1.0, 1), ValidationError);
}

TEST_CASE("single pair: every summary equals the effect") {
  const auto t = units_with({{3.0, 1}, {1.0, 0}});
  Matching m{{{0, 1}}, 0.0};
  const auto r = average_treatment_effect(m, t);
  CHECK(r.ate == 2.0);
  CHECK(r.n_pairs == 1);
  CHECK(r.min == 2.0);
  CHECK(r.q25 == 2.0);
  CHECK(r.q75 == 2.0);
  CHECK(r.max == 2.0);
  CHECK(r.mean_outcome_high == 3.0);
  CHECK(r.mean_outcome_low == 1.0);
  CHECK(r.outcome_ratio == 3.0);
}

TEST_CASE("effects -1, 0, 1") {
  const auto r = summarize_effects({1.0, -1.0, 0.0});
  CHECK(r.ate == 0.0);
  CHECK(r.min == -1.0);
  CHECK(r.max == 1.0);
  CHECK(r.q25 == -0.5);
  CHECK(r.q75 == 0.5);
}

TEST_CASE("empty matching is an error") {
  const auto t = units_with({{3.0, 1}, {1.0, 0}});
  try {
    average_treatment_effect(Matching{}, t);
    FAIL("expected error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("no pairs") != std::string::npos);
  }
}

TEST_CASE("binary doses reduce to the mean treated-minus-control difference") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<std::pair<double, int>> od;
  Matching m;
  double direct = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double yt = u(gen), yc = u(gen);
    // alternate which member of the pair comes first
    if (k % 2) {
      od.push_back({yt, 1});
      od.push_back({yc, 0});
    } else {
      od.push_back({yc, 0});
      od.push_back({yt, 1});
    }
    m.pairs.push_back({2 * k, 2 * k + 1});
    direct += yt - yc;
  }
  const auto r = average_treatment_effect(m, units_with(od));
  CHECK(r.ate == doctest::Approx(direct / 50).epsilon(1e-14));
}

TEST_CASE("properties: shifts, mean identity, partition additivity, quantile order") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::uniform_int_distribution<int> dd(0, 2);
  std::vector<std::pair<double, int>> od;
  Matching m;
  for (int k = 0; k < 40; ++k) {
    const int a = dd(gen);
    const int b = (a + 1 + k % 2) % 3;
    od.push_back({u(gen), a});
    od.push_back({u(gen), b});
    m.pairs.push_back({2 * k, 2 * k + 1});
  }
  const auto t = units_with(od);
  const auto r = average_treatment_effect(m, t);
  double mean = 0.0;
  for (double e : r.effects) mean += e;
  CHECK(std::abs(r.ate - mean / r.effects.size()) <= 1e-12);
  CHECK(r.min <= r.q25);
  CHECK(r.q25 <= r.q75);
  CHECK(r.q75 <= r.max);

  auto shifted = od;
  for (auto& [y, d] : shifted) y += 7.0;
  CHECK(average_treatment_effect(m, units_with(shifted)).ate == doctest::Approx(r.ate).epsilon(1e-12));

  // add c only to the higher-dose member of each pair
  auto high = od;
  std::vector<double> expected;
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    auto [i, j] = m.pairs[k];
    const int hi = od[i].second > od[j].second ? i : j;
    high[hi].first += 3.0;
    expected.push_back(r.effects[k] + 3.0 / std::abs(od[i].second - od[j].second));
  }
  const auto rh = average_treatment_effect(m, units_with(high));
  for (std::size_t k = 0; k < expected.size(); ++k) CHECK(rh.effects[k] == doctest::Approx(expected[k]).epsilon(1e-12));

  Matching first, second;
  first.pairs.assign(m.pairs.begin(), m.pairs.begin() + 15);
  second.pairs.assign(m.pairs.begin() + 15, m.pairs.end());
  const double combined =
      (average_treatment_effect(first, t).ate * 15 + average_treatment_effect(second, t).ate * 25) / 40;
  CHECK(combined == doctest::Approx(r.ate).epsilon(1e-12));
}

TEST_CASE("json and table output") {
  const auto r = summarize_effects({0.5, 1.5});
  const auto j = to_json(r);
  CHECK(j["ate"] == 1.0);
  CHECK(j["n_pairs"] == 2);
  CHECK(j["effects"].size() == 2);
  CHECK_FALSE(to_json(r, false).contains("effects"));
  const auto table = format_effect_table({{"2011", r}});
  CHECK(table.find("year") != std::string::npos);
  CHECK(table.find("2011") != std::string::npos);
}
