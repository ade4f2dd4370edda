#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "dosematch/dose.hpp"
#include "dosematch/errors.hpp"

using namespace dosematch;

TEST_CASE("apply: threshold semantics") {
  const DoseBinning b{{0.0, 0.250}};
  CHECK(b.apply(0.0) == 0);
  CHECK(b.apply(0.250) == 1);
  CHECK(b.apply(0.1) == 1);
  CHECK(b.apply(0.33) == 2);
  CHECK_THROWS_AS(b.apply(-0.01), ValidationError);
}

TEST_CASE("fit: one third zeros and positive median 0.250 gives [0, 0.250]") {
  // 2011-style shape: zeros, then positives whose lower half tops out at 0.25
  std::vector<double> t(30, 0.0);
  for (int i = 1; i <= 30; ++i) t.push_back(0.25 * i / 30.0);
  for (int i = 1; i <= 30; ++i) t.push_back(0.25 + 0.5 * i / 30.0);
  const auto b = fit_dose_bins(t, 3);
  REQUIRE(b.thresholds.size() == 2);
  CHECK(b.thresholds[0] == 0.0);
  CHECK(b.thresholds[1] == 0.25);
  CHECK(b.zero_level);
}

TEST_CASE("fit: degenerate inputs") {
  CHECK_THROWS_AS(fit_dose_bins(std::vector<double>(20, 0.0), 3), ValidationError);
  CHECK_THROWS_AS(fit_dose_bins({0.0, 1.0}, 3), ValidationError);
  CHECK_THROWS_AS(fit_dose_bins({0.0, 1.0, 2.0}, 1), ValidationError);
}

TEST_CASE("fit: zero-inflated exponential sample, 333 +- 1 per level") {
  std::mt19937_64 gen(7);
  std::exponential_distribution<double> e(3.0);
  std::vector<double> t;
  for (int i = 0; i < 1000; ++i) t.push_back(i % 3 == 0 ? 0.0 : e(gen));
  const auto b = fit_dose_bins(t, 3);
  std::array<int, 3> counts{};
  for (double v : t) ++counts[b.apply(v)];
  // counting oracle: 334 zeros, 666 positives split in half
  CHECK(counts[0] == 334);
  CHECK(std::abs(counts[1] - 333) <= 1);
  CHECK(std::abs(counts[2] - 333) <= 1);
  for (double v : t) CHECK((b.apply(v) == 0) == (v == 0.0));
}

TEST_CASE("fit: no zeros falls back to plain equal-frequency levels") {
  std::vector<double> t;
  for (int i = 1; i <= 90; ++i) t.push_back(i * 0.01);
  const auto b = fit_dose_bins(t, 3);
  CHECK_FALSE(b.zero_level);
  std::array<int, 3> counts{};
  for (double v : t) ++counts[b.apply(v)];
  CHECK(counts == std::array<int, 3>{30, 30, 30});
}

TEST_CASE("fit: ties stay in the lower level") {
  std::vector<double> t{0, 0, 0, 0.5, 0.5, 0.5, 0.5, 1.0, 2.0};
  const auto b = fit_dose_bins(t, 3);
  CHECK(b.apply(0.5) == 1);
  CHECK(b.apply(1.0) == 2);
}

TEST_CASE("property: apply is monotone and positive levels are balanced") {
  std::mt19937_64 gen(99);
  for (int rep = 0; rep < 50; ++rep) {
    std::uniform_int_distribution<int> nd(12, 400);
    std::lognormal_distribution<double> ln(-1.0, 1.0);
    const int n = nd(gen);
    const int levels = 2 + rep % 4;
    std::vector<double> t;
    for (int i = 0; i < n; ++i) t.push_back(i % 4 == 0 ? 0.0 : ln(gen));
    const auto b = fit_dose_bins(t, levels);
    std::vector<double> sorted = t;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) CHECK(b.apply(sorted[i - 1]) <= b.apply(sorted[i]));
    std::vector<int> counts(levels, 0);
    for (double v : t) ++counts[b.apply(v)];
    const auto [lo, hi] = std::minmax_element(counts.begin() + 1, counts.end());
    CHECK(*hi - *lo <= 1);
  }
}

TEST_CASE("json round-trip and validation") {
  const DoseBinning b{{0.0, 0.228}};
  const auto j = to_json(b);
  CHECK(j["thresholds"][1] == 0.228);
  CHECK(binning_from_json(nlohmann::json::parse(j.dump())) == b);
  CHECK_THROWS_AS(binning_from_json(nlohmann::json::parse(R"({"thresholds":[0.3,0.2]})")), ValidationError);
  CHECK_THROWS_AS(binning_from_json(nlohmann::json::parse(R"({"thresholds":[-1,0.2]})")), ValidationError);
}
