#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "dosematch/errors.hpp"
#include "dosematch/geo.hpp"
#include "dosematch/io.hpp"

using namespace dosematch;
using namespace dosematch::geo;

namespace {

const std::string kFixtures = DOSEMATCH_FIXTURES "/city/";

std::string square_feature(const std::string& id, double x0, double y0, double x1, double y1) {
  char buf[400];
  std::snprintf(buf, sizeof buf,
                R"({"type":"Feature","properties":{"id":"%s"},"geometry":{"type":"Polygon","coordinates":[[[%g,%g],[%g,%g],[%g,%g],[%g,%g],[%g,%g]]]}})",
                id.c_str(), x0, y0, x1, y0, x1, y1, x0, y1, x0, y0);
  return buf;
}

std::string collection(const std::vector<std::string>& features) {
  std::string s = R"({"type":"FeatureCollection","features":[)";
  for (std::size_t i = 0; i < features.size(); ++i) s += (i ? "," : "") + features[i];
  return s + "]}";
}

Venue venue(const std::string& name, const std::string& l1, const std::string& l2 = "") {
  Venue v;
  v.id = name;
  v.name = name;
  v.category_l1 = l1;
  v.category_l2 = l2;
  return v;
}

}  // namespace

TEST_CASE("parse_boundaries: unit square") {
  const auto polys = parse_boundaries(collection({square_feature("sq", 0, 0, 1, 1)}));
  REQUIRE(polys.size() == 1);
  CHECK(polys[0].id == "sq");
  REQUIRE(polys[0].parts.size() == 1);
  REQUIRE(polys[0].parts[0].rings.size() == 1);
  CHECK(polys[0].parts[0].rings[0].size() == 5);
  CHECK(polys[0].area() == doctest::Approx(1.0));
}

TEST_CASE("parse_boundaries: orientation normalized") {
  // clockwise outer ring and counter-clockwise hole on input
  const std::string f =
      R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"h"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[0,4],[4,4],[4,0],[0,0]],[[1,1],[2,1],[2,2],[1,2],[1,1]]]}}]})";
  const auto p = parse_boundaries(f)[0];
  CHECK(signed_area(p.parts[0].rings[0]) > 0.0);
  CHECK(signed_area(p.parts[0].rings[1]) < 0.0);
  CHECK(p.area() == doctest::Approx(15.0));
  CHECK(p.contains({0.5, 0.5}));
  CHECK_FALSE(p.contains({1.5, 1.5}));
}

TEST_CASE("parse_boundaries: MultiPolygon of two squares is one neighbourhood") {
  const std::string f =
      R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"m"},"geometry":{"type":"MultiPolygon","coordinates":[[[[0,0],[1,0],[1,1],[0,1],[0,0]]],[[[3,0],[4,0],[4,1],[3,1],[3,0]]]]}}]})";
  const auto polys = parse_boundaries(f);
  REQUIRE(polys.size() == 1);
  CHECK(polys[0].parts.size() == 2);
  CHECK(polys[0].contains({3.5, 0.5}));
  CHECK_FALSE(polys[0].contains({2.0, 0.5}));
}

TEST_CASE("parse_boundaries: errors") {
  const std::string point =
      R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"pt"},"geometry":{"type":"Point","coordinates":[0,0]}}]})";
  try {
    parse_boundaries(point);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("pt") != std::string::npos);
  }
  const std::string open =
      R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{"id":"o"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}]})";
  CHECK_THROWS_AS(parse_boundaries(open), Error);
  CHECK_THROWS_AS(parse_boundaries("[1,2,3]"), Error);
}

TEST_CASE("three adjacent rectangles: areas sum to the bounding box") {
  const auto polys = parse_boundaries(collection(
      {square_feature("a", 0, 0, 1.5, 2), square_feature("b", 1.5, 0, 2.25, 2), square_feature("c", 2.25, 0, 4, 2)}));
  double total = 0.0;
  for (const auto& p : polys) total += p.area();
  // shoelace by hand: widths 1.5, 0.75, 1.75, height 2
  CHECK(polys[0].area() == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(polys[1].area() == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(polys[2].area() == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(total == doctest::Approx(4.0 * 2.0).epsilon(1e-14));
}

TEST_CASE("assign_point: interior, exterior, shared edge") {
  const auto polys = parse_boundaries(collection({square_feature("a", 0, 0, 1, 1), square_feature("b", 1, 0, 2, 1)}));
  CHECK(assign_point(0.5, 0.5, polys) == std::optional<std::string>("a"));
  CHECK_FALSE(assign_point(2.5, 2.5, polys).has_value());
  CHECK(assign_point(1.0, 0.5, polys) == std::optional<std::string>("a"));
  CHECK(assign_point(1.5, 0.5, polys) == std::optional<std::string>("b"));
  const auto only_square = parse_boundaries(collection({square_feature("sq", 0, 0, 1, 1)}));
  CHECK_FALSE(assign_point(2.0, 2.0, only_square).has_value());
}

TEST_CASE("assign_point agrees with a half-plane containment oracle on random convex polygons") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // 10 random convex polygons: sorted angles on a circle of random centre and radius.
  std::vector<std::vector<Point>> hulls;
  std::vector<std::string> features;
  for (int k = 0; k < 10; ++k) {
    const double cx = u(gen) * 10.0, cy = u(gen) * 10.0, r = 0.5 + u(gen) * 2.5;
    const int m = 3 + static_cast<int>(u(gen) * 8);
    std::vector<double> angles;
    for (int i = 0; i < m; ++i) angles.push_back(u(gen) * 2.0 * M_PI);
    std::sort(angles.begin(), angles.end());
    std::vector<Point> hull;
    for (double a : angles) hull.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    hulls.push_back(hull);
    std::string coords;
    for (std::size_t i = 0; i <= hull.size(); ++i) {
      const Point& p = hull[i % hull.size()];
      char buf[80];
      std::snprintf(buf, sizeof buf, "%s[%.17g,%.17g]", i ? "," : "", p.lon, p.lat);
      coords += buf;
    }
    features.push_back(R"({"type":"Feature","properties":{"id":"p)" + std::to_string(k) +
                       R"("},"geometry":{"type":"Polygon","coordinates":[[)" + coords + "]]}}");
  }
  const auto polys = parse_boundaries(collection(features));

  auto inside_convex = [](const std::vector<Point>& hull, double x, double y) {
    // counter-clockwise hull: inside iff left of (or on) every edge
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Point& a = hull[i];
      const Point& b = hull[(i + 1) % hull.size()];
      if ((b.lon - a.lon) * (y - a.lat) - (b.lat - a.lat) * (x - a.lon) < 0.0) return false;
    }
    return true;
  };

  int mismatches = 0;
  for (int n = 0; n < 1000; ++n) {
    const double x = u(gen) * 12.0 - 1.0, y = u(gen) * 12.0 - 1.0;
    std::optional<std::string> expected;
    for (std::size_t k = 0; k < hulls.size(); ++k) {
      if (inside_convex(hulls[k], x, y)) {
        expected = "p" + std::to_string(k);
        break;
      }
    }
    if (assign_point(x, y, polys) != expected) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("label_anchor") {
  const std::set<std::string> brands{"tesco", "sainsbury's"};
  CHECK(label_anchor(venue("Tesco", "Shop & Service"), brands));
  CHECK(label_anchor(venue("  TESCO ", "Shop & Service"), brands));
  CHECK_FALSE(label_anchor(venue("Tesco", "Food"), brands));
  CHECK_FALSE(label_anchor(venue("Joe's Cafe", "Shop & Service"), brands));
}

TEST_CASE("is_restaurant excludes branded names") {
  const std::set<std::string> brands{"pizza express"};
  CHECK(is_restaurant(venue("Luigi's", "Food", "Italian Restaurant"), brands));
  CHECK_FALSE(is_restaurant(venue("Pizza Express", "Food", "Pizza Restaurant"), brands));
  CHECK_FALSE(is_restaurant(venue("Cafe Nero", "Food", "Coffee Shop"), brands));
}

TEST_CASE("Date parsing and ordering") {
  CHECK(Date::parse("2011-12-31") < Date::parse("2012-01-01"));
  CHECK(Date::parse("2012-02-29").day == 29);
  CHECK_THROWS_AS(Date::parse("2011-02-29"), Error);
  CHECK_THROWS_AS(Date::parse("2011-13-01"), Error);
  CHECK_THROWS_AS(Date::parse("20110101"), Error);
}

TEST_CASE("build_unit_table: one neighbourhood, direct ratios and the date gate") {
  const auto polys = parse_boundaries(collection({square_feature("n", 0, 0, 1, 1)}));
  std::vector<Venue> venues;
  auto add = [&](const std::string& id, const std::string& name, const std::string& l1, const std::string& l2,
                 const std::string& created) {
    Venue v;
    v.id = id;
    v.name = name;
    v.lon = 0.5;
    v.lat = 0.5;
    v.category_l1 = l1;
    v.category_l2 = l2;
    v.created = Date::parse(created);
    venues.push_back(v);
  };
  add("a1", "Tesco", "Shop & Service", "Grocery Store", "2010-01-01");
  add("a2", "Tesco", "Shop & Service", "Grocery Store", "2011-06-01");
  add("a3", "Tesco", "Shop & Service", "Grocery Store", "2012-06-01");  // mid-year: not counted
  for (int i = 0; i < 4; ++i) add("r" + std::to_string(i), "R" + std::to_string(i), "Food", "Restaurant", "2011-01-01");
  std::vector<Tip> tips;
  for (int i = 0; i < 12; ++i) tips.push_back({"r" + std::to_string(i % 4), Date{2012, 1 + i % 12, 1}});
  tips.push_back({"r0", Date{2013, 1, 1}});
  Census census{{"pop"}, {{"n", {100.0}}}};
  const auto r = build_unit_table(venues, tips, polys, census, {"tesco"}, 2012);
  REQUIRE(r.table.size() == 1);
  CHECK(r.table[0].treatment == 0.5);
  CHECK(r.table[0].outcome == 3.0);
}

TEST_CASE("build_unit_table: errors") {
  const auto polys = parse_boundaries(collection({square_feature("n", 0, 0, 1, 1)}));
  Venue v;
  v.id = "r";
  v.name = "R";
  v.lon = v.lat = 0.5;
  v.category_l1 = "Food";
  v.category_l2 = "Restaurant";
  v.created = Date{2010, 1, 1};
  CHECK_THROWS_AS(build_unit_table({v}, {}, polys, Census{{"pop"}, {}}, {}, 2012), ValidationError);
  v.category_l2 = "Bar";
  CHECK_THROWS_AS(build_unit_table({v}, {}, polys, Census{{"pop"}, {{"n", {1.0}}}}, {}, 2012), ValidationError);
}

TEST_CASE("shrinking the brand list never increases a treatment") {
  const auto polys = load_boundaries(kFixtures + "boundaries.geojson");
  const auto venues = load_venues(kFixtures + "venues.csv");
  const auto tips = load_tips(kFixtures + "tips.csv");
  const auto census = load_census(kFixtures + "census.csv");
  const auto full = load_brands(kFixtures + "brands.txt");
  const auto base = build_unit_table(venues, tips, polys, census, full, 2012);
  for (const auto& drop : full) {
    auto fewer = full;
    fewer.erase(drop);
    const auto r = build_unit_table(venues, tips, polys, census, fewer, 2012);
    for (const auto& u : r.table.units()) {
      for (const auto& b : base.table.units()) {
        // restaurants may grow when a brand is dropped, anchors only shrink
        if (b.id == u.id) CHECK(u.treatment <= b.treatment);
      }
    }
  }
}

TEST_CASE("fixture city: hand-computed treatments and outcomes") {
  const auto polys = load_boundaries(kFixtures + "boundaries.geojson");
  const auto r = build_unit_table(load_venues(kFixtures + "venues.csv"), load_tips(kFixtures + "tips.csv"), polys,
                                  load_census(kFixtures + "census.csv"), load_brands(kFixtures + "brands.txt"), 2012,
                                  load_category_counts(kFixtures + "category_counts.json"));
  const auto expected = parse_units(read_text_file(kFixtures + "expected.csv"));
  REQUIRE(r.table.size() == 5);
  CHECK(r.dropped.empty());
  CHECK(r.unassigned_venues == 3);
  CHECK(r.table.confounder_names() == expected.confounder_names());
  for (std::size_t i = 0; i < 5; ++i) {
    CAPTURE(expected[i].id);
    CHECK(r.table[i].id == expected[i].id);
    CHECK(r.table[i].treatment == expected[i].treatment);
    CHECK(r.table[i].outcome == expected[i].outcome);
    CHECK(r.table[i].confounders == expected[i].confounders);
  }
}
