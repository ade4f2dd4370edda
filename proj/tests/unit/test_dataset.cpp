#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dosematch/csv.hpp"
#include "dosematch/dataset.hpp"
#include "dosematch/errors.hpp"
#include "dosematch/io.hpp"
#include "test_support.hpp"

using namespace dosematch;

TEST_CASE("csv: quoted fields, BOM and blank lines") {
  const auto t = csv::parse("\xEF\xBB\xBF" "a,b\n\"x, y\",\"say \"\"hi\"\"\"\n\n1,2\r\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "x, y");
  CHECK(t.rows[0][1] == "say \"hi\"");
  CHECK(t.rows[1][1] == "2");
}

TEST_CASE("csv: ragged row is rejected") { CHECK_THROWS_AS(csv::parse("a,b\n1\n"), ParseError); }

TEST_CASE("csv: number parsing is strict and names the cell") {
  CHECK(csv::parse_double("2.5", 1, "x", "f") == 2.5);
  CHECK_THROWS_AS(csv::parse_double("2.5abc", 1, "x", "f"), ParseError);
  CHECK_THROWS_AS(csv::parse_double("nan", 1, "x", "f"), ParseError);
  CHECK_THROWS_AS(csv::parse_double("inf", 1, "x", "f"), ParseError);
  try {
    csv::parse_double("oops", 7, "pop", "units.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("7") != std::string::npos);
    CHECK(msg.find("pop") != std::string::npos);
  }
}

TEST_CASE("csv: format_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 123456789.123, 5e-324, 1e300, -0.0}) {
    CHECK(csv::parse_double(csv::format_double(v), 1, "v", "x") == v);
  }
}

TEST_CASE("load_units: three rows with one confounder") {
  const auto t = parse_units("id,pop,treatment,outcome\na,1,0,2\nb,2,0.5,3\nc,3,1,4\n");
  CHECK(t.size() == 3);
  CHECK(t.num_confounders() == 1);
  CHECK(t.confounder_names()[0] == "pop");
  CHECK(t[1].id == "b");
  CHECK(t[1].treatment == 0.5);
  CHECK_FALSE(t[1].dose.has_value());
  CHECK_FALSE(t[1].score.has_value());
}

TEST_CASE("load_units: negative treatment names the row") {
  try {
    parse_units("id,pop,treatment,outcome\na,1,0,2\nb,2,-0.5,3\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("load_units: schema, parse and duplicate errors") {
  try {
    parse_units("id,pop,outcome\na,1,2\n");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("treatment") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_units("id,pop,treatment,outcome\na,x,0,2\n"), ParseError);
  CHECK_THROWS_AS(parse_units("id,pop,treatment,outcome\na,nan,0,2\n"), ParseError);
  CHECK_THROWS_AS(parse_units("id,pop,treatment,outcome\na,1,0,2\na,2,0,2\n"), ValidationError);
  CHECK_THROWS_AS(parse_units("id,treatment,outcome\na,0,2\n"), SchemaError);
}

TEST_CASE("UnitTable invariants") {
  CHECK_THROWS_AS(UnitTable({Unit{"a", {1.0, 2.0}, 0.0, {}, 0.0, {}}}, {"x"}), ValidationError);
  CHECK_THROWS_AS(UnitTable({Unit{"a", {1.0}, 0.0, 3, 0.0, {}}}, {"x"}, 3), ValidationError);
  CHECK_THROWS_AS(UnitTable({Unit{"a", {1.0}, 0.0, {}, -1.0, {}}}, {"x"}), ValidationError);
  const UnitTable ok({Unit{"a", {1.0}, 0.0, 2, 0.0, {}}}, {"x"}, 3);
  CHECK_THROWS_AS(ok.with_levels(2), ValidationError);
}

TEST_CASE("load -> save -> load is the identity on a 625 x 15 table") {
  const auto table = testing::random_table(625, 15, 11);
  const auto dir = testing::temp_dir("roundtrip");
  const auto path = (dir / "units.csv").string();
  save_units(table, path);
  const auto back = load_units(path);
  CHECK(back == table);

  std::vector<int> doses;
  for (std::size_t i = 0; i < table.size(); ++i) doses.push_back(static_cast<int>(i % 3));
  const auto dosed = table.with_doses(doses);
  save_units(dosed, path);
  CHECK(load_units(path) == dosed);
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
}

TEST_CASE("standardize: [1,2,3] -> [-1,0,1]") {
  const auto t = parse_units("id,x,treatment,outcome\na,1,0,0\nb,2,0,0\nc,3,0,0\n");
  const auto s = standardize_confounders(t);
  CHECK(s.table[0].confounders[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(s.table[1].confounders[0] == doctest::Approx(0.0));
  CHECK(s.table[2].confounders[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.scaling.columns[0].mean == 2.0);
  CHECK(s.scaling.columns[0].stddev == 1.0);
}

TEST_CASE("standardize: constant column is named") {
  const auto t = parse_units("id,x,flat,treatment,outcome\na,1,5,0,0\nb,2,5,0,0\n");
  try {
    standardize_confounders(t);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("flat") != std::string::npos);
  }
}

TEST_CASE("standardize: moments, idempotence, exact inversion") {
  const auto table = testing::random_table(625, 15, 3);
  const auto s = standardize_confounders(table);
  for (std::size_t p = 0; p < table.num_confounders(); ++p) {
    const auto col = s.table.column(p);
    double m = 0.0;
    for (double v : col) m += v;
    m /= col.size();
    double ss = 0.0;
    for (double v : col) ss += (v - m) * (v - m);
    CHECK(std::abs(m) < 1e-9);
    CHECK(std::sqrt(ss / (col.size() - 1)) == doctest::Approx(1.0).epsilon(1e-9));
  }
  const auto twice = standardize_confounders(s.table);
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t p = 0; p < table.num_confounders(); ++p) {
      CHECK(std::abs(twice.table[i].confounders[p] - s.table[i].confounders[p]) < 1e-9);
    }
  }
  const auto back = unstandardize_confounders(s.table, s.scaling);
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(back[i].id == table[i].id);
    for (std::size_t p = 0; p < table.num_confounders(); ++p) {
      CHECK(std::abs(back[i].confounders[p] - table[i].confounders[p]) <= 1e-9 * std::max(1.0, std::abs(table[i].confounders[p])));
    }
  }
}

TEST_CASE("scaling JSON round-trip keeps order") {
  const auto s = standardize_confounders(testing::random_table(50, 4, 5)).scaling;
  const auto j = to_json(s);
  CHECK(j.begin().key() == "c0");
  CHECK(j["c2"].contains("std"));
  const auto back = scaling_from_json(nlohmann::json::parse(j.dump()), {"c0", "c1", "c2", "c3"});
  CHECK(back == s);
}
