#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dosematch/dataset.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dosematch_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// N units with P uniform confounders on awkward scales, positive treatments.
inline dosematch::UnitTable random_table(std::size_t n, std::size_t p, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < p; ++k) names.push_back("c" + std::to_string(k));
  std::vector<dosematch::Unit> units;
  for (std::size_t i = 0; i < n; ++i) {
    dosematch::Unit unit;
    unit.id = "u" + std::to_string(i);
    for (std::size_t k = 0; k < p; ++k) unit.confounders.push_back(u(gen) * std::pow(10.0, double(k % 6) - 1.0) / 3.0);
    unit.treatment = u(gen) * 0.7;
    unit.outcome = u(gen) * 11.0 / 7.0;
    units.push_back(unit);
  }
  return dosematch::UnitTable(units, names);
}

}  // namespace testing
