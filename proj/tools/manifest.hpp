#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace dosematch::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

/// Reproducibility record written next to every command's outputs.
struct Manifest {
  std::string command;
  std::uint64_t seed = 42;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  /// Hashes inputs and outputs as they are on disk right now.
  nlohmann::ordered_json to_json() const;
  void write(const std::string& path) const;
};

}  // namespace dosematch::cli
