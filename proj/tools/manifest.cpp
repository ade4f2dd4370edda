#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include "dosematch/errors.hpp"
#include "dosematch/io.hpp"
#include "dosematch/version.hpp"

namespace dosematch::cli {

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  char two[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(two, sizeof two, "%02x", md[i]);
    hex += two;
  }
  return hex;
}

nlohmann::ordered_json Manifest::to_json() const {
  auto files = [](const std::vector<std::string>& paths) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : paths) arr.push_back({{"path", p}, {"sha256", sha256_file(p)}});
    return arr;
  };
  nlohmann::ordered_json j;
  j["command"] = command;
  j["tool_version"] = kVersion;
  j["seed"] = seed;
  j["config"] = config;
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  return j;
}

void Manifest::write(const std::string& path) const { write_file_atomic(path, to_json().dump(2) + "\n"); }

}  // namespace dosematch::cli
