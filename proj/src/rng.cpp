#include "dosematch/rng.hpp"

#include <cmath>
#include <numbers>

#include "dosematch/errors.hpp"

namespace dosematch {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng CounterRng::substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix64(seed + 0x9E3779B97F4A7C15ULL);
  for (std::uint64_t p : path) key = mix64(key ^ mix64(p + 0xD1B54A32D192ED03ULL));
  return CounterRng(key);
}

CounterRng::result_type CounterRng::operator()() {
  return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform() {
  // 53 random bits, shifted half a step off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double CounterRng::exponential(double mean) { return -mean * std::log(uniform()); }

double CounterRng::truncated_normal(double mean, double sd, double lower) {
  if (!(sd > 0.0)) throw ValidationError("truncated normal: sd must be positive");
  const double a = (lower - mean) / sd;
  if (a < 0.5) {
    for (;;) {
      const double z = normal();
      if (z >= a) return mean + sd * z;
    }
  }
  // Deep tail: exponential proposal with the optimal rate (Robert, 1995).
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(uniform()) / rate;
    const double rho = std::exp(-0.5 * (z - rate) * (z - rate));
    if (uniform() <= rho) return mean + sd * z;
  }
}

}  // namespace dosematch
