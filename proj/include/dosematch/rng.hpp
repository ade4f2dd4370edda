#pragma once

#include <cstdint>
#include <initializer_list>

namespace dosematch {

/// Counter-based generator: the i-th output is a fixed bijective mix of
/// (key, i), so a stream is fully determined by its key and position and
/// substreams never depend on the order in which they are consumed.
/// The mix is the SplitMix64 finalizer.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Stream keyed by a seed and a path of stream indices, e.g. (seed, batch).
  static CounterRng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Exponential with the given mean.
  double exponential(double mean);
  /// Normal(mean, sd) conditioned on being >= lower.
  double truncated_normal(double mean, double sd, double lower);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace dosematch
