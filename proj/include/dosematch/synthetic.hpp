#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dosematch/dataset.hpp"
#include "dosematch/effect.hpp"
#include "dosematch/rng.hpp"
#include "json.hpp"

namespace dosematch {

enum class DistributionKind { TruncatedNormal, Exponential };

/// Marginal model for one confounder: a normal truncated below at 0, or an
/// exponential.
struct DistributionSpec {
  std::string name;
  DistributionKind kind = DistributionKind::TruncatedNormal;
  double mu = 0.0;     // truncated normal: location of the parent normal
  double sigma = 1.0;  // truncated normal: scale of the parent normal
  double rate = 1.0;   // exponential

  double sample(CounterRng& rng) const;
  /// Mean of the (truncated) distribution.
  double mean() const;
  void validate() const;
};

/// MLE per column: exponential rate = 1 / mean; truncated-normal (mu, sigma)
/// by Newton iterations on the likelihood truncated at 0. Columns missing
/// from `kinds` default to truncated normal.
std::vector<DistributionSpec> fit_confounder_distributions(const UnitTable& table,
                                                          const std::map<std::string, DistributionKind>& kinds);

DistributionSpec fit_exponential(std::span<const double> values, const std::string& name = "");
DistributionSpec fit_truncated_normal(std::span<const double> values, const std::string& name = "");

/// Log-likelihood of a normal(mu, sigma) truncated below at 0.
double truncated_normal_log_likelihood(std::span<const double> values, double mu, double sigma);

struct SyntheticConfig {
  double alpha = 1.2;
  double beta_gen = 0.4;
  std::vector<double> gammas{4.0};
  double eta = 5.4;
  int units_per_batch = 625;
  int batches = 10;
  std::uint64_t seed = 42;
  int levels = 3;
  double epsilon = 1e-8;
  std::vector<DistributionSpec> specs;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Fifteen neighbourhood confounders modelled on census-scale magnitudes,
/// with generator constants calibrated so a unit dose step corresponds to
/// roughly one unit of treatment.
SyntheticConfig default_synthetic_config();

nlohmann::ordered_json to_json(const SyntheticConfig& config);
/// Missing fields keep their defaults; "gamma" (scalar) or "gammas" (list).
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

/// f(x) = sum(x) / eta; draws z ~ Exponential(mean f(x)). Throws if f(x) <= 0.
double gen_treatment(std::span<const double> x, double eta, CounterRng& rng);

/// Normal(mean alpha * sum(x), sd beta_gen * sum(x)) truncated so the result
/// stays nonnegative, plus gamma * z. Throws if beta_gen * sum(x) <= 0.
double gen_outcome(std::span<const double> x, double z, double alpha, double beta_gen, double gamma, CounterRng& rng);

/// One batch of synthetic units. Raw confounders are drawn from the specs;
/// the generating sums use the batch's min-max normalized confounders.
/// Stream depends only on (seed, batch), so every gamma sees the same
/// confounders and treatments.
UnitTable generate_batch(const SyntheticConfig& config, double gamma, int batch);

struct BatchEstimate {
  int batch = 0;
  bool ok = false;
  std::string error;
  double ate = 0.0;
  int n_pairs = 0;
};

struct GammaResult {
  double true_ate = 0.0;
  EffectReport pooled;  // over every pair of every successful batch
  std::vector<BatchEstimate> batches;
  int failed_batches = 0;
};

struct BenchmarkReport {
  std::vector<GammaResult> rows;
};

/// For every gamma and batch: generate, discretize, fit, match, estimate.
/// Batches run concurrently; results are assembled in batch order. A failing
/// batch is recorded and skipped.
BenchmarkReport run_benchmark(const SyntheticConfig& config, unsigned threads = 0);

nlohmann::ordered_json to_json(const BenchmarkReport& report);
/// `ATE, est. ATE, min, 25%, 75%, max`
std::string format_benchmark_table(const BenchmarkReport& report);

}  // namespace dosematch
