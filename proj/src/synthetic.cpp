#include "dosematch/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "dosematch/errors.hpp"
#include "dosematch/pipeline.hpp"
#include "dosematch/stats.hpp"

namespace dosematch {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_normal_cdf(double z) {
  if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Asymptotic tail: Phi(z) ~ phi(z)/|z| * (1 - 1/z^2 + 3/z^4)
  const double z2 = z * z;
  return -0.5 * z2 - kLogSqrt2Pi - std::log(-z) + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

// phi(z) / Phi(z)
double inverse_mills(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi - log_normal_cdf(z)); }

}  // namespace

void DistributionSpec::validate() const {
  if (kind == DistributionKind::TruncatedNormal) {
    if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu)) {
      throw ValidationError("distribution '" + name + "': sigma must be positive and finite");
    }
  } else if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw ValidationError("distribution '" + name + "': rate must be positive and finite");
  }
}

double DistributionSpec::sample(CounterRng& rng) const {
  if (kind == DistributionKind::Exponential) return rng.exponential(1.0 / rate);
  return rng.truncated_normal(mu, sigma, 0.0);
}

double DistributionSpec::mean() const {
  if (kind == DistributionKind::Exponential) return 1.0 / rate;
  return mu + sigma * inverse_mills(mu / sigma);
}

double truncated_normal_log_likelihood(std::span<const double> values, double mu, double sigma) {
  const double n = static_cast<double>(values.size());
  double ss = 0.0;
  for (double x : values) ss += (x - mu) * (x - mu);
  return -n * (std::log(sigma) + kLogSqrt2Pi) - ss / (2.0 * sigma * sigma) - n * log_normal_cdf(mu / sigma);
}

DistributionSpec fit_exponential(std::span<const double> values, const std::string& name) {
  if (values.empty()) throw ValidationError("exponential fit '" + name + "': empty column");
  for (double v : values) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw ValidationError("exponential fit '" + name + "': negative or non-finite value");
    }
  }
  const double m = stats::mean(values);
  if (!(m > 0.0)) throw ValidationError("exponential fit '" + name + "': column is identically zero");
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  if (lo == hi) throw ValidationError("exponential fit '" + name + "': constant column");
  DistributionSpec s;
  s.name = name;
  s.kind = DistributionKind::Exponential;
  s.rate = 1.0 / m;
  return s;
}

DistributionSpec fit_truncated_normal(std::span<const double> values, const std::string& name) {
  if (values.size() < 2) throw ValidationError("truncated-normal fit '" + name + "': need at least two values");
  for (double v : values) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw ValidationError("truncated-normal fit '" + name + "': value outside the support [0, inf)");
    }
  }
  const double m0 = stats::mean(values);
  const double s0 = std::sqrt(stats::variance(values));
  if (!(s0 > 0.0) || s0 <= 1e-14 * std::abs(m0)) {
    throw ValidationError("truncated-normal fit '" + name + "': constant column");
  }
  const double n = static_cast<double>(values.size());

  // Coordinates u = (mu / s0, log(sigma / s0)) keep the problem scale-free.
  auto unpack = [&](const Eigen::Vector2d& u) { return std::pair{u[0] * s0, s0 * std::exp(u[1])}; };
  auto objective = [&](const Eigen::Vector2d& u) {
    auto [mu, sigma] = unpack(u);
    return truncated_normal_log_likelihood(values, mu, sigma);
  };
  auto grad = [&](const Eigen::Vector2d& u) {
    auto [mu, sigma] = unpack(u);
    double s1 = 0.0, s2 = 0.0;
    for (double x : values) {
      s1 += x - mu;
      s2 += (x - mu) * (x - mu);
    }
    const double lam = inverse_mills(mu / sigma);
    const double d_mu = s1 / (sigma * sigma) - n * lam / sigma;
    const double d_sigma = -n / sigma + s2 / (sigma * sigma * sigma) + n * lam * mu / (sigma * sigma);
    return Eigen::Vector2d(d_mu * s0, d_sigma * sigma);
  };

  Eigen::Vector2d u(m0 / s0, 0.0);
  double value = objective(u);
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::Vector2d g = grad(u);
    if (g.norm() <= 1e-9 * n) {
      DistributionSpec s;
      s.name = name;
      s.kind = DistributionKind::TruncatedNormal;
      std::tie(s.mu, s.sigma) = unpack(u);
      return s;
    }
    // Hessian by central differences of the analytic gradient.
    Eigen::Matrix2d H;
    for (int k = 0; k < 2; ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(u[k]));
      Eigen::Vector2d up = u, dn = u;
      up[k] += h;
      dn[k] -= h;
      H.col(k) = (grad(up) - grad(dn)) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose());
    Eigen::Vector2d dir = g;
    Eigen::LLT<Eigen::Matrix2d> llt(-H);
    if (llt.info() == Eigen::Success) {
      const Eigen::Vector2d newton = llt.solve(g);
      if (newton.allFinite() && g.dot(newton) > 0.0) dir = newton;
    }
    if (dir.norm() > 5.0) dir *= 5.0 / dir.norm();
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Eigen::Vector2d trial = u + t * dir;
      const double v = objective(trial);
      if (std::isfinite(v) && v >= value + 1e-4 * t * g.dot(dir)) {
        u = trial;
        value = v;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  throw ConvergenceError("truncated-normal fit '" + name + "' did not converge", 200, grad(u).norm());
}

std::vector<DistributionSpec> fit_confounder_distributions(const UnitTable& table,
                                                          const std::map<std::string, DistributionKind>& kinds) {
  std::vector<DistributionSpec> out;
  for (std::size_t p = 0; p < table.num_confounders(); ++p) {
    const auto& name = table.confounder_names()[p];
    const auto col = table.column(p);
    auto it = kinds.find(name);
    const auto kind = it == kinds.end() ? DistributionKind::TruncatedNormal : it->second;
    out.push_back(kind == DistributionKind::Exponential ? fit_exponential(col, name) : fit_truncated_normal(col, name));
  }
  return out;
}

void SyntheticConfig::validate() const {
  if (!std::isfinite(alpha)) throw ValidationError("config field 'alpha' must be finite");
  if (!(beta_gen > 0.0) || !std::isfinite(beta_gen)) throw ValidationError("config field 'beta_gen' must be positive");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("config field 'eta' must be positive");
  if (gammas.empty()) throw ValidationError("config field 'gammas' must not be empty");
  for (double g : gammas) {
    if (!std::isfinite(g)) throw ValidationError("config field 'gammas' must be finite");
  }
  if (units_per_batch <= 0) throw ValidationError("config field 'units_per_batch' must be positive");
  if (batches <= 0) throw ValidationError("config field 'batches' must be positive");
  if (levels < 2) throw ValidationError("config field 'levels' must be at least 2");
  if (!(epsilon > 0.0)) throw ValidationError("config field 'epsilon' must be positive");
  if (specs.empty()) throw ValidationError("config field 'specs' must list at least one confounder");
  for (const auto& s : specs) s.validate();
}

SyntheticConfig default_synthetic_config() {
  using K = DistributionKind;
  auto tn = [](const char* name, double mu, double sigma) {
    return DistributionSpec{name, K::TruncatedNormal, mu, sigma, 1.0};
  };
  auto ex = [](const char* name, double mean) { return DistributionSpec{name, K::Exponential, 0.0, 1.0, 1.0 / mean}; };
  SyntheticConfig c;
  c.specs = {
      tn("dwellings_sold_pct", 3.2, 1.2),
      tn("aged_0_15", 2700.0, 700.0),
      tn("aged_16_64", 9400.0, 1800.0),
      tn("aged_65_plus", 1520.0, 500.0),
      tn("gcse_score", 350.0, 15.0),
      tn("ptal_score", 3.8, 1.5),
      tn("mean_income", 53000.0, 15000.0),
      tn("median_house_price", 380000.0, 150000.0),
      ex("full_time_employees", 5500.0),
      ex("part_time_employees", 2000.0),
      tn("dwellings", 5500.0, 1000.0),
      ex("lakes_rivers", 0.14),
      ex("parks", 1.2),
      ex("tourist_locations", 1.5),
      tn("crime_rate", 95.0, 40.0),
  };
  c.gammas = {0.25, 1.5, 4.0, 10.0};
  return c;
}

namespace {

const char* kind_name(DistributionKind k) {
  return k == DistributionKind::Exponential ? "exponential" : "truncated_normal";
}

}  // namespace

nlohmann::ordered_json to_json(const SyntheticConfig& c) {
  nlohmann::ordered_json j;
  j["alpha"] = c.alpha;
  j["beta_gen"] = c.beta_gen;
  j["gammas"] = c.gammas;
  j["eta"] = c.eta;
  j["units_per_batch"] = c.units_per_batch;
  j["batches"] = c.batches;
  j["seed"] = c.seed;
  j["levels"] = c.levels;
  j["epsilon"] = c.epsilon;
  nlohmann::ordered_json specs = nlohmann::ordered_json::array();
  for (const auto& s : c.specs) {
    nlohmann::ordered_json e;
    e["name"] = s.name;
    e["kind"] = kind_name(s.kind);
    if (s.kind == DistributionKind::Exponential) {
      e["rate"] = s.rate;
    } else {
      e["mu"] = s.mu;
      e["sigma"] = s.sigma;
    }
    specs.push_back(e);
  }
  j["specs"] = specs;
  return j;
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  SyntheticConfig c = default_synthetic_config();
  auto num = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw ValidationError(std::string("config field '") + key + "' must be a number");
    field = j[key].get<std::remove_reference_t<decltype(field)>>();
  };
  num("alpha", c.alpha);
  num("beta_gen", c.beta_gen);
  num("eta", c.eta);
  num("units_per_batch", c.units_per_batch);
  num("batches", c.batches);
  num("seed", c.seed);
  num("levels", c.levels);
  num("epsilon", c.epsilon);
  if (j.contains("gamma")) {
    double g = 0.0;
    num("gamma", g);
    c.gammas = {g};
  }
  if (j.contains("gammas")) {
    if (!j["gammas"].is_array()) throw ValidationError("config field 'gammas' must be a list of numbers");
    c.gammas.clear();
    for (const auto& g : j["gammas"]) {
      if (!g.is_number()) throw ValidationError("config field 'gammas' must be a list of numbers");
      c.gammas.push_back(g.get<double>());
    }
  }
  if (j.contains("specs")) {
    c.specs.clear();
    for (const auto& e : j["specs"]) {
      DistributionSpec s;
      s.name = e.at("name").get<std::string>();
      const std::string kind = e.at("kind").get<std::string>();
      if (kind == "exponential") {
        s.kind = DistributionKind::Exponential;
        if (e.contains("rate")) {
          s.rate = e["rate"].get<double>();
        } else {
          s.rate = 1.0 / e.at("mean").get<double>();
        }
      } else if (kind == "truncated_normal") {
        s.kind = DistributionKind::TruncatedNormal;
        s.mu = e.at("mu").get<double>();
        s.sigma = e.at("sigma").get<double>();
      } else {
        throw ValidationError("config field 'specs': unknown kind '" + kind + "'");
      }
      c.specs.push_back(std::move(s));
    }
  }
  c.validate();
  return c;
}

double gen_treatment(std::span<const double> x, double eta, CounterRng& rng) {
  if (!(eta > 0.0)) throw ValidationError("gen_treatment: eta must be positive");
  double sum = 0.0;
  for (double v : x) sum += v;
  const double f = sum / eta;
  if (!(f > 0.0)) throw ValidationError("gen_treatment: f(x) = sum(x)/eta must be positive");
  return rng.exponential(f);
}

double gen_outcome(std::span<const double> x, double z, double alpha, double beta_gen, double gamma, CounterRng& rng) {
  double sum = 0.0;
  for (double v : x) sum += v;
  const double sd = beta_gen * sum;
  if (!(sd > 0.0)) throw ValidationError("gen_outcome: beta_gen * sum(x) must be positive");
  const double shift = gamma * z;
  return rng.truncated_normal(alpha * sum, sd, std::max(0.0, -shift)) + shift;
}

UnitTable generate_batch(const SyntheticConfig& config, double gamma, int batch) {
  config.validate();
  CounterRng rng = CounterRng::substream(config.seed, {static_cast<std::uint64_t>(batch)});
  const std::size_t n = static_cast<std::size_t>(config.units_per_batch);
  const std::size_t P = config.specs.size();

  std::vector<std::vector<double>> raw(n, std::vector<double>(P));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < P; ++p) raw[i][p] = config.specs[p].sample(rng);
  }
  std::vector<double> lo(P, INFINITY), hi(P, -INFINITY);
  for (const auto& row : raw) {
    for (std::size_t p = 0; p < P; ++p) {
      lo[p] = std::min(lo[p], row[p]);
      hi[p] = std::max(hi[p], row[p]);
    }
  }

  std::vector<Unit> units(n);
  std::vector<double> scaled(P);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < P; ++p) scaled[p] = hi[p] > lo[p] ? (raw[i][p] - lo[p]) / (hi[p] - lo[p]) : 0.0;
    Unit& u = units[i];
    u.id = "b" + std::to_string(batch) + "_u" + std::to_string(i);
    u.confounders = raw[i];
    u.treatment = gen_treatment(scaled, config.eta, rng);
    u.outcome = gen_outcome(scaled, u.treatment, config.alpha, config.beta_gen, gamma, rng);
  }
  std::vector<std::string> names;
  for (const auto& s : config.specs) names.push_back(s.name);
  return UnitTable(std::move(units), std::move(names), config.levels);
}

BenchmarkReport run_benchmark(const SyntheticConfig& config, unsigned threads) {
  config.validate();
  const std::size_t G = config.gammas.size();
  const std::size_t B = static_cast<std::size_t>(config.batches);
  std::vector<BatchEstimate> estimates(G * B);
  std::vector<std::vector<double>> effects(G * B);

  PipelineOptions opts;
  opts.levels = config.levels;
  opts.epsilon = config.epsilon;

  auto run_task = [&](std::size_t task) {
    const std::size_t g = task / B;
    const int b = static_cast<int>(task % B);
    BatchEstimate& est = estimates[task];
    est.batch = b;
    try {
      const UnitTable units = generate_batch(config, config.gammas[g], b);
      PipelineResult r = run_pipeline(units, opts);
      est.ok = true;
      est.ate = r.effect.ate;
      est.n_pairs = r.effect.n_pairs;
      effects[task] = std::move(r.effect.effects);
    } catch (const std::exception& e) {
      est.ok = false;
      est.error = e.what();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(G * B));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t task = next++; task < G * B; task = next++) run_task(task);
    });
  }
  for (auto& th : pool) th.join();

  BenchmarkReport report;
  for (std::size_t g = 0; g < G; ++g) {
    GammaResult row;
    row.true_ate = config.gammas[g];
    std::vector<double> pooled;
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t task = g * B + b;
      row.batches.push_back(estimates[task]);
      if (!estimates[task].ok) {
        ++row.failed_batches;
        continue;
      }
      pooled.insert(pooled.end(), effects[task].begin(), effects[task].end());
    }
    if (!pooled.empty()) row.pooled = summarize_effects(std::move(pooled));
    report.rows.push_back(std::move(row));
  }
  return report;
}

nlohmann::ordered_json to_json(const BenchmarkReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json j;
    j["true_ate"] = r.true_ate;
    j["est_ate"] = r.pooled.ate;
    j["min"] = r.pooled.min;
    j["q25"] = r.pooled.q25;
    j["q75"] = r.pooled.q75;
    j["max"] = r.pooled.max;
    j["n_pairs"] = r.pooled.n_pairs;
    j["failed_batches"] = r.failed_batches;
    nlohmann::ordered_json batches = nlohmann::ordered_json::array();
    for (const auto& b : r.batches) {
      nlohmann::ordered_json e;
      e["batch"] = b.batch;
      e["ok"] = b.ok;
      if (b.ok) {
        e["ate"] = b.ate;
        e["n_pairs"] = b.n_pairs;
      } else {
        e["error"] = b.error;
      }
      batches.push_back(e);
    }
    j["batches"] = batches;
    rows.push_back(j);
  }
  return {{"rows", rows}};
}

std::string format_benchmark_table(const BenchmarkReport& report) {
  std::ostringstream out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%8s %9s %9s %9s %9s %9s\n", "ATE", "est. ATE", "min", "25%", "75%", "max");
  out << buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%8.2f %9.2f %9.2f %9.2f %9.2f %9.2f\n", r.true_ate, r.pooled.ate, r.pooled.min,
                  r.pooled.q25, r.pooled.q75, r.pooled.max);
    out << buf;
  }
  return out.str();
}

}  // namespace dosematch
