// dosematch command-line front end.
//
//   dosematch ingest  --venues --tips --boundaries --census --brands --year --out
//   dosematch run     --units [--levels 3] [--epsilon 1e-8] --out-dir
//   dosematch synth   --config --out-dir [--seed 42]
//
// plus the individual stages (discretize, fit, match, estimate) for debugging.
// Exit codes: 0 success, 1 runtime or stage error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "dosematch/csv.hpp"
#include "dosematch/dataset.hpp"
#include "dosematch/diagnostics.hpp"
#include "dosematch/dose.hpp"
#include "dosematch/effect.hpp"
#include "dosematch/geo.hpp"
#include "dosematch/io.hpp"
#include "dosematch/matching.hpp"
#include "dosematch/ordered_logit.hpp"
#include "dosematch/pipeline.hpp"
#include "dosematch/synthetic.hpp"
#include "dosematch/version.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace dosematch;

namespace {

std::string out_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string venues, tips, boundaries, census, brands, out;
  std::string id_property = "id";
  std::string census_key = "id";
  std::string category_counts;
  int year = 0;
  int levels = 3;
};

void cmd_ingest(const IngestArgs& a) {
  const auto polygons = geo::load_boundaries(a.boundaries, a.id_property);
  const auto venues = geo::load_venues(a.venues);
  const auto tips = geo::load_tips(a.tips);
  const auto census = geo::load_census(a.census, a.census_key);
  const auto brands = geo::load_brands(a.brands);
  geo::CategoryCounts counts;
  if (!a.category_counts.empty()) counts = geo::load_category_counts(a.category_counts);

  geo::IngestResult r = geo::build_unit_table(venues, tips, polygons, census, brands, a.year, counts);
  const UnitTable table = r.table.with_levels(a.levels);
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_units(table, a.out);

  for (const auto& id : r.dropped) std::cerr << "warning: neighbourhood '" << id << "' has no restaurants; dropped\n";
  if (r.unassigned_venues > 0) std::cerr << "warning: " << r.unassigned_venues << " venues outside every boundary\n";
  std::cout << "wrote " << table.size() << " units to " << a.out << "\n";

  cli::Manifest m;
  m.command = "ingest";
  m.config = {{"year", a.year}, {"levels", a.levels}, {"id_property", a.id_property}, {"census_key", a.census_key}};
  m.inputs = {a.venues, a.tips, a.boundaries, a.census, a.brands};
  if (!a.category_counts.empty()) m.inputs.push_back(a.category_counts);
  m.outputs = {a.out};
  m.write((out.has_parent_path() ? out.parent_path() / "manifest.json" : fs::path("manifest.json")).string());
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string units, out_dir, label = "run";
  int levels = 3;
  double epsilon = 1e-8;
  bool use_doses = false;
  double ridge = 0.0;
};

void cmd_run(const RunArgs& a) {
  const UnitTable input = load_units(a.units, {}, a.levels);
  PipelineOptions opts;
  opts.levels = a.levels;
  opts.epsilon = a.epsilon;
  opts.use_existing_doses = a.use_doses;
  opts.logit.ridge = a.ridge;
  const PipelineResult r = run_pipeline(input, opts);

  fs::create_directories(a.out_dir);
  std::vector<std::string> outputs;
  auto emit = [&](const std::string& name, const std::string& text) {
    const std::string p = out_path(a.out_dir, name);
    write_file_atomic(p, text);
    outputs.push_back(p);
  };
  emit("units.csv", format_units(r.units));
  if (r.binning_fitted) emit("binning.json", to_json(r.binning).dump(2) + "\n");
  nlohmann::ordered_json model = to_json(r.model);
  model["log_likelihood"] = r.fit.log_likelihood;
  model["iterations"] = r.fit.iterations;
  emit("model.json", model.dump(2) + "\n");
  emit("matching.csv", format_matching_csv(r.matching, r.graph));
  emit("effect.json", to_json(r.effect).dump(2) + "\n");
  emit("balance.csv", format_balance_csv(r.balance));
  emit("dose_matrix.json", to_json(r.dose_matrix).dump(2) + "\n");
  emit("spearman.json", to_json(r.spearman).dump(2) + "\n");

  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << format_effect_table({{a.label, r.effect}}, "label") << "\n" << format_balance_table(r.balance);

  cli::Manifest m;
  m.command = "run";
  m.config = {{"levels", a.levels}, {"epsilon", a.epsilon}, {"use_doses", a.use_doses}, {"ridge", a.ridge}};
  m.inputs = {a.units};
  m.outputs = outputs;
  m.write(out_path(a.out_dir, "manifest.json"));
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string config, out_dir;
  std::uint64_t seed = 42;
  bool seed_given = false;
  unsigned threads = 0;
  bool datasets = true;
};

void cmd_synth(const SynthArgs& a) {
  SyntheticConfig config = default_synthetic_config();
  if (!a.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(a.config));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(a.config + ": invalid JSON: " + e.what());
    }
    config = synthetic_config_from_json(j);
  }
  if (a.seed_given) config.seed = a.seed;
  config.validate();

  fs::create_directories(a.out_dir);
  std::vector<std::string> outputs;
  if (a.datasets) {
    for (double g : config.gammas) {
      const fs::path dir = fs::path(a.out_dir) / "datasets" / ("gamma_" + csv::format_double(g));
      fs::create_directories(dir);
      for (int b = 0; b < config.batches; ++b) {
        const std::string p = (dir / ("batch_" + std::to_string(b) + ".csv")).string();
        save_units(generate_batch(config, g, b), p);
        outputs.push_back(p);
      }
    }
  }
  const BenchmarkReport report = run_benchmark(config, a.threads);
  nlohmann::ordered_json j = to_json(report);
  j["config"] = to_json(config);
  const std::string bench = out_path(a.out_dir, "benchmark.json");
  write_json(bench, j);
  const std::string table = format_benchmark_table(report);
  const std::string table_path = out_path(a.out_dir, "benchmark.txt");
  write_file_atomic(table_path, table);
  outputs.push_back(bench);
  outputs.push_back(table_path);

  for (const auto& row : report.rows) {
    for (const auto& b : row.batches) {
      if (!b.ok) {
        std::cerr << "warning: gamma " << row.true_ate << " batch " << b.batch << " failed: " << b.error << "\n";
      }
    }
  }
  std::cout << table;

  cli::Manifest m;
  m.command = "synth";
  m.seed = config.seed;
  m.config = to_json(config);
  if (!a.config.empty()) m.inputs = {a.config};
  m.outputs = outputs;
  m.write(out_path(a.out_dir, "manifest.json"));
}

// ---------------------------------------------------------------------------
// Individual stages.

struct StageArgs {
  std::string units, matching, out_dir;
  int levels = 3;
  double epsilon = 1e-8;
  double ridge = 0.0;
};

void write_stage_manifest(const std::string& command, const StageArgs& a, std::vector<std::string> inputs,
                          std::vector<std::string> outputs) {
  cli::Manifest m;
  m.command = command;
  m.config = {{"levels", a.levels}, {"epsilon", a.epsilon}, {"ridge", a.ridge}};
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  m.write(out_path(a.out_dir, "manifest.json"));
}

void cmd_discretize(const StageArgs& a) {
  const UnitTable t = load_units(a.units, {}, a.levels);
  const DoseBinning b = discretize_doses(t, a.levels);
  fs::create_directories(a.out_dir);
  const auto units = out_path(a.out_dir, "units.csv");
  const auto binning = out_path(a.out_dir, "binning.json");
  save_units(t.with_doses(b.apply(t.treatments())), units);
  write_json(binning, to_json(b));
  write_stage_manifest("discretize", a, {a.units}, {units, binning});
}

void cmd_fit(const StageArgs& a) {
  const UnitTable t = load_units(a.units, {}, a.levels);
  OrderedLogitOptions opts;
  opts.ridge = a.ridge;
  const auto [model, fit] = fit_scoring_model(t, opts);
  std::vector<double> scores;
  for (const auto& u : t.units()) scores.push_back(model.score_raw(u.confounders));
  fs::create_directories(a.out_dir);
  const auto units = out_path(a.out_dir, "units.csv");
  const auto model_path = out_path(a.out_dir, "model.json");
  save_units(t.with_scores(scores), units);
  nlohmann::ordered_json j = to_json(model);
  j["log_likelihood"] = fit.log_likelihood;
  j["iterations"] = fit.iterations;
  write_json(model_path, j);
  write_stage_manifest("fit", a, {a.units}, {units, model_path});
}

void cmd_match(const StageArgs& a) {
  const UnitTable t = load_units(a.units, {}, a.levels);
  MatchGraph g;
  Matching m;
  try {
    g = build_graph(t, a.epsilon);
    m = max_matching_min_weight(g);
  } catch (const std::exception& e) {
    throw StageError("match", e.what());
  }
  fs::create_directories(a.out_dir);
  const auto path = out_path(a.out_dir, "matching.csv");
  write_file_atomic(path, format_matching_csv(m, g));
  std::cout << m.size() << " pairs, total weight " << csv::format_double(m.total_weight) << "\n";
  write_stage_manifest("match", a, {a.units}, {path});
}

Matching read_matching(const std::string& path, const UnitTable& units) {
  const csv::Table t = csv::read_file(path);
  const std::size_t ci = t.require("unit_i"), cj = t.require("unit_j");
  std::map<std::string, int> index;
  for (std::size_t k = 0; k < units.size(); ++k) index[units[k].id] = static_cast<int>(k);
  Matching m;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto lookup = [&](const std::string& id) {
      auto it = index.find(id);
      if (it == index.end()) {
        throw ValidationError(path + ": row " + std::to_string(r + 1) + ": unknown unit '" + id + "'");
      }
      return it->second;
    };
    int i = lookup(t.rows[r][ci]), j = lookup(t.rows[r][cj]);
    if (i > j) std::swap(i, j);
    m.pairs.emplace_back(i, j);
  }
  std::sort(m.pairs.begin(), m.pairs.end());
  return m;
}

void cmd_estimate(const StageArgs& a) {
  const UnitTable t = load_units(a.units, {}, a.levels);
  const Matching m = read_matching(a.matching, t);
  EffectReport effect;
  DoseDiffMatrix dm;
  std::vector<BalanceRow> balance;
  try {
    effect = average_treatment_effect(m, t);
  } catch (const std::exception& e) {
    throw StageError("effect", e.what());
  }
  try {
    dm = dose_difference_matrix(m, t);
    balance = confounder_balance(m, t);
  } catch (const std::exception& e) {
    throw StageError("diagnose", e.what());
  }
  fs::create_directories(a.out_dir);
  const auto e = out_path(a.out_dir, "effect.json");
  const auto b = out_path(a.out_dir, "balance.csv");
  const auto d = out_path(a.out_dir, "dose_matrix.json");
  write_json(e, to_json(effect));
  write_file_atomic(b, format_balance_csv(balance));
  write_json(d, to_json(dm));
  std::cout << format_effect_table({{stem_of(a.units), effect}}, "label") << "\n" << format_balance_table(balance);
  write_stage_manifest("estimate", a, {a.units, a.matching}, {e, b, d});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dose-response propensity-score matching"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Build a units CSV from venues, tips, boundaries and census data");
  ingest->add_option("--venues", ia.venues, "Venues CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--tips", ia.tips, "Tips CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--boundaries", ia.boundaries, "Neighbourhood GeoJSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("--census", ia.census, "Census CSV keyed by neighbourhood id")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--brands", ia.brands, "Anchor brand list, one per line")->required()->check(CLI::ExistingFile);
  ingest->add_option("--year", ia.year, "Experiment year")->required();
  ingest->add_option("--out", ia.out, "Output units CSV")->required();
  ingest->add_option("--levels", ia.levels, "Number of dose levels")->check(CLI::Range(2, 100));
  ingest->add_option("--id-property", ia.id_property, "GeoJSON property holding the neighbourhood id");
  ingest->add_option("--census-key", ia.census_key, "Census column holding the neighbourhood id");
  ingest->add_option("--category-counts", ia.category_counts, "JSON map of extra count confounders")
      ->check(CLI::ExistingFile);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Discretize, fit, match, estimate and diagnose one units CSV");
  run->add_option("--units", ra.units, "Units CSV")->required()->check(CLI::ExistingFile);
  run->add_option("--levels", ra.levels, "Number of dose levels")->check(CLI::Range(2, 100));
  run->add_option("--epsilon", ra.epsilon, "Edge-weight regularizer (> 0)")->check(CLI::PositiveNumber);
  run->add_option("--out-dir", ra.out_dir, "Output directory")->required();
  run->add_option("--label", ra.label, "Row label in the printed effect table");
  run->add_option("--ridge", ra.ridge, "L2 penalty on logit coefficients")->check(CLI::NonNegativeNumber);
  run->add_flag("--use-doses", ra.use_doses, "Use the dose column from the CSV instead of fitting a binning");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthetic benchmark with known treatment effects");
  synth->add_option("--config", sa.config, "Benchmark config JSON (defaults when omitted)")->check(CLI::ExistingFile);
  synth->add_option("--out-dir", sa.out_dir, "Output directory")->required();
  auto* seed_opt = synth->add_option("--seed", sa.seed, "RNG seed (overrides the config)");
  synth->add_option("--threads", sa.threads, "Worker threads (0 = hardware concurrency)");
  synth->add_flag("!--no-datasets", sa.datasets, "Skip writing the generated datasets");

  StageArgs da, fa, ma, ea;
  auto* disc = app.add_subcommand("discretize", "Stage: fit dose levels and label units");
  disc->add_option("--units", da.units, "Units CSV")->required()->check(CLI::ExistingFile);
  disc->add_option("--levels", da.levels, "Number of dose levels")->check(CLI::Range(2, 100));
  disc->add_option("--out-dir", da.out_dir, "Output directory")->required();

  auto* fit = app.add_subcommand("fit", "Stage: fit the ordered logit and score units (needs doses)");
  fit->add_option("--units", fa.units, "Units CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--levels", fa.levels, "Number of dose levels")->check(CLI::Range(2, 100));
  fit->add_option("--ridge", fa.ridge, "L2 penalty on logit coefficients")->check(CLI::NonNegativeNumber);
  fit->add_option("--out-dir", fa.out_dir, "Output directory")->required();

  auto* match = app.add_subcommand("match", "Stage: optimal cross-dose matching (needs doses and scores)");
  match->add_option("--units", ma.units, "Units CSV")->required()->check(CLI::ExistingFile);
  match->add_option("--levels", ma.levels, "Number of dose levels")->check(CLI::Range(2, 100));
  match->add_option("--epsilon", ma.epsilon, "Edge-weight regularizer (> 0)")->check(CLI::PositiveNumber);
  match->add_option("--out-dir", ma.out_dir, "Output directory")->required();

  auto* estimate = app.add_subcommand("estimate", "Stage: effect and diagnostics for a matching");
  estimate->add_option("--units", ea.units, "Units CSV")->required()->check(CLI::ExistingFile);
  estimate->add_option("--matching", ea.matching, "Matching CSV (unit_i, unit_j ids)")->required()->check(CLI::ExistingFile);
  estimate->add_option("--levels", ea.levels, "Number of dose levels")->check(CLI::Range(2, 100));
  estimate->add_option("--out-dir", ea.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) cmd_ingest(ia);
    if (*run) cmd_run(ra);
    if (*synth) {
      sa.seed_given = seed_opt->count() > 0;
      cmd_synth(sa);
    }
    if (*disc) cmd_discretize(da);
    if (*fit) cmd_fit(fa);
    if (*match) cmd_match(ma);
    if (*estimate) cmd_estimate(ea);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
