#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dosematch/pipeline.hpp"
#include "dosematch/synthetic.hpp"

using namespace dosematch;

TEST_CASE("pipeline on a synthetic batch") {
  const auto units = generate_batch(default_synthetic_config(), 4.0, 0);
  const auto r = run_pipeline(units);
  CHECK(r.units.size() == units.size());
  CHECK(r.matching.size() > 250);
  CHECK(r.dose_matrix.total() == static_cast<int>(r.matching.size()));
  for (auto [i, j] : r.matching.pairs) CHECK(r.units[i].dose != r.units[j].dose);
  CHECK(r.balance.size() == 15);
  CHECK(r.effect.ate > 2.0);
  CHECK(r.spearman.rho > 0.0);
  // raw confounders are kept on the output table
  CHECK(r.units[0].confounders == units[0].confounders);
  // stored scores are the scoring model applied to raw confounders
  CHECK(*r.units[5].score == doctest::Approx(r.model.score_raw(units[5].confounders)).epsilon(1e-12));
}

TEST_CASE("pipeline: all units same dose is a discretize-stage error") {
  std::vector<Unit> us;
  for (int i = 0; i < 20; ++i) us.push_back(Unit{"u" + std::to_string(i), {double(i)}, 0.0, 0, 1.0, {}});
  const UnitTable t(us, {"x"});
  PipelineOptions opts;
  opts.use_existing_doses = true;
  try {
    run_pipeline(t, opts);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "discretize");
    CHECK(std::string(e.what()).find("all units same dose") != std::string::npos);
  }
  opts.use_existing_doses = false;
  CHECK_THROWS_AS(run_pipeline(t, opts), StageError);
}

TEST_CASE("pipeline: existing doses are used as given") {
  auto units = generate_batch(default_synthetic_config(), 1.0, 1);
  std::vector<int> doses;
  for (std::size_t i = 0; i < units.size(); ++i) doses.push_back(static_cast<int>(i % 3));
  PipelineOptions opts;
  opts.use_existing_doses = true;
  const auto r = run_pipeline(units.with_doses(doses), opts);
  CHECK_FALSE(r.binning_fitted);
  for (std::size_t i = 0; i < units.size(); ++i) CHECK(*r.units[i].dose == doses[i]);
}

TEST_CASE("pipeline: constant confounder fails in the standardize stage") {
  std::vector<Unit> us;
  for (int i = 0; i < 30; ++i) us.push_back(Unit{"u" + std::to_string(i), {1.0}, double(i % 3), {}, 1.0, {}});
  try {
    run_pipeline(UnitTable(us, {"flat"}));
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "standardize");
  }
}
