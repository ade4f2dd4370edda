#include "dosematch/pipeline.hpp"

#include <algorithm>
#include <set>

namespace dosematch {

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void require_two_levels(const std::vector<int>& doses) {
  if (std::set<int>(doses.begin(), doses.end()).size() < 2) throw ValidationError("all units same dose");
}

}  // namespace

DoseBinning discretize_doses(const UnitTable& table, int levels) {
  return stage("discretize", [&] {
    DoseBinning b = fit_dose_bins(table.treatments(), levels);
    require_two_levels(b.apply(table.treatments()));
    return b;
  });
}

ScoringFit fit_scoring_model(const UnitTable& dosed, const OrderedLogitOptions& options) {
  const Standardized standardized = stage("standardize", [&] { return standardize_confounders(dosed); });
  const Eigen::MatrixXd X = confounder_matrix(standardized.table);
  const std::vector<int> doses = stage("fit", [&] { return dose_vector(dosed); });
  OrderedLogitFit fit = stage("fit", [&] { return fit_ordered_logit(X, doses, dosed.levels(), options); });
  return {ScoringModel{fit.model, dosed.confounder_names(), standardized.scaling}, fit};
}

PipelineResult run_pipeline(const UnitTable& input, const PipelineOptions& options) {
  std::vector<std::string> warnings;
  DoseBinning binning;
  bool fitted = true;

  const UnitTable dosed = stage("discretize", [&] {
    const UnitTable table = input.with_levels(options.levels);
    std::vector<int> doses;
    if (options.use_existing_doses) {
      fitted = false;
      for (const auto& u : table.units()) {
        if (!u.dose) throw ValidationError("unit '" + u.id + "' has no dose");
        doses.push_back(*u.dose);
      }
    } else {
      binning = fit_dose_bins(table.treatments(), options.levels);
      if (!binning.zero_level) {
        warnings.push_back("no zero treatments; dose levels are plain equal-frequency groups");
      }
      doses = binning.apply(table.treatments());
    }
    require_two_levels(doses);
    return table.with_doses(doses);
  });

  ScoringFit scoring = fit_scoring_model(dosed, options.logit);
  std::vector<double> scores;
  scores.reserve(dosed.size());
  for (const auto& u : dosed.units()) scores.push_back(scoring.model.score_raw(u.confounders));
  const UnitTable scored = dosed.with_scores(scores);

  MatchGraph graph = stage("match", [&] { return build_graph(scored, options.epsilon); });
  Matching matching = stage("match", [&] { return max_matching_min_weight(graph); });

  EffectReport effect = stage("effect", [&] { return average_treatment_effect(matching, scored); });

  PipelineResult r{scored,
                   binning,
                   fitted,
                   std::move(scoring.model),
                   scoring.fit,
                   std::move(graph),
                   std::move(matching),
                   std::move(effect),
                   {},
                   {},
                   {},
                   std::move(warnings)};
  stage("diagnose", [&] {
    r.dose_matrix = dose_difference_matrix(r.matching, r.units);
    r.balance = confounder_balance(r.matching, r.units);
    const auto t = r.units.treatments();
    const auto y = r.units.outcomes();
    try {
      r.spearman = spearman(t, y);
    } catch (const ValidationError& e) {
      r.warnings.push_back(std::string("spearman skipped: ") + e.what());
    }
    return 0;
  });
  return r;
}

}  // namespace dosematch
