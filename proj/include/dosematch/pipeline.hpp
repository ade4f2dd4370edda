#pragma once

#include <string>
#include <vector>

#include "dosematch/dataset.hpp"
#include "dosematch/diagnostics.hpp"
#include "dosematch/dose.hpp"
#include "dosematch/effect.hpp"
#include "dosematch/errors.hpp"
#include "dosematch/matching.hpp"
#include "dosematch/ordered_logit.hpp"

namespace dosematch {

/// Error raised by one stage of the estimation pipeline; `stage()` names it
/// (discretize, standardize, fit, match, effect, diagnose).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineOptions {
  int levels = 3;
  double epsilon = 1e-8;
  /// Use the doses already present on every unit instead of fitting a binning.
  bool use_existing_doses = false;
  OrderedLogitOptions logit;
};

struct PipelineResult {
  UnitTable units;  // raw confounders, with doses and scores
  DoseBinning binning;
  bool binning_fitted = true;
  ScoringModel model;
  OrderedLogitFit fit;
  MatchGraph graph;
  Matching matching;
  EffectReport effect;
  DoseDiffMatrix dose_matrix;
  std::vector<BalanceRow> balance;
  SpearmanResult spearman;  // treatment vs outcome
  std::vector<std::string> warnings;
};

/// Fits a dose binning for `table` and checks that it yields at least two
/// distinct levels. Errors surface as StageError("discretize").
DoseBinning discretize_doses(const UnitTable& table, int levels);

struct ScoringFit {
  ScoringModel model;
  OrderedLogitFit fit;
};

/// Standardizes the confounders of a dosed table and fits the ordered logit
/// on them. Errors surface as StageError("standardize" / "fit").
ScoringFit fit_scoring_model(const UnitTable& dosed, const OrderedLogitOptions& options = {});

/// discretize -> standardize -> fit ordered logit -> score -> build graph ->
/// match -> effect -> diagnostics. Failures are rethrown as StageError.
PipelineResult run_pipeline(const UnitTable& table, const PipelineOptions& options = {});

}  // namespace dosematch
