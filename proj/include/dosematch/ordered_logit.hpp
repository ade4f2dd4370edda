#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dosematch/dataset.hpp"
#include "json.hpp"

namespace dosematch {

/// Proportional-odds cumulative logit model over D ordered dose levels.
///
/// Orientation: P(dose >= d | x) = logistic(beta'x - theta[d-1]) for
/// d = 1..D-1, with theta strictly increasing. Equivalently the cumulative
/// probability P(dose <= k | x) = logistic(theta[k] - beta'x), so a larger
/// score beta'x shifts mass towards higher doses.
struct OrderedLogitModel {
  Eigen::VectorXd beta;   // length P
  Eigen::VectorXd theta;  // length D-1, strictly increasing

  int levels() const { return static_cast<int>(theta.size()) + 1; }
  Eigen::Index num_params() const { return beta.size() + theta.size(); }

  /// Stacked (beta, theta).
  Eigen::VectorXd params() const;
  static OrderedLogitModel from_params(const Eigen::VectorXd& params, Eigen::Index num_beta);
};

/// beta = 0 and theta at the empirical logits of the marginal cumulative dose
/// frequencies. This is the exact MLE when no covariate carries signal.
OrderedLogitModel null_model(Eigen::Index num_confounders, std::span<const int> doses, int levels);

double log_likelihood(const OrderedLogitModel& model, const Eigen::MatrixXd& X, std::span<const int> doses);

/// Analytic gradient of log_likelihood with respect to (beta, theta).
Eigen::VectorXd gradient(const OrderedLogitModel& model, const Eigen::MatrixXd& X, std::span<const int> doses);

/// Analytic Hessian of log_likelihood with respect to (beta, theta).
Eigen::MatrixXd hessian(const OrderedLogitModel& model, const Eigen::MatrixXd& X, std::span<const int> doses);

/// beta'x.
double propensity_score(const OrderedLogitModel& model, std::span<const double> x);
Eigen::VectorXd propensity_scores(const OrderedLogitModel& model, const Eigen::MatrixXd& X);

/// P(dose = d | x) for d = 0..D-1.
Eigen::VectorXd dose_probabilities(const OrderedLogitModel& model, std::span<const double> x);

struct OrderedLogitOptions {
  int max_iterations = 200;
  /// Converged when ||grad|| <= tolerance * max(1, |loglik|).
  double tolerance = 1e-6;
  /// Any |beta_p| above this is reported as (quasi-)separation.
  double separation_bound = 50.0;
  /// Optional L2 penalty 0.5 * ridge * ||beta||^2 subtracted from the log-likelihood.
  double ridge = 0.0;
};

struct OrderedLogitFit {
  OrderedLogitModel model;
  double log_likelihood = 0.0;  // unpenalized
  double gradient_norm = 0.0;   // of the (penalized) objective
  int iterations = 0;
};

/// Maximum-likelihood fit by damped Newton in (beta, theta), starting from
/// null_model; the line search keeps theta strictly increasing.
///
/// Throws ValidationError if N <= P + D, a dose level is absent, or the data
/// look separated (beta escapes the separation bound, or an unpenalized fit
/// converges to probabilities that are all ~1); ConvergenceError if the
/// iteration limit is hit first.
OrderedLogitFit fit_ordered_logit(const Eigen::MatrixXd& X, std::span<const int> doses, int levels,
                                  const OrderedLogitOptions& options = {});

/// Confounder matrix (N x P) of a table, row per unit.
Eigen::MatrixXd confounder_matrix(const UnitTable& table);
std::vector<int> dose_vector(const UnitTable& table);

/// Self-contained scoring artifact: coefficients plus the scaling needed to
/// map raw confounders onto the standardized space the model was fitted in.
struct ScoringModel {
  OrderedLogitModel model;
  std::vector<std::string> confounder_names;
  ScalingParams scaling;

  double score_raw(std::span<const double> raw_confounders) const;
};

nlohmann::ordered_json to_json(const ScoringModel& m);
ScoringModel scoring_model_from_json(const nlohmann::json& j);

}  // namespace dosematch
