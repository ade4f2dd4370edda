#include "dosematch/ordered_logit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dosematch/errors.hpp"

namespace dosematch {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// Derivatives of log P(dose = k) with respect to the upper cut a = theta[k] - s
// and lower cut b = theta[k-1] - s. Missing cuts (k = 0 has no b, k = D-1 has
// no a) contribute nothing.
struct CellTerms {
  double log_p = 0.0;
  double d_a = 0.0;   // d logp / da
  double d_b = 0.0;   // d logp / db
  double d_aa = 0.0;
  double d_bb = 0.0;
  double d_ab = 0.0;
  bool has_a = false;
  bool has_b = false;
};

CellTerms cell_terms(double score, const Eigen::VectorXd& theta, int dose) {
  const int top = static_cast<int>(theta.size());
  CellTerms t;
  t.has_a = dose < top;
  t.has_b = dose > 0;
  const double a = t.has_a ? theta[dose] - score : std::numeric_limits<double>::infinity();
  const double b = t.has_b ? theta[dose - 1] - score : -std::numeric_limits<double>::infinity();

  if (t.has_a && t.has_b) {
    // P = F(a) - F(b) = F(a) F(-b) (1 - e^{b-a})
    const double gap = -std::expm1(b - a);
    t.log_p = log_sigmoid(a) + log_sigmoid(-b) + std::log(gap);
    // f(a)/P and f(b)/P in forms that avoid cancellation.
    const double ga = sigmoid(-a) / (sigmoid(-b) * gap);
    const double gb = sigmoid(b) / (sigmoid(a) * gap);
    t.d_a = ga;
    t.d_b = -gb;
    t.d_aa = ga * (1.0 - 2.0 * sigmoid(a)) - ga * ga;
    t.d_bb = -gb * (1.0 - 2.0 * sigmoid(b)) - gb * gb;
    t.d_ab = ga * gb;
  } else if (t.has_a) {
    // P = F(a)
    t.log_p = log_sigmoid(a);
    t.d_a = sigmoid(-a);
    t.d_aa = -sigmoid(a) * sigmoid(-a);
  } else if (t.has_b) {
    // P = 1 - F(b) = F(-b)
    t.log_p = log_sigmoid(-b);
    t.d_b = -sigmoid(b);
    t.d_bb = -sigmoid(b) * sigmoid(-b);
  }
  return t;
}

void check_shapes(const OrderedLogitModel& model, const Eigen::MatrixXd& X, std::span<const int> doses) {
  if (X.cols() != model.beta.size()) throw ValidationError("ordered logit: X has wrong number of columns");
  if (static_cast<std::size_t>(X.rows()) != doses.size()) {
    throw ValidationError("ordered logit: X rows and dose count differ");
  }
  if (model.theta.size() < 1) throw ValidationError("ordered logit: need at least one cutpoint");
  const int levels = model.levels();
  for (std::size_t i = 0; i < doses.size(); ++i) {
    if (doses[i] < 0 || doses[i] >= levels) {
      throw ValidationError("ordered logit: dose " + std::to_string(doses[i]) + " at row " +
                            std::to_string(i + 1) + " outside [0, " + std::to_string(levels - 1) + "]");
    }
  }
}

double neumaier_add(double& sum, double& comp, double x) {
  const double t = sum + x;
  if (std::abs(sum) >= std::abs(x)) {
    comp += (sum - t) + x;
  } else {
    comp += (x - t) + sum;
  }
  sum = t;
  return sum;
}

}  // namespace

Eigen::VectorXd OrderedLogitModel::params() const {
  Eigen::VectorXd p(num_params());
  p << beta, theta;
  return p;
}

OrderedLogitModel OrderedLogitModel::from_params(const Eigen::VectorXd& params, Eigen::Index num_beta) {
  OrderedLogitModel m;
  m.beta = params.head(num_beta);
  m.theta = params.tail(params.size() - num_beta);
  return m;
}

OrderedLogitModel null_model(Eigen::Index num_confounders, std::span<const int> doses, int levels) {
  if (levels < 2) throw ValidationError("ordered logit: need at least 2 levels");
  std::vector<double> counts(static_cast<std::size_t>(levels), 0.0);
  for (int d : doses) {
    if (d < 0 || d >= levels) throw ValidationError("ordered logit: dose out of range");
    counts[static_cast<std::size_t>(d)] += 1.0;
  }
  for (int d = 0; d < levels; ++d) {
    if (counts[static_cast<std::size_t>(d)] == 0.0) {
      throw ValidationError("ordered logit: dose level " + std::to_string(d) + " has no units");
    }
  }
  const double n = static_cast<double>(doses.size());
  OrderedLogitModel m;
  m.beta = Eigen::VectorXd::Zero(num_confounders);
  m.theta.resize(levels - 1);
  double cum = 0.0;
  for (int k = 0; k < levels - 1; ++k) {
    cum += counts[static_cast<std::size_t>(k)];
    m.theta[k] = std::log(cum / (n - cum));
  }
  return m;
}

double log_likelihood(const OrderedLogitModel& model, const Eigen::MatrixXd& X, std::span<const int> doses) {
  check_shapes(model, X, doses);
  double sum = 0.0;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double s = X.row(i).dot(model.beta);
    neumaier_add(sum, comp, cell_terms(s, model.theta, doses[static_cast<std::size_t>(i)]).log_p);
  }
  return std::min(sum + comp, 0.0);
}

Eigen::VectorXd gradient(const OrderedLogitModel& model, const Eigen::MatrixXd& X, std::span<const int> doses) {
  check_shapes(model, X, doses);
  const Eigen::Index P = model.beta.size();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(model.num_params());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const int d = doses[static_cast<std::size_t>(i)];
    const double s = X.row(i).dot(model.beta);
    const CellTerms t = cell_terms(s, model.theta, d);
    // da/dbeta = db/dbeta = -x
    g.head(P) -= (t.d_a + t.d_b) * X.row(i).transpose();
    if (t.has_a) g[P + d] += t.d_a;
    if (t.has_b) g[P + d - 1] += t.d_b;
  }
  return g;
}

Eigen::MatrixXd hessian(const OrderedLogitModel& model, const Eigen::MatrixXd& X, std::span<const int> doses) {
  check_shapes(model, X, doses);
  const Eigen::Index P = model.beta.size();
  const Eigen::Index Q = model.num_params();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(Q, Q);
  Eigen::VectorXd va(Q), vb(Q);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const int d = doses[static_cast<std::size_t>(i)];
    const double s = X.row(i).dot(model.beta);
    const CellTerms t = cell_terms(s, model.theta, d);
    va.setZero();
    vb.setZero();
    va.head(P) = -X.row(i).transpose();
    vb.head(P) = -X.row(i).transpose();
    if (t.has_a) va[P + d] = 1.0;
    if (t.has_b) vb[P + d - 1] = 1.0;
    if (t.has_a) H.noalias() += t.d_aa * va * va.transpose();
    if (t.has_b) H.noalias() += t.d_bb * vb * vb.transpose();
    if (t.has_a && t.has_b) {
      H.noalias() += t.d_ab * (va * vb.transpose() + vb * va.transpose());
    }
  }
  return H;
}

double propensity_score(const OrderedLogitModel& model, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != model.beta.size()) {
    throw ValidationError("propensity score: expected " + std::to_string(model.beta.size()) +
                          " confounders, got " + std::to_string(x.size()));
  }
  double s = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p) s += model.beta[static_cast<Eigen::Index>(p)] * x[p];
  return s;
}

Eigen::VectorXd propensity_scores(const OrderedLogitModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.beta.size()) throw ValidationError("propensity score: dimension mismatch");
  return X * model.beta;
}

Eigen::VectorXd dose_probabilities(const OrderedLogitModel& model, std::span<const double> x) {
  const double s = propensity_score(model, x);
  const int levels = model.levels();
  Eigen::VectorXd p(levels);
  for (int d = 0; d < levels; ++d) p[d] = std::exp(cell_terms(s, model.theta, d).log_p);
  // Entries are computed independently; absorb the last ulp of rounding so the
  // vector is an exact distribution.
  p /= p.sum();
  return p;
}

namespace {

struct Objective {
  const Eigen::MatrixXd& X;
  std::span<const int> doses;
  double ridge;

  double value(const OrderedLogitModel& m) const {
    double v = log_likelihood(m, X, doses);
    if (ridge > 0.0) v -= 0.5 * ridge * m.beta.squaredNorm();
    return v;
  }
  Eigen::VectorXd grad(const OrderedLogitModel& m) const {
    Eigen::VectorXd g = gradient(m, X, doses);
    if (ridge > 0.0) g.head(m.beta.size()) -= ridge * m.beta;
    return g;
  }
  Eigen::MatrixXd hess(const OrderedLogitModel& m) const {
    Eigen::MatrixXd H = hessian(m, X, doses);
    if (ridge > 0.0) H.topLeftCorner(m.beta.size(), m.beta.size()).diagonal().array() -= ridge;
    return H;
  }
};

constexpr double kPerfectFit = 1e-6;

std::string separation_message(double bound) {
  return "ordered logit: doses look (quasi-)separated by the confounders (|beta| above " + std::to_string(bound) +
         " or a perfect fit); check the data or set a ridge penalty";
}

bool increasing(const Eigen::VectorXd& theta) {
  for (Eigen::Index k = 1; k < theta.size(); ++k) {
    if (!(theta[k] > theta[k - 1])) return false;
  }
  return true;
}

bool all_finite(const OrderedLogitModel& m) { return m.beta.allFinite() && m.theta.allFinite(); }

}  // namespace

OrderedLogitFit fit_ordered_logit(const Eigen::MatrixXd& X, std::span<const int> doses, int levels,
                                  const OrderedLogitOptions& options) {
  const Eigen::Index N = X.rows();
  const Eigen::Index P = X.cols();
  if (N != static_cast<Eigen::Index>(doses.size())) throw ValidationError("ordered logit: X rows and dose count differ");
  if (N <= P + levels) {
    throw ValidationError("ordered logit: need more than P + D = " + std::to_string(P + levels) +
                          " units, got " + std::to_string(N));
  }
  if (!X.allFinite()) throw ValidationError("ordered logit: non-finite confounder value");

  OrderedLogitModel model = null_model(P, doses, levels);
  const Objective obj{X, doses, options.ridge};
  const Eigen::Index K = model.theta.size();

  double value = obj.value(model);
  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd g = obj.grad(model);
    const double gnorm = g.norm();
    if (gnorm <= options.tolerance * std::max(1.0, std::abs(value))) {
      const double ll = log_likelihood(model, X, doses);
      // The gradient vanishes exponentially along a separating direction, so
      // a "converged" perfect fit means the MLE does not exist.
      if (options.ridge == 0.0 && ll > -kPerfectFit * static_cast<double>(N)) {
        throw ValidationError(separation_message(options.separation_bound));
      }
      return {model, ll, gnorm, iter};
    }
    if (iter >= options.max_iterations) {
      const Eigen::VectorXd p = model.params();
      throw ConvergenceError("ordered logit: no convergence after " + std::to_string(iter) +
                                 " iterations (gradient norm " + std::to_string(gnorm) + ")",
                             iter, gnorm, std::vector<double>(p.data(), p.data() + p.size()));
    }

    // The log-likelihood is concave in (beta, theta), so Newton runs in the
    // natural coordinates; the line search keeps the cut-points increasing.
    const Eigen::VectorXd x = model.params();
    const Eigen::MatrixXd A = -obj.hess(model);
    Eigen::VectorXd step;
    double damping = 0.0;
    const double scale = std::max(1e-12, A.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::LLT<Eigen::MatrixXd> llt(A + damping * Eigen::MatrixXd::Identity(A.rows(), A.cols()));
      if (llt.info() == Eigen::Success) {
        step = llt.solve(g);
        if (step.allFinite()) break;
      }
      step.resize(0);
      damping = damping == 0.0 ? 1e-8 * scale : damping * 10.0;
    }

    auto line_search = [&](const Eigen::VectorXd& dir, OrderedLogitModel& out, double& out_value) {
      const double slope = g.dot(dir);
      if (!(slope > 0.0)) return false;
      double t = 1.0;
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        const Eigen::VectorXd y = x + t * dir;
        OrderedLogitModel trial;
        trial.beta = y.head(P);
        trial.theta = y.tail(K);
        if (!all_finite(trial) || !increasing(trial.theta)) continue;
        const double v = obj.value(trial);
        if (std::isfinite(v) && v > value && v >= value + 1e-4 * t * slope) {
          out = std::move(trial);
          out_value = v;
          return true;
        }
      }
      return false;
    };

    OrderedLogitModel next;
    double next_value = value;
    bool moved = step.size() > 0 && line_search(step, next, next_value);
    if (!moved) moved = line_search(g / std::max(1.0, g.norm()), next, next_value);
    if (!moved) {
      const Eigen::VectorXd p = model.params();
      throw ConvergenceError("ordered logit: line search stalled (gradient norm " + std::to_string(gnorm) + ")",
                             iter, gnorm, std::vector<double>(p.data(), p.data() + p.size()));
    }
    model = std::move(next);
    value = next_value;

    if (model.beta.size() > 0 && model.beta.cwiseAbs().maxCoeff() > options.separation_bound) {
      throw ValidationError(separation_message(options.separation_bound));
    }
  }
}

Eigen::MatrixXd confounder_matrix(const UnitTable& table) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(table.num_confounders()));
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& c = table[i].confounders;
    for (std::size_t p = 0; p < c.size(); ++p) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = c[p];
    }
  }
  return X;
}

std::vector<int> dose_vector(const UnitTable& table) {
  std::vector<int> d;
  d.reserve(table.size());
  for (const auto& u : table.units()) {
    if (!u.dose) throw ValidationError("unit '" + u.id + "' has no dose");
    d.push_back(*u.dose);
  }
  return d;
}

double ScoringModel::score_raw(std::span<const double> raw_confounders) const {
  const std::vector<double> x = scaling.apply(std::vector<double>(raw_confounders.begin(), raw_confounders.end()));
  return propensity_score(model, x);
}

nlohmann::ordered_json to_json(const ScoringModel& m) {
  nlohmann::ordered_json j;
  j["beta"] = std::vector<double>(m.model.beta.data(), m.model.beta.data() + m.model.beta.size());
  j["theta"] = std::vector<double>(m.model.theta.data(), m.model.theta.data() + m.model.theta.size());
  j["confounder_names"] = m.confounder_names;
  j["scaling"] = to_json(m.scaling);
  return j;
}

ScoringModel scoring_model_from_json(const nlohmann::json& j) {
  ScoringModel m;
  const auto beta = j.at("beta").get<std::vector<double>>();
  const auto theta = j.at("theta").get<std::vector<double>>();
  m.confounder_names = j.at("confounder_names").get<std::vector<std::string>>();
  if (beta.size() != m.confounder_names.size()) throw ValidationError("model: beta/confounder_names length mismatch");
  if (theta.empty()) throw ValidationError("model: empty theta");
  for (std::size_t k = 1; k < theta.size(); ++k) {
    if (!(theta[k] > theta[k - 1])) throw ValidationError("model: theta must be strictly increasing");
  }
  m.model.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  m.model.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  m.scaling = scaling_from_json(j.at("scaling"), m.confounder_names);
  return m;
}

}  // namespace dosematch
