#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dosematch/dataset.hpp"
#include "dosematch/diagnostics.hpp"
#include "dosematch/dose.hpp"
#include "dosematch/effect.hpp"
#include "dosematch/errors.hpp"
#include "dosematch/geo.hpp"
#include "dosematch/matching.hpp"
#include "dosematch/ordered_logit.hpp"
#include "dosematch/pipeline.hpp"
#include "dosematch/synthetic.hpp"
#include "dosematch/version.hpp"

namespace py = pybind11;
using namespace dosematch;

namespace {

// Heavy C++ work runs without the GIL.
using release = py::call_guard<py::gil_scoped_release>;

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2); }

void bind_errors(py::module_& m) {
  // Translators run newest first, so the base class is registered first.
  const auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<SchemaError>(m, "SchemaError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<ValidationError>(m, "ValidationError", base);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base);
  py::register_exception<StageError>(m, "StageError", base);
}

void bind_dataset(py::module_& m) {
  py::class_<Unit>(m, "Unit")
      .def(py::init([](std::string id, std::vector<double> confounders, double treatment, double outcome,
                       std::optional<int> dose, std::optional<double> score) {
             return Unit{std::move(id), std::move(confounders), treatment, dose, outcome, score};
           }),
           py::arg("id"), py::arg("confounders"), py::arg("treatment"), py::arg("outcome"),
           py::arg("dose") = py::none(), py::arg("score") = py::none())
      .def_readwrite("id", &Unit::id)
      .def_readwrite("confounders", &Unit::confounders)
      .def_readwrite("treatment", &Unit::treatment)
      .def_readwrite("dose", &Unit::dose)
      .def_readwrite("outcome", &Unit::outcome)
      .def_readwrite("score", &Unit::score)
      .def("__repr__", [](const Unit& u) { return "<Unit " + u.id + ">"; });

  py::class_<UnitTable>(m, "UnitTable")
      .def(py::init<std::vector<Unit>, std::vector<std::string>, int>(), py::arg("units"),
           py::arg("confounder_names"), py::arg("levels") = 3)
      .def_property_readonly("units", &UnitTable::units)
      .def_property_readonly("confounder_names", &UnitTable::confounder_names)
      .def_property_readonly("levels", &UnitTable::levels)
      .def("__len__", &UnitTable::size)
      .def("__getitem__",
           [](const UnitTable& t, std::size_t i) {
             if (i >= t.size()) throw py::index_error();
             return t[i];
           })
      .def("column", &UnitTable::column)
      .def("treatments", &UnitTable::treatments)
      .def("outcomes", &UnitTable::outcomes)
      .def("confounder_matrix", &confounder_matrix)
      .def("doses", &dose_vector)
      .def("with_doses", &UnitTable::with_doses)
      .def("with_scores", &UnitTable::with_scores)
      .def("with_levels", &UnitTable::with_levels)
      .def("to_csv", &format_units)
      .def("save", &save_units, py::arg("path"))
      .def(py::self == py::self);

  m.def("load_units", [](const std::string& path, int levels) { return load_units(path, {}, levels); },
        py::arg("path"), py::arg("levels") = 3);
  m.def("parse_units", [](const std::string& text, int levels) { return parse_units(text, {}, levels); },
        py::arg("text"), py::arg("levels") = 3);

  py::class_<Standardized>(m, "Standardized")
      .def_readonly("table", &Standardized::table)
      .def_property_readonly("scaling", [](const Standardized& s) { return dump(to_json(s.scaling)); });
  m.def("standardize_confounders", &standardize_confounders, py::arg("table"));
}

void bind_dose(py::module_& m) {
  py::class_<DoseBinning>(m, "DoseBinning")
      .def(py::init([](std::vector<double> thresholds, bool zero_level) {
             return DoseBinning{std::move(thresholds), zero_level};
           }),
           py::arg("thresholds"), py::arg("zero_level") = true)
      .def_readonly("thresholds", &DoseBinning::thresholds)
      .def_readonly("zero_level", &DoseBinning::zero_level)
      .def_property_readonly("levels", &DoseBinning::levels)
      .def("apply", py::overload_cast<double>(&DoseBinning::apply, py::const_))
      .def("apply", py::overload_cast<const std::vector<double>&>(&DoseBinning::apply, py::const_))
      .def("to_json", [](const DoseBinning& b) { return dump(to_json(b)); });
  m.def("fit_dose_bins", &fit_dose_bins, py::arg("treatments"), py::arg("levels") = 3);
  m.def("discretize_doses", &discretize_doses, py::arg("table"), py::arg("levels") = 3);
}

void bind_ordered_logit(py::module_& m) {
  py::class_<OrderedLogitModel>(m, "OrderedLogitModel")
      .def(py::init([](Eigen::VectorXd beta, Eigen::VectorXd theta) {
             return OrderedLogitModel{std::move(beta), std::move(theta)};
           }),
           py::arg("beta"), py::arg("theta"))
      .def_readonly("beta", &OrderedLogitModel::beta)
      .def_readonly("theta", &OrderedLogitModel::theta)
      .def_property_readonly("levels", &OrderedLogitModel::levels)
      .def("scores", &propensity_scores, py::arg("X"))
      .def("dose_probabilities",
           [](const OrderedLogitModel& model, const std::vector<double>& x) { return dose_probabilities(model, x); },
           py::arg("x"))
      .def("log_likelihood",
           [](const OrderedLogitModel& model, const Eigen::MatrixXd& X, const std::vector<int>& doses) {
             return log_likelihood(model, X, doses);
           })
      .def("gradient",
           [](const OrderedLogitModel& model, const Eigen::MatrixXd& X, const std::vector<int>& doses) {
             return gradient(model, X, doses);
           })
      .def("hessian", [](const OrderedLogitModel& model, const Eigen::MatrixXd& X, const std::vector<int>& doses) {
        return hessian(model, X, doses);
      });

  py::class_<OrderedLogitOptions>(m, "OrderedLogitOptions")
      .def(py::init<>())
      .def_readwrite("max_iterations", &OrderedLogitOptions::max_iterations)
      .def_readwrite("tolerance", &OrderedLogitOptions::tolerance)
      .def_readwrite("separation_bound", &OrderedLogitOptions::separation_bound)
      .def_readwrite("ridge", &OrderedLogitOptions::ridge);

  py::class_<OrderedLogitFit>(m, "OrderedLogitFit")
      .def_readonly("model", &OrderedLogitFit::model)
      .def_readonly("log_likelihood", &OrderedLogitFit::log_likelihood)
      .def_readonly("gradient_norm", &OrderedLogitFit::gradient_norm)
      .def_readonly("iterations", &OrderedLogitFit::iterations);

  m.def(
      "fit_ordered_logit",
      [](const Eigen::MatrixXd& X, const std::vector<int>& doses, int levels, const OrderedLogitOptions& options) {
        return fit_ordered_logit(X, doses, levels, options);
      },
      py::arg("X"), py::arg("doses"), py::arg("levels") = 3, py::arg("options") = OrderedLogitOptions{}, release());

  py::class_<ScoringModel>(m, "ScoringModel")
      .def_readonly("model", &ScoringModel::model)
      .def_readonly("confounder_names", &ScoringModel::confounder_names)
      .def("score", [](const ScoringModel& s, const std::vector<double>& raw) { return s.score_raw(raw); },
           py::arg("raw_confounders"))
      .def("to_json", [](const ScoringModel& s) { return dump(to_json(s)); })
      .def_static("from_json",
                  [](const std::string& text) { return scoring_model_from_json(nlohmann::json::parse(text)); });

  py::class_<ScoringFit>(m, "ScoringFit")
      .def_readonly("model", &ScoringFit::model)
      .def_readonly("fit", &ScoringFit::fit);
  m.def("fit_scoring_model", &fit_scoring_model, py::arg("dosed"), py::arg("options") = OrderedLogitOptions{},
        release());
}

void bind_matching(py::module_& m) {
  py::class_<NodeMeta>(m, "NodeMeta")
      .def(py::init([](std::string id, int dose, double score) { return NodeMeta{std::move(id), dose, score}; }),
           py::arg("id"), py::arg("dose"), py::arg("score"))
      .def_readonly("id", &NodeMeta::id)
      .def_readonly("dose", &NodeMeta::dose)
      .def_readonly("score", &NodeMeta::score);

  py::class_<Edge>(m, "Edge")
      .def_readonly("i", &Edge::i)
      .def_readonly("j", &Edge::j)
      .def_readonly("weight", &Edge::weight);

  py::class_<MatchGraph>(m, "MatchGraph")
      .def_readonly("nodes", &MatchGraph::nodes)
      .def_readonly("edges", &MatchGraph::edges)
      .def("__len__", &MatchGraph::size)
      .def("validate", &MatchGraph::validate);

  py::class_<Matching>(m, "Matching")
      .def_readonly("pairs", &Matching::pairs)
      .def_readonly("total_weight", &Matching::total_weight)
      .def("__len__", &Matching::size)
      .def("unmatched", &Matching::unmatched, py::arg("num_nodes"))
      .def("to_csv", &format_matching_csv, py::arg("graph"));

  m.def("edge_weight", &edge_weight, py::arg("score_i"), py::arg("dose_i"), py::arg("score_j"), py::arg("dose_j"),
        py::arg("epsilon") = 1e-8);
  m.def("build_graph", py::overload_cast<const UnitTable&, double>(&build_graph), py::arg("units"),
        py::arg("epsilon") = 1e-8);
  m.def("build_graph", py::overload_cast<std::vector<NodeMeta>, double>(&build_graph), py::arg("nodes"),
        py::arg("epsilon") = 1e-8);
  m.def("max_matching_min_weight", &max_matching_min_weight, py::arg("graph"), release());
  m.def("brute_force_matching", &brute_force_matching, py::arg("graph"));
}

void bind_effect(py::module_& m) {
  py::class_<EffectReport>(m, "EffectReport")
      .def_readonly("ate", &EffectReport::ate)
      .def_readonly("n_pairs", &EffectReport::n_pairs)
      .def_readonly("min", &EffectReport::min)
      .def_readonly("q25", &EffectReport::q25)
      .def_readonly("q75", &EffectReport::q75)
      .def_readonly("max", &EffectReport::max)
      .def_readonly("effects", &EffectReport::effects)
      .def_readonly("mean_outcome_high", &EffectReport::mean_outcome_high)
      .def_readonly("mean_outcome_low", &EffectReport::mean_outcome_low)
      .def_readonly("outcome_ratio", &EffectReport::outcome_ratio)
      .def("to_json", [](const EffectReport& r) { return dump(to_json(r)); });
  m.def("pair_effect", &pair_effect, py::arg("y_i"), py::arg("z_i"), py::arg("y_j"), py::arg("z_j"));
  m.def("average_treatment_effect", &average_treatment_effect, py::arg("matching"), py::arg("units"));
  m.def("summarize_effects", &summarize_effects, py::arg("effects"));
}

void bind_diagnostics(py::module_& m) {
  py::class_<SpearmanResult>(m, "SpearmanResult")
      .def_readonly("rho", &SpearmanResult::rho)
      .def_readonly("p", &SpearmanResult::p);
  m.def(
      "spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
      py::arg("x"), py::arg("y"));

  py::class_<DoseDiffMatrix>(m, "DoseDiffMatrix")
      .def_readonly("levels", &DoseDiffMatrix::levels)
      .def_readonly("counts", &DoseDiffMatrix::counts)
      .def("count", &DoseDiffMatrix::count, py::arg("low"), py::arg("high"))
      .def("total", &DoseDiffMatrix::total)
      .def("share_with_gap", &DoseDiffMatrix::share_with_gap, py::arg("gap"));
  m.def("dose_difference_matrix", &dose_difference_matrix, py::arg("matching"), py::arg("units"));

  py::class_<BalanceRow>(m, "BalanceRow")
      .def_readonly("name", &BalanceRow::name)
      .def_readonly("mean_high", &BalanceRow::mean_high)
      .def_readonly("mean_low", &BalanceRow::mean_low)
      .def_readonly("t_stat", &BalanceRow::t_stat)
      .def_readonly("p_value", &BalanceRow::p_value)
      .def_readonly("df", &BalanceRow::df)
      .def_readonly("defined", &BalanceRow::defined);
  m.def("confounder_balance", &confounder_balance, py::arg("matching"), py::arg("units"));

  py::class_<StratifiedBalance>(m, "StratifiedBalance")
      .def_readonly("cells", &StratifiedBalance::cells)
      .def_readonly("not_rejected", &StratifiedBalance::not_rejected)
      .def("fraction", &StratifiedBalance::fraction);
  m.def("stratified_balance", &stratified_balance, py::arg("units"), py::arg("strata") = 5,
        py::arg("alpha") = 0.01);
}

void bind_synthetic(py::module_& m) {
  py::class_<SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &SyntheticConfig::alpha)
      .def_readwrite("beta_gen", &SyntheticConfig::beta_gen)
      .def_readwrite("gammas", &SyntheticConfig::gammas)
      .def_readwrite("eta", &SyntheticConfig::eta)
      .def_readwrite("units_per_batch", &SyntheticConfig::units_per_batch)
      .def_readwrite("batches", &SyntheticConfig::batches)
      .def_readwrite("seed", &SyntheticConfig::seed)
      .def_readwrite("levels", &SyntheticConfig::levels)
      .def_readwrite("epsilon", &SyntheticConfig::epsilon)
      .def("validate", &SyntheticConfig::validate)
      .def("to_json", [](const SyntheticConfig& c) { return dump(to_json(c)); })
      .def_static("from_json",
                  [](const std::string& text) { return synthetic_config_from_json(nlohmann::json::parse(text)); });
  m.def("default_synthetic_config", &default_synthetic_config);
  m.def("generate_batch", &generate_batch, py::arg("config"), py::arg("gamma"), py::arg("batch") = 0, release());

  py::class_<BatchEstimate>(m, "BatchEstimate")
      .def_readonly("batch", &BatchEstimate::batch)
      .def_readonly("ok", &BatchEstimate::ok)
      .def_readonly("error", &BatchEstimate::error)
      .def_readonly("ate", &BatchEstimate::ate)
      .def_readonly("n_pairs", &BatchEstimate::n_pairs);
  py::class_<GammaResult>(m, "GammaResult")
      .def_readonly("true_ate", &GammaResult::true_ate)
      .def_readonly("pooled", &GammaResult::pooled)
      .def_readonly("batches", &GammaResult::batches)
      .def_readonly("failed_batches", &GammaResult::failed_batches);
  py::class_<BenchmarkReport>(m, "BenchmarkReport")
      .def_readonly("rows", &BenchmarkReport::rows)
      .def("to_json", [](const BenchmarkReport& r) { return dump(to_json(r)); })
      .def("table", &format_benchmark_table);
  m.def("run_benchmark", &run_benchmark, py::arg("config"), py::arg("threads") = 0, release());
}

void bind_pipeline(py::module_& m) {
  py::class_<PipelineOptions>(m, "PipelineOptions")
      .def(py::init<>())
      .def_readwrite("levels", &PipelineOptions::levels)
      .def_readwrite("epsilon", &PipelineOptions::epsilon)
      .def_readwrite("use_existing_doses", &PipelineOptions::use_existing_doses)
      .def_readwrite("logit", &PipelineOptions::logit);

  py::class_<PipelineResult>(m, "PipelineResult")
      .def_readonly("units", &PipelineResult::units)
      .def_readonly("binning", &PipelineResult::binning)
      .def_readonly("binning_fitted", &PipelineResult::binning_fitted)
      .def_readonly("model", &PipelineResult::model)
      .def_readonly("fit", &PipelineResult::fit)
      .def_readonly("graph", &PipelineResult::graph)
      .def_readonly("matching", &PipelineResult::matching)
      .def_readonly("effect", &PipelineResult::effect)
      .def_readonly("dose_matrix", &PipelineResult::dose_matrix)
      .def_readonly("balance", &PipelineResult::balance)
      .def_readonly("spearman", &PipelineResult::spearman)
      .def_readonly("warnings", &PipelineResult::warnings);
  m.def("run_pipeline", &run_pipeline, py::arg("table"), py::arg("options") = PipelineOptions{}, release());
}

void bind_geo(py::module_& parent) {
  py::module_ m = parent.def_submodule("geo", "Boundary, venue and census ingestion");
  py::class_<geo::NeighbourhoodPolygon>(m, "NeighbourhoodPolygon").def_readonly("id", &geo::NeighbourhoodPolygon::id);
  py::class_<geo::Venue>(m, "Venue")
      .def_readonly("id", &geo::Venue::id)
      .def_readonly("name", &geo::Venue::name)
      .def_readonly("lon", &geo::Venue::lon)
      .def_readonly("lat", &geo::Venue::lat)
      .def_readonly("category_l1", &geo::Venue::category_l1)
      .def_readonly("category_l2", &geo::Venue::category_l2);
  py::class_<geo::Tip>(m, "Tip").def_readonly("venue_id", &geo::Tip::venue_id);
  py::class_<geo::Census>(m, "Census")
      .def_readonly("confounder_names", &geo::Census::confounder_names)
      .def_readonly("rows", &geo::Census::rows);
  py::class_<geo::IngestResult>(m, "IngestResult")
      .def_readonly("table", &geo::IngestResult::table)
      .def_readonly("dropped", &geo::IngestResult::dropped)
      .def_readonly("unassigned_venues", &geo::IngestResult::unassigned_venues);

  m.def("load_boundaries", &geo::load_boundaries, py::arg("path"), py::arg("id_property") = "id");
  m.def("assign_point", &geo::assign_point, py::arg("lon"), py::arg("lat"), py::arg("polygons"));
  m.def("load_venues", &geo::load_venues, py::arg("path"));
  m.def("load_tips", &geo::load_tips, py::arg("path"));
  m.def("load_brands", &geo::load_brands, py::arg("path"));
  m.def("load_census", &geo::load_census, py::arg("path"), py::arg("key_column") = "id");
  m.def("load_category_counts", &geo::load_category_counts, py::arg("path"));
  m.def("build_unit_table", &geo::build_unit_table, py::arg("venues"), py::arg("tips"), py::arg("polygons"),
        py::arg("census"), py::arg("brand_names"), py::arg("year"),
        py::arg("category_counts") = geo::CategoryCounts{});
}

}  // namespace

PYBIND11_MODULE(_dosematch, m) {
  m.doc() = "Dose-response matching on ordered-logit propensity scores";
  m.attr("__version__") = kVersion;
  bind_errors(m);
  bind_dataset(m);
  bind_dose(m);
  bind_ordered_logit(m);
  bind_matching(m);
  bind_effect(m);
  bind_diagnostics(m);
  bind_synthetic(m);
  bind_pipeline(m);
  bind_geo(m);
}
