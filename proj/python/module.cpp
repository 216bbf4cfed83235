#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fflqr/errors.hpp"
#include "fflqr/io.hpp"
#include "fflqr/selection.hpp"
#include "fflqr/simulation.hpp"
#include "fflqr/uncertainty.hpp"

namespace py = pybind11;
using namespace fflqr;

namespace {

// Model handle; wraps the variant so Python sees one type.
struct Model {
  FittedModel fit;
};

PredictorList to_list(const std::vector<FunctionalSample>& x) { return PredictorList(x.begin(), x.end()); }

ModelSpec make_spec(const std::string& method, double tau, Index k_y, Index k_x, int n_basis, int order,
                    std::vector<int> ids) {
  ModelSpec s;
  s.method = parse_method(method);
  s.tau = tau;
  s.k_y = k_y;
  s.k_x = k_x;
  s.n_basis = n_basis;
  s.order = order;
  s.predictor_ids = std::move(ids);
  return s;
}

ModelSpec spec_for(const ModelSpec& in, std::size_t m) {
  ModelSpec s = in;
  if (s.predictor_ids.empty()) s.predictor_ids = all_predictor_ids(m);
  return s;
}

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["model"] = r.model;
  d["scenario"] = r.scenario;
  d["replicate"] = r.replicate;
  d["seed"] = r.seed;
  d["mspe"] = r.mspe;
  d["cpd"] = r.cpd ? py::cast(*r.cpd) : py::none();
  d["score"] = r.score ? py::cast(*r.score) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Function-on-function linear quantile regression";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Grid>(m, "Grid")
      .def(py::init(&Grid::trapezoid), py::arg("points"), "Trapezoid weights on the given increasing points.")
      .def_property_readonly("points", &Grid::points)
      .def_property_readonly("weights", &Grid::weights)
      .def("__len__", &Grid::size);
  m.def("uniform_grid", &make_uniform_grid, py::arg("n_points"), py::arg("a") = 0.0, py::arg("b") = 1.0);

  py::class_<FunctionalSample>(m, "FunctionalSample")
      .def(py::init<Matrix, Grid>(), py::arg("values"), py::arg("grid"))
      .def_property_readonly("values", &FunctionalSample::values)
      .def_property_readonly("grid", &FunctionalSample::grid)
      .def_property_readonly("n", &FunctionalSample::n);

  py::class_<FpcBasis>(m, "FpcBasis")
      .def_readonly("mean", &FpcBasis::mean)
      .def_readonly("eigenfunctions", &FpcBasis::eigenfunctions)
      .def_readonly("eigenvalues", &FpcBasis::eigenvalues)
      .def_readonly("beyond_numerical_rank", &FpcBasis::beyond_numerical_rank);
  py::class_<FpcDecomposition>(m, "FpcDecomposition")
      .def_readonly("basis", &FpcDecomposition::basis)
      .def_readonly("scores", &FpcDecomposition::scores);
  m.def("fpc_decompose", &fpc_decompose, py::arg("sample"), py::arg("k"));
  m.def("reconstruct", &reconstruct, py::arg("basis"), py::arg("scores"));

  py::class_<QrSolution>(m, "QrSolution")
      .def_readonly("coefficients", &QrSolution::coefficients)
      .def_readonly("objective", &QrSolution::objective)
      .def_readonly("iterations", &QrSolution::iterations)
      .def_readonly("rank_deficient", &QrSolution::rank_deficient);
  m.def(
      "qr_fit", [](Matrix design, Vector response, double tau) { return qr_fit({design, response, tau}); },
      py::arg("design"), py::arg("response"), py::arg("tau") = 0.5);

  py::class_<Model>(m, "Model")
      .def_property_readonly("predictor_ids", [](const Model& md) { return predictor_ids(md.fit); })
      .def_property_readonly("method",
                             [](const Model& md) -> std::string {
                               if (const auto* f = std::get_if<FflqrFit>(&md.fit))
                                 return f->estimator == Estimator::quantile ? "fflqr" : "fpc_ls";
                               return "bspline_ls";
                             })
      .def("predict", [](const Model& md, const std::vector<FunctionalSample>& x) { return predict(md.fit, to_list(x)); })
      .def("to_json", [](const Model& md) { return to_json(md.fit).dump(); })
      .def_static("from_json", [](const std::string& s) { return Model{model_from_json(Json::parse(s))}; })
      .def("save", [](const Model& md, const std::string& path) { save_model(path, md.fit); })
      .def_static("load", [](const std::string& path) { return Model{load_model(path)}; });

  m.def(
      "fit",
      [](const FunctionalSample& y, const std::vector<FunctionalSample>& x, const std::string& method, double tau,
         Index k_y, Index k_x, int n_basis, int order, std::vector<int> ids) {
        const ModelSpec spec = spec_for(make_spec(method, tau, k_y, k_x, n_basis, order, std::move(ids)), x.size());
        return Model{fit_model(spec, y, to_list(x))};
      },
      py::arg("y"), py::arg("x"), py::arg("method") = "fflqr", py::arg("tau") = 0.5, py::arg("k_y") = 2,
      py::arg("k_x") = 2, py::arg("n_basis") = 20, py::arg("order") = 4, py::arg("predictor_ids") = std::vector<int>{});

  m.def(
      "select_truncation",
      [](const FunctionalSample& y, const std::vector<FunctionalSample>& x, double tau, Index k_y_max, Index k_x_max,
         bool least_squares) {
        const auto r = select_truncation(y, to_list(x), tau, k_y_max, k_x_max,
                                         least_squares ? Estimator::least_squares : Estimator::quantile);
        return py::make_tuple(r.k_y, r.k_x, r.bic);
      },
      py::arg("y"), py::arg("x"), py::arg("tau") = 0.5, py::arg("k_y_max") = 5, py::arg("k_x_max") = 5,
      py::arg("least_squares") = false, "Returns (k_y, k_x, bic).");

  m.def(
      "forward_select",
      [](const FunctionalSample& y, const std::vector<FunctionalSample>& x, double tau, double ratio, Index fixed_k,
         Index k_y_max, Index k_x_max) {
        ForwardSelectionOptions o;
        o.ratio_threshold = ratio;
        o.fixed_k = fixed_k;
        o.k_y_max = k_y_max;
        o.k_x_max = k_x_max;
        const auto r = forward_select(y, to_list(x), tau, o);
        return py::make_tuple(r.chosen_predictors, r.chosen_k_y, r.chosen_k_x);
      },
      py::arg("y"), py::arg("x"), py::arg("tau") = 0.5, py::arg("ratio") = 0.95, py::arg("fixed_k") = 2,
      py::arg("k_y_max") = 5, py::arg("k_x_max") = 5, "Returns (predictor ids, k_y, k_x).");

  py::class_<PredictionBand>(m, "PredictionBand")
      .def_readonly("lower", &PredictionBand::lower)
      .def_readonly("upper", &PredictionBand::upper)
      .def_readonly("alpha", &PredictionBand::alpha)
      .def_readonly("grid", &PredictionBand::grid)
      .def_readonly("crossings", &PredictionBand::crossings)
      .def_readonly("replicates_used", &PredictionBand::replicates_used);

  m.def(
      "bootstrap_band",
      [](const FunctionalSample& y, const std::vector<FunctionalSample>& x, const std::vector<FunctionalSample>& x_new,
         const std::string& method, double tau, Index k_y, Index k_x, double alpha, int replicates,
         std::uint64_t seed, int threads) {
        const ModelSpec spec = spec_for(make_spec(method, tau, k_y, k_x, 20, 4, {}), x.size());
        py::gil_scoped_release release;
        return bootstrap_band(spec, y, to_list(x), to_list(x_new), alpha, replicates, seed, threads);
      },
      py::arg("y"), py::arg("x"), py::arg("x_new"), py::arg("method") = "fflqr", py::arg("tau") = 0.5,
      py::arg("k_y") = 2, py::arg("k_x") = 2, py::arg("alpha") = 0.05, py::arg("replicates") = 100,
      py::arg("seed") = 1, py::arg("threads") = 1);

  m.def(
      "direct_band",
      [](const FunctionalSample& y, const std::vector<FunctionalSample>& x, const std::vector<FunctionalSample>& x_new,
         double alpha, Index k_y, Index k_x) { return direct_band(y, to_list(x), to_list(x_new), alpha, k_y, k_x); },
      py::arg("y"), py::arg("x"), py::arg("x_new"), py::arg("alpha") = 0.05, py::arg("k_y") = 2, py::arg("k_x") = 2);

  m.def("mspe", &mspe, py::arg("y_true"), py::arg("y_pred"));
  m.def("coverage", &coverage, py::arg("band"), py::arg("y_true"));
  m.def("cpd", &cpd, py::arg("band"), py::arg("y_true"), py::arg("alpha"));
  m.def("interval_score", &interval_score, py::arg("band"), py::arg("y_true"), py::arg("alpha"));

  py::class_<SimulatedData>(m, "SimulatedData")
      .def_readonly("y_train", &SimulatedData::y_train)
      .def_readonly("y_test", &SimulatedData::y_test)
      .def_readonly("x_train", &SimulatedData::x_train)
      .def_readonly("x_test", &SimulatedData::x_test)
      .def_readonly("contaminated", &SimulatedData::contaminated);

  m.def(
      "_simulate",
      [](const std::string& config_json, std::uint64_t seed) {
        return simulate_dataset(sim_config_from_json(Json::parse(config_json)), seed);
      },
      py::arg("config_json"), py::arg("seed"));
  m.def(
      "_config_json", [](const std::string& config_json) { return to_json(sim_config_from_json(Json::parse(config_json))).dump(); },
      py::arg("config_json"));
  m.def(
      "_run_monte_carlo",
      [](const std::string& config_json, const std::vector<std::string>& methods,
         const std::vector<std::string>& models, int threads) {
        const SimConfig c = sim_config_from_json(Json::parse(config_json));
        std::vector<ModelVariant> variants;
        for (const auto& s : models) variants.push_back(parse_model_variant(s));
        MonteCarloResult r;
        {
          py::gil_scoped_release release;
          r = run_monte_carlo(c, methods, variants, threads);
        }
        py::list rows;
        for (const auto& rep : r.reports) rows.append(report_dict(rep));
        return rows;
      },
      py::arg("config_json"), py::arg("methods"), py::arg("models"), py::arg("threads") = 1);
}
