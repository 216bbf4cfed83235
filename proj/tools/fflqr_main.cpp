// fflqr command-line tool: simulate, fit, predict, interval, benchmark.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "fflqr/errors.hpp"
#include "fflqr/io.hpp"
#include "fflqr/selection.hpp"
#include "fflqr/simulation.hpp"
#include "fflqr/uncertainty.hpp"

using namespace fflqr;

namespace {

int default_threads() {
  if (const char* env = std::getenv("FFLQR_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t >= 1) return t;
    } catch (const std::exception&) {
    }
    throw ConfigError("FFLQR_THREADS must be a positive integer");
  }
  return 1;
}

std::vector<std::string> as_strings(const std::vector<fs::path>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(p.string());
  return out;
}

PredictorList read_predictors(const std::vector<fs::path>& paths) {
  PredictorList x;
  for (const auto& p : paths) x.push_back(read_wide_csv(p));
  return x;
}

// Predictor files for a fitted model: exactly |D| files in model order, or
// the full predictor list from which the model's ids are picked.
PredictorList predictors_for(const FittedModel& model, const std::vector<fs::path>& paths) {
  PredictorList x = read_predictors(paths);
  const auto& ids = predictor_ids(model);
  if (x.size() == ids.size()) return x;
  const int max_id = *std::max_element(ids.begin(), ids.end());
  if (static_cast<int>(x.size()) >= max_id) return select_predictors(x, ids);
  throw DataError("model uses " + std::to_string(ids.size()) + " predictors (max id " + std::to_string(max_id) +
                  ") but " + std::to_string(x.size()) + " files were given");
}

ModelSpec spec_of(const FittedModel& model) {
  ModelSpec spec;
  if (const auto* f = std::get_if<FflqrFit>(&model)) {
    spec.method = f->estimator == Estimator::quantile ? Method::fflqr : Method::fpc_ls;
    spec.tau = f->tau;
    spec.k_y = f->k_y();
    spec.k_x = f->predictor_bases.empty() ? 1 : f->k_x(0);
  } else {
    const auto& b = std::get<BsplineLsFit>(model);
    spec.method = Method::bspline_ls;
    spec.n_basis = b.n_basis;
    spec.order = b.order;
  }
  spec.predictor_ids = predictor_ids(model);
  return spec;
}

Json spec_json(const ModelSpec& s) {
  return {{"method", to_string(s.method)}, {"tau", s.tau},         {"k_y", s.k_y},
          {"k_x", s.k_x},                  {"n_basis", s.n_basis}, {"order", s.order},
          {"predictor_ids", s.predictor_ids}};
}

RunManifest start_manifest(const std::string& command) {
  RunManifest m;
  m.command = command;
  m.tool_version = FFLQR_VERSION;
  m.started = utc_now();
  return m;
}

void finish_manifest(const fs::path& out, RunManifest m) {
  m.finished = utc_now();
  write_manifest(out, m);
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
};

void run_simulate(const SimulateArgs& a) {
  auto manifest = start_manifest("simulate");
  SimConfig config = a.config.empty() ? SimConfig{} : load_sim_config(a.config);
  if (a.seed) config.master_seed = *a.seed;
  config.validate();
  const std::uint64_t seed = replicate_seed(config, 0);
  const SimulatedData d = simulate_dataset(config, seed);

  fs::create_directories(a.out);
  std::vector<std::string> outputs;
  auto emit = [&](const std::string& name, const FunctionalSample& s) {
    write_wide_csv(a.out / name, s);
    outputs.push_back(name);
  };
  emit("Y_train.csv", d.y_train);
  emit("Y_test.csv", d.y_test);
  for (std::size_t m = 0; m < d.x_train.size(); ++m) {
    emit("X" + std::to_string(m + 1) + "_train.csv", d.x_train[m]);
    emit("X" + std::to_string(m + 1) + "_test.csv", d.x_test[m]);
  }
  Json truth = {{"true_predictors", config.true_predictors},
                {"beta_ids", config.true_predictors},
                {"dataset_seed", seed},
                {"master_seed", config.master_seed},
                {"scenario", scenario_label(config)},
                {"contaminated_train_rows", d.contaminated}};
  write_json(a.out / "truth.json", truth);
  outputs.push_back("truth.json");

  manifest.config = to_json(config);
  manifest.master_seed = config.master_seed;
  if (!a.config.empty()) manifest.inputs = {a.config.string()};
  manifest.outputs = outputs;
  finish_manifest(a.out, manifest);
}

// --- fit -------------------------------------------------------------------

struct FitArgs {
  fs::path y;
  std::vector<fs::path> x;
  std::vector<int> ids;
  std::string method = "fflqr";
  double tau = 0.5;
  Index k_y = 2;
  Index k_x = 2;
  bool tune = false;
  bool select = false;
  Index k_y_max = 5;
  Index k_x_max = 5;
  double ratio = 0.95;
  Index selection_k = 2;
  int n_basis = 20;
  int order = 4;
  fs::path out;
};

void run_fit(const FitArgs& a) {
  auto manifest = start_manifest("fit");
  const FunctionalSample y = read_wide_csv(a.y);
  const PredictorList x_all = read_predictors(a.x);
  std::vector<int> ids = a.ids.empty() ? all_predictor_ids(x_all.size()) : a.ids;
  if (ids.size() != x_all.size()) throw ConfigError("--ids: expected one id per --x file");

  ModelSpec spec;
  spec.method = parse_method(a.method);
  spec.tau = a.tau;
  spec.k_y = a.k_y;
  spec.k_x = a.k_x;
  spec.n_basis = a.n_basis;
  spec.order = a.order;
  const Estimator est = spec.method == Method::fflqr ? Estimator::quantile : Estimator::least_squares;

  fs::create_directories(a.out);
  std::vector<std::string> outputs;
  PredictorList x = x_all;
  if (a.select) {
    ForwardSelectionOptions opt;
    opt.ratio_threshold = a.ratio;
    opt.fixed_k = a.selection_k;
    opt.k_y_max = a.k_y_max;
    opt.k_x_max = a.k_x_max;
    opt.estimator = est;
    const SelectionResult sel = forward_select(y, x_all, a.tau, opt);
    std::vector<int> chosen;
    for (int pos : sel.chosen_predictors) chosen.push_back(ids[static_cast<std::size_t>(pos - 1)]);
    std::vector<BicTraceEntry> trace = sel.trace;
    for (auto& e : trace)
      for (auto& id : e.predictor_ids) id = ids[static_cast<std::size_t>(id - 1)];
    write_trace_csv(a.out / "selection_trace.csv", trace);
    outputs.push_back("selection_trace.csv");
    x = select_predictors(x_all, sel.chosen_predictors);
    ids = chosen;
    spec.k_y = sel.chosen_k_y;
    spec.k_x = sel.chosen_k_x;
  } else if (a.tune) {
    const TruncationResult t = select_truncation(y, x, a.tau, a.k_y_max, a.k_x_max, est, ids);
    write_trace_csv(a.out / "bic_trace.csv", t.trace);
    outputs.push_back("bic_trace.csv");
    spec.k_y = t.k_y;
    spec.k_x = t.k_x;
  }
  spec.predictor_ids = ids;

  const FittedModel model = fit_model(spec, y, x);
  save_model(a.out / "model.json", model);
  const FunctionalSample fitted = predict(model, x);
  write_wide_csv(a.out / "fitted.csv", fitted);
  outputs.insert(outputs.end(), {"model.json", "fitted.csv", "report.json"});

  Json report = {{"spec", spec_json(spec)}, {"n", y.n()}};
  if (const auto* f = std::get_if<FflqrFit>(&model)) {
    const Vector obj = in_sample_objective(*f, y, x);
    report["in_sample_objective"] = std::vector<double>(obj.data(), obj.data() + obj.size());
    report["rank_deficient"] = f->rank_deficient();
    report["beyond_numerical_rank"] = f->response_basis.beyond_numerical_rank;
  } else {
    report["rank_deficient"] = std::get<BsplineLsFit>(model).rank_deficient;
  }
  const Vector loss = pointwise_loss(y, fitted, est, a.tau);
  report["in_sample_loss_total"] = loss.sum();
  write_json(a.out / "report.json", report);

  manifest.config = spec_json(spec);
  manifest.config["tune"] = a.tune;
  manifest.config["select"] = a.select;
  manifest.config["k_y_max"] = a.k_y_max;
  manifest.config["k_x_max"] = a.k_x_max;
  manifest.config["ratio"] = a.ratio;
  manifest.config["selection_k"] = a.selection_k;
  manifest.inputs = as_strings(a.x);
  manifest.inputs.insert(manifest.inputs.begin(), a.y.string());
  manifest.outputs = outputs;
  finish_manifest(a.out, manifest);
}

// --- predict ---------------------------------------------------------------

struct PredictArgs {
  fs::path model;
  std::vector<fs::path> x;
  fs::path out;
};

void run_predict(const PredictArgs& a) {
  auto manifest = start_manifest("predict");
  const FittedModel model = load_model(a.model);
  const PredictorList x = predictors_for(model, a.x);
  fs::create_directories(a.out);
  write_wide_csv(a.out / "Y_pred.csv", predict(model, x));
  manifest.config = spec_json(spec_of(model));
  manifest.inputs = as_strings(a.x);
  manifest.inputs.insert(manifest.inputs.begin(), a.model.string());
  manifest.outputs = {"Y_pred.csv"};
  finish_manifest(a.out, manifest);
}

// --- interval --------------------------------------------------------------

struct IntervalArgs {
  fs::path model;
  fs::path y_train;
  std::vector<fs::path> x_train;
  std::vector<fs::path> x;
  std::string method = "bootstrap";
  double alpha = 0.05;
  int replicates = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  fs::path out;
};

void run_interval(const IntervalArgs& a) {
  auto manifest = start_manifest("interval");
  const FittedModel model = load_model(a.model);
  const ModelSpec spec = spec_of(model);
  const FunctionalSample y_train = read_wide_csv(a.y_train);
  const PredictorList x_train = predictors_for(model, a.x_train);
  const PredictorList x_test = predictors_for(model, a.x);

  PredictionBand band;
  Json meta = {{"alpha", a.alpha}, {"method", a.method}};
  if (a.method == "bootstrap") {
    band = bootstrap_band(spec, y_train, x_train, x_test, a.alpha, a.replicates, a.seed, a.threads);
    meta["R"] = a.replicates;
    meta["seed"] = a.seed;
    meta["replicates_used"] = band.replicates_used;
    meta["replicates_failed"] = band.replicates_failed;
  } else if (a.method == "direct") {
    if (spec.method != Method::fflqr) throw ConfigError("--method direct needs an fflqr model");
    band = direct_band(y_train, x_train, x_test, a.alpha, spec.k_y, spec.k_x, spec.predictor_ids);
    meta["crossings"] = band.crossings;
    meta["crossing_rate"] = static_cast<double>(band.crossings) / static_cast<double>(band.lower.size());
  } else {
    throw ConfigError("--method: expected bootstrap or direct");
  }
  fs::create_directories(a.out);
  write_wide_csv(a.out / "Y_pred.csv", predict(model, x_test));
  write_wide_csv(a.out / "lower.csv", band.lower, band.grid);
  write_wide_csv(a.out / "upper.csv", band.upper, band.grid);
  write_json(a.out / "band.json", meta);

  manifest.config = spec_json(spec);
  manifest.config["interval"] = meta;
  manifest.master_seed = a.seed;
  manifest.inputs = {a.model.string(), a.y_train.string()};
  for (const auto& p : a.x_train) manifest.inputs.push_back(p.string());
  for (const auto& p : a.x) manifest.inputs.push_back(p.string());
  manifest.outputs = {"Y_pred.csv", "lower.csv", "upper.csv", "band.json"};
  finish_manifest(a.out, manifest);
}

// --- benchmark -------------------------------------------------------------

struct BenchmarkArgs {
  fs::path config;
  std::vector<std::string> methods{"fflqr", "fpc_ls", "bspline_ls"};
  std::vector<std::string> models{"selected"};
  std::optional<int> mc;
  std::optional<std::uint64_t> seed;
  bool intervals = false;
  int threads = 1;
  fs::path out;
};

void write_summary(const fs::path& path, const std::vector<MetricsReport>& reports) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, std::vector<double>> groups;
  std::vector<Key> order;
  auto add = [&](const Key& k, double v) {
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(v);
  };
  for (const auto& r : reports) {
    add({r.method, r.model, r.scenario, "mspe"}, r.mspe);
    if (r.cpd) add({r.method, r.model, r.scenario, "cpd"}, *r.cpd);
    if (r.score) add({r.method, r.model, r.scenario, "score"}, *r.score);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "method,model,scenario,metric,n,median,q1,q3,iqr\n";
  for (const auto& k : order) {
    auto v = groups[k];
    std::sort(v.begin(), v.end());
    const double q1 = quantile_type7(v, 0.25), q3 = quantile_type7(v, 0.75);
    out << std::get<0>(k) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ',' << std::get<3>(k) << ','
        << v.size() << ',' << format_double(quantile_type7(v, 0.5)) << ',' << format_double(q1) << ','
        << format_double(q3) << ',' << format_double(q3 - q1) << '\n';
  }
}

void write_long(const fs::path& path, const std::vector<MetricsReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "seed,replicate,method,model,scenario,metric,value\n";
  for (const auto& r : reports) {
    auto row = [&](const char* metric, double v) {
      out << r.seed << ',' << r.replicate << ',' << r.method << ',' << r.model << ',' << r.scenario << ','
          << metric << ',' << format_double(v) << '\n';
    };
    row("mspe", r.mspe);
    if (r.cpd) row("cpd", *r.cpd);
    if (r.score) row("score", *r.score);
  }
}

void run_benchmark(const BenchmarkArgs& a) {
  auto manifest = start_manifest("benchmark");
  SimConfig config = a.config.empty() ? SimConfig{} : load_sim_config(a.config);
  if (a.mc) config.n_replicates = *a.mc;
  if (a.seed) config.master_seed = *a.seed;
  if (a.intervals) config.intervals = true;
  config.validate();
  std::vector<ModelVariant> models;
  for (const auto& m : a.models) models.push_back(parse_model_variant(m));

  const MonteCarloResult result = run_monte_carlo(config, a.methods, models, a.threads);
  fs::create_directories(a.out);
  write_results_csv(a.out / "results.csv", result.reports);
  write_summary(a.out / "summary.csv", result.reports);
  write_long(a.out / "long.csv", result.reports);

  manifest.config = to_json(config);
  manifest.config["methods"] = a.methods;
  manifest.config["models"] = a.models;
  manifest.config["threads"] = a.threads;
  Json failures = Json::array();
  for (const auto& [rep, msg] : result.failures) failures.push_back({{"replicate", rep}, {"error", msg}});
  manifest.config["failed_replicates"] = failures;
  manifest.master_seed = config.master_seed;
  if (!a.config.empty()) manifest.inputs = {a.config.string()};
  manifest.outputs = {"results.csv", "summary.csv", "long.csv"};
  finish_manifest(a.out, manifest);
  for (const auto& [rep, msg] : result.failures)
    std::cerr << "warning: replicate " << rep << " failed: " << msg << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Function-on-function linear quantile regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(FFLQR_VERSION));

  int threads = 1;
  try {
    threads = default_threads();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic train/test dataset");
  simulate->add_option("--config", sim.config, "Scenario config JSON")->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim.seed, "Master seed (overrides the config)");
  simulate->add_option("--out", sim.out, "Output directory")->required();

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit", "Fit a model");
  fitc->add_option("--y", fit.y, "Response CSV")->required()->check(CLI::ExistingFile);
  fitc->add_option("--x", fit.x, "Predictor CSVs")->required()->check(CLI::ExistingFile);
  fitc->add_option("--ids", fit.ids, "Predictor labels (default 1..M)");
  fitc->add_option("--method", fit.method, "fflqr, fpc_ls or bspline_ls")->capture_default_str();
  fitc->add_option("--tau", fit.tau, "Quantile level")->capture_default_str();
  fitc->add_option("--ky", fit.k_y, "Response components")->capture_default_str();
  fitc->add_option("--kx", fit.k_x, "Predictor components")->capture_default_str();
  auto* tune = fitc->add_flag("--tune", fit.tune, "Choose K by BIC");
  auto* sel = fitc->add_flag("--select", fit.select, "Forward predictor selection, then BIC truncation");
  tune->excludes(sel);
  fitc->add_option("--ky-max", fit.k_y_max)->capture_default_str();
  fitc->add_option("--kx-max", fit.k_x_max)->capture_default_str();
  fitc->add_option("--ratio", fit.ratio, "Forward-selection acceptance ratio")->capture_default_str();
  fitc->add_option("--selection-k", fit.selection_k)->capture_default_str();
  fitc->add_option("--n-basis", fit.n_basis)->capture_default_str();
  fitc->add_option("--order", fit.order)->capture_default_str();
  fitc->add_option("--out", fit.out, "Output directory")->required();

  PredictArgs pred;
  auto* predc = app.add_subcommand("predict", "Predict response curves");
  predc->add_option("--model", pred.model)->required()->check(CLI::ExistingFile);
  predc->add_option("--x", pred.x)->required()->check(CLI::ExistingFile);
  predc->add_option("--out", pred.out)->required();

  IntervalArgs iv;
  iv.threads = threads;
  auto* ivc = app.add_subcommand("interval", "Pointwise prediction bands");
  ivc->add_option("--model", iv.model)->required()->check(CLI::ExistingFile);
  ivc->add_option("--y-train", iv.y_train)->required()->check(CLI::ExistingFile);
  ivc->add_option("--x-train", iv.x_train)->required()->check(CLI::ExistingFile);
  ivc->add_option("--x", iv.x, "Predictor CSVs to predict at")->required()->check(CLI::ExistingFile);
  ivc->add_option("--method", iv.method, "bootstrap or direct")->capture_default_str();
  ivc->add_option("--alpha", iv.alpha)->capture_default_str();
  ivc->add_option("--R", iv.replicates, "Bootstrap replicates")->capture_default_str();
  ivc->add_option("--seed", iv.seed)->capture_default_str();
  ivc->add_option("--threads", iv.threads)->check(CLI::PositiveNumber);
  ivc->add_option("--out", iv.out)->required();

  BenchmarkArgs bench;
  bench.threads = threads;
  auto* benchc = app.add_subcommand("benchmark", "Monte Carlo comparison of the estimators");
  benchc->add_option("--config", bench.config)->check(CLI::ExistingFile);
  benchc->add_option("--methods", bench.methods, "fflqr, fflqr_direct, fpc_ls, bspline_ls")->delimiter(',');
  benchc->add_option("--models", bench.models, "full, true, selected")->delimiter(',');
  benchc->add_option("--mc", bench.mc, "Replicates (overrides the config)");
  benchc->add_option("--seed", bench.seed, "Master seed (overrides the config)");
  benchc->add_flag("--intervals", bench.intervals, "Also compute CPD and interval score");
  benchc->add_option("--threads", bench.threads)->check(CLI::PositiveNumber);
  benchc->add_option("--out", bench.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) run_simulate(sim);
    if (*fitc) run_fit(fit);
    if (*predc) run_predict(pred);
    if (*ivc) run_interval(iv);
    if (*benchc) run_benchmark(bench);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
