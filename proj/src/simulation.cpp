#include "fflqr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fflqr/errors.hpp"
#include "fflqr/parallel.hpp"
#include "fflqr/selection.hpp"

namespace fflqr {

std::string to_string(ErrorDistribution d) { return d == ErrorDistribution::normal ? "normal" : "chisq1"; }

ErrorDistribution parse_error_distribution(const std::string& name) {
  if (name == "normal") return ErrorDistribution::normal;
  if (name == "chisq1" || name == "chisq") return ErrorDistribution::chisq1;
  throw ConfigError("error_dist: expected 'normal' or 'chisq1', got '" + name + "'");
}

void SimConfig::validate() const {
  auto require = [](bool ok, const char* field, const char* rule) {
    if (!ok) throw ConfigError(std::string(field) + ": " + rule);
  };
  require(n_train >= 2, "n_train", "must be >= 2");
  require(n_test >= 1, "n_test", "must be >= 1");
  require(n_grid >= 2, "n_grid", "must be >= 2");
  require(n_predictors >= 1, "n_predictors", "must be >= 1");
  require(lag >= 0, "lag", "must be >= 0");
  require(sigma >= 0.0 && std::isfinite(sigma), "sigma", "must be finite and >= 0");
  require(ou_theta > 0.0, "ou_theta", "must be > 0");
  require(contamination_rate >= 0.0 && contamination_rate < 1.0, "contamination_rate", "must lie in [0, 1)");
  require(outlier_var >= 0.0, "outlier_var", "must be >= 0");
  require(gp_scale > 0.0, "gp_scale", "must be > 0");
  require(tau > 0.0 && tau < 1.0, "tau", "must lie in (0, 1)");
  require(n_replicates >= 1, "n_replicates", "must be >= 1");
  require(k_y_max >= 1, "k_y_max", "must be >= 1");
  require(k_x_max >= 1, "k_x_max", "must be >= 1");
  require(selection_ratio > 0.0 && selection_ratio <= 1.0, "selection_ratio", "must lie in (0, 1]");
  require(selection_k >= 1, "selection_k", "must be >= 1");
  require(bspline_order >= 2 && n_basis >= bspline_order, "n_basis", "must be >= bspline_order >= 2");
  require(n_basis <= n_grid, "n_basis", "must not exceed n_grid");
  require(alpha > 0.0 && alpha < 1.0, "alpha", "must lie in (0, 1)");
  require(bootstrap_replicates >= 2, "bootstrap_replicates", "must be >= 2");
  for (int id : true_predictors)
    require(id >= 1 && id <= std::min(n_predictors, 5), "true_predictors", "ids must lie in 1..min(n_predictors, 5)");
}

std::string scenario_label(const SimConfig& c) {
  std::ostringstream os;
  os << to_string(c.error_dist) << "_sigma" << c.sigma << "_c" << c.contamination_rate;
  return os.str();
}

Kernel squared_exponential_kernel(double scale) {
  return [scale](double s, double t) { return std::exp(-scale * (s - t) * (s - t)); };
}

Matrix gp_factor(const Kernel& kernel, const Grid& grid) {
  const Index p = grid.size();
  Matrix gram(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) gram(i, j) = kernel(grid.points()(i), grid.points()(j));
  if (gram.cwiseAbs().maxCoeff() == 0.0) return Matrix::Zero(p, p);
  double jitter = 1e-10;
  for (int attempt = 0; attempt <= 3; ++attempt, jitter *= 10.0) {
    Matrix regularized = gram;
    regularized.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(regularized);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NumericalError("sample_gp: kernel Gram matrix is not positive definite even with jitter 1e-7");
}

FunctionalSample sample_gp(const Matrix& factor, const Grid& grid, int n, Rng& rng) {
  const Index p = grid.size();
  if (factor.rows() != p || factor.cols() != p) throw DataError("sample_gp: factor does not match grid");
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix z(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) z(i, j) = nd(rng);
  return FunctionalSample(z * factor.transpose(), grid);
}

FunctionalSample sample_gp(const Kernel& kernel, const Grid& grid, int n, Rng& rng) {
  return sample_gp(gp_factor(kernel, grid), grid, n, rng);
}

PredictorList gen_predictors(const SimConfig& config, const Grid& grid, int n, Rng& rng) {
  const Matrix factor = gp_factor(squared_exponential_kernel(config.gp_scale), grid);
  const int fields = config.n_predictors + config.lag;
  std::vector<Matrix> v;
  v.reserve(static_cast<std::size_t>(fields));
  for (int k = 0; k < fields; ++k) v.push_back(sample_gp(factor, grid, n, rng).values());
  const double norm = std::sqrt(static_cast<double>(config.lag + 1));
  PredictorList out;
  for (int m = 0; m < config.n_predictors; ++m) {
    Matrix x = Matrix::Constant(n, grid.size(), 10.0);
    for (int j = 0; j <= config.lag; ++j) x += v[static_cast<std::size_t>(m + j)] / norm;
    out.emplace_back(std::move(x), grid);
  }
  return out;
}

CoefficientSurface true_beta(int m, const Grid& s_grid, const Grid& t_grid) {
  if (m < 1 || m > 5) throw ConfigError("true_beta: m must lie in 1..5");
  CoefficientSurface out;
  out.values.resize(s_grid.size(), t_grid.size());
  out.s_grid = s_grid;
  out.t_grid = t_grid;
  out.predictor_id = m;
  for (Index j = 0; j < s_grid.size(); ++j) {
    const double s = s_grid.points()(j);
    for (Index i = 0; i < t_grid.size(); ++i) {
      const double t = t_grid.points()(i);
      double v = 0.0;
      switch (m) {
        case 1:
          v = (1.0 - s) * (1.0 - s) * (t - 0.5) * (t - 0.5);
          break;
        case 2:
          v = std::exp(-3.0 * (s - 1.0) * (s - 1.0) - 5.0 * (t - 0.5) * (t - 0.5));
          break;
        case 3:
          v = std::exp(-5.0 * (s - 0.5) * (s - 0.5) - 5.0 * (t - 0.5) * (t - 0.5)) +
              8.0 * std::exp(-5.0 * (s - 1.5) * (s - 1.5) - 5.0 * (t - 0.5) * (t - 0.5));
          break;
        case 4:
          v = std::sin(1.5 * M_PI * s) * std::sin(M_PI * t);
          break;
        default:
          v = std::sqrt(s * t);
          break;
      }
      out.values(j, i) = v;
    }
  }
  return out;
}

FunctionalSample gen_ou_errors(const SimConfig& config, const Grid& grid, int n, Rng& rng) {
  if (!(config.ou_theta > 0.0)) throw ConfigError("ou_theta: must be > 0");
  std::normal_distribution<double> nd(0.0, 1.0);
  const bool chisq = config.error_dist == ErrorDistribution::chisq1;
  auto innovation = [&] {
    const double z = nd(rng);
    return chisq ? (z * z - 1.0) / std::sqrt(2.0) : z;
  };
  const Index p = grid.size();
  const double gamma = config.ou_gamma, theta = config.ou_theta, sigma = config.sigma;
  Matrix e(n, p);
  for (Index i = 0; i < n; ++i) {
    double start;
    if (config.ou_initial) {
      start = *config.ou_initial;
    } else {
      const double z = nd(rng);
      start = sigma * (chisq ? z * z : z);
    }
    e(i, 0) = start;
    for (Index j = 0; j + 1 < p; ++j) {
      const double dt = grid.points()(j + 1) - grid.points()(j);
      const double decay = std::exp(-theta * dt);
      const double sd = sigma * std::sqrt((1.0 - std::exp(-2.0 * theta * dt)) / (2.0 * theta));
      const double z = sigma > 0.0 ? innovation() : 0.0;
      e(i, j + 1) = gamma + (e(i, j) - gamma) * decay + sd * z;
    }
  }
  return FunctionalSample(std::move(e), grid);
}

FunctionalSample gen_response(const PredictorList& x, const FunctionalSample& errors, const std::vector<int>& ids) {
  Matrix y = errors.values();
  for (int id : ids) {
    if (id < 1 || static_cast<std::size_t>(id) > x.size())
      throw ConfigError("gen_response: predictor id " + std::to_string(id) + " out of range");
    const FunctionalSample& xm = x[static_cast<std::size_t>(id - 1)];
    if (xm.n() != errors.n()) throw DataError("gen_response: predictor and error sample sizes differ");
    const CoefficientSurface beta = true_beta(id, xm.grid(), errors.grid());
    y += xm.values() * xm.grid().weights().asDiagonal() * beta.values;
  }
  return FunctionalSample(std::move(y), errors.grid());
}

Contamination contaminate(const FunctionalSample& y, double rate, double mean, double var, Rng& rng,
                          bool per_point) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("contaminate: rate must lie in [0, 1)");
  const Index n = y.n();
  const auto count = static_cast<Index>(std::floor(static_cast<double>(n) * rate + 1e-9));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<Index> chosen(order.begin(), order.begin() + count);
  std::sort(chosen.begin(), chosen.end());

  std::normal_distribution<double> nd(mean, std::sqrt(var));
  Matrix v = y.values();
  for (Index i : chosen) {
    if (per_point) {
      for (Index j = 0; j < v.cols(); ++j) v(i, j) += std::abs(nd(rng));
    } else {
      v.row(i).array() += std::abs(nd(rng));
    }
  }
  return {FunctionalSample(std::move(v), y.grid()), std::move(chosen)};
}

SimulatedData simulate_dataset(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  const Grid grid = make_uniform_grid(config.n_grid, 0.0, 1.0);
  const int n = config.n_train + config.n_test;
  Rng rng_x(split_seed(seed, 0));
  Rng rng_e(split_seed(seed, 1));
  Rng rng_c(split_seed(seed, 2));

  const PredictorList x = gen_predictors(config, grid, n, rng_x);
  const FunctionalSample errors = gen_ou_errors(config, grid, n, rng_e);
  const FunctionalSample y = gen_response(x, errors, config.true_predictors);

  SimulatedData d;
  d.seed = seed;
  for (const auto& xm : x) {
    d.x_train.push_back(xm.slice(0, config.n_train));
    d.x_test.push_back(xm.slice(config.n_train, config.n_test));
  }
  Contamination c = contaminate(y.slice(0, config.n_train), config.contamination_rate, config.outlier_mean,
                                config.outlier_var, rng_c, config.per_point_outliers);
  d.y_train = std::move(c.y);
  d.contaminated = std::move(c.indices);
  d.y_test = y.slice(config.n_train, config.n_test);
  return d;
}

std::string to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::full:
      return "full";
    case ModelVariant::true_model:
      return "true";
    case ModelVariant::selected:
      return "selected";
  }
  return "unknown";
}

ModelVariant parse_model_variant(const std::string& name) {
  if (name == "full") return ModelVariant::full;
  if (name == "true") return ModelVariant::true_model;
  if (name == "selected") return ModelVariant::selected;
  throw ConfigError("unknown model '" + name + "' (expected full, true or selected)");
}

const std::vector<std::string>& harness_methods() {
  static const std::vector<std::string> names{"fflqr", "fflqr_direct", "fpc_ls", "bspline_ls"};
  return names;
}

std::uint64_t replicate_seed(const SimConfig& config, int replicate) {
  return split_seed(config.master_seed, static_cast<std::uint64_t>(replicate));
}

std::vector<MetricsReport> run_replicate(const SimConfig& config, int replicate,
                                         const std::vector<std::string>& methods,
                                         const std::vector<ModelVariant>& models) {
  for (const auto& m : methods)
    if (std::find(harness_methods().begin(), harness_methods().end(), m) == harness_methods().end())
      throw ConfigError("unknown method '" + m + "'");

  const std::uint64_t seed = replicate_seed(config, replicate);
  const SimulatedData data = simulate_dataset(config, seed);
  const std::string scenario = scenario_label(config);

  std::optional<SelectionResult> selection;
  std::vector<MetricsReport> out;

  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const ModelVariant variant = models[mi];
    std::vector<int> ids;
    if (variant == ModelVariant::full) {
      ids = all_predictor_ids(data.x_train.size());
    } else if (variant == ModelVariant::true_model) {
      ids = config.true_predictors;
    } else {
      if (!selection) {
        ForwardSelectionOptions opt;
        opt.ratio_threshold = config.selection_ratio;
        opt.fixed_k = config.selection_k;
        opt.k_y_max = config.k_y_max;
        opt.k_x_max = config.k_x_max;
        selection = forward_select(data.y_train, data.x_train, config.tau, opt);
      }
      ids = selection->chosen_predictors;
    }
    const PredictorList x_tr = select_predictors(data.x_train, ids);
    const PredictorList x_te = select_predictors(data.x_test, ids);

    std::optional<std::pair<Index, Index>> k_quantile, k_ls;
    auto quantile_k = [&] {
      if (!k_quantile) {
        if (variant == ModelVariant::selected) {
          k_quantile = {selection->chosen_k_y, selection->chosen_k_x};
        } else {
          const auto t = select_truncation(data.y_train, x_tr, config.tau, config.k_y_max, config.k_x_max,
                                           Estimator::quantile, ids);
          k_quantile = {t.k_y, t.k_x};
        }
      }
      return *k_quantile;
    };
    auto ls_k = [&] {
      if (!k_ls) {
        const auto t = select_truncation(data.y_train, x_tr, config.tau, config.k_y_max, config.k_x_max,
                                         Estimator::least_squares, ids);
        k_ls = {t.k_y, t.k_x};
      }
      return *k_ls;
    };

    std::optional<FunctionalSample> fflqr_prediction;
    for (std::size_t me = 0; me < methods.size(); ++me) {
      const std::string& method = methods[me];
      ModelSpec spec;
      spec.tau = config.tau;
      spec.predictor_ids = ids;
      spec.n_basis = config.n_basis;
      spec.order = config.bspline_order;
      if (method == "fflqr" || method == "fflqr_direct") {
        spec.method = Method::fflqr;
        std::tie(spec.k_y, spec.k_x) = quantile_k();
      } else if (method == "fpc_ls") {
        spec.method = Method::fpc_ls;
        std::tie(spec.k_y, spec.k_x) = ls_k();
      } else {
        spec.method = Method::bspline_ls;
      }

      MetricsReport report;
      report.method = method;
      report.model = to_string(variant);
      report.scenario = scenario;
      report.replicate = replicate;
      report.seed = seed;

      FunctionalSample prediction;
      if (spec.method == Method::fflqr && fflqr_prediction) {
        prediction = *fflqr_prediction;
      } else {
        prediction = predict(fit_model(spec, data.y_train, x_tr), x_te);
        if (spec.method == Method::fflqr) fflqr_prediction = prediction;
      }
      report.mspe = mspe(data.y_test, prediction);

      if (config.intervals) {
        PredictionBand band;
        if (method == "fflqr_direct") {
          band = direct_band(data.y_train, x_tr, x_te, config.alpha, spec.k_y, spec.k_x, ids);
        } else {
          const std::uint64_t boot_seed = split_seed(seed, 1000 + 16 * mi + me);
          band = bootstrap_band(spec, data.y_train, x_tr, x_te, config.alpha, config.bootstrap_replicates, boot_seed);
        }
        report.cpd = cpd(band, data.y_test, config.alpha);
        report.score = interval_score(band, data.y_test, config.alpha);
      }
      out.push_back(std::move(report));
    }
  }
  return out;
}

MonteCarloResult run_monte_carlo(const SimConfig& config, const std::vector<std::string>& methods,
                                 const std::vector<ModelVariant>& models, int threads) {
  config.validate();
  const auto count = static_cast<std::size_t>(config.n_replicates);
  std::vector<std::vector<MetricsReport>> per_rep(count);
  std::vector<std::string> errors(count);

  parallel_for(count, threads, [&](std::size_t r) {
    try {
      per_rep[r] = run_replicate(config, static_cast<int>(r), methods, models);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      errors[r] = e.what();
      if (errors[r].empty()) errors[r] = "unknown failure";
    }
  });

  MonteCarloResult result;
  for (std::size_t r = 0; r < count; ++r) {
    if (!errors[r].empty()) {
      result.failures.emplace_back(static_cast<int>(r), errors[r]);
      continue;
    }
    for (auto& rep : per_rep[r]) result.reports.push_back(std::move(rep));
  }
  if (static_cast<double>(result.failures.size()) > 0.2 * static_cast<double>(count)) {
    std::ostringstream os;
    os << result.failures.size() << " of " << count << " replicates failed; first: replicate "
       << result.failures.front().first << ": " << result.failures.front().second;
    throw NumericalError(os.str());
  }
  return result;
}

}  // namespace fflqr
