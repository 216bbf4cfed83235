#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fflqr/model.hpp"
#include "fflqr/uncertainty.hpp"

namespace fflqr {

using Rng = std::mt19937_64;

enum class ErrorDistribution { normal, chisq1 };

std::string to_string(ErrorDistribution d);
ErrorDistribution parse_error_distribution(const std::string& name);

/// Synthetic-data and Monte Carlo settings. The first block describes the
/// data-generating process, the second the comparison harness.
struct SimConfig {
  int n_train = 200;
  int n_test = 300;
  int n_grid = 100;
  int n_predictors = 5;
  int lag = 4;
  double sigma = 1.0;
  ErrorDistribution error_dist = ErrorDistribution::normal;
  double ou_gamma = 0.0;
  double ou_theta = 1.0;
  std::optional<double> ou_initial;  // fixed epsilon(0); drawn as sigma * draw otherwise
  double contamination_rate = 0.0;
  double outlier_mean = 10.0;
  double outlier_var = 0.04;
  bool per_point_outliers = false;
  std::vector<int> true_predictors{2, 4, 5};
  double gp_scale = 100.0;  // Sigma_V(s, s') = exp(-gp_scale (s - s')^2)
  double tau = 0.5;
  int n_replicates = 20;
  std::uint64_t master_seed = 1;

  Index k_y_max = 5;
  Index k_x_max = 5;
  double selection_ratio = 0.95;
  Index selection_k = 2;
  int n_basis = 20;
  int bspline_order = 4;
  bool intervals = false;
  double alpha = 0.05;
  int bootstrap_replicates = 100;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Short scenario label, e.g. "normal_sigma1_c0.1".
std::string scenario_label(const SimConfig& config);

using Kernel = std::function<double(double, double)>;

/// exp(-scale (s - s')^2)
Kernel squared_exponential_kernel(double scale = 100.0);

/// Lower-triangular factor of the kernel Gram matrix on the grid, with
/// diagonal jitter 1e-10 escalated x10 up to three times.
Matrix gp_factor(const Kernel& kernel, const Grid& grid);

/// n mean-zero Gaussian-process paths.
FunctionalSample sample_gp(const Kernel& kernel, const Grid& grid, int n, Rng& rng);

/// Same, from a precomputed factor.
FunctionalSample sample_gp(const Matrix& factor, const Grid& grid, int n, Rng& rng);

/// X_im(s) = 10 + sum_{j=0}^{lag} V_{i,m+j}(s) / sqrt(lag + 1).
PredictorList gen_predictors(const SimConfig& config, const Grid& grid, int n, Rng& rng);

/// Closed-form coefficient surface m in 1..5.
CoefficientSurface true_beta(int m, const Grid& s_grid, const Grid& t_grid);

/// Ornstein-Uhlenbeck error curves by exact discretization on the grid.
FunctionalSample gen_ou_errors(const SimConfig& config, const Grid& grid, int n, Rng& rng);

/// sum_{m in D} int X_m(s) beta_m(s, t) ds + errors(t). D holds 1-based ids.
FunctionalSample gen_response(const PredictorList& x, const FunctionalSample& errors, const std::vector<int>& ids);

struct Contamination {
  FunctionalSample y;
  std::vector<Index> indices;  // ascending
};

/// Adds |N(mean, var)| to floor(n * rate) distinct curves: one draw per curve,
/// or one per grid point when `per_point` is set.
Contamination contaminate(const FunctionalSample& y, double rate, double mean, double var, Rng& rng,
                          bool per_point = false);

struct SimulatedData {
  FunctionalSample y_train;
  FunctionalSample y_test;
  PredictorList x_train;
  PredictorList x_test;
  std::vector<Index> contaminated;  // training rows
  std::uint64_t seed = 0;
};

/// One dataset. Only training responses are contaminated.
SimulatedData simulate_dataset(const SimConfig& config, std::uint64_t seed);

enum class ModelVariant { full, true_model, selected };

std::string to_string(ModelVariant v);
ModelVariant parse_model_variant(const std::string& name);

/// Method labels accepted by the harness: fflqr, fflqr_direct, fpc_ls, bspline_ls.
/// fflqr_direct shares the fflqr point prediction and reports direct-band metrics.
const std::vector<std::string>& harness_methods();

struct MonteCarloResult {
  std::vector<MetricsReport> reports;  // replicate-major, then model, then method
  std::vector<std::pair<int, std::string>> failures;
};

/// Seed of replicate r.
std::uint64_t replicate_seed(const SimConfig& config, int replicate);

/// Reports for one replicate (no failure handling).
std::vector<MetricsReport> run_replicate(const SimConfig& config, int replicate,
                                         const std::vector<std::string>& methods,
                                         const std::vector<ModelVariant>& models);

/// Runs all replicates (concurrently when threads > 1). Fails when more than
/// 20% of replicates fail.
MonteCarloResult run_monte_carlo(const SimConfig& config, const std::vector<std::string>& methods,
                                 const std::vector<ModelVariant>& models, int threads = 1);

}  // namespace fflqr
