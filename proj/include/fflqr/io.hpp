#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fflqr/model.hpp"
#include "fflqr/selection.hpp"
#include "fflqr/simulation.hpp"
#include "fflqr/uncertainty.hpp"

namespace fflqr {

namespace fs = std::filesystem;
using Json = nlohmann::json;

/// 17 significant digits.
std::string format_double(double v);

/// Wide CSV: first line holds the grid points, every further line one curve.
/// Trapezoid weights are rebuilt from the points on read.
FunctionalSample read_wide_csv(const fs::path& path);
void write_wide_csv(const fs::path& path, const FunctionalSample& sample);
void write_wide_csv(const fs::path& path, const Matrix& values, const Grid& grid);

Json to_json(const FittedModel& model);
FittedModel model_from_json(const Json& j);
void save_model(const fs::path& path, const FittedModel& model);
FittedModel load_model(const fs::path& path);

/// Missing fields keep their defaults; unknown or mistyped fields are a
/// ConfigError naming the field.
Json to_json(const SimConfig& config);
SimConfig sim_config_from_json(const Json& j);
SimConfig load_sim_config(const fs::path& path);

/// stage, candidate, K_Y, K_X, BIC, accepted, note
void write_trace_csv(const fs::path& path, const std::vector<BicTraceEntry>& trace);
std::vector<BicTraceEntry> read_trace_csv(const fs::path& path);

/// seed, replicate, method, model, scenario, mspe, cpd, score (empty when absent)
void write_results_csv(const fs::path& path, const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> read_results_csv(const fs::path& path);

struct RunManifest {
  std::string command;
  Json config = Json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t master_seed = 0;
  std::string tool_version;
  std::string started;
  std::string finished;
};

Json to_json(const RunManifest& manifest);
void write_manifest(const fs::path& dir, const RunManifest& manifest);

/// UTC timestamp, ISO 8601.
std::string utc_now();

void write_json(const fs::path& path, const Json& j);
Json read_json(const fs::path& path);

}  // namespace fflqr
