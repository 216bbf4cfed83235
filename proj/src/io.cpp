#include "fflqr/io.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fflqr/errors.hpp"

namespace fflqr {

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  const char* begin = s.c_str();
  while (*begin == ' ') ++begin;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw DataError(path.string() + ":" + std::to_string(line) + ": not a finite number: '" + s + "'");
  return v;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vector(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Vector::Map(v.data(), static_cast<Index>(v.size()));
}

Matrix json_matrix(const Json& j, Index cols_if_empty = 0) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix(0, cols_if_empty);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw DataError("model JSON: ragged matrix");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
  }
  return m;
}

Json grid_json(const Grid& g) { return {{"points", vector_json(g.points())}, {"weights", vector_json(g.weights())}}; }

Grid json_grid(const Json& j) { return Grid(json_vector(j.at("points")), json_vector(j.at("weights"))); }

Json basis_json(const FpcBasis& b) {
  return {{"grid", grid_json(b.grid)},
          {"mean", vector_json(b.mean)},
          {"eigenfunctions", matrix_json(b.eigenfunctions)},
          {"eigenvalues", vector_json(b.eigenvalues)},
          {"beyond_numerical_rank", b.beyond_numerical_rank}};
}

FpcBasis json_basis(const Json& j) {
  FpcBasis b;
  b.grid = json_grid(j.at("grid"));
  b.mean = json_vector(j.at("mean"));
  b.eigenfunctions = json_matrix(j.at("eigenfunctions"), b.grid.size());
  b.eigenvalues = json_vector(j.at("eigenvalues"));
  b.beyond_numerical_rank = j.at("beyond_numerical_rank").get<bool>();
  if (b.mean.size() != b.grid.size() || b.eigenfunctions.cols() != b.grid.size() ||
      b.eigenfunctions.rows() != b.eigenvalues.size())
    throw DataError("model JSON: inconsistent basis dimensions");
  return b;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FunctionalSample read_wide_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path.string() + ": empty file");
  const auto head = split_csv(lines[0]);
  Vector points(static_cast<Index>(head.size()));
  for (std::size_t k = 0; k < head.size(); ++k) points(static_cast<Index>(k)) = parse_double(head[k], path, 1);
  const auto cols = points.size();
  Matrix values(static_cast<Index>(lines.size() - 1), cols);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i]);
    if (static_cast<Index>(cells.size()) != cols)
      throw DataError(path.string() + ":" + std::to_string(i + 1) + ": expected " + std::to_string(cols) +
                      " values, found " + std::to_string(cells.size()));
    for (std::size_t k = 0; k < cells.size(); ++k)
      values(static_cast<Index>(i - 1), static_cast<Index>(k)) = parse_double(cells[k], path, i + 1);
  }
  try {
    return FunctionalSample(std::move(values), Grid::trapezoid(points));
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_wide_csv(const fs::path& path, const Matrix& values, const Grid& grid) {
  if (values.cols() != grid.size()) throw DataError("write_wide_csv: column count differs from grid size");
  std::ofstream out = open_out(path);
  for (Index j = 0; j < grid.size(); ++j) out << (j ? "," : "") << format_double(grid.points()(j));
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_wide_csv(const fs::path& path, const FunctionalSample& sample) {
  write_wide_csv(path, sample.values(), sample.grid());
}

Json to_json(const FittedModel& model) {
  if (const auto* f = std::get_if<FflqrFit>(&model)) {
    Json bases = Json::array();
    for (const auto& b : f->predictor_bases) bases.push_back(basis_json(b));
    return {{"type", f->estimator == Estimator::quantile ? "fflqr" : "fpc_ls"},
            {"tau", f->tau},
            {"predictor_ids", f->predictor_ids},
            {"response_basis", basis_json(f->response_basis)},
            {"predictor_bases", bases},
            {"coefficients", matrix_json(f->coefs.coefficients)},
            {"includes_intercept", f->coefs.includes_intercept},
            {"rank_deficient", f->coefs.rank_deficient}};
  }
  const auto& b = std::get<BsplineLsFit>(model);
  Json grids = Json::array();
  for (const auto& g : b.predictor_grids) grids.push_back(grid_json(g));
  return {{"type", "bspline_ls"},
          {"n_basis", b.n_basis},
          {"order", b.order},
          {"predictor_ids", b.predictor_ids},
          {"response_grid", grid_json(b.response_grid)},
          {"predictor_grids", grids},
          {"coefficients", matrix_json(b.coefficients)},
          {"rank_deficient", b.rank_deficient}};
}

FittedModel model_from_json(const Json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "fflqr" || type == "fpc_ls") {
      FflqrFit f;
      f.estimator = type == "fflqr" ? Estimator::quantile : Estimator::least_squares;
      f.tau = j.at("tau").get<double>();
      f.predictor_ids = j.at("predictor_ids").get<std::vector<int>>();
      f.response_basis = json_basis(j.at("response_basis"));
      for (const auto& b : j.at("predictor_bases")) f.predictor_bases.push_back(json_basis(b));
      f.coefs.coefficients = json_matrix(j.at("coefficients"));
      f.coefs.tau = f.tau;
      f.coefs.includes_intercept = j.at("includes_intercept").get<bool>();
      f.coefs.rank_deficient = j.at("rank_deficient").get<bool>();
      Index rows = 1;
      for (const auto& b : f.predictor_bases) rows += b.components();
      if (f.predictor_ids.size() != f.predictor_bases.size() || f.coefs.coefficients.rows() != rows ||
          f.coefs.coefficients.cols() != f.response_basis.components())
        throw DataError("model JSON: coefficient matrix does not match the bases");
      return f;
    }
    if (type == "bspline_ls") {
      BsplineLsFit b;
      b.n_basis = j.at("n_basis").get<int>();
      b.order = j.at("order").get<int>();
      b.predictor_ids = j.at("predictor_ids").get<std::vector<int>>();
      b.response_grid = json_grid(j.at("response_grid"));
      for (const auto& g : j.at("predictor_grids")) b.predictor_grids.push_back(json_grid(g));
      b.coefficients = json_matrix(j.at("coefficients"));
      b.rank_deficient = j.at("rank_deficient").get<bool>();
      if (b.predictor_ids.size() != b.predictor_grids.size() ||
          b.coefficients.rows() != 1 + static_cast<Index>(b.predictor_grids.size()) * b.n_basis ||
          b.coefficients.cols() != b.n_basis)
        throw DataError("model JSON: coefficient matrix does not match the basis size");
      return b;
    }
    throw DataError("model JSON: unknown type '" + type + "'");
  } catch (const Json::exception& e) {
    throw DataError(std::string("model JSON: ") + e.what());
  }
}

void save_model(const fs::path& path, const FittedModel& model) { write_json(path, to_json(model)); }

FittedModel load_model(const fs::path& path) { return model_from_json(read_json(path)); }

Json to_json(const SimConfig& c) {
  Json j = {{"n_train", c.n_train},
            {"n_test", c.n_test},
            {"n_grid", c.n_grid},
            {"n_predictors", c.n_predictors},
            {"lag", c.lag},
            {"sigma", c.sigma},
            {"error_dist", to_string(c.error_dist)},
            {"ou_gamma", c.ou_gamma},
            {"ou_theta", c.ou_theta},
            {"contamination_rate", c.contamination_rate},
            {"outlier_mean", c.outlier_mean},
            {"outlier_var", c.outlier_var},
            {"per_point_outliers", c.per_point_outliers},
            {"true_predictors", c.true_predictors},
            {"gp_scale", c.gp_scale},
            {"tau", c.tau},
            {"n_replicates", c.n_replicates},
            {"master_seed", c.master_seed},
            {"k_y_max", c.k_y_max},
            {"k_x_max", c.k_x_max},
            {"selection_ratio", c.selection_ratio},
            {"selection_k", c.selection_k},
            {"n_basis", c.n_basis},
            {"bspline_order", c.bspline_order},
            {"intervals", c.intervals},
            {"alpha", c.alpha},
            {"bootstrap_replicates", c.bootstrap_replicates}};
  j["ou_initial"] = c.ou_initial ? Json(*c.ou_initial) : Json(nullptr);
  return j;
}

SimConfig sim_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  SimConfig c;
  auto num = [](double& dst) { return [&dst](const Json& v) { dst = v.get<double>(); }; };
  auto integer = [](auto& dst) {
    return [&dst](const Json& v) {
      if (!v.is_number_integer()) throw ConfigError("expected an integer");
      dst = v.get<std::remove_reference_t<decltype(dst)>>();
    };
  };
  auto flag = [](bool& dst) { return [&dst](const Json& v) { dst = v.get<bool>(); }; };
  const std::map<std::string, std::function<void(const Json&)>> fields{
      {"n_train", integer(c.n_train)},
      {"n_test", integer(c.n_test)},
      {"n_grid", integer(c.n_grid)},
      {"n_predictors", integer(c.n_predictors)},
      {"lag", integer(c.lag)},
      {"sigma", num(c.sigma)},
      {"error_dist", [&c](const Json& v) { c.error_dist = parse_error_distribution(v.get<std::string>()); }},
      {"ou_gamma", num(c.ou_gamma)},
      {"ou_theta", num(c.ou_theta)},
      {"ou_initial",
       [&c](const Json& v) {
         if (v.is_null())
           c.ou_initial.reset();
         else
           c.ou_initial = v.get<double>();
       }},
      {"contamination_rate", num(c.contamination_rate)},
      {"outlier_mean", num(c.outlier_mean)},
      {"outlier_var", num(c.outlier_var)},
      {"per_point_outliers", flag(c.per_point_outliers)},
      {"true_predictors", [&c](const Json& v) { c.true_predictors = v.get<std::vector<int>>(); }},
      {"gp_scale", num(c.gp_scale)},
      {"tau", num(c.tau)},
      {"n_replicates", integer(c.n_replicates)},
      {"master_seed", integer(c.master_seed)},
      {"k_y_max", integer(c.k_y_max)},
      {"k_x_max", integer(c.k_x_max)},
      {"selection_ratio", num(c.selection_ratio)},
      {"selection_k", integer(c.selection_k)},
      {"n_basis", integer(c.n_basis)},
      {"bspline_order", integer(c.bspline_order)},
      {"intervals", flag(c.intervals)},
      {"alpha", num(c.alpha)},
      {"bootstrap_replicates", integer(c.bootstrap_replicates)},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError(key + ": unknown config field");
    try {
      it->second(value);
    } catch (const Json::exception& e) {
      throw ConfigError(key + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

SimConfig load_sim_config(const fs::path& path) {
  Json j;
  try {
    j = read_json(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return sim_config_from_json(j);
}

void write_trace_csv(const fs::path& path, const std::vector<BicTraceEntry>& trace) {
  std::ofstream out = open_out(path);
  out << "stage,candidate,K_Y,K_X,BIC,accepted,note\n";
  for (const auto& e : trace) {
    out << e.stage << ',' << quote(e.candidate) << ',' << e.k_y << ',' << e.k_x << ','
        << (std::isfinite(e.bic) ? format_double(e.bic) : std::string()) << ',' << (e.accepted ? 1 : 0) << ','
        << quote(e.note) << '\n';
  }
}

std::vector<BicTraceEntry> read_trace_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "stage,candidate,K_Y,K_X,BIC,accepted,note")
    throw DataError(path.string() + ": not a trace CSV");
  std::vector<BicTraceEntry> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split_csv(lines[i]);
    if (c.size() != 7) throw DataError(path.string() + ":" + std::to_string(i + 1) + ": expected 7 fields");
    BicTraceEntry e;
    e.stage = std::stoi(c[0]);
    e.candidate = c[1];
    e.k_y = std::stol(c[2]);
    e.k_x = std::stol(c[3]);
    if (!c[4].empty()) e.bic = parse_double(c[4], path, i + 1);
    e.accepted = c[5] == "1";
    e.note = c[6];
    out.push_back(std::move(e));
  }
  return out;
}

void write_results_csv(const fs::path& path, const std::vector<MetricsReport>& reports) {
  std::ofstream out = open_out(path);
  out << "seed,replicate,method,model,scenario,mspe,cpd,score\n";
  for (const auto& r : reports) {
    out << r.seed << ',' << r.replicate << ',' << quote(r.method) << ',' << quote(r.model) << ','
        << quote(r.scenario) << ',' << format_double(r.mspe) << ',' << (r.cpd ? format_double(*r.cpd) : "") << ','
        << (r.score ? format_double(*r.score) : "") << '\n';
  }
}

std::vector<MetricsReport> read_results_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "seed,replicate,method,model,scenario,mspe,cpd,score")
    throw DataError(path.string() + ": not a results CSV");
  std::vector<MetricsReport> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split_csv(lines[i]);
    if (c.size() != 8) throw DataError(path.string() + ":" + std::to_string(i + 1) + ": expected 8 fields");
    MetricsReport r;
    r.seed = std::stoull(c[0]);
    r.replicate = std::stoi(c[1]);
    r.method = c[2];
    r.model = c[3];
    r.scenario = c[4];
    r.mspe = parse_double(c[5], path, i + 1);
    if (!c[6].empty()) r.cpd = parse_double(c[6], path, i + 1);
    if (!c[7].empty()) r.score = parse_double(c[7], path, i + 1);
    out.push_back(std::move(r));
  }
  return out;
}

Json to_json(const RunManifest& m) {
  return {{"command", m.command},         {"config", m.config},   {"inputs", m.inputs},
          {"outputs", m.outputs},         {"master_seed", m.master_seed},
          {"tool_version", m.tool_version}, {"started", m.started}, {"finished", m.finished}};
}

void write_manifest(const fs::path& dir, const RunManifest& manifest) {
  write_json(dir / "manifest.json", to_json(manifest));
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

Json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace fflqr
