#include "vbsf/serialize.hpp"

#include <cmath>
#include <fstream>

#include "vbsf/errors.hpp"

namespace vbsf {

namespace {

constexpr int kFormatVersion = 1;

void require(bool ok, const std::string& what) {
  if (!ok) throw config_error("snapshot: " + what);
}

json dense_json(const double* data, long rows, long cols) {
  json out;
  out["rows"] = rows;
  out["cols"] = cols;
  json values = json::array();
  for (long i = 0; i < rows; ++i) {
    for (long c = 0; c < cols; ++c) {
      const double v = data[c * rows + i];  // column-major storage, row-major wire
      if (!std::isfinite(v)) throw config_error("snapshot: non-finite value");
      values.push_back(v);
    }
  }
  out["data"] = std::move(values);
  return out;
}

}  // namespace

json matrix_json(const MatrixXd& m) { return dense_json(m.data(), m.rows(), m.cols()); }

MatrixXd matrix_from_json(const json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const auto& data = j.at("data");
  require(rows >= 0 && cols >= 0, "negative matrix shape");
  require(static_cast<long>(data.size()) == rows * cols, "matrix data length mismatch");
  MatrixXd m(rows, cols);
  long idx = 0;
  for (long i = 0; i < rows; ++i) {
    for (long c = 0; c < cols; ++c) m(i, c) = data[idx++].get<double>();
  }
  return m;
}

json vector_json(const VectorXd& v) { return dense_json(v.data(), v.size(), 1); }

VectorXd vector_from_json(const json& j) {
  const MatrixXd m = matrix_from_json(j);
  require(m.cols() <= 1, "expected a column vector");
  return m.col(0);
}

json mask_json(const MaskMatrix& m) {
  json out;
  out["rows"] = m.rows();
  out["cols"] = m.cols();
  json values = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    for (long c = 0; c < m.cols(); ++c) values.push_back(m(i, c) ? 1 : 0);
  }
  out["data"] = std::move(values);
  return out;
}

MaskMatrix mask_from_json(const json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const auto& data = j.at("data");
  require(static_cast<long>(data.size()) == rows * cols, "mask data length mismatch");
  MaskMatrix m(rows, cols);
  long idx = 0;
  for (long i = 0; i < rows; ++i) {
    for (long c = 0; c < cols; ++c) m(i, c) = data[idx++].get<int>() != 0;
  }
  return m;
}

void to_json(json& j, const ModelConfig& cfg) {
  j = json{{"rank", cfg.rank},
           {"window", cfg.window},
           {"report_lag", cfg.report_lag},
           {"horizon", cfg.horizon},
           {"tol", cfg.tol},
           {"max_iters", cfg.max_iters},
           {"variant", cfg.variant == Variant::em ? "em" : "vb"},
           {"robust", cfg.robust},
           {"outlier_update", cfg.outlier_update == OutlierUpdate::fused ? "fused" : "ard"},
           {"freeze_outliers", cfg.freeze_outliers},
           {"prec_min", cfg.prec_min},
           {"prec_max", cfg.prec_max},
           {"seed", cfg.seed},
           {"warm_start_states", cfg.warm_start_states}};
  if (cfg.first_state_mean.size()) j["first_state_mean"] = vector_json(cfg.first_state_mean);
  if (cfg.first_state_precision.size()) {
    j["first_state_precision"] = matrix_json(cfg.first_state_precision);
  }
}

void from_json(const json& j, ModelConfig& cfg) {
  cfg = ModelConfig{};
  cfg.rank = j.value("rank", cfg.rank);
  cfg.window = j.value("window", cfg.window);
  cfg.report_lag = j.value("report_lag", cfg.report_lag);
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.tol = j.value("tol", cfg.tol);
  cfg.max_iters = j.value("max_iters", cfg.max_iters);
  if (j.contains("variant")) {
    const std::string v = j.at("variant").get<std::string>();
    require(v == "vb" || v == "em", "variant must be vb or em");
    cfg.variant = v == "em" ? Variant::em : Variant::vb;
  }
  cfg.robust = j.value("robust", cfg.robust);
  if (j.contains("outlier_update")) {
    const std::string v = j.at("outlier_update").get<std::string>();
    require(v == "ard" || v == "fused", "outlier_update must be ard or fused");
    cfg.outlier_update = v == "fused" ? OutlierUpdate::fused : OutlierUpdate::ard;
  }
  cfg.freeze_outliers = j.value("freeze_outliers", cfg.freeze_outliers);
  cfg.prec_min = j.value("prec_min", cfg.prec_min);
  cfg.prec_max = j.value("prec_max", cfg.prec_max);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.warm_start_states = j.value("warm_start_states", cfg.warm_start_states);
  if (j.contains("first_state_mean")) {
    cfg.first_state_mean = vector_from_json(j.at("first_state_mean"));
  }
  if (j.contains("first_state_precision")) {
    cfg.first_state_precision = matrix_from_json(j.at("first_state_precision"));
  }
}

void to_json(json& j, const ObservationWindow& win) {
  j = json{{"values", matrix_json(win.values())}, {"mask", mask_json(win.mask())}};
}

void from_json(const json& j, ObservationWindow& win) {
  win = ObservationWindow(matrix_from_json(j.at("values")), mask_from_json(j.at("mask")));
}

void to_json(json& j, const RowLoadingPosterior& p) {
  j["means"] = matrix_json(p.means);
  json covs = json::array();
  for (const auto& c : p.covariances) covs.push_back(matrix_json(c));
  j["covariances"] = std::move(covs);
}

void from_json(const json& j, RowLoadingPosterior& p) {
  p.means = matrix_from_json(j.at("means"));
  p.covariances.clear();
  for (const auto& c : j.at("covariances")) p.covariances.push_back(matrix_from_json(c));
  p.validate();
}

void to_json(json& j, const StateTrajectoryPosterior& p) {
  j["means"] = matrix_json(p.means);
  json diag = json::array();
  for (const auto& b : p.diag_blocks) diag.push_back(matrix_json(b));
  j["diag_blocks"] = std::move(diag);
  json super = json::array();
  for (const auto& b : p.super_blocks) super.push_back(matrix_json(b));
  j["super_blocks"] = std::move(super);
  j["log_det_cov"] = p.log_det_cov;
}

void from_json(const json& j, StateTrajectoryPosterior& p) {
  p.means = matrix_from_json(j.at("means"));
  p.diag_blocks.clear();
  for (const auto& b : j.at("diag_blocks")) p.diag_blocks.push_back(matrix_from_json(b));
  p.super_blocks.clear();
  for (const auto& b : j.at("super_blocks")) p.super_blocks.push_back(matrix_from_json(b));
  p.log_det_cov = j.at("log_det_cov").get<double>();
  p.validate();
}

void to_json(json& j, const TransitionPosterior& p) {
  j["row_means"] = matrix_json(p.row_means);
  j["shared_cov"] = matrix_json(p.shared_cov);
}

void from_json(const json& j, TransitionPosterior& p) {
  p.row_means = matrix_from_json(j.at("row_means"));
  p.shared_cov = matrix_from_json(j.at("shared_cov"));
  p.validate();
}

void to_json(json& j, const PrecisionState& p) {
  j = json{{"beta", p.beta}, {"gamma", vector_json(p.gamma)}, {"upsilon", vector_json(p.upsilon)}};
}

void from_json(const json& j, PrecisionState& p) {
  p.beta = j.at("beta").get<double>();
  p.gamma = vector_from_json(j.at("gamma"));
  p.upsilon = vector_from_json(j.at("upsilon"));
  p.validate();
}

void to_json(json& j, const OutlierPosterior& p) {
  json cells = json::array();
  for (const auto& [key, cell] : p.cells) {
    cells.push_back(json{{"row", key.first},
                         {"col", key.second},
                         {"mean", cell.mean},
                         {"var", cell.var}});
  }
  j["cells"] = std::move(cells);
}

void from_json(const json& j, OutlierPosterior& p) {
  p.cells.clear();
  for (const auto& c : j.at("cells")) {
    p.cells.emplace(OutlierPosterior::Key{c.at("row").get<int>(), c.at("col").get<int>()},
                    OutlierPosterior::Cell{c.at("mean").get<double>(), c.at("var").get<double>()});
  }
  p.validate();
}

void to_json(json& j, const FilterState& s) {
  j = json{{"format_version", kFormatVersion},
           {"kind", "vbsf.filter_state"},
           {"config", s.cfg},
           {"window", s.window},
           {"loadings", s.loadings},
           {"states", s.states},
           {"transition", s.transition},
           {"precisions", s.precisions},
           {"outliers", s.outliers},
           {"estimate", matrix_json(s.estimate)},
           {"cycle_count", s.cycle_count},
           {"converged", s.converged},
           {"elbo_trace", s.elbo_trace}};
}

void from_json(const json& j, FilterState& s) {
  require(j.value("format_version", -1) == kFormatVersion, "unsupported format version");
  require(j.value("kind", "") == "vbsf.filter_state", "not a filter state snapshot");
  s.cfg = j.at("config").get<ModelConfig>();
  s.window = j.at("window").get<ObservationWindow>();
  s.loadings = j.at("loadings").get<RowLoadingPosterior>();
  s.states = j.at("states").get<StateTrajectoryPosterior>();
  s.transition = j.at("transition").get<TransitionPosterior>();
  s.precisions = j.at("precisions").get<PrecisionState>();
  s.outliers = j.at("outliers").get<OutlierPosterior>();
  s.estimate = matrix_from_json(j.at("estimate"));
  s.cycle_count = j.at("cycle_count").get<int>();
  s.converged = j.at("converged").get<bool>();
  s.elbo_trace = j.at("elbo_trace").get<std::vector<double>>();
}

void save_state(const std::string& path, const FilterState& s) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open for writing: " + path);
  out << json(s).dump(2) << '\n';
  if (!out) throw config_error("write failed: " + path);
}

FilterState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("malformed snapshot " + path + ": " + e.what());
  }
  return j.get<FilterState>();
}

}  // namespace vbsf
