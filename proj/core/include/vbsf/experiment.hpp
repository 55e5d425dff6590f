#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "vbsf/config.hpp"
#include "vbsf/csv.hpp"
#include "vbsf/engine.hpp"
#include "vbsf/metrics.hpp"
#include "vbsf/synthetic.hpp"

namespace vbsf {

using nlohmann::json;

// Streaming protocol: fit the first cfg.window + 1 columns cold, then slide
// one column at a time with warm starts. The estimate reported for a column
// is the one computed when that column sat at lag cfg.report_lag; columns
// that never reach that lag stay unreported.
struct StreamRun {
  MatrixXd estimates;              // m x span columns, reported estimates
  std::vector<bool> reported;      // per column of the span
  long total_cycles = 0;
  long fits = 0;                   // cold fit + slides
  double seconds = 0.0;            // fitting time only
  FilterState last_state;
};

// Observer runs after every fit with the column index just reported (-1 when
// the lag has not filled yet).
using StreamObserver = std::function<void(const FilterState&, int reported_col)>;

StreamRun run_stream(const StreamSource& src, const ModelConfig& cfg, int begin, int end,
                     const StreamObserver& observer = {});

enum class Task { estimation, prediction, robust };

// One experiment = data source + model + evaluation span + seed sweep.
// Synthetic runs draw fresh data per seed; csv runs vary only the model
// initialization.
struct ExperimentConfig {
  Task task = Task::estimation;

  bool use_synthetic = true;
  SyntheticSpec synthetic;
  std::string data_csv;   // csv mode: observed data
  std::string mask_csv;   // optional sidecar
  std::string truth_csv;  // optional scoring target (defaults to observed data)
  // csv mode: additionally hide cells (keep with this probability, seeded per
  // run seed) to emulate partial observation of a complete recording.
  double csv_observe_fraction = 1.0;
  int slots_per_day = 0;  // csv mode metadata; synthetic mode may set it too

  ModelConfig model;
  int eval_begin = -1;  // default: first slid column (window + 1)
  int eval_end = -1;    // default: end of span

  std::vector<int> horizons;        // prediction task; default {1..model.horizon}
  double inject_fraction = 0.0;     // robust task: share of corrupted cells
  std::vector<double> inject_scales = {0.75};
  std::uint64_t inject_seed = 7;
  bool with_baseline = true;   // estimation: also score the historic mean
  bool with_clean = true;      // robust: also fit the plain model on clean data
  std::vector<std::uint64_t> seeds = {1};

  void validate() const;
};

void to_json(json& j, const ExperimentConfig& cfg);
void from_json(const json& j, ExperimentConfig& cfg);
void to_json(json& j, const SyntheticSpec& spec);
void from_json(const json& j, SyntheticSpec& spec);

struct EstimationSeedResult {
  std::uint64_t seed = 0;
  double mre_overall = 0.0;
  double mae_overall = 0.0;
  double baseline_mre = 0.0;  // NaN when the baseline is off
  long columns_scored = 0;
  long skipped = 0;
  long total_cycles = 0;
};

struct PredictionSeedResult {
  std::uint64_t seed = 0;
  std::vector<double> mre_per_horizon;
  std::vector<double> mae_per_horizon;
};

struct RobustScaleResult {
  double scale = 0.0;
  double mre_plain = 0.0;   // non-robust fit on corrupted data
  double mre_robust = 0.0;  // robust fit on corrupted data
  double mre_clean = 0.0;   // non-robust fit on clean data (NaN when off)
  long injected = 0;
  long detected = 0;        // cells with |outlier mean| > 3 / sqrt(beta)
  long true_positives = 0;  // detected cells that were actually injected
};

struct RobustSeedResult {
  std::uint64_t seed = 0;
  std::vector<RobustScaleResult> per_scale;
};

struct ExperimentResult {
  ExperimentConfig config;  // with defaults resolved
  std::vector<EstimationSeedResult> estimation;
  std::vector<PredictionSeedResult> prediction;
  std::vector<RobustSeedResult> robust;

  MatrixXd imputed;            // first seed reported estimates (empty if none)
  MatrixXd forecast_one_step;  // prediction task, first seed, horizon 1
  std::vector<MreSeries> first_seed_series;  // estimation/robust: one entry;
                                             // prediction: one per horizon
  double seconds_total = 0.0;
  double seconds_per_column = 0.0;

  // Deterministic report (timing lives in timing.json only).
  json report() const;
  std::string series_csv() const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes report.json, mre_series.csv, timing.json and, when present,
// imputed.csv / forecast.csv into out_dir (created if needed).
void write_experiment(const ExperimentResult& result, const std::string& out_dir);

}  // namespace vbsf
