#include "vbsf/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <utility>

#include "vbsf/errors.hpp"
#include "vbsf/rng.hpp"
#include "vbsf/serialize.hpp"

namespace vbsf {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct SeedData {
  StreamSource src;
  MatrixXd truth;
};

SeedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedData out;
  if (cfg.use_synthetic) {
    SyntheticSpec spec = cfg.synthetic;
    spec.seed = seed;
    SyntheticData data = generate_synthetic(spec);
    out.src = std::move(data.observed);
    out.truth = std::move(data.complete);
  } else {
    out.src = cfg.mask_csv.empty() ? load_csv(cfg.data_csv)
                                   : load_csv(cfg.data_csv, cfg.mask_csv);
    out.truth = cfg.truth_csv.empty() ? out.src.values : load_csv(cfg.truth_csv).values;
    if (out.truth.rows() != out.src.rows() || out.truth.cols() != out.src.cols()) {
      throw config_error("experiment: truth shape differs from data");
    }
    if (cfg.csv_observe_fraction < 1.0) {
      Rng rng(mix64(seed ^ 0x517cc1b727220a95ULL));
      for (int c = 0; c < out.src.cols(); ++c) {
        for (int i = 0; i < out.src.rows(); ++i) {
          if (out.src.mask(i, c) && rng.uniform() >= cfg.csv_observe_fraction) {
            out.src.mask(i, c) = false;
            out.src.values(i, c) = 0.0;
          }
        }
      }
    }
  }
  out.src.slots_per_day = cfg.slots_per_day;
  return out;
}

struct ScoredSpan {
  MatrixXd estimates;
  MatrixXd truth;
  std::vector<int> groups;  // empty = one group per column
  std::vector<int> columns;
};

ScoredSpan collect_scored(const MatrixXd& estimates, const std::vector<bool>& reported,
                          const MatrixXd& truth, int eval_begin, int eval_end,
                          int slots_per_day) {
  ScoredSpan out;
  for (int c = eval_begin; c < eval_end; ++c) {
    if (reported[c]) out.columns.push_back(c);
  }
  if (out.columns.empty()) {
    throw config_error("experiment: evaluation span has no reported columns");
  }
  const int n = static_cast<int>(out.columns.size());
  out.estimates.resize(truth.rows(), n);
  out.truth.resize(truth.rows(), n);
  const bool by_slot = slots_per_day >= 2;
  for (int k = 0; k < n; ++k) {
    out.estimates.col(k) = estimates.col(out.columns[k]);
    out.truth.col(k) = truth.col(out.columns[k]);
    if (by_slot) out.groups.push_back(out.columns[k] % slots_per_day);
  }
  return out;
}

}  // namespace

StreamRun run_stream(const StreamSource& src, const ModelConfig& cfg, int begin, int end,
                     const StreamObserver& observer) {
  const int span = src.cols();
  if (end < 0) end = span;
  const int window_len = cfg.window + 1;
  if (begin < 0 || begin + window_len > end || end > span) {
    throw config_error("stream: span too short for the window");
  }
  const int lag = cfg.report_lag;
  const int report_local = window_len - 1 - lag;

  StreamRun run;
  run.estimates = MatrixXd::Zero(src.rows(), span);
  run.reported.assign(span, false);

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  FilterState state = fit_window(src.window(begin, window_len), cfg);
  run.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  run.total_cycles += state.cycle_count;
  run.fits = 1;
  for (int local = 0; local <= report_local; ++local) {
    run.estimates.col(begin + local) = state.estimate.col(local);
    run.reported[begin + local] = true;
  }
  if (observer) observer(state, report_local >= 0 ? begin + report_local : -1);

  for (int next = begin + window_len; next < end; ++next) {
    std::vector<bool> col_mask(src.rows());
    for (int i = 0; i < src.rows(); ++i) col_mask[i] = src.mask(i, next);
    const auto t1 = clock::now();
    state = slide(state, src.values.col(next), col_mask);
    run.seconds += std::chrono::duration<double>(clock::now() - t1).count();
    run.total_cycles += state.cycle_count;
    ++run.fits;
    const int reported_col = next - lag;
    if (report_local >= 0) {
      run.estimates.col(reported_col) = state.estimate.col(report_local);
      run.reported[reported_col] = true;
    }
    if (observer) observer(state, report_local >= 0 ? reported_col : -1);
  }
  run.last_state = std::move(state);
  return run;
}

void ExperimentConfig::validate() const {
  if (use_synthetic) {
    synthetic.validate();
  } else if (data_csv.empty()) {
    throw config_error("experiment: csv mode needs a data path");
  }
  if (seeds.empty()) throw config_error("experiment: need at least one seed");
  if (inject_fraction < 0.0 || inject_fraction > 1.0) {
    throw config_error("experiment: inject fraction outside [0, 1]");
  }
  if (task == Task::robust && inject_scales.empty()) {
    throw config_error("experiment: robust task needs at least one scale");
  }
  for (int h : horizons) {
    if (h < 1) throw config_error("experiment: horizons must be >= 1");
  }
  if (!(csv_observe_fraction > 0.0) || csv_observe_fraction > 1.0) {
    throw config_error("experiment: observe fraction outside (0, 1]");
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg_in) {
  cfg_in.validate();
  ExperimentConfig cfg = cfg_in;
  if (cfg.task == Task::prediction && cfg.horizons.empty()) {
    for (int h = 1; h <= cfg.model.horizon; ++h) cfg.horizons.push_back(h);
  }
  for (int h : cfg.horizons) cfg.model.horizon = std::max(cfg.model.horizon, h);

  ExperimentResult result;
  long total_fits = 0;

  bool first_seed = true;
  for (const std::uint64_t seed : cfg.seeds) {
    SeedData data = prepare_data(cfg, seed);
    const int span = data.src.cols();
    ModelConfig model = cfg.model;
    model.seed = mix64(seed);
    const int window_len = model.window + 1;
    int eval_begin = cfg.eval_begin >= 0 ? cfg.eval_begin : window_len;
    int eval_end = cfg.eval_end >= 0 ? cfg.eval_end : span;
    if (eval_begin >= eval_end || eval_end > span) {
      throw config_error("experiment: evaluation span empty or outside the data");
    }

    if (cfg.task == Task::estimation) {
      const StreamRun run = run_stream(data.src, model, 0, span);
      const ScoredSpan scored = collect_scored(run.estimates, run.reported, data.truth,
                                               eval_begin, eval_end, cfg.slots_per_day);
      const MreSeries series = mre(scored.estimates, scored.truth, scored.groups);
      const MreSeries abs_series = mae(scored.estimates, scored.truth, scored.groups);
      EstimationSeedResult r;
      r.seed = seed;
      r.mre_overall = series.overall;
      r.mae_overall = abs_series.overall;
      r.baseline_mre = std::numeric_limits<double>::quiet_NaN();
      if (cfg.with_baseline) {
        const MatrixXd base =
            historic_mean_baseline(data.src.values, data.src.mask, cfg.slots_per_day,
                                   eval_begin, eval_end);
        MatrixXd base_cols(base.rows(), scored.columns.size());
        for (size_t k = 0; k < scored.columns.size(); ++k) {
          base_cols.col(k) = base.col(scored.columns[k] - eval_begin);
        }
        r.baseline_mre = mre(base_cols, scored.truth, scored.groups).overall;
      }
      long scored_total = 0;
      for (long n : series.columns_scored) scored_total += n;
      r.columns_scored = scored_total;
      r.skipped = series.skipped;
      r.total_cycles = run.total_cycles;
      result.estimation.push_back(r);
      result.seconds_total += run.seconds;
      total_fits += run.fits;
      if (first_seed) {
        result.imputed = run.estimates;
        result.first_seed_series = {series};
      }
    } else if (cfg.task == Task::prediction) {
      const int max_h = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
      std::vector<MatrixXd> pred(max_h, MatrixXd::Zero(data.src.rows(), span));
      std::vector<std::vector<bool>> pred_set(max_h, std::vector<bool>(span, false));
      const int lag = model.report_lag;
      const StreamRun run = run_stream(
          data.src, model, 0, span, [&](const FilterState& state, int reported_col) {
            if (reported_col < 0) return;
            const int window_end = reported_col + lag;
            const MatrixXd f = forecast(state, max_h);
            for (int k = 1; k <= max_h; ++k) {
              const int col = window_end + k;
              if (col >= span) continue;
              pred[k - 1].col(col) = f.col(k - 1);
              pred_set[k - 1][col] = true;
            }
          });
      PredictionSeedResult r;
      r.seed = seed;
      for (const int h : cfg.horizons) {
        const ScoredSpan scored = collect_scored(pred[h - 1], pred_set[h - 1], data.truth,
                                                 eval_begin, eval_end, cfg.slots_per_day);
        const MreSeries series = mre(scored.estimates, scored.truth, scored.groups);
        r.mre_per_horizon.push_back(series.overall);
        r.mae_per_horizon.push_back(mae(scored.estimates, scored.truth, scored.groups).overall);
        if (first_seed) result.first_seed_series.push_back(series);
      }
      result.prediction.push_back(r);
      result.seconds_total += run.seconds;
      total_fits += run.fits;
      if (first_seed) result.forecast_one_step = pred[0];
    } else {  // robust
      RobustSeedResult r;
      r.seed = seed;
      double clean_mre = std::numeric_limits<double>::quiet_NaN();
      if (cfg.with_clean) {
        ModelConfig clean_model = model;
        clean_model.robust = false;
        const StreamRun run = run_stream(data.src, clean_model, 0, span);
        const ScoredSpan scored = collect_scored(run.estimates, run.reported, data.truth,
                                                 eval_begin, eval_end, cfg.slots_per_day);
        clean_mre = mre(scored.estimates, scored.truth, scored.groups).overall;
        result.seconds_total += run.seconds;
        total_fits += run.fits;
      }
      for (const double scale : cfg.inject_scales) {
        const InjectionResult injected =
            inject_outliers(data.src.values, data.src.mask, cfg.inject_fraction, scale,
                            mix64(cfg.inject_seed ^ mix64(seed)));
        StreamSource corrupted = data.src;
        corrupted.values = injected.values;

        ModelConfig plain_model = model;
        plain_model.robust = false;
        const StreamRun plain = run_stream(corrupted, plain_model, 0, span);

        ModelConfig robust_model = model;
        robust_model.robust = true;
        std::set<std::pair<int, int>> detected;
        const int report_local = robust_model.window - robust_model.report_lag;
        const StreamRun rob = run_stream(
            corrupted, robust_model, 0, span, [&](const FilterState& state, int reported_col) {
              if (reported_col < 0) return;
              const double threshold = 3.0 / std::sqrt(state.precisions.beta);
              for (int i : state.window.rows_observed_at(report_local)) {
                if (std::abs(state.outliers.mean_at(i, report_local)) > threshold) {
                  detected.insert({i, reported_col});
                }
              }
            });

        RobustScaleResult sr;
        sr.scale = scale;
        sr.mre_clean = clean_mre;
        {
          const ScoredSpan scored = collect_scored(plain.estimates, plain.reported, data.truth,
                                                   eval_begin, eval_end, cfg.slots_per_day);
          sr.mre_plain = mre(scored.estimates, scored.truth, scored.groups).overall;
        }
        const ScoredSpan scored = collect_scored(rob.estimates, rob.reported, data.truth,
                                                 eval_begin, eval_end, cfg.slots_per_day);
        sr.mre_robust = mre(scored.estimates, scored.truth, scored.groups).overall;

        std::set<std::pair<int, int>> injected_cells;
        for (const auto& o : injected.outliers) {
          if (o.col >= eval_begin && o.col < eval_end) injected_cells.insert({o.row, o.col});
        }
        sr.injected = static_cast<long>(injected_cells.size());
        for (const auto& cell : detected) {
          if (cell.second < eval_begin || cell.second >= eval_end) continue;
          ++sr.detected;
          if (injected_cells.count(cell)) ++sr.true_positives;
        }
        r.per_scale.push_back(sr);
        result.seconds_total += plain.seconds + rob.seconds;
        total_fits += plain.fits + rob.fits;
        if (first_seed && result.first_seed_series.empty()) {
          result.first_seed_series = {mre(scored.estimates, scored.truth, scored.groups)};
          result.imputed = rob.estimates;
        }
      }
      result.robust.push_back(r);
    }
    first_seed = false;
  }

  result.config = cfg;
  result.seconds_per_column = total_fits > 0 ? result.seconds_total / total_fits : 0.0;
  return result;
}

json ExperimentResult::report() const {
  json j;
  j["format_version"] = 1;
  j["kind"] = "vbsf.experiment_report";
  j["task"] = config.task == Task::estimation
                  ? "estimation"
                  : (config.task == Task::prediction ? "prediction" : "robust");
  j["config"] = config;

  if (!estimation.empty()) {
    json per = json::array();
    std::vector<double> mres, maes, bases;
    for (const auto& r : estimation) {
      json e{{"seed", r.seed},
             {"mre", r.mre_overall},
             {"mae", r.mae_overall},
             {"columns_scored", r.columns_scored},
             {"skipped", r.skipped},
             {"total_cycles", r.total_cycles}};
      if (std::isfinite(r.baseline_mre)) {
        e["baseline_mre"] = r.baseline_mre;
        bases.push_back(r.baseline_mre);
      }
      per.push_back(std::move(e));
      mres.push_back(r.mre_overall);
      maes.push_back(r.mae_overall);
    }
    j["per_seed"] = std::move(per);
    json agg{{"median_mre", median(mres)}, {"median_mae", median(maes)}};
    if (!bases.empty()) agg["median_baseline_mre"] = median(bases);
    j["aggregate"] = std::move(agg);
  }

  if (!prediction.empty()) {
    json per = json::array();
    for (const auto& r : prediction) {
      per.push_back(json{{"seed", r.seed},
                         {"horizons", config.horizons},
                         {"mre", r.mre_per_horizon},
                         {"mae", r.mae_per_horizon}});
    }
    j["per_seed"] = std::move(per);
    json agg = json::array();
    for (size_t k = 0; k < config.horizons.size(); ++k) {
      std::vector<double> mres, maes;
      for (const auto& r : prediction) {
        mres.push_back(r.mre_per_horizon[k]);
        maes.push_back(r.mae_per_horizon[k]);
      }
      agg.push_back(json{{"horizon", config.horizons[k]},
                         {"median_mre", median(mres)},
                         {"median_mae", median(maes)}});
    }
    j["aggregate"] = std::move(agg);
  }

  if (!robust.empty()) {
    json per = json::array();
    for (const auto& r : robust) {
      json scales = json::array();
      for (const auto& s : r.per_scale) {
        json e{{"scale", s.scale},
               {"mre_plain", s.mre_plain},
               {"mre_robust", s.mre_robust},
               {"injected", s.injected},
               {"detected", s.detected},
               {"true_positives", s.true_positives}};
        if (std::isfinite(s.mre_clean)) e["mre_clean"] = s.mre_clean;
        scales.push_back(std::move(e));
      }
      per.push_back(json{{"seed", r.seed}, {"scales", std::move(scales)}});
    }
    j["per_seed"] = std::move(per);
    json agg = json::array();
    for (size_t k = 0; k < config.inject_scales.size(); ++k) {
      std::vector<double> plain, rob, clean;
      long injected = 0, detected = 0, tp = 0;
      for (const auto& r : robust) {
        plain.push_back(r.per_scale[k].mre_plain);
        rob.push_back(r.per_scale[k].mre_robust);
        if (std::isfinite(r.per_scale[k].mre_clean)) clean.push_back(r.per_scale[k].mre_clean);
        injected += r.per_scale[k].injected;
        detected += r.per_scale[k].detected;
        tp += r.per_scale[k].true_positives;
      }
      json e{{"scale", config.inject_scales[k]},
             {"median_mre_plain", median(plain)},
             {"median_mre_robust", median(rob)},
             {"injected", injected},
             {"detected", detected},
             {"true_positives", tp}};
      if (!clean.empty()) e["median_mre_clean"] = median(clean);
      agg.push_back(std::move(e));
    }
    j["aggregate"] = std::move(agg);
  }
  return j;
}

std::string ExperimentResult::series_csv() const {
  std::string out;
  if (config.task == Task::prediction) {
    out = "horizon,group,mre,columns\n";
    for (size_t k = 0; k < first_seed_series.size(); ++k) {
      const MreSeries& s = first_seed_series[k];
      for (int g = 0; g < s.groups(); ++g) {
        if (s.columns_scored[g] == 0) continue;
        out += std::to_string(config.horizons[k]) + "," + std::to_string(g) + "," +
               std::to_string(s.per_group(g)) + "," + std::to_string(s.columns_scored[g]) + "\n";
      }
    }
    return out;
  }
  out = "group,mre,columns\n";
  if (!first_seed_series.empty()) {
    const MreSeries& s = first_seed_series.front();
    for (int g = 0; g < s.groups(); ++g) {
      if (s.columns_scored[g] == 0) continue;
      out += std::to_string(g) + "," + std::to_string(s.per_group(g)) + "," +
             std::to_string(s.columns_scored[g]) + "\n";
    }
  }
  return out;
}

void write_experiment(const ExperimentResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto write_text = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) throw config_error("cannot open for writing: " + name);
    out << text;
    if (!out) throw config_error("write failed: " + name);
  };
  write_text("report.json", result.report().dump(2) + "\n");
  write_text("mre_series.csv", result.series_csv());
  json timing{{"seconds_total", result.seconds_total},
              {"seconds_per_column", result.seconds_per_column}};
  write_text("timing.json", timing.dump(2) + "\n");
  if (result.imputed.size()) {
    write_csv((fs::path(out_dir) / "imputed.csv").string(), result.imputed);
  }
  if (result.forecast_one_step.size()) {
    write_csv((fs::path(out_dir) / "forecast.csv").string(), result.forecast_one_step);
  }
}

void to_json(json& j, const SyntheticSpec& spec) {
  j = json{{"rows", spec.rows},
           {"length", spec.length},
           {"true_rank", spec.true_rank},
           {"rho", spec.rho},
           {"noise_precision", spec.noise_precision},
           {"observe_fraction", spec.observe_fraction},
           {"offset", spec.offset},
           {"orthogonal_transition", spec.orthogonal_transition},
           {"outlier_fraction", spec.outlier_fraction},
           {"outlier_scale", spec.outlier_scale},
           {"seed", spec.seed}};
  if (std::isfinite(spec.snr_db)) j["snr_db"] = spec.snr_db;
}

void from_json(const json& j, SyntheticSpec& spec) {
  spec = SyntheticSpec{};
  spec.rows = j.value("rows", spec.rows);
  spec.length = j.value("length", spec.length);
  spec.true_rank = j.value("true_rank", spec.true_rank);
  spec.rho = j.value("rho", spec.rho);
  spec.noise_precision = j.value("noise_precision", spec.noise_precision);
  spec.snr_db = j.value("snr_db", spec.snr_db);
  spec.observe_fraction = j.value("observe_fraction", spec.observe_fraction);
  spec.offset = j.value("offset", spec.offset);
  spec.orthogonal_transition = j.value("orthogonal_transition", spec.orthogonal_transition);
  spec.outlier_fraction = j.value("outlier_fraction", spec.outlier_fraction);
  spec.outlier_scale = j.value("outlier_scale", spec.outlier_scale);
  spec.seed = j.value("seed", spec.seed);
}

void to_json(json& j, const ExperimentConfig& cfg) {
  j["task"] = cfg.task == Task::estimation
                  ? "estimation"
                  : (cfg.task == Task::prediction ? "prediction" : "robust");
  if (cfg.use_synthetic) {
    j["synthetic"] = cfg.synthetic;
  } else {
    json csv{{"data", cfg.data_csv}};
    if (!cfg.mask_csv.empty()) csv["mask"] = cfg.mask_csv;
    if (!cfg.truth_csv.empty()) csv["truth"] = cfg.truth_csv;
    csv["observe_fraction"] = cfg.csv_observe_fraction;
    j["csv"] = std::move(csv);
  }
  j["slots_per_day"] = cfg.slots_per_day;
  j["model"] = cfg.model;
  j["eval_begin"] = cfg.eval_begin;
  j["eval_end"] = cfg.eval_end;
  if (!cfg.horizons.empty()) j["horizons"] = cfg.horizons;
  if (cfg.task == Task::robust) {
    j["inject"] = json{{"fraction", cfg.inject_fraction},
                       {"scales", cfg.inject_scales},
                       {"seed", cfg.inject_seed}};
    j["with_clean"] = cfg.with_clean;
  }
  j["with_baseline"] = cfg.with_baseline;
  j["seeds"] = cfg.seeds;
}

void from_json(const json& j, ExperimentConfig& cfg) {
  cfg = ExperimentConfig{};
  if (j.contains("task")) {
    const std::string t = j.at("task").get<std::string>();
    if (t == "estimation") {
      cfg.task = Task::estimation;
    } else if (t == "prediction") {
      cfg.task = Task::prediction;
    } else if (t == "robust") {
      cfg.task = Task::robust;
    } else {
      throw config_error("experiment: unknown task '" + t + "'");
    }
  }
  if (j.contains("csv")) {
    cfg.use_synthetic = false;
    const json& csv = j.at("csv");
    cfg.data_csv = csv.at("data").get<std::string>();
    cfg.mask_csv = csv.value("mask", "");
    cfg.truth_csv = csv.value("truth", "");
    cfg.csv_observe_fraction = csv.value("observe_fraction", 1.0);
  } else if (j.contains("synthetic")) {
    cfg.use_synthetic = true;
    cfg.synthetic = j.at("synthetic").get<SyntheticSpec>();
  }
  cfg.slots_per_day = j.value("slots_per_day", 0);
  if (j.contains("model")) cfg.model = j.at("model").get<ModelConfig>();
  cfg.eval_begin = j.value("eval_begin", -1);
  cfg.eval_end = j.value("eval_end", -1);
  if (j.contains("horizons")) cfg.horizons = j.at("horizons").get<std::vector<int>>();
  if (j.contains("inject")) {
    const json& inj = j.at("inject");
    cfg.inject_fraction = inj.value("fraction", 0.0);
    if (inj.contains("scales")) cfg.inject_scales = inj.at("scales").get<std::vector<double>>();
    cfg.inject_seed = inj.value("seed", cfg.inject_seed);
  }
  cfg.with_baseline = j.value("with_baseline", true);
  cfg.with_clean = j.value("with_clean", true);
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } else if (j.contains("seed_count")) {
    const auto base = j.value<std::uint64_t>("seed_base", 1);
    cfg.seeds.clear();
    for (std::uint64_t s = 0; s < j.at("seed_count").get<std::uint64_t>(); ++s) {
      cfg.seeds.push_back(base + s);
    }
  }
}

}  // namespace vbsf
