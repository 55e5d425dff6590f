// Command line front end: synthesize streams, fit windows, impute, forecast,
// inject outliers, and run benchmark experiments. Exit codes: 0 on success,
// 2 for configuration/data problems, 3 for numerical failures.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vbsf/csv.hpp"
#include "vbsf/engine.hpp"
#include "vbsf/errors.hpp"
#include "vbsf/experiment.hpp"
#include "vbsf/metrics.hpp"
#include "vbsf/serialize.hpp"
#include "vbsf/synthetic.hpp"

namespace fs = std::filesystem;
using vbsf::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vbsf::config_error("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw vbsf::config_error("malformed json " + path + ": " + e.what());
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw vbsf::config_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw vbsf::config_error("write failed: " + path.string());
}

// Flags shared by the fitting subcommands; values override --config fields.
struct ModelFlags {
  std::string config_path;
  std::optional<int> rank;
  std::optional<int> window;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  bool robust = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Model configuration JSON");
    cmd->add_option("--rank", rank, "Latent dimension (0 = auto)");
    cmd->add_option("--window", window, "Window parameter h (window holds h+1 columns)");
    cmd->add_option("--tol", tol, "Relative-change stopping tolerance");
    cmd->add_option("--seed", seed, "Initialization seed");
    cmd->add_option("--variant", variant, "Inference variant: vb or em")
        ->check(CLI::IsMember({"vb", "em"}));
    cmd->add_flag("--robust", robust, "Model sparse outliers on observed cells");
  }

  vbsf::ModelConfig resolve() const {
    vbsf::ModelConfig cfg;
    if (!config_path.empty()) cfg = load_json(config_path).get<vbsf::ModelConfig>();
    if (rank) cfg.rank = *rank;
    if (window) cfg.window = *window;
    if (tol) cfg.tol = *tol;
    if (seed) cfg.seed = *seed;
    if (variant) cfg.variant = *variant == "em" ? vbsf::Variant::em : vbsf::Variant::vb;
    if (robust) cfg.robust = true;
    return cfg;
  }
};

int run_synth(const std::string& spec_path, vbsf::SyntheticSpec spec,
              std::optional<std::uint64_t> seed, const std::string& out_dir) {
  if (!spec_path.empty()) spec = load_json(spec_path).get<vbsf::SyntheticSpec>();
  if (seed) spec.seed = *seed;
  const vbsf::SyntheticData data = vbsf::generate_synthetic(spec);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  vbsf::write_csv((dir / "truth.csv").string(), data.complete);
  vbsf::write_csv((dir / "observed.csv").string(), data.observed.values, &data.observed.mask);
  vbsf::write_mask_csv((dir / "mask.csv").string(), data.observed.mask);

  json factors{{"loadings", vbsf::matrix_json(data.loadings)},
               {"transition", vbsf::matrix_json(data.transition)},
               {"states", vbsf::matrix_json(data.states)}};
  write_text(dir / "factors.json", factors.dump(2) + "\n");
  json meta{{"spec", spec}, {"noise_precision", data.noise_precision}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");

  if (spec.outlier_fraction > 0.0) {
    const vbsf::InjectionResult injected =
        vbsf::inject_outliers(data.observed.values, data.observed.mask, spec.outlier_fraction,
                              spec.outlier_scale, spec.seed ^ 0x6f7261636c655f31ULL);
    vbsf::write_csv((dir / "corrupted.csv").string(), injected.values, &data.observed.mask);
    std::string lines = "row,col,original,corrupted\n";
    for (const auto& o : injected.outliers) {
      lines += std::to_string(o.row) + "," + std::to_string(o.col) + "," +
               std::to_string(o.original) + "," + std::to_string(o.corrupted) + "\n";
    }
    write_text(dir / "outliers.csv", lines);
  }
  std::cout << "wrote synthetic stream (" << data.complete.rows() << " x "
            << data.complete.cols() << ") to " << out_dir << "\n";
  return 0;
}

int run_fit(const std::string& input, const std::string& mask_path, int start,
            const ModelFlags& flags, const std::string& out_dir) {
  const vbsf::StreamSource src =
      mask_path.empty() ? vbsf::load_csv(input) : vbsf::load_csv(input, mask_path);
  vbsf::ModelConfig cfg = flags.resolve();
  int len = cfg.window + 1;
  if (!flags.window && flags.config_path.empty()) {
    len = src.cols() - start;  // no explicit window: fit the whole file
    cfg.window = len - 1;
  }
  const vbsf::ObservationWindow win = src.window(start, len);
  const vbsf::FilterState state = vbsf::fit_window(win, cfg);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  vbsf::save_state((dir / "state.json").string(), state);
  json summary{{"cycles", state.cycle_count},
               {"converged", state.converged},
               {"noise_precision", state.precisions.beta},
               {"rank", state.cfg.rank}};
  if (!state.elbo_trace.empty()) summary["elbo"] = state.elbo_trace.back();
  write_text(dir / "fit.json", summary.dump(2) + "\n");
  if (!state.elbo_trace.empty()) {
    std::string lines = "cycle,elbo\n";
    for (size_t k = 0; k < state.elbo_trace.size(); ++k) {
      lines += std::to_string(k + 1) + "," + std::to_string(state.elbo_trace[k]) + "\n";
    }
    write_text(dir / "elbo_trace.csv", lines);
  }
  std::cout << (state.converged ? "converged" : "stopped") << " after " << state.cycle_count
            << " cycles\n";
  return 0;
}

int run_impute(const std::string& state_path, const std::string& out_dir) {
  const vbsf::FilterState state = vbsf::load_state(state_path);
  const vbsf::Imputation result = vbsf::impute(state);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  vbsf::write_csv((dir / "imputed.csv").string(), result.values);
  vbsf::write_mask_csv((dir / "source_tags.csv").string(), result.observed);
  std::cout << "imputed " << result.values.rows() << " x " << result.values.cols()
            << " window to " << out_dir << "\n";
  return 0;
}

int run_forecast(const std::string& state_path, int horizon, const std::string& out_dir) {
  const vbsf::FilterState state = vbsf::load_state(state_path);
  const vbsf::MatrixXd pred = vbsf::forecast(state, horizon);
  fs::create_directories(out_dir);
  vbsf::write_csv((fs::path(out_dir) / "forecast.csv").string(), pred);
  std::cout << "forecast " << horizon << " columns to " << out_dir << "\n";
  return 0;
}

int run_inject(const std::string& input, const std::string& mask_path, double fraction,
               double scale, std::uint64_t seed, const std::string& out_dir) {
  const vbsf::StreamSource src =
      mask_path.empty() ? vbsf::load_csv(input) : vbsf::load_csv(input, mask_path);
  const vbsf::InjectionResult result =
      vbsf::inject_outliers(src.values, src.mask, fraction, scale, seed);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  vbsf::write_csv((dir / "corrupted.csv").string(), result.values, &src.mask);
  vbsf::write_mask_csv((dir / "mask.csv").string(), src.mask);
  std::string lines = "row,col,original,corrupted\n";
  for (const auto& o : result.outliers) {
    lines += std::to_string(o.row) + "," + std::to_string(o.col) + "," +
             std::to_string(o.original) + "," + std::to_string(o.corrupted) + "\n";
  }
  write_text(dir / "outliers.csv", lines);
  std::cout << "corrupted " << result.outliers.size() << " cells\n";
  return 0;
}

int run_bench(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir) {
  vbsf::ExperimentConfig cfg = load_json(config_path).get<vbsf::ExperimentConfig>();
  if (seed) cfg.seeds = {*seed};
  const vbsf::ExperimentResult result = vbsf::run_experiment(cfg);
  vbsf::write_experiment(result, out_dir);
  std::cout << "report written to " << out_dir << " (" << result.seconds_per_column
            << " s/column)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming low-rank subspace filter for partially observed time series"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic stream");
  std::string synth_spec_path, synth_out = "synth_out";
  vbsf::SyntheticSpec spec;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--config,--spec", synth_spec_path, "SyntheticSpec JSON");
  synth->add_option("--rows", spec.rows, "Series count");
  synth->add_option("--length", spec.length, "Column count");
  synth->add_option("--true-rank", spec.true_rank, "Generator rank");
  synth->add_option("--rho", spec.rho, "Transition spectral radius");
  synth->add_option("--noise-precision", spec.noise_precision, "Observation noise precision");
  synth->add_option("--snr-db", spec.snr_db, "Target SNR (overrides --noise-precision)");
  synth->add_option("--observe-fraction", spec.observe_fraction, "Observation probability");
  synth->add_option("--offset", spec.offset, "Constant signal offset");
  synth->add_option("--outlier-fraction", spec.outlier_fraction, "Corrupted cell share");
  synth->add_option("--outlier-scale", spec.outlier_scale, "Corruption scale c");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output directory");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit one window of a CSV stream");
  std::string fit_input, fit_mask, fit_out = "fit_out";
  int fit_start = 0;
  ModelFlags fit_flags;
  fit->add_option("--input", fit_input, "Data CSV (rows = series)")->required();
  fit->add_option("--mask", fit_mask, "0/1 mask sidecar CSV");
  fit->add_option("--start", fit_start, "First column of the window");
  fit->add_option("--out", fit_out, "Output directory");
  fit_flags.attach(fit);

  // impute
  auto* imp = app.add_subcommand("impute", "Impute the fitted window from a snapshot");
  std::string imp_state, imp_out = "impute_out";
  imp->add_option("--state", imp_state, "State snapshot JSON")->required();
  imp->add_option("--out", imp_out, "Output directory");

  // forecast
  auto* fc = app.add_subcommand("forecast", "Forecast ahead from a snapshot");
  std::string fc_state, fc_out = "forecast_out";
  int fc_horizon = 1;
  fc->add_option("--state", fc_state, "State snapshot JSON")->required();
  fc->add_option("--horizon", fc_horizon, "Steps ahead");
  fc->add_option("--out", fc_out, "Output directory");

  // inject-outliers
  auto* inj = app.add_subcommand("inject-outliers", "Corrupt observed cells of a CSV");
  std::string inj_input, inj_mask, inj_out = "inject_out";
  double inj_fraction = 0.05, inj_scale = 0.75;
  std::uint64_t inj_seed = 7;
  inj->add_option("--input", inj_input, "Data CSV")->required();
  inj->add_option("--mask", inj_mask, "0/1 mask sidecar CSV");
  inj->add_option("--fraction", inj_fraction, "Share of observed interior cells to corrupt");
  inj->add_option("--scale", inj_scale, "Corruption scale c");
  inj->add_option("--seed", inj_seed, "Sampling seed");
  inj->add_option("--out", inj_out, "Output directory");

  // bench
  auto* bench = app.add_subcommand("bench", "Run an experiment config");
  std::string bench_config, bench_out = "bench_out";
  std::optional<std::uint64_t> bench_seed;
  bench->add_option("--config", bench_config, "Experiment JSON")->required();
  bench->add_option("--seed", bench_seed, "Run a single seed instead of the configured list");
  bench->add_option("--out", bench_out, "Output directory");

  try {
    app.parse(argc, argv);
    if (*synth) return run_synth(synth_spec_path, spec, synth_seed, synth_out);
    if (*fit) return run_fit(fit_input, fit_mask, fit_start, fit_flags, fit_out);
    if (*imp) return run_impute(imp_state, imp_out);
    if (*fc) return run_forecast(fc_state, fc_horizon, fc_out);
    if (*inj) return run_inject(inj_input, inj_mask, inj_fraction, inj_scale, inj_seed, inj_out);
    if (*bench) return run_bench(bench_config, bench_seed, bench_out);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const vbsf::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
