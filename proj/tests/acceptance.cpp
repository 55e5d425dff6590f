// Acceptance checks for the streaming subspace filter. Each criterion prints
// exactly one PASS/FAIL line (SKIP for the optional data-backed check) with
// its pinned tolerance and the measured value; the process exits nonzero when
// any non-optional criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "vbsf/csv.hpp"
#include "vbsf/engine.hpp"
#include "vbsf/experiment.hpp"
#include "vbsf/rng.hpp"
#include "vbsf/state_system.hpp"
#include "vbsf/synthetic.hpp"
#include "vbsf/updates.hpp"

using namespace vbsf;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(const clock_type::time_point& t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

StateSystem random_spd_system(int r, int t, std::uint64_t seed) {
  Rng rng(seed);
  StateSystem sys;
  sys.off = MatrixXd::NullaryExpr(
      r, r, [&](Eigen::Index, Eigen::Index) { return 0.4 * rng.normal(); });
  const double shift = 2.5 * sys.off.norm() + 0.5;
  for (int tau = 0; tau < t; ++tau) {
    MatrixXd root = MatrixXd::NullaryExpr(
        r, r, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
    sys.diag.push_back(root * root.transpose() + shift * MatrixXd::Identity(r, r));
  }
  sys.rhs = MatrixXd::NullaryExpr(
      r, t, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  return sys;
}

double rel_err(const MatrixXd& got, const MatrixXd& want) {
  return (got - want).norm() / (want.norm() + 1e-300);
}

bool report(int index, const char* name, bool pass, const std::string& detail) {
  std::printf("%s  %d  %-32s %s\n", pass ? "PASS" : "FAIL", index, name, detail.c_str());
  std::fflush(stdout);
  return pass;
}

// 1. The streaming solver agrees with the dense factorization on means and
//    both covariance block families to 1e-8 relative error, within 5 seconds.
bool criterion_solver_oracle() {
  const int ranks[] = {1, 2, 4};
  const int lengths[] = {2, 5, 20};
  const double tol = 1e-8;
  double worst = 0.0;
  const auto t0 = clock_type::now();
  for (int k = 0; k < 100; ++k) {
    const int r = ranks[k % 3];
    const int t = lengths[(k / 3) % 3];
    const StateSystem sys = random_spd_system(r, t, 1000 + k);
    const StateTrajectoryPosterior fast = solve_forward_backward(sys);
    const StateTrajectoryPosterior dense = solve_dense(sys);
    worst = std::max(worst, rel_err(fast.means, dense.means));
    for (int tau = 0; tau < t; ++tau) {
      worst = std::max(worst, rel_err(fast.diag_blocks[tau], dense.diag_blocks[tau]));
    }
    for (int tau = 0; tau + 1 < t; ++tau) {
      worst = std::max(worst, rel_err(fast.super_blocks[tau], dense.super_blocks[tau]));
    }
  }
  const double elapsed = seconds_since(t0);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "100 systems, worst relative error %.2e (tol %.0e), %.2f s (limit 5 s)", worst,
                tol, elapsed);
  return report(1, "solver-oracle-equivalence", worst <= tol && elapsed < 5.0, detail);
}

// 2. Solver runtime grows linearly in t: time(t=2000) / time(t=200) <= 15.
bool criterion_linear_scaling() {
  const int r = 4;
  const auto timed_solve = [&](int t) {
    const StateSystem sys = random_spd_system(r, t, 77);
    std::vector<double> times;
    for (int rep = 0; rep < 15; ++rep) {
      const auto t0 = clock_type::now();
      const StateTrajectoryPosterior post = solve_forward_backward(sys);
      times.push_back(seconds_since(t0) + 0.0 * post.log_det_cov);
    }
    return median(times);
  };
  const double small = timed_solve(200);
  const double large = timed_solve(2000);
  const double ratio = large / small;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "time(t=2000)/time(t=200) = %.2f (limit 15), %.3f ms vs %.3f ms", ratio,
                large * 1e3, small * 1e3);
  return report(2, "linear-time-scaling", ratio <= 15.0, detail);
}

// 3. Shrinkage recovers the true rank: with rank-3 data fitted at rank 8, the
//    3rd/4th largest loading-column energies differ by a factor > 10 in at
//    least 90 of 100 seeds.
bool criterion_rank_recovery() {
  int hits = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (int seed = 1; seed <= 100; ++seed) {
    SyntheticSpec spec;
    spec.rows = 50;
    spec.length = 200;
    spec.true_rank = 3;
    spec.observe_fraction = 1.0;
    spec.snr_db = 20.0;
    spec.seed = static_cast<std::uint64_t>(seed);
    const SyntheticData data = generate_synthetic(spec);

    // Stream across the span: the shrinkage precisions carry over the warm
    // slides, which prunes spare columns far faster than one long batch fit.
    ModelConfig cfg;
    cfg.rank = 8;
    cfg.window = 24;
    cfg.report_lag = 0;
    cfg.max_iters = 10;
    cfg.tol = 1e-6;
    cfg.seed = static_cast<std::uint64_t>(seed) + 1000;
    const StreamRun run = run_stream(data.observed, cfg, 0, spec.length);
    const FilterState& state = run.last_state;

    std::vector<double> energy(8, 0.0);
    for (int k = 0; k < 8; ++k) {
      for (int i = 0; i < 50; ++i) {
        energy[k] += state.loadings.means(i, k) * state.loadings.means(i, k) +
                     state.loadings.covariances[i](k, k);
      }
    }
    std::sort(energy.begin(), energy.end(), std::greater<>());
    const double ratio = energy[2] / energy[3];
    worst_ratio = std::min(worst_ratio, ratio);
    if (ratio > 10.0) ++hits;
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "3rd/4th loading-column energy ratio > 10 in %d of 100 seeds (need >= 90), "
                "worst ratio %.3g",
                hits, worst_ratio);
  return report(3, "shrinkage-rank-recovery", hits >= 90, detail);
}

// 4. Streaming imputation beats the historic-mean baseline at half-observed
//    data: median MRE over 20 seeds <= 0.6 * median baseline MRE.
bool criterion_imputation_beats_baseline() {
  ExperimentConfig cfg;
  cfg.task = Task::estimation;
  cfg.synthetic.rows = 24;
  cfg.synthetic.length = 120;
  cfg.synthetic.true_rank = 3;
  cfg.synthetic.rho = 0.95;
  cfg.synthetic.observe_fraction = 0.5;
  cfg.synthetic.offset = 5.0;
  cfg.synthetic.snr_db = 20.0;
  cfg.slots_per_day = 6;
  cfg.model.rank = 4;
  cfg.model.window = 24;
  cfg.model.report_lag = 1;
  cfg.model.max_iters = 40;
  cfg.model.tol = 1e-5;
  cfg.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);

  const ExperimentResult result = run_experiment(cfg);
  std::vector<double> mres, bases;
  for (const auto& r : result.estimation) {
    mres.push_back(r.mre_overall);
    bases.push_back(r.baseline_mre);
  }
  const double med = median(mres), base = median(bases);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "median MRE %.4f vs baseline %.4f, ratio %.3f (need <= 0.6)", med, base,
                med / base);
  return report(4, "imputation-beats-baseline", med <= 0.6 * base, detail);
}

// 5. Robustness ordering at scale 0.75, 5% corrupted cells: the robust fit
//    beats the plain fit on corrupted data in >= 16 of 20 seeds, and its
//    median error stays above the clean fit's (clean <= robust <= plain).
bool criterion_robust_ordering() {
  ExperimentConfig cfg;
  cfg.task = Task::robust;
  cfg.synthetic.rows = 48;
  cfg.synthetic.length = 160;
  cfg.synthetic.true_rank = 3;
  cfg.synthetic.rho = 0.95;
  cfg.synthetic.observe_fraction = 0.9;
  cfg.synthetic.offset = 3.0;
  cfg.synthetic.snr_db = 20.0;
  cfg.model.rank = 4;
  cfg.model.window = 24;
  cfg.model.report_lag = 0;
  cfg.model.max_iters = 40;
  cfg.model.tol = 1e-5;
  cfg.inject_fraction = 0.05;
  cfg.inject_scales = {0.75};
  cfg.with_clean = true;
  cfg.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);

  const ExperimentResult result = run_experiment(cfg);
  int wins = 0;
  std::vector<double> robust_mres, clean_mres;
  for (const auto& r : result.robust) {
    const RobustScaleResult& s = r.per_scale[0];
    if (s.mre_robust < s.mre_plain) ++wins;
    robust_mres.push_back(s.mre_robust);
    clean_mres.push_back(s.mre_clean);
  }
  const double med_robust = median(robust_mres), med_clean = median(clean_mres);
  const bool pass = wins >= 16 && med_robust >= med_clean;
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "robust < plain in %d of 20 seeds (need >= 16); median robust %.4f >= clean %.4f",
                wins, med_robust, med_clean);
  return report(5, "robustness-ordering", pass, detail);
}

// 6. The evidence bound is non-decreasing across update cycles within 1e-6
//    relative slack on 10 seeded instances (m=20, t=30, model rank 4).
bool criterion_elbo_monotone() {
  int clean_runs = 0;
  double worst_drop = 0.0;
  for (int seed = 1; seed <= 10; ++seed) {
    SyntheticSpec spec;
    spec.rows = 20;
    spec.length = 30;
    spec.true_rank = 2;
    spec.observe_fraction = 0.8;
    spec.offset = 1.0;
    spec.snr_db = 20.0;
    spec.seed = static_cast<std::uint64_t>(seed);
    const SyntheticData data = generate_synthetic(spec);

    ModelConfig cfg;
    cfg.rank = 4;
    cfg.window = 16;
    cfg.max_iters = 80;
    cfg.tol = 1e-9;
    cfg.seed = static_cast<std::uint64_t>(seed) + 500;
    const FilterState state = fit_window(data.observed.window(0, 30), cfg);

    bool monotone = true;
    for (size_t k = 1; k < state.elbo_trace.size(); ++k) {
      const double slack = 1e-6 * (1.0 + std::abs(state.elbo_trace[k - 1]));
      const double drop = state.elbo_trace[k - 1] - state.elbo_trace[k];
      worst_drop = std::max(worst_drop, drop);
      if (drop > slack) monotone = false;
    }
    if (monotone) ++clean_runs;
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "monotone within 1e-6 relative slack in %d of 10 runs, worst drop %.2e",
                clean_runs, worst_drop);
  return report(6, "evidence-bound-monotonicity", clean_runs == 10, detail);
}

// 7. Exact reductions and symmetries: a zero outlier field reproduces the
//    plain fit bit for bit; relabeling latent dimensions leaves imputation
//    and forecasts unchanged to 1e-12; fits are deterministic; the em and vb
//    precision numerators differ by exactly (n - 2) / n on the first cycle.
bool criterion_exact_reductions() {
  std::string failure;

  // Shared fixture.
  Rng rng(4242);
  const int m = 8, t = 12;
  MatrixXd values =
      MatrixXd::NullaryExpr(m, t, [&](Eigen::Index, Eigen::Index) { return rng.normal() + 1.0; });
  MaskMatrix mask(m, t);
  for (int c = 0; c < t; ++c) {
    for (int i = 0; i < m; ++i) mask(i, c) = rng.uniform() < 0.8;
    mask(0, c) = true;
  }
  const ObservationWindow win(values, mask);

  // (a) zero outlier field == plain path, bit for bit, across full cycles.
  {
    ModelConfig cfg;
    cfg.rank = 3;
    cfg.max_iters = 8;
    cfg.tol = 1e-300;
    const FilterState plain = fit_window(win, cfg);
    OutlierPosterior zero;
    for (int tau = 0; tau < t; ++tau) {
      for (int i : win.rows_observed_at(tau)) {
        zero.cells.emplace(OutlierPosterior::Key{i, tau}, OutlierPosterior::Cell{0.0, 0.0});
      }
    }
    FilterState s = init_state(win, cfg);
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
      if ((iter - 1) % 2 == 0) {
        const StateSystem sys = assemble_state_system(win, s.loadings, s.transition,
                                                      s.precisions.beta, &zero, s.cfg);
        s.states = solve_forward_backward(sys);
        s.precisions.upsilon = update_ard_precisions(s.loadings, s.transition, s.cfg).upsilon;
        s.transition = update_transition(s.states, s.precisions.upsilon);
      } else {
        s.loadings = update_loadings(win, s.states, s.precisions.beta, s.precisions.gamma, &zero);
        s.precisions.gamma = update_ard_precisions(s.loadings, s.transition, s.cfg).gamma;
      }
      s.estimate = s.loadings.means * s.states.means;
      s.precisions.beta = update_noise_precision(win, s.loadings, s.states, &zero, s.cfg);
    }
    const bool same = (plain.estimate - s.estimate).cwiseAbs().maxCoeff() == 0.0 &&
                      plain.precisions.beta == s.precisions.beta &&
                      (plain.states.means - s.states.means).cwiseAbs().maxCoeff() == 0.0 &&
                      (plain.loadings.means - s.loadings.means).cwiseAbs().maxCoeff() == 0.0;
    if (!same) failure = "zero outlier field diverged from the plain fit";
  }

  // (b) latent relabeling leaves impute and forecast unchanged to 1e-12.
  if (failure.empty()) {
    ModelConfig cfg;
    cfg.rank = 3;
    cfg.max_iters = 10;
    cfg.horizon = 6;
    const FilterState state = fit_window(win, cfg);
    const std::vector<int> perm = {2, 0, 1};
    FilterState relabeled = state;
    for (int k = 0; k < 3; ++k) {
      relabeled.loadings.means.col(k) = state.loadings.means.col(perm[k]);
      relabeled.states.means.row(k) = state.states.means.row(perm[k]);
      relabeled.precisions.gamma(k) = state.precisions.gamma(perm[k]);
      relabeled.precisions.upsilon(k) = state.precisions.upsilon(perm[k]);
    }
    const auto permute_square = [&](const MatrixXd& a) {
      MatrixXd out(3, 3);
      for (int x = 0; x < 3; ++x) {
        for (int y = 0; y < 3; ++y) out(x, y) = a(perm[x], perm[y]);
      }
      return out;
    };
    for (int i = 0; i < m; ++i) {
      relabeled.loadings.covariances[i] = permute_square(state.loadings.covariances[i]);
    }
    for (int tau = 0; tau < t; ++tau) {
      relabeled.states.diag_blocks[tau] = permute_square(state.states.diag_blocks[tau]);
    }
    for (int tau = 0; tau + 1 < t; ++tau) {
      relabeled.states.super_blocks[tau] = permute_square(state.states.super_blocks[tau]);
    }
    relabeled.transition.row_means = permute_square(state.transition.row_means);
    relabeled.transition.shared_cov = permute_square(state.transition.shared_cov);
    relabeled.estimate = relabeled.loadings.means * relabeled.states.means;

    const double scale = state.estimate.cwiseAbs().maxCoeff() + 1.0;
    const double imp_diff =
        (impute(relabeled).values - impute(state).values).cwiseAbs().maxCoeff();
    const double fc_diff =
        (forecast(relabeled, 6) - forecast(state, 6)).cwiseAbs().maxCoeff();
    if (imp_diff > 1e-12 * scale || fc_diff > 1e-12 * scale) {
      failure = "latent relabeling moved impute/forecast by more than 1e-12";
    }
  }

  // (c) determinism under a fixed seed.
  if (failure.empty()) {
    ModelConfig cfg;
    cfg.rank = 3;
    cfg.max_iters = 12;
    cfg.robust = true;
    const FilterState a = fit_window(win, cfg);
    const FilterState b = fit_window(win, cfg);
    if ((a.estimate - b.estimate).cwiseAbs().maxCoeff() != 0.0 ||
        a.precisions.beta != b.precisions.beta) {
      failure = "repeated fits with one seed disagreed";
    }
  }

  // (d) em/vb numerators: (n - 2) / n exactly on the first cycle.
  if (failure.empty()) {
    ModelConfig cfg;
    cfg.rank = 4;
    cfg.max_iters = 1;
    cfg.tol = 1e-300;
    const FilterState vb = fit_window(win, cfg);
    cfg.variant = Variant::em;
    const FilterState em = fit_window(win, cfg);
    const double s_sum = residual_second_moment_sum(win, vb.loadings, vb.states, nullptr);
    const double omega = static_cast<double>(win.observed_count());
    bool exact = (vb.states.means - em.states.means).cwiseAbs().maxCoeff() == 0.0 &&
                 vb.precisions.beta == clamped_precision(omega, s_sum, cfg) &&
                 em.precisions.beta == clamped_precision(omega - 2.0, s_sum, cfg);
    for (int k = 0; k < 4; ++k) {
      exact = exact && vb.precisions.upsilon(k) == 1.0 && em.precisions.upsilon(k) == 0.5;
    }
    if (!exact) failure = "em/vb first-cycle numerators were not exact";
  }

  const std::string detail =
      failure.empty()
          ? "zero-field bitwise, latent relabeling <= 1e-12, determinism, em/vb numerators exact"
          : failure;
  return report(7, "exact-reductions-and-symmetry", failure.empty(), detail);
}

// 8. Optional: one-step-ahead error on a prepared electricity matrix
//    (consumers as rows, 15-minute columns) at 75% observation falls in
//    [0.05, 0.25] with at most one second of fitting per column. Runs only
//    when VBSF_ELECTRICITY_CSV points at the prepared file.
bool criterion_electricity(bool& skipped) {
  const char* path = std::getenv("VBSF_ELECTRICITY_CSV");
  if (path == nullptr || std::string(path).empty()) {
    skipped = true;
    std::printf("SKIP  8  %-32s set VBSF_ELECTRICITY_CSV to run this check\n",
                "electricity-one-step-ahead");
    std::fflush(stdout);
    return true;
  }

  const StreamSource full = load_csv(path);
  const int cols = std::min(full.cols(), 960);  // ten days at 15-minute sampling
  const int rows = std::min(full.rows(), 370);
  const std::string trimmed =
      (std::filesystem::temp_directory_path() / "vbsf_electricity_trimmed.csv").string();
  write_csv(trimmed, full.values.topLeftCorner(rows, cols),
            nullptr);

  ExperimentConfig cfg;
  cfg.task = Task::prediction;
  cfg.use_synthetic = false;
  cfg.data_csv = trimmed;
  cfg.csv_observe_fraction = 0.75;
  cfg.slots_per_day = 96;
  cfg.model.rank = 8;
  cfg.model.window = 96;
  cfg.model.report_lag = 0;
  cfg.model.max_iters = 15;
  cfg.model.tol = 1e-4;
  cfg.horizons = {1};
  cfg.seeds = {1};

  const ExperimentResult result = run_experiment(cfg);
  const double mre = result.prediction.at(0).mre_per_horizon.at(0);
  const double per_col = result.seconds_per_column;
  const bool pass = mre >= 0.05 && mre <= 0.25 && per_col <= 1.0;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "one-step MRE %.4f (band [0.05, 0.25]), %.3f s per column (limit 1 s)", mre,
                per_col);
  return report(8, "electricity-one-step-ahead", pass, detail);
}

}  // namespace

int main() {
  bool all = true;
  all &= criterion_solver_oracle();
  all &= criterion_linear_scaling();
  all &= criterion_rank_recovery();
  all &= criterion_imputation_beats_baseline();
  all &= criterion_robust_ordering();
  all &= criterion_elbo_monotone();
  all &= criterion_exact_reductions();
  bool skipped = false;
  all &= criterion_electricity(skipped);
  std::printf("%s\n", all ? (skipped ? "acceptance: PASS (optional check skipped)"
                                     : "acceptance: PASS")
                          : "acceptance: FAIL");
  return all ? 0 : 1;
}
