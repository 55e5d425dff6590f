#include "vbsf/engine.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "vbsf/errors.hpp"
#include "vbsf/rng.hpp"
#include "vbsf/state_system.hpp"
#include "vbsf/updates.hpp"

namespace vbsf {

namespace {

ModelConfig resolve(const ObservationWindow& win, const ModelConfig& cfg) {
  cfg.validate(win.rows(), win.cols());
  ModelConfig out = cfg;
  out.rank = cfg.resolved_rank(win.rows(), win.cols());
  return out;
}

OutlierPosterior fresh_outlier_field(const ObservationWindow& win) {
  OutlierPosterior out;
  for (int tau = 0; tau < win.cols(); ++tau) {
    for (int i : win.rows_observed_at(tau)) {
      out.cells.emplace(OutlierPosterior::Key{i, tau}, OutlierPosterior::Cell{0.0, 1.0});
    }
  }
  return out;
}

// Carries the previous fit over to a window shifted by one column.
FilterState warm_init(const ObservationWindow& win, const ModelConfig& cfg,
                      const FilterState& prev) {
  const int r = cfg.rank;
  const int t = win.cols();
  if (prev.loadings.rows() != win.rows() || prev.loadings.rank() != r) {
    throw config_error("warm start: previous state shape does not match window");
  }
  FilterState s;
  s.window = win;
  s.cfg = cfg;
  s.loadings = prev.loadings;
  s.transition = prev.transition;
  s.precisions = prev.precisions;

  s.states.means.resize(r, t);
  s.states.diag_blocks.assign(t, MatrixXd::Identity(r, r));
  s.states.super_blocks.assign(t - 1, MatrixXd::Zero(r, r));
  s.states.log_det_cov = 0.0;
  if (cfg.warm_start_states && prev.states.length() == t) {
    s.states.means.leftCols(t - 1) = prev.states.means.rightCols(t - 1);
    // new slot starts at the one-step prediction from the old newest slot
    s.states.means.col(t - 1) = prev.transition.mean_matrix() * prev.states.means.col(t - 1);
    for (int tau = 0; tau + 1 < t; ++tau) s.states.diag_blocks[tau] = prev.states.diag_blocks[tau + 1];
    for (int tau = 0; tau + 2 < t; ++tau) s.states.super_blocks[tau] = prev.states.super_blocks[tau + 1];
  } else {
    s.states.means.setZero();
  }

  if (cfg.robust) {
    for (const auto& [key, cell] : prev.outliers.cells) {
      if (key.second >= 1 && win.observed(key.first, key.second - 1)) {
        s.outliers.cells.emplace(OutlierPosterior::Key{key.first, key.second - 1}, cell);
      }
    }
    for (int i : win.rows_observed_at(t - 1)) {
      s.outliers.cells.emplace(OutlierPosterior::Key{i, t - 1}, OutlierPosterior::Cell{0.0, 1.0});
    }
  }
  s.estimate = s.loadings.means * s.states.means;
  return s;
}

}  // namespace

FilterState init_state(const ObservationWindow& win, const ModelConfig& cfg_in) {
  const ModelConfig cfg = resolve(win, cfg_in);
  const int m = win.rows();
  const int t = win.cols();
  const int r = cfg.rank;

  FilterState s;
  s.window = win;
  s.cfg = cfg;

  Rng rng(cfg.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));
  s.loadings.means.resize(m, r);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < r; ++k) s.loadings.means(i, k) = rng.normal() * scale;
  }
  s.loadings.covariances.assign(m, MatrixXd::Identity(r, r));

  s.states.means = MatrixXd::Zero(r, t);
  s.states.diag_blocks.assign(t, MatrixXd::Identity(r, r));
  s.states.super_blocks.assign(t > 0 ? t - 1 : 0, MatrixXd::Zero(r, r));
  s.states.log_det_cov = 0.0;

  s.transition.row_means = MatrixXd::Zero(r, r);
  s.transition.shared_cov = MatrixXd::Identity(r, r);

  s.precisions.beta = 1.0;
  s.precisions.gamma = VectorXd::Ones(r);
  s.precisions.upsilon = VectorXd::Ones(r);

  if (cfg.robust) s.outliers = fresh_outlier_field(win);
  s.estimate = MatrixXd::Zero(m, t);
  return s;
}

FilterState fit_window(const ObservationWindow& win, const ModelConfig& cfg_in,
                       const FilterState* warm) {
  const ModelConfig cfg = resolve(win, cfg_in);
  if (win.observed_count() == 0) throw config_error("fit: empty window");

  FilterState s = warm ? warm_init(win, cfg, *warm) : init_state(win, cfg);
  const OutlierPosterior* field = cfg.robust ? &s.outliers : nullptr;
  const int phases = cfg.robust ? 3 : 2;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const int phase = (iter - 1) % phases + 1;
    if (phase == 1) {
      const StateSystem sys =
          assemble_state_system(win, s.loadings, s.transition, s.precisions.beta, field, cfg);
      s.states = solve_forward_backward(sys);
      s.precisions.upsilon = update_ard_precisions(s.loadings, s.transition, cfg).upsilon;
      s.transition = update_transition(s.states, s.precisions.upsilon);
    } else if (phase == 2) {
      s.loadings = update_loadings(win, s.states, s.precisions.beta, s.precisions.gamma, field);
      s.precisions.gamma = update_ard_precisions(s.loadings, s.transition, cfg).gamma;
    } else if (!cfg.freeze_outliers) {
      s.outliers = update_outliers(win, s.loadings, s.states, s.precisions.beta, s.outliers, cfg);
    }

    const MatrixXd previous = std::move(s.estimate);
    s.estimate = s.loadings.means * s.states.means;
    if (!s.estimate.allFinite()) {
      throw numerical_error("fit: non-finite estimate at cycle " + std::to_string(iter));
    }
    s.precisions.beta = update_noise_precision(win, s.loadings, s.states, field, cfg);
    if (!cfg.robust) s.elbo_trace.push_back(compute_elbo(s, win));

    const double prev_norm = previous.norm();
    const double change = (s.estimate - previous).norm();
    const double rel_change =
        prev_norm > 0.0 ? change / prev_norm
                        : (change == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    s.cycle_count = iter;
    // The outlier phase cannot move the estimate, so its zero change must not
    // count as convergence.
    if (phase != 3 && rel_change <= cfg.tol) {
      s.converged = true;
      break;
    }
  }
  return s;
}

Imputation impute(const FilterState& state) {
  Imputation out;
  out.values = state.loadings.means * state.states.means;
  out.observed = state.window.mask();
  return out;
}

MatrixXd forecast(const FilterState& state, int horizon) {
  if (horizon < 1 || horizon > state.cfg.horizon) {
    throw config_error("forecast: horizon outside [1, " + std::to_string(state.cfg.horizon) + "]");
  }
  const int t = state.states.length();
  MatrixXd out(state.loadings.rows(), horizon);
  VectorXd b = state.states.mean_at(t - 1);
  for (int step = 0; step < horizon; ++step) {
    b = state.transition.mean_matrix() * b;
    out.col(step) = state.loadings.means * b;
  }
  return out;
}

FilterState slide(const FilterState& state, const VectorXd& new_values,
                  const std::vector<bool>& new_mask) {
  const ObservationWindow next = state.window.slid(new_values, new_mask);
  return fit_window(next, state.cfg, &state);
}

}  // namespace vbsf
