#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vbsf/config.hpp"
#include "vbsf/posteriors.hpp"
#include "vbsf/window.hpp"

namespace vbsf {

// Everything the filter knows after fitting a window: the window itself, the
// resolved configuration, the factor posteriors, and the fit diagnostics.
// Serializable as a whole, so a snapshot is a complete resume point.
struct FilterState {
  ObservationWindow window;
  ModelConfig cfg;  // rank resolved to a concrete value
  RowLoadingPosterior loadings;
  StateTrajectoryPosterior states;
  TransitionPosterior transition;
  PrecisionState precisions;
  OutlierPosterior outliers;  // empty unless cfg.robust
  MatrixXd estimate;          // loading means * state means, m x t
  int cycle_count = 0;
  bool converged = false;
  std::vector<double> elbo_trace;  // one entry per cycle (empty when robust)
};

struct Imputation {
  MatrixXd values;      // model estimate for every cell
  MaskMatrix observed;  // source tag: true = cell was observed, false = imputed
};

// Seeded initialization: loading means ~ N(0, 1/r) entrywise, unit covariance
// blocks, zero state and transition means, unit precisions.
FilterState init_state(const ObservationWindow& win, const ModelConfig& cfg);

// Runs the cyclic coordinate updates until the relative change of the
// estimate drops to cfg.tol or cfg.max_iters is reached. Each cycle runs one
// phase (states+transition / loadings / outlier field), then refreshes the
// estimate and the noise precision. `warm` (same shape, one column earlier)
// seeds the posteriors instead of init_state. Throws config_error for an
// empty window, numerical_error when the estimate leaves the finite range.
FilterState fit_window(const ObservationWindow& win, const ModelConfig& cfg,
                       const FilterState* warm = nullptr);

// Model estimate for every cell of the window plus per-cell source tags.
Imputation impute(const FilterState& state);

// Mean forecast for the next `horizon` columns: repeated application of the
// transition mean to the newest state, mapped through the loading means.
// horizon must be in [1, cfg.horizon].
MatrixXd forecast(const FilterState& state, int horizon);

// Advances the window by one column and refits with a warm start. The state
// posterior is shifted (the new slot starts at the one-step prediction)
// unless cfg.warm_start_states is off, in which case states restart cold
// while loadings, transition and precisions still carry over.
FilterState slide(const FilterState& state, const VectorXd& new_values,
                  const std::vector<bool>& new_mask);

// Evidence lower bound of the current factors for the non-robust model; for
// the em variant this is the EM objective (log joint at point precisions plus
// Gaussian entropies). Robust states are not supported (throws config_error).
double compute_elbo(const FilterState& state, const ObservationWindow& win);

}  // namespace vbsf
