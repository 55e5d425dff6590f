#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace vbsf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Inference family: full variational posteriors over the precisions (vb) or
// point estimates at the posterior mode (em). The two differ only in the
// precision-update numerators (n vs n - 2).
enum class Variant { vb, em };

// How the outlier-cell variance update treats the previous second moment.
//   ard:   the cell precision is first refreshed to 1 / (mean^2 + var), then
//          the usual Gaussian update runs with that precision (default).
//   fused: the previous second moment is added to the noise precision in a
//          single step, var <- 1 / (beta + mean^2 + var).
enum class OutlierUpdate { ard, fused };

struct ModelConfig {
  int rank = 0;        // latent dimension r; 0 = auto (min(m, window, 16))
  int window = 24;     // h: the window holds h + 1 columns
  int report_lag = 0;  // delta: streaming estimates are read at column t - delta
  int horizon = 5;     // largest forecast horizon served

  double tol = 1e-5;    // stop when the relative change of the estimate <= tol
  int max_iters = 200;  // hard iteration cap; 0 returns the initialization

  Variant variant = Variant::vb;
  bool robust = false;  // model observed cells as signal + sparse outlier + noise
  OutlierUpdate outlier_update = OutlierUpdate::ard;
  // Diagnostic: keep the outlier field fixed at its initialization (the
  // three-phase schedule still runs, the outlier phase just does not mutate).
  bool freeze_outliers = false;

  // Prior over the first state; empty means zero mean / identity precision.
  VectorXd first_state_mean;       // length r when set
  MatrixXd first_state_precision;  // r x r SPD when set

  double prec_min = 1e-12;  // precision estimates are clamped to this range
  double prec_max = 1e12;

  std::uint64_t seed = 1;        // initialization randomness
  bool warm_start_states = true;  // slide(): carry shifted state posterior over

  // Resolves rank = 0 against actual data dimensions.
  int resolved_rank(int m, int t) const;

  // Throws config_error when fields are inconsistent for an m x t window.
  void validate(int m, int t) const;
};

}  // namespace vbsf
