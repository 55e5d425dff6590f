#pragma once

#include <Eigen/Dense>

#include "vbsf/config.hpp"
#include "vbsf/posteriors.hpp"
#include "vbsf/window.hpp"

namespace vbsf {

// Coordinate updates of the mean-field factors. Every function returns the
// refreshed factor given the current value of all the others; none of them
// mutates its inputs. Passing outliers == nullptr runs the plain model; the
// robust terms then contribute exact zeros through the same code path, so the
// two modes agree bit-for-bit when the outlier field is all zero.

struct ArdPrecisions {
  VectorXd gamma;    // length r
  VectorXd upsilon;  // length r
};

// Shrinkage precision for latent dimension k is n / D_k (vb) or (n - 2) / D_k
// (em), where D_k sums mean^2 + variance over column k of the loading or
// transition posterior and n is that column's length (m or r). Results are
// clamped to [prec_min, prec_max]; a non-positive denominator gives prec_max.
ArdPrecisions update_ard_precisions(const RowLoadingPosterior& loadings,
                                    const TransitionPosterior& transition,
                                    const ModelConfig& cfg);

// Sum over observed cells of E[(y - a^T b - e)^2]; the denominator of the
// noise-precision update and the quadratic term of the likelihood bound.
double residual_second_moment_sum(const ObservationWindow& win,
                                  const RowLoadingPosterior& loadings,
                                  const StateTrajectoryPosterior& states,
                                  const OutlierPosterior* outliers);

// beta = omega / S (vb) or (omega - 2) / S (em) with omega the observed-cell
// count, clamped to [prec_min, prec_max]. Throws config_error when omega == 0.
double update_noise_precision(const ObservationWindow& win,
                              const RowLoadingPosterior& loadings,
                              const StateTrajectoryPosterior& states,
                              const OutlierPosterior* outliers,
                              const ModelConfig& cfg);

// Posterior over the transition matrix given the state trajectory:
//   shared_cov = (Diag(upsilon) + sum_{tau<t} E[b_tau b_tau^T])^{-1}
//   row_means  = (sum_{tau>=2} E[b_tau b_{tau-1}^T]) * shared_cov
// A length-1 trajectory returns the prior (zero mean, Diag(upsilon)^{-1}).
TransitionPosterior update_transition(const StateTrajectoryPosterior& states,
                                      const VectorXd& upsilon);

// Per-row Gaussian posterior over the loadings:
//   cov_i  = (Diag(gamma) + beta * sum_{tau in cols(i)} E[b_tau b_tau^T])^{-1}
//   mean_i = beta * cov_i * sum_{tau in cols(i)} (y_itau - mu_e_itau) b_tau_mean
// Rows with no observations keep the prior (zero mean, Diag(gamma)^{-1}).
RowLoadingPosterior update_loadings(const ObservationWindow& win,
                                    const StateTrajectoryPosterior& states,
                                    double beta, const VectorXd& gamma,
                                    const OutlierPosterior* outliers);

// Per-cell outlier posterior update over the observed cells of the window.
// The refreshed cell precision alpha = 1 / (mean^2 + var) feeds a Gaussian
// update (OutlierUpdate::ard), or the second moment is added to the noise
// precision in one step (OutlierUpdate::fused):
//   var  <- 1 / (beta + alpha)        resp.  1 / (beta + mean^2 + var)
//   mean <- beta * var * (y - a_mean^T b_mean)
OutlierPosterior update_outliers(const ObservationWindow& win,
                                 const RowLoadingPosterior& loadings,
                                 const StateTrajectoryPosterior& states,
                                 double beta, const OutlierPosterior& current,
                                 const ModelConfig& cfg);

// num / denom clamped to [cfg.prec_min, cfg.prec_max]; denom <= 0 gives
// prec_max (a perfect fit saturates the precision instead of erroring).
double clamped_precision(double num, double denom, const ModelConfig& cfg);

}  // namespace vbsf
