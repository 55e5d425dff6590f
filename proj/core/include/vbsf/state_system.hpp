#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vbsf/config.hpp"
#include "vbsf/posteriors.hpp"
#include "vbsf/window.hpp"

namespace vbsf {

// Normal equations of the state-trajectory posterior: a symmetric positive
// definite block-tridiagonal precision matrix with one shared off-diagonal
// block, plus the right-hand side. Block (tau+1, tau) equals `off`; block
// (tau, tau+1) is off^T.
struct StateSystem {
  std::vector<MatrixXd> diag;  // t blocks, r x r each
  MatrixXd off;                // r x r, the sub-diagonal block (-J_mean)
  MatrixXd rhs;                // r x t, column tau is the linear term v_tau

  int rank() const { return static_cast<int>(off.rows()); }
  int length() const { return static_cast<int>(diag.size()); }
};

// Builds the system for the current factors:
//   diag_tau = beta * sum_{i in rows(tau)} E[a_i a_i^T] + I
//              + E[J^T J]            (every tau except the last)
//              + (P_1 - I)           (tau = 1 only; P_1 = first-state precision)
//   off      = -J_mean
//   v_tau    = beta * sum_i (y_itau - mu_e_itau) * a_i_mean,  v_1 += P_1 mu_1
// cfg supplies the first-state prior; empty fields mean mu_1 = 0, P_1 = I.
StateSystem assemble_state_system(const ObservationWindow& win,
                                  const RowLoadingPosterior& loadings,
                                  const TransitionPosterior& transition,
                                  double beta, const OutlierPosterior* outliers,
                                  const ModelConfig& cfg);

// Solves the system in one forward sweep (block Cholesky pivots) and one
// backward sweep, returning means, per-slot marginal covariances, one-step
// cross covariances, and the log determinant of the full covariance.
// O(t r^3) time, O(t r^2) memory. Throws numerical_error when a pivot is not
// positive definite.
StateTrajectoryPosterior solve_forward_backward(const StateSystem& sys);

// Reference path: materializes the full (t r) x (t r) precision matrix,
// factorizes it densely, and extracts the same quantities. Only sensible for
// small systems; throws config_error when t * r > 4096.
StateTrajectoryPosterior solve_dense(const StateSystem& sys);

}  // namespace vbsf
