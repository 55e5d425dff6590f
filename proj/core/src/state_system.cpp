#include "vbsf/state_system.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "vbsf/errors.hpp"

namespace vbsf {

StateSystem assemble_state_system(const ObservationWindow& win,
                                  const RowLoadingPosterior& loadings,
                                  const TransitionPosterior& transition,
                                  double beta, const OutlierPosterior* outliers,
                                  const ModelConfig& cfg) {
  const int t = win.cols();
  const int r = loadings.rank();
  const MatrixXd identity = MatrixXd::Identity(r, r);
  const MatrixXd j_gram = transition.gram_second_moment();  // E[J^T J]

  VectorXd first_mean = cfg.first_state_mean.size() ? cfg.first_state_mean : VectorXd::Zero(r);
  MatrixXd first_prec = cfg.first_state_precision.size() ? cfg.first_state_precision : identity;

  StateSystem sys;
  sys.diag.resize(t);
  sys.off = -transition.mean_matrix();
  sys.rhs.resize(r, t);

  for (int tau = 0; tau < t; ++tau) {
    MatrixXd block = tau == 0 ? first_prec : identity;
    if (tau + 1 < t) block += j_gram;
    VectorXd v = VectorXd::Zero(r);
    MatrixXd a_moment_sum = MatrixXd::Zero(r, r);
    for (int i : win.rows_observed_at(tau)) {
      a_moment_sum.noalias() += loadings.row_second_moment(i);
      const double e_mean = outliers ? outliers->mean_at(i, tau) : 0.0;
      v.noalias() += (win.value(i, tau) - e_mean) * loadings.mean_row(i);
    }
    block.noalias() += beta * a_moment_sum;
    v *= beta;
    if (tau == 0) v.noalias() += first_prec * first_mean;
    sys.diag[tau] = (block + block.transpose()) * 0.5;
    sys.rhs.col(tau) = v;
  }
  return sys;
}

StateTrajectoryPosterior solve_forward_backward(const StateSystem& sys) {
  const int t = sys.length();
  const int r = sys.rank();
  const MatrixXd identity = MatrixXd::Identity(r, r);
  const MatrixXd j_mean = -sys.off;  // sub-diagonal block is -J_mean

  // Forward sweep: pivot_tau = diag_tau - J D_{tau-1}^{-1} J^T, carried as
  // Cholesky factors; shifted rhs accumulates the same way.
  std::vector<Eigen::LLT<MatrixXd>> pivots;
  pivots.reserve(t);
  MatrixXd shifted_rhs(r, t);
  double log_det_prec = 0.0;
  for (int tau = 0; tau < t; ++tau) {
    MatrixXd pivot = sys.diag[tau];
    VectorXd v = sys.rhs.col(tau);
    if (tau > 0) {
      pivot.noalias() -= j_mean * pivots[tau - 1].solve(j_mean.transpose());
      pivot = ((pivot + pivot.transpose()) * 0.5).eval();
      v.noalias() += j_mean * pivots[tau - 1].solve(shifted_rhs.col(tau - 1));
    }
    pivots.emplace_back(pivot);
    if (pivots.back().info() != Eigen::Success) {
      throw numerical_error("state system not positive definite");
    }
    log_det_prec += 2.0 * pivots.back().matrixLLT().diagonal().array().log().sum();
    shifted_rhs.col(tau) = v;
  }

  // Backward sweep: means, then the selected blocks of the inverse.
  StateTrajectoryPosterior post;
  post.means.resize(r, t);
  post.diag_blocks.resize(t);
  post.super_blocks.resize(t > 0 ? t - 1 : 0);
  post.log_det_cov = -log_det_prec;

  post.means.col(t - 1) = pivots[t - 1].solve(shifted_rhs.col(t - 1));
  post.diag_blocks[t - 1] = pivots[t - 1].solve(identity);
  for (int tau = t - 2; tau >= 0; --tau) {
    post.means.col(tau) =
        pivots[tau].solve(shifted_rhs.col(tau) + j_mean.transpose() * post.means.col(tau + 1));
    // gain = D_tau^{-1} J^T maps next-slot blocks back one step
    const MatrixXd gain = pivots[tau].solve(j_mean.transpose());
    post.super_blocks[tau] = gain * post.diag_blocks[tau + 1];
    MatrixXd diag = pivots[tau].solve(identity) +
                    post.super_blocks[tau] * gain.transpose();
    post.diag_blocks[tau] = ((diag + diag.transpose()) * 0.5).eval();
  }
  return post;
}

StateTrajectoryPosterior solve_dense(const StateSystem& sys) {
  const int t = sys.length();
  const int r = sys.rank();
  const long n = static_cast<long>(t) * r;
  if (n > 4096) throw config_error("dense reference solve: system larger than 4096");

  MatrixXd full = MatrixXd::Zero(n, n);
  VectorXd rhs(n);
  const MatrixXd j_mean = -sys.off;
  for (int tau = 0; tau < t; ++tau) {
    full.block(tau * r, tau * r, r, r) = sys.diag[tau];
    if (tau + 1 < t) {
      full.block((tau + 1) * r, tau * r, r, r) = sys.off;
      full.block(tau * r, (tau + 1) * r, r, r) = sys.off.transpose();
    }
    rhs.segment(tau * r, r) = sys.rhs.col(tau);
  }

  Eigen::LLT<MatrixXd> llt(full);
  if (llt.info() != Eigen::Success) {
    throw numerical_error("state system not positive definite");
  }
  const VectorXd mean = llt.solve(rhs);
  const MatrixXd cov = llt.solve(MatrixXd::Identity(n, n));

  StateTrajectoryPosterior post;
  post.means.resize(r, t);
  post.diag_blocks.resize(t);
  post.super_blocks.resize(t - 1);
  post.log_det_cov = -2.0 * llt.matrixLLT().diagonal().array().log().sum();
  for (int tau = 0; tau < t; ++tau) {
    post.means.col(tau) = mean.segment(tau * r, r);
    MatrixXd d = cov.block(tau * r, tau * r, r, r);
    post.diag_blocks[tau] = ((d + d.transpose()) * 0.5).eval();
    if (tau + 1 < t) post.super_blocks[tau] = cov.block(tau * r, (tau + 1) * r, r, r);
  }
  return post;
}

}  // namespace vbsf
