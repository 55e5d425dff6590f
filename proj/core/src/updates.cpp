#include "vbsf/updates.hpp"

#include <algorithm>
#include <vector>

#include <Eigen/Cholesky>

#include "vbsf/errors.hpp"

namespace vbsf {

namespace {

// Inverse of an SPD matrix through its Cholesky factor, symmetrized so the
// result survives strict symmetry checks downstream.
MatrixXd spd_inverse(const MatrixXd& a, const char* what) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw numerical_error(what);
  MatrixXd inv = llt.solve(MatrixXd::Identity(a.rows(), a.cols()));
  return ((inv + inv.transpose()) * 0.5).eval();
}

}  // namespace

double clamped_precision(double num, double denom, const ModelConfig& cfg) {
  if (!(denom > 0.0)) return cfg.prec_max;
  return std::clamp(num / denom, cfg.prec_min, cfg.prec_max);
}

ArdPrecisions update_ard_precisions(const RowLoadingPosterior& loadings,
                                    const TransitionPosterior& transition,
                                    const ModelConfig& cfg) {
  const int m = loadings.rows();
  const int r = loadings.rank();
  const bool em = cfg.variant == Variant::em;

  ArdPrecisions out;
  out.gamma.resize(r);
  out.upsilon.resize(r);

  // D_k = sum_i E[A_ik^2] = ||column k mean||^2 + sum_i cov_i(k, k)
  VectorXd d_gamma = loadings.means.colwise().squaredNorm().transpose();
  for (int i = 0; i < m; ++i) d_gamma += loadings.covariances[i].diagonal();
  const double gamma_num = em ? m - 2.0 : static_cast<double>(m);
  for (int k = 0; k < r; ++k) out.gamma(k) = clamped_precision(gamma_num, d_gamma(k), cfg);

  // D_k = sum_i E[J_ik^2] = diagonal of E[J^T J]
  VectorXd d_upsilon = transition.gram_second_moment().diagonal();
  const double upsilon_num = em ? r - 2.0 : static_cast<double>(r);
  for (int k = 0; k < r; ++k) out.upsilon(k) = clamped_precision(upsilon_num, d_upsilon(k), cfg);

  return out;
}

double residual_second_moment_sum(const ObservationWindow& win,
                                  const RowLoadingPosterior& loadings,
                                  const StateTrajectoryPosterior& states,
                                  const OutlierPosterior* outliers) {
  const int t = win.cols();
  const int r = loadings.rank();
  double total = 0.0;
  for (int tau = 0; tau < t; ++tau) {
    const auto& rows = win.rows_observed_at(tau);
    if (rows.empty()) continue;
    const VectorXd b_mean = states.mean_at(tau);
    MatrixXd a_moment_sum = MatrixXd::Zero(r, r);
    for (int i : rows) {
      const double y = win.value(i, tau);
      const double fit = loadings.means.row(i).dot(b_mean);
      const double e_mean = outliers ? outliers->mean_at(i, tau) : 0.0;
      const double e_var = outliers ? outliers->var_at(i, tau) : 0.0;
      // E[(y - a^T b - e)^2] without the trace term, which is added per column
      total += y * y - 2.0 * (y - e_mean) * fit - 2.0 * y * e_mean + e_mean * e_mean + e_var;
      a_moment_sum.noalias() += loadings.row_second_moment(i);
    }
    total += (a_moment_sum * states.slot_second_moment(tau)).trace();
  }
  return total;
}

double update_noise_precision(const ObservationWindow& win,
                              const RowLoadingPosterior& loadings,
                              const StateTrajectoryPosterior& states,
                              const OutlierPosterior* outliers,
                              const ModelConfig& cfg) {
  const double omega = static_cast<double>(win.observed_count());
  if (omega == 0.0) throw config_error("noise precision update: empty window");
  const double num = cfg.variant == Variant::em ? omega - 2.0 : omega;
  const double denom = residual_second_moment_sum(win, loadings, states, outliers);
  return clamped_precision(num, denom, cfg);
}

TransitionPosterior update_transition(const StateTrajectoryPosterior& states,
                                      const VectorXd& upsilon) {
  const int r = states.rank();
  const int t = states.length();
  TransitionPosterior out;
  if (t < 2) {
    out.row_means = MatrixXd::Zero(r, r);
    out.shared_cov = upsilon.cwiseInverse().asDiagonal();
    return out;
  }
  MatrixXd gram = MatrixXd::Zero(r, r);  // sum_{tau=1..t-1} E[b_tau b_tau^T]
  MatrixXd cross = MatrixXd::Zero(r, r);  // sum_{tau=2..t} E[b_tau b_{tau-1}^T]
  for (int tau = 0; tau + 1 < t; ++tau) {
    gram.noalias() += states.slot_second_moment(tau);
    cross.noalias() += states.cross_slot_second_moment(tau).transpose();
  }
  MatrixXd prec = gram;
  prec.diagonal() += upsilon;
  out.shared_cov = spd_inverse(prec, "transition update: system not positive definite");
  out.row_means = cross * out.shared_cov;
  return out;
}

RowLoadingPosterior update_loadings(const ObservationWindow& win,
                                    const StateTrajectoryPosterior& states,
                                    double beta, const VectorXd& gamma,
                                    const OutlierPosterior* outliers) {
  const int m = win.rows();
  const int r = states.rank();

  std::vector<MatrixXd> slot_moments(win.cols());
  for (int tau = 0; tau < win.cols(); ++tau) {
    slot_moments[tau] = states.slot_second_moment(tau);
  }

  RowLoadingPosterior out;
  out.means.resize(m, r);
  out.covariances.resize(m);
  const MatrixXd prior_cov = gamma.cwiseInverse().asDiagonal();
  for (int i = 0; i < m; ++i) {
    const auto& cols = win.cols_observing_row(i);
    if (cols.empty()) {
      out.means.row(i).setZero();
      out.covariances[i] = prior_cov;
      continue;
    }
    MatrixXd prec = MatrixXd::Zero(r, r);
    VectorXd rhs = VectorXd::Zero(r);
    for (int tau : cols) {
      prec.noalias() += slot_moments[tau];
      const double e_mean = outliers ? outliers->mean_at(i, tau) : 0.0;
      rhs.noalias() += (win.value(i, tau) - e_mean) * states.mean_at(tau);
    }
    prec *= beta;
    prec.diagonal() += gamma;
    out.covariances[i] = spd_inverse(prec, "loading update: system not positive definite");
    out.means.row(i) = (beta * (out.covariances[i] * rhs)).transpose();
  }
  return out;
}

OutlierPosterior update_outliers(const ObservationWindow& win,
                                 const RowLoadingPosterior& loadings,
                                 const StateTrajectoryPosterior& states,
                                 double beta, const OutlierPosterior& current,
                                 const ModelConfig& cfg) {
  OutlierPosterior out;
  for (int tau = 0; tau < win.cols(); ++tau) {
    const VectorXd b_mean = states.mean_at(tau);
    for (int i : win.rows_observed_at(tau)) {
      const double mean = current.mean_at(i, tau);
      const double var = current.var_at(i, tau);
      double prec;
      if (cfg.outlier_update == OutlierUpdate::ard) {
        const double alpha = clamped_precision(1.0, mean * mean + var, cfg);
        prec = beta + alpha;
      } else {
        prec = beta + mean * mean + var;
      }
      OutlierPosterior::Cell cell;
      cell.var = 1.0 / prec;
      const double fit = loadings.means.row(i).dot(b_mean);
      cell.mean = beta * cell.var * (win.value(i, tau) - fit);
      out.cells.emplace(OutlierPosterior::Key{i, tau}, cell);
    }
  }
  return out;
}

}  // namespace vbsf
