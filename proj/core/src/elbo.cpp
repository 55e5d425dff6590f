#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <boost/math/special_functions/digamma.hpp>

#include "vbsf/engine.hpp"
#include "vbsf/errors.hpp"
#include "vbsf/updates.hpp"

namespace vbsf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

double log_det_spd(const MatrixXd& a, const char* what) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw numerical_error(what);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Gamma(shape a, rate b): mean exp-log and entropy.
double gamma_mean_log(double a, double b) { return boost::math::digamma(a) - std::log(b); }
double gamma_entropy(double a, double b) {
  return a - std::log(b) + std::lgamma(a) + (1.0 - a) * boost::math::digamma(a);
}

}  // namespace

double compute_elbo(const FilterState& state, const ObservationWindow& win) {
  if (state.cfg.robust) throw config_error("elbo: only defined for the non-robust model");
  const bool em = state.cfg.variant == Variant::em;
  const int m = state.loadings.rows();
  const int r = state.loadings.rank();
  const int t = state.states.length();
  const double omega = static_cast<double>(win.observed_count());
  const double beta = state.precisions.beta;
  const VectorXd& gamma = state.precisions.gamma;
  const VectorXd& upsilon = state.precisions.upsilon;

  // Precision-term expectations: the vb variant integrates over the implied
  // Gamma factors (shape n/2, rate reconstructed from the mean), the em
  // variant evaluates at the point estimates.
  const double a_beta = omega / 2.0;
  const double e_log_beta = em ? std::log(beta) : gamma_mean_log(a_beta, a_beta / beta);
  const double a_gamma = m / 2.0;
  const double a_upsilon = r / 2.0;
  VectorXd e_log_gamma(r), e_log_upsilon(r);
  for (int k = 0; k < r; ++k) {
    e_log_gamma(k) = em ? std::log(gamma(k)) : gamma_mean_log(a_gamma, a_gamma / gamma(k));
    e_log_upsilon(k) = em ? std::log(upsilon(k)) : gamma_mean_log(a_upsilon, a_upsilon / upsilon(k));
  }

  // Likelihood: (omega/2)(E[log beta] - log 2pi) - (E[beta]/2) S
  const double s_sum = residual_second_moment_sum(win, state.loadings, state.states, nullptr);
  double elbo = 0.5 * omega * (e_log_beta - kLog2Pi) - 0.5 * beta * s_sum;

  // Loading prior: column k ~ N(0, gamma_k^{-1} I_m)
  VectorXd d_gamma = state.loadings.means.colwise().squaredNorm().transpose();
  for (int i = 0; i < m; ++i) d_gamma += state.loadings.covariances[i].diagonal();
  for (int k = 0; k < r; ++k) {
    elbo += 0.5 * m * e_log_gamma(k) - 0.5 * gamma(k) * d_gamma(k);
  }
  elbo -= 0.5 * m * r * kLog2Pi;

  // State prior: first slot against (mu_1, P_1), then the unit-noise dynamics
  const VectorXd mu1 =
      state.cfg.first_state_mean.size() ? state.cfg.first_state_mean : VectorXd::Zero(r);
  const MatrixXd p1 = state.cfg.first_state_precision.size() ? state.cfg.first_state_precision
                                                             : MatrixXd::Identity(r, r);
  const VectorXd diff1 = state.states.mean_at(0) - mu1;
  elbo += 0.5 * log_det_spd(p1, "elbo: first-state precision not positive definite") -
          0.5 * r * kLog2Pi -
          0.5 * ((p1 * state.states.diag_blocks[0]).trace() + diff1.dot(p1 * diff1));
  const MatrixXd j_mean = state.transition.mean_matrix();
  const MatrixXd j_gram = state.transition.gram_second_moment();
  for (int tau = 1; tau < t; ++tau) {
    const double quad = state.states.slot_second_moment(tau).trace() -
                        2.0 * (j_mean * state.states.cross_slot_second_moment(tau - 1)).trace() +
                        (j_gram * state.states.slot_second_moment(tau - 1)).trace();
    elbo += -0.5 * r * kLog2Pi - 0.5 * quad;
  }

  // Transition prior: column k ~ N(0, upsilon_k^{-1} I_r)
  const VectorXd d_upsilon = j_gram.diagonal();
  for (int k = 0; k < r; ++k) {
    elbo += 0.5 * r * e_log_upsilon(k) - 0.5 * upsilon(k) * d_upsilon(k);
  }
  elbo -= 0.5 * r * r * kLog2Pi;

  // Scale-free precision priors, log p(theta) = -log theta up to a constant
  elbo -= e_log_beta + e_log_gamma.sum() + e_log_upsilon.sum();

  // Gaussian entropies
  elbo += 0.5 * r * t * (1.0 + kLog2Pi) + 0.5 * state.states.log_det_cov;
  for (int i = 0; i < m; ++i) {
    elbo += 0.5 * r * (1.0 + kLog2Pi) +
            0.5 * log_det_spd(state.loadings.covariances[i], "elbo: loading covariance singular");
  }
  const double log_det_j = log_det_spd(state.transition.shared_cov, "elbo: transition covariance singular");
  elbo += 0.5 * r * r * (1.0 + kLog2Pi) + 0.5 * r * log_det_j;

  // Gamma-factor entropies (vb only; em treats the precisions as parameters)
  if (!em) {
    elbo += gamma_entropy(a_beta, a_beta / beta);
    for (int k = 0; k < r; ++k) {
      elbo += gamma_entropy(a_gamma, a_gamma / gamma(k));
      elbo += gamma_entropy(a_upsilon, a_upsilon / upsilon(k));
    }
  }
  return elbo;
}

}  // namespace vbsf
