#include "vbsf/config.hpp"

#include <algorithm>
#include <string>

#include <Eigen/Cholesky>

#include "vbsf/errors.hpp"

namespace vbsf {

int ModelConfig::resolved_rank(int m, int t) const {
  if (rank > 0) return rank;
  return std::max(1, std::min({m, t, 16}));
}

void ModelConfig::validate(int m, int t) const {
  if (rank < 0) throw config_error("config: rank must be >= 0 (0 = auto)");
  const int r = resolved_rank(m, t);
  if (m < 1 || t < 1) throw config_error("config: window must be non-empty");
  if (r < 1 || r > std::min(m, t)) {
    throw config_error("config: rank " + std::to_string(r) + " outside [1, min(m, t)] for m=" +
                       std::to_string(m) + ", t=" + std::to_string(t));
  }
  if (window < 1) throw config_error("config: window must be >= 1");
  if (report_lag < 0 || report_lag > window) {
    throw config_error("config: report lag outside [0, window]");
  }
  if (horizon < 0) throw config_error("config: horizon must be >= 0");
  if (!(tol > 0.0)) throw config_error("config: tol must be positive");
  if (max_iters < 0) throw config_error("config: max_iters must be >= 0");
  if (!(prec_min > 0.0) || !(prec_max > prec_min)) {
    throw config_error("config: precision clamp range invalid");
  }
  if (first_state_mean.size() != 0 && first_state_mean.size() != r) {
    throw config_error("config: first state mean length != rank");
  }
  if (first_state_precision.size() != 0) {
    if (first_state_precision.rows() != r || first_state_precision.cols() != r) {
      throw config_error("config: first state precision shape != rank");
    }
    Eigen::LLT<MatrixXd> llt(first_state_precision);
    if (llt.info() != Eigen::Success) {
      throw config_error("config: first state precision not positive definite");
    }
  }
}

}  // namespace vbsf
