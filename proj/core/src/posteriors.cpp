#include "vbsf/posteriors.hpp"

#include <cmath>
#include <string>

#include "vbsf/errors.hpp"

namespace vbsf {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw config_error(what);
}

void check_symmetric(const MatrixXd& s, const std::string& what) {
  require(s.rows() == s.cols(), what + ": not square");
  const double scale = s.cwiseAbs().maxCoeff() + 1.0;
  require((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale, what + ": not symmetric");
}

}  // namespace

MatrixXd second_moment(const VectorXd& mean, const MatrixXd& cov) {
  return mean * mean.transpose() + cov;
}

MatrixXd cross_second_moment(const VectorXd& mean_x, const VectorXd& mean_y,
                             const MatrixXd& cross_cov) {
  return mean_x * mean_y.transpose() + cross_cov;
}

MatrixXd RowLoadingPosterior::summed_second_moment(const std::vector<int>& rows) const {
  const int r = rank();
  MatrixXd total = MatrixXd::Zero(r, r);
  for (int i : rows) total.noalias() += row_second_moment(i);
  return total;
}

void RowLoadingPosterior::validate() const {
  require(means.rows() >= 1 && means.cols() >= 1, "loading posterior: empty mean matrix");
  require(static_cast<int>(covariances.size()) == rows(),
          "loading posterior: covariance count != rows");
  for (int i = 0; i < rows(); ++i) {
    require(covariances[i].rows() == rank() && covariances[i].cols() == rank(),
            "loading posterior: covariance block shape");
    check_symmetric(covariances[i], "loading posterior covariance");
  }
  require(means.allFinite(), "loading posterior: non-finite mean");
}

void StateTrajectoryPosterior::validate() const {
  const int r = rank();
  const int t = length();
  require(r >= 1 && t >= 1, "state posterior: empty trajectory");
  require(static_cast<int>(diag_blocks.size()) == t, "state posterior: diag block count");
  require(static_cast<int>(super_blocks.size()) == t - 1, "state posterior: super block count");
  for (const auto& d : diag_blocks) {
    require(d.rows() == r && d.cols() == r, "state posterior: diag block shape");
    check_symmetric(d, "state posterior diag block");
  }
  for (const auto& s : super_blocks) {
    require(s.rows() == r && s.cols() == r, "state posterior: super block shape");
  }
  require(means.allFinite() && std::isfinite(log_det_cov), "state posterior: non-finite entry");
}

void TransitionPosterior::validate() const {
  require(row_means.rows() == row_means.cols(), "transition posterior: mean not square");
  require(shared_cov.rows() == rank() && shared_cov.cols() == rank(),
          "transition posterior: covariance shape");
  check_symmetric(shared_cov, "transition posterior covariance");
  require(row_means.allFinite(), "transition posterior: non-finite mean");
}

void PrecisionState::validate() const {
  require(std::isfinite(beta) && beta > 0.0, "precision state: beta not positive");
  require((gamma.array() > 0.0).all() && gamma.allFinite(), "precision state: gamma not positive");
  require((upsilon.array() > 0.0).all() && upsilon.allFinite(),
          "precision state: upsilon not positive");
}

void OutlierPosterior::validate() const {
  for (const auto& [key, cell] : cells) {
    require(key.first >= 0 && key.second >= 0, "outlier posterior: negative cell index");
    require(std::isfinite(cell.mean) && std::isfinite(cell.var) && cell.var >= 0.0,
            "outlier posterior: bad cell moments");
  }
}

}  // namespace vbsf
