#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace vbsf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// E[x x^T] = mean mean^T + cov for a Gaussian factor.
MatrixXd second_moment(const VectorXd& mean, const MatrixXd& cov);

// E[x y^T] = mean_x mean_y^T + cross_cov for jointly Gaussian (x, y).
MatrixXd cross_second_moment(const VectorXd& mean_x, const VectorXd& mean_y,
                             const MatrixXd& cross_cov);

// Per-row Gaussian posteriors over the loading matrix. Row i of `means` is
// the posterior mean of loading row i; covariances[i] is its r x r covariance.
struct RowLoadingPosterior {
  MatrixXd means;                     // m x r
  std::vector<MatrixXd> covariances;  // m blocks, each r x r

  int rows() const { return static_cast<int>(means.rows()); }
  int rank() const { return static_cast<int>(means.cols()); }

  VectorXd mean_row(int i) const { return means.row(i).transpose(); }
  // E[a_i a_i^T]
  MatrixXd row_second_moment(int i) const { return second_moment(mean_row(i), covariances[i]); }
  // sum_i E[a_i a_i^T] over the given rows
  MatrixXd summed_second_moment(const std::vector<int>& rows) const;

  void validate() const;  // throws config_error on shape/symmetry violations
};

// Joint Gaussian posterior over the state trajectory, stored in the
// block-tridiagonal form produced by the smoother: per-slot marginal
// covariances plus one-step cross covariances.
struct StateTrajectoryPosterior {
  MatrixXd means;                      // r x t, column tau is the slot-tau mean
  std::vector<MatrixXd> diag_blocks;   // t blocks: Cov(b_tau)
  std::vector<MatrixXd> super_blocks;  // t-1 blocks: Cov(b_tau, b_tau+1)
  double log_det_cov = 0.0;            // log det of the full joint covariance

  int rank() const { return static_cast<int>(means.rows()); }
  int length() const { return static_cast<int>(means.cols()); }

  VectorXd mean_at(int tau) const { return means.col(tau); }
  // E[b_tau b_tau^T]
  MatrixXd slot_second_moment(int tau) const {
    return second_moment(means.col(tau), diag_blocks[tau]);
  }
  // E[b_tau b_tau+1^T]
  MatrixXd cross_slot_second_moment(int tau) const {
    return cross_second_moment(means.col(tau), means.col(tau + 1), super_blocks[tau]);
  }

  void validate() const;
};

// Gaussian posterior over the transition matrix: one shared covariance for
// every row, so E[J^T J] = mean^T mean + r * shared_cov.
struct TransitionPosterior {
  MatrixXd row_means;   // r x r, row i is the posterior mean of transition row i
  MatrixXd shared_cov;  // r x r

  int rank() const { return static_cast<int>(row_means.rows()); }
  VectorXd row_mean(int i) const { return row_means.row(i).transpose(); }
  // The transition matrix mean, rows stacked in order.
  const MatrixXd& mean_matrix() const { return row_means; }
  // E[J^T J]
  MatrixXd gram_second_moment() const {
    return row_means.transpose() * row_means +
           static_cast<double>(rank()) * shared_cov;
  }

  void validate() const;
};

// Point estimates of the noise and shrinkage precisions. gamma and upsilon
// are indexed by latent dimension: gamma_k shrinks column k of the loading
// matrix, upsilon_k column k of the transition matrix. Driving gamma_k large
// switches latent dimension k off, which is what recovers the effective rank.
struct PrecisionState {
  double beta = 1.0;  // observation noise precision
  VectorXd gamma;     // length r, loading-column shrinkage
  VectorXd upsilon;   // length r, transition-column shrinkage

  void validate() const;
};

// Sparse per-cell Gaussian posteriors over the outlier field, keyed by
// (row, column) of the observed cells of the current window.
struct OutlierPosterior {
  struct Cell {
    double mean = 0.0;
    double var = 1.0;
  };
  using Key = std::pair<int, int>;

  std::map<Key, Cell> cells;

  bool contains(int i, int tau) const { return cells.count({i, tau}) != 0; }
  // Zero for cells that carry no outlier variable; this makes the robust and
  // plain update paths coincide bit-for-bit when the field is absent.
  double mean_at(int i, int tau) const {
    auto it = cells.find({i, tau});
    return it == cells.end() ? 0.0 : it->second.mean;
  }
  double var_at(int i, int tau) const {
    auto it = cells.find({i, tau});
    return it == cells.end() ? 0.0 : it->second.var;
  }

  void validate() const;
};

}  // namespace vbsf
