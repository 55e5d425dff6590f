#pragma once

#include <Eigen/Dense>
#include <vector>

namespace vbsf {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// A partially observed m x t block of the stream. Rows are series, columns
// are time slots, newest column last. Entries with mask == false carry no
// information (their stored value is ignored everywhere).
class ObservationWindow {
 public:
  ObservationWindow() = default;

  // Throws config_error when shapes differ or an observed entry is not finite.
  ObservationWindow(MatrixXd values, MaskMatrix mask);

  int rows() const { return static_cast<int>(values_.rows()); }
  int cols() const { return static_cast<int>(values_.cols()); }

  const MatrixXd& values() const { return values_; }
  const MaskMatrix& mask() const { return mask_; }

  bool observed(int i, int tau) const { return mask_(i, tau); }
  double value(int i, int tau) const { return values_(i, tau); }

  // Row indices observed in column tau, ascending.
  const std::vector<int>& rows_observed_at(int tau) const { return rows_at_[tau]; }
  // Column indices where row i is observed, ascending.
  const std::vector<int>& cols_observing_row(int i) const { return cols_of_[i]; }

  // Total number of observed entries (omega).
  long observed_count() const { return observed_count_; }

  // Shifted copy: drops the oldest column and appends the new one.
  ObservationWindow slid(const VectorXd& new_values, const std::vector<bool>& new_mask) const;

 private:
  MatrixXd values_;
  MaskMatrix mask_;
  std::vector<std::vector<int>> rows_at_;
  std::vector<std::vector<int>> cols_of_;
  long observed_count_ = 0;
};

}  // namespace vbsf
