#include "vbsf/window.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "vbsf/errors.hpp"

namespace vbsf {

ObservationWindow::ObservationWindow(MatrixXd values, MaskMatrix mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  if (values_.rows() != mask_.rows() || values_.cols() != mask_.cols()) {
    throw config_error("observation window: values and mask shapes differ");
  }
  const int m = rows();
  const int t = cols();
  rows_at_.resize(t);
  cols_of_.resize(m);
  for (int tau = 0; tau < t; ++tau) {
    for (int i = 0; i < m; ++i) {
      if (!mask_(i, tau)) continue;
      if (!std::isfinite(values_(i, tau))) {
        throw config_error("observation window: non-finite value at row " + std::to_string(i) +
                           ", column " + std::to_string(tau));
      }
      rows_at_[tau].push_back(i);
      cols_of_[i].push_back(tau);
      ++observed_count_;
    }
  }
}

ObservationWindow ObservationWindow::slid(const VectorXd& new_values,
                                          const std::vector<bool>& new_mask) const {
  const int m = rows();
  const int t = cols();
  if (new_values.size() != m || static_cast<int>(new_mask.size()) != m) {
    throw config_error("slide: new column length does not match window rows");
  }
  MatrixXd values(m, t);
  MaskMatrix mask(m, t);
  values.leftCols(t - 1) = values_.rightCols(t - 1);
  mask.leftCols(t - 1) = mask_.rightCols(t - 1);
  for (int i = 0; i < m; ++i) {
    mask(i, t - 1) = new_mask[i];
    values(i, t - 1) = new_mask[i] ? new_values(i) : 0.0;
  }
  return ObservationWindow(std::move(values), std::move(mask));
}

}  // namespace vbsf
