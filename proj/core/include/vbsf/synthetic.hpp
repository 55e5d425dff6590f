#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "vbsf/csv.hpp"
#include "vbsf/window.hpp"

namespace vbsf {

// Generator parameters for a low-rank autoregressive stream:
//   states   b_1 ~ N(0, I), b_tau = J b_{tau-1} + N(0, I)
//   signal   A b_tau + offset, loadings A entrywise standard normal
//   data     signal + N(0, 1/noise_precision), observed iid w.p. observe_fraction
// J is drawn dense and rescaled to spectral radius rho (or replaced by a
// scaled random orthogonal matrix when orthogonal_transition is set).
// snr_db, when finite, overrides noise_precision using the empirical signal
// power. outlier_fraction/outlier_scale describe a corruption pass that the
// callers apply separately via inject_outliers.
struct SyntheticSpec {
  int rows = 20;        // m
  int length = 100;     // total columns generated
  int true_rank = 3;
  double rho = 0.9;     // transition spectral radius
  double noise_precision = 100.0;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  double observe_fraction = 1.0;  // p, probability a cell is observed
  double offset = 0.0;            // constant added to the clean signal
  bool orthogonal_transition = false;
  double outlier_fraction = 0.0;  // p_o, consumed by the corruption pass
  double outlier_scale = 1.0;     // c, consumed by the corruption pass
  std::uint64_t seed = 1;

  void validate() const;  // throws config_error on out-of-range fields
};

struct SyntheticData {
  StreamSource observed;   // masked view of `complete`
  MatrixXd complete;       // signal + noise everywhere (the scoring target)
  MatrixXd signal;         // noiseless A B + offset
  MatrixXd loadings;       // m x true_rank
  MatrixXd transition;     // true_rank x true_rank
  MatrixXd states;         // true_rank x length
  double noise_precision;  // the value actually used (after snr_db)
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Noise precision giving the requested signal-to-noise ratio against the
// empirical power of `signal`.
double noise_precision_for_snr(const MatrixXd& signal, double snr_db);

// One corrupted cell: value replaced by max(left, right neighbor) plus
// scale * (pre-injection mean of the observed entries of its column).
struct InjectedOutlier {
  int row = 0;
  int col = 0;
  double original = 0.0;
  double corrupted = 0.0;
};

struct InjectionResult {
  MatrixXd values;  // copy of the input with the selected cells replaced
  std::vector<InjectedOutlier> outliers;  // sorted by (col, row)
};

// Picks round(fraction * observed-interior-cell-count) observed cells in the
// interior columns (both neighbors exist) uniformly without replacement and
// replaces them. A missing neighbor falls back to its column's observed mean
// (global observed mean if that column is empty). Requires >= 3 columns.
// Scales outside the studied grid {0.75, 1, 1.25, 1.5, 1.75} are accepted
// with a warning on stderr.
InjectionResult inject_outliers(const MatrixXd& values, const MaskMatrix& mask, double fraction,
                                double scale, std::uint64_t seed);

}  // namespace vbsf
