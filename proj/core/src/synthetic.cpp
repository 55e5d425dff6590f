#include "vbsf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "vbsf/errors.hpp"
#include "vbsf/rng.hpp"

namespace vbsf {

namespace {

MatrixXd random_matrix(Rng& rng, int rows, int cols, double scale) {
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < cols; ++c) m(i, c) = rng.normal() * scale;
  }
  return m;
}

double spectral_radius(const MatrixXd& m) {
  return Eigen::EigenSolver<MatrixXd>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

void SyntheticSpec::validate() const {
  if (rows < 1 || length < 1) throw config_error("synthetic: empty shape");
  if (true_rank < 1 || true_rank > std::min(rows, length)) {
    throw config_error("synthetic: true rank outside [1, min(rows, length)]");
  }
  if (!(rho >= 0.0) || rho > 1.0) throw config_error("synthetic: rho outside [0, 1]");
  if (!(noise_precision > 0.0) && !std::isfinite(snr_db)) {
    throw config_error("synthetic: noise precision must be positive");
  }
  if (!(observe_fraction > 0.0) || observe_fraction > 1.0) {
    throw config_error("synthetic: observe fraction outside (0, 1]");
  }
  if (outlier_fraction < 0.0 || outlier_fraction > 1.0) {
    throw config_error("synthetic: outlier fraction outside [0, 1]");
  }
  if (!std::isfinite(offset)) throw config_error("synthetic: offset not finite");
}

double noise_precision_for_snr(const MatrixXd& signal, double snr_db) {
  const double power = signal.squaredNorm() / static_cast<double>(signal.size());
  if (!(power > 0.0)) throw config_error("snr: signal has zero power");
  const double noise_var = power / std::pow(10.0, snr_db / 10.0);
  return 1.0 / noise_var;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int m = spec.rows;
  const int t = spec.length;
  const int rank = spec.true_rank;

  SyntheticData data;
  data.loadings = random_matrix(rng, m, rank, 1.0);

  if (spec.orthogonal_transition) {
    const MatrixXd raw = random_matrix(rng, rank, rank, 1.0);
    MatrixXd q = Eigen::HouseholderQR<MatrixXd>(raw).householderQ();
    data.transition = spec.rho * q;
  } else {
    data.transition = random_matrix(rng, rank, rank, 1.0 / std::sqrt(static_cast<double>(rank)));
    const double radius = spectral_radius(data.transition);
    if (radius > spec.rho && radius > 0.0) data.transition *= spec.rho / radius;
  }

  data.states.resize(rank, t);
  for (int k = 0; k < rank; ++k) data.states(k, 0) = rng.normal();
  for (int tau = 1; tau < t; ++tau) {
    data.states.col(tau) = data.transition * data.states.col(tau - 1);
    for (int k = 0; k < rank; ++k) data.states(k, tau) += rng.normal();
  }

  data.signal = data.loadings * data.states;
  data.signal.array() += spec.offset;

  data.noise_precision = std::isfinite(spec.snr_db)
                             ? noise_precision_for_snr(data.signal, spec.snr_db)
                             : spec.noise_precision;
  const double noise_sd = 1.0 / std::sqrt(data.noise_precision);
  data.complete = data.signal;
  for (int tau = 0; tau < t; ++tau) {
    for (int i = 0; i < m; ++i) data.complete(i, tau) += rng.normal() * noise_sd;
  }

  data.observed.values = MatrixXd::Zero(m, t);
  data.observed.mask = MaskMatrix::Constant(m, t, false);
  for (int tau = 0; tau < t; ++tau) {
    for (int i = 0; i < m; ++i) {
      if (rng.uniform() < spec.observe_fraction) {
        data.observed.mask(i, tau) = true;
        data.observed.values(i, tau) = data.complete(i, tau);
      }
    }
  }
  return data;
}

InjectionResult inject_outliers(const MatrixXd& values, const MaskMatrix& mask, double fraction,
                                double scale, std::uint64_t seed) {
  if (values.rows() != mask.rows() || values.cols() != mask.cols()) {
    throw config_error("inject: values and mask shapes differ");
  }
  if (values.cols() < 3) throw config_error("inject: need at least 3 columns");
  if (fraction < 0.0 || fraction > 1.0) throw config_error("inject: fraction outside [0, 1]");
  {
    const double grid[] = {0.75, 1.0, 1.25, 1.5, 1.75};
    bool on_grid = false;
    for (double g : grid) on_grid = on_grid || g == scale;
    if (!on_grid) {
      std::cerr << "inject-outliers: scale " << scale
                << " is outside the studied grid {0.75, 1, 1.25, 1.5, 1.75}\n";
    }
  }

  const int m = static_cast<int>(values.rows());
  const int t = static_cast<int>(values.cols());

  // Pre-injection per-column observed means; empty columns fall back to the
  // global observed mean.
  VectorXd col_mean = VectorXd::Zero(t);
  double global_sum = 0.0;
  long global_count = 0;
  for (int tau = 0; tau < t; ++tau) {
    double sum = 0.0;
    long count = 0;
    for (int i = 0; i < m; ++i) {
      if (!mask(i, tau)) continue;
      sum += values(i, tau);
      ++count;
    }
    col_mean(tau) = count ? sum / static_cast<double>(count)
                          : std::numeric_limits<double>::quiet_NaN();
    global_sum += sum;
    global_count += count;
  }
  const double global_mean = global_count ? global_sum / static_cast<double>(global_count) : 0.0;
  for (int tau = 0; tau < t; ++tau) {
    if (!std::isfinite(col_mean(tau))) col_mean(tau) = global_mean;
  }

  std::vector<std::pair<int, int>> eligible;  // (col, row), column-major order
  for (int tau = 1; tau + 1 < t; ++tau) {
    for (int i = 0; i < m; ++i) {
      if (mask(i, tau)) eligible.emplace_back(tau, i);
    }
  }

  InjectionResult result;
  result.values = values;
  const auto target = static_cast<size_t>(
      std::llround(fraction * static_cast<double>(eligible.size())));
  if (target == 0) return result;

  // Partial Fisher-Yates draw without replacement.
  Rng rng(seed);
  for (size_t k = 0; k < target; ++k) {
    const size_t pick = k + rng.uniform_below(eligible.size() - k);
    std::swap(eligible[k], eligible[pick]);
  }
  eligible.resize(target);
  std::sort(eligible.begin(), eligible.end());

  for (const auto& [tau, i] : eligible) {
    const double left = mask(i, tau - 1) ? values(i, tau - 1) : col_mean(tau - 1);
    const double right = mask(i, tau + 1) ? values(i, tau + 1) : col_mean(tau + 1);
    InjectedOutlier o;
    o.row = i;
    o.col = tau;
    o.original = values(i, tau);
    o.corrupted = std::max(left, right) + scale * col_mean(tau);
    result.values(i, tau) = o.corrupted;
    result.outliers.push_back(o);
  }
  return result;
}

}  // namespace vbsf
