#include "vbsf/metrics.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "vbsf/errors.hpp"

namespace vbsf {

namespace {

MreSeries grouped_error(const MatrixXd& estimates, const MatrixXd& truth,
                        const std::vector<int>& column_group,
                        const std::function<double(int)>& column_error,
                        const std::function<bool(int)>& column_valid) {
  if (estimates.rows() != truth.rows() || estimates.cols() != truth.cols()) {
    throw config_error("metrics: estimate and truth shapes differ");
  }
  const int t = static_cast<int>(truth.cols());
  if (t == 0) throw config_error("metrics: empty span");
  if (!column_group.empty() && static_cast<int>(column_group.size()) != t) {
    throw config_error("metrics: group map length differs from columns");
  }

  int groups = t;
  if (!column_group.empty()) {
    groups = 0;
    for (int g : column_group) {
      if (g < 0) throw config_error("metrics: negative group id");
      groups = std::max(groups, g + 1);
    }
  }

  MreSeries out;
  out.per_group = VectorXd::Zero(groups);
  out.columns_scored.assign(groups, 0);
  for (int c = 0; c < t; ++c) {
    if (!column_valid(c)) {
      ++out.skipped;
      continue;
    }
    const int g = column_group.empty() ? c : column_group[c];
    out.per_group(g) += column_error(c);
    ++out.columns_scored[g];
  }
  long active = 0;
  double total = 0.0;
  for (int g = 0; g < groups; ++g) {
    if (out.columns_scored[g] == 0) continue;
    out.per_group(g) /= static_cast<double>(out.columns_scored[g]);
    total += out.per_group(g);
    ++active;
  }
  if (active == 0) throw config_error("metrics: every column was skipped");
  out.overall = total / static_cast<double>(active);
  return out;
}

}  // namespace

MreSeries mre(const MatrixXd& estimates, const MatrixXd& truth,
              const std::vector<int>& column_group) {
  return grouped_error(
      estimates, truth, column_group,
      [&](int c) { return (estimates.col(c) - truth.col(c)).norm() / truth.col(c).norm(); },
      [&](int c) { return truth.col(c).norm() > 0.0; });
}

MreSeries mae(const MatrixXd& estimates, const MatrixXd& truth,
              const std::vector<int>& column_group) {
  const double m = static_cast<double>(truth.rows());
  return grouped_error(
      estimates, truth, column_group,
      [&](int c) {
        return (estimates.col(c) - truth.col(c)).cwiseAbs().sum() / m;
      },
      [&](int) { return true; });
}

std::vector<int> slot_of_day_groups(int columns, int slots_per_day) {
  std::vector<int> groups(columns);
  if (slots_per_day >= 2 && columns > slots_per_day) {
    for (int c = 0; c < columns; ++c) groups[c] = c % slots_per_day;
  } else {
    for (int c = 0; c < columns; ++c) groups[c] = c;
  }
  return groups;
}

MatrixXd historic_mean_baseline(const MatrixXd& values, const MaskMatrix& mask,
                                int slots_per_day, int eval_begin, int eval_end) {
  if (values.rows() != mask.rows() || values.cols() != mask.cols()) {
    throw config_error("baseline: values and mask shapes differ");
  }
  if (eval_begin < 1 || eval_begin > eval_end || eval_end > values.cols()) {
    throw config_error("baseline: evaluation span invalid");
  }
  const int m = static_cast<int>(values.rows());
  const int slots = slots_per_day >= 2 ? slots_per_day : 1;

  MatrixXd slot_sum = MatrixXd::Zero(m, slots);
  MatrixXd slot_count = MatrixXd::Zero(m, slots);
  VectorXd row_sum = VectorXd::Zero(m);
  VectorXd row_count = VectorXd::Zero(m);
  double global_sum = 0.0;
  double global_count = 0.0;
  for (int c = 0; c < eval_begin; ++c) {
    const int slot = c % slots;
    for (int i = 0; i < m; ++i) {
      if (!mask(i, c)) continue;
      slot_sum(i, slot) += values(i, c);
      slot_count(i, slot) += 1.0;
      row_sum(i) += values(i, c);
      row_count(i) += 1.0;
      global_sum += values(i, c);
      global_count += 1.0;
    }
  }
  const double global_mean = global_count > 0.0 ? global_sum / global_count : 0.0;

  MatrixXd pred(m, eval_end - eval_begin);
  for (int c = eval_begin; c < eval_end; ++c) {
    const int slot = c % slots;
    for (int i = 0; i < m; ++i) {
      double value = global_mean;
      if (slot_count(i, slot) > 0.0) {
        value = slot_sum(i, slot) / slot_count(i, slot);
      } else if (row_count(i) > 0.0) {
        value = row_sum(i) / row_count(i);
      }
      pred(i, c - eval_begin) = value;
    }
  }
  return pred;
}

}  // namespace vbsf
