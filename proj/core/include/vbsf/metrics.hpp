#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vbsf/window.hpp"

namespace vbsf {

// Relative-error series: columns are assigned to groups (slot-of-day for
// day-structured data, one group per column otherwise); each group averages
// ||estimate_col - truth_col||_2 / ||truth_col||_2 over its columns. Columns
// with a zero-norm truth are skipped and counted.
struct MreSeries {
  VectorXd per_group;                 // mean relative error per group
  std::vector<long> columns_scored;   // columns contributing per group
  double overall = 0.0;               // mean over groups with >= 1 column
  long skipped = 0;                   // zero-norm truth columns

  int groups() const { return static_cast<int>(per_group.size()); }
};

// column_group[c] maps column c to its group id in [0, num_groups); an empty
// vector means one group per column. Throws config_error on shape mismatch
// or when every column is skipped.
MreSeries mre(const MatrixXd& estimates, const MatrixXd& truth,
              const std::vector<int>& column_group = {});

// Same grouping, mean absolute error per cell:
// mean over columns of ||estimate_col - truth_col||_1 / m.
MreSeries mae(const MatrixXd& estimates, const MatrixXd& truth,
              const std::vector<int>& column_group = {});

// Group map for day-structured data: column c belongs to slot c mod
// slots_per_day. Falls back to per-column groups when slots_per_day < 2 or
// the span covers at most one day.
std::vector<int> slot_of_day_groups(int columns, int slots_per_day);

// Baseline predictor: cell (i, c) of the returned matrix (columns
// [eval_begin, eval_end)) is the mean of the observed history entries
// (columns [0, eval_begin)) of row i in the same slot-of-day; rows without a
// slot history fall back to the row's observed history mean, then to the
// global observed history mean, then to 0.
MatrixXd historic_mean_baseline(const MatrixXd& values, const MaskMatrix& mask,
                                int slots_per_day, int eval_begin, int eval_end);

}  // namespace vbsf
