#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>

#include "vbsf/window.hpp"

namespace vbsf {

// A fully loaded stream: rows are series, columns are time slots in arrival
// order. slots_per_day > 0 marks day-structured data (used for slot-of-day
// grouping and the historic-mean baseline).
struct StreamSource {
  MatrixXd values;
  MaskMatrix mask;
  int slots_per_day = 0;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }

  // Columns [start, start + len) as an observation window.
  ObservationWindow window(int start, int len) const;
};

struct CsvOptions {
  char delimiter = ',';
  // Cell contents meaning "missing" (compared after trimming spaces).
  std::set<std::string> missing_tokens = {"", "NA", "NaN", "nan"};
};

// Parses a numeric CSV; missing cells stay unobserved with value 0. A 0/1
// mask sidecar (same shape) overrides cell presence; a cell the mask claims
// observed must still parse as a number. Ragged rows and unparseable fields
// raise config_error with 1-based line/field coordinates.
StreamSource load_csv(const std::string& path, const CsvOptions& opts = {});
StreamSource load_csv(const std::string& path, const std::string& mask_path,
                      const CsvOptions& opts = {});

// Writes values with shortest round-trip doubles; cells with mask == false
// are left empty. Omitting the mask writes every cell.
void write_csv(const std::string& path, const MatrixXd& values,
               const MaskMatrix* mask = nullptr, char delimiter = ',');

// 0/1 sidecar matching load_csv's mask convention.
void write_mask_csv(const std::string& path, const MaskMatrix& mask, char delimiter = ',');

}  // namespace vbsf
