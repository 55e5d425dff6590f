#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "vbsf/config.hpp"
#include "vbsf/engine.hpp"
#include "vbsf/posteriors.hpp"
#include "vbsf/window.hpp"

namespace vbsf {

using nlohmann::json;

// Matrices travel as {"rows", "cols", "data": [row-major]}. Doubles are
// emitted in shortest round-trip form, so serialize/parse is bit-exact for
// finite values; non-finite values are rejected on write.
json matrix_json(const MatrixXd& m);
MatrixXd matrix_from_json(const json& j);
json vector_json(const VectorXd& v);
VectorXd vector_from_json(const json& j);
json mask_json(const MaskMatrix& m);
MaskMatrix mask_from_json(const json& j);

void to_json(json& j, const ModelConfig& cfg);
void from_json(const json& j, ModelConfig& cfg);

void to_json(json& j, const ObservationWindow& win);
void from_json(const json& j, ObservationWindow& win);

void to_json(json& j, const RowLoadingPosterior& p);
void from_json(const json& j, RowLoadingPosterior& p);

void to_json(json& j, const StateTrajectoryPosterior& p);
void from_json(const json& j, StateTrajectoryPosterior& p);

void to_json(json& j, const TransitionPosterior& p);
void from_json(const json& j, TransitionPosterior& p);

void to_json(json& j, const PrecisionState& p);
void from_json(const json& j, PrecisionState& p);

void to_json(json& j, const OutlierPosterior& p);
void from_json(const json& j, OutlierPosterior& p);

// Full snapshot with "format_version" and "kind" markers.
void to_json(json& j, const FilterState& s);
void from_json(const json& j, FilterState& s);

// File round trip; loading validates the format version and all invariants.
void save_state(const std::string& path, const FilterState& s);
FilterState load_state(const std::string& path);

}  // namespace vbsf
