#pragma once

#include <iosfwd>

#include <nlohmann/json.hpp>

#include "hetsample/sampling_core.hpp"

namespace hetsample {

/// {selected_ids, fus, winning_trial, seed, k, n_trials, cell_size, radius,
///  dropped_features, tie_break_policy, group_exclusion}
nlohmann::json to_json(const SelectionResult& result);

/// Inverse of to_json. Row indices and the trial log are not stored, so
/// `selected_rows` and `trial_fus` come back empty.
SelectionResult selection_from_json(const nlohmann::json& j);

/// trial_index,fus
void write_trial_log(std::ostream& out, const SelectionResult& result);

} // namespace hetsample
