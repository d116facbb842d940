#include "hetsample/selection_io.hpp"

#include <ostream>

#include "hetsample/error.hpp"
#include "hetsample/feature_io.hpp"

namespace hetsample {

nlohmann::json to_json(const SelectionResult& r) {
  nlohmann::json j;
  j["selected_ids"] = r.selected_ids;
  j["fus"] = r.fus;
  j["winning_trial"] = r.winning_trial;
  j["seed"] = r.params.seed;
  j["k"] = r.params.k;
  j["n_trials"] = r.params.n_trials;
  j["group_exclusion"] = r.params.enforce_group_exclusion;
  j["cell_size"] = r.grid_config.cell_size;
  j["radius"] = r.radius;
  j["dropped_features"] = r.dropped_features;
  j["tie_break_policy"] = kTieBreakPolicy;
  return j;
}

SelectionResult selection_from_json(const nlohmann::json& j) {
  SelectionResult r;
  try {
    r.selected_ids = j.at("selected_ids").get<std::vector<std::string>>();
    r.fus = j.at("fus").get<double>();
    r.winning_trial = j.at("winning_trial").get<std::size_t>();
    r.params.seed = j.at("seed").get<std::uint64_t>();
    r.params.k = j.at("k").get<std::size_t>();
    r.params.n_trials = j.at("n_trials").get<std::size_t>();
    r.params.enforce_group_exclusion = j.value("group_exclusion", false);
    r.grid_config = GridConfig(j.at("cell_size").get<double>());
    r.radius = j.at("radius").get<double>();
    r.dropped_features = j.value("dropped_features", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("selection json: ") + e.what());
  }
  return r;
}

void write_trial_log(std::ostream& out, const SelectionResult& r) {
  out << "trial_index,fus\n";
  for (std::size_t t = 0; t < r.trial_fus.size(); ++t) out << t << ',' << format_double(r.trial_fus[t]) << '\n';
}

} // namespace hetsample
