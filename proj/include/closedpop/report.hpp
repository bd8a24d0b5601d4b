#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "closedpop/encounter_data.hpp"
#include "closedpop/estimation.hpp"
#include "closedpop/gof.hpp"
#include "closedpop/simulate.hpp"

namespace closedpop {

// Human-readable tables. Probabilities and N to two decimals, SEs to three
// significant figures; boundary parameters print "-" in the interval column.
std::string fit_table(const FitResult& fit);
std::string comparison_table(const std::vector<ComparisonRow>& rows);
std::string gof_table(const GofReport& report);
std::string study_table(const StudySummary& summary);

// Machine-readable forms keep full precision.
nlohmann::json fit_json(const FitResult& fit);
// Rebuilds a FitResult from fit_json output; enough for re-evaluating the
// likelihood at the stored MLE and for goodness-of-fit.
FitResult fit_from_json(const nlohmann::json& j);

nlohmann::json dataset_json(const Dataset& d);
Dataset dataset_from_json(const nlohmann::json& j);

// Keys "T","R","n","z","pairs","v","schnabel". z and v are nested arrays in
// occasion-major order; pairs list objects with 1-based t1,t2,r,s and a count;
// schnabel is f_1..f_T.
nlohmann::json stats_json(const SufficientStats& stats);
SufficientStats stats_from_json(const nlohmann::json& j);

nlohmann::json gof_json(const GofReport& report);
nlohmann::json comparison_json(const std::vector<ComparisonRow>& rows);
nlohmann::json study_json(const StudySummary& summary);

nlohmann::json scenario_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

// The string parse_model_spec accepts for this spec (name() uses display forms
// like "Mh(2)" that the grammar does not).
std::string spec_token(const ModelSpec& spec);

}  // namespace closedpop
