#pragma once

// Text artifacts written by the command-line tool.

#include <string>

#include <json.hpp>

#include "bfl/calibration.hpp"
#include "bfl/data.hpp"
#include "bfl/ensemble.hpp"

namespace bfl {

// cause,csmf,pi_mean,pi_q025,pi_q975,rhat
std::string pi_table_csv(const CauseList& causes, const VariantResult& r);
// cause,<model ids>; posterior mean lambda
std::string lambda_csv(const CauseList& causes, const GlobalPosterior& post);
// death_id,<causes>,top_cause
std::string deaths_csv(const CauseList& causes, const Classification& cls);

nlohmann::json diagnostics_json(const GlobalPosterior& post);

// Posterior draws needed to classify new deaths later.
std::string serialize_posterior(const GlobalPosterior& post);
GlobalPosterior parse_posterior(const std::string& text);

// cause,pi_mean,pi_q025,pi_q975
std::string calibration_pi_csv(const CauseList& causes, const CalibrationPosterior& post);
nlohmann::json calibration_report(const CauseList& causes, const CalibrationPosterior& post);

}  // namespace bfl
