#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cfr/classifier.hpp"
#include "cfr/harness.hpp"

namespace cfr {

// Rejects keys outside `allowed`, so config typos fail loudly instead of
// silently falling back to defaults.
void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                const std::string& context);

std::string to_string(GradForm g);
GradForm grad_form_from_string(const std::string& s);
std::string to_string(WUpdateLoss w);
WUpdateLoss w_update_loss_from_string(const std::string& s);
std::string to_string(InitScheme i);
InitScheme init_scheme_from_string(const std::string& s);
std::string to_string(ReconNorm n);
ReconNorm recon_norm_from_string(const std::string& s);
std::string to_string(Alternation a);
Alternation alternation_from_string(const std::string& s);

// Every *_from_json starts from the type's defaults and overrides the keys
// present; unknown keys are errors. Callers run validate() afterwards.
nlohmann::json env_spec_to_json(const EnvironmentSpec& spec);
EnvironmentSpec env_spec_from_json(const nlohmann::json& j, const std::string& context);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& context);

nlohmann::json classifier_config_to_json(const ClassifierTrainConfig& cfg);
ClassifierTrainConfig classifier_config_from_json(const nlohmann::json& j,
                                                  const std::string& context);

nlohmann::json dwr_config_to_json(const DwrConfig& cfg);
DwrConfig dwr_config_from_json(const nlohmann::json& j, const std::string& context);

nlohmann::json method_spec_to_json(const MethodSpec& m);
MethodSpec method_spec_from_json(const nlohmann::json& j, const std::string& context);

nlohmann::json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j, const std::string& context);

}  // namespace cfr
