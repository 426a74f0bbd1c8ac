#pragma once

#include "svr/estimator.hpp"

#include "json.hpp"

#include <string>

namespace svr {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const SvrModel& model);
SvrModel model_from_json(const nlohmann::json& doc);

void save_model(const SvrModel& model, const std::string& path);
SvrModel load_model(const std::string& path);

}  // namespace svr
