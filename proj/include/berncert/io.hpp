#pragma once

#include <string>

#include <json.hpp>

#include "berncert/bernstein.hpp"
#include "berncert/model.hpp"

namespace berncert {

/// {"layers": [{"w": [[...]], "b": [...], "act": "relu"|"sigmoid"|"id"}],
///  "head_index": int, "d": int, "k": int}
nlohmann::json model_to_json(const MlpModel& model);
MlpModel model_from_json(const nlohmann::json& j);

/// {"n": int, "d": int, "k": int, "coeffs": [...]} with coeffs flat row-major.
nlohmann::json smoother_to_json(const BernsteinSmoother& smoother);
BernsteinSmoother smoother_from_json(const nlohmann::json& j);

/// Serializes with 17 significant digits so doubles survive a round trip.
std::string dump_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

MlpModel load_model(const std::string& path);
void save_model(const std::string& path, const MlpModel& model);

}  // namespace berncert
