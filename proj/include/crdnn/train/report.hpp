#pragma once

#include "crdnn/train/trainer.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace crdnn::train {

nlohmann::json to_json(const EpochRecord& rec);
EpochRecord epoch_from_json(const nlohmann::json& j);

// One JSON object per line per epoch, followed by a single {"summary": ...} line.
std::string render_report_lines(const TrainReport& report, const nlohmann::json& extra_summary = nlohmann::json::object());
TrainReport parse_report_lines(const std::string& text);

// Tab-separated cost curve: epoch, learning_rate, train_cost, test_cost, test_accuracy.
std::string render_cost_curve(const TrainReport& report);

} // namespace crdnn::train
