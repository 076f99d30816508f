#include "crdnn/train/report.hpp"

#include "crdnn/errors.hpp"
#include "crdnn/util/format.hpp"

#include <sstream>

namespace crdnn::train {

nlohmann::json to_json(const EpochRecord& rec) {
    nlohmann::json j{{"epoch", rec.epoch},
                     {"learning_rate", rec.learning_rate},
                     {"train_cost", rec.train_cost},
                     {"test_cost", rec.test_cost},
                     {"test_accuracy", rec.test_accuracy}};
    if (rec.train_accuracy) j["train_accuracy"] = *rec.train_accuracy;
    return j;
}

EpochRecord epoch_from_json(const nlohmann::json& j) {
    EpochRecord rec;
    rec.epoch = j.at("epoch").get<std::size_t>();
    rec.learning_rate = j.at("learning_rate").get<double>();
    rec.train_cost = j.at("train_cost").get<double>();
    rec.test_cost = j.at("test_cost").get<double>();
    rec.test_accuracy = j.at("test_accuracy").get<double>();
    if (j.contains("train_accuracy")) rec.train_accuracy = j.at("train_accuracy").get<double>();
    return rec;
}

std::string render_report_lines(const TrainReport& report, const nlohmann::json& extra_summary) {
    std::ostringstream os;
    for (const auto& rec : report.epochs) os << to_json(rec).dump() << '\n';
    nlohmann::json summary = extra_summary;
    summary["best_epoch"] = report.best_epoch;
    summary["best_test_cost"] = report.best_test_cost;
    summary["stop_epoch"] = report.stop_epoch;
    summary["stop_reason"] = report.stop_reason;
    summary["parameter_count"] = report.parameter_count;
    summary["metrics"] = metrics::to_json(report.final_metrics);
    os << nlohmann::json{{"summary", summary}}.dump() << '\n';
    return os.str();
}

TrainReport parse_report_lines(const std::string& text) {
    TrainReport report;
    bool have_summary = false;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IoError("report line " + std::to_string(lineno) + ": " + e.what());
        }
        if (j.contains("summary")) {
            const auto& s = j["summary"];
            report.best_epoch = s.at("best_epoch").get<std::size_t>();
            report.best_test_cost = s.at("best_test_cost").get<double>();
            report.stop_epoch = s.at("stop_epoch").get<std::size_t>();
            report.stop_reason = s.at("stop_reason").get<std::string>();
            report.parameter_count = s.at("parameter_count").get<std::size_t>();
            report.final_metrics = metrics::metrics_from_json(s.at("metrics"));
            have_summary = true;
        } else {
            report.epochs.push_back(epoch_from_json(j));
        }
    }
    if (!have_summary) throw IoError("report has no summary line");
    return report;
}

std::string render_cost_curve(const TrainReport& report) {
    std::ostringstream os;
    os << "epoch\tlearning_rate\ttrain_cost\ttest_cost\ttest_accuracy\n";
    for (const auto& r : report.epochs) {
        os << r.epoch << '\t' << util::format_double(r.learning_rate) << '\t' << util::format_double(r.train_cost)
           << '\t' << util::format_double(r.test_cost) << '\t' << util::format_double(r.test_accuracy) << '\n';
    }
    return os.str();
}

} // namespace crdnn::train
