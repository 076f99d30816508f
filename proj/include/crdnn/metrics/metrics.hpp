#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crdnn::metrics {

inline constexpr int kClasses = 3;

// Rows are ground truth, columns are predictions.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kClasses>, kClasses> counts{};

    std::uint64_t total() const;
    std::uint64_t correct() const;
    std::uint64_t at(int truth, int prediction) const {
        return counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(prediction)];
    }
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truths);

double accuracy(const ConfusionMatrix& cm);
// 2 TP / (2 TP + FP + FN) with counts pooled over classes.
double micro_f1(const ConfusionMatrix& cm);
// Unweighted mean of per-class F1 over classes that occur in truth or prediction.
double macro_f1(const ConfusionMatrix& cm);

// Loading predicted as unloading plus unloading predicted as loading.
std::uint64_t loading_unloading_confusions(const ConfusionMatrix& cm);

struct ClassStats {
    std::uint64_t support = 0;
    std::uint64_t true_positive = 0;
    std::uint64_t false_positive = 0;
    std::uint64_t false_negative = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};
std::array<ClassStats, kClasses> per_class(const ConfusionMatrix& cm);

struct Mistake {
    std::size_t index;
    double time;
    int truth;
    int prediction;
};

std::vector<Mistake> error_map(std::span<const int> predictions, std::span<const int> truths,
                               std::span<const double> times);

// Share of mistakes whose time lies within tolerance of some transition time.
// Returns 1 when there are no mistakes.
double fraction_near(std::span<const Mistake> mistakes, std::span<const double> transition_times,
                     double tolerance);

struct MetricsBundle {
    ConfusionMatrix cm;
    double accuracy = 0.0;
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
    std::uint64_t loading_unloading = 0;
};

MetricsBundle evaluate(std::span<const int> predictions, std::span<const int> truths);

nlohmann::json to_json(const MetricsBundle& m);
MetricsBundle metrics_from_json(const nlohmann::json& j);

// Text rendering: ground truth e0..e2 down the side, predictions across the top.
std::string render_confusion(const ConfusionMatrix& cm);

} // namespace crdnn::metrics
