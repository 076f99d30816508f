#pragma once

#include "crdnn/data/pipeline.hpp"
#include "crdnn/nn/model.hpp"
#include "crdnn/train/trainer.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crdnn::train {

inline constexpr std::array<int, 3> kGridWindowSizes{9, 15, 25};
inline constexpr std::array<nn::RecurrentArch, 3> kGridArchs{nn::RecurrentArch::OneLstm, nn::RecurrentArch::TwoLstm,
                                                             nn::RecurrentArch::TwoBiLstm};

// Throws ConfigError unless ws is one of kGridWindowSizes.
void validate_window_size(int ws);

struct ExperimentConfig {
    nn::CrdnnConfig model;  // arch is replaced per cell
    TrainConfig train;
    LossConfig loss;
    int decimation = 10;
    int stride = 1;
    data::LabelPosition label_at = data::LabelPosition::Final;
    std::uint64_t init_seed = 1;
    double split_ratio = 0.8;
    std::uint64_t split_seed = 1;
    double smoothing_alpha = data::smoothing_alpha(data::kDefaultSmoothingTau);

    void validate() const;
};

// Cycles after the split, smoothed and normalized with training statistics.
struct PreparedData {
    std::vector<data::LabeledSeries> train_cycles;
    std::vector<data::LabeledSeries> test_cycles;
    data::NormalizationStats stats;
    data::Split split;
    double smoothing_alpha = 0.0;
};

PreparedData prepare_experiment(std::span<const data::LabeledSeries> cycles, const ExperimentConfig& cfg);

struct WindowSets {
    data::WindowBatch train;
    data::WindowBatch test;
};

data::WindowOptions window_options(const ExperimentConfig& cfg, int window_size,
                                   std::optional<std::size_t> align_end = std::nullopt);
WindowSets make_window_sets(const PreparedData& data, const data::WindowOptions& options);

struct CellResult {
    nn::RecurrentArch arch = nn::RecurrentArch::TwoLstm;
    int window_size = 0;
    std::size_t train_windows = 0;
    std::size_t test_windows = 0;
    std::size_t parameter_count = 0;
    double seconds = 0.0;
    std::string error;  // empty on success
    TrainReport report;
    nn::Model model;
    data::WindowOptions options;

    bool ok() const { return error.empty(); }
};

// Builds, initializes and trains one CRDNN. Errors propagate.
CellResult run_cell(const PreparedData& data, nn::RecurrentArch arch, int window_size, const ExperimentConfig& cfg,
                    std::optional<std::size_t> align_end = std::nullopt, const EpochCallback& on_epoch = {});

using CellCallback = std::function<void(const CellResult&)>;

// Trains every (arch, ws) cell. Windows of every size end on the same frames so
// the cells are scored on the same targets. A failing cell records its error
// and the grid moves on.
std::vector<CellResult> run_experiment_grid(const PreparedData& data, std::span<const nn::RecurrentArch> archs,
                                            std::span<const int> window_sizes, const ExperimentConfig& cfg,
                                            const CellCallback& on_cell = {});

nlohmann::json to_json(const CellResult& cell);
std::string render_grid_table(std::span<const CellResult> cells);

// What inference needs to reproduce training-time preprocessing exactly.
nlohmann::json preprocessing_metadata(const PreparedData& data, const data::WindowOptions& options);
struct Preprocessing {
    double smoothing_alpha = 0.0;
    data::NormalizationStats stats;
    data::WindowOptions options;
};
Preprocessing preprocessing_from_metadata(const nlohmann::json& j);

} // namespace crdnn::train
