#pragma once

#include "crdnn/data/pipeline.hpp"
#include "crdnn/metrics/metrics.hpp"
#include "crdnn/train/loss.hpp"
#include "crdnn/train/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crdnn::train {

struct TrainConfig {
    std::size_t batch_size = 128;
    double initial_learning_rate = 1e-4;
    double lr_decay = 0.97;  // multiplicative, applied once per epoch
    std::size_t max_epochs = 200;
    std::size_t early_stop_patience = 10;
    std::uint64_t seed = 1;
    std::optional<double> dropout;  // overrides every dropout layer's rate when set
    OptimizerKind optimizer = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    bool restore_best = true;
    bool track_train_accuracy = false;
    // Stop as soon as training accuracy reaches this value (implies tracking).
    std::optional<double> stop_at_train_accuracy;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double learning_rate = 0.0;
    double train_cost = 0.0;  // mean mini-batch cost, dropout active
    double test_cost = 0.0;
    double test_accuracy = 0.0;
    std::optional<double> train_accuracy;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_test_cost = 0.0;
    std::size_t stop_epoch = 0;
    std::string stop_reason;  // early_stop, max_epochs, target_accuracy
    std::size_t parameter_count = 0;
    metrics::MetricsBundle final_metrics;  // test set, restored model
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch training with per-epoch learning-rate decay and patience-based
// early stopping on the test cost. Restores the best-test-cost parameters.
TrainReport train(nn::Model& model, const data::WindowBatch& train_set, const data::WindowBatch& test_set,
                  const TrainConfig& train_cfg, const LossConfig& loss_cfg, const EpochCallback& on_epoch = {});

// Inference batches are padded to a multiple of this many windows, which makes
// each window's probabilities independent of the rest of its batch.
inline constexpr std::size_t kPredictQuantum = 48;

// Class-probability rows for the given windows (inference mode).
nn::Matrix predict_windows(const nn::Model& model, std::span<const nn::Matrix* const> windows);
// Class-probability rows for every window of a batch.
nn::Matrix predict_probabilities(const nn::Model& model, const data::WindowBatch& batch);
std::vector<int> argmax_rows(const nn::Matrix& probabilities);
std::vector<int> predict_classes(const nn::Model& model, const data::WindowBatch& batch);

// Full-set cost J over a window batch.
double dataset_cost(const nn::Model& model, const data::WindowBatch& batch, const LossConfig& loss_cfg,
                    nn::Matrix* probabilities = nullptr);

void set_dropout_rate(nn::Model& model, double rate);

// Mean absolute weight per input channel of the first layer, for inspecting
// which sensors the network attends to.
std::vector<double> input_weight_magnitudes(const nn::Model& model);

} // namespace crdnn::train
