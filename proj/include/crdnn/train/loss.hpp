#pragma once

#include "crdnn/nn/model.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace crdnn::train {

using nn::Gradients;
using nn::Matrix;
using nn::Model;
using nn::Vector;

enum class RegularizedLayers {
    Head,      // weight matrices of the last two dense_head layers
    AllDense,  // weight matrices of every dense_per_step and dense_head layer
};

const char* to_string(RegularizedLayers r);
RegularizedLayers regularized_layers_from_string(const std::string& name);

struct LossConfig {
    std::array<double, 3> class_weights{1.0, 4.0, 7.0};
    double l2_lambda = 1e-3;
    RegularizedLayers regularized = RegularizedLayers::Head;

    void validate() const;
};

// Weights for (travel, loading, unloading).
std::array<double, 3> default_class_weights();

inline constexpr double kProbabilityClamp = 1e-12;

// Indices into model.parameters() that enter the L2 term.
std::vector<std::size_t> regularized_parameters(const Model& model, RegularizedLayers which);

// Sum of squares of the selected parameters.
double l2_penalty_sum(const Model& model, const LossConfig& config);

// J = (1/m) sum_i sum_k W_k [-y log h - (1 - y) log(1 - h)] + lambda/(2m) sum theta^2
// with h clamped to [1e-12, 1 - 1e-12]. Throws NumericError naming the first
// sample with a non-finite prediction.
double weighted_cost(const Matrix& predictions, const Matrix& targets, const Model& model, const LossConfig& config);

// Data term only (no L2), for reporting.
double data_cost(const Matrix& predictions, const Matrix& targets, const LossConfig& config);

// dJ/dh of the data term for every prediction entry (includes the 1/m factor).
Matrix cost_gradient(const Matrix& predictions, const Matrix& targets, const LossConfig& config);

// Adds lambda/m * theta to the gradients of the regularized parameters.
void add_l2_gradient(const Model& model, const LossConfig& config, std::size_t batch, Gradients& grads);

struct BatchEvaluation {
    double cost = 0.0;
    Matrix predictions;
    Gradients gradients;
};

// Forward + backward over one mini-batch.
BatchEvaluation evaluate_batch(const Model& model, std::span<const Matrix* const> windows, const Matrix& targets,
                               const LossConfig& config, const nn::ForwardContext& ctx);

// Gradient of J for a single window (inference mode, no dropout).
Gradients model_backward(const Model& model, const Matrix& window, const Vector& target, const LossConfig& config);

} // namespace crdnn::train
