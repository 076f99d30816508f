#pragma once

#include "crdnn/nn/layers.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace crdnn::nn {

// Class index order shared by every module.
enum class WorkState : int { Travel = 0, Loading = 1, Unloading = 2 };
inline constexpr int kNumClasses = 3;
const char* to_string(WorkState state);

enum class RecurrentArch { OneLstm, TwoLstm, TwoBiLstm };
const char* to_string(RecurrentArch arch);
RecurrentArch recurrent_arch_from_string(const std::string& name);

// Conv -> two per-step dense -> recurrent stack -> two dense -> softmax.
struct CrdnnConfig {
    RecurrentArch arch = RecurrentArch::TwoLstm;
    int input_channels = 5;
    int conv_filters = 10;
    int kernel = 5;
    std::array<int, 2> reduce_units{32, 32};
    std::array<int, 2> rnn_units{32, 32};
    int head_units = 32;
    int classes = kNumClasses;
    double dropout = 0.2;
};

std::vector<LayerSpec> crdnn_layers(const CrdnnConfig& config);

// Forward-pass record consumed by Model::backward.
struct Tape {
    std::vector<LayerTape> layers;
    Index batch = 0;
    bool valid = false;
};

// One gradient matrix per parameter matrix, in Model::parameters() order.
using Gradients = std::vector<Matrix>;

class Model {
public:
    Model() = default;
    Model(Index input_channels, const std::vector<LayerSpec>& specs);
    static Model crdnn(const CrdnnConfig& config);

    Model(const Model& other);
    Model& operator=(const Model& other);
    Model(Model&&) noexcept = default;
    Model& operator=(Model&&) noexcept = default;

    void initialize(std::uint64_t seed, const InitOptions& options = {});

    Index input_channels() const { return input_channels_; }
    Index output_width() const;
    std::size_t layer_count() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }
    Layer& layer(std::size_t i) { return *layers_.at(i); }
    std::vector<LayerSpec> specs() const;

    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
    std::vector<std::string> parameter_names() const;
    // Index into parameters() of layer i's first matrix.
    std::size_t parameter_offset(std::size_t layer) const;
    std::size_t parameter_scalar_count() const;
    Gradients zero_gradients() const;

    // Inference on one window (time x channels). Dropout is inactive.
    Vector predict(const Matrix& window) const;
    Matrix predict_batch(std::span<const Matrix> windows) const;

    // Batched forward; rows of the result follow the order of windows. Pass a
    // tape to enable backward.
    Matrix forward(std::span<const Matrix* const> windows, const ForwardContext& ctx, Tape* tape) const;

    // grad_output is dL/d(model output), one row per window of the taped batch.
    Gradients backward(const Tape& tape, const Matrix& grad_output) const;

private:
    Index input_channels_ = 0;
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Sum of each layer's closed-form count.
std::size_t count_parameters(const Model& model);

// Packs equally shaped windows into a time-major batch.
Activation pack_windows(std::span<const Matrix* const> windows, Index channels);

} // namespace crdnn::nn
