#pragma once

#include "crdnn/nn/matrix.hpp"
#include "crdnn/nn/ops.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace crdnn::nn {

enum class LayerKind { Conv1D, DensePerStep, Lstm, BiLstm, DenseHead, Dropout, Relu, Softmax };

const char* to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int filters = 0;               // Conv1D
    int kernel = 0;                // Conv1D, must be odd
    int units = 0;                 // DensePerStep, DenseHead, Lstm, BiLstm (hidden size per direction)
    double rate = 0.0;             // Dropout
    bool return_sequences = true;  // Lstm, BiLstm

    static LayerSpec conv1d(int filters, int kernel);
    static LayerSpec dense_per_step(int units);
    static LayerSpec lstm(int units, bool return_sequences);
    static LayerSpec bilstm(int units, bool return_sequences);
    static LayerSpec dense_head(int units);
    static LayerSpec dropout(double rate);
    static LayerSpec relu();
    static LayerSpec softmax();

    // Throws ConfigError when size parameters are out of range.
    void validate() const;

    bool operator==(const LayerSpec&) const = default;
};

// Batched activations. Sequence form stacks timesteps time-major: the row for
// (t, b) is t * batch + b. Vector form (steps == 0) has one row per window.
struct Activation {
    Matrix values;
    Index steps = 0;
    Index batch = 0;

    bool is_sequence() const { return steps > 0; }
    Index width() const { return values.cols(); }
};

struct ForwardContext {
    bool training = false;
    std::mt19937_64* rng = nullptr;  // required when training with dropout
};

// Values a layer keeps from forward for its backward pass.
struct LayerTape {
    std::vector<Matrix> saved;
    std::vector<LstmTrace> traces;  // recurrent layers, one per direction
};

struct InitOptions {
    double forget_bias = 1.0;
};

class Layer {
public:
    Layer(LayerSpec spec, Index input_width, bool input_is_sequence);
    virtual ~Layer() = default;

    const LayerSpec& spec() const { return spec_; }
    Index input_width() const { return input_width_; }
    bool input_is_sequence() const { return input_is_sequence_; }
    virtual Index output_width() const { return input_width_; }
    virtual bool output_is_sequence() const { return input_is_sequence_; }

    virtual Activation forward(const Activation& in, const ForwardContext& ctx, LayerTape* tape) const = 0;
    // grads is this layer's slice of the gradient set, same order as params().
    virtual Activation backward(const Activation& grad_out, const LayerTape& tape,
                                std::span<Matrix> grads) const = 0;

    virtual void initialize(std::mt19937_64& rng, const InitOptions& options);

    std::vector<Matrix>& params() { return params_; }
    const std::vector<Matrix>& params() const { return params_; }
    const std::vector<std::string>& param_names() const { return names_; }

    // Closed-form trainable parameter count for this layer's spec and input width.
    virtual std::size_t analytic_parameter_count() const { return 0; }

    virtual std::unique_ptr<Layer> clone() const = 0;

protected:
    void add_param(std::string name, Index rows, Index cols);
    void check_input(const Activation& in) const;

    LayerSpec spec_;
    Index input_width_;
    bool input_is_sequence_;
    std::vector<Matrix> params_;
    std::vector<std::string> names_;
};

// Builds the concrete layer for spec. Throws ConfigError when the spec cannot
// accept an input of the given width/form.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec, Index input_width, bool input_is_sequence);

// Glorot-uniform bound used for weight initialization.
double glorot_limit(Index fan_in, Index fan_out);

} // namespace crdnn::nn
