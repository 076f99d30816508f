#include "crdnn/nn/model.hpp"

#include "crdnn/errors.hpp"

namespace crdnn::nn {

const char* to_string(WorkState state) {
    switch (state) {
    case WorkState::Travel: return "travel";
    case WorkState::Loading: return "loading";
    case WorkState::Unloading: return "unloading";
    }
    return "unknown";
}

const char* to_string(RecurrentArch arch) {
    switch (arch) {
    case RecurrentArch::OneLstm: return "1lstm";
    case RecurrentArch::TwoLstm: return "2lstm";
    case RecurrentArch::TwoBiLstm: return "2bilstm";
    }
    return "unknown";
}

RecurrentArch recurrent_arch_from_string(const std::string& name) {
    for (auto a : {RecurrentArch::OneLstm, RecurrentArch::TwoLstm, RecurrentArch::TwoBiLstm}) {
        if (name == to_string(a)) return a;
    }
    throw ConfigError("unknown architecture '" + name + "' (expected 1lstm, 2lstm or 2bilstm)");
}

std::vector<LayerSpec> crdnn_layers(const CrdnnConfig& c) {
    std::vector<LayerSpec> s;
    s.push_back(LayerSpec::conv1d(c.conv_filters, c.kernel));
    s.push_back(LayerSpec::relu());
    for (int units : c.reduce_units) {
        s.push_back(LayerSpec::dense_per_step(units));
        s.push_back(LayerSpec::relu());
        s.push_back(LayerSpec::dropout(c.dropout));
    }
    switch (c.arch) {
    case RecurrentArch::OneLstm:
        s.push_back(LayerSpec::lstm(c.rnn_units[0], false));
        s.push_back(LayerSpec::dropout(c.dropout));
        break;
    case RecurrentArch::TwoLstm:
        s.push_back(LayerSpec::lstm(c.rnn_units[0], true));
        s.push_back(LayerSpec::dropout(c.dropout));
        s.push_back(LayerSpec::lstm(c.rnn_units[1], false));
        s.push_back(LayerSpec::dropout(c.dropout));
        break;
    case RecurrentArch::TwoBiLstm:
        s.push_back(LayerSpec::bilstm(c.rnn_units[0], true));
        s.push_back(LayerSpec::dropout(c.dropout));
        s.push_back(LayerSpec::bilstm(c.rnn_units[1], false));
        s.push_back(LayerSpec::dropout(c.dropout));
        break;
    }
    s.push_back(LayerSpec::dense_head(c.head_units));
    s.push_back(LayerSpec::relu());
    s.push_back(LayerSpec::dropout(c.dropout));
    s.push_back(LayerSpec::dense_head(c.classes));
    s.push_back(LayerSpec::softmax());
    return s;
}

Model::Model(Index input_channels, const std::vector<LayerSpec>& specs) : input_channels_(input_channels) {
    if (input_channels < 1) throw ConfigError("model: input channel count must be >= 1");
    if (specs.empty()) throw ConfigError("model: empty layer stack");
    Index width = input_channels;
    bool sequence = true;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        try {
            layers_.push_back(make_layer(specs[i], width, sequence));
        } catch (const ConfigError& e) {
            throw ConfigError("layer " + std::to_string(i) + ": " + e.what());
        }
        width = layers_.back()->output_width();
        sequence = layers_.back()->output_is_sequence();
    }
    if (sequence) throw ConfigError("model: stack must end in one vector per window (no recurrent readout)");
}

Model Model::crdnn(const CrdnnConfig& config) {
    return Model(config.input_channels, crdnn_layers(config));
}

Model::Model(const Model& other) : input_channels_(other.input_channels_) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Model& Model::operator=(const Model& other) {
    if (this != &other) {
        Model copy(other);
        *this = std::move(copy);
    }
    return *this;
}

void Model::initialize(std::uint64_t seed, const InitOptions& options) {
    std::mt19937_64 rng(seed);
    for (auto& l : layers_) l->initialize(rng, options);
}

Index Model::output_width() const { return layers_.empty() ? 0 : layers_.back()->output_width(); }

std::vector<LayerSpec> Model::specs() const {
    std::vector<LayerSpec> out;
    for (const auto& l : layers_) out.push_back(l->spec());
    return out;
}

std::vector<Matrix*> Model::parameters() {
    std::vector<Matrix*> out;
    for (auto& l : layers_) {
        for (auto& p : l->params()) out.push_back(&p);
    }
    return out;
}

std::vector<const Matrix*> Model::parameters() const {
    std::vector<const Matrix*> out;
    for (const auto& l : layers_) {
        for (const auto& p : l->params()) out.push_back(&p);
    }
    return out;
}

std::vector<std::string> Model::parameter_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        for (const auto& n : layers_[i]->param_names()) {
            out.push_back("layer" + std::to_string(i) + "." + to_string(layers_[i]->spec().kind) + "." + n);
        }
    }
    return out;
}

std::size_t Model::parameter_offset(std::size_t layer) const {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < layer; ++i) offset += layers_[i]->params().size();
    return offset;
}

std::size_t Model::parameter_scalar_count() const {
    std::size_t n = 0;
    for (const Matrix* p : parameters()) n += static_cast<std::size_t>(p->size());
    return n;
}

Gradients Model::zero_gradients() const {
    Gradients g;
    for (const Matrix* p : parameters()) g.push_back(Matrix::Zero(p->rows(), p->cols()));
    return g;
}

Activation pack_windows(std::span<const Matrix* const> windows, Index channels) {
    if (windows.empty()) throw InputError("forward: empty batch");
    const Index steps = windows.front()->rows();
    const auto batch = static_cast<Index>(windows.size());
    if (steps == 0) throw InputError("forward: empty window");
    Activation a{Matrix(steps * batch, channels), steps, batch};
    for (Index b = 0; b < batch; ++b) {
        const Matrix& w = *windows[static_cast<std::size_t>(b)];
        if (w.rows() != steps || w.cols() != channels) {
            throw ShapeError("forward: window " + std::to_string(b) + " is " + shape_string(w) + ", expected " +
                             std::to_string(steps) + "x" + std::to_string(channels));
        }
        for (Index t = 0; t < steps; ++t) a.values.row(t * batch + b) = w.row(t);
    }
    return a;
}

Matrix Model::forward(std::span<const Matrix* const> windows, const ForwardContext& ctx, Tape* tape) const {
    if (layers_.empty()) throw StateError("forward: model has no layers");
    Activation a = pack_windows(windows, input_channels_);
    if (tape) {
        tape->layers.assign(layers_.size(), LayerTape{});
        tape->batch = a.batch;
        tape->valid = false;
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        a = layers_[i]->forward(a, ctx, tape ? &tape->layers[i] : nullptr);
    }
    if (tape) tape->valid = true;
    return std::move(a.values);
}

Vector Model::predict(const Matrix& window) const {
    const Matrix* w = &window;
    const Matrix out = forward(std::span<const Matrix* const>(&w, 1), ForwardContext{}, nullptr);
    return out.row(0).transpose();
}

Matrix Model::predict_batch(std::span<const Matrix> windows) const {
    std::vector<const Matrix*> ptrs;
    ptrs.reserve(windows.size());
    for (const auto& w : windows) ptrs.push_back(&w);
    return forward(ptrs, ForwardContext{}, nullptr);
}

Gradients Model::backward(const Tape& tape, const Matrix& grad_output) const {
    if (!tape.valid || tape.layers.size() != layers_.size()) {
        throw StateError("backward: no forward pass recorded for this model");
    }
    require_shape(grad_output, tape.batch, output_width(), "backward: output gradient");
    Gradients grads = zero_gradients();
    Activation g{grad_output, 0, tape.batch};
    std::size_t offset = parameter_offset(layers_.size());
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const std::size_t n = layers_[i]->params().size();
        offset -= n;
        g = layers_[i]->backward(g, tape.layers[i], std::span<Matrix>(grads).subspan(offset, n));
    }
    return grads;
}

std::size_t count_parameters(const Model& model) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < model.layer_count(); ++i) n += model.layer(i).analytic_parameter_count();
    return n;
}

} // namespace crdnn::nn
