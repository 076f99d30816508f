#include "crdnn/nn/layers.hpp"

#include "crdnn/errors.hpp"
#include "crdnn/nn/ops.hpp"

#include <cmath>

namespace crdnn::nn {

const char* to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::Conv1D: return "conv1d";
    case LayerKind::DensePerStep: return "dense_per_step";
    case LayerKind::Lstm: return "lstm";
    case LayerKind::BiLstm: return "bilstm";
    case LayerKind::DenseHead: return "dense_head";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Relu: return "relu";
    case LayerKind::Softmax: return "softmax";
    }
    return "unknown";
}

LayerKind layer_kind_from_string(const std::string& name) {
    for (auto k : {LayerKind::Conv1D, LayerKind::DensePerStep, LayerKind::Lstm, LayerKind::BiLstm,
                   LayerKind::DenseHead, LayerKind::Dropout, LayerKind::Relu, LayerKind::Softmax}) {
        if (name == to_string(k)) return k;
    }
    throw ConfigError("unknown layer kind '" + name + "'");
}

LayerSpec LayerSpec::conv1d(int filters, int kernel) {
    LayerSpec s;
    s.kind = LayerKind::Conv1D;
    s.filters = filters;
    s.kernel = kernel;
    return s;
}

LayerSpec LayerSpec::dense_per_step(int units) {
    LayerSpec s;
    s.kind = LayerKind::DensePerStep;
    s.units = units;
    return s;
}

LayerSpec LayerSpec::lstm(int units, bool return_sequences) {
    LayerSpec s;
    s.kind = LayerKind::Lstm;
    s.units = units;
    s.return_sequences = return_sequences;
    return s;
}

LayerSpec LayerSpec::bilstm(int units, bool return_sequences) {
    LayerSpec s = lstm(units, return_sequences);
    s.kind = LayerKind::BiLstm;
    return s;
}

LayerSpec LayerSpec::dense_head(int units) {
    LayerSpec s;
    s.kind = LayerKind::DenseHead;
    s.units = units;
    return s;
}

LayerSpec LayerSpec::dropout(double rate) {
    LayerSpec s;
    s.kind = LayerKind::Dropout;
    s.rate = rate;
    return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::softmax() {
    LayerSpec s;
    s.kind = LayerKind::Softmax;
    return s;
}

void LayerSpec::validate() const {
    switch (kind) {
    case LayerKind::Conv1D:
        if (filters < 1) throw ConfigError("conv1d: filters must be >= 1");
        if (kernel < 1 || kernel % 2 == 0) throw ConfigError("conv1d: kernel width must be odd and >= 1");
        break;
    case LayerKind::DensePerStep:
    case LayerKind::DenseHead:
    case LayerKind::Lstm:
    case LayerKind::BiLstm:
        if (units < 1) throw ConfigError(std::string(to_string(kind)) + ": units must be >= 1");
        break;
    case LayerKind::Dropout:
        if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0, 1)");
        break;
    case LayerKind::Relu:
    case LayerKind::Softmax:
        break;
    }
}

double glorot_limit(Index fan_in, Index fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Layer::Layer(LayerSpec spec, Index input_width, bool input_is_sequence)
    : spec_(spec), input_width_(input_width), input_is_sequence_(input_is_sequence) {
    spec_.validate();
    if (input_width_ < 1) throw ConfigError(std::string(to_string(spec_.kind)) + ": input width must be >= 1");
}

void Layer::add_param(std::string name, Index rows, Index cols) {
    params_.push_back(Matrix::Zero(rows, cols));
    names_.push_back(std::move(name));
}

void Layer::check_input(const Activation& in) const {
    if (in.width() != input_width_ || in.is_sequence() != input_is_sequence_) {
        throw ShapeError(std::string(to_string(spec_.kind)) + ": unexpected input " + shape_string(in.values));
    }
}

void Layer::initialize(std::mt19937_64&, const InitOptions&) {}

namespace {

void fill_uniform(Matrix& m, double limit, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

class Conv1dLayer final : public Layer {
public:
    Conv1dLayer(const LayerSpec& spec, Index input_width) : Layer(spec, input_width, true) {
        add_param("weight", spec.filters, spec.kernel * input_width);
        add_param("bias", 1, spec.filters);
    }

    Index output_width() const override { return spec_.filters; }

    Activation forward(const Activation& in, const ForwardContext&, LayerTape* tape) const override {
        check_input(in);
        if (tape) tape->saved = {in.values};
        return {conv1d_batched(in.values, in.steps, in.batch, params_[0], params_[1].data(), spec_.kernel),
                in.steps, in.batch};
    }

    Activation backward(const Activation& grad_out, const LayerTape& tape,
                        std::span<Matrix> grads) const override {
        return {conv1d_batched_backward(tape.saved[0], grad_out.values, grad_out.steps, grad_out.batch,
                                        params_[0], spec_.kernel, grads[0], grads[1].data()),
                grad_out.steps, grad_out.batch};
    }

    void initialize(std::mt19937_64& rng, const InitOptions&) override {
        fill_uniform(params_[0], glorot_limit(spec_.kernel * input_width_, spec_.filters), rng);
        params_[1].setZero();
    }

    std::size_t analytic_parameter_count() const override {
        return static_cast<std::size_t>(input_width_ * spec_.kernel * spec_.filters + spec_.filters);
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1dLayer>(*this); }
};

// Shared by DensePerStep (one row per timestep) and DenseHead (one row per window).
class DenseLayer final : public Layer {
public:
    DenseLayer(const LayerSpec& spec, Index input_width, bool input_is_sequence)
        : Layer(spec, input_width, input_is_sequence) {
        add_param("weight", spec.units, input_width);
        add_param("bias", 1, spec.units);
    }

    Index output_width() const override { return spec_.units; }

    Activation forward(const Activation& in, const ForwardContext&, LayerTape* tape) const override {
        check_input(in);
        if (tape) tape->saved = {in.values};
        Activation out{Matrix(in.values.rows(), spec_.units), in.steps, in.batch};
        out.values.noalias() = in.values * params_[0].transpose();
        out.values.rowwise() += params_[1].row(0);
        return out;
    }

    Activation backward(const Activation& grad_out, const LayerTape& tape,
                        std::span<Matrix> grads) const override {
        grads[0].noalias() += grad_out.values.transpose() * tape.saved[0];
        grads[1] += grad_out.values.colwise().sum();
        Activation grad_in{Matrix(grad_out.values.rows(), input_width_), grad_out.steps, grad_out.batch};
        grad_in.values.noalias() = grad_out.values * params_[0];
        return grad_in;
    }

    void initialize(std::mt19937_64& rng, const InitOptions&) override {
        fill_uniform(params_[0], glorot_limit(input_width_, spec_.units), rng);
        params_[1].setZero();
    }

    std::size_t analytic_parameter_count() const override {
        return static_cast<std::size_t>(input_width_ * spec_.units + spec_.units);
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<DenseLayer>(*this); }
};

constexpr const char* kGateNames[4] = {"candidate", "update", "forget", "output"};

// One or two LSTM directions. Parameter order per direction: four gate
// weights (candidate, update, forget, output) then four gate biases.
class RecurrentLayer final : public Layer {
public:
    RecurrentLayer(const LayerSpec& spec, Index input_width) : Layer(spec, input_width, true) {
        const Index h = spec.units;
        for (int d = 0; d < directions(); ++d) {
            const std::string prefix = directions() == 1 ? "" : (d == 0 ? "fwd." : "bwd.");
            for (const char* gate : kGateNames) add_param(prefix + "w_" + gate, h, h + input_width);
            for (const char* gate : kGateNames) add_param(prefix + "b_" + gate, 1, h);
        }
    }

    int directions() const { return spec_.kind == LayerKind::BiLstm ? 2 : 1; }
    Index output_width() const override { return directions() * spec_.units; }
    bool output_is_sequence() const override { return spec_.return_sequences; }

    Activation forward(const Activation& in, const ForwardContext&, LayerTape* tape) const override {
        check_input(in);
        const Index h = spec_.units;
        const Index steps = in.steps;
        const Index batch = in.batch;
        Matrix seq(steps * batch, directions() * h);
        if (tape) {
            tape->saved.assign(1, in.values);
            tape->traces.clear();
        }
        for (int d = 0; d < directions(); ++d) {
            LstmTrace trace;
            seq.middleCols(d * h, h) =
                lstm_batched(in.values, steps, batch, fused(d), d == 1, nullptr, nullptr, &trace);
            if (tape) tape->traces.push_back(std::move(trace));
        }
        if (spec_.return_sequences) return {std::move(seq), steps, batch};

        // Readout: the forward direction's last step, the backward direction's first.
        Activation out{Matrix(batch, directions() * h), 0, batch};
        out.values.leftCols(h) = seq.block((steps - 1) * batch, 0, batch, h);
        if (directions() == 2) out.values.rightCols(h) = seq.block(0, h, batch, h);
        return out;
    }

    Activation backward(const Activation& grad_out, const LayerTape& tape,
                        std::span<Matrix> grads) const override {
        const Index h = spec_.units;
        const Matrix& x = tape.saved[0];
        const Index batch = spec_.return_sequences ? grad_out.batch : grad_out.values.rows();
        const Index steps = x.rows() / batch;

        Matrix grad_seq;
        if (spec_.return_sequences) {
            grad_seq = grad_out.values;
        } else {
            grad_seq = Matrix::Zero(steps * batch, directions() * h);
            grad_seq.block((steps - 1) * batch, 0, batch, h) = grad_out.values.leftCols(h);
            if (directions() == 2) grad_seq.block(0, h, batch, h) = grad_out.values.rightCols(h);
        }

        Activation grad_in{Matrix::Zero(x.rows(), input_width_), steps, batch};
        for (int d = 0; d < directions(); ++d) {
            const LstmTrace& trace = tape.traces[static_cast<std::size_t>(d)];
            FusedLstmGrad g;
            const Matrix grad_act = grad_seq.middleCols(d * h, h);
            grad_in.values += lstm_batched_backward(x, steps, batch, fused(d), d == 1, trace, grad_act, g);
            auto slice = grads.subspan(static_cast<std::size_t>(8 * d), 8);
            unfuse_lstm_grad(g, {&slice[0], &slice[1], &slice[2], &slice[3]},
                             {slice[4].data(), slice[5].data(), slice[6].data(), slice[7].data()});
        }
        return grad_in;
    }

    void initialize(std::mt19937_64& rng, const InitOptions& options) override {
        const double limit = glorot_limit(spec_.units + input_width_, spec_.units);
        for (int d = 0; d < directions(); ++d) {
            for (int g = 0; g < 4; ++g) fill_uniform(params_[8 * d + g], limit, rng);
            for (int g = 0; g < 4; ++g) params_[8 * d + 4 + g].setZero();
            params_[8 * d + 6].setConstant(options.forget_bias);
        }
    }

    std::size_t analytic_parameter_count() const override {
        const auto h = static_cast<std::size_t>(spec_.units);
        const auto in = static_cast<std::size_t>(input_width_);
        return static_cast<std::size_t>(directions()) * 4 * ((in + h) * h + h);
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<RecurrentLayer>(*this); }

private:
    FusedLstm fused(int d) const {
        const Matrix* p = &params_[static_cast<std::size_t>(8 * d)];
        return fuse_lstm({p, p + 1, p + 2, p + 3}, {p[4].data(), p[5].data(), p[6].data(), p[7].data()});
    }
};

class DropoutLayer final : public Layer {
public:
    DropoutLayer(const LayerSpec& spec, Index input_width, bool input_is_sequence)
        : Layer(spec, input_width, input_is_sequence) {}

    // Inverted dropout: kept units are scaled by 1/(1-rate) during training, so
    // inference is the identity.
    Activation forward(const Activation& in, const ForwardContext& ctx, LayerTape* tape) const override {
        check_input(in);
        if (!ctx.training || spec_.rate == 0.0) {
            if (tape) tape->saved.clear();
            return in;
        }
        if (!ctx.rng) throw StateError("dropout: training mode requires an RNG");
        const double keep = 1.0 - spec_.rate;
        std::bernoulli_distribution draw(keep);
        Matrix mask(in.values.rows(), in.values.cols());
        for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = draw(*ctx.rng) ? 1.0 / keep : 0.0;
        Activation out{in.values.cwiseProduct(mask), in.steps, in.batch};
        if (tape) tape->saved = {std::move(mask)};
        return out;
    }

    Activation backward(const Activation& grad_out, const LayerTape& tape, std::span<Matrix>) const override {
        if (tape.saved.empty()) return grad_out;
        return {grad_out.values.cwiseProduct(tape.saved[0]), grad_out.steps, grad_out.batch};
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<DropoutLayer>(*this); }
};

class ReluLayer final : public Layer {
public:
    ReluLayer(const LayerSpec& spec, Index input_width, bool input_is_sequence)
        : Layer(spec, input_width, input_is_sequence) {}

    Activation forward(const Activation& in, const ForwardContext&, LayerTape* tape) const override {
        check_input(in);
        Activation out{in.values.cwiseMax(0.0), in.steps, in.batch};
        if (tape) tape->saved = {out.values};
        return out;
    }

    Activation backward(const Activation& grad_out, const LayerTape& tape, std::span<Matrix>) const override {
        const Matrix& y = tape.saved[0];
        return {(y.array() > 0.0).select(grad_out.values, 0.0), grad_out.steps, grad_out.batch};
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<ReluLayer>(*this); }
};

class SoftmaxLayer final : public Layer {
public:
    SoftmaxLayer(const LayerSpec& spec, Index input_width, bool input_is_sequence)
        : Layer(spec, input_width, input_is_sequence) {
        if (input_is_sequence) throw ConfigError("softmax: expects per-window input, got a sequence");
    }

    Activation forward(const Activation& in, const ForwardContext&, LayerTape* tape) const override {
        check_input(in);
        Matrix p = in.values;
        for (Index r = 0; r < p.rows(); ++r) {
            auto row = p.row(r);
            row.array() = (row.array() - row.maxCoeff()).exp();
            row /= row.sum();
        }
        if (tape) tape->saved = {p};
        return {std::move(p), in.steps, in.batch};
    }

    Activation backward(const Activation& grad_out, const LayerTape& tape, std::span<Matrix>) const override {
        const Matrix& p = tape.saved[0];
        const Eigen::VectorXd dot = grad_out.values.cwiseProduct(p).rowwise().sum();
        Matrix g = grad_out.values;
        g.colwise() -= dot;
        return {g.cwiseProduct(p), grad_out.steps, grad_out.batch};
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<SoftmaxLayer>(*this); }
};

} // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, Index input_width, bool input_is_sequence) {
    spec.validate();
    auto need_sequence = [&](const char* what) {
        if (!input_is_sequence) {
            throw ConfigError(std::string(what) + " needs a sequence input but the previous layer emits one "
                                                  "vector per window");
        }
    };
    switch (spec.kind) {
    case LayerKind::Conv1D:
        need_sequence("conv1d");
        return std::make_unique<Conv1dLayer>(spec, input_width);
    case LayerKind::DensePerStep:
        need_sequence("dense_per_step");
        return std::make_unique<DenseLayer>(spec, input_width, true);
    case LayerKind::Lstm:
    case LayerKind::BiLstm:
        need_sequence(to_string(spec.kind));
        return std::make_unique<RecurrentLayer>(spec, input_width);
    case LayerKind::DenseHead:
        if (input_is_sequence) {
            throw ConfigError("dense_head needs one vector per window; end the recurrent stack with "
                              "return_sequences = false");
        }
        return std::make_unique<DenseLayer>(spec, input_width, false);
    case LayerKind::Dropout: return std::make_unique<DropoutLayer>(spec, input_width, input_is_sequence);
    case LayerKind::Relu: return std::make_unique<ReluLayer>(spec, input_width, input_is_sequence);
    case LayerKind::Softmax: return std::make_unique<SoftmaxLayer>(spec, input_width, input_is_sequence);
    }
    throw ConfigError("unknown layer kind");
}

} // namespace crdnn::nn
