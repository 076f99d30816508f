#include "crdnn/train/loss.hpp"

#include "crdnn/errors.hpp"

#include <algorithm>
#include <cmath>

namespace crdnn::train {

const char* to_string(RegularizedLayers r) {
    return r == RegularizedLayers::Head ? "head" : "all_dense";
}

RegularizedLayers regularized_layers_from_string(const std::string& name) {
    if (name == "head") return RegularizedLayers::Head;
    if (name == "all_dense") return RegularizedLayers::AllDense;
    throw ConfigError("unknown regularized layer selector '" + name + "' (expected head or all_dense)");
}

void LossConfig::validate() const {
    for (double w : class_weights) {
        if (!(w > 0.0)) throw ConfigError("loss: class weights must be strictly positive");
    }
    if (!(l2_lambda >= 0.0)) throw ConfigError("loss: l2 lambda must be >= 0");
}

std::array<double, 3> default_class_weights() { return {1.0, 4.0, 7.0}; }

std::vector<std::size_t> regularized_parameters(const Model& model, RegularizedLayers which) {
    std::vector<std::size_t> heads;
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const auto kind = model.layer(i).spec().kind;
        if (kind == nn::LayerKind::DenseHead || kind == nn::LayerKind::DensePerStep) {
            const std::size_t weight = model.parameter_offset(i);
            all.push_back(weight);
            if (kind == nn::LayerKind::DenseHead) heads.push_back(weight);
        }
    }
    if (which == RegularizedLayers::AllDense) return all;
    if (heads.size() > 2) heads.erase(heads.begin(), heads.end() - 2);
    return heads;
}

double l2_penalty_sum(const Model& model, const LossConfig& config) {
    const auto params = model.parameters();
    double sum = 0.0;
    for (auto i : regularized_parameters(model, config.regularized)) sum += params[i]->squaredNorm();
    return sum;
}

namespace {

void check_inputs(const Matrix& predictions, const Matrix& targets) {
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
        throw ShapeError("cost: predictions " + nn::shape_string(predictions) + " vs targets " +
                         nn::shape_string(targets));
    }
    if (predictions.rows() == 0) throw InputError("cost: empty batch");
    if (predictions.cols() != 3) throw ShapeError("cost: expected 3 classes");
    for (nn::Index i = 0; i < predictions.rows(); ++i) {
        if (!predictions.row(i).allFinite()) {
            throw NumericError("cost: non-finite prediction for sample " + std::to_string(i));
        }
    }
}

double clamp_probability(double h) { return std::clamp(h, kProbabilityClamp, 1.0 - kProbabilityClamp); }

} // namespace

double data_cost(const Matrix& predictions, const Matrix& targets, const LossConfig& config) {
    check_inputs(predictions, targets);
    double total = 0.0;
    for (nn::Index i = 0; i < predictions.rows(); ++i) {
        for (nn::Index k = 0; k < 3; ++k) {
            const double h = clamp_probability(predictions(i, k));
            const double y = targets(i, k);
            total += (-y * std::log(h) - (1.0 - y) * std::log(1.0 - h)) * config.class_weights[static_cast<std::size_t>(k)];
        }
    }
    return total / static_cast<double>(predictions.rows());
}

double weighted_cost(const Matrix& predictions, const Matrix& targets, const Model& model, const LossConfig& config) {
    config.validate();
    const double data = data_cost(predictions, targets, config);
    const auto m = static_cast<double>(predictions.rows());
    return data + config.l2_lambda / (2.0 * m) * l2_penalty_sum(model, config);
}

Matrix cost_gradient(const Matrix& predictions, const Matrix& targets, const LossConfig& config) {
    check_inputs(predictions, targets);
    const auto m = static_cast<double>(predictions.rows());
    Matrix g(predictions.rows(), predictions.cols());
    for (nn::Index i = 0; i < predictions.rows(); ++i) {
        for (nn::Index k = 0; k < 3; ++k) {
            const double raw = predictions(i, k);
            const double y = targets(i, k);
            const double w = config.class_weights[static_cast<std::size_t>(k)];
            // The clamp is flat outside its range, so the gradient vanishes there.
            if (raw < kProbabilityClamp || raw > 1.0 - kProbabilityClamp) {
                g(i, k) = 0.0;
            } else {
                g(i, k) = w * (-y / raw + (1.0 - y) / (1.0 - raw)) / m;
            }
        }
    }
    return g;
}

void add_l2_gradient(const Model& model, const LossConfig& config, std::size_t batch, Gradients& grads) {
    if (config.l2_lambda == 0.0) return;
    const auto params = model.parameters();
    const double scale = config.l2_lambda / static_cast<double>(batch);
    for (auto i : regularized_parameters(model, config.regularized)) grads[i] += scale * *params[i];
}

BatchEvaluation evaluate_batch(const Model& model, std::span<const Matrix* const> windows, const Matrix& targets,
                               const LossConfig& config, const nn::ForwardContext& ctx) {
    nn::Tape tape;
    BatchEvaluation e;
    e.predictions = model.forward(windows, ctx, &tape);
    e.cost = weighted_cost(e.predictions, targets, model, config);
    e.gradients = model.backward(tape, cost_gradient(e.predictions, targets, config));
    add_l2_gradient(model, config, windows.size(), e.gradients);
    return e;
}

Gradients model_backward(const Model& model, const Matrix& window, const Vector& target, const LossConfig& config) {
    const Matrix* w = &window;
    return evaluate_batch(model, std::span<const Matrix* const>(&w, 1), target.transpose(), config, nn::ForwardContext{})
        .gradients;
}

} // namespace crdnn::train
