#include "crdnn/train/optimizer.hpp"

#include "crdnn/errors.hpp"

#include <cmath>

namespace crdnn::train {

const char* to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

OptimizerKind optimizer_kind_from_string(const std::string& name) {
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "sgd") return OptimizerKind::Sgd;
    throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

namespace {
void check(const std::vector<nn::Matrix*>& params, const nn::Gradients& grads) {
    if (params.size() != grads.size()) throw ShapeError("optimizer: gradient set does not match parameters");
}
} // namespace

void Sgd::step(std::vector<nn::Matrix*> params, const nn::Gradients& grads, double lr) {
    check(params, grads);
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr * grads[i];
}

void Adam::step(std::vector<nn::Matrix*> params, const nn::Gradients& grads, double lr) {
    check(params, grads);
    if (m_.empty()) {
        for (const auto& g : grads) {
            m_.push_back(nn::Matrix::Zero(g.rows(), g.cols()));
            v_.push_back(nn::Matrix::Zero(g.rows(), g.cols()));
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
        params[i]->array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + epsilon_);
    }
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double beta1, double beta2) {
    if (kind == OptimizerKind::Sgd) return std::make_unique<Sgd>();
    return std::make_unique<Adam>(beta1, beta2);
}

} // namespace crdnn::train
