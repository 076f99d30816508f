#pragma once

#include "crdnn/nn/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace crdnn::train {

enum class OptimizerKind { Adam, Sgd };
const char* to_string(OptimizerKind k);
OptimizerKind optimizer_kind_from_string(const std::string& name);

class Optimizer {
public:
    virtual ~Optimizer() = default;
    // Applies one update with the given learning rate.
    virtual void step(std::vector<nn::Matrix*> params, const nn::Gradients& grads, double learning_rate) = 0;
};

class Sgd final : public Optimizer {
public:
    void step(std::vector<nn::Matrix*> params, const nn::Gradients& grads, double learning_rate) override;
};

class Adam final : public Optimizer {
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
        : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

    void step(std::vector<nn::Matrix*> params, const nn::Gradients& grads, double learning_rate) override;

private:
    double beta1_, beta2_, epsilon_;
    long long t_ = 0;
    std::vector<nn::Matrix> m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double beta1 = 0.9, double beta2 = 0.999);

} // namespace crdnn::train
