#include "crdnn/train/trainer.hpp"

#include "crdnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace crdnn::train {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
    if (!(initial_learning_rate > 0.0)) throw ConfigError("train: initial learning rate must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("train: learning-rate decay must lie in (0, 1]");
    if (max_epochs < 1) throw ConfigError("train: max epochs must be >= 1");
    if (early_stop_patience < 1) throw ConfigError("train: early-stop patience must be >= 1");
    if (dropout && !(*dropout >= 0.0 && *dropout < 1.0)) throw ConfigError("train: dropout must lie in [0, 1)");
}

namespace {
constexpr std::size_t kPredictChunk = 240;
}

nn::Matrix predict_windows(const nn::Model& model, std::span<const nn::Matrix* const> windows) {
    nn::Matrix out(static_cast<nn::Index>(windows.size()), model.output_width());
    std::vector<const nn::Matrix*> ptrs;
    for (std::size_t start = 0; start < windows.size(); start += kPredictChunk) {
        const std::size_t end = std::min(windows.size(), start + kPredictChunk);
        ptrs.assign(windows.begin() + static_cast<std::ptrdiff_t>(start), windows.begin() + static_cast<std::ptrdiff_t>(end));
        // GEMM kernels treat a ragged tail of rows differently from full
        // panels; padding keeps every row on the same code path.
        while (ptrs.size() % kPredictQuantum != 0) ptrs.push_back(ptrs.front());
        const nn::Matrix p = model.forward(ptrs, nn::ForwardContext{}, nullptr);
        out.middleRows(static_cast<nn::Index>(start), static_cast<nn::Index>(end - start)) =
            p.topRows(static_cast<nn::Index>(end - start));
    }
    return out;
}

nn::Matrix predict_probabilities(const nn::Model& model, const data::WindowBatch& batch) {
    std::vector<const nn::Matrix*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& w : batch.windows) ptrs.push_back(&w);
    return predict_windows(model, ptrs);
}

std::vector<int> argmax_rows(const nn::Matrix& probabilities) {
    std::vector<int> out(static_cast<std::size_t>(probabilities.rows()));
    for (nn::Index i = 0; i < probabilities.rows(); ++i) {
        nn::Index k = 0;
        probabilities.row(i).maxCoeff(&k);
        out[static_cast<std::size_t>(i)] = static_cast<int>(k);
    }
    return out;
}

std::vector<int> predict_classes(const nn::Model& model, const data::WindowBatch& batch) {
    return argmax_rows(predict_probabilities(model, batch));
}

double dataset_cost(const nn::Model& model, const data::WindowBatch& batch, const LossConfig& loss_cfg,
                    nn::Matrix* probabilities) {
    nn::Matrix p = predict_probabilities(model, batch);
    const double cost = weighted_cost(p, batch.targets, model, loss_cfg);
    if (probabilities) *probabilities = std::move(p);
    return cost;
}

void set_dropout_rate(nn::Model& model, double rate) {
    auto specs = model.specs();
    for (auto& s : specs) {
        if (s.kind == nn::LayerKind::Dropout) s.rate = rate;
    }
    nn::Model rebuilt(model.input_channels(), specs);
    auto dst = rebuilt.parameters();
    const auto src = std::as_const(model).parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] = *src[i];
    model = std::move(rebuilt);
}

std::vector<double> input_weight_magnitudes(const nn::Model& model) {
    const auto& first = model.layer(0);
    const auto c = static_cast<std::size_t>(model.input_channels());
    std::vector<double> sum(c, 0.0);
    std::vector<std::size_t> count(c, 0);
    if (first.params().empty()) return sum;
    const nn::Matrix& w = first.params()[0];
    for (nn::Index j = 0; j < w.cols(); ++j) {
        const auto ch = static_cast<std::size_t>(j) % c;
        sum[ch] += w.col(j).cwiseAbs().sum();
        count[ch] += static_cast<std::size_t>(w.rows());
    }
    for (std::size_t k = 0; k < c; ++k) sum[k] /= static_cast<double>(std::max<std::size_t>(1, count[k]));
    return sum;
}

TrainReport train(nn::Model& model, const data::WindowBatch& train_set, const data::WindowBatch& test_set,
                  const TrainConfig& cfg, const LossConfig& loss_cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    loss_cfg.validate();
    if (train_set.size() == 0) throw InputError("train: empty training set");
    if (test_set.size() == 0) throw InputError("train: empty test set");
    if (cfg.dropout) set_dropout_rate(model, *cfg.dropout);

    std::mt19937_64 shuffle_rng(cfg.seed);
    std::mt19937_64 dropout_rng(cfg.seed ^ 0xD1B54A32D192ED03ull);
    auto optimizer = make_optimizer(cfg.optimizer, cfg.beta1, cfg.beta2);
    const bool track_train = cfg.track_train_accuracy || cfg.stop_at_train_accuracy.has_value();

    TrainReport report;
    report.parameter_count = nn::count_parameters(model);
    report.best_test_cost = std::numeric_limits<double>::infinity();
    nn::Model best = model;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<const nn::Matrix*> batch_windows;
    nn::Matrix batch_targets;

    double lr = cfg.initial_learning_rate;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double cost_sum = 0.0;
        std::size_t batches = 0;
        const nn::ForwardContext ctx{true, &dropout_rng};
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch_windows.clear();
            batch_targets.resize(static_cast<nn::Index>(end - start), train_set.targets.cols());
            for (std::size_t i = start; i < end; ++i) {
                batch_windows.push_back(&train_set.windows[order[i]]);
                batch_targets.row(static_cast<nn::Index>(i - start)) = train_set.targets.row(static_cast<nn::Index>(order[i]));
            }
            BatchEvaluation e;
            try {
                e = evaluate_batch(model, batch_windows, batch_targets, loss_cfg, ctx);
            } catch (const NumericError& err) {
                std::ostringstream os;
                os << "training diverged at epoch " << epoch << " (learning rate " << lr << "): " << err.what();
                throw NumericError(os.str());
            }
            if (!std::isfinite(e.cost)) {
                std::ostringstream os;
                os << "training diverged at epoch " << epoch << " (learning rate " << lr << "): cost is not finite";
                throw NumericError(os.str());
            }
            optimizer->step(model.parameters(), e.gradients, lr);
            cost_sum += e.cost;
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.learning_rate = lr;
        rec.train_cost = cost_sum / static_cast<double>(batches);
        nn::Matrix test_probs;
        rec.test_cost = dataset_cost(model, test_set, loss_cfg, &test_probs);
        if (!std::isfinite(rec.test_cost)) {
            std::ostringstream os;
            os << "training diverged at epoch " << epoch << " (learning rate " << lr << "): test cost is not finite";
            throw NumericError(os.str());
        }
        rec.test_accuracy = metrics::accuracy(metrics::confusion(argmax_rows(test_probs), test_set.labels));
        if (track_train) {
            rec.train_accuracy = metrics::accuracy(metrics::confusion(predict_classes(model, train_set), train_set.labels));
        }
        report.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.test_cost < report.best_test_cost) {
            report.best_test_cost = rec.test_cost;
            report.best_epoch = epoch;
            best = model;
        }
        report.stop_epoch = epoch;
        if (cfg.stop_at_train_accuracy && rec.train_accuracy && *rec.train_accuracy >= *cfg.stop_at_train_accuracy) {
            report.stop_reason = "target_accuracy";
            break;
        }
        if (epoch - report.best_epoch >= cfg.early_stop_patience) {
            report.stop_reason = "early_stop";
            break;
        }
        lr *= cfg.lr_decay;
    }
    if (report.stop_reason.empty()) report.stop_reason = "max_epochs";
    if (cfg.restore_best) model = best;

    report.final_metrics = metrics::evaluate(predict_classes(model, test_set), test_set.labels);
    return report;
}

} // namespace crdnn::train
