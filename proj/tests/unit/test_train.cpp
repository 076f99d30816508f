#include "doctest.h"
#include "fixtures.hpp"
#include "helpers.hpp"

#include "crdnn/errors.hpp"
#include "crdnn/train/grid.hpp"
#include "crdnn/train/loss.hpp"
#include "crdnn/train/optimizer.hpp"
#include "crdnn/train/report.hpp"
#include "crdnn/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace crdnn;
using namespace crdnn::train;
using nn::Index;
using testing_util::central_difference;
using testing_util::random_matrix;
using testing_util::relative_error;

namespace {

Matrix random_probabilities(Index m, std::mt19937_64& rng) {
    Matrix p = random_matrix(m, 3, rng, 2.0);
    for (Index i = 0; i < m; ++i) p.row(i) = nn::softmax(p.row(i).transpose()).transpose();
    return p;
}

Matrix random_targets(Index m, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> cls(0, 2);
    Matrix y = Matrix::Zero(m, 3);
    for (Index i = 0; i < m; ++i) y(i, cls(rng)) = 1.0;
    return y;
}

Model small_model(std::uint64_t seed = 3) {
    nn::CrdnnConfig cfg;
    cfg.arch = nn::RecurrentArch::OneLstm;
    cfg.conv_filters = 4;
    cfg.reduce_units = {6, 6};
    cfg.rnn_units = {6, 6};
    cfg.head_units = 6;
    Model m = Model::crdnn(cfg);
    m.initialize(seed);
    return m;
}

// Unweighted two-sided log loss written out term by term.
double unweighted_oracle(const Matrix& h, const Matrix& y) {
    double total = 0.0;
    for (Index i = 0; i < h.rows(); ++i) {
        for (Index k = 0; k < 3; ++k) {
            const double p = std::min(std::max(h(i, k), 1e-12), 1.0 - 1e-12);
            total += -y(i, k) * std::log(p) - (1.0 - y(i, k)) * std::log(1.0 - p);
        }
    }
    return total / static_cast<double>(h.rows());
}

} // namespace

TEST_CASE("weighted_cost: single uniform prediction") {
    Matrix h = Matrix::Constant(1, 3, 1.0 / 3.0);
    Matrix y(1, 3);
    y << 0, 1, 0;
    LossConfig cfg;
    cfg.l2_lambda = 0.0;
    Model m = small_model();
    // -log(2/3) * 1 - log(1/3) * 4 - log(2/3) * 7, evaluated to 30 digits offline.
    CHECK(std::abs(weighted_cost(h, y, m, cfg) - 7.6381700195377538214050858714) <= 1e-12);
}

TEST_CASE("weighted_cost: perfect prediction costs nothing") {
    std::mt19937_64 rng(1);
    Matrix y = random_targets(10, rng);
    LossConfig cfg;
    cfg.l2_lambda = 0.0;
    CHECK(weighted_cost(y, y, small_model(), cfg) <= 1e-9);
}

TEST_CASE("weighted_cost: unit weights reduce to the unweighted loss") {
    std::mt19937_64 rng(2);
    Matrix h = random_probabilities(17, rng);
    Matrix y = random_targets(17, rng);
    LossConfig cfg;
    cfg.l2_lambda = 0.0;
    cfg.class_weights = {1.0, 1.0, 1.0};
    CHECK(std::abs(weighted_cost(h, y, small_model(), cfg) - unweighted_oracle(h, y)) <= 1e-12);
}

TEST_CASE("default class weights follow class order") {
    const auto w = default_class_weights();
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 4.0);
    CHECK(w[2] == 7.0);
    CHECK(LossConfig{}.class_weights == w);
}

TEST_CASE("scaling class weights scales the loss and its gradient") {
    std::mt19937_64 rng(3);
    Matrix h = random_probabilities(9, rng);
    Matrix y = random_targets(9, rng);
    LossConfig a;
    a.l2_lambda = 0.0;
    LossConfig b = a;
    for (auto& w : b.class_weights) w *= 2.5;
    Model m = small_model();
    CHECK(std::abs(weighted_cost(h, y, m, b) - 2.5 * weighted_cost(h, y, m, a)) <= 1e-12);
    Matrix ga = cost_gradient(h, y, a);
    Matrix gb = cost_gradient(h, y, b);
    CHECK((gb - 2.5 * ga).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("L2 term never lowers the cost") {
    std::mt19937_64 rng(4);
    Model m = small_model();
    for (int trial = 0; trial < 10; ++trial) {
        Matrix h = random_probabilities(5, rng);
        Matrix y = random_targets(5, rng);
        LossConfig off;
        off.l2_lambda = 0.0;
        LossConfig on;
        on.l2_lambda = 0.1;
        CHECK(weighted_cost(h, y, m, on) >= weighted_cost(h, y, m, off));
    }
}

TEST_CASE("L2 selection: head mode picks the two classification weight matrices") {
    Model m = Model::crdnn({});
    const auto idx = regularized_parameters(m, RegularizedLayers::Head);
    REQUIRE(idx.size() == 2);
    const auto params = std::as_const(m).parameters();
    CHECK(params[idx[0]]->rows() == 32);
    CHECK(params[idx[0]]->cols() == 32);
    CHECK(params[idx[1]]->rows() == 3);
    CHECK(params[idx[1]]->cols() == 32);
    CHECK(regularized_parameters(m, RegularizedLayers::AllDense).size() == 4);
}

TEST_CASE("weighted_cost: non-finite prediction names the sample") {
    Matrix h = Matrix::Constant(4, 3, 1.0 / 3.0);
    h(2, 1) = std::numeric_limits<double>::quiet_NaN();
    Matrix y = Matrix::Zero(4, 3);
    y.col(0).setOnes();
    try {
        weighted_cost(h, y, small_model(), LossConfig{});
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("sample 2") != std::string::npos);
    }
}

TEST_CASE("loss config validation") {
    LossConfig c;
    c.class_weights = {1.0, 0.0, 7.0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    LossConfig d;
    d.l2_lambda = -1.0;
    CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("cost_gradient matches finite differences on the predictions") {
    std::mt19937_64 rng(5);
    Matrix h = random_probabilities(6, rng);
    Matrix y = random_targets(6, rng);
    LossConfig cfg;
    cfg.l2_lambda = 0.0;
    Model m = small_model();
    Matrix g = cost_gradient(h, y, cfg);
    for (Index i = 0; i < h.size(); ++i) {
        const double num = central_difference(h.data() + i, [&] { return weighted_cost(h, y, m, cfg); }, 1e-7);
        CHECK(relative_error(g.data()[i], num) < 1e-6);
    }
}

TEST_CASE("one small full-batch SGD step lowers J") {
    const auto sets = testing_util::small_window_sets(9, 50);
    Model m = small_model(8);
    LossConfig cfg;
    std::vector<const Matrix*> ptrs;
    for (const auto& w : sets.train.windows) ptrs.push_back(&w);
    const nn::ForwardContext inference{};
    auto before = evaluate_batch(m, ptrs, sets.train.targets, cfg, inference);
    Sgd sgd;
    sgd.step(m.parameters(), before.gradients, 1e-3);
    auto after = evaluate_batch(m, ptrs, sets.train.targets, cfg, inference);
    CHECK(after.cost < before.cost);
}

TEST_CASE("adam: first step moves each parameter by about the learning rate") {
    Matrix p = Matrix::Zero(2, 2);
    nn::Gradients g{Matrix::Constant(2, 2, 3.0)};
    Adam adam;
    adam.step({&p}, g, 0.01);
    CHECK(p.maxCoeff() == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p.minCoeff() == doctest::Approx(-0.01).epsilon(1e-6));
}

TEST_CASE("train: input validation") {
    Model m = small_model();
    data::WindowBatch empty;
    const auto sets = testing_util::small_window_sets(9, 50);
    CHECK_THROWS_AS(train::train(m, empty, sets.test, TrainConfig{}, LossConfig{}), InputError);
    TrainConfig bad;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = TrainConfig{};
    bad.initial_learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("train: non-finite cost reports epoch and learning rate") {
    auto sets = testing_util::small_window_sets(9, 50);
    sets.train.windows[3](0, 0) = std::numeric_limits<double>::quiet_NaN();
    Model m = small_model();
    TrainConfig cfg;
    cfg.max_epochs = 2;
    try {
        train::train(m, sets.train, sets.test, cfg, LossConfig{});
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("epoch 1") != std::string::npos);
        CHECK(msg.find("learning rate") != std::string::npos);
    }
}

TEST_CASE("train: same seed gives a bit-identical trajectory") {
    const auto sets = testing_util::small_window_sets(9, 25);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.initial_learning_rate = 1e-3;
    cfg.seed = 42;
    Model a = small_model(9);
    Model b = small_model(9);
    auto ra = train::train(a, sets.train, sets.test, cfg, LossConfig{});
    auto rb = train::train(b, sets.train, sets.test, cfg, LossConfig{});
    CHECK(render_report_lines(ra) == render_report_lines(rb));
    const auto pa = std::as_const(a).parameters();
    const auto pb = std::as_const(b).parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);
}

TEST_CASE("train: patience stop and best-epoch restoration") {
    const auto sets = testing_util::small_window_sets(9, 25);
    TrainConfig cfg;
    cfg.max_epochs = 200;
    cfg.early_stop_patience = 4;
    cfg.initial_learning_rate = 3e-2;
    cfg.lr_decay = 1.0;
    cfg.dropout = 0.0;
    LossConfig loss;
    loss.l2_lambda = 0.0;
    Model m = small_model(10);
    auto r = train::train(m, sets.train, sets.test, cfg, loss);
    REQUIRE(r.stop_reason == "early_stop");
    CHECK(r.stop_epoch == r.best_epoch + cfg.early_stop_patience);
    double min_cost = std::numeric_limits<double>::infinity();
    for (const auto& e : r.epochs) min_cost = std::min(min_cost, e.test_cost);
    CHECK(r.best_test_cost == min_cost);
    CHECK(dataset_cost(m, sets.test, loss) == min_cost);
    for (std::size_t i = 1; i < r.epochs.size(); ++i)
        CHECK(r.epochs[i].learning_rate == r.epochs[i - 1].learning_rate);
}

TEST_CASE("train: learning rate decays once per epoch") {
    const auto sets = testing_util::small_window_sets(9, 50);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    Model m = small_model();
    auto r = train::train(m, sets.train, sets.test, cfg, LossConfig{});
    REQUIRE(r.epochs.size() == 3);
    CHECK(r.epochs[0].learning_rate == 1e-4);
    CHECK(r.epochs[1].learning_rate == 1e-4 * 0.97);
    CHECK(r.epochs[2].learning_rate == 1e-4 * 0.97 * 0.97);
    CHECK(r.stop_epoch <= cfg.max_epochs);
}

TEST_CASE("report lines round-trip") {
    const auto sets = testing_util::small_window_sets(9, 50);
    TrainConfig cfg;
    cfg.max_epochs = 2;
    cfg.track_train_accuracy = true;
    Model m = small_model();
    auto r = train::train(m, sets.train, sets.test, cfg, LossConfig{});
    const std::string text = render_report_lines(r);
    auto back = parse_report_lines(text);
    CHECK(render_report_lines(back) == text);
    CHECK(back.epochs.size() == 2);
    CHECK(back.epochs[0].train_accuracy.has_value());
    const std::string curve = render_cost_curve(r);
    CHECK(curve.rfind("epoch\t", 0) == 0);
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 3);
}

TEST_CASE("set_dropout_rate keeps parameters") {
    Model m = small_model();
    Model copy = m;
    set_dropout_rate(m, 0.0);
    for (const auto& s : m.specs())
        if (s.kind == nn::LayerKind::Dropout) CHECK(s.rate == 0.0);
    const auto a = std::as_const(m).parameters();
    const auto b = std::as_const(copy).parameters();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
}

TEST_CASE("grid: window sizes outside the grid are configuration errors") {
    CHECK_THROWS_AS(validate_window_size(8), ConfigError);
    CHECK_NOTHROW(validate_window_size(15));
}

TEST_CASE("grid: every cell reported, failures kept per cell") {
    const auto cycles = testing_util::small_cycles(1);
    ExperimentConfig cfg;
    cfg.stride = 100;
    cfg.train.max_epochs = 1;
    cfg.model.conv_filters = 3;
    cfg.model.reduce_units = {4, 4};
    cfg.model.rnn_units = {4, 4};
    cfg.model.head_units = 4;
    const auto prepared = prepare_experiment(cycles, cfg);
    const std::vector<int> sizes{9, 15, 25};
    auto cells = run_experiment_grid(prepared, kGridArchs, sizes, cfg);
    REQUIRE(cells.size() == 9);
    for (const auto& c : cells) {
        CHECK(c.ok());
        CHECK(c.parameter_count == nn::count_parameters(c.model));
    }
    // Every window size is scored on the same target frames.
    CHECK(cells[0].test_windows == cells[2].test_windows);

    ExperimentConfig broken = cfg;
    broken.model.kernel = 4;  // even kernel: every cell fails at build time
    auto failed = run_experiment_grid(prepared, kGridArchs, sizes, broken);
    REQUIRE(failed.size() == 9);
    for (const auto& c : failed) CHECK_FALSE(c.ok());
    CHECK(render_grid_table(failed).find("failed") != std::string::npos);
}

TEST_CASE("input weight magnitudes cover every channel") {
    Model m = Model::crdnn({});
    m.initialize(1);
    auto w = input_weight_magnitudes(m);
    REQUIRE(w.size() == 5);
    for (double v : w) CHECK(v > 0.0);
}

TEST_CASE("predictions do not depend on batch composition") {
    const auto sets = testing_util::small_window_sets(15, 11, 5);
    for (auto arch : kGridArchs) {
        nn::CrdnnConfig c;
        c.arch = arch;
        auto model = nn::Model::crdnn(c);
        model.initialize(3);
        const auto all = predict_probabilities(model, sets.test);
        for (std::size_t i = 0; i < sets.test.size(); i += 7) {
            const nn::Matrix* w = &sets.test.windows[i];
            const auto one = predict_windows(model, std::span(&w, 1));
            CHECK(one.row(0) == all.row(static_cast<nn::Index>(i)));
        }
    }
}
