#include "doctest.h"

#include "crdnn/errors.hpp"
#include "crdnn/metrics/metrics.hpp"

#include <algorithm>
#include <random>
#include <vector>

using namespace crdnn;
using namespace crdnn::metrics;

namespace {

std::vector<int> random_labels(std::size_t n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> cls(0, 2);
    std::vector<int> v(n);
    for (auto& x : v) x = cls(rng);
    return v;
}

ConfusionMatrix from_rows(std::array<std::array<std::uint64_t, 3>, 3> rows) {
    ConfusionMatrix cm;
    cm.counts = rows;
    return cm;
}

} // namespace

TEST_CASE("confusion: perfect predictions are diagonal") {
    std::mt19937_64 rng(1);
    auto y = random_labels(200, rng);
    auto cm = confusion(y, y);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(cm.at(i, j) == 0);
    CHECK(cm.total() == 200);
    CHECK(accuracy(cm) == 1.0);
    CHECK(micro_f1(cm) == 1.0);
}

TEST_CASE("confusion: rows are truth, columns prediction") {
    const std::vector<int> pred{2};
    const std::vector<int> truth{1};
    auto cm = confusion(pred, truth);
    CHECK(cm.at(1, 2) == 1);
    CHECK(cm.total() == 1);
    CHECK(loading_unloading_confusions(cm) == 1);
}

TEST_CASE("confusion: matches an independent tally and ignores order") {
    std::mt19937_64 rng(2);
    auto p = random_labels(1000, rng);
    auto t = random_labels(1000, rng);
    std::uint64_t tally[3][3] = {};
    for (std::size_t i = 0; i < p.size(); ++i) tally[t[i]][p[i]] += 1;
    auto cm = confusion(p, t);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(cm.at(i, j) == tally[i][j]);

    std::vector<std::size_t> order(p.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> p2, t2;
    for (auto i : order) {
        p2.push_back(p[i]);
        t2.push_back(t[i]);
    }
    CHECK(confusion(p2, t2) == cm);
}

TEST_CASE("confusion: input errors") {
    const std::vector<int> a{0, 1};
    const std::vector<int> b{0};
    CHECK_THROWS_AS(confusion(a, b), InputError);
    const std::vector<int> bad{3, 0};
    CHECK_THROWS_AS(confusion(bad, a), InputError);
    CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), InputError);
    CHECK_THROWS_AS(micro_f1(ConfusionMatrix{}), InputError);
}

TEST_CASE("hand-built matrix") {
    auto cm = from_rows({{{5, 1, 0}, {0, 3, 1}, {0, 0, 2}}});
    CHECK(accuracy(cm) == 10.0 / 12.0);
    CHECK(micro_f1(cm) == 10.0 / 12.0);
    CHECK(loading_unloading_confusions(cm) == 1);
    auto pc = per_class(cm);
    CHECK(pc[0].support == 6);
    CHECK(pc[1].false_positive == 1);
    CHECK(pc[1].false_negative == 1);
    // per-class F1: 10/11, 6/8, 4/5
    CHECK(macro_f1(cm) == doctest::Approx((10.0 / 11.0 + 0.75 + 0.8) / 3.0).epsilon(1e-14));
}

TEST_CASE("micro-F1 equals accuracy for single-label predictions") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> len(1, 300);
        const std::size_t n = len(rng);
        auto cm = confusion(random_labels(n, rng), random_labels(n, rng));
        CHECK(micro_f1(cm) == accuracy(cm));
    }
}

TEST_CASE("error_map lists mismatches with their positions") {
    const std::vector<int> t{0, 0, 1, 1, 2};
    const std::vector<double> times{0.0, 0.2, 0.4, 0.6, 0.8};
    CHECK(error_map(t, t, times).empty());
    std::vector<int> p = t;
    p[3] = 0;
    auto m = error_map(p, t, times);
    REQUIRE(m.size() == 1);
    CHECK(m[0].index == 3);
    CHECK(m[0].time == 0.6);
    CHECK(m[0].truth == 1);
    CHECK(m[0].prediction == 0);
}

TEST_CASE("fraction_near counts mistakes close to transitions") {
    std::vector<Mistake> m{{0, 1.0, 0, 1}, {1, 5.0, 0, 1}, {2, 10.2, 1, 0}, {3, 20.0, 2, 0}};
    const std::vector<double> transitions{1.5, 10.0};
    CHECK(fraction_near(m, transitions, 1.0) == 0.5);
    CHECK(fraction_near({}, transitions, 1.0) == 1.0);
}

TEST_CASE("metrics bundle round-trips through json") {
    std::mt19937_64 rng(4);
    auto b = evaluate(random_labels(50, rng), random_labels(50, rng));
    auto back = metrics_from_json(to_json(b));
    CHECK(back.cm == b.cm);
    CHECK(back.accuracy == b.accuracy);
    CHECK(back.micro_f1 == b.micro_f1);
    CHECK(back.loading_unloading == b.loading_unloading);
    const auto text = render_confusion(b.cm);
    CHECK(text.find("e0") != std::string::npos);
}
