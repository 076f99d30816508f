#include "crdnn/metrics/metrics.hpp"

#include "crdnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace crdnn::metrics {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t n = 0;
    for (const auto& row : counts) {
        for (auto c : row) n += c;
    }
    return n;
}

std::uint64_t ConfusionMatrix::correct() const {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < kClasses; ++i) n += counts[i][i];
    return n;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truths) {
    if (predictions.size() != truths.size()) {
        throw InputError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(truths.size()) + " truths");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const int t = truths[i];
        const int p = predictions[i];
        if (t < 0 || t >= kClasses || p < 0 || p >= kClasses) {
            throw InputError("confusion: class index out of range at sample " + std::to_string(i));
        }
        ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const auto n = cm.total();
    if (n == 0) throw InputError("accuracy: undefined for an empty confusion matrix");
    return static_cast<double>(cm.correct()) / static_cast<double>(n);
}

std::array<ClassStats, kClasses> per_class(const ConfusionMatrix& cm) {
    std::array<ClassStats, kClasses> out{};
    for (int k = 0; k < kClasses; ++k) {
        ClassStats& s = out[static_cast<std::size_t>(k)];
        s.true_positive = cm.at(k, k);
        for (int j = 0; j < kClasses; ++j) {
            s.support += cm.at(k, j);
            if (j != k) {
                s.false_negative += cm.at(k, j);
                s.false_positive += cm.at(j, k);
            }
        }
        const double tp = static_cast<double>(s.true_positive);
        if (s.true_positive + s.false_positive > 0) s.precision = tp / static_cast<double>(s.true_positive + s.false_positive);
        if (s.support > 0) s.recall = tp / static_cast<double>(s.support);
        const auto denom = 2 * s.true_positive + s.false_positive + s.false_negative;
        if (denom > 0) s.f1 = 2.0 * tp / static_cast<double>(denom);
    }
    return out;
}

double micro_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw InputError("micro_f1: undefined for an empty confusion matrix");
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (const auto& s : per_class(cm)) {
        tp += s.true_positive;
        fp += s.false_positive;
        fn += s.false_negative;
    }
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double macro_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw InputError("macro_f1: undefined for an empty confusion matrix");
    double sum = 0.0;
    int used = 0;
    for (const auto& s : per_class(cm)) {
        if (s.support + s.false_positive == 0) continue;
        sum += s.f1;
        ++used;
    }
    return sum / used;
}

std::uint64_t loading_unloading_confusions(const ConfusionMatrix& cm) { return cm.at(1, 2) + cm.at(2, 1); }

std::vector<Mistake> error_map(std::span<const int> predictions, std::span<const int> truths,
                               std::span<const double> times) {
    if (predictions.size() != truths.size() || times.size() != truths.size()) {
        throw InputError("error_map: inputs are not aligned");
    }
    std::vector<Mistake> out;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (predictions[i] != truths[i]) out.push_back({i, times[i], truths[i], predictions[i]});
    }
    return out;
}

double fraction_near(std::span<const Mistake> mistakes, std::span<const double> transition_times,
                     double tolerance) {
    if (mistakes.empty()) return 1.0;
    std::vector<double> sorted(transition_times.begin(), transition_times.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t near = 0;
    for (const auto& m : mistakes) {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), m.time - tolerance);
        if (it != sorted.end() && *it <= m.time + tolerance) ++near;
    }
    return static_cast<double>(near) / static_cast<double>(mistakes.size());
}

MetricsBundle evaluate(std::span<const int> predictions, std::span<const int> truths) {
    MetricsBundle m;
    m.cm = confusion(predictions, truths);
    m.accuracy = accuracy(m.cm);
    m.micro_f1 = micro_f1(m.cm);
    m.macro_f1 = macro_f1(m.cm);
    m.loading_unloading = loading_unloading_confusions(m.cm);
    return m;
}

nlohmann::json to_json(const MetricsBundle& m) {
    nlohmann::json j;
    j["confusion_matrix"] = m.cm.counts;
    j["total"] = m.cm.total();
    j["accuracy"] = m.accuracy;
    j["micro_f1"] = m.micro_f1;
    j["macro_f1"] = m.macro_f1;
    j["loading_unloading_confusions"] = m.loading_unloading;
    nlohmann::json classes = nlohmann::json::array();
    const char* names[kClasses] = {"travel", "loading", "unloading"};
    const auto stats = per_class(m.cm);
    for (int k = 0; k < kClasses; ++k) {
        const auto& s = stats[static_cast<std::size_t>(k)];
        classes.push_back({{"class", names[k]},
                           {"support", s.support},
                           {"precision", s.precision},
                           {"recall", s.recall},
                           {"f1", s.f1}});
    }
    j["per_class"] = classes;
    return j;
}

MetricsBundle metrics_from_json(const nlohmann::json& j) {
    MetricsBundle m;
    m.cm.counts = j.at("confusion_matrix").get<decltype(m.cm.counts)>();
    m.accuracy = j.at("accuracy").get<double>();
    m.micro_f1 = j.at("micro_f1").get<double>();
    m.macro_f1 = j.value("macro_f1", 0.0);
    m.loading_unloading = j.value("loading_unloading_confusions", std::uint64_t{0});
    return m;
}

std::string render_confusion(const ConfusionMatrix& cm) {
    std::ostringstream os;
    os << "truth\\pred " << std::setw(8) << "e0" << std::setw(8) << "e1" << std::setw(8) << "e2" << '\n';
    for (int t = 0; t < kClasses; ++t) {
        os << std::setw(10) << ("e" + std::to_string(t)) << ' ';
        for (int p = 0; p < kClasses; ++p) os << std::setw(8) << cm.at(t, p);
        os << '\n';
    }
    return os.str();
}

} // namespace crdnn::metrics
