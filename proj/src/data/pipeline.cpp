#include "crdnn/data/pipeline.hpp"

#include "crdnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

namespace crdnn::data {

double smoothing_alpha(double tau_seconds) {
    if (tau_seconds < 0.0) throw ConfigError("smoothing time constant must be >= 0");
    return kSamplePeriod / (tau_seconds + kSamplePeriod);
}

LabeledSeries smooth(const LabeledSeries& series, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("smoothing alpha must lie in (0, 1]");
    LabeledSeries out = series;
    if (out.frames.empty()) return out;
    const auto& info = channel_info();
    for (int c = 0; c < kChannels; ++c) {
        if (!info[static_cast<std::size_t>(c)].continuous) continue;
        double y = series.frames[0].channel(c);
        for (std::size_t i = 0; i < series.size(); ++i) {
            y = i == 0 ? y : alpha * series.frames[i].channel(c) + (1.0 - alpha) * y;
            out.frames[i].channel(c) = y;
        }
    }
    return out;
}

NormalizationStats compute_stats(std::span<const LabeledSeries> series, std::string provenance) {
    NormalizationStats s;
    s.provenance = std::move(provenance);
    for (const auto& ser : series) s.frames += ser.size();
    if (s.frames == 0) throw InputError("normalize: no frames to compute statistics from");
    const double n = static_cast<double>(s.frames);
    for (int c = 0; c < kChannels; ++c) {
        double sum = 0.0;
        for (const auto& ser : series) {
            for (const auto& f : ser.frames) sum += f.channel(c);
        }
        const double mean = sum / n;
        double sq = 0.0;
        for (const auto& ser : series) {
            for (const auto& f : ser.frames) sq += (f.channel(c) - mean) * (f.channel(c) - mean);
        }
        const auto k = static_cast<std::size_t>(c);
        s.mean[k] = mean;
        s.std[k] = std::sqrt(sq / n);
        s.zero_variance[k] = !(s.std[k] > 1e-12 * std::max(1.0, std::abs(mean)));
    }
    return s;
}

LabeledSeries apply_stats(const LabeledSeries& series, const NormalizationStats& stats) {
    LabeledSeries out = series;
    for (int c = 0; c < kChannels; ++c) {
        const auto k = static_cast<std::size_t>(c);
        for (auto& f : out.frames) {
            f.channel(c) = stats.zero_variance[k] ? 0.0 : (f.channel(c) - stats.mean[k]) / stats.std[k];
        }
    }
    return out;
}

std::pair<LabeledSeries, NormalizationStats> normalize(const LabeledSeries& series, const NormalizationStats* stats) {
    NormalizationStats s = stats ? *stats : compute_stats(std::span(&series, 1), "cycle " + std::to_string(series.info.cycle_id));
    if (!stats) {
        for (int c = 0; c < kChannels; ++c) {
            if (s.zero_variance[static_cast<std::size_t>(c)]) {
                std::cerr << "warning: channel " << channel_info()[static_cast<std::size_t>(c)].name
                          << " has zero variance; normalized to zeros\n";
            }
        }
    }
    return {apply_stats(series, s), s};
}

nlohmann::json to_json(const NormalizationStats& s) {
    return {{"mean", s.mean},
            {"std", s.std},
            {"zero_variance", s.zero_variance},
            {"frames", s.frames},
            {"provenance", s.provenance}};
}

NormalizationStats stats_from_json(const nlohmann::json& j) {
    NormalizationStats s;
    s.mean = j.at("mean").get<std::array<double, kChannels>>();
    s.std = j.at("std").get<std::array<double, kChannels>>();
    s.zero_variance = j.at("zero_variance").get<std::array<bool, kChannels>>();
    s.frames = j.value("frames", std::size_t{0});
    s.provenance = j.value("provenance", "");
    return s;
}

void WindowOptions::validate() const {
    if (window_size < 1) throw ConfigError("window size must be >= 1");
    if (decimation < 1) throw ConfigError("decimation must be >= 1");
    if (stride < 1) throw ConfigError("stride must be >= 1");
}

nn::Matrix one_hot(std::span<const int> labels) {
    nn::Matrix m = nn::Matrix::Zero(static_cast<nn::Index>(labels.size()), kClasses);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] > 2) throw InputError("one_hot: label out of range at " + std::to_string(i));
        m(static_cast<nn::Index>(i), labels[i]) = 1.0;
    }
    return m;
}

WindowBatch WindowBatch::subset(std::span<const std::size_t> indices) const {
    WindowBatch out;
    out.options = options;
    out.stats = stats;
    for (auto i : indices) {
        out.windows.push_back(windows.at(i));
        out.labels.push_back(labels[i]);
        out.end_times.push_back(end_times[i]);
        out.end_frames.push_back(end_frames[i]);
        out.cycle_ids.push_back(cycle_ids[i]);
    }
    out.targets = one_hot(out.labels);
    return out;
}

std::size_t first_window_end(const WindowOptions& o) {
    const std::size_t first_end = o.span() - 1;
    if (!o.align_end) return first_end;
    const std::size_t base = *o.align_end;
    const auto stride = static_cast<std::size_t>(o.stride);
    if (base >= first_end) return base;
    return base + (first_end - base + stride - 1) / stride * stride;
}

namespace {

void append_windows(const LabeledSeries& series, const WindowOptions& o, WindowBatch& out) {
    const std::size_t span = o.span();
    const std::size_t n = series.size();
    if (n < span) {
        throw InputError("make_windows: series of " + std::to_string(n) + " frames is shorter than the window span " +
                         std::to_string(span) + " (cycle " + std::to_string(series.info.cycle_id) + ")");
    }
    const std::size_t first_end = first_window_end(o);
    const auto d = static_cast<std::size_t>(o.decimation);
    for (std::size_t end = first_end; end < n; end += static_cast<std::size_t>(o.stride)) {
        const std::size_t anchor = end + 1 - span;
        nn::Matrix w(o.window_size, kChannels);
        for (int k = 0; k < o.window_size; ++k) {
            const auto& f = series.frames[anchor + static_cast<std::size_t>(k) * d];
            for (int c = 0; c < kChannels; ++c) w(k, c) = f.channel(c);
        }
        const std::size_t label_frame =
            o.label_at == LabelPosition::Final ? end : anchor + static_cast<std::size_t>(o.window_size / 2) * d;
        out.windows.push_back(std::move(w));
        out.labels.push_back(series.labels[label_frame]);
        out.end_times.push_back(series.frames[end].t);
        out.end_frames.push_back(end);
        out.cycle_ids.push_back(series.info.cycle_id);
    }
}

} // namespace

WindowBatch make_windows(const LabeledSeries& series, const WindowOptions& options) {
    return make_windows(std::span(&series, 1), options);
}

WindowBatch make_windows(std::span<const LabeledSeries> series, const WindowOptions& options) {
    options.validate();
    WindowBatch out;
    out.options = options;
    for (const auto& s : series) {
        if (s.labels.size() != s.frames.size()) throw InputError("make_windows: labels do not align with frames");
        append_windows(s, options, out);
    }
    out.targets = one_hot(out.labels);
    return out;
}

StreamWindower::StreamWindower(double alpha, NormalizationStats stats, WindowOptions options)
    : alpha_(alpha), stats_(std::move(stats)), options_(std::move(options)) {
    if (!(alpha_ > 0.0 && alpha_ <= 1.0)) throw ConfigError("smoothing alpha must lie in (0, 1]");
    options_.validate();
    next_end_ = first_window_end(options_);
}

std::optional<nn::Matrix> StreamWindower::push(const TelemetryFrame& raw) {
    const auto& info = channel_info();
    TelemetryFrame f = raw;
    for (int c = 0; c < kChannels; ++c) {
        const auto k = static_cast<std::size_t>(c);
        if (info[k].continuous) {
            smoothed_[k] = seen_ == 0 ? raw.channel(c) : alpha_ * raw.channel(c) + (1.0 - alpha_) * smoothed_[k];
            f.channel(c) = smoothed_[k];
        }
        f.channel(c) = stats_.zero_variance[k] ? 0.0 : (f.channel(c) - stats_.mean[k]) / stats_.std[k];
    }
    history_.push_back(f);
    const std::size_t span = options_.span();
    if (history_.size() > span) history_.pop_front();
    const std::size_t index = seen_++;
    if (index != next_end_) return std::nullopt;
    next_end_ += static_cast<std::size_t>(options_.stride);

    const auto d = static_cast<std::size_t>(options_.decimation);
    nn::Matrix w(options_.window_size, kChannels);
    for (int k = 0; k < options_.window_size; ++k) {
        const auto& h = history_[static_cast<std::size_t>(k) * d];
        for (int c = 0; c < kChannels; ++c) w(k, c) = h.channel(c);
    }
    return w;
}

Split split_dataset(std::span<const LabeledSeries> cycles, double ratio, std::uint64_t seed) {
    if (cycles.size() < 2) throw InputError("split_dataset: need at least 2 cycles");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
    const std::size_t n = cycles.size();
    std::size_t n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

    std::vector<std::size_t> forced, free;
    for (std::size_t i = 0; i < n; ++i) (cycles[i].info.force_train ? forced : free).push_back(i);
    if (free.empty()) throw InputError("split_dataset: every cycle is tagged force_train, test set would be empty");

    std::mt19937_64 rng(seed);
    std::shuffle(free.begin(), free.end(), rng);

    Split s;
    s.train = forced;
    std::size_t k = 0;
    while (s.train.size() < n_train && k + 1 < free.size()) s.train.push_back(free[k++]);
    s.test.assign(free.begin() + static_cast<std::ptrdiff_t>(k), free.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

MislabelResult inject_mislabels(const LabeledSeries& series, double rate, const MislabelRule& rule, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 0.05)) throw InputError("inject_mislabels: rate must lie in [0, 0.05]");
    if (!(rule.span_seconds > 0.0)) throw ConfigError("inject_mislabels: span must be positive");
    MislabelResult r{series, {}};
    const auto target = static_cast<std::size_t>(std::llround(rate * static_cast<double>(series.size())));
    if (target == 0) return r;

    auto eligible = [&](int label) {
        return (label == 1 && rule.flip_loading) || (label == 2 && rule.flip_unloading);
    };
    const auto span_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rule.span_seconds * kSampleRateHz)));
    std::mt19937_64 rng(seed);
    std::size_t flipped = 0;
    while (flipped < target) {
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < r.series.size(); ++i) {
            if (eligible(r.series.labels[i])) candidates.push_back(i);
        }
        if (candidates.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        const std::size_t begin = candidates[pick(rng)];
        const int label = r.series.labels[begin];
        const std::size_t limit = std::min(span_len, target - flipped);
        std::size_t end = begin;
        while (end < r.series.size() && end - begin < limit && r.series.labels[end] == label) {
            r.series.labels[end] = 0;
            ++end;
        }
        flipped += end - begin;
        r.flips.push_back({series.info.cycle_id, begin, end, label});
    }
    return r;
}

std::vector<LabeledSeries> prepare(std::span<const LabeledSeries> cycles, double alpha, const NormalizationStats& stats) {
    std::vector<LabeledSeries> out;
    out.reserve(cycles.size());
    for (const auto& c : cycles) out.push_back(apply_stats(smooth(c, alpha), stats));
    return out;
}

} // namespace crdnn::data
