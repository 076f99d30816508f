#pragma once

#include "crdnn/data/telemetry.hpp"
#include "crdnn/nn/matrix.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <deque>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crdnn::data {

// alpha for a first-order low-pass with time constant tau at 50 Hz.
double smoothing_alpha(double tau_seconds);
inline constexpr double kDefaultSmoothingTau = 0.2;

// y[t] = alpha * x[t] + (1 - alpha) * y[t-1], y[0] = x[0], on continuous channels.
LabeledSeries smooth(const LabeledSeries& series, double alpha = smoothing_alpha(kDefaultSmoothingTau));

struct NormalizationStats {
    std::array<double, kChannels> mean{};
    std::array<double, kChannels> std{};  // population standard deviation
    std::array<bool, kChannels> zero_variance{};
    std::size_t frames = 0;
    std::string provenance;  // which data the statistics were computed from

    bool operator==(const NormalizationStats&) const = default;
};

NormalizationStats compute_stats(std::span<const LabeledSeries> series, std::string provenance);
LabeledSeries apply_stats(const LabeledSeries& series, const NormalizationStats& stats);

// Z-scores every channel. Without stats they are computed from this series;
// a zero-variance channel maps to zeros and a warning goes to stderr.
std::pair<LabeledSeries, NormalizationStats> normalize(const LabeledSeries& series,
                                                       const NormalizationStats* stats = nullptr);

nlohmann::json to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const nlohmann::json& j);

enum class LabelPosition { Final, Center };

struct WindowOptions {
    int window_size = 25;   // samples per window
    int decimation = 10;    // raw frames between consecutive samples
    int stride = 1;         // raw frames between consecutive anchors
    // When set, the last frame of every window falls on align_end + k * stride
    // so that different window sizes share the same target frames.
    std::optional<std::size_t> align_end;
    LabelPosition label_at = LabelPosition::Final;

    std::size_t span() const { return static_cast<std::size_t>((window_size - 1) * decimation + 1); }
    void validate() const;
};

struct WindowBatch {
    std::vector<nn::Matrix> windows;  // window_size x kChannels each
    nn::Matrix targets;               // one-hot rows
    std::vector<int> labels;
    std::vector<double> end_times;    // timestamp of each window's last frame
    std::vector<std::size_t> end_frames;
    std::vector<int> cycle_ids;
    WindowOptions options;
    NormalizationStats stats;

    std::size_t size() const { return windows.size(); }
    // Windows selected by index, in the given order.
    WindowBatch subset(std::span<const std::size_t> indices) const;
};

nn::Matrix one_hot(std::span<const int> labels);

// Frame index of the first window end for a series long enough to hold one.
std::size_t first_window_end(const WindowOptions& options);

// Windows over one series. Throws InputError if the series is shorter than
// one window span.
WindowBatch make_windows(const LabeledSeries& series, const WindowOptions& options);
// Windows over several series, concatenated in input order.
WindowBatch make_windows(std::span<const LabeledSeries> series, const WindowOptions& options);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Whole-cycle split. floor(ratio * n) cycles go to training; cycles tagged
// force_train always land there.
Split split_dataset(std::span<const LabeledSeries> cycles, double ratio, std::uint64_t seed);

struct MislabelRule {
    double span_seconds = 1.0;
    bool flip_loading = true;
    bool flip_unloading = true;
};

struct FlipSpan {
    int cycle_id = 0;
    std::size_t begin = 0;  // first flipped frame
    std::size_t end = 0;    // one past the last flipped frame
    int true_label = 0;
};

struct MislabelResult {
    LabeledSeries series;
    std::vector<FlipSpan> flips;
};

// Relabels randomly chosen loading/unloading spans as travel until about
// rate * frames labels have changed. rate must lie in [0, 0.05].
MislabelResult inject_mislabels(const LabeledSeries& series, double rate, const MislabelRule& rule,
                                std::uint64_t seed);

// Online counterpart of smooth -> apply_stats -> make_windows for a single
// stream. Frames are consumed in arrival order and push() returns a window
// whenever the newest frame is a window end under the same anchoring rules, so
// the windows equal make_windows over the prepared series bit for bit.
class StreamWindower {
public:
    StreamWindower(double alpha, NormalizationStats stats, WindowOptions options);

    std::optional<nn::Matrix> push(const TelemetryFrame& raw);
    std::size_t frames_seen() const { return seen_; }
    const WindowOptions& options() const { return options_; }

private:
    double alpha_;
    NormalizationStats stats_;
    WindowOptions options_;
    std::array<double, kChannels> smoothed_{};
    std::deque<TelemetryFrame> history_;  // prepared frames, at most one span
    std::size_t seen_ = 0;
    std::size_t next_end_ = 0;
};

// Full preparation chain for a set of cycles: smoothing, then normalization
// with the given statistics.
std::vector<LabeledSeries> prepare(std::span<const LabeledSeries> cycles, double alpha,
                                   const NormalizationStats& stats);

} // namespace crdnn::data
