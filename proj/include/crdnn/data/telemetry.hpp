#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace crdnn::data {

inline constexpr double kSampleRateHz = 50.0;
inline constexpr double kSamplePeriod = 1.0 / kSampleRateHz;
inline constexpr int kChannels = 5;
inline constexpr int kClasses = 3;

// Channel order used for windows and normalization statistics.
enum class Channel : int { BucketDp = 0, Velocity = 1, JoystickDir = 2, DriveDp = 3, BoomDp = 4 };

struct ChannelInfo {
    const char* name;
    const char* unit;
    bool continuous;  // discrete channels bypass smoothing
};
const std::array<ChannelInfo, kChannels>& channel_info();

struct TelemetryFrame {
    double t = 0.0;            // s
    double bucket_dp = 0.0;    // bar
    double velocity = 0.0;     // m/s, negative when reversing
    double joystick_dir = 0.0; // -1 reverse, 0 neutral, +1 forward
    double drive_dp = 0.0;     // bar, closed-circuit drivetrain
    double boom_dp = 0.0;      // bar

    double channel(int c) const;
    double& channel(int c);
    bool operator==(const TelemetryFrame&) const = default;
};

struct SeriesInfo {
    int cycle_id = 0;
    std::string driver;
    std::string session;
    bool force_train = false;  // machine with insufficient calibration
    std::uint64_t seed = 0;
    bool operator==(const SeriesInfo&) const = default;
};

// Labels use the class indices 0 travel, 1 loading, 2 unloading.
struct LabeledSeries {
    std::vector<TelemetryFrame> frames;
    std::vector<int> labels;
    SeriesInfo info;

    std::size_t size() const { return frames.size(); }
    // Throws InputError unless labels align, labels are valid class indices
    // and timestamps advance by exactly one 50 Hz period.
    void validate() const;
    bool operator==(const LabeledSeries&) const = default;
};

// Times (s) at which the label changes, i.e. the timestamps of the first
// frame of every new state.
std::vector<double> transition_times(const LabeledSeries& series);

nlohmann::json to_json(const SeriesInfo& info);
SeriesInfo series_info_from_json(const nlohmann::json& j);

// ---- file formats ---------------------------------------------------------
//
// CSV (text, version 1):
//   line 1: "# crdnn-telemetry-csv v1"
//   line 2: "# meta " + single-line JSON SeriesInfo
//   line 3: column header with units
//   then one row per frame: t, five channels, integer label.
//
// Binary (version 1, little-endian):
//   "CRDNNTLM", u32 version, u64 meta length, meta JSON, u64 frame count,
//   then per frame six binary64 values (t + channels) and one u8 label.
inline constexpr std::uint32_t kTelemetryFormatVersion = 1;

enum class TelemetryFormat { Csv, Binary };

std::string to_csv(const LabeledSeries& series);
LabeledSeries from_csv(const std::string& text);
std::vector<std::uint8_t> to_binary(const LabeledSeries& series);
LabeledSeries from_binary(const std::vector<std::uint8_t>& bytes);

void save_series(const std::filesystem::path& path, const LabeledSeries& series, TelemetryFormat format);
// Format picked from the extension: .csv or .tlm.
LabeledSeries load_series(const std::filesystem::path& path);

// Dataset directory: manifest.json plus one file per cycle.
struct DatasetManifest {
    nlohmann::json extra = nlohmann::json::object();  // generator config, seed, code version
};

void save_dataset(const std::filesystem::path& dir, const std::vector<LabeledSeries>& cycles,
                  const nlohmann::json& extra, TelemetryFormat format);
std::vector<LabeledSeries> load_dataset(const std::filesystem::path& dir, nlohmann::json* manifest = nullptr);

} // namespace crdnn::data
