#pragma once

#include "crdnn/data/telemetry.hpp"
#include "crdnn/metrics/metrics.hpp"
#include "crdnn/regen/regen.hpp"
#include "crdnn/synth/generator.hpp"
#include "crdnn/train/grid.hpp"
#include "crdnn/util/config.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace crdnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

// Maps a failure onto the exit-code contract.
int exit_code_for(const std::exception& e);

// Reads "key = value" text, or the "config" object of a manifest.json written
// by an earlier run.
util::FlatConfig load_config(const std::filesystem::path& path);

// Throws ConfigError naming the first key no command read.
void reject_unknown_keys(const util::FlatConfig& cfg);

// Output root for a command: the explicit path if given, else
// $CRDNN_OUTPUT_DIR/<fallback>, else ./<fallback>.
std::filesystem::path output_path(const std::optional<std::filesystem::path>& explicit_path, const std::string& fallback);

// ---- generate ---------------------------------------------------------------

struct GenerateSettings {
    std::uint64_t seed = 1;
    std::optional<int> cycles;  // proportional roster override
    data::TelemetryFormat format = data::TelemetryFormat::Binary;
};

GenerateSettings generate_settings(const util::FlatConfig& cfg);
util::FlatConfig to_config(const GenerateSettings& s);

// Writes the dataset and its manifest; returns the cycles written.
std::vector<data::LabeledSeries> cmd_generate(const GenerateSettings& s, const std::filesystem::path& out_dir);

// ---- train / grid -----------------------------------------------------------

struct TrainSettings {
    std::uint64_t seed = 1;  // master seed; split, init, shuffle and mislabel seeds derive from it
    std::string arch = "2lstm";  // 1lstm, 2lstm, 2bilstm or grid
    int window_size = 25;
    std::vector<int> grid_window_sizes{9, 15, 25};
    double smoothing_tau = data::kDefaultSmoothingTau;
    double mislabel_rate = 0.0;
    double mislabel_span = 1.0;  // s
    train::ExperimentConfig experiment;

    bool is_grid() const { return arch == "grid"; }
    void validate() const;
};

// Seeds derived from the master seed.
std::uint64_t derived_seed(std::uint64_t master, std::uint64_t stream);

TrainSettings train_settings(const util::FlatConfig& cfg);
util::FlatConfig to_config(const TrainSettings& s);

struct TrainedCell {
    train::CellResult cell;
    std::filesystem::path dir;
};

struct TrainOutcome {
    std::vector<TrainedCell> cells;
    std::vector<data::FlipSpan> flips;
    std::size_t failed = 0;
};

TrainOutcome cmd_train(const TrainSettings& s, const std::filesystem::path& data_dir,
                       const std::filesystem::path& out_dir, std::ostream& log);

// ---- eval / infer -----------------------------------------------------------

enum class EvalSplit { Train, Test, All };
EvalSplit eval_split_from_string(const std::string& name);

struct Predictions {
    std::vector<int> cycle_ids;
    std::vector<std::size_t> end_frames;
    std::vector<double> end_times;
    std::vector<int> labels;
    std::vector<int> classes;
    nn::Matrix probabilities;
};

std::string render_predictions(const Predictions& p);

struct EvalOutcome {
    metrics::MetricsBundle metrics;
    Predictions predictions;
};

EvalOutcome cmd_eval(const std::filesystem::path& model_path, const std::filesystem::path& data_dir, EvalSplit split);

// Streams the frames of a telemetry file through the training-time
// preprocessing and scores every window as it completes.
Predictions cmd_infer(const std::filesystem::path& model_path, const std::filesystem::path& telemetry_path);

// Consecutive runs of equal predicted classes, e.g. "travel loading travel".
std::vector<int> segment_sequence(const std::vector<int>& classes);

// ---- regen ------------------------------------------------------------------

struct RegenSettings {
    regen::Scenario scenario;
    regen::RepresentativeCycle cycle;
    std::vector<double> mus{0.01, 0.05, 0.3};
    std::vector<double> speeds;  // empty: the cycle speed
    std::vector<double> masses;  // empty: the scenario material mass
};

RegenSettings regen_settings(const util::FlatConfig& cfg);
util::FlatConfig to_config(const RegenSettings& s);

struct RegenOutcome {
    regen::EnergyLedger ledger;  // the scenario as configured
    std::vector<regen::SweepRow> rows;
};

RegenOutcome cmd_regen(const RegenSettings& s);

// ---- manifests ----------------------------------------------------------------

nlohmann::json manifest(const std::string& command, const util::FlatConfig& resolved, std::uint64_t seed);

} // namespace crdnn::cli
