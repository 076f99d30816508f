#pragma once

#include "crdnn/data/telemetry.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace crdnn::synth {

struct DriverProfile {
    std::string name = "driver";
    double aggressiveness = 0.5;       // [0, 1], scales speed and acceleration
    double proficiency = 1.0;          // [0, 1], probability of a clean cycle
    double base_cycle_duration = 30.0; // s, nominal cycle length; scales dig and dump phases
    double duration_jitter = 0.1;      // fraction, uniform +- on phase durations

    void validate() const;
};

enum class SegmentKind { ApproachTravel, Loading, ReverseTravel, ForwardTravel, Wait, Unloading, ReturnTravel };
const char* to_string(SegmentKind kind);

struct Segment {
    SegmentKind kind;
    int label;              // 0 travel, 1 loading, 2 unloading
    double duration;        // s
    double distance = 0.0;  // m, travel segments
    double peak_speed = 0.0;
    double accel = 0.0;
    double end_speed = 0.0;  // speed at which a travel segment ends
    bool loaded = false;
};

// Ordered segments of one Y cycle; a double dig adds a short reverse/forward
// pair and a second loading segment, a hesitant driver stops at the truck
// (labeled travel) before dumping.
struct CyclePlan {
    std::vector<Segment> segments;
    bool double_dig = false;
    bool hesitation = false;

    double duration() const;
    void validate() const;
};

// Synthetic channel conventions. All magnitudes are invented but physically
// plausible; after normalization only their structure matters.
struct SignalConfig {
    double bucket_empty = 20.0;    // bar
    double bucket_carry = 70.0;
    double bucket_dig_peak = 160.0;
    double boom_empty = 35.0;
    double boom_loaded = 90.0;
    double boom_dump_peak = 150.0;
    double drive_dig_peak = 250.0;
    double drive_rolling = 30.0;
    double drive_per_accel = 45.0; // bar per m/s^2
    double noise_fraction = 0.05;  // noise sigma as a fraction of each channel's envelope amplitude
    double noise_tau = 0.05;       // s, band limit of the noise
    double sensor_tau = 0.08;      // s, sensor lag applied to the clean envelopes
    double material_density = 1.0; // scales bucket and boom load pressures
    bool miscalibrated = false;    // offsets and gain errors of a poorly tuned machine
};

struct GeometryConfig {
    double min_distance = 8.0;  // heap-truck distance range (m)
    double max_distance = 16.0;
};

CyclePlan plan_cycle(const DriverProfile& profile, double distance, std::uint64_t seed);

data::LabeledSeries render_cycle(const CyclePlan& plan, const SignalConfig& signals, std::uint64_t seed);

// Plan + render. distance is the heap-truck distance in metres (> 0).
data::LabeledSeries generate_cycle(const DriverProfile& profile, double distance, std::uint64_t seed,
                                   const SignalConfig& signals = {});

struct RosterEntry {
    DriverProfile profile;
    int cycles = 0;
    bool force_train = false;
    bool miscalibrated = false;
    // Every rainy_every-th session (10 cycles each) uses the wet material
    // density; 0 disables.
    int rainy_every = 0;
};

struct DatasetConfig {
    std::vector<RosterEntry> roster;
    SignalConfig signals;
    GeometryConfig geometry;
    double rainy_density = 1.2;
    int session_length = 10;
};

// 40 experienced-engineer, 30 aggressive, 20 miscalibrated (force_train) and
// 29 senior-manager cycles.
DatasetConfig default_dataset_config();

// Scales the roster to total cycles in proportion to the current counts
// (largest remainder); entries that round to zero are dropped.
DatasetConfig resize_roster(const DatasetConfig& config, int total);

// Seed of cycle i, derived from the master seed so cycles are independent of
// generation order.
std::uint64_t cycle_seed(std::uint64_t master_seed, std::size_t index);

std::vector<data::LabeledSeries> generate_dataset(const DatasetConfig& config, std::uint64_t seed);

nlohmann::json to_json(const DatasetConfig& config);

} // namespace crdnn::synth
