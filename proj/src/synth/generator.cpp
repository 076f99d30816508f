#include "crdnn/synth/generator.hpp"

#include "crdnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace crdnn::synth {

namespace {

using data::kSamplePeriod;

constexpr double kLoadingCreepTau = 0.5;  // s, decay of the push into the heap

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }


double direction(SegmentKind k) {
    return (k == SegmentKind::ReverseTravel || k == SegmentKind::ReturnTravel) ? -1.0 : 1.0;
}

// Trapezoidal speed profile from rest to end_speed over distance; lowers the
// peak when the distance is too short to reach it.
void shape_travel(Segment& s) {
    const double a = s.accel;
    double vp = s.peak_speed;
    const double ve = std::min(s.end_speed, vp);
    const double ramp_distance = vp * vp / (2 * a) + (vp * vp - ve * ve) / (2 * a);
    double cruise = 0.0;
    if (ramp_distance > s.distance) {
        vp = std::sqrt(a * s.distance + ve * ve / 2);
    } else {
        cruise = (s.distance - ramp_distance) / vp;
    }
    s.peak_speed = vp;
    s.end_speed = ve;
    s.duration = vp / a + cruise + (vp - ve) / a;
}

struct TravelKinematics {
    double speed;
    double accel;
};

TravelKinematics travel_at(const Segment& s, double tau) {
    const double a = s.accel;
    const double vp = s.peak_speed;
    const double t_up = vp / a;
    const double t_down = (vp - s.end_speed) / a;
    const double t_cruise = std::max(0.0, s.duration - t_up - t_down);
    if (tau < t_up) return {a * tau, a};
    if (tau < t_up + t_cruise) return {vp, 0.0};
    const double td = tau - t_up - t_cruise;
    return {std::max(s.end_speed, vp - a * td), td < t_down ? -a : 0.0};
}

double ramp(double x) { return std::clamp(x, 0.0, 1.0); }

double lerp(double a, double b, double f) { return a + (b - a) * ramp(f); }

struct Envelope {
    double bucket, velocity, joystick, drive, boom;
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace

void DriverProfile::validate() const {
    if (!in_unit(aggressiveness)) throw ConfigError("driver profile: aggressiveness must lie in [0, 1]");
    if (!in_unit(proficiency)) throw ConfigError("driver profile: proficiency must lie in [0, 1]");
    if (!(base_cycle_duration > 0.0)) throw ConfigError("driver profile: base cycle duration must be positive");
    if (!(duration_jitter >= 0.0 && duration_jitter < 1.0)) {
        throw ConfigError("driver profile: duration jitter must lie in [0, 1)");
    }
}

const char* to_string(SegmentKind kind) {
    switch (kind) {
    case SegmentKind::ApproachTravel: return "approach_travel";
    case SegmentKind::Loading: return "loading";
    case SegmentKind::ReverseTravel: return "reverse_travel";
    case SegmentKind::ForwardTravel: return "forward_travel";
    case SegmentKind::Wait: return "wait";
    case SegmentKind::Unloading: return "unloading";
    case SegmentKind::ReturnTravel: return "return_travel";
    }
    return "unknown";
}

double CyclePlan::duration() const {
    double d = 0.0;
    for (const auto& s : segments) d += s.duration;
    return d;
}

void CyclePlan::validate() const {
    if (segments.empty()) throw InputError("cycle plan: no segments");
    for (const auto& s : segments) {
        if (!(s.duration > 0.0)) throw InputError("cycle plan: segment durations must be positive");
        if (s.label < 0 || s.label > 2) throw InputError("cycle plan: invalid label");
    }
}

CyclePlan plan_cycle(const DriverProfile& profile, double distance, std::uint64_t seed) {
    profile.validate();
    if (!(distance > 0.0)) throw InputError("generate_cycle: heap-truck distance must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    auto jitter = [&] { return 1.0 + profile.duration_jitter * unit(rng); };

    const double aggr = profile.aggressiveness;
    const double time_scale = profile.base_cycle_duration / 30.0;
    const double peak = (2.0 + 1.6 * aggr) * jitter();
    const double accel = 0.7 + 0.9 * aggr;
    const double dig = 4.2 * time_scale * (1.0 - 0.25 * aggr) * jitter();
    const double dump = 2.9 * time_scale * (1.0 - 0.2 * aggr) * jitter();
    const bool double_dig = prob(rng) > profile.proficiency;
    const bool hesitation = prob(rng) > profile.proficiency;
    const double wait = (1.0 + 2.0 * prob(rng)) * time_scale;

    auto travel = [&](SegmentKind kind, double dist, double speed, double end_speed, bool loaded) {
        Segment s{kind, 0, 0.0, dist, speed, accel, end_speed, loaded};
        shape_travel(s);
        return s;
    };
    auto work = [&](SegmentKind kind, double duration, double entry_speed) {
        Segment s{kind, kind == SegmentKind::Loading ? 1 : 2, duration, 0.0, 0.0, 0.0, entry_speed, false};
        if (kind == SegmentKind::Loading) {
            s.distance = entry_speed * kLoadingCreepTau * (1.0 - std::exp(-duration / kLoadingCreepTau));
        }
        return s;
    };

    CyclePlan plan;
    plan.double_dig = double_dig;
    plan.hesitation = hesitation;
    auto& seg = plan.segments;
    const double approach_speed = 0.8;
    seg.push_back(travel(SegmentKind::ApproachTravel, 0.8 * distance * jitter(), peak, approach_speed, false));
    if (double_dig) {
        seg.push_back(work(SegmentKind::Loading, 0.6 * dig, approach_speed));
        seg.push_back(travel(SegmentKind::ReverseTravel, 1.5, 1.0, 0.0, false));
        seg.push_back(travel(SegmentKind::ForwardTravel, 1.5, 1.0, 0.5, false));
        seg.push_back(work(SegmentKind::Loading, 0.5 * dig, 0.5));
    } else {
        seg.push_back(work(SegmentKind::Loading, dig, approach_speed));
    }
    seg.push_back(travel(SegmentKind::ReverseTravel, 0.55 * distance * jitter(), 0.85 * peak, 0.0, true));
    seg.push_back(travel(SegmentKind::ForwardTravel, 0.75 * distance * jitter(), peak, 0.0, true));
    if (hesitation) seg.push_back(Segment{SegmentKind::Wait, 0, wait, 0.0, 0.0, 0.0, 0.0, true});
    seg.push_back(work(SegmentKind::Unloading, dump, 0.0));

    // Close the trajectory: the return leg covers the net forward distance.
    double net = 0.0;
    for (const auto& s : seg) net += direction(s.kind) * s.distance;
    seg.push_back(travel(SegmentKind::ReturnTravel, std::max(net, 0.5), 0.85 * peak, 0.0, false));
    plan.validate();
    return plan;
}

data::LabeledSeries render_cycle(const CyclePlan& plan, const SignalConfig& sig, std::uint64_t seed) {
    plan.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> prob(0.0, 1.0);

    const double density = sig.material_density;
    const double carry = sig.bucket_carry * density;
    const double boom_loaded = sig.boom_loaded * density;
    // Whether the operator keeps forward engaged while dumping.
    const double dump_joystick = prob(rng) < 0.3 ? 1.0 : 0.0;

    auto envelope = [&](const Segment& s, double tau, const Envelope& entry) {
        Envelope e{};
        const double D = s.duration;
        switch (s.kind) {
        case SegmentKind::Loading: {
            e.velocity = s.end_speed * std::exp(-tau / kLoadingCreepTau);
            e.joystick = 1.0;
            const double push = ramp(tau / 0.2) * (tau < 0.6 * D ? 1.0 : 1.0 - 0.75 * (tau - 0.6 * D) / (0.4 * D));
            e.drive = sig.drive_dig_peak * push;
            const double crowd = 1.0 + 0.08 * std::sin(2.0 * std::numbers::pi * 1.5 * tau);
            if (tau < 0.35 * D) {
                e.bucket = lerp(entry.bucket, sig.bucket_dig_peak * density, tau / (0.35 * D));
            } else if (tau < 0.75 * D) {
                e.bucket = sig.bucket_dig_peak * density * crowd;
            } else {
                e.bucket = lerp(sig.bucket_dig_peak * density, carry, (tau - 0.75 * D) / (0.25 * D));
            }
            e.boom = tau < 0.5 * D ? entry.boom
                                   : (tau < 0.85 * D ? lerp(entry.boom, 1.25 * boom_loaded, (tau - 0.5 * D) / (0.35 * D))
                                                     : lerp(1.25 * boom_loaded, boom_loaded, (tau - 0.85 * D) / (0.15 * D)));
            break;
        }
        case SegmentKind::Wait:
            e.velocity = 0.0;
            e.joystick = 0.0;
            e.drive = 5.0;
            e.bucket = carry;
            e.boom = boom_loaded;
            break;
        case SegmentKind::Unloading:
            e.velocity = 0.0;
            e.joystick = dump_joystick;
            e.drive = 5.0;
            e.boom = tau < 0.4 * D ? lerp(entry.boom, sig.boom_dump_peak * density, tau / (0.4 * D))
                                   : (tau < 0.75 * D ? sig.boom_dump_peak * density
                                                     : lerp(sig.boom_dump_peak * density,
                                                            0.5 * (sig.boom_empty + boom_loaded),
                                                            (tau - 0.75 * D) / (0.25 * D)));
            e.bucket = tau < 0.45 * D ? entry.bucket : lerp(entry.bucket, 0.4 * sig.bucket_empty, (tau - 0.45 * D) / (0.25 * D));
            break;
        default: {
            const double dir = direction(s.kind);
            const auto k = travel_at(s, tau);
            const double mass = s.loaded ? 1.4 : 1.0;
            e.velocity = dir * k.speed;
            e.joystick = dir;
            e.drive = dir * ((k.speed > 0.05 ? sig.drive_rolling * mass : 0.0) + sig.drive_per_accel * k.accel * mass);
            const bool carrying = s.loaded;
            e.bucket = carrying ? carry : lerp(entry.bucket, sig.bucket_empty, tau / 0.5);
            e.boom = carrying ? lerp(entry.boom, boom_loaded, tau / 0.5) : lerp(entry.boom, sig.boom_empty, tau / 1.5);
            break;
        }
        }
        return e;
    };

    const auto n = static_cast<std::size_t>(std::llround(plan.duration() / kSamplePeriod));
    data::LabeledSeries out;
    out.frames.resize(n);
    out.labels.resize(n);

    const double amplitude[data::kChannels] = {sig.bucket_dig_peak, 3.0, 0.0, sig.drive_dig_peak, sig.boom_dump_peak};
    const double noise_scale = sig.miscalibrated ? 1.5 : 1.0;
    const double beta = std::exp(-kSamplePeriod / sig.noise_tau);
    const double lag = kSamplePeriod / (sig.sensor_tau + kSamplePeriod);
    double noise[data::kChannels] = {};
    Envelope state{sig.bucket_empty, 0.0, 0.0, 0.0, sig.boom_empty};
    Envelope entry = state;

    std::size_t seg_index = 0;
    double seg_start = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * kSamplePeriod;
        while (seg_index + 1 < plan.segments.size() && t >= seg_start + plan.segments[seg_index].duration - 1e-12) {
            seg_start += plan.segments[seg_index].duration;
            ++seg_index;
            entry = state;
        }
        const Segment& s = plan.segments[seg_index];
        const Envelope e = envelope(s, t - seg_start, entry);
        if (i == 0) {
            state = e;
        } else {
            state.bucket += lag * (e.bucket - state.bucket);
            state.velocity += lag * (e.velocity - state.velocity);
            state.drive += lag * (e.drive - state.drive);
            state.boom += lag * (e.boom - state.boom);
        }
        state.joystick = e.joystick;

        auto& f = out.frames[i];
        f.t = t;
        f.bucket_dp = state.bucket;
        f.velocity = state.velocity;
        f.joystick_dir = state.joystick;
        f.drive_dp = state.drive;
        f.boom_dp = state.boom;
        for (int c = 0; c < data::kChannels; ++c) {
            if (amplitude[c] == 0.0) continue;
            noise[c] = beta * noise[c] + std::sqrt(1.0 - beta * beta) * gauss(rng);
            f.channel(c) += noise[c] * sig.noise_fraction * amplitude[c] * noise_scale;
        }
        if (sig.miscalibrated) {
            f.bucket_dp += 12.0;
            f.drive_dp *= 1.25;
            f.boom_dp -= 8.0;
            f.velocity *= 0.9;
        }
        out.labels[i] = s.label;
    }
    return out;
}

data::LabeledSeries generate_cycle(const DriverProfile& profile, double distance, std::uint64_t seed,
                                   const SignalConfig& signals) {
    const CyclePlan plan = plan_cycle(profile, distance, seed);
    auto series = render_cycle(plan, signals, splitmix64(seed));
    series.info.driver = profile.name;
    series.info.seed = seed;
    return series;
}

DatasetConfig default_dataset_config() {
    DatasetConfig c;
    c.roster = {
        {{"experienced_test_engineer", 0.45, 0.95, 30.0, 0.1}, 40, false, false, 3},
        {{"aggressive_development_engineer", 0.9, 0.8, 28.0, 0.15}, 30, false, false, 0},
        {{"poorly_calibrated_machine", 0.5, 0.85, 30.0, 0.1}, 20, true, true, 0},
        {{"senior_manager", 0.3, 0.9, 32.0, 0.1}, 29, false, false, 2},
    };
    return c;
}

DatasetConfig resize_roster(const DatasetConfig& config, int total) {
    if (total < 1) throw ConfigError("dataset: cycle count must be >= 1");
    long long current = 0;
    for (const auto& r : config.roster) current += r.cycles;
    if (current <= 0) throw ConfigError("dataset: roster is empty");

    // Largest-remainder apportionment; ties go to the earlier entry.
    std::vector<long long> counts;
    std::vector<std::pair<double, std::size_t>> remainders;
    long long assigned = 0;
    for (std::size_t i = 0; i < config.roster.size(); ++i) {
        const double exact = static_cast<double>(config.roster[i].cycles) * total / static_cast<double>(current);
        counts.push_back(static_cast<long long>(std::floor(exact)));
        assigned += counts.back();
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) counts[remainders[k % remainders.size()].second] += 1;

    DatasetConfig out = config;
    out.roster.clear();
    for (std::size_t i = 0; i < config.roster.size(); ++i) {
        if (counts[i] == 0) continue;
        out.roster.push_back(config.roster[i]);
        out.roster.back().cycles = static_cast<int>(counts[i]);
    }
    return out;
}

std::uint64_t cycle_seed(std::uint64_t master_seed, std::size_t index) {
    return splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

std::vector<data::LabeledSeries> generate_dataset(const DatasetConfig& config, std::uint64_t seed) {
    if (config.session_length < 1) throw ConfigError("dataset: session length must be >= 1");
    std::vector<data::LabeledSeries> out;
    std::size_t index = 0;
    for (const auto& entry : config.roster) {
        if (entry.cycles < 1) throw ConfigError("dataset: roster cycle counts must be positive");
        entry.profile.validate();
        for (int k = 0; k < entry.cycles; ++k, ++index) {
            const std::uint64_t s = cycle_seed(seed, index);
            std::mt19937_64 rng(s);
            std::uniform_real_distribution<double> dist(config.geometry.min_distance, config.geometry.max_distance);
            const int session = k / config.session_length;
            SignalConfig signals = config.signals;
            signals.miscalibrated = entry.miscalibrated;
            const bool rainy = entry.rainy_every > 0 && session % entry.rainy_every == entry.rainy_every - 1;
            if (rainy) signals.material_density *= config.rainy_density;

            auto series = generate_cycle(entry.profile, dist(rng), s, signals);
            series.info.cycle_id = static_cast<int>(index);
            series.info.session = entry.profile.name + "/day" + std::to_string(session + 1) + (rainy ? "/rain" : "");
            series.info.force_train = entry.force_train;
            out.push_back(std::move(series));
        }
    }
    return out;
}

nlohmann::json to_json(const DatasetConfig& c) {
    nlohmann::json roster = nlohmann::json::array();
    for (const auto& e : c.roster) {
        roster.push_back({{"name", e.profile.name},
                          {"aggressiveness", e.profile.aggressiveness},
                          {"proficiency", e.profile.proficiency},
                          {"base_cycle_duration", e.profile.base_cycle_duration},
                          {"duration_jitter", e.profile.duration_jitter},
                          {"cycles", e.cycles},
                          {"force_train", e.force_train},
                          {"miscalibrated", e.miscalibrated},
                          {"rainy_every", e.rainy_every}});
    }
    const auto& s = c.signals;
    return {{"roster", roster},
            {"signals",
             {{"bucket_empty", s.bucket_empty},
              {"bucket_carry", s.bucket_carry},
              {"bucket_dig_peak", s.bucket_dig_peak},
              {"boom_empty", s.boom_empty},
              {"boom_loaded", s.boom_loaded},
              {"boom_dump_peak", s.boom_dump_peak},
              {"drive_dig_peak", s.drive_dig_peak},
              {"drive_rolling", s.drive_rolling},
              {"drive_per_accel", s.drive_per_accel},
              {"noise_fraction", s.noise_fraction},
              {"noise_tau", s.noise_tau},
              {"sensor_tau", s.sensor_tau},
              {"material_density", s.material_density}}},
            {"geometry", {{"min_distance", c.geometry.min_distance}, {"max_distance", c.geometry.max_distance}}},
            {"rainy_density", c.rainy_density},
            {"session_length", c.session_length}};
}

} // namespace crdnn::synth
