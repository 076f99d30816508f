#include "crdnn/regen/regen.hpp"

#include "crdnn/errors.hpp"
#include "crdnn/util/format.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crdnn::regen {

namespace {

constexpr double kContinuityTol = 1e-9;

bool in_unit_interval(double x) { return x > 0.0 && x <= 1.0; }

// Splits segments whose velocity changes sign so that speed is linear inside
// every piece.
std::vector<Segment> split_zero_crossings(const std::vector<Segment>& profile) {
    std::vector<Segment> out;
    for (const auto& s : profile) {
        if (s.v_start * s.v_end < 0.0) {
            const double a = std::abs(s.v_start), b = std::abs(s.v_end);
            const double t0 = s.duration * a / (a + b);
            out.push_back({t0, s.v_start, 0.0, s.loaded});
            out.push_back({s.duration - t0, 0.0, s.v_end, s.loaded});
        } else {
            out.push_back(s);
        }
    }
    return out;
}

} // namespace

double Efficiencies::regeneration_chain() const {
    double e = 1.0;
    if (use_motor) e *= motor;
    if (use_mechanical) e *= mechanical;
    if (use_pump) e *= pump;
    return e;
}

void Scenario::validate() const {
    if (!(vehicle_mass > 0.0) || !std::isfinite(vehicle_mass)) throw InputError("regen: vehicle mass must be > 0");
    if (!(material_mass >= 0.0) || !std::isfinite(material_mass)) throw InputError("regen: material mass must be >= 0");
    if (!(rolling_friction_mu >= 0.0) || !std::isfinite(rolling_friction_mu)) throw InputError("regen: mu must be >= 0");
    if (!(gravity > 0.0)) throw InputError("regen: gravity must be > 0");
    if (!in_unit_interval(efficiency.pump) || !in_unit_interval(efficiency.motor) ||
        !in_unit_interval(efficiency.mechanical)) {
        throw InputError("regen: loss coefficients must lie in (0, 1]");
    }
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const auto& s = profile[i];
        if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
            throw InputError("regen: segment " + std::to_string(i) + " has non-positive duration");
        }
        if (!std::isfinite(s.v_start) || !std::isfinite(s.v_end)) {
            throw InputError("regen: segment " + std::to_string(i) + " has non-finite velocity");
        }
        if (i > 0 && std::abs(profile[i - 1].v_end - s.v_start) > kContinuityTol) {
            throw InputError("regen: speed discontinuity between segments " + std::to_string(i - 1) + " and " +
                             std::to_string(i));
        }
    }
}

std::vector<Segment> RepresentativeCycle::segments() const {
    std::vector<Segment> out;
    for (bool loaded : {true, false}) {
        out.push_back({accel_time, 0.0, speed, loaded});
        out.push_back({cruise_time, speed, speed, loaded});
        out.push_back({decel_time, speed, 0.0, loaded});
    }
    return out;
}

Scenario reference_scenario() { return Scenario{}; }

Scenario representative_scenario(const RepresentativeCycle& cycle) {
    Scenario s = reference_scenario();
    s.profile = cycle.segments();
    return s;
}

EnergyLedger simulate_cycle(const Scenario& scenario) {
    scenario.validate();
    const auto profile = split_zero_crossings(scenario.profile);
    const double chain = scenario.efficiency.regeneration_chain();
    EnergyLedger ledger;
    ledger.traction_input.reserve(profile.size());

    for (std::size_t i = 0; i < profile.size(); ++i) {
        const auto& s = profile[i];
        const double m = scenario.vehicle_mass + (s.loaded ? scenario.material_mass : 0.0);
        const double v0 = std::abs(s.v_start), v1 = std::abs(s.v_end);
        const double distance = 0.5 * (v0 + v1) * s.duration;
        const double rolling = scenario.rolling_friction_mu * m * scenario.gravity * distance;
        const double delta_ke = 0.5 * m * (v1 * v1 - v0 * v0);
        ledger.rolling_losses += rolling;

        if (v1 < v0) {
            const double released = -delta_ke;
            DecelPhase p;
            p.segment = i;
            p.mass = m;
            p.onset_speed = v0;
            p.kinetic_at_onset = 0.5 * m * v0 * v0;
            p.released = released;
            p.rolling_loss = std::min(rolling, released);
            p.recoverable = std::max(0.0, released - rolling);
            p.regenerated = p.recoverable * chain;
            p.chain_loss = p.recoverable - p.regenerated;
            ledger.regenerated += p.regenerated;
            ledger.decel_phases.push_back(p);
            ledger.traction_input.push_back(std::max(0.0, rolling - released));
        } else {
            ledger.traction_input.push_back(delta_ke + rolling);
        }
    }
    for (double w : ledger.traction_input) ledger.wheel_work += w;
    ledger.baseline_energy = ledger.wheel_work / scenario.efficiency.drive_chain();
    ledger.efficiency_gain = ledger.baseline_energy > 0.0 ? ledger.regenerated / ledger.baseline_energy : 0.0;
    return ledger;
}

std::vector<Segment> profile_from_samples(std::span<const double> times, std::span<const double> velocities,
                                          const std::vector<bool>& loaded) {
    if (times.size() != velocities.size() || times.size() != loaded.size()) {
        throw InputError("regen: sample arrays differ in length");
    }
    std::vector<Segment> out;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double dt = times[i] - times[i - 1];
        if (!(dt > 0.0)) throw InputError("regen: sample times must increase (index " + std::to_string(i) + ")");
        out.push_back({dt, velocities[i - 1], velocities[i], loaded[i - 1]});
    }
    return out;
}

std::vector<SweepRow> sweep(const Scenario& base, const RepresentativeCycle& cycle, std::span<const double> mu_values,
                            std::span<const double> speed_values, std::span<const double> material_masses) {
    if (mu_values.empty() || speed_values.empty() || material_masses.empty()) {
        throw InputError("regen: sweep value lists must be non-empty");
    }
    std::vector<SweepRow> rows;
    for (double mass : material_masses) {
        for (double speed : speed_values) {
            RepresentativeCycle c = cycle;
            c.speed = speed;
            for (double mu : mu_values) {
                Scenario s = base;
                s.material_mass = mass;
                s.rolling_friction_mu = mu;
                s.profile = c.segments();
                rows.push_back({mu, speed, mass, simulate_cycle(s)});
            }
        }
    }
    return rows;
}

std::string render_sweep_table(std::span<const SweepRow> rows, char d) {
    std::ostringstream os;
    os << "material_mass_kg" << d << "speed_mps" << d << "mu" << d << "kinetic_at_onset_J" << d << "rolling_losses_J"
       << d << "regenerated_J" << d << "baseline_J" << d << "efficiency_gain\n";
    for (const auto& r : rows) {
        double ke = 0.0;
        for (const auto& p : r.ledger.decel_phases) ke += p.kinetic_at_onset;
        os << util::format_double(r.material_mass) << d << util::format_double(r.speed) << d
           << util::format_double(r.mu) << d << util::format_double(ke) << d
           << util::format_double(r.ledger.rolling_losses) << d << util::format_double(r.ledger.regenerated) << d
           << util::format_double(r.ledger.baseline_energy) << d << util::format_double(r.ledger.efficiency_gain)
           << '\n';
    }
    return os.str();
}

nlohmann::json to_json(const EnergyLedger& l) {
    nlohmann::json phases = nlohmann::json::array();
    for (const auto& p : l.decel_phases) {
        phases.push_back({{"segment", p.segment},
                          {"mass", p.mass},
                          {"onset_speed", p.onset_speed},
                          {"kinetic_at_onset", p.kinetic_at_onset},
                          {"released", p.released},
                          {"rolling_loss", p.rolling_loss},
                          {"recoverable", p.recoverable},
                          {"chain_loss", p.chain_loss},
                          {"regenerated", p.regenerated}});
    }
    return {{"traction_input", l.traction_input},
            {"rolling_losses", l.rolling_losses},
            {"decel_phases", phases},
            {"regenerated", l.regenerated},
            {"wheel_work", l.wheel_work},
            {"baseline_energy", l.baseline_energy},
            {"efficiency_gain", l.efficiency_gain}};
}

Scenario scenario_from_config(const util::FlatConfig& cfg, RepresentativeCycle* cycle_out) {
    Scenario s = reference_scenario();
    s.vehicle_mass = cfg.get_double("vehicle_mass", s.vehicle_mass);
    s.material_mass = cfg.get_double("material_mass", s.material_mass);
    s.rolling_friction_mu = cfg.get_double("mu", s.rolling_friction_mu);
    s.gravity = cfg.get_double("gravity", s.gravity);
    auto& e = s.efficiency;
    e.pump = cfg.get_double("efficiency.pump", e.pump);
    e.motor = cfg.get_double("efficiency.motor", e.motor);
    e.mechanical = cfg.get_double("efficiency.mechanical", e.mechanical);
    e.use_pump = cfg.get_bool("efficiency.use_pump", e.use_pump);
    e.use_motor = cfg.get_bool("efficiency.use_motor", e.use_motor);
    e.use_mechanical = cfg.get_bool("efficiency.use_mechanical", e.use_mechanical);

    RepresentativeCycle c;
    c.speed = cfg.get_double("cycle.speed", c.speed);
    c.accel_time = cfg.get_double("cycle.accel_time", c.accel_time);
    c.cruise_time = cfg.get_double("cycle.cruise_time", c.cruise_time);
    c.decel_time = cfg.get_double("cycle.decel_time", c.decel_time);
    if (cycle_out) *cycle_out = c;

    const std::string segs = cfg.get_string("profile.segments", "");
    if (segs.empty()) {
        s.profile = c.segments();
    } else {
        for (auto item : util::split(segs, ';')) {
            const auto t = util::trim(item);
            if (t.empty()) continue;
            const auto f = util::split(t, ':');
            if (f.size() != 4) throw ConfigError("profile.segments: expected dur:v0:v1:loaded, got '" + std::string(t) + "'");
            Segment seg;
            seg.duration = util::parse_double(f[0]);
            seg.v_start = util::parse_double(f[1]);
            seg.v_end = util::parse_double(f[2]);
            const auto flag = util::trim(f[3]);
            if (flag == "1" || flag == "true") seg.loaded = true;
            else if (flag == "0" || flag == "false") seg.loaded = false;
            else throw ConfigError("profile.segments: loaded flag must be 0/1, got '" + std::string(flag) + "'");
            s.profile.push_back(seg);
        }
    }
    return s;
}

} // namespace crdnn::regen
