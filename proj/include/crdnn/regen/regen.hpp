#pragma once

#include "crdnn/util/config.hpp"

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

namespace crdnn::regen {

// Velocity varies linearly inside a segment. Velocities are signed (reverse
// travel is negative); energy terms use speed.
struct Segment {
    double duration = 0.0;  // s
    double v_start = 0.0;   // m/s
    double v_end = 0.0;     // m/s
    bool loaded = false;    // material in the bucket
};

struct Efficiencies {
    double pump = 0.8;        // implement / traction pump
    double motor = 0.8;       // traction motor, also when running as a pump
    double mechanical = 0.98; // gearbox and axles
    // Stage toggles for the regeneration chain motor-as-pump -> mechanical -> pump.
    bool use_motor = true;
    bool use_mechanical = true;
    bool use_pump = true;

    double regeneration_chain() const;
    // Engine-to-wheel efficiency of the drivetrain: pump -> motor -> mechanical.
    double drive_chain() const { return pump * motor * mechanical; }
};

struct Scenario {
    double vehicle_mass = 10000.0;  // kg
    double material_mass = 4000.0;  // kg
    double rolling_friction_mu = 0.05;
    double gravity = 9.81;
    Efficiencies efficiency;
    std::vector<Segment> profile;

    void validate() const;  // throws InputError on non-physical input
};

// Two travel legs of 10 s each, accelerating for accel_time, cruising and
// braking to standstill over decel_time; the first leg carries material.
struct RepresentativeCycle {
    double speed = 2.78;  // m/s, 10 km/h
    double accel_time = 3.0;
    double cruise_time = 4.0;
    double decel_time = 3.0;

    std::vector<Segment> segments() const;
};

// Reference vehicle and environment with an empty profile.
Scenario reference_scenario();
// Reference vehicle driving the representative cycle.
Scenario representative_scenario(const RepresentativeCycle& cycle = {});

struct DecelPhase {
    std::size_t segment = 0;
    double mass = 0.0;
    double onset_speed = 0.0;
    double kinetic_at_onset = 0.0;  // 1/2 m v0^2
    double released = 0.0;          // 1/2 m (v0^2 - v1^2)
    double rolling_loss = 0.0;      // rolling resistance absorbed during the phase
    double recoverable = 0.0;       // released minus rolling, floored at 0
    double chain_loss = 0.0;
    double regenerated = 0.0;       // recoverable after the regeneration chain
};

struct EnergyLedger {
    std::vector<double> traction_input;  // wheel work per segment, J (0 while braking)
    double rolling_losses = 0.0;         // whole cycle, J
    std::vector<DecelPhase> decel_phases;
    double regenerated = 0.0;
    double wheel_work = 0.0;         // sum of traction_input
    double baseline_energy = 0.0;    // engine energy for traction, no regeneration
    double efficiency_gain = 0.0;    // regenerated / baseline_energy
};

EnergyLedger simulate_cycle(const Scenario& scenario);

// Profile from sampled signed velocities: each pair of consecutive samples is
// one segment.
std::vector<Segment> profile_from_samples(std::span<const double> times, std::span<const double> velocities,
                                          const std::vector<bool>& loaded);

struct SweepRow {
    double mu = 0.0;
    double speed = 0.0;
    double material_mass = 0.0;
    EnergyLedger ledger;
};

// Full factorial over mu x speed x material mass on the representative cycle
// (speed replaces its cruise speed).
std::vector<SweepRow> sweep(const Scenario& base, const RepresentativeCycle& cycle, std::span<const double> mu_values,
                            std::span<const double> speed_values, std::span<const double> material_masses);

std::string render_sweep_table(std::span<const SweepRow> rows, char delimiter = ',');
nlohmann::json to_json(const EnergyLedger& ledger);

// Scenario from flat config keys (vehicle_mass, material_mass, mu, gravity,
// efficiency.*, cycle.*, or profile.segments = "dur:v0:v1:loaded; ...").
Scenario scenario_from_config(const util::FlatConfig& cfg, RepresentativeCycle* cycle_out = nullptr);

} // namespace crdnn::regen
