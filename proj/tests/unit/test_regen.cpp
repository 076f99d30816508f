#include "doctest.h"

#include "crdnn/errors.hpp"
#include "crdnn/regen/regen.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace crdnn;
using namespace crdnn::regen;

TEST_CASE("reference vehicle defaults") {
    const Scenario s = reference_scenario();
    CHECK(s.vehicle_mass == 10000.0);
    CHECK(s.material_mass == 4000.0);
    CHECK(s.efficiency.pump == 0.8);
    CHECK(s.efficiency.motor == 0.8);
    CHECK(s.efficiency.mechanical == 0.98);
    CHECK(s.gravity == 9.81);
    CHECK(s.efficiency.regeneration_chain() == doctest::Approx(0.8 * 0.98 * 0.8).epsilon(1e-15));
}

TEST_CASE("stationary profile regenerates nothing") {
    Scenario s = reference_scenario();
    s.profile = {{5.0, 0.0, 0.0, true}, {3.0, 0.0, 0.0, false}};
    const auto l = simulate_cycle(s);
    CHECK(l.regenerated == 0.0);
    CHECK(l.efficiency_gain == 0.0);
    CHECK(l.baseline_energy == 0.0);
}

TEST_CASE("single braking phase matches hand arithmetic") {
    Scenario s = reference_scenario();
    s.rolling_friction_mu = 0.01;
    // 14 t braking from 2.78 m/s to rest over 3 s: 4.17 m.
    s.profile = {{3.0, 2.78, 0.0, true}};
    const auto l = simulate_cycle(s);
    REQUIRE(l.decel_phases.size() == 1);
    const auto& p = l.decel_phases[0];
    const double ke = 0.5 * 14000.0 * 2.78 * 2.78;  // 54 098.8 J
    CHECK(p.kinetic_at_onset == doctest::Approx(ke).epsilon(1e-14));
    CHECK(ke == doctest::Approx(54098.8).epsilon(1e-12));
    const double rolling = 0.01 * 14000.0 * 9.81 * (0.5 * 2.78 * 3.0);
    CHECK(p.rolling_loss == doctest::Approx(rolling).epsilon(1e-14));
    CHECK(p.regenerated == doctest::Approx((ke - rolling) * 0.8 * 0.98 * 0.8).epsilon(1e-14));
    CHECK(p.regenerated <= ke * 0.8 * 0.98 * 0.8);
    CHECK(p.regenerated + p.rolling_loss + p.chain_loss <= ke * (1.0 + 1e-15));
}

TEST_CASE("high rolling friction defeats regeneration") {
    Scenario s = representative_scenario();
    s.rolling_friction_mu = 0.3;
    const auto l = simulate_cycle(s);
    CHECK(l.regenerated == 0.0);
    for (const auto& p : l.decel_phases) CHECK(p.recoverable == 0.0);
}

TEST_CASE("representative cycle lands in the expected gain band") {
    const auto l = simulate_cycle(representative_scenario());
    CHECK(l.decel_phases.size() == 2);
    CHECK(l.efficiency_gain >= 0.05);
    CHECK(l.efficiency_gain <= 0.12);
}

TEST_CASE("energy ledger invariants over a sweep") {
    const std::vector<double> mus{0.01, 0.05, 0.3};
    const std::vector<double> speeds{1.0, 2.0, 2.78, 4.0};
    const std::vector<double> masses{0.0, 2000.0, 4000.0};
    const auto rows = sweep(reference_scenario(), RepresentativeCycle{}, mus, speeds, masses);
    CHECK(rows.size() == mus.size() * speeds.size() * masses.size());
    for (const auto& r : rows) {
        CHECK(r.ledger.regenerated >= 0.0);
        CHECK(r.ledger.rolling_losses >= 0.0);
        for (double w : r.ledger.traction_input) CHECK(w >= 0.0);
        for (const auto& p : r.ledger.decel_phases) {
            CHECK(p.regenerated <= p.kinetic_at_onset);
            CHECK(p.regenerated + p.rolling_loss + p.chain_loss <= p.kinetic_at_onset * (1.0 + 1e-12));
        }
    }
    // Monotone in mu (rows for one (mass, speed) pair are consecutive, mu ascending).
    for (std::size_t i = 0; i < rows.size(); i += 3) {
        CHECK(rows[i].ledger.efficiency_gain >= rows[i + 1].ledger.efficiency_gain);
        CHECK(rows[i + 1].ledger.efficiency_gain >= rows[i + 2].ledger.efficiency_gain);
    }
    // Monotone in speed for fixed (mass, mu).
    for (std::size_t m = 0; m < masses.size(); ++m) {
        for (std::size_t u = 0; u < mus.size(); ++u) {
            for (std::size_t v = 1; v < speeds.size(); ++v) {
                const auto& lo = rows[(m * speeds.size() + v - 1) * mus.size() + u];
                const auto& hi = rows[(m * speeds.size() + v) * mus.size() + u];
                CHECK(lo.speed < hi.speed);
                CHECK(hi.ledger.efficiency_gain >= lo.ledger.efficiency_gain);
            }
        }
    }
    const auto table = render_sweep_table(rows);
    CHECK(table.find("mu") != std::string::npos);
    CHECK(static_cast<std::size_t>(std::count(table.begin(), table.end(), '\n')) == rows.size() + 1);
}

TEST_CASE("non-physical input is rejected") {
    Scenario s = representative_scenario();
    s.vehicle_mass = -1.0;
    CHECK_THROWS_AS(simulate_cycle(s), InputError);
    Scenario jump = reference_scenario();
    jump.profile = {{2.0, 0.0, 2.0, false}, {2.0, 3.0, 0.0, false}};
    CHECK_THROWS_AS(simulate_cycle(jump), InputError);
    Scenario eff = representative_scenario();
    eff.efficiency.pump = 1.2;
    CHECK_THROWS_AS(simulate_cycle(eff), InputError);
    CHECK_THROWS_AS(sweep(reference_scenario(), RepresentativeCycle{}, {}, std::vector<double>{1.0}, std::vector<double>{1.0}),
                    InputError);
}

TEST_CASE("reversing through zero splits the segment") {
    Scenario s = reference_scenario();
    s.rolling_friction_mu = 0.0;
    s.profile = {{2.0, 2.0, -2.0, false}};
    const auto l = simulate_cycle(s);
    REQUIRE(l.decel_phases.size() == 1);
    CHECK(l.decel_phases[0].kinetic_at_onset == doctest::Approx(0.5 * 10000.0 * 4.0));
    CHECK(l.traction_input.size() == 2);
    CHECK(l.traction_input[1] == doctest::Approx(0.5 * 10000.0 * 4.0));
}

TEST_CASE("stage toggles change only the chain") {
    Scenario s = representative_scenario();
    const auto full = simulate_cycle(s);
    s.efficiency.use_pump = false;
    const auto no_pump = simulate_cycle(s);
    CHECK(no_pump.regenerated == doctest::Approx(full.regenerated / 0.8).epsilon(1e-14));
    CHECK(no_pump.baseline_energy == full.baseline_energy);
}

TEST_CASE("profile from samples and from config") {
    const std::vector<double> t{0.0, 1.0, 2.0};
    const std::vector<double> v{0.0, 1.0, 0.0};
    const std::vector<bool> loaded{true, true, false};
    const auto p = profile_from_samples(t, v, loaded);
    REQUIRE(p.size() == 2);
    CHECK(p[0].duration == 1.0);
    CHECK(p[1].v_start == 1.0);
    CHECK(p[1].loaded);
    CHECK_THROWS_AS(profile_from_samples(t, std::vector<double>{0.0, 1.0}, loaded), InputError);

    auto cfg = util::FlatConfig::parse("mu = 0.01\nmaterial_mass = 2000\nprofile.segments = 2:0:2:1; 2:2:0:1\n");
    const auto s = scenario_from_config(cfg);
    CHECK(s.rolling_friction_mu == 0.01);
    CHECK(s.material_mass == 2000.0);
    REQUIRE(s.profile.size() == 2);
    CHECK(s.profile[1].v_start == 2.0);
    CHECK(s.profile[1].loaded);
    CHECK(cfg.unused_keys().empty());

    auto rep = scenario_from_config(util::FlatConfig::parse("cycle.speed = 3.5\n"));
    CHECK(rep.profile.size() == 6);
    CHECK(rep.profile[1].v_start == 3.5);
    CHECK_THROWS_AS(scenario_from_config(util::FlatConfig::parse("profile.segments = 2:0:2\n")), ConfigError);
}
