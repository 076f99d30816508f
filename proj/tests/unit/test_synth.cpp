#include "doctest.h"

#include "crdnn/errors.hpp"
#include "crdnn/synth/generator.hpp"

#include <cmath>

using namespace crdnn;
using namespace crdnn::synth;

namespace {

DriverProfile clean_driver() {
    DriverProfile p;
    p.name = "clean";
    p.aggressiveness = 0.5;
    p.proficiency = 1.0;
    p.duration_jitter = 0.0;
    return p;
}

struct ClassMeans {
    double speed[3] = {};
    double bucket[3] = {};
    std::size_t n[3] = {};
};

ClassMeans class_means(const data::LabeledSeries& s) {
    ClassMeans m;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const int l = s.labels[i];
        m.speed[l] += std::abs(s.frames[i].velocity);
        m.bucket[l] += s.frames[i].bucket_dp;
        ++m.n[l];
    }
    for (int l = 0; l < 3; ++l) {
        if (m.n[l] == 0) continue;
        m.speed[l] /= static_cast<double>(m.n[l]);
        m.bucket[l] /= static_cast<double>(m.n[l]);
    }
    return m;
}

} // namespace

TEST_CASE("clean driver gives a deterministic six-segment cycle") {
    const auto plan = plan_cycle(clean_driver(), 12.0, 3);
    REQUIRE(plan.segments.size() == 6);
    CHECK_FALSE(plan.double_dig);
    const SegmentKind order[] = {SegmentKind::ApproachTravel, SegmentKind::Loading,   SegmentKind::ReverseTravel,
                                 SegmentKind::ForwardTravel,  SegmentKind::Unloading, SegmentKind::ReturnTravel};
    for (std::size_t i = 0; i < 6; ++i) CHECK(plan.segments[i].kind == order[i]);
    CHECK(generate_cycle(clean_driver(), 12.0, 3) == generate_cycle(clean_driver(), 12.0, 3));
}

TEST_CASE("low proficiency produces double digs") {
    DriverProfile p = clean_driver();
    p.proficiency = 0.5;
    int doubles = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) doubles += plan_cycle(p, 12.0, seed).double_dig ? 1 : 0;
    CHECK(doubles > 10);
    CHECK(doubles < 50);
}

TEST_CASE("generated series respect the frame contract and the envelopes") {
    DriverProfile p = clean_driver();
    p.proficiency = 0.7;
    p.duration_jitter = 0.1;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = generate_cycle(p, 8.0 + static_cast<double>(seed), seed);
        CHECK_NOTHROW(s.validate());
        const auto m = class_means(s);
        CHECK(m.speed[1] < m.speed[0]);
        CHECK(m.bucket[1] > m.bucket[0]);
        CHECK(m.speed[2] < m.speed[0]);
        // Net displacement: the machine returns near its start.
        double x = 0.0;
        for (const auto& f : s.frames) x += f.velocity * data::kSamplePeriod;
        CHECK(std::abs(x) < 1.5);
    }
}

TEST_CASE("plan kinematics close the trajectory exactly") {
    DriverProfile p = clean_driver();
    p.proficiency = 0.3;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto plan = plan_cycle(p, 10.0, seed);
        double net = 0.0;
        for (const auto& s : plan.segments) {
            const double dir = (s.kind == SegmentKind::ReverseTravel || s.kind == SegmentKind::ReturnTravel) ? -1.0 : 1.0;
            net += dir * s.distance;
        }
        CHECK(std::abs(net) < 1e-9);
    }
}

TEST_CASE("default roster mirrors the dataset composition and class skew") {
    const auto cfg = default_dataset_config();
    int total = 0, forced = 0;
    for (const auto& r : cfg.roster) {
        total += r.cycles;
        if (r.force_train) forced += r.cycles;
    }
    CHECK(total == 119);
    CHECK(forced == 20);

    const auto cycles = generate_dataset(cfg, 11);
    REQUIRE(cycles.size() == 119);
    std::size_t tagged = 0, frames = 0, loading = 0, unloading = 0;
    for (const auto& c : cycles) {
        tagged += c.info.force_train ? 1 : 0;
        for (int l : c.labels) {
            loading += l == 1;
            unloading += l == 2;
        }
        frames += c.size();
    }
    CHECK(tagged == 20);
    const double fl = static_cast<double>(loading) / static_cast<double>(frames);
    const double fu = static_cast<double>(unloading) / static_cast<double>(frames);
    CHECK(std::abs(fl - 0.1162) <= 0.02);
    CHECK(std::abs(fu - 0.0786) <= 0.02);
}

TEST_CASE("dataset generation is seed-deterministic and order-independent") {
    auto cfg = default_dataset_config();
    for (auto& r : cfg.roster) r.cycles = 2;
    const auto a = generate_dataset(cfg, 4);
    const auto b = generate_dataset(cfg, 4);
    CHECK(a == b);
    CHECK(generate_dataset(cfg, 5) != a);
    CHECK(cycle_seed(4, 3) == cycle_seed(4, 3));
    CHECK(cycle_seed(4, 3) != cycle_seed(4, 2));
}

TEST_CASE("material density scales the load pressures") {
    DriverProfile p = clean_driver();
    SignalConfig dry;
    dry.noise_fraction = 0.0;
    SignalConfig wet = dry;
    wet.material_density = 1.2;
    const auto a = generate_cycle(p, 12.0, 8, dry);
    const auto b = generate_cycle(p, 12.0, 8, wet);
    REQUIRE(a.size() == b.size());
    double peak_a = 0.0, peak_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.labels[i] != 1) continue;
        peak_a = std::max(peak_a, a.frames[i].bucket_dp);
        peak_b = std::max(peak_b, b.frames[i].bucket_dp);
    }
    CHECK(peak_b / peak_a == doctest::Approx(1.2).epsilon(0.02));
}

TEST_CASE("profile validation") {
    DriverProfile p;
    p.aggressiveness = 1.5;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK_THROWS_AS(plan_cycle(clean_driver(), 0.0, 1), InputError);
}

TEST_CASE("roster resizing keeps proportions and the total") {
    const auto base = default_dataset_config();
    for (int total : {1, 2, 10, 50, 119, 300}) {
        const auto cfg = resize_roster(base, total);
        int sum = 0;
        for (const auto& r : cfg.roster) {
            CHECK(r.cycles > 0);
            sum += r.cycles;
        }
        CHECK(sum == total);
    }
    const auto ten = resize_roster(base, 10);
    REQUIRE(ten.roster.size() == 4);
    CHECK(ten.roster[0].cycles == 3);
    CHECK(ten.roster[1].cycles == 3);
    CHECK(ten.roster[2].cycles == 2);
    CHECK(ten.roster[3].cycles == 2);
    CHECK(resize_roster(base, 119).roster[3].cycles == 29);
    CHECK_THROWS_AS(resize_roster(base, 0), ConfigError);
}
