#include "doctest.h"

#include "crdnn/data/pipeline.hpp"
#include "crdnn/data/telemetry.hpp"
#include "crdnn/errors.hpp"
#include "crdnn/util/bytes.hpp"

#include <cmath>
#include <filesystem>
#include <random>

#include <unistd.h>

using namespace crdnn;
using namespace crdnn::data;

namespace {

LabeledSeries make_series(std::size_t n, std::uint64_t seed, int cycle_id = 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    LabeledSeries s;
    s.info.cycle_id = cycle_id;
    s.info.driver = "test";
    for (std::size_t i = 0; i < n; ++i) {
        TelemetryFrame f;
        f.t = static_cast<double>(i) * kSamplePeriod;
        f.bucket_dp = 50.0 + 10.0 * noise(rng);
        f.velocity = std::sin(0.01 * static_cast<double>(i)) + 0.1 * noise(rng);
        f.joystick_dir = (i / 100) % 3 == 0 ? -1.0 : ((i / 100) % 3 == 1 ? 0.0 : 1.0);
        f.drive_dp = 100.0 + 20.0 * noise(rng);
        f.boom_dp = 30.0 + 5.0 * noise(rng);
        s.frames.push_back(f);
        s.labels.push_back(static_cast<int>((i / 150) % 3));
    }
    return s;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("crdnn_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("smooth: constant input stays constant") {
    auto s = make_series(200, 1);
    for (auto& f : s.frames) f.bucket_dp = 42.0;
    auto y = smooth(s);
    for (const auto& f : y.frames) CHECK(f.bucket_dp == doctest::Approx(42.0).epsilon(1e-14));
}

TEST_CASE("smooth: step response reaches 1 - 1/e after one time constant") {
    auto s = make_series(200, 2);
    for (std::size_t i = 0; i < s.size(); ++i) s.frames[i].velocity = i == 0 ? 0.0 : 1.0;
    const double tau = 0.2;
    auto y = smooth(s, smoothing_alpha(tau));
    // The step arrives at frame 1; one time constant later is frame 1 + 10.
    const std::size_t one_tau = 1 + static_cast<std::size_t>(std::lround(tau / kSamplePeriod));
    CHECK(1.0 - y.frames[one_tau].velocity <= std::exp(-1.0));
    CHECK(y.frames[one_tau].velocity < 1.0);
    const double a = smoothing_alpha(tau);
    for (std::size_t n = 1; n < 40; ++n)
        CHECK(y.frames[n].velocity == doctest::Approx(1.0 - std::pow(1.0 - a, static_cast<double>(n))).epsilon(1e-13));
    CHECK(smoothing_alpha(0.2) == doctest::Approx(0.02 / 0.22).epsilon(1e-15));
}

TEST_CASE("smooth: alpha 1 is the identity and joystick passes through") {
    auto s = make_series(300, 3);
    CHECK(smooth(s, 1.0) == s);
    auto y = smooth(s);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(y.frames[i].joystick_dir == s.frames[i].joystick_dir);
    CHECK(y.frames[5].bucket_dp != s.frames[5].bucket_dp);
}

TEST_CASE("normalize: training data gets zero mean, unit std") {
    auto s = make_series(1000, 4);
    auto [z, stats] = normalize(s);
    for (int c = 0; c < kChannels; ++c) {
        double mean = 0.0, sq = 0.0;
        for (const auto& f : z.frames) mean += f.channel(c);
        mean /= static_cast<double>(z.size());
        for (const auto& f : z.frames) sq += (f.channel(c) - mean) * (f.channel(c) - mean);
        CHECK(std::abs(mean) <= 1e-9);
        CHECK(std::abs(std::sqrt(sq / static_cast<double>(z.size())) - 1.0) <= 1e-9);
    }
    CHECK(stats.frames == 1000);
}

TEST_CASE("normalize: given statistics are reused, not recomputed") {
    auto train = make_series(1000, 5);
    auto test = make_series(500, 6);
    for (auto& f : test.frames) f.bucket_dp += 7.0;
    auto [ztrain, stats] = normalize(train);
    auto [ztest, used] = normalize(test, &stats);
    CHECK(used == stats);
    double mean = 0.0;
    for (const auto& f : ztest.frames) mean += f.bucket_dp;
    CHECK(std::abs(mean / 500.0) > 0.1);
}

TEST_CASE("normalize: constant channel maps to zeros") {
    auto s = make_series(100, 7);
    for (auto& f : s.frames) f.boom_dp = 3.0;
    auto [z, stats] = normalize(s);
    CHECK(stats.zero_variance[static_cast<int>(Channel::BoomDp)]);
    for (const auto& f : z.frames) CHECK(f.boom_dp == 0.0);
}

TEST_CASE("stats carry provenance and survive json") {
    std::vector<LabeledSeries> v{make_series(300, 8)};
    auto st = compute_stats(v, "training split");
    CHECK(st.provenance == "training split");
    CHECK(stats_from_json(to_json(st)) == st);
}

TEST_CASE("make_windows: counts, offsets and final-frame labels") {
    auto s = make_series(1000, 9);
    WindowOptions o;
    o.window_size = 25;
    o.decimation = 10;
    o.stride = 1;
    auto b = make_windows(s, o);
    std::size_t expected = 0;
    for (std::size_t anchor = 0; anchor + 240 < 1000; ++anchor) ++expected;
    CHECK(expected == 760);
    REQUIRE(b.size() == expected);
    CHECK(o.span() == 241);
    CHECK(static_cast<double>(o.span()) * kSamplePeriod == doctest::Approx(4.82));
    for (std::size_t w : {std::size_t{0}, std::size_t{17}, std::size_t{759}}) {
        for (int k = 0; k < 25; ++k) {
            const auto& f = s.frames[w + static_cast<std::size_t>(k) * 10];
            for (int c = 0; c < kChannels; ++c) CHECK(b.windows[w](k, c) == f.channel(c));
        }
        CHECK(b.labels[w] == s.labels[w + 240]);
        CHECK(b.end_frames[w] == w + 240);
    }
    for (nn::Index i = 0; i < b.targets.rows(); ++i) {
        CHECK(b.targets.row(i).sum() == 1.0);
        CHECK(b.targets(i, b.labels[static_cast<std::size_t>(i)]) == 1.0);
    }
}

TEST_CASE("make_windows: loading label gives [0,1,0]") {
    auto s = make_series(100, 10);
    for (auto& l : s.labels) l = 1;
    WindowOptions o;
    o.window_size = 9;
    o.decimation = 10;
    auto b = make_windows(s, o);
    CHECK(b.targets(0, 0) == 0.0);
    CHECK(b.targets(0, 1) == 1.0);
    CHECK(b.targets(0, 2) == 0.0);
}

TEST_CASE("make_windows: stride, alignment and short series") {
    auto s = make_series(1000, 11);
    WindowOptions o;
    o.window_size = 9;
    o.stride = 25;
    o.align_end = 240;
    auto b = make_windows(s, o);
    for (auto e : b.end_frames) CHECK((e - 240) % 25 == 0);
    CHECK(b.end_frames.front() == 240);
    WindowOptions big;
    big.window_size = 25;
    CHECK_THROWS_AS(make_windows(make_series(240, 12), big), InputError);
    CHECK_NOTHROW(make_windows(make_series(241, 12), big));
}

TEST_CASE("make_windows: shifting the series shifts every anchor") {
    auto s = make_series(600, 13);
    const std::size_t k = 37;
    LabeledSeries shifted = s;
    shifted.frames.insert(shifted.frames.begin(), k, s.frames.front());
    shifted.labels.insert(shifted.labels.begin(), k, 0);
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted.frames[i].t = static_cast<double>(i) * kSamplePeriod;
    WindowOptions o;
    o.window_size = 15;
    auto a = make_windows(s, o);
    auto b = make_windows(shifted, o);
    REQUIRE(b.size() == a.size() + k);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(b.windows[i + k] == a.windows[i]);
        CHECK(b.end_frames[i + k] == a.end_frames[i] + k);
    }
}

TEST_CASE("split_dataset: whole cycles, floor on train, forced cycles, determinism") {
    std::vector<LabeledSeries> cycles;
    for (int i = 0; i < 119; ++i) {
        LabeledSeries c;
        c.info.cycle_id = i;
        c.info.force_train = i >= 40 && i < 60;
        cycles.push_back(c);
    }
    auto s = split_dataset(cycles, 0.8, 3);
    CHECK(s.train.size() == 95);
    CHECK(s.test.size() == 24);
    for (auto i : s.test) CHECK_FALSE(cycles[i].info.force_train);
    auto again = split_dataset(cycles, 0.8, 3);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
    auto other = split_dataset(cycles, 0.8, 4);
    CHECK(other.test != s.test);
    std::vector<LabeledSeries> one(1);
    CHECK_THROWS_AS(split_dataset(one, 0.8, 1), InputError);
}

TEST_CASE("inject_mislabels: identity at rate 0, range check, audit log") {
    auto s = make_series(3000, 14);
    MislabelRule rule;
    auto same = inject_mislabels(s, 0.0, rule, 1);
    CHECK(same.series == s);
    CHECK(same.flips.empty());
    CHECK_THROWS_AS(inject_mislabels(s, 0.06, rule, 1), InputError);
    CHECK_THROWS_AS(inject_mislabels(s, -0.01, rule, 1), InputError);

    auto r = inject_mislabels(s, 0.01, rule, 2);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (r.series.labels[i] != s.labels[i]) {
            ++changed;
            CHECK(r.series.labels[i] == 0);
            bool logged = false;
            for (const auto& f : r.flips) logged = logged || (i >= f.begin && i < f.end && f.true_label == s.labels[i]);
            CHECK(logged);
        }
    }
    CHECK(changed == 30);
    for (const auto& f : r.flips)
        for (std::size_t i = f.begin; i < f.end; ++i) CHECK(s.labels[i] == f.true_label);
}

TEST_CASE("telemetry: csv and binary round trips") {
    auto s = make_series(120, 15, 7);
    s.info.session = "s01";
    s.info.force_train = true;
    s.info.seed = 99;
    CHECK(from_csv(to_csv(s)) == s);
    CHECK(from_binary(to_binary(s)) == s);
    const auto csv = to_csv(s);
    CHECK(csv.find("bucket_dp[bar]") != std::string::npos);
}

TEST_CASE("telemetry: validation and version checks") {
    auto s = make_series(50, 16);
    CHECK_NOTHROW(s.validate());
    auto gap = s;
    gap.frames[10].t += 0.001;
    CHECK_THROWS_AS(gap.validate(), InputError);
    auto short_labels = s;
    short_labels.labels.pop_back();
    CHECK_THROWS_AS(short_labels.validate(), InputError);

    auto bytes = to_binary(s);
    bytes[8] = 9;  // version field
    CHECK_THROWS_AS(from_binary(bytes), VersionError);
    auto csv = to_csv(s);
    csv.replace(csv.find("v1"), 2, "v7");
    CHECK_THROWS_AS(from_csv(csv), VersionError);
}

TEST_CASE("telemetry: dataset directory round trip") {
    const auto dir = temp_dir("dataset");
    std::vector<LabeledSeries> cycles{make_series(80, 17, 0), make_series(90, 18, 1)};
    save_dataset(dir, cycles, {{"seed", 5}}, TelemetryFormat::Binary);
    nlohmann::json manifest;
    auto back = load_dataset(dir, &manifest);
    CHECK(back == cycles);
    CHECK(manifest.at("run").at("seed") == 5);
    save_series(dir / "one.csv", cycles[0], TelemetryFormat::Csv);
    CHECK(load_series(dir / "one.csv") == cycles[0]);
    CHECK_THROWS_AS(load_series(dir / "missing.tlm"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("transition times mark label changes") {
    auto s = make_series(500, 19);
    auto t = transition_times(s);
    REQUIRE(t.size() == 3);
    CHECK(t[0] == doctest::Approx(150 * kSamplePeriod));
}

TEST_CASE("stream windower reproduces the batch pipeline bit for bit") {
    const auto raw = make_series(1500, 21, 4);
    const auto [norm, stats] = normalize(smooth(raw, 0.1));
    WindowOptions o;
    o.window_size = 15;
    o.decimation = 10;
    o.stride = 7;
    o.align_end = 240;
    const auto batch = make_windows(prepare(std::span(&raw, 1), 0.1, stats), o);
    StreamWindower stream(0.1, stats, o);
    std::size_t k = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto w = stream.push(raw.frames[i]);
        if (!w) continue;
        REQUIRE(k < batch.size());
        CHECK(batch.end_frames[k] == i);
        CHECK(*w == batch.windows[k]);
        ++k;
    }
    CHECK(k == batch.size());
    CHECK(stream.frames_seen() == raw.size());
}
