#include "crdnn/data/telemetry.hpp"

#include "crdnn/errors.hpp"
#include "crdnn/util/bytes.hpp"
#include "crdnn/util/format.hpp"

#include <cmath>
#include <sstream>

namespace crdnn::data {

const std::array<ChannelInfo, kChannels>& channel_info() {
    static const std::array<ChannelInfo, kChannels> info{{
        {"bucket_dp", "bar", true},
        {"velocity", "m/s", true},
        {"joystick_dir", "-", false},
        {"drive_dp", "bar", true},
        {"boom_dp", "bar", true},
    }};
    return info;
}

double TelemetryFrame::channel(int c) const {
    return const_cast<TelemetryFrame*>(this)->channel(c);
}

double& TelemetryFrame::channel(int c) {
    switch (c) {
    case 0: return bucket_dp;
    case 1: return velocity;
    case 2: return joystick_dir;
    case 3: return drive_dp;
    case 4: return boom_dp;
    default: throw InputError("channel index " + std::to_string(c) + " out of range");
    }
}

void LabeledSeries::validate() const {
    if (labels.size() != frames.size()) {
        throw InputError("series: " + std::to_string(labels.size()) + " labels for " + std::to_string(frames.size()) +
                         " frames");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] > 2) throw InputError("series: invalid label at frame " + std::to_string(i));
    }
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (std::abs(frames[i].t - frames[i - 1].t - kSamplePeriod) > 1e-9) {
            throw InputError("series: frame " + std::to_string(i) + " breaks the 50 Hz spacing");
        }
    }
}

std::vector<double> transition_times(const LabeledSeries& series) {
    std::vector<double> out;
    for (std::size_t i = 1; i < series.labels.size(); ++i) {
        if (series.labels[i] != series.labels[i - 1]) out.push_back(series.frames[i].t);
    }
    return out;
}

nlohmann::json to_json(const SeriesInfo& info) {
    return {{"cycle_id", info.cycle_id},
            {"driver", info.driver},
            {"session", info.session},
            {"force_train", info.force_train},
            {"seed", info.seed}};
}

SeriesInfo series_info_from_json(const nlohmann::json& j) {
    SeriesInfo s;
    s.cycle_id = j.value("cycle_id", 0);
    s.driver = j.value("driver", "");
    s.session = j.value("session", "");
    s.force_train = j.value("force_train", false);
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
}

namespace {

constexpr std::string_view kCsvMagic = "# crdnn-telemetry-csv v";
constexpr std::string_view kMetaPrefix = "# meta ";
constexpr std::string_view kBinMagic = "CRDNNTLM";

std::string csv_header() {
    std::string h = "t[s]";
    for (const auto& c : channel_info()) h += std::string(",") + c.name + "[" + c.unit + "]";
    return h + ",label";
}

} // namespace

std::string to_csv(const LabeledSeries& series) {
    series.validate();
    std::string out;
    out.reserve(series.size() * 80 + 256);
    out += std::string(kCsvMagic) + std::to_string(kTelemetryFormatVersion) + "\n";
    out += std::string(kMetaPrefix) + to_json(series.info).dump() + "\n";
    out += csv_header() + "\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& f = series.frames[i];
        out += util::format_double(f.t);
        for (int c = 0; c < kChannels; ++c) {
            out += ',';
            out += util::format_double(f.channel(c));
        }
        out += ',';
        out += std::to_string(series.labels[i]);
        out += '\n';
    }
    return out;
}

LabeledSeries from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind(kCsvMagic, 0) != 0) throw IoError("telemetry csv: missing format line");
    const std::string version = line.substr(kCsvMagic.size());
    if (version != std::to_string(kTelemetryFormatVersion)) {
        throw VersionError("telemetry csv: unsupported version " + version);
    }
    LabeledSeries s;
    if (!std::getline(in, line) || line.rfind(kMetaPrefix, 0) != 0) throw IoError("telemetry csv: missing meta line");
    try {
        s.info = series_info_from_json(nlohmann::json::parse(line.substr(kMetaPrefix.size())));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("telemetry csv: bad meta: ") + e.what());
    }
    if (!std::getline(in, line) || line != csv_header()) throw IoError("telemetry csv: unexpected column header");
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        const auto fields = util::split(line, ',');
        if (fields.size() != kChannels + 2) {
            throw IoError("telemetry csv: row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                          " fields");
        }
        TelemetryFrame f;
        f.t = util::parse_double(fields[0]);
        for (int c = 0; c < kChannels; ++c) f.channel(c) = util::parse_double(fields[static_cast<std::size_t>(c + 1)]);
        s.frames.push_back(f);
        s.labels.push_back(static_cast<int>(util::parse_double(fields.back())));
    }
    s.validate();
    return s;
}

std::vector<std::uint8_t> to_binary(const LabeledSeries& series) {
    series.validate();
    util::ByteWriter w;
    w.raw(kBinMagic);
    w.u32(kTelemetryFormatVersion);
    const std::string meta = to_json(series.info).dump();
    w.u64(meta.size());
    w.raw(meta);
    w.u64(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& f = series.frames[i];
        w.f64(f.t);
        for (int c = 0; c < kChannels; ++c) w.f64(f.channel(c));
        w.u8(static_cast<std::uint8_t>(series.labels[i]));
    }
    return w.take();
}

LabeledSeries from_binary(const std::vector<std::uint8_t>& bytes) {
    util::ByteReader r(bytes);
    if (r.remaining() < kBinMagic.size() || r.raw(kBinMagic.size()) != kBinMagic) {
        throw IoError("telemetry binary: bad magic");
    }
    const auto version = r.u32();
    if (version != kTelemetryFormatVersion) {
        throw VersionError("telemetry binary: unsupported version " + std::to_string(version));
    }
    LabeledSeries s;
    const auto meta_len = r.u64();
    if (meta_len > r.remaining()) throw IoError("telemetry binary: meta length exceeds file size");
    try {
        s.info = series_info_from_json(nlohmann::json::parse(r.raw(static_cast<std::size_t>(meta_len))));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("telemetry binary: bad meta: ") + e.what());
    }
    const auto n = r.u64();
    if (n > r.remaining() / (6 * 8 + 1)) throw IoError("telemetry binary: frame count exceeds file size");
    s.frames.resize(static_cast<std::size_t>(n));
    s.labels.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
        auto& f = s.frames[i];
        f.t = r.f64();
        for (int c = 0; c < kChannels; ++c) f.channel(c) = r.f64();
        s.labels[i] = r.u8();
    }
    if (r.remaining() != 0) throw IoError("telemetry binary: trailing bytes");
    s.validate();
    return s;
}

void save_series(const std::filesystem::path& path, const LabeledSeries& series, TelemetryFormat format) {
    if (format == TelemetryFormat::Csv) {
        util::write_text_file(path, to_csv(series));
    } else {
        util::write_file(path, to_binary(series));
    }
}

LabeledSeries load_series(const std::filesystem::path& path) {
    try {
        if (path.extension() == ".csv") return from_csv(util::read_text_file(path));
        if (path.extension() == ".tlm") return from_binary(util::read_file(path));
    } catch (const VersionError& e) {
        throw VersionError(path.string() + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    throw IoError(path.string() + ": unknown telemetry extension (expected .csv or .tlm)");
}

void save_dataset(const std::filesystem::path& dir, const std::vector<LabeledSeries>& cycles,
                  const nlohmann::json& extra, TelemetryFormat format) {
    nlohmann::json manifest;
    manifest["format"] = "crdnn-dataset";
    manifest["version"] = kTelemetryFormatVersion;
    manifest["run"] = extra;
    manifest["cycles"] = nlohmann::json::array();
    const char* ext = format == TelemetryFormat::Csv ? ".csv" : ".tlm";
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "cycles/cycle_%04zu%s", i, ext);
        save_series(dir / name, cycles[i], format);
        auto entry = to_json(cycles[i].info);
        entry["file"] = name;
        entry["frames"] = cycles[i].size();
        entry["duration_s"] = static_cast<double>(cycles[i].size()) * kSamplePeriod;
        manifest["cycles"].push_back(entry);
    }
    util::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<LabeledSeries> load_dataset(const std::filesystem::path& dir, nlohmann::json* manifest_out) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(util::read_text_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError((dir / "manifest.json").string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "crdnn-dataset") throw IoError(dir.string() + ": not a dataset manifest");
    if (manifest.value("version", 0u) != kTelemetryFormatVersion) {
        throw VersionError(dir.string() + ": unsupported dataset version");
    }
    std::vector<LabeledSeries> cycles;
    for (const auto& c : manifest.at("cycles")) cycles.push_back(load_series(dir / c.at("file").get<std::string>()));
    if (manifest_out) *manifest_out = std::move(manifest);
    return cycles;
}

} // namespace crdnn::data
