#include "commands.hpp"

#include "crdnn/errors.hpp"
#include "crdnn/nn/serialize.hpp"
#include "crdnn/train/report.hpp"
#include "crdnn/util/bytes.hpp"
#include "crdnn/util/format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <set>
#include <sstream>

namespace crdnn::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kTrainStream = 3;
constexpr std::uint64_t kMislabelStream = 4;

std::string fmt(double v) { return util::format_double(v); }

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

std::string join_doubles(std::span<const double> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
    return out;
}

std::vector<int> get_ints(const util::FlatConfig& cfg, const std::string& key, const std::vector<int>& fallback) {
    std::vector<double> d(fallback.begin(), fallback.end());
    d = cfg.get_doubles(key, d);
    std::vector<int> out;
    for (double x : d) {
        if (x != std::floor(x) || std::abs(x) > 1e9) {
            throw ConfigError("config key '" + key + "': '" + fmt(x) + "' is not an integer");
        }
        out.push_back(static_cast<int>(x));
    }
    return out;
}

int get_int(const util::FlatConfig& cfg, const std::string& key, int fallback) {
    const auto v = cfg.get_int(key, fallback);
    if (v < -1000000000 || v > 1000000000) throw ConfigError("config key '" + key + "' is out of range");
    return static_cast<int>(v);
}

template <std::size_t N>
std::array<int, N> fixed_ints(const util::FlatConfig& cfg, const std::string& key, const std::array<int, N>& fallback) {
    const auto v = get_ints(cfg, key, std::vector<int>(fallback.begin(), fallback.end()));
    if (v.size() != N) throw ConfigError("config key '" + key + "' needs " + std::to_string(N) + " values");
    std::array<int, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

const char* label_position_name(data::LabelPosition p) { return p == data::LabelPosition::Final ? "final" : "center"; }

data::LabelPosition label_position_from_string(const std::string& name) {
    if (name == "final") return data::LabelPosition::Final;
    if (name == "center") return data::LabelPosition::Center;
    throw ConfigError("data.label must be 'final' or 'center', got '" + name + "'");
}

const char* format_name(data::TelemetryFormat f) { return f == data::TelemetryFormat::Csv ? "csv" : "tlm"; }

void write_json(const fs::path& path, const nlohmann::json& j) { util::write_text_file(path, j.dump(2) + "\n"); }

nlohmann::json cycle_ids(std::span<const data::LabeledSeries> cycles, std::span<const std::size_t> idx) {
    auto a = nlohmann::json::array();
    for (auto i : idx) a.push_back(cycles[i].info.cycle_id);
    return a;
}

} // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InputError*>(&e) ||
        dynamic_cast<const ShapeError*>(&e)) {
        return kExitConfig;
    }
    if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    return kExitFailure;
}

util::FlatConfig load_config(const fs::path& path) {
    if (path.extension() != ".json") return util::FlatConfig::load(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(util::read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    // Dataset manifests keep the run record under "run".
    const auto& run = j.contains("run") && j["run"].is_object() ? j["run"] : j;
    if (!run.contains("config") || !run["config"].is_object()) throw IoError(path.string() + ": no config object in manifest");
    util::FlatConfig cfg;
    for (const auto& [k, v] : run["config"].items()) cfg.set(k, v.is_string() ? v.get<std::string>() : v.dump());
    return cfg;
}

void reject_unknown_keys(const util::FlatConfig& cfg) {
    const auto unused = cfg.unused_keys();
    if (!unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");
}

fs::path output_path(const std::optional<fs::path>& explicit_path, const std::string& fallback) {
    if (explicit_path) return *explicit_path;
    if (const char* root = std::getenv("CRDNN_OUTPUT_DIR"); root && *root) return fs::path(root) / fallback;
    return fs::path(fallback);
}

nlohmann::json manifest(const std::string& command, const util::FlatConfig& resolved, std::uint64_t seed) {
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : resolved.values()) cfg[k] = v;
    return {{"format", "crdnn-run"},
            {"version", 1},
            {"command", command},
            {"code_version", CRDNN_VERSION},
            {"seed", seed},
            {"config", cfg}};
}

// ---- generate ---------------------------------------------------------------

GenerateSettings generate_settings(const util::FlatConfig& cfg) {
    GenerateSettings s;
    s.seed = cfg.get_uint("seed", s.seed);
    if (cfg.has("generate.cycles")) s.cycles = get_int(cfg, "generate.cycles", 0);
    const auto format = cfg.get_string("generate.format", "tlm");
    if (format == "csv") s.format = data::TelemetryFormat::Csv;
    else if (format == "tlm") s.format = data::TelemetryFormat::Binary;
    else throw ConfigError("generate.format must be 'csv' or 'tlm', got '" + format + "'");
    if (s.cycles && *s.cycles < 1) throw ConfigError("generate.cycles must be >= 1");
    reject_unknown_keys(cfg);
    return s;
}

util::FlatConfig to_config(const GenerateSettings& s) {
    util::FlatConfig c;
    c.set("seed", std::to_string(s.seed));
    if (s.cycles) c.set("generate.cycles", std::to_string(*s.cycles));
    c.set("generate.format", format_name(s.format));
    return c;
}

std::vector<data::LabeledSeries> cmd_generate(const GenerateSettings& s, const fs::path& out_dir) {
    auto dataset = synth::default_dataset_config();
    if (s.cycles) dataset = synth::resize_roster(dataset, *s.cycles);
    auto cycles = synth::generate_dataset(dataset, s.seed);
    auto run = manifest("generate", to_config(s), s.seed);
    run["generator"] = synth::to_json(dataset);
    data::save_dataset(out_dir, cycles, run, s.format);
    return cycles;
}

// ---- train ------------------------------------------------------------------

std::uint64_t derived_seed(std::uint64_t master, std::uint64_t stream) { return synth::cycle_seed(master, stream); }

void TrainSettings::validate() const {
    if (arch != "grid") {
        nn::recurrent_arch_from_string(arch);
        train::validate_window_size(window_size);
    }
    if (grid_window_sizes.empty()) throw ConfigError("data.grid_window_sizes must not be empty");
    for (int ws : grid_window_sizes) train::validate_window_size(ws);
    if (!(smoothing_tau >= 0.0) || !std::isfinite(smoothing_tau)) throw ConfigError("data.smoothing_tau must be >= 0");
    if (!(mislabel_rate >= 0.0 && mislabel_rate <= 0.05)) throw ConfigError("data.mislabel_rate must lie in [0, 0.05]");
    if (!(mislabel_span > 0.0)) throw ConfigError("data.mislabel_span must be positive");
    experiment.validate();
}

TrainSettings train_settings(const util::FlatConfig& cfg) {
    TrainSettings s;
    s.seed = cfg.get_uint("seed", s.seed);
    s.arch = cfg.get_string("model.arch", s.arch);

    auto& m = s.experiment.model;
    m.conv_filters = get_int(cfg, "model.conv_filters", m.conv_filters);
    m.kernel = get_int(cfg, "model.kernel_size", m.kernel);
    m.reduce_units = fixed_ints(cfg, "model.dense_units", m.reduce_units);
    m.rnn_units = fixed_ints(cfg, "model.rnn_units", m.rnn_units);
    m.head_units = get_int(cfg, "model.head_units", m.head_units);
    m.dropout = cfg.get_double("model.dropout", m.dropout);

    auto& t = s.experiment.train;
    t.batch_size = cfg.get_uint("train.batch_size", t.batch_size);
    t.initial_learning_rate = cfg.get_double("train.learning_rate", t.initial_learning_rate);
    t.lr_decay = cfg.get_double("train.lr_decay", t.lr_decay);
    t.max_epochs = cfg.get_uint("train.max_epochs", t.max_epochs);
    t.early_stop_patience = cfg.get_uint("train.patience", t.early_stop_patience);
    t.optimizer = train::optimizer_kind_from_string(cfg.get_string("train.optimizer", train::to_string(t.optimizer)));
    t.beta1 = cfg.get_double("train.beta1", t.beta1);
    t.beta2 = cfg.get_double("train.beta2", t.beta2);
    t.restore_best = cfg.get_bool("train.restore_best", t.restore_best);

    auto& l = s.experiment.loss;
    const auto w = cfg.get_doubles("loss.class_weights", {l.class_weights.begin(), l.class_weights.end()});
    if (w.size() != 3) throw ConfigError("loss.class_weights needs 3 values");
    std::copy(w.begin(), w.end(), l.class_weights.begin());
    l.l2_lambda = cfg.get_double("loss.l2_lambda", l.l2_lambda);
    l.regularized = train::regularized_layers_from_string(cfg.get_string("loss.regularized", train::to_string(l.regularized)));

    s.window_size = get_int(cfg, "data.window_size", s.window_size);
    s.grid_window_sizes = get_ints(cfg, "data.grid_window_sizes", s.grid_window_sizes);
    s.experiment.decimation = get_int(cfg, "data.decimation", s.experiment.decimation);
    s.experiment.stride = get_int(cfg, "data.stride", s.experiment.stride);
    s.experiment.label_at = label_position_from_string(cfg.get_string("data.label", "final"));
    s.experiment.split_ratio = cfg.get_double("data.split_ratio", s.experiment.split_ratio);
    s.smoothing_tau = cfg.get_double("data.smoothing_tau", s.smoothing_tau);
    s.mislabel_rate = cfg.get_double("data.mislabel_rate", s.mislabel_rate);
    s.mislabel_span = cfg.get_double("data.mislabel_span", s.mislabel_span);
    reject_unknown_keys(cfg);

    if (s.arch != "grid") s.experiment.model.arch = nn::recurrent_arch_from_string(s.arch);
    s.experiment.smoothing_alpha = data::smoothing_alpha(s.smoothing_tau);
    s.experiment.split_seed = derived_seed(s.seed, kSplitStream);
    s.experiment.init_seed = derived_seed(s.seed, kInitStream);
    s.experiment.train.seed = derived_seed(s.seed, kTrainStream);
    s.validate();
    return s;
}

util::FlatConfig to_config(const TrainSettings& s) {
    const auto& e = s.experiment;
    util::FlatConfig c;
    c.set("seed", std::to_string(s.seed));
    c.set("model.arch", s.arch);
    c.set("model.conv_filters", std::to_string(e.model.conv_filters));
    c.set("model.kernel_size", std::to_string(e.model.kernel));
    c.set("model.dense_units", join_ints({e.model.reduce_units.begin(), e.model.reduce_units.end()}));
    c.set("model.rnn_units", join_ints({e.model.rnn_units.begin(), e.model.rnn_units.end()}));
    c.set("model.head_units", std::to_string(e.model.head_units));
    c.set("model.dropout", fmt(e.model.dropout));
    c.set("train.batch_size", std::to_string(e.train.batch_size));
    c.set("train.learning_rate", fmt(e.train.initial_learning_rate));
    c.set("train.lr_decay", fmt(e.train.lr_decay));
    c.set("train.max_epochs", std::to_string(e.train.max_epochs));
    c.set("train.patience", std::to_string(e.train.early_stop_patience));
    c.set("train.optimizer", train::to_string(e.train.optimizer));
    c.set("train.beta1", fmt(e.train.beta1));
    c.set("train.beta2", fmt(e.train.beta2));
    c.set("train.restore_best", e.train.restore_best ? "true" : "false");
    c.set("loss.class_weights", join_doubles(e.loss.class_weights));
    c.set("loss.l2_lambda", fmt(e.loss.l2_lambda));
    c.set("loss.regularized", train::to_string(e.loss.regularized));
    c.set("data.window_size", std::to_string(s.window_size));
    c.set("data.grid_window_sizes", join_ints(s.grid_window_sizes));
    c.set("data.decimation", std::to_string(e.decimation));
    c.set("data.stride", std::to_string(e.stride));
    c.set("data.label", label_position_name(e.label_at));
    c.set("data.split_ratio", fmt(e.split_ratio));
    c.set("data.smoothing_tau", fmt(s.smoothing_tau));
    c.set("data.mislabel_rate", fmt(s.mislabel_rate));
    c.set("data.mislabel_span", fmt(s.mislabel_span));
    return c;
}

TrainOutcome cmd_train(const TrainSettings& s, const fs::path& data_dir, const fs::path& out_dir, std::ostream& log) {
    s.validate();
    nlohmann::json dataset_manifest;
    auto cycles = data::load_dataset(data_dir, &dataset_manifest);

    TrainOutcome outcome;
    const auto split = data::split_dataset(cycles, s.experiment.split_ratio, s.experiment.split_seed);
    if (s.mislabel_rate > 0.0) {
        data::MislabelRule rule;
        rule.span_seconds = s.mislabel_span;
        const auto base = derived_seed(s.seed, kMislabelStream);
        for (auto i : split.train) {
            auto r = data::inject_mislabels(cycles[i], s.mislabel_rate, rule, derived_seed(base, i));
            cycles[i] = std::move(r.series);
            outcome.flips.insert(outcome.flips.end(), r.flips.begin(), r.flips.end());
        }
    }
    const auto prepared = train::prepare_experiment(cycles, s.experiment);

    std::vector<nn::RecurrentArch> archs;
    std::vector<int> sizes;
    if (s.is_grid()) {
        archs.assign(train::kGridArchs.begin(), train::kGridArchs.end());
        sizes = s.grid_window_sizes;
    } else {
        archs.push_back(s.experiment.model.arch);
        sizes.push_back(s.window_size);
    }
    // Every window size ends on the same frames as the grid would use, so a
    // single-cell run scores exactly the targets of the matching grid cell.
    int widest = *std::max_element(s.grid_window_sizes.begin(), s.grid_window_sizes.end());
    widest = std::max(widest, *std::max_element(sizes.begin(), sizes.end()));
    const std::size_t align_end = static_cast<std::size_t>((widest - 1) * s.experiment.decimation);

    fs::create_directories(out_dir);
    const auto resolved = to_config(s);
    nlohmann::json split_meta{{"ratio", s.experiment.split_ratio},
                              {"seed", s.experiment.split_seed},
                              {"train_cycle_ids", cycle_ids(cycles, prepared.split.train)},
                              {"test_cycle_ids", cycle_ids(cycles, prepared.split.test)}};
    nlohmann::json config_meta = nlohmann::json::object();
    for (const auto& [k, v] : resolved.values()) config_meta[k] = v;

    auto grid_json = nlohmann::json::array();
    nlohmann::json timings = nlohmann::json::object();
    std::vector<train::CellResult> finished;
    for (auto arch : archs) {
        for (int ws : sizes) {
            const std::string name = std::string(nn::to_string(arch)) + "_ws" + std::to_string(ws);
            log << "training " << name << '\n';
            const auto on_epoch = [&](const train::EpochRecord& r) {
                log << "  epoch " << r.epoch << " lr " << r.learning_rate << " train_cost " << r.train_cost
                    << " test_cost " << r.test_cost << " test_accuracy " << r.test_accuracy << '\n';
            };
            train::CellResult cell;
            try {
                cell = train::run_cell(prepared, arch, ws, s.experiment, align_end, on_epoch);
            } catch (const Error& e) {
                if (!s.is_grid()) throw;
                cell.arch = arch;
                cell.window_size = ws;
                cell.error = e.what();
                ++outcome.failed;
                log << "  failed: " << cell.error << '\n';
            }
            const fs::path dir = s.is_grid() ? out_dir / name : out_dir;
            auto cj = train::to_json(cell);
            cj.erase("seconds");
            grid_json.push_back(cj);
            if (cell.ok()) {
                timings[name] = cell.seconds;
                fs::create_directories(dir);
                nlohmann::json meta{{"code_version", CRDNN_VERSION},
                                    {"arch", nn::to_string(arch)},
                                    {"window_size", ws},
                                    {"classes", {"travel", "loading", "unloading"}},
                                    {"preprocessing", train::preprocessing_metadata(prepared, cell.options)},
                                    {"split", split_meta},
                                    {"config", config_meta},
                                    {"best_epoch", cell.report.best_epoch}};
                nn::save_model(dir / "model.crdnn", cell.model, meta);
                const nlohmann::json extra{{"arch", nn::to_string(arch)},
                                           {"window_size", ws},
                                           {"train_windows", cell.train_windows},
                                           {"test_windows", cell.test_windows}};
                util::write_text_file(dir / "report.jsonl", train::render_report_lines(cell.report, extra));
                util::write_text_file(dir / "cost_curve.tsv", train::render_cost_curve(cell.report));
                write_json(dir / "metrics.json", metrics::to_json(cell.report.final_metrics));
                const auto& m = cell.report.final_metrics;
                log << "  done: accuracy " << m.accuracy << " micro_f1 " << m.micro_f1 << " best_epoch "
                    << cell.report.best_epoch << " stop_epoch " << cell.report.stop_epoch << " (" << cell.seconds
                    << " s)\n";
            }
            finished.push_back(cell);
            outcome.cells.push_back({std::move(cell), dir});
        }
    }
    if (s.is_grid()) {
        util::write_text_file(out_dir / "grid.txt", train::render_grid_table(finished));
        write_json(out_dir / "grid.json", grid_json);
    }
    if (s.mislabel_rate > 0.0) {
        auto flips = nlohmann::json::array();
        for (const auto& f : outcome.flips) {
            flips.push_back({{"cycle_id", f.cycle_id}, {"begin", f.begin}, {"end", f.end}, {"true_label", f.true_label}});
        }
        write_json(out_dir / "flips.json", flips);
    }
    write_json(out_dir / "timings.json", timings);

    auto run = manifest(s.is_grid() ? "grid" : "train", resolved, s.seed);
    run["dataset"] = {{"path", data_dir.string()}, {"run", dataset_manifest.value("run", nlohmann::json::object())}};
    run["derived_seeds"] = {{"split", s.experiment.split_seed},
                            {"init", s.experiment.init_seed},
                            {"train", s.experiment.train.seed}};
    write_json(out_dir / "manifest.json", run);
    return outcome;
}

// ---- eval / infer -----------------------------------------------------------

EvalSplit eval_split_from_string(const std::string& name) {
    if (name == "train") return EvalSplit::Train;
    if (name == "test") return EvalSplit::Test;
    if (name == "all") return EvalSplit::All;
    throw ConfigError("split must be train, test or all, got '" + name + "'");
}

std::string render_predictions(const Predictions& p) {
    std::ostringstream os;
    os << "cycle_id,end_frame,end_time,label,predicted,p_travel,p_loading,p_unloading\n";
    for (std::size_t i = 0; i < p.classes.size(); ++i) {
        const auto r = static_cast<nn::Index>(i);
        os << p.cycle_ids[i] << ',' << p.end_frames[i] << ',' << fmt(p.end_times[i]) << ',' << p.labels[i] << ','
           << p.classes[i] << ',' << fmt(p.probabilities(r, 0)) << ',' << fmt(p.probabilities(r, 1)) << ','
           << fmt(p.probabilities(r, 2)) << '\n';
    }
    return os.str();
}

namespace {

struct LoadedModel {
    nn::ModelFile file;
    train::Preprocessing pre;
};

LoadedModel load_trained_model(const fs::path& path) {
    LoadedModel m{nn::load_model(path), {}};
    if (!m.file.metadata.contains("preprocessing")) throw IoError(path.string() + ": model has no preprocessing metadata");
    m.pre = train::preprocessing_from_metadata(m.file.metadata.at("preprocessing"));
    return m;
}

std::set<int> ids_from(const nlohmann::json& meta, const char* key) {
    try {
        return meta.at("split").at(key).get<std::set<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("model metadata: ") + e.what());
    }
}

} // namespace

EvalOutcome cmd_eval(const fs::path& model_path, const fs::path& data_dir, EvalSplit split) {
    const auto m = load_trained_model(model_path);
    const auto cycles = data::load_dataset(data_dir);

    std::vector<data::LabeledSeries> selected;
    if (split == EvalSplit::All) {
        selected = cycles;
    } else {
        const auto ids = ids_from(m.file.metadata, split == EvalSplit::Train ? "train_cycle_ids" : "test_cycle_ids");
        for (const auto& c : cycles) {
            if (ids.count(c.info.cycle_id)) selected.push_back(c);
        }
        if (selected.size() != ids.size()) {
            throw InputError(data_dir.string() + ": dataset lacks cycles the model was split on");
        }
    }
    const auto prepared = data::prepare(selected, m.pre.smoothing_alpha, m.pre.stats);
    const auto batch = data::make_windows(prepared, m.pre.options);

    EvalOutcome out;
    auto& p = out.predictions;
    p.probabilities = train::predict_probabilities(m.file.model, batch);
    p.classes = train::argmax_rows(p.probabilities);
    p.cycle_ids = batch.cycle_ids;
    p.end_frames = batch.end_frames;
    p.end_times = batch.end_times;
    p.labels = batch.labels;
    out.metrics = metrics::evaluate(p.classes, p.labels);
    return out;
}

Predictions cmd_infer(const fs::path& model_path, const fs::path& telemetry_path) {
    const auto m = load_trained_model(model_path);
    const auto series = data::load_series(telemetry_path);
    const auto& o = m.pre.options;

    data::StreamWindower stream(m.pre.smoothing_alpha, m.pre.stats, o);
    Predictions p;
    std::vector<nn::Matrix> rows;
    for (std::size_t i = 0; i < series.size(); ++i) {
        auto w = stream.push(series.frames[i]);
        if (!w) continue;
        const nn::Matrix* ptr = &*w;
        rows.push_back(train::predict_windows(m.file.model, std::span(&ptr, 1)));
        const std::size_t label_frame =
            o.label_at == data::LabelPosition::Final ? i : i + 1 - o.span() + static_cast<std::size_t>(o.window_size / 2 * o.decimation);
        p.cycle_ids.push_back(series.info.cycle_id);
        p.end_frames.push_back(i);
        p.end_times.push_back(series.frames[i].t);
        p.labels.push_back(series.labels[label_frame]);
        p.classes.push_back(train::argmax_rows(rows.back()).front());
    }
    p.probabilities = nn::Matrix(static_cast<nn::Index>(rows.size()), m.file.model.output_width());
    for (std::size_t i = 0; i < rows.size(); ++i) p.probabilities.row(static_cast<nn::Index>(i)) = rows[i].row(0);
    return p;
}

std::vector<int> segment_sequence(const std::vector<int>& classes) {
    std::vector<int> out;
    for (int c : classes) {
        if (out.empty() || out.back() != c) out.push_back(c);
    }
    return out;
}

// ---- regen ------------------------------------------------------------------

RegenSettings regen_settings(const util::FlatConfig& cfg) {
    RegenSettings s;
    s.scenario = regen::scenario_from_config(cfg, &s.cycle);
    s.mus = cfg.get_doubles("sweep.mu", s.mus);
    s.speeds = cfg.get_doubles("sweep.speed", {s.cycle.speed});
    s.masses = cfg.get_doubles("sweep.material_mass", {s.scenario.material_mass});
    reject_unknown_keys(cfg);
    return s;
}

util::FlatConfig to_config(const RegenSettings& s) {
    const auto& sc = s.scenario;
    const auto& e = sc.efficiency;
    util::FlatConfig c;
    c.set("vehicle_mass", fmt(sc.vehicle_mass));
    c.set("material_mass", fmt(sc.material_mass));
    c.set("mu", fmt(sc.rolling_friction_mu));
    c.set("gravity", fmt(sc.gravity));
    c.set("efficiency.pump", fmt(e.pump));
    c.set("efficiency.motor", fmt(e.motor));
    c.set("efficiency.mechanical", fmt(e.mechanical));
    c.set("efficiency.use_pump", e.use_pump ? "true" : "false");
    c.set("efficiency.use_motor", e.use_motor ? "true" : "false");
    c.set("efficiency.use_mechanical", e.use_mechanical ? "true" : "false");
    c.set("cycle.speed", fmt(s.cycle.speed));
    c.set("cycle.accel_time", fmt(s.cycle.accel_time));
    c.set("cycle.cruise_time", fmt(s.cycle.cruise_time));
    c.set("cycle.decel_time", fmt(s.cycle.decel_time));
    std::string segs;
    for (const auto& g : sc.profile) {
        segs += (segs.empty() ? "" : "; ") + fmt(g.duration) + ":" + fmt(g.v_start) + ":" + fmt(g.v_end) + ":" +
                (g.loaded ? "1" : "0");
    }
    c.set("profile.segments", segs);
    c.set("sweep.mu", join_doubles(s.mus));
    c.set("sweep.speed", join_doubles(s.speeds));
    c.set("sweep.material_mass", join_doubles(s.masses));
    return c;
}

RegenOutcome cmd_regen(const RegenSettings& s) {
    RegenOutcome out;
    out.ledger = regen::simulate_cycle(s.scenario);
    out.rows = regen::sweep(s.scenario, s.cycle, s.mus, s.speeds, s.masses);
    return out;
}

} // namespace crdnn::cli
