#include "crdnn/train/grid.hpp"

#include "crdnn/errors.hpp"
#include "crdnn/util/format.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

namespace crdnn::train {

void validate_window_size(int ws) {
    if (std::find(kGridWindowSizes.begin(), kGridWindowSizes.end(), ws) == kGridWindowSizes.end()) {
        throw ConfigError("invalid window size " + std::to_string(ws) + " (expected 9, 15 or 25)");
    }
}

void ExperimentConfig::validate() const {
    train.validate();
    loss.validate();
    if (decimation < 1) throw ConfigError("decimation must be >= 1");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
    if (!(smoothing_alpha > 0.0 && smoothing_alpha <= 1.0)) throw ConfigError("smoothing alpha must lie in (0, 1]");
}

PreparedData prepare_experiment(std::span<const data::LabeledSeries> cycles, const ExperimentConfig& cfg) {
    cfg.validate();
    PreparedData out;
    out.smoothing_alpha = cfg.smoothing_alpha;
    out.split = data::split_dataset(cycles, cfg.split_ratio, cfg.split_seed);

    std::vector<data::LabeledSeries> train_smoothed;
    train_smoothed.reserve(out.split.train.size());
    for (auto i : out.split.train) train_smoothed.push_back(data::smooth(cycles[i], cfg.smoothing_alpha));
    out.stats = data::compute_stats(train_smoothed, "training split (" + std::to_string(train_smoothed.size()) + " cycles)");

    for (auto& s : train_smoothed) out.train_cycles.push_back(data::apply_stats(s, out.stats));
    for (auto i : out.split.test) {
        out.test_cycles.push_back(data::apply_stats(data::smooth(cycles[i], cfg.smoothing_alpha), out.stats));
    }
    return out;
}

data::WindowOptions window_options(const ExperimentConfig& cfg, int window_size, std::optional<std::size_t> align_end) {
    data::WindowOptions o;
    o.window_size = window_size;
    o.decimation = cfg.decimation;
    o.stride = cfg.stride;
    o.align_end = align_end;
    o.label_at = cfg.label_at;
    o.validate();
    return o;
}

WindowSets make_window_sets(const PreparedData& data, const data::WindowOptions& options) {
    WindowSets sets;
    sets.train = data::make_windows(std::span<const data::LabeledSeries>(data.train_cycles), options);
    sets.test = data::make_windows(std::span<const data::LabeledSeries>(data.test_cycles), options);
    sets.train.stats = data.stats;
    sets.test.stats = data.stats;
    return sets;
}

CellResult run_cell(const PreparedData& data, nn::RecurrentArch arch, int window_size, const ExperimentConfig& cfg,
                    std::optional<std::size_t> align_end, const EpochCallback& on_epoch) {
    validate_window_size(window_size);
    const auto start = std::chrono::steady_clock::now();
    CellResult cell;
    cell.arch = arch;
    cell.window_size = window_size;
    cell.options = window_options(cfg, window_size, align_end);

    const WindowSets sets = make_window_sets(data, cell.options);
    cell.train_windows = sets.train.size();
    cell.test_windows = sets.test.size();

    nn::CrdnnConfig mc = cfg.model;
    mc.arch = arch;
    cell.model = nn::Model::crdnn(mc);
    cell.model.initialize(cfg.init_seed);
    cell.parameter_count = nn::count_parameters(cell.model);
    cell.report = train(cell.model, sets.train, sets.test, cfg.train, cfg.loss, on_epoch);
    cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cell;
}

std::vector<CellResult> run_experiment_grid(const PreparedData& data, std::span<const nn::RecurrentArch> archs,
                                            std::span<const int> window_sizes, const ExperimentConfig& cfg,
                                            const CellCallback& on_cell) {
    if (archs.empty() || window_sizes.empty()) throw ConfigError("grid: empty architecture or window-size list");
    for (int ws : window_sizes) validate_window_size(ws);
    const int max_ws = *std::max_element(window_sizes.begin(), window_sizes.end());
    const std::size_t align_end = window_options(cfg, max_ws).span() - 1;

    std::vector<CellResult> cells;
    for (auto arch : archs) {
        for (int ws : window_sizes) {
            CellResult cell;
            try {
                cell = run_cell(data, arch, ws, cfg, align_end);
            } catch (const std::exception& e) {
                cell = CellResult{};
                cell.arch = arch;
                cell.window_size = ws;
                cell.error = e.what();
            }
            if (on_cell) on_cell(cell);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

nlohmann::json to_json(const CellResult& cell) {
    nlohmann::json j{{"arch", nn::to_string(cell.arch)},
                     {"window_size", cell.window_size},
                     {"ok", cell.ok()}};
    if (!cell.ok()) {
        j["error"] = cell.error;
        return j;
    }
    j["train_windows"] = cell.train_windows;
    j["test_windows"] = cell.test_windows;
    j["parameter_count"] = cell.parameter_count;
    j["seconds"] = cell.seconds;
    j["best_epoch"] = cell.report.best_epoch;
    j["stop_epoch"] = cell.report.stop_epoch;
    j["best_test_cost"] = cell.report.best_test_cost;
    j["metrics"] = metrics::to_json(cell.report.final_metrics);
    return j;
}

std::string render_grid_table(std::span<const CellResult> cells) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-8s %3s %8s %9s %9s %9s %6s %6s %5s\n", "arch", "ws", "params", "accuracy",
                  "micro_f1", "macro_f1", "e1<>e2", "best", "stop");
    os << buf;
    for (const auto& c : cells) {
        if (!c.ok()) {
            std::snprintf(buf, sizeof buf, "%-8s %3d  failed: ", nn::to_string(c.arch), c.window_size);
            os << buf << c.error << '\n';
            continue;
        }
        const auto& m = c.report.final_metrics;
        std::snprintf(buf, sizeof buf, "%-8s %3d %8zu %9.4f %9.4f %9.4f %6zu %6zu %5zu\n", nn::to_string(c.arch),
                      c.window_size, c.parameter_count, m.accuracy, m.micro_f1, m.macro_f1,
                      static_cast<std::size_t>(m.loading_unloading), c.report.best_epoch, c.report.stop_epoch);
        os << buf;
    }
    return os.str();
}

nlohmann::json preprocessing_metadata(const PreparedData& data, const data::WindowOptions& options) {
    nlohmann::json w{{"window_size", options.window_size},
                     {"decimation", options.decimation},
                     {"stride", options.stride},
                     {"label_at", options.label_at == data::LabelPosition::Final ? "final" : "center"}};
    if (options.align_end) w["align_end"] = *options.align_end;
    return {{"smoothing_alpha", data.smoothing_alpha}, {"normalization", data::to_json(data.stats)}, {"windows", w}};
}

Preprocessing preprocessing_from_metadata(const nlohmann::json& j) {
    try {
        Preprocessing p;
        p.smoothing_alpha = j.at("smoothing_alpha").get<double>();
        p.stats = data::stats_from_json(j.at("normalization"));
        const auto& w = j.at("windows");
        p.options.window_size = w.at("window_size").get<int>();
        p.options.decimation = w.at("decimation").get<int>();
        p.options.stride = w.at("stride").get<int>();
        p.options.label_at = w.at("label_at").get<std::string>() == "center" ? data::LabelPosition::Center
                                                                             : data::LabelPosition::Final;
        if (w.contains("align_end")) p.options.align_end = w.at("align_end").get<std::size_t>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("model metadata lacks preprocessing fields: ") + e.what());
    }
}

} // namespace crdnn::train
