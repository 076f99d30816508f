#include "commands.hpp"

#include "crdnn/errors.hpp"
#include "crdnn/util/bytes.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace crdnn;
namespace fs = std::filesystem;

namespace {

// Options shared by commands that take a flat config.
struct ConfigOptions {
    std::optional<fs::path> config;
    std::vector<std::string> sets;
    bool print_config = false;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config, "Config file (key = value) or a manifest.json from an earlier run");
        app->add_option("--set", sets, "Override one key, e.g. --set train.max_epochs=50 (repeatable)");
        app->add_flag("--print-config", print_config, "Print the resolved config and exit");
    }

    util::FlatConfig load() const {
        util::FlatConfig cfg = config ? cli::load_config(*config) : util::FlatConfig{};
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
            cfg.set(s.substr(0, eq), s.substr(eq + 1));
        }
        return cfg;
    }
};

template <typename T>
void set_if(util::FlatConfig& cfg, const std::string& key, const std::optional<T>& v) {
    if (!v) return;
    if constexpr (std::is_same_v<T, std::string>) cfg.set(key, *v);
    else cfg.set(key, std::to_string(*v));
}

void write_manifest(const fs::path& dir, const nlohmann::json& m) {
    fs::create_directories(dir);
    util::write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Working-cycle detection for wheel-loader telemetry and regeneration analysis"};
    app.set_version_flag("--version", CRDNN_VERSION);
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic labeled telemetry dataset");
    ConfigOptions gen_cfg;
    gen_cfg.attach(gen);
    std::optional<std::uint64_t> gen_seed;
    std::optional<int> gen_cycles;
    std::optional<std::string> gen_format;
    std::optional<fs::path> gen_out;
    gen->add_option("--seed", gen_seed, "Master seed (key seed, default 1)");
    gen->add_option("--cycles", gen_cycles, "Cycle count; the roster is scaled proportionally (default 119)");
    gen->add_option("--format", gen_format, "tlm (binary) or csv (key generate.format, default tlm)");
    gen->add_option("-o,--out", gen_out, "Dataset directory (default $CRDNN_OUTPUT_DIR/dataset or ./dataset)");

    // train and grid share their options
    struct TrainArgs {
        ConfigOptions cfg;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> arch;
        std::optional<int> ws;
        std::optional<int> epochs;
        fs::path data;
        std::optional<fs::path> out;
    };
    TrainArgs train_args, grid_args;
    auto attach_train = [](CLI::App* sub, TrainArgs& a, bool with_arch) {
        a.cfg.attach(sub);
        sub->add_option("-d,--data", a.data, "Dataset directory written by generate")->required();
        sub->add_option("--seed", a.seed, "Master seed (key seed, default 1)");
        if (with_arch) {
            sub->add_option("--arch", a.arch, "1lstm, 2lstm, 2bilstm or grid (key model.arch, default 2lstm)");
            sub->add_option("--ws", a.ws, "Window size: 9, 15 or 25 (key data.window_size, default 25)");
        }
        sub->add_option("--epochs", a.epochs, "Maximum epochs (key train.max_epochs, default 200)");
        sub->add_option("-o,--out", a.out, "Run directory (default $CRDNN_OUTPUT_DIR/<command> or ./<command>)");
    };
    auto* trn = app.add_subcommand("train", "Train one CRDNN, or the 3x3 grid with --arch grid");
    attach_train(trn, train_args, true);
    auto* grd = app.add_subcommand("grid", "Train every architecture x window size cell");
    attach_train(grd, grid_args, false);

    // eval
    auto* evl = app.add_subcommand("eval", "Score a trained model on a dataset split");
    fs::path eval_model, eval_data;
    std::string eval_split = "test";
    std::optional<fs::path> eval_out;
    evl->add_option("-m,--model", eval_model, "Model file")->required();
    evl->add_option("-d,--data", eval_data, "Dataset directory")->required();
    evl->add_option("--split", eval_split, "train, test or all (cycles as split at training time)")->capture_default_str();
    evl->add_option("-o,--out", eval_out, "Output directory (default $CRDNN_OUTPUT_DIR/eval or ./eval)");

    // infer
    auto* inf = app.add_subcommand("infer", "Stream one telemetry file through a model, one line per window");
    fs::path infer_model, infer_input;
    std::optional<fs::path> infer_out;
    inf->add_option("-m,--model", infer_model, "Model file")->required();
    inf->add_option("-i,--input", infer_input, "Telemetry file (.tlm or .csv)")->required();
    inf->add_option("-o,--out", infer_out, "Output directory; predictions go to stdout when omitted");

    // regen
    auto* reg = app.add_subcommand("regen", "Regeneration energy ledger and mu / speed / mass sweep");
    ConfigOptions reg_cfg;
    reg_cfg.attach(reg);
    std::optional<fs::path> reg_out;
    reg->add_option("-o,--out", reg_out, "Output directory (default $CRDNN_OUTPUT_DIR/regen or ./regen)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitConfig;
    }

    try {
        if (gen->parsed()) {
            auto cfg = gen_cfg.load();
            set_if(cfg, "seed", gen_seed);
            set_if(cfg, "generate.cycles", gen_cycles);
            set_if(cfg, "generate.format", gen_format);
            const auto s = cli::generate_settings(cfg);
            if (gen_cfg.print_config) {
                std::cout << cli::to_config(s).dump();
                return cli::kExitOk;
            }
            const auto out = cli::output_path(gen_out, "dataset");
            const auto cycles = cli::cmd_generate(s, out);
            std::cout << "wrote " << cycles.size() << " cycles to " << out.string() << '\n';
            return cli::kExitOk;
        }

        for (auto [sub, args, name] : {std::tuple{trn, &train_args, "train"}, std::tuple{grd, &grid_args, "grid"}}) {
            if (!sub->parsed()) continue;
            auto cfg = args->cfg.load();
            set_if(cfg, "seed", args->seed);
            set_if(cfg, "model.arch", args->arch);
            set_if(cfg, "data.window_size", args->ws);
            set_if(cfg, "train.max_epochs", args->epochs);
            if (sub == grd) cfg.set("model.arch", "grid");
            const auto s = cli::train_settings(cfg);
            if (args->cfg.print_config) {
                std::cout << cli::to_config(s).dump();
                return cli::kExitOk;
            }
            const auto out = cli::output_path(args->out, name);
            const auto outcome = cli::cmd_train(s, args->data, out, std::cerr);
            std::cout << "wrote " << outcome.cells.size() - outcome.failed << " model(s) to " << out.string() << '\n';
            if (outcome.failed > 0) {
                std::cerr << "error: " << outcome.failed << " grid cell(s) failed; see grid.txt\n";
                return cli::kExitNumeric;
            }
            return cli::kExitOk;
        }

        if (evl->parsed()) {
            const auto split = cli::eval_split_from_string(eval_split);
            const auto r = cli::cmd_eval(eval_model, eval_data, split);
            const auto out = cli::output_path(eval_out, "eval");
            fs::create_directories(out);
            util::write_text_file(out / "metrics.json", metrics::to_json(r.metrics).dump(2) + "\n");
            util::write_text_file(out / "predictions.csv", cli::render_predictions(r.predictions));
            util::FlatConfig resolved;
            resolved.set("model", eval_model.string());
            resolved.set("data", eval_data.string());
            resolved.set("split", eval_split);
            write_manifest(out, cli::manifest("eval", resolved, 0));
            std::cout << metrics::render_confusion(r.metrics.cm) << "windows " << r.predictions.classes.size()
                      << "\naccuracy " << r.metrics.accuracy << "\nmicro_f1 " << r.metrics.micro_f1 << "\nmacro_f1 "
                      << r.metrics.macro_f1 << "\nloading_unloading_confusions " << r.metrics.loading_unloading << '\n';
            return cli::kExitOk;
        }

        if (inf->parsed()) {
            const auto p = cli::cmd_infer(infer_model, infer_input);
            const auto text = cli::render_predictions(p);
            if (!infer_out) {
                std::cout << text;
                return cli::kExitOk;
            }
            fs::create_directories(*infer_out);
            util::write_text_file(*infer_out / "predictions.csv", text);
            util::FlatConfig resolved;
            resolved.set("model", infer_model.string());
            resolved.set("input", infer_input.string());
            write_manifest(*infer_out, cli::manifest("infer", resolved, 0));
            std::cout << "wrote " << p.classes.size() << " predictions to " << infer_out->string() << '\n';
            return cli::kExitOk;
        }

        if (reg->parsed()) {
            auto cfg = reg_cfg.load();
            const auto s = cli::regen_settings(cfg);
            const auto resolved = cli::to_config(s);
            if (reg_cfg.print_config) {
                std::cout << resolved.dump();
                return cli::kExitOk;
            }
            const auto r = cli::cmd_regen(s);
            const auto out = cli::output_path(reg_out, "regen");
            fs::create_directories(out);
            const auto table = regen::render_sweep_table(r.rows);
            util::write_text_file(out / "sweep.csv", table);
            util::write_text_file(out / "ledger.json", regen::to_json(r.ledger).dump(2) + "\n");
            write_manifest(out, cli::manifest("regen", resolved, 0));
            std::cout << table << "scenario efficiency_gain " << r.ledger.efficiency_gain << '\n';
            return cli::kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::exit_code_for(e);
    }
    return cli::kExitFailure;
}
