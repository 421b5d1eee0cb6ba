#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tpc/errors.hpp"
#include "tpc/harness.hpp"

namespace {

/// --config accepts either a path or a preset name (fig3, fig5, ...).
tpc::ExperimentConfig load_config(const std::string& spec) {
    for (const auto& name : tpc::preset_names())
        if (spec == name) return tpc::make_preset(name);
    return tpc::ExperimentConfig::from_file(spec);
}

std::vector<std::uint64_t> seed_range(std::uint64_t base, int count) {
    std::vector<std::uint64_t> out;
    for (int i = 0; i < count; ++i) out.push_back(base + i);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven transient control experiments"};
    app.require_subcommand(1);

    std::string config_spec = "fig3";
    std::uint64_t seed = 1;
    std::string out = "out";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_spec,
                        "config file path or preset name");
        cmd->add_option("--seed", seed, "run seed");
        cmd->add_option("--out", out, "output file or directory");
    };

    auto* collect = app.add_subcommand("collect", "record training data");
    add_common(collect);
    bool closed_loop = false;
    collect->add_flag("--closed-loop", closed_loop,
                      "superimpose the dither on a running controller");

    auto* estimate =
        app.add_subcommand("estimate", "fit a predictor from a training CSV");
    std::string data_path;
    int rho = 6, tau = 6;
    estimate->add_option("--data", data_path, "training CSV path")->required();
    estimate->add_option("--rho", rho, "lead-in horizon");
    estimate->add_option("--tau", tau, "prediction horizon");
    estimate->add_option("--out", out, "artifact output path");

    auto* run = app.add_subcommand("run", "closed-loop experiment");
    add_common(run);
    std::string artifact;
    run->add_option("--predictor", artifact,
                    "predictor artifact (default: estimate in-process)");

    auto* bench = app.add_subcommand("bench", "solve-time scaling sweep");
    add_common(bench);
    std::vector<long> n_list;
    int ticks = 40;
    bench->add_option("--n-list", n_list, "training sizes to sweep")
        ->delimiter(',');
    bench->add_option("--ticks", ticks, "timed solves per method");

    auto* bias = app.add_subcommand("bias", "closed-loop bias experiment");
    add_common(bias);
    int n_seeds = 20;
    std::vector<long> bias_n;
    bias->add_option("--seeds", n_seeds, "number of seeds (>= 5)");
    bias->add_option("--n-list", bias_n, "training sizes")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (collect->parsed()) {
            tpc::ExperimentConfig cfg = load_config(config_spec);
            cfg.training.closed_loop = cfg.training.closed_loop || closed_loop;
            if (out == "out") out = "training.csv";
            return tpc::cmd_collect(cfg, seed, out);
        }
        if (estimate->parsed()) {
            if (out == "out") out = "predictor.csv";
            return tpc::cmd_estimate(data_path, rho, tau, out);
        }
        if (run->parsed()) {
            tpc::ExperimentConfig cfg = load_config(config_spec);
            if (out == "out") out = cfg.output.directory;
            return tpc::cmd_run(cfg, artifact, seed, out);
        }
        if (bench->parsed()) {
            tpc::ExperimentConfig cfg = load_config(config_spec);
            tpc::ConfigMap map = tpc::ConfigMap::parse_text(cfg.source_text);
            if (n_list.empty()) {
                for (double v : map.get_list("bench", "n_list"))
                    n_list.push_back(static_cast<long>(v));
            }
            if (n_list.empty()) n_list = {100, 500, 1000, 5000};
            ticks = static_cast<int>(map.get_long("bench", "ticks", ticks));
            if (out == "out") out = cfg.output.directory;
            return tpc::cmd_bench(cfg, n_list, ticks, out);
        }
        if (bias->parsed()) {
            tpc::ExperimentConfig cfg = load_config(config_spec);
            if (bias_n.empty()) bias_n = {cfg.training.excitation.length};
            if (out == "out") out = cfg.output.directory;
            return tpc::cmd_bias(cfg, seed_range(seed, n_seeds), bias_n, out);
        }
    } catch (const tpc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const tpc::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const tpc::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
