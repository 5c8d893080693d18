// klrough: experiment driver.
//
//   klrough <subcommand> --config <file.json> --out <path> [--seed <n>]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical or data error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "klrough/config.hpp"
#include "klrough/error.hpp"
#include "klrough/experiments.hpp"
#include "klrough/io.hpp"
#include "klrough/records.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Invocation {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int dispatch(const std::string& name, const Invocation& inv) {
    using namespace klrough;
    ExperimentConfig cfg = load_config(inv.config);
    if (inv.seed) cfg.seed = *inv.seed;
    if (cfg.experiment.empty()) cfg.experiment = name;
    const std::string out = inv.out.empty() ? cfg.output : inv.out;
    if (out.empty()) throw ConfigError("no output path: pass --out or set \"output\"");

    if (name == "simulate") {
        write_text(out, paths_to_csv(run_simulate(cfg)));
    } else if (name == "lift") {
        write_text(out, lifts_to_csv(run_lift(cfg)));
    } else {
        emit(run_experiment(name, cfg), output_format(cfg, out), out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian rough paths: signature lifts, variation metrics and Karhunen-Loeve experiments"};
    app.require_subcommand(1);

    const char* names[] = {"simulate",         "lift",         "pvar",           "rhovar",       "kl-converge",
                           "uniform-modulus",  "martingale-check", "twovar-bound", "translate-check",
                           "young-wiener",     "levy-area"};
    Invocation inv;
    std::string chosen;
    for (const char* name : names) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", inv.config, "experiment configuration (JSON)")->required();
        sub->add_option("--out", inv.out, "output path (.json for JSON records, CSV otherwise)");
        sub->add_option("--seed", inv.seed, "override the configured master seed");
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        return dispatch(chosen, inv);
    } catch (const klrough::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const klrough::InputError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const klrough::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}
