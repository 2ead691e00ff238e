// Command-line front end for the experiment driver.  Every subcommand reads a
// TOML config, runs the corresponding experiment, writes the artifact set into
// --out, and prints the deterministic summary JSON on stdout.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "sflab/experiments.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::string out = "out";
    int64_t seed = -1;  // -1: use the config value
    int threads = 0;    // 0: use the config value
    bool resume = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_resume) {
    cmd->add_option("--config", o.config, "TOML config file")->required();
    cmd->add_option("--seed", o.seed, "override the config seed");
    cmd->add_option("--threads", o.threads, "override the worker thread count");
    cmd->add_option("--out", o.out, "output directory");
    if (with_resume)
        cmd->add_flag("--resume", o.resume, "continue from the checkpoint in --out");
}

int run(const std::string& kind, const CommonOpts& o) {
    auto cfg = sflab::load_experiment(o.config);
    if (o.seed >= 0) cfg.seed = uint64_t(o.seed);
    if (o.threads > 0) cfg.threads = o.threads;
    if (kind == "validate") {  // validates a config of any kind
        auto rep = sflab::validate_experiment(cfg);
        std::cout << rep.to_json().dump(2) << "\n";
        return rep.ok() ? 0 : 1;
    }
    if (cfg.kind != kind)
        throw std::runtime_error("config kind '" + cfg.kind + "' does not match the '" + kind +
                                 "' subcommand");
    auto res = sflab::run_experiment(cfg, o.out, o.resume);
    std::cout << res.summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral stochastic-fluid laboratory"};
    app.require_subcommand(1);

    static const std::pair<const char*, const char*> kCommands[] = {
        {"simulate", "integrate the fluid model and write checkpoints"},
        {"lyapunov", "estimate Lagrangian Lyapunov exponents"},
        {"scalar", "advect a passive scalar and check the stationary balance"},
        {"yaglom", "structure functions and the inertial-range flux law"},
        {"hormander-check", "bracket spanning and closure ranks"},
        {"control-demo", "exact control construction and Jacobian growth"},
        {"validate", "check a config against the model assumptions"},
    };
    std::map<std::string, CommonOpts> opts;
    for (const auto& [name, desc] : kCommands)
        add_common(app.add_subcommand(name, desc), opts[name],
                   std::string(name) == "simulate");

    CLI11_PARSE(app, argc, argv);

    std::string sub = app.get_subcommands().front()->get_name();
    std::string kind = sub;
    if (sub == "hormander-check") kind = "hormander";
    if (sub == "control-demo") kind = "control";
    try {
        return run(kind, opts[sub]);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
