// jad: command-line front end for training, certification, attacks and detection.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jad/commands.hpp"
#include "jad/error.hpp"

namespace {

struct ConfigArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::size_t threads = 0;
};

void add_config_args(CLI::App* cmd, ConfigArgs& a) {
    cmd->add_option("-c,--config", a.config_path, "key=value run configuration file");
    cmd->add_option("-s,--set", a.overrides, "override a config entry, e.g. --set attack.eps=8/255");
    cmd->add_option("--threads", a.threads, "worker threads (default 1)");
}

jad::RunConfig resolve(const ConfigArgs& a) {
    jad::RunConfig cfg = a.config_path.empty() ? jad::parse_config("") : jad::load_config(a.config_path);
    for (const auto& kv : a.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw jad::ConfigError("--set expects key=value, got '" + kv + "'");
        jad::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (a.threads > 0) cfg.threads = a.threads;
    jad::validate_config(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"JPEG amplification detector toolkit"};
    app.require_subcommand(1);

    ConfigArgs args;
    std::string checkpoint, out_dir = "out";
    bool spectral = false;

    struct Entry {
        const char* name;
        const char* help;
        void (*run)(const jad::RunConfig&, std::ostream&);
    };
    const Entry config_commands[] = {
        {"train", "train a network; writes model.jadn and history.csv", jad::cli::cmd_train},
        {"attack", "attack the test split; writes adv.f64 and attacks.csv", jad::cli::cmd_attack},
        {"amp", "net amplification ratio of attacked test samples; writes amp.csv", jad::cli::cmd_amp},
        {"eval", "detector evaluation; writes results.csv, scores.csv, baseline.csv", jad::cli::cmd_eval},
        {"adaptive", "adaptive-attack grid; writes adaptive_results.csv", jad::cli::cmd_adaptive},
        {"corrupt-study", "amplification under non-adversarial corruptions; writes corrupt_study.csv",
         jad::cli::cmd_corrupt_study},
    };
    std::vector<std::pair<CLI::App*, const Entry*>> subs;
    for (const auto& e : config_commands) {
        CLI::App* cmd = app.add_subcommand(e.name, e.help);
        add_config_args(cmd, args);
        subs.emplace_back(cmd, &e);
    }

    CLI::App* certify = app.add_subcommand("certify", "certified amplification beta; writes spectral.csv");
    certify->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    certify->add_option("-o,--out", out_dir, "output directory");

    CLI::App* report = app.add_subcommand("report", "print reports for a checkpoint");
    report->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    report->add_flag("--spectral", spectral, "per-layer singular values and cumulative beta as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    return jad::cli::run_guarded(
        [&] {
            if (certify->parsed()) {
                jad::cli::cmd_certify(checkpoint, out_dir, std::cout);
                return;
            }
            if (report->parsed()) {
                if (!spectral) throw jad::ConfigError("report needs a report kind (--spectral)");
                jad::cli::cmd_report_spectral(checkpoint, std::cout);
                return;
            }
            for (const auto& [cmd, entry] : subs) {
                if (cmd->parsed()) entry->run(resolve(args), std::cout);
            }
        },
        std::cerr);
}
