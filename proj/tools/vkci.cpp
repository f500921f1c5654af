// Command-line driver around run_experiment: one subcommand per pipeline.

#include "vk/experiment.hpp"

#include <CLI11.hpp>

#include <omp.h>

#include <cstdint>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::vector<double> parse_alpha_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

struct CommonFlags {
    std::string config, preset, out, alpha;
    std::uint64_t seed = 0;
    int threads = 0;
    CLI::Option *o_config = nullptr, *o_preset = nullptr, *o_out = nullptr;
    CLI::Option *o_seed = nullptr, *o_alpha = nullptr, *o_threads = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    f.o_config = cmd->add_option("--config", f.config, "config file path");
    f.o_preset = cmd->add_option("--preset", f.preset, "shipped preset name");
    f.o_out = cmd->add_option("--out", f.out, "output directory");
    f.o_seed = cmd->add_option("--seed", f.seed, "run seed");
    f.o_alpha = cmd->add_option("--alpha", f.alpha, "comma-separated Hoelder exponents");
    f.o_threads = cmd->add_option("--threads", f.threads, "OpenMP thread count");
    f.o_config->excludes(f.o_preset);
}

int run_verb(const std::string& verb, const CommonFlags& f) {
    if (f.o_threads->count()) omp_set_num_threads(f.threads);
    vk::ExperimentConfig cfg;
    if (f.o_preset->count()) cfg = vk::ExperimentConfig::preset(f.preset);
    else if (f.o_config->count()) cfg = vk::ExperimentConfig::load(f.config);
    cfg.mode = verb;
    if (f.o_out->count()) cfg.out_dir = f.out;
    if (f.o_seed->count()) cfg.seed = f.seed;
    if (f.o_alpha->count()) cfg.alphas = parse_alpha_list(f.alpha);
    return vk::run_experiment(cfg);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical corrugation engine"};
    app.require_subcommand(1);

    const char* verbs[] = {"stage", "sweep", "flex", "verify", "export"};
    const char* blurbs[] = {
        "run one corrugation stage per listed frequency",
        "frequency sweep with log-log rate fits",
        "full iterated construction toward a target metric",
        "full construction plus weak determinant residuals",
        "write the configured problem fields and exit",
    };
    std::vector<CommonFlags> flags(5);
    std::vector<CLI::App*> cmds(5);
    for (int i = 0; i < 5; ++i) {
        cmds[i] = app.add_subcommand(verbs[i], blurbs[i]);
        add_common(cmds[i], flags[i]);
    }

    CLI11_PARSE(app, argc, argv);

    for (int i = 0; i < 5; ++i)
        if (cmds[i]->parsed()) {
            try {
                return run_verb(verbs[i], flags[i]);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 1;
            }
        }
    return 1;
}
