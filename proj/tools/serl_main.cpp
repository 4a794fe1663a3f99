#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "serl/config.hpp"
#include "serl/errors.hpp"
#include "serl/harness.hpp"

namespace {

serl::ExperimentConfig load_or_default(const std::string& config_path,
                                       const std::string& seeds_override) {
    serl::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = serl::load_config(config_path);
    if (!seeds_override.empty()) {
        cfg.seeds.clear();
        std::stringstream ss(seeds_override);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) cfg.seeds.push_back(std::stoull(tok));
        }
        if (cfg.seeds.empty()) throw serl::ConfigError("--seeds: empty list");
    }
    cfg.validate();
    return cfg;
}

std::vector<std::string> split_terms(const std::string& spec) {
    std::vector<std::string> out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serl: source-free semi-supervised domain adaptation engine"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", seeds_override, terms_spec, inject_error;
    bool export_features = false;

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic two-domain task as CSV");
    gen->add_option("--config", config_path, "config file (key = value)");
    gen->add_option("--out", out_dir, "output directory");

    auto* run = app.add_subcommand("run", "pretrain, freeze the classifier, adapt on target");
    run->add_option("--config", config_path, "config file (key = value)");
    run->add_option("--seeds", seeds_override, "comma-separated training seeds");
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--export-features", export_features, "dump bottleneck features as CSV");

    auto* ablate = app.add_subcommand("ablate", "on/off grid over the regularization terms");
    ablate->add_option("--config", config_path, "config file (key = value)");
    ablate->add_option("--terms", terms_spec, "subset of prob,mix,pre (default: all)");
    ablate->add_option("--seeds", seeds_override, "comma-separated training seeds");
    ablate->add_option("--out", out_dir, "output directory");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every loss");
    gradcheck->add_option("--inject-error", inject_error,
                          "corrupt the named loss's gradient (negative control)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return serl::harness::cmd_gen_data(load_or_default(config_path, ""), out_dir,
                                               std::cout, std::cerr);
        }
        if (run->parsed()) {
            return serl::harness::cmd_run(load_or_default(config_path, seeds_override), out_dir,
                                          export_features, std::cout, std::cerr);
        }
        if (ablate->parsed()) {
            return serl::harness::cmd_ablate(load_or_default(config_path, seeds_override),
                                             split_terms(terms_spec), out_dir, std::cout,
                                             std::cerr);
        }
        if (gradcheck->parsed()) {
            return serl::harness::cmd_gradcheck(std::cout, std::cerr, inject_error);
        }
    } catch (const serl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return serl::harness::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return serl::harness::kExitRuntime;
    }
    return serl::harness::kExitOk;
}
