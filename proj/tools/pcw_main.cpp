#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcw/config.hpp"
#include "pcw/experiment.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    // Kept as strings so the config parser owns all value validation.
    std::string seed, out_dir, lambda, scale;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "configuration file (key = value lines)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "override the run seed");
    cmd->add_option("--out", opts.out_dir, "override the output directory");
    cmd->add_option("--lambda", opts.lambda, "override the segmentation loss weight");
    cmd->add_option("--scale", opts.scale, "override the width divisor of the network");
}

pcw::RunConfig resolve(const CommonOpts& opts) {
    pcw::RunConfig cfg =
        opts.config_path.empty() ? pcw::RunConfig{} : pcw::parse_config_file(opts.config_path);
    if (!opts.seed.empty()) pcw::apply_override(cfg, "seed", opts.seed);
    if (!opts.out_dir.empty()) pcw::apply_override(cfg, "out_dir", opts.out_dir);
    if (!opts.lambda.empty()) pcw::apply_override(cfg, "lambda", opts.lambda);
    if (!opts.scale.empty()) pcw::apply_override(cfg, "scale_divisor", opts.scale);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic street-scene warning workbench"};
    app.require_subcommand(1);

    CommonOpts gen_o, train_o, base_o, eval_o, repro_o;
    CLI::App* gen = app.add_subcommand("generate", "write the synthetic dataset");
    add_common(gen, gen_o);
    CLI::App* train = app.add_subcommand(
        "train", "train the warning network (lambda > 0 keeps the segmentation branch)");
    add_common(train, train_o);
    CLI::App* base = app.add_subcommand("baseline", "train and score the sliding-window detector");
    add_common(base, base_o);
    CLI::App* evalc = app.add_subcommand("eval", "compare all methods on the eval split");
    add_common(evalc, eval_o);
    CLI::App* repro =
        app.add_subcommand("repro", "full pipeline: generate, both trainings, baseline, eval");
    add_common(repro, repro_o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) pcw::run_generate(resolve(gen_o));
        if (train->parsed()) pcw::run_train(resolve(train_o));
        if (base->parsed()) pcw::run_baseline(resolve(base_o));
        if (evalc->parsed()) pcw::run_eval(resolve(eval_o));
        if (repro->parsed()) pcw::run_repro(resolve(repro_o));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
