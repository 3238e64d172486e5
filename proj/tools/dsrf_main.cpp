#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "dsrf/experiment.hpp"

using namespace dsrf;

namespace {

ExperimentConfig build_config(const std::string& config_path, const std::string& benchmark,
                              const std::string& scale, const std::string& out_dir, int threads,
                              std::uint64_t seed, bool seed_set) {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = load_config(config_path);
    } else {
        cfg = make_preset(parse_benchmark(benchmark),
                          scale == "paper" ? Scale::paper : Scale::desk);
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (threads > 0) cfg.threads = threads;
    if (seed_set) cfg.seeds = {seed};
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D rectified-flow training, divergence-suppressed coupling regeneration, "
                 "and benchmark evaluation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string benchmark = "checkerboard";
    std::string scale = "desk";
    std::string out_dir;
    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;

    app.add_option("--config", config_path, "config file (flat key = value)");
    app.add_option("--benchmark", benchmark, "checkerboard | gmm (ignored with --config)");
    app.add_option("--scale", scale, "desk | paper (ignored with --config)");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--threads", threads, "worker cap, 0 = OpenMP default");
    app.add_option("--seed", seed, "run a single seed instead of the config list")
        ->each([&](const std::string&) { seed_set = true; });

    auto* cmd_train = app.add_subcommand("train-base", "train the base model");
    auto* cmd_reflow = app.add_subcommand("reflow", "run rectification rounds for one branch");
    std::string method = "ds";
    cmd_reflow->add_option("--method", method, "vanilla | ds")->required();

    auto* cmd_generate = app.add_subcommand("generate", "write a coupling file from a checkpoint");
    std::string gen_ckpt, gen_out, gen_solver = "euler";
    int gen_n = 10000;
    cmd_generate->add_option("--checkpoint", gen_ckpt, "model checkpoint")->required();
    cmd_generate->add_option("--output", gen_out, "output .pairs path")->required();
    cmd_generate->add_option("--n", gen_n, "number of pairs");
    cmd_generate->add_option("--integrator", gen_solver,
                             "euler | ds_project_2d | ds_search | rkf45 | rkf45_ds");

    auto* cmd_eval = app.add_subcommand("eval", "metric sweep over existing checkpoints");
    auto* cmd_mech = app.add_subcommand("mechanism", "convergence-compression analysis");

    auto* cmd_helm = app.add_subcommand("helmholtz", "decompose a checkpoint's field on a grid");
    std::string helm_ckpt;
    double helm_t = 0.5;
    int helm_res = 64;
    cmd_helm->add_option("--checkpoint", helm_ckpt, "model checkpoint")->required();
    cmd_helm->add_option("--t", helm_t, "evaluation time in [0, 1]");
    cmd_helm->add_option("--resolution", helm_res, "grid resolution (>= 8)");

    auto* cmd_all = app.add_subcommand("run-all", "full pipeline for every seed");

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg =
            build_config(config_path, benchmark, scale, out_dir, threads, seed, seed_set);
        const std::uint64_t s = cfg.seeds.front();

        if (cmd_train->parsed()) {
            std::printf("checkpoint: %s\n", run_train_base(cfg, s).c_str());
        } else if (cmd_reflow->parsed()) {
            for (const auto& p : run_reflow(cfg, parse_method(method), s))
                std::printf("checkpoint: %s\n", p.c_str());
        } else if (cmd_generate->parsed()) {
            IntegratorSpec spec = cfg.integrator;
            spec.kind = parse_solver(gen_solver);
            spec.n_steps = cfg.n_gen;
            std::printf("coupling: %s\n",
                        run_generate(cfg, gen_ckpt, spec, gen_n, s, gen_out).c_str());
        } else if (cmd_eval->parsed()) {
            const auto rows = run_eval(cfg, s);
            std::printf("metrics: %s/metrics.csv (%zu rows)\n", cfg.run_dir(s).c_str(),
                        rows.size());
        } else if (cmd_mech->parsed()) {
            const auto rows = run_mechanism(cfg, s);
            for (const auto& r : rows)
                std::printf("%-12s r=%s rho=%s <|div|>=%.4f cross=%.3f%%\n", r.model.c_str(),
                            r.stats.pearson_r ? std::to_string(*r.stats.pearson_r).c_str()
                                              : "undefined",
                            r.stats.spearman_rho ? std::to_string(*r.stats.spearman_rho).c_str()
                                                 : "undefined",
                            r.stats.mean_abs_div, 100.0 * r.stats.crossing_fraction);
        } else if (cmd_helm->parsed()) {
            std::printf("grid: %s\n", run_helmholtz(cfg, helm_ckpt, helm_t, helm_res, s).c_str());
        } else if (cmd_all->parsed()) {
            run_all(cfg);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
