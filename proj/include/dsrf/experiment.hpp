#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsrf/benchmarks.hpp"
#include "dsrf/integrators.hpp"
#include "dsrf/metrics.hpp"
#include "dsrf/train.hpp"

namespace dsrf {

enum class Scale { desk, paper };
enum class ReflowMethod { vanilla, ds };

std::string method_name(ReflowMethod m);
ReflowMethod parse_method(const std::string& name);

/// Full pipeline configuration. Presets pin the two standard operating
/// points; a config file can override any field.
struct ExperimentConfig {
    BenchmarkKind benchmark = BenchmarkKind::checkerboard;
    Scale scale = Scale::desk;
    int rounds = 2;
    int pairs = 50000;
    int n_gen = 20;                       // Euler steps for coupling generation
    IntegratorSpec integrator;            // solver used by the ds branch
    TrainConfig train;
    std::vector<int> hidden_widths = {128, 128, 128};
    std::vector<int> eval_nfes = {1, 5, 10, 15, 20};
    int eval_samples = 10000;             // per side, for the distance metric
    int timing_samples = 20000;           // for the wall-time column
    int swd_projections = 500;
    int mechanism_points = 6400;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::string output_dir = "out";
    bool flip_parity = false;
    int threads = 0;                      // 0 = leave the OpenMP default

    Benchmark bench() const;
    ModelSpec model_spec() const;
    void validate() const;

    /// Directory holding one seed's artifacts.
    std::string run_dir(std::uint64_t seed) const;
};

ExperimentConfig make_preset(BenchmarkKind benchmark, Scale scale);

/// Flat "key = value" config file with dotted keys; '#' starts a comment.
/// benchmark/scale select the preset, every other key overrides one field.
/// Unknown keys are errors naming the key.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Deterministic sub-seed for a named purpose under a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// --- pipeline commands --------------------------------------------------------
// Each writes its outputs under cfg.run_dir(seed) and records them in the
// manifest. All sampled values are pure functions of (config, seed); wall
// times are measured and therefore vary run to run.

/// Trains the base model on an independent coupling; writes base.ckpt and
/// base_loss.csv. Returns the checkpoint path.
std::string run_train_base(const ExperimentConfig& cfg, std::uint64_t seed);

/// Runs cfg.rounds rectification rounds for one branch. vanilla uses plain
/// Euler for coupling generation, ds uses cfg.integrator. Rounds whose
/// checkpoint already exists are skipped (resume). Writes
/// {method}_k{r}.ckpt / .pairs / _loss.csv per round.
std::vector<std::string> run_reflow(const ExperimentConfig& cfg, ReflowMethod method,
                                    std::uint64_t seed);

/// Generates one coupling file from an existing checkpoint.
std::string run_generate(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                         const IntegratorSpec& spec, int n, std::uint64_t seed,
                         const std::string& out_path);

struct EvalRow {
    std::string method; // base | vanilla | ds | control
    int round = 0;
    int nfe = 0;
    double swd = 0.0;
    double forbidden_frac = 0.0; // NaN when the benchmark has no cell geometry
    double wall_time_s = 0.0;
    int n_samples = 0;
    std::uint64_t seed = 0;
};

/// Sweeps every existing checkpoint over cfg.eval_nfes with plain Euler:
/// distance against a fresh reference draw, forbidden fraction on the
/// checkerboard, and generation wall time (timing_samples in ten batches,
/// first excluded as warmup). Also emits a "control" row: the distance
/// between two independent reference draws. Writes metrics.csv.
std::vector<EvalRow> run_eval(const ExperimentConfig& cfg, std::uint64_t seed);

void write_metrics_csv(const std::string& path, const std::vector<EvalRow>& rows);

struct MechanismRow {
    std::string model;
    MechanismStats stats;
};

/// Convergence-compression analysis for the base model and every reflow
/// checkpoint present: mechanism_summary.csv plus one record dump per model.
std::vector<MechanismRow> run_mechanism(const ExperimentConfig& cfg, std::uint64_t seed);

/// Samples a checkpoint's field at time t on a periodic box 1.5x the data
/// extent, decomposes it, and writes the grid dump. Returns the csv path.
std::string run_helmholtz(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                          double t, int resolution, std::uint64_t seed);

/// base training -> both reflow branches -> eval -> mechanism -> helmholtz,
/// for every seed in cfg.seeds.
void run_all(const ExperimentConfig& cfg);

/// Appends (path, fnv1a-64 content hash, size) entries to
/// <run_dir>/manifest.json.
void record_outputs(const std::string& run_dir, const std::vector<std::string>& paths);

} // namespace dsrf
