#include "dsrf/experiment.hpp"

#include "dsrf/helmholtz.hpp"

#include <omp.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace dsrf {

std::string method_name(ReflowMethod m) { return m == ReflowMethod::vanilla ? "vanilla" : "ds"; }

ReflowMethod parse_method(const std::string& name) {
    if (name == "vanilla") return ReflowMethod::vanilla;
    if (name == "ds") return ReflowMethod::ds;
    throw std::invalid_argument("unknown method: " + name);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return RandomSource(seed, tag).next_u64();
}

namespace {

// Sub-seed tags under one run seed.
constexpr std::uint64_t kTagBaseCoupling = 1;
constexpr std::uint64_t kTagBaseInit = 2;
constexpr std::uint64_t kTagBaseTrain = 3;
constexpr std::uint64_t kTagGenRound = 100;      // +round, shared by both methods
constexpr std::uint64_t kTagTrainVanilla = 200;  // +round
constexpr std::uint64_t kTagTrainDs = 300;       // +round
constexpr std::uint64_t kTagEvalSources = 400;
constexpr std::uint64_t kTagEvalReference = 401;
constexpr std::uint64_t kTagEvalReference2 = 402;
constexpr std::uint64_t kTagEvalProjections = 403;
constexpr std::uint64_t kTagEvalTiming = 404;
constexpr std::uint64_t kTagMechanism = 500;

void apply_threads(const ExperimentConfig& cfg) {
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
}

} // namespace

Benchmark ExperimentConfig::bench() const {
    Benchmark b;
    b.kind = benchmark;
    b.checkerboard.flip_parity = flip_parity;
    return b;
}

ModelSpec ExperimentConfig::model_spec() const {
    ModelSpec spec;
    spec.input_dim = 3;
    spec.output_dim = 2;
    spec.hidden_widths = hidden_widths;
    return spec;
}

void ExperimentConfig::validate() const {
    if (rounds < 1) throw std::invalid_argument("config: rounds must be >= 1");
    if (pairs < 1) throw std::invalid_argument("config: pairs must be >= 1");
    if (n_gen < 1) throw std::invalid_argument("config: n_gen must be >= 1");
    if (eval_samples < 1 || timing_samples < 1 || swd_projections < 1 || mechanism_points < 1)
        throw std::invalid_argument("config: eval sizes must be >= 1");
    if (eval_nfes.empty()) throw std::invalid_argument("config: eval.nfes must be nonempty");
    for (int nfe : eval_nfes)
        if (nfe < 1) throw std::invalid_argument("config: eval.nfes entries must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
    if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
    model_spec().validate();
    integrator.validate();
    train.validate();
}

std::string ExperimentConfig::run_dir(std::uint64_t seed) const {
    std::string scale_name = scale == Scale::desk ? "desk" : "paper";
    return output_dir + "/" + benchmark_name(benchmark) + "_" + scale_name + "_seed" +
           std::to_string(seed);
}

ExperimentConfig make_preset(BenchmarkKind benchmark, Scale scale) {
    ExperimentConfig cfg;
    cfg.benchmark = benchmark;
    cfg.scale = scale;
    cfg.integrator.kind = SolverKind::ds_project_2d;
    cfg.integrator.alpha = 0.5;
    cfg.integrator.fd_step = 1e-3;
    cfg.integrator.t_stop = 0.5;
    cfg.integrator.delta = 0.05;
    cfg.integrator.candidates = 8;
    cfg.integrator.hutch_probes = 8;
    cfg.integrator.rk_tol = 1e-6;
    cfg.rounds = 2;
    cfg.n_gen = 20;
    cfg.integrator.n_steps = cfg.n_gen;

    if (scale == Scale::desk) {
        cfg.hidden_widths = {128, 128, 128};
        cfg.pairs = 50000;
        cfg.train.iterations = 6000;
        cfg.train.batch_size = 1024;
        cfg.train.learning_rate = 1e-3;
        cfg.eval_samples = 10000;
        cfg.timing_samples = 20000;
        cfg.swd_projections = 500;
    } else {
        cfg.hidden_widths = {512, 512, 512};
        cfg.pairs = benchmark == BenchmarkKind::checkerboard ? 200000 : 100000;
        cfg.train.iterations = 20000;
        cfg.train.batch_size = 1024;
        cfg.train.learning_rate = 1e-3;
        cfg.eval_samples = 10000;
        cfg.timing_samples = 100000;
        cfg.swd_projections = 2000;
    }
    return cfg;
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stoi(trim(tok)));
    if (out.empty()) throw std::invalid_argument("config: empty list");
    return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stoull(trim(tok)));
    if (out.empty()) throw std::invalid_argument("config: empty list");
    return out;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument("config: expected boolean, got '" + s + "'");
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }

    // benchmark and scale pick the preset; everything else overrides it.
    BenchmarkKind bench = BenchmarkKind::checkerboard;
    Scale scale = Scale::desk;
    for (const auto& [k, v] : entries) {
        if (k == "benchmark") bench = parse_benchmark(v);
        if (k == "scale") {
            if (v == "desk") scale = Scale::desk;
            else if (v == "paper") scale = Scale::paper;
            else throw std::invalid_argument("config: unknown scale '" + v + "'");
        }
    }
    ExperimentConfig cfg = make_preset(bench, scale);

    for (const auto& [k, v] : entries) {
        if (k == "benchmark" || k == "scale") continue;
        else if (k == "rounds") cfg.rounds = std::stoi(v);
        else if (k == "pairs") cfg.pairs = std::stoi(v);
        else if (k == "n_gen") { cfg.n_gen = std::stoi(v); cfg.integrator.n_steps = cfg.n_gen; }
        else if (k == "output_dir") cfg.output_dir = v;
        else if (k == "threads") cfg.threads = std::stoi(v);
        else if (k == "checkerboard.flip_parity") cfg.flip_parity = parse_bool(v);
        else if (k == "integrator.kind") cfg.integrator.kind = parse_solver(v);
        else if (k == "integrator.alpha") cfg.integrator.alpha = std::stod(v);
        else if (k == "integrator.fd_step") cfg.integrator.fd_step = std::stod(v);
        else if (k == "integrator.delta") cfg.integrator.delta = std::stod(v);
        else if (k == "integrator.m") cfg.integrator.candidates = std::stoi(v);
        else if (k == "integrator.n_h") cfg.integrator.hutch_probes = std::stoi(v);
        else if (k == "integrator.t_stop") cfg.integrator.t_stop = std::stod(v);
        else if (k == "integrator.rk_tol") cfg.integrator.rk_tol = std::stod(v);
        else if (k == "integrator.div_budget") cfg.integrator.div_budget = std::stod(v);
        else if (k == "train.iterations") cfg.train.iterations = std::stoi(v);
        else if (k == "train.batch_size") cfg.train.batch_size = std::stoi(v);
        else if (k == "train.lr") cfg.train.learning_rate = std::stod(v);
        else if (k == "train.beta1") cfg.train.adam_beta1 = std::stod(v);
        else if (k == "train.beta2") cfg.train.adam_beta2 = std::stod(v);
        else if (k == "train.eps") cfg.train.adam_eps = std::stod(v);
        else if (k == "model.hidden") cfg.hidden_widths = parse_int_list(v);
        else if (k == "eval.nfes") cfg.eval_nfes = parse_int_list(v);
        else if (k == "eval.samples") cfg.eval_samples = std::stoi(v);
        else if (k == "eval.timing_samples") cfg.timing_samples = std::stoi(v);
        else if (k == "eval.swd_projections") cfg.swd_projections = std::stoi(v);
        else if (k == "mechanism.points") cfg.mechanism_points = std::stoi(v);
        else if (k == "seeds") cfg.seeds = parse_u64_list(v);
        else throw std::invalid_argument("config: unknown key '" + k + "'");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

// --- manifest ------------------------------------------------------------------

namespace {

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("manifest: cannot open " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[65536];
    while (is) {
        is.read(buf, sizeof(buf));
        const std::streamsize got = is.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

} // namespace

void record_outputs(const std::string& run_dir, const std::vector<std::string>& paths) {
    const std::string manifest_path = run_dir + "/manifest.json";
    nlohmann::json root;
    {
        std::ifstream is(manifest_path);
        if (is) {
            try {
                is >> root;
            } catch (const nlohmann::json::exception&) {
                root = nlohmann::json::object();
            }
        }
    }
    if (!root.contains("files") || !root["files"].is_object())
        root["files"] = nlohmann::json::object();
    for (const std::string& p : paths) {
        const std::string rel = fs::relative(p, run_dir).string();
        root["files"][rel] = {{"fnv1a64", hex64(fnv1a64_file(p))},
                              {"bytes", fs::file_size(p)}};
    }
    std::ofstream os(manifest_path);
    os << root.dump(2) << "\n";
    if (!os.good()) throw std::runtime_error("manifest: write failed: " + manifest_path);
}

// --- pipeline ------------------------------------------------------------------

namespace {

std::vector<Vec2> euler_endpoints(const ModelParams& params, std::span<const Vec2> sources,
                                  int nfe) {
    std::vector<Vec2> out(sources.size());
    std::string error;
#pragma omp parallel
    {
        MlpField field(params);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sources.size()); ++i) {
            try {
                out[i] = euler(field, sources[i], nfe);
            } catch (const std::exception& e) {
#pragma omp critical
                if (error.empty()) error = e.what();
            }
        }
    }
    if (!error.empty()) throw std::runtime_error("euler_endpoints: " + error);
    return out;
}

IntegratorSpec branch_integrator(const ExperimentConfig& cfg, ReflowMethod method) {
    if (method == ReflowMethod::vanilla) {
        IntegratorSpec spec;
        spec.kind = SolverKind::euler;
        spec.n_steps = cfg.n_gen;
        return spec;
    }
    IntegratorSpec spec = cfg.integrator;
    spec.n_steps = cfg.n_gen;
    return spec;
}

} // namespace

std::string run_train_base(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    apply_threads(cfg);
    const std::string dir = cfg.run_dir(seed);
    fs::create_directories(dir);

    const Benchmark bench = cfg.bench();
    const Coupling coupling = make_independent_coupling(
        RandomSource(derive_seed(seed, kTagBaseCoupling)), bench, cfg.pairs);

    TrainConfig tcfg = cfg.train;
    tcfg.seed = derive_seed(seed, kTagBaseTrain);
    const ModelParams init =
        init_params(cfg.model_spec(), RandomSource(derive_seed(seed, kTagBaseInit)));

    std::vector<LossLogEntry> log;
    const ModelParams params = train(init, coupling, tcfg, &log);

    const std::string ckpt = dir + "/base.ckpt";
    const std::string loss_csv = dir + "/base_loss.csv";
    save_checkpoint(params, ckpt);
    save_loss_log(log, loss_csv);
    record_outputs(dir, {ckpt, loss_csv});
    return ckpt;
}

std::vector<std::string> run_reflow(const ExperimentConfig& cfg, ReflowMethod method,
                                    std::uint64_t seed) {
    cfg.validate();
    apply_threads(cfg);
    const std::string dir = cfg.run_dir(seed);
    const std::string base_ckpt = dir + "/base.ckpt";
    if (!fs::exists(base_ckpt))
        throw std::runtime_error("reflow: base checkpoint missing, run train-base first: " +
                                 base_ckpt);

    const Benchmark bench = cfg.bench();
    const IntegratorSpec spec = branch_integrator(cfg, method);
    const std::string mname = method_name(method);

    ModelParams prev = load_checkpoint(base_ckpt, cfg.model_spec());
    std::vector<std::string> ckpts;
    for (int r = 1; r <= cfg.rounds; ++r) {
        const std::string tag = mname + "_k" + std::to_string(r);
        const std::string ckpt = dir + "/" + tag + ".ckpt";
        const std::string pairs_path = dir + "/" + tag + ".pairs";
        const std::string loss_csv = dir + "/" + tag + "_loss.csv";
        if (fs::exists(ckpt)) { // resume: this round is already done
            prev = load_checkpoint(ckpt, cfg.model_spec());
            ckpts.push_back(ckpt);
            continue;
        }

        TrainConfig tcfg = cfg.train;
        const std::uint64_t train_tag =
            (method == ReflowMethod::vanilla ? kTagTrainVanilla : kTagTrainDs) +
            static_cast<std::uint64_t>(r);
        tcfg.seed = derive_seed(seed, train_tag);
        // Generation seed is shared by both methods so their x0 lists match.
        RandomSource gen_rng(derive_seed(seed, kTagGenRound + static_cast<std::uint64_t>(r)));

        std::vector<LossLogEntry> log;
        ReflowResult res = reflow_round(prev, gen_rng, cfg.pairs, spec, bench, tcfg, r,
                                        /*warm_start=*/false, &log);

        if (method == ReflowMethod::ds) {
            // Activity check: the corrected endpoints should deviate from
            // plain Euler on a visible share of a probe subset.
            const int probe_n = std::min<int>(1000, cfg.pairs);
            IntegratorSpec plain = branch_integrator(cfg, ReflowMethod::vanilla);
            MlpField field(prev);
            int moved = 0;
            for (int i = 0; i < probe_n; ++i) {
                const Vec2 e = euler(field, res.coupling.x0[i], plain.n_steps);
                if (norm(e - res.coupling.x1[i]) > 1e-3) ++moved;
            }
            const double frac = static_cast<double>(moved) / probe_n;
            std::printf("[reflow %s] correction active on %.1f%% of %d probe endpoints\n",
                        tag.c_str(), 100.0 * frac, probe_n);
        }

        save_coupling(res.coupling, pairs_path);
        save_checkpoint(res.params, ckpt);
        save_loss_log(log, loss_csv);
        record_outputs(dir, {ckpt, pairs_path, loss_csv});
        prev = std::move(res.params);
        ckpts.push_back(ckpt);
    }
    return ckpts;
}

std::string run_generate(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                         const IntegratorSpec& spec, int n, std::uint64_t seed,
                         const std::string& out_path) {
    cfg.validate();
    apply_threads(cfg);
    const ModelParams params = load_checkpoint(checkpoint_path);
    const Coupling c = generate_coupling(params, RandomSource(seed), n, spec, cfg.bench());
    save_coupling(c, out_path);
    return out_path;
}

namespace {

struct NamedCheckpoint {
    std::string method;
    int round;
    ModelParams params;
};

std::vector<NamedCheckpoint> existing_checkpoints(const ExperimentConfig& cfg,
                                                  std::uint64_t seed) {
    const std::string dir = cfg.run_dir(seed);
    std::vector<NamedCheckpoint> out;
    const std::string base = dir + "/base.ckpt";
    if (fs::exists(base)) out.push_back({"base", 0, load_checkpoint(base, cfg.model_spec())});
    for (const std::string method : {"vanilla", "ds"})
        for (int r = 1; r <= cfg.rounds; ++r) {
            const std::string p = dir + "/" + method + "_k" + std::to_string(r) + ".ckpt";
            if (fs::exists(p)) out.push_back({method, r, load_checkpoint(p, cfg.model_spec())});
        }
    if (out.empty())
        throw std::runtime_error("no checkpoints found under " + dir + "; run the pipeline first");
    return out;
}

} // namespace

std::vector<EvalRow> run_eval(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    apply_threads(cfg);
    const std::string dir = cfg.run_dir(seed);
    const Benchmark bench = cfg.bench();
    const std::vector<NamedCheckpoint> models = existing_checkpoints(cfg, seed);

    RandomSource src_rng(derive_seed(seed, kTagEvalSources));
    RandomSource ref_rng(derive_seed(seed, kTagEvalReference));
    RandomSource ref2_rng(derive_seed(seed, kTagEvalReference2));
    RandomSource timing_rng(derive_seed(seed, kTagEvalTiming));
    const RandomSource swd_rng(derive_seed(seed, kTagEvalProjections));

    const std::vector<Vec2> sources = bench.sample_source(src_rng, cfg.eval_samples);
    const std::vector<Vec2> reference = bench.sample_target(ref_rng, cfg.eval_samples);
    const std::vector<Vec2> reference2 = bench.sample_target(ref2_rng, cfg.eval_samples);
    const std::vector<Vec2> timing_sources = bench.sample_source(timing_rng, cfg.timing_samples);

    std::vector<EvalRow> rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    // Control: distance between two independent reference draws (the
    // sampling noise floor any model comparison sits on).
    EvalRow control{"control", 0, 0,
                    sliced_wasserstein(reference, reference2, cfg.swd_projections, swd_rng),
                    nan, 0.0, cfg.eval_samples, seed};
    if (cfg.benchmark == BenchmarkKind::checkerboard)
        control.forbidden_frac = forbidden_fraction(bench.checkerboard, reference);
    rows.push_back(control);

    constexpr int kTimingBatches = 10;
    for (const NamedCheckpoint& m : models) {
        for (int nfe : cfg.eval_nfes) {
            EvalRow row{m.method, m.round, nfe, 0.0, nan, 0.0, cfg.eval_samples, seed};

            const std::vector<Vec2> endpoints = euler_endpoints(m.params, sources, nfe);
            row.swd = sliced_wasserstein(endpoints, reference, cfg.swd_projections, swd_rng);
            if (cfg.benchmark == BenchmarkKind::checkerboard)
                row.forbidden_frac = forbidden_fraction(bench.checkerboard, endpoints);

            // Wall time over timing_samples in batches, first excluded.
            const int per_batch = (cfg.timing_samples + kTimingBatches - 1) / kTimingBatches;
            double elapsed = 0.0;
            for (int b = 0; b < kTimingBatches; ++b) {
                const int lo = b * per_batch;
                const int hi = std::min(cfg.timing_samples, lo + per_batch);
                if (lo >= hi) break;
                std::span<const Vec2> batch(timing_sources.data() + lo,
                                            static_cast<std::size_t>(hi - lo));
                const double t0 = omp_get_wtime();
                euler_endpoints(m.params, batch, nfe);
                const double t1 = omp_get_wtime();
                if (b > 0) elapsed += t1 - t0; // batch 0 is warmup
            }
            row.wall_time_s = elapsed;
            rows.push_back(row);
        }
    }

    const std::string csv = dir + "/metrics.csv";
    write_metrics_csv(csv, rows);
    record_outputs(dir, {csv});
    return rows;
}

void write_metrics_csv(const std::string& path, const std::vector<EvalRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "method,round,nfe,swd,forbidden_frac,wall_time_s,n_samples,seed\n";
    os.precision(17);
    for (const auto& r : rows)
        os << r.method << "," << r.round << "," << r.nfe << "," << r.swd << ","
           << r.forbidden_frac << "," << r.wall_time_s << "," << r.n_samples << "," << r.seed
           << "\n";
    if (!os.good()) throw std::runtime_error("write failed: " + path);
}

std::vector<MechanismRow> run_mechanism(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    apply_threads(cfg);
    const std::string dir = cfg.run_dir(seed);
    const std::vector<NamedCheckpoint> models = existing_checkpoints(cfg, seed);

    std::vector<ModelParams> params;
    std::vector<std::string> names;
    for (const auto& m : models) {
        params.push_back(m.params);
        names.push_back(m.round == 0 ? m.method : m.method + "_k" + std::to_string(m.round));
    }

    const std::vector<MechanismStats> stats =
        mechanism_study(params, cfg.mechanism_points, 20, derive_seed(seed, kTagMechanism));

    std::vector<MechanismRow> rows;
    std::vector<std::string> outputs;
    const std::string summary = dir + "/mechanism_summary.csv";
    std::ofstream os(summary);
    if (!os) throw std::runtime_error("cannot open for writing: " + summary);
    os << "model,n,pearson_r,spearman_rho,mean_abs_div,crossing_fraction,capped\n";
    os.precision(17);
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const MechanismStats& st = stats[i];
        os << names[i] << "," << cfg.mechanism_points << ",";
        if (st.pearson_r) os << *st.pearson_r;
        else os << "undefined";
        os << ",";
        if (st.spearman_rho) os << *st.spearman_rho;
        else os << "undefined";
        os << "," << st.mean_abs_div << "," << st.crossing_fraction << "," << st.capped << "\n";

        const std::string dump = dir + "/mechanism_" + names[i] + ".csv";
        save_mechanism_records(st.records, dump);
        outputs.push_back(dump);
        rows.push_back({names[i], st});
    }
    os.close();
    outputs.push_back(summary);
    record_outputs(dir, outputs);
    return rows;
}

std::string run_helmholtz(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                          double t, int resolution, std::uint64_t seed) {
    cfg.validate();
    apply_threads(cfg);
    const std::string dir = cfg.run_dir(seed);
    fs::create_directories(dir);
    const ModelParams params = load_checkpoint(checkpoint_path);

    // Periodic box 1.5x the data extent, where the learned field is smooth.
    double half = 0.9;
    if (cfg.benchmark == BenchmarkKind::gmm) {
        const GmmSpec& g = cfg.bench().gmm;
        half = g.circumradius + 3.0 * std::sqrt(g.variance);
    }
    half *= 1.5;

    const GridField v =
        grid_sample_field(params, t, resolution, resolution, -half, -half, 2 * half, 2 * half);
    const HelmholtzDecomposition parts = decompose(v);

    std::ostringstream name;
    name << dir << "/helmholtz_" << fs::path(checkpoint_path).stem().string() << "_t" << t << "_r"
         << resolution << ".csv";
    write_grid_csv(name.str(), v, parts);
    record_outputs(dir, {name.str()});
    return name.str();
}

void run_all(const ExperimentConfig& cfg) {
    cfg.validate();
    for (std::uint64_t seed : cfg.seeds) {
        std::printf("== %s seed %llu ==\n", benchmark_name(cfg.benchmark).c_str(),
                    static_cast<unsigned long long>(seed));
        const std::string base = run_train_base(cfg, seed);
        run_reflow(cfg, ReflowMethod::vanilla, seed);
        run_reflow(cfg, ReflowMethod::ds, seed);
        run_eval(cfg, seed);
        run_mechanism(cfg, seed);
        run_helmholtz(cfg, base, 0.5, 64, seed);
    }
}

} // namespace dsrf
