#include "opuq/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opuq/al.hpp"
#include "opuq/bo.hpp"
#include "opuq/calibrate.hpp"
#include "opuq/csvio.hpp"
#include "opuq/dataset.hpp"
#include "opuq/infer.hpp"
#include "opuq/model.hpp"
#include "opuq/rng.hpp"
#include "opuq/train.hpp"

namespace opuq {

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

/// Refuses to clobber prior artifacts: every listed output must be absent
/// unless --force was given.
void guard_outputs(const std::vector<std::string>& paths, bool force) {
    if (force) return;
    for (const auto& p : paths)
        if (std::filesystem::exists(p))
            throw std::invalid_argument("output already exists (use --force): " + p);
}

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    std::map<std::string, std::string> kv) {
    kv["subcommand"] = subcommand;
    kv["tool"] = "opuq";
    kv["tool.version"] = kToolVersion;
    kv["format.dataset"] = "OPUQDS01";
    kv["format.checkpoint"] = "OPUQCK01";
    kv["format.grid"] = "OPUQGR01";
    std::ofstream out(join_path(out_dir, "manifest"), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest in " + out_dir);
    for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
}

std::string num(double v) { return CsvWriter::num(v); }
std::string num(std::size_t v) { return CsvWriter::num(v); }

std::string scales_string(const std::vector<double>& scales) {
    std::string s;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (i) s += ",";
        s += num(scales[i]);
    }
    return s;
}

/// Ratio that re-normalizes a dataset's stored f sensors to the scale the
/// checkpointed model was trained with (1 when the checkpoint predates the
/// dataset convention or the scales agree).
double rescale_for(const LoadedModel& loaded, const Dataset& ds) {
    const auto it = loaded.meta.find("f_scale");
    if (it == loaded.meta.end()) return 1.0;
    const double trained = std::strtod(it->second.c_str(), nullptr);
    if (!(trained > 0.0)) return 1.0;
    return ds.f_scale / trained;
}

std::vector<std::size_t> split_indices(const Dataset& ds, const std::string& split) {
    if (split == "validation") return validation_indices(ds);
    if (split == "training") return training_indices(ds);
    if (split == "all") {
        std::vector<std::size_t> all(ds.records.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }
    throw std::invalid_argument("unknown split '" + split +
                                "' (expected validation|training|all)");
}

// ---- subcommand option bundles ---------------------------------------------

struct CommonOpts {
    std::string out;
    bool force = false;
};

void add_common(CLI::App* sub, CommonOpts& c) {
    sub->add_option("--out", c.out, "output directory")->required();
    sub->add_flag("--force", c.force, "overwrite existing outputs");
}

struct GenOpts : CommonOpts {
    std::string family = "poisson-inhomogeneous";
    std::string shape = "unit-square";
    std::size_t resolution = 32;
    std::vector<double> scales;
    std::size_t n = 0;
    std::size_t eval_per_record = 50;
    std::size_t interior_sensors = 100;
    std::size_t boundary_sensors = 64;
    std::uint64_t seed = 0;
    std::uint64_t layout_seed = 0;
};

std::string run_gen(const GenOpts& o) {
    std::filesystem::create_directories(o.out);
    const std::string artifact = join_path(o.out, "dataset.bin");
    guard_outputs({artifact, join_path(o.out, "manifest")}, o.force);

    DatasetConfig dc;
    dc.family = parse_family(o.family);
    dc.shape = parse_shape(o.shape);
    dc.resolution = static_cast<std::uint32_t>(o.resolution);
    dc.length_scales = o.scales;
    dc.n_per_scale = o.n;
    dc.eval_per_record = o.eval_per_record;
    dc.n_interior_sensors = o.interior_sensors;
    dc.n_boundary_sensors = o.boundary_sensors;
    dc.seed = o.seed;
    dc.layout_seed = o.layout_seed;
    const Dataset ds = generate_dataset(dc);
    write_dataset(ds, artifact);

    write_manifest(o.out, "gen-data",
                   {{"family", family_name(dc.family)},
                    {"shape", shape_name(dc.shape)},
                    {"resolution", num(std::size_t{dc.resolution})},
                    {"scales", scales_string(dc.length_scales)},
                    {"n", num(dc.n_per_scale)},
                    {"eval-per-record", num(dc.eval_per_record)},
                    {"interior-sensors", num(dc.n_interior_sensors)},
                    {"boundary-sensors", num(dc.n_boundary_sensors)},
                    {"seed", num(std::size_t{dc.seed})},
                    {"layout-seed", num(std::size_t{dc.layout_seed})},
                    {"f_scale", num(ds.f_scale)},
                    {"records", num(ds.records.size())}});
    return artifact;
}

struct TrainOpts : CommonOpts {
    std::string data;
    std::size_t steps = 200000;
    double lr0 = 7.5e-4;
    std::size_t batch = 512;
    double decay = 0.95;
    std::size_t decay_every = 25000;
    std::string loss = "nll";
    std::uint64_t seed = 0;
    std::uint64_t model_seed = 1;
    std::string train_on = "training";
};

std::string run_train(const TrainOpts& o) {
    std::filesystem::create_directories(o.out);
    const std::string artifact = join_path(o.out, "checkpoint.bin");
    const std::string trace_path = join_path(o.out, "trace.csv");
    const std::string metrics_path = join_path(o.out, "metrics.csv");
    guard_outputs({artifact, trace_path, metrics_path, join_path(o.out, "manifest")}, o.force);

    const Dataset ds = read_dataset(o.data);
    ModelConfig arch;
    arch.branch_input = ds.sensor_dim();
    OperatorModel model(arch, o.model_seed);

    TrainConfig tc;
    tc.lr0 = o.lr0;
    tc.batch = o.batch;
    tc.decay = o.decay;
    tc.decay_every = o.decay_every;
    tc.steps = o.steps;
    tc.seed = o.seed;
    tc.loss = parse_loss(o.loss);
    tc.record_indices = split_indices(ds, o.train_on);
    tc.trace_path = trace_path;
    tc.checkpoint_dir = o.out;
    train(model, ds, tc);

    const std::map<std::string, std::string> meta{
        {"data", o.data},
        {"f_scale", num(ds.f_scale)},
        {"family", family_name(ds.family)},
        {"loss", loss_name(tc.loss)},
        {"steps", num(tc.steps)},
        {"seed", num(std::size_t{tc.seed})},
        {"model-seed", num(std::size_t{o.model_seed})},
    };
    save_checkpoint(model, meta, artifact);
    write_metrics(evaluate(model, ds, validation_indices(ds)), metrics_path);

    write_manifest(o.out, "train",
                   {{"data", o.data},
                    {"steps", num(o.steps)},
                    {"lr0", num(o.lr0)},
                    {"batch", num(o.batch)},
                    {"decay", num(o.decay)},
                    {"decay-every", num(o.decay_every)},
                    {"loss", loss_name(tc.loss)},
                    {"seed", num(std::size_t{o.seed})},
                    {"model-seed", num(std::size_t{o.model_seed})},
                    {"train-on", o.train_on},
                    {"f_scale", num(ds.f_scale)}});
    return artifact;
}

struct EvalOpts : CommonOpts {
    std::string data;
    std::string checkpoint;
    std::string split = "validation";
};

std::string run_eval(const EvalOpts& o) {
    std::filesystem::create_directories(o.out);
    const std::string artifact = join_path(o.out, "metrics.csv");
    guard_outputs({artifact, join_path(o.out, "manifest")}, o.force);

    const Dataset ds = read_dataset(o.data);
    const LoadedModel loaded = load_checkpoint(o.checkpoint);
    const double rescale = rescale_for(loaded, ds);
    write_metrics(evaluate(loaded.model, ds, split_indices(ds, o.split), rescale), artifact);

    write_manifest(o.out, "eval",
                   {{"data", o.data},
                    {"checkpoint", o.checkpoint},
                    {"split", o.split},
                    {"f-rescale", num(rescale)}});
    return artifact;
}

struct InferOpts : CommonOpts {
    std::string data;
    std::string checkpoint;
    std::size_t record = 0;
};

std::string run_infer(const InferOpts& o) {
    std::filesystem::create_directories(o.out);
    const std::string mu_csv = join_path(o.out, "mu.csv");
    const std::string sigma_csv = join_path(o.out, "sigma.csv");
    const std::string mu_bin = join_path(o.out, "mu.bin");
    const std::string sigma_bin = join_path(o.out, "sigma.bin");
    guard_outputs({mu_csv, sigma_csv, mu_bin, sigma_bin, join_path(o.out, "manifest")},
                  o.force);

    const Dataset ds = read_dataset(o.data);
    if (o.record >= ds.records.size())
        throw std::invalid_argument("record index " + std::to_string(o.record) +
                                    " outside the dataset (" +
                                    std::to_string(ds.records.size()) + " records)");
    const LoadedModel loaded = load_checkpoint(o.checkpoint);
    const double rescale = rescale_for(loaded, ds);

    const DataRecord& rec = ds.records[o.record];
    std::vector<double> f = rec.f_sensors;
    for (double& v : f) v *= rescale;

    const InferenceEngine engine(loaded.model, ds.domain());
    const GridPrediction pred = engine.infer_grid(f, rec.g_sensors);
    write_grid_csv(pred.mu, mu_csv);
    write_grid_csv(pred.sigma, sigma_csv);
    write_grid_bin(pred.mu, mu_bin);
    write_grid_bin(pred.sigma, sigma_bin);

    write_manifest(o.out, "infer",
                   {{"data", o.data},
                    {"checkpoint", o.checkpoint},
                    {"record", num(o.record)},
                    {"f-rescale", num(rescale)}});
    return o.out;
}

struct CalibrateOpts : CommonOpts {
    std::string data;
    std::string checkpoint;
    std::string split = "validation";
};

std::string run_calibrate(const CalibrateOpts& o) {
    std::filesystem::create_directories(o.out);
    const std::string artifact = join_path(o.out, "calibration.csv");
    const std::string coverage_path = join_path(o.out, "coverage.csv");
    guard_outputs({artifact, coverage_path, join_path(o.out, "manifest")}, o.force);

    const Dataset ds = read_dataset(o.data);
    const LoadedModel loaded = load_checkpoint(o.checkpoint);
    const double rescale = rescale_for(loaded, ds);
    const CalibrationStudy study =
        calibrate_model(loaded.model, ds, split_indices(ds, o.split), rescale);
    write_calibration(study, artifact);
    write_coverage(study.pooled, coverage_path);

    write_manifest(o.out, "calibrate",
                   {{"data", o.data},
                    {"checkpoint", o.checkpoint},
                    {"split", o.split},
                    {"f-rescale", num(rescale)},
                    {"records", num(study.records.size())}});
    return artifact;
}

struct BenchOpts : CommonOpts {
    std::string checkpoint;
    std::string shape = "unit-circle";
    std::size_t resolution = 32;
    std::size_t batch = 100;
    std::uint64_t seed = 0;
};

std::string run_bench(const BenchOpts& o) {
    std::filesystem::create_directories(o.out);
    const std::string artifact = join_path(o.out, "bench.csv");
    guard_outputs({artifact, join_path(o.out, "manifest")}, o.force);
    if (o.batch == 0) throw std::invalid_argument("bench: batch must be >= 1");

    const LoadedModel loaded = load_checkpoint(o.checkpoint);
    const Domain domain = Domain::make(parse_shape(o.shape), static_cast<std::uint32_t>(o.resolution));
    const InferenceEngine engine(loaded.model, domain);

    const std::size_t dim = loaded.model.config().branch_input;
    Rng rng(o.seed);
    DenseMatrix inputs(o.batch, dim);
    for (double& v : inputs.flat()) v = rng.uniform(-1.0, 1.0);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const std::vector<GridPrediction> fast = engine.infer_batch(inputs);
    const double fast_total = std::chrono::duration<double>(clock::now() - t0).count();
    const double fast_each = fast_total / static_cast<double>(o.batch);

    CsvWriter csv(artifact, {"input", "naive_s", "fast_s", "speedup", "max_abs_diff"});
    double naive_total = 0.0;
    double diff_all = 0.0;
    for (std::size_t i = 0; i < o.batch; ++i) {
        const std::span<const double> row(inputs.row(i), dim);
        const auto n0 = clock::now();
        const GridPrediction naive = engine.infer_grid_naive(row, {});
        const double naive_s = std::chrono::duration<double>(clock::now() - n0).count();
        naive_total += naive_s;

        double diff = 0.0;
        const auto& f = fast[i];
        for (std::size_t j = 0; j < f.mu.size(); ++j) {
            const double a = f.mu.flat()[j], b = naive.mu.flat()[j];
            const double c = f.sigma.flat()[j], d = naive.sigma.flat()[j];
            if (!std::isnan(a) || !std::isnan(b)) diff = std::max(diff, std::abs(a - b));
            if (!std::isnan(c) || !std::isnan(d)) diff = std::max(diff, std::abs(c - d));
        }
        diff_all = std::max(diff_all, diff);
        csv.row({num(i), num(naive_s), num(fast_each), num(naive_s / fast_each), num(diff)});
    }
    csv.row({"total", num(naive_total), num(fast_total), num(naive_total / fast_total),
             num(diff_all)});
    csv.close();

    write_manifest(o.out, "bench-inference",
                   {{"checkpoint", o.checkpoint},
                    {"shape", shape_name(domain.shape)},
                    {"resolution", num(o.resolution)},
                    {"batch", num(o.batch)},
                    {"seed", num(std::size_t{o.seed})}});
    return artifact;
}

struct BoOpts : CommonOpts {
    std::string mode;
    std::size_t trials = 10;
    std::size_t iterations = 20;
    double schedule_factor = 0.2;
    std::uint64_t seed = 0;
    std::size_t candidates = 50000;
    bool grid = false;
    std::size_t time_points = 33;
    std::size_t batch = 256;
    std::size_t threads = 0;
};

std::string run_bo_cmd(const BoOpts& o) {
    std::filesystem::create_directories(o.out);
    const std::string artifact = join_path(o.out, "bo_report.csv");
    const std::string quant_path = join_path(o.out, "bo_quantiles.csv");
    guard_outputs({artifact, quant_path, join_path(o.out, "manifest")}, o.force);
    if (o.trials == 0) throw std::invalid_argument("no trials completed");

    BoConfig cfg;
    cfg.mode = parse_bo_mode(o.mode);
    cfg.trials = o.trials;
    cfg.iterations = o.iterations;
    cfg.schedule_factor = o.schedule_factor;
    cfg.seed = o.seed;
    cfg.candidate_count = o.candidates;
    cfg.grid_candidates = o.grid;
    cfg.time_points = o.time_points;
    cfg.batch = o.batch;
    cfg.threads = o.threads;
    const BoReport report = run_bo(cfg);
    write_bo_report(report, artifact);
    write_bo_quantiles(report, quant_path);

    write_manifest(o.out, "bo",
                   {{"mode", bo_mode_name(cfg.mode)},
                    {"trials", num(cfg.trials)},
                    {"iterations", num(cfg.iterations)},
                    {"schedule-factor", num(cfg.schedule_factor)},
                    {"seed", num(std::size_t{cfg.seed})},
                    {"candidates", num(cfg.candidate_count)},
                    {"grid", cfg.grid_candidates ? "1" : "0"},
                    {"time-points", num(cfg.time_points)},
                    {"batch", num(cfg.batch)}});
    return artifact;
}

struct AlOpts : CommonOpts {
    std::string data;
    std::size_t init = 100;
    std::size_t add = 25;
    std::size_t iterations = 8;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    std::size_t initial_steps = 20000;
    std::size_t iter_steps = 2000;
    double lr0 = 2.5e-4;
    std::size_t batch = 512;
    std::string loss = "nll";
    std::size_t threads = 0;
};

std::string run_al_cmd(const AlOpts& o) {
    std::filesystem::create_directories(o.out);
    const std::string artifact = join_path(o.out, "al_report.csv");
    const std::string quant_path = join_path(o.out, "al_quantiles.csv");
    guard_outputs({artifact, quant_path, join_path(o.out, "manifest")}, o.force);
    if (o.trials == 0) throw std::invalid_argument("no trials completed");

    const Dataset pool = read_dataset(o.data);
    ModelConfig arch;
    arch.branch_input = pool.sensor_dim();

    AlConfig cfg;
    cfg.init_count = o.init;
    cfg.add_per_iter = o.add;
    cfg.iterations = o.iterations;
    cfg.trials = o.trials;
    cfg.seed = o.seed;
    cfg.initial_steps = o.initial_steps;
    cfg.iter_steps = o.iter_steps;
    cfg.lr0 = o.lr0;
    cfg.batch = o.batch;
    cfg.loss = parse_loss(o.loss);
    cfg.threads = o.threads;
    const AlReport report = run_al(pool, arch, cfg);
    write_al_report(report, artifact);
    write_al_quantiles(report, quant_path);

    write_manifest(o.out, "al",
                   {{"data", o.data},
                    {"init", num(cfg.init_count)},
                    {"add", num(cfg.add_per_iter)},
                    {"iterations", num(cfg.iterations)},
                    {"trials", num(cfg.trials)},
                    {"seed", num(std::size_t{cfg.seed})},
                    {"initial-steps", num(cfg.initial_steps)},
                    {"iter-steps", num(cfg.iter_steps)},
                    {"lr0", num(cfg.lr0)},
                    {"batch", num(cfg.batch)},
                    {"loss", loss_name(cfg.loss)}});
    return artifact;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"Uncertainty-equipped operator-network pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; command-line flags override");

    std::string artifact;

    auto gen = std::make_shared<GenOpts>();
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a PDE dataset");
    add_common(gen_cmd, *gen);
    gen_cmd->add_option("--family", gen->family, "PDE family")->capture_default_str();
    gen_cmd->add_option("--shape", gen->shape, "domain shape")->capture_default_str();
    gen_cmd->add_option("--resolution", gen->resolution, "grid resolution R")
        ->capture_default_str();
    gen_cmd->add_option("--scales", gen->scales, "comma-separated GP length scales")
        ->required()
        ->delimiter(',');
    gen_cmd->add_option("--n", gen->n, "records per length scale")->required();
    gen_cmd->add_option("--eval-per-record", gen->eval_per_record, "eval points per record")
        ->capture_default_str();
    gen_cmd->add_option("--interior-sensors", gen->interior_sensors, "interior sensor count")
        ->capture_default_str();
    gen_cmd->add_option("--boundary-sensors", gen->boundary_sensors, "boundary sensor count")
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen->seed, "dataset seed")->capture_default_str();
    gen_cmd->add_option("--layout-seed", gen->layout_seed, "sensor layout seed (0 = derive)")
        ->capture_default_str();
    gen_cmd->callback([gen, &artifact] { artifact = run_gen(*gen); });

    auto tr = std::make_shared<TrainOpts>();
    CLI::App* tr_cmd = app.add_subcommand("train", "train the operator network");
    add_common(tr_cmd, *tr);
    tr_cmd->add_option("--data", tr->data, "dataset file")->required();
    tr_cmd->add_option("--steps", tr->steps, "Adam steps")->capture_default_str();
    tr_cmd->add_option("--lr0", tr->lr0, "initial learning rate")->capture_default_str();
    tr_cmd->add_option("--batch", tr->batch, "batch size")->capture_default_str();
    tr_cmd->add_option("--decay", tr->decay, "lr decay factor")->capture_default_str();
    tr_cmd->add_option("--decay-every", tr->decay_every, "steps between lr decays")
        ->capture_default_str();
    tr_cmd->add_option("--loss", tr->loss, "loss kind (nll|mse)")->capture_default_str();
    tr_cmd->add_option("--seed", tr->seed, "shuffling seed")->capture_default_str();
    tr_cmd->add_option("--model-seed", tr->model_seed, "weight init seed")
        ->capture_default_str();
    tr_cmd->add_option("--train-on", tr->train_on, "record split (training|validation|all)")
        ->capture_default_str();
    tr_cmd->callback([tr, &artifact] { artifact = run_train(*tr); });

    auto ev = std::make_shared<EvalOpts>();
    CLI::App* ev_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(ev_cmd, *ev);
    ev_cmd->add_option("--data", ev->data, "dataset file")->required();
    ev_cmd->add_option("--checkpoint", ev->checkpoint, "model checkpoint")->required();
    ev_cmd->add_option("--split", ev->split, "record split")->capture_default_str();
    ev_cmd->callback([ev, &artifact] { artifact = run_eval(*ev); });

    auto in = std::make_shared<InferOpts>();
    CLI::App* in_cmd = app.add_subcommand("infer", "grid inference for one record");
    add_common(in_cmd, *in);
    in_cmd->add_option("--data", in->data, "dataset file")->required();
    in_cmd->add_option("--checkpoint", in->checkpoint, "model checkpoint")->required();
    in_cmd->add_option("--record", in->record, "record index")->capture_default_str();
    in_cmd->callback([in, &artifact] { artifact = run_infer(*in); });

    auto ca = std::make_shared<CalibrateOpts>();
    CLI::App* ca_cmd = app.add_subcommand("calibrate", "uncertainty calibration study");
    add_common(ca_cmd, *ca);
    ca_cmd->add_option("--data", ca->data, "dataset file")->required();
    ca_cmd->add_option("--checkpoint", ca->checkpoint, "model checkpoint")->required();
    ca_cmd->add_option("--split", ca->split, "record split")->capture_default_str();
    ca_cmd->callback([ca, &artifact] { artifact = run_calibrate(*ca); });

    auto be = std::make_shared<BenchOpts>();
    CLI::App* be_cmd =
        app.add_subcommand("bench-inference", "time precomputed-trunk vs naive inference");
    add_common(be_cmd, *be);
    be_cmd->add_option("--checkpoint", be->checkpoint, "model checkpoint")->required();
    be_cmd->add_option("--shape", be->shape, "domain shape")->capture_default_str();
    be_cmd->add_option("--resolution", be->resolution, "grid resolution R")
        ->capture_default_str();
    be_cmd->add_option("--batch", be->batch, "number of synthetic inputs")
        ->capture_default_str();
    be_cmd->add_option("--seed", be->seed, "input seed")->capture_default_str();
    be_cmd->callback([be, &artifact] { artifact = run_bench(*be); });

    auto bo = std::make_shared<BoOpts>();
    CLI::App* bo_cmd =
        app.add_subcommand("bo", "Bayesian-optimization strategy comparison");
    add_common(bo_cmd, *bo);
    bo_cmd->add_option("--mode", bo->mode, "surrogate input mode (param|function)")->required();
    bo_cmd->add_option("--trials", bo->trials, "independent trials")->capture_default_str();
    bo_cmd->add_option("--iterations", bo->iterations, "optimization iterations")
        ->capture_default_str();
    bo_cmd->add_option("--schedule-factor", bo->schedule_factor, "training schedule scale")
        ->capture_default_str();
    bo_cmd->add_option("--seed", bo->seed, "trial seed")->capture_default_str();
    bo_cmd->add_option("--candidates", bo->candidates, "candidate set size")
        ->capture_default_str();
    bo_cmd->add_flag("--grid", bo->grid, "fixed candidate grid instead of fresh draws");
    bo_cmd->add_option("--time-points", bo->time_points, "quadrature grid size")
        ->capture_default_str();
    bo_cmd->add_option("--batch", bo->batch, "surrogate training batch")
        ->capture_default_str();
    bo_cmd->add_option("--threads", bo->threads, "worker threads (0 = auto)")
        ->capture_default_str();
    bo_cmd->callback([bo, &artifact] { artifact = run_bo_cmd(*bo); });

    auto al = std::make_shared<AlOpts>();
    CLI::App* al_cmd = app.add_subcommand("al", "active-learning strategy comparison");
    add_common(al_cmd, *al);
    al_cmd->add_option("--data", al->data, "pool dataset file")->required();
    al_cmd->add_option("--init", al->init, "initial training records")->capture_default_str();
    al_cmd->add_option("--add", al->add, "records added per iteration")
        ->capture_default_str();
    al_cmd->add_option("--iterations", al->iterations, "acquisition iterations")
        ->capture_default_str();
    al_cmd->add_option("--trials", al->trials, "independent trials")->capture_default_str();
    al_cmd->add_option("--seed", al->seed, "trial seed")->capture_default_str();
    al_cmd->add_option("--initial-steps", al->initial_steps, "steps for the first fit")
        ->capture_default_str();
    al_cmd->add_option("--iter-steps", al->iter_steps, "steps per warm-started fit")
        ->capture_default_str();
    al_cmd->add_option("--lr0", al->lr0, "initial learning rate")->capture_default_str();
    al_cmd->add_option("--batch", al->batch, "batch size")->capture_default_str();
    al_cmd->add_option("--loss", al->loss, "loss kind (nll|mse)")->capture_default_str();
    al_cmd->add_option("--threads", al->threads, "worker threads (0 = auto)")
        ->capture_default_str();
    al_cmd->callback([al, &artifact] { artifact = run_al_cmd(*al); });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help() << std::flush;
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "opuq: " << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "opuq: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "opuq: " << e.what() << "\n";
        return 2;
    }

    std::cout << artifact << "\n";
    return 0;
}

}  // namespace opuq
