#include "opuq/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "opuq/adam.hpp"
#include "opuq/csvio.hpp"
#include "opuq/rng.hpp"
#include "opuq/tape.hpp"

namespace opuq {

namespace {

std::vector<double> branch_input(const DataRecord& rec, double f_rescale) {
    std::vector<double> in;
    in.reserve(rec.f_sensors.size() + rec.g_sensors.size());
    for (double v : rec.f_sensors) in.push_back(v * f_rescale);
    in.insert(in.end(), rec.g_sensors.begin(), rec.g_sensors.end());
    return in;
}

void check_dims(const OperatorModel& model, const Dataset& ds) {
    if (ds.sensor_dim() != model.config().branch_input)
        throw std::invalid_argument("train: model expects " +
                                    std::to_string(model.config().branch_input) +
                                    " branch inputs, dataset provides " +
                                    std::to_string(ds.sensor_dim()));
    if (model.config().trunk_input != 2)
        throw std::invalid_argument("train: grid datasets require a 2-d trunk input");
}

struct RecordAccum {
    double se = 0.0, ae = 0.0;
    double abs_err = 0.0, abs_tgt = 0.0;
    double sq_err = 0.0, sq_tgt = 0.0;
    std::size_t n = 0;
};

struct ClassAccum {
    double se = 0.0, ae = 0.0;
    double l1_sum = 0.0, l2_sum = 0.0;
    std::size_t points = 0, records = 0, rel_records = 0;

    void add(const RecordAccum& r) {
        se += r.se;
        ae += r.ae;
        points += r.n;
        records += 1;
        if (r.abs_tgt > 0.0) {
            l1_sum += r.abs_err / r.abs_tgt;
            l2_sum += std::sqrt(r.sq_err) / std::sqrt(r.sq_tgt);
            rel_records += 1;
        }
    }

    ScaleMetrics finish() const {
        ScaleMetrics m;
        m.mse = points ? se / static_cast<double>(points) : 0.0;
        m.mae = points ? ae / static_cast<double>(points) : 0.0;
        m.l1_rel = rel_records ? l1_sum / static_cast<double>(rel_records) : 0.0;
        m.l2_rel = rel_records ? l2_sum / static_cast<double>(rel_records) : 0.0;
        m.records = records;
        m.points = points;
        return m;
    }
};

}  // namespace

NodeId loss_graph(Tape& tape, LossKind kind, NodeId mu, NodeId log_sigma, NodeId target) {
    const NodeId r = tape.sub(mu, target);
    if (kind == LossKind::Mse) return tape.mean_all(tape.square(r));
    const NodeId inv_var = tape.exp(tape.scale(log_sigma, -2.0));
    const NodeId quad = tape.scale(tape.mul(tape.square(r), inv_var), 0.5);
    return tape.mean_all(
        tape.shift(tape.add(quad, log_sigma), 0.5 * std::log(2.0 * std::acos(-1.0))));
}

LossKind parse_loss(const std::string& name) {
    if (name == "nll") return LossKind::Nll;
    if (name == "mse") return LossKind::Mse;
    throw std::invalid_argument("unknown loss '" + name + "' (expected nll or mse)");
}

std::string loss_name(LossKind kind) { return kind == LossKind::Nll ? "nll" : "mse"; }

double lr_at(const TrainConfig& cfg, std::size_t step) {
    return cfg.lr0 * std::pow(cfg.decay, static_cast<double>(step / cfg.decay_every));
}

TrainResult train(OperatorModel& model, const Dataset& ds, const TrainConfig& cfg) {
    check_dims(model, ds);
    if (ds.records.empty()) throw std::invalid_argument("train: dataset is empty");
    if (cfg.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
    if (!(cfg.decay > 0.0 && cfg.decay <= 1.0))
        throw std::invalid_argument("train: decay must lie in (0, 1]");
    if (cfg.decay_every < 1) throw std::invalid_argument("train: decay_every must be >= 1");

    std::vector<std::size_t> recs = cfg.record_indices;
    if (recs.empty()) {
        recs.resize(ds.records.size());
        for (std::size_t i = 0; i < recs.size(); ++i) recs[i] = i;
    }
    for (std::size_t r : recs)
        if (r >= ds.records.size())
            throw std::invalid_argument("train: record index " + std::to_string(r) +
                                        " out of range");

    std::vector<std::vector<double>> inputs(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i)
        inputs[i] = branch_input(ds.records[recs[i]], 1.0);

    struct Pair {
        std::uint32_t rec;
        std::uint32_t pt;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const std::size_t n = ds.records[recs[i]].targets.size();
        for (std::size_t e = 0; e < n; ++e)
            pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(e)});
    }
    if (pairs.empty()) throw std::invalid_argument("train: no eval points to train on");

    Adam opt;
    auto params = model.parameters();
    for (auto& p : params) opt.add_param(p.name, p.value);

    TrainResult result;
    if (cfg.steps == 0) return result;

    if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);
    const std::size_t ckpt_every = std::max<std::size_t>(1, cfg.steps / 10);

    Rng rng(cfg.seed);
    rng.shuffle(pairs);
    std::size_t cursor = 0;

    const std::size_t sdim = ds.sensor_dim();
    DenseMatrix branch_rows(cfg.batch, sdim);
    DenseMatrix trunk_rows(cfg.batch, 2);
    DenseMatrix targets(cfg.batch, 1);

    Tape tape;
    std::vector<const DenseMatrix*> grads(params.size(), nullptr);

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        for (std::size_t b = 0; b < cfg.batch; ++b) {
            if (cursor == pairs.size()) {
                rng.shuffle(pairs);
                cursor = 0;
            }
            const Pair p = pairs[cursor++];
            const DataRecord& rec = ds.records[recs[p.rec]];
            std::copy(inputs[p.rec].begin(), inputs[p.rec].end(), branch_rows.row(b));
            trunk_rows(b, 0) = rec.eval_xy[2 * p.pt];
            trunk_rows(b, 1) = rec.eval_xy[2 * p.pt + 1];
            targets(b, 0) = rec.targets[p.pt];
        }

        tape.reset();
        const auto traced = model.trace(tape, branch_rows, trunk_rows);
        const NodeId tgt = tape.input(targets, false);
        const NodeId loss = loss_graph(tape, cfg.loss, traced.mu, traced.log_sigma, tgt);
        const double loss_val = tape.value(loss)(0, 0);
        if (!std::isfinite(loss_val))
            throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));

        tape.backward(loss);
        for (std::size_t i = 0; i < params.size(); ++i)
            grads[i] = tape.adjoint_set(traced.params[i]) ? &tape.adjoint(traced.params[i])
                                                          : nullptr;
        const double lr = lr_at(cfg, step);
        opt.step(lr, grads);

        if (step % cfg.trace_every == 0 || step + 1 == cfg.steps)
            result.trace.push_back({step, loss_val, lr});
        result.final_loss = loss_val;
        result.steps_run = step + 1;

        if (!cfg.checkpoint_dir.empty() &&
            ((step + 1) % ckpt_every == 0 || step + 1 == cfg.steps)) {
            char name[32];
            std::snprintf(name, sizeof(name), "ckpt_%08zu.bin", step + 1);
            const std::map<std::string, std::string> meta{
                {"step", std::to_string(step + 1)},
                {"steps", std::to_string(cfg.steps)},
                {"loss", CsvWriter::num(loss_val)},
                {"lr", CsvWriter::num(lr)},
                {"loss_kind", loss_name(cfg.loss)},
                {"seed", std::to_string(cfg.seed)},
                {"f_scale", CsvWriter::num(ds.f_scale)},
            };
            save_checkpoint(model, meta, cfg.checkpoint_dir + "/" + name);
        }
    }

    if (!cfg.trace_path.empty()) write_trace(result.trace, cfg.trace_path);
    return result;
}

RecordPrediction predict_record(const OperatorModel& model, const Dataset& ds, std::size_t record,
                                double f_rescale) {
    check_dims(model, ds);
    if (record >= ds.records.size())
        throw std::invalid_argument("predict: record index out of range");
    const DataRecord& rec = ds.records[record];
    const std::size_t n = rec.targets.size();

    auto ws = model.make_workspace();
    std::vector<double> b_mu, b_sigma;
    model.branch_eval(branch_input(rec, f_rescale), b_mu, b_sigma, ws);

    DenseMatrix xs(n, 2);
    std::copy(rec.eval_xy.begin(), rec.eval_xy.end(), xs.flat().begin());
    DenseMatrix t_mu, t_sigma;
    model.trunk_eval_batch(xs, t_mu, t_sigma);

    RecordPrediction out;
    out.mu.resize(n);
    out.sigma.resize(n);
    gemv(Trans::No, 1.0, t_mu, b_mu, 0.0, out.mu);
    gemv(Trans::No, 1.0, t_sigma, b_sigma, 0.0, out.sigma);
    const auto& cfg = model.config();
    for (double& s : out.sigma) s = std::exp(std::clamp(s, cfg.clip_lo, cfg.clip_hi));
    return out;
}

EvalReport evaluate(const OperatorModel& model, const Dataset& ds,
                    const std::vector<std::size_t>& records, double f_rescale) {
    check_dims(model, ds);
    std::map<double, ClassAccum> by_scale;
    ClassAccum pooled;

    for (std::size_t ri : records) {
        if (ri >= ds.records.size())
            throw std::invalid_argument("evaluate: record index out of range");
        const DataRecord& rec = ds.records[ri];
        const auto pred = predict_record(model, ds, ri, f_rescale);

        RecordAccum acc;
        for (std::size_t e = 0; e < rec.targets.size(); ++e) {
            const double err = pred.mu[e] - rec.targets[e];
            acc.se += err * err;
            acc.ae += std::abs(err);
            acc.abs_err += std::abs(err);
            acc.abs_tgt += std::abs(rec.targets[e]);
            acc.sq_err += err * err;
            acc.sq_tgt += rec.targets[e] * rec.targets[e];
            acc.n += 1;
        }
        by_scale[rec.length_scale].add(acc);
        pooled.add(acc);
    }

    EvalReport report;
    for (const auto& [scale, acc] : by_scale) report.per_scale.push_back({scale, acc.finish()});
    report.pooled = pooled.finish();
    return report;
}

EvalReport evaluate(const OperatorModel& model, const Dataset& ds, double f_rescale) {
    std::vector<std::size_t> all(ds.records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return evaluate(model, ds, all, f_rescale);
}

void write_metrics(const EvalReport& report, const std::string& path) {
    CsvWriter csv(path, {"scale", "mse", "mae", "l1_rel", "l2_rel"});
    const auto emit = [&csv](const std::string& label, const ScaleMetrics& m) {
        csv.row({label, CsvWriter::num(m.mse), CsvWriter::num(m.mae), CsvWriter::num(m.l1_rel),
                 CsvWriter::num(m.l2_rel)});
    };
    for (const auto& [scale, metrics] : report.per_scale) emit(CsvWriter::num(scale), metrics);
    emit("pooled", report.pooled);
    csv.close();
}

void write_trace(const std::vector<TracePoint>& trace, const std::string& path) {
    CsvWriter csv(path, {"step", "loss", "lr"});
    for (const auto& t : trace)
        csv.row({CsvWriter::num(t.step), CsvWriter::num(t.loss), CsvWriter::num(t.lr)});
    csv.close();
}

}  // namespace opuq
