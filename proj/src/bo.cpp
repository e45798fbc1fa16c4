#include "opuq/bo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "opuq/acquire.hpp"
#include "opuq/adam.hpp"
#include "opuq/csvio.hpp"
#include "opuq/dense.hpp"
#include "opuq/model.hpp"
#include "opuq/rng.hpp"
#include "opuq/tape.hpp"
#include "opuq/threads.hpp"
#include "opuq/train.hpp"

namespace opuq {

namespace {

constexpr BoStrategy kStrategies[] = {BoStrategy::Ucb, BoStrategy::Greedy, BoStrategy::Random};

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t state = root;
    splitmix64(state);
    state ^= a + 0x9e3779b97f4a7c15ull;
    splitmix64(state);
    state ^= b + 0x9e3779b97f4a7c15ull;
    splitmix64(state);
    state ^= c + 0x9e3779b97f4a7c15ull;
    return splitmix64(state);
}

std::vector<double> time_grid(std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    return t;
}

/// One system interrogation in network form: branch inputs plus velocity
/// targets on the shared time grid (initial velocity subtracted in function
/// mode, where the model predicts the residual).
struct QueryRecord {
    std::vector<double> input;
    std::vector<double> target;
};

QueryRecord make_record(BoMode mode, const ToySystem& theta, std::span<const double> times) {
    QueryRecord rec;
    rec.target.resize(times.size());
    if (mode == BoMode::ParamToFunction) {
        rec.input = {theta.alpha, theta.beta};
        for (std::size_t i = 0; i < times.size(); ++i)
            rec.target[i] = toy_velocity(theta, times[i]);
    } else {
        rec.input.resize(times.size());
        const double u0 = toy_initial_velocity(theta);
        for (std::size_t i = 0; i < times.size(); ++i) {
            rec.input[i] = transform_acceleration(toy_acceleration(theta, times[i]));
            rec.target[i] = toy_velocity(theta, times[i]) - u0;
        }
    }
    return rec;
}

ModelConfig bo_arch(BoMode mode, std::size_t time_points) {
    ModelConfig mc;
    mc.trunk_input = 1;
    if (mode == BoMode::ParamToFunction) {
        mc.branch_input = 2;
        mc.branch = {{40, 40}, {40}};
        mc.trunk = {{40, 40}, {40}};
    } else {
        mc.branch_input = time_points;
        mc.branch = {{40, 40, 40, 40}, {50}};
        mc.trunk = {{40, 40, 40, 40}, {50}};
    }
    return mc;
}

void fit_surrogate(OperatorModel& model, const std::vector<QueryRecord>& records,
                   std::span<const double> times,
                   const std::vector<std::pair<std::size_t, double>>& stages, std::size_t batch,
                   LossKind loss, std::uint64_t seed) {
    struct Pair {
        std::uint32_t rec;
        std::uint32_t pt;
    };
    std::vector<Pair> pairs;
    pairs.reserve(records.size() * times.size());
    for (std::size_t r = 0; r < records.size(); ++r)
        for (std::size_t t = 0; t < times.size(); ++t)
            pairs.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(t)});
    if (pairs.empty()) throw std::invalid_argument("bo: no data to fit");

    Adam opt;
    auto params = model.parameters();
    for (auto& p : params) opt.add_param(p.name, p.value);
    std::vector<const DenseMatrix*> grads(params.size(), nullptr);

    Rng rng(seed);
    rng.shuffle(pairs);
    std::size_t cursor = 0;

    const std::size_t dim = model.config().branch_input;
    DenseMatrix branch_rows(batch, dim);
    DenseMatrix trunk_rows(batch, 1);
    DenseMatrix targets(batch, 1);
    Tape tape;

    std::size_t step = 0;
    for (const auto& [stage_steps, lr] : stages) {
        for (std::size_t s = 0; s < stage_steps; ++s, ++step) {
            for (std::size_t b = 0; b < batch; ++b) {
                if (cursor == pairs.size()) {
                    rng.shuffle(pairs);
                    cursor = 0;
                }
                const Pair p = pairs[cursor++];
                const QueryRecord& rec = records[p.rec];
                std::copy(rec.input.begin(), rec.input.end(), branch_rows.row(b));
                trunk_rows(b, 0) = times[p.pt];
                targets(b, 0) = rec.target[p.pt];
            }
            tape.reset();
            const auto traced = model.trace(tape, branch_rows, trunk_rows);
            const NodeId tgt = tape.input(targets, false);
            const NodeId loss_id = loss_graph(tape, loss, traced.mu, traced.log_sigma, tgt);
            const double loss_val = tape.value(loss_id)(0, 0);
            if (!std::isfinite(loss_val))
                throw std::runtime_error("bo: non-finite loss at step " + std::to_string(step));
            tape.backward(loss_id);
            for (std::size_t i = 0; i < params.size(); ++i)
                grads[i] = tape.adjoint_set(traced.params[i]) ? &tape.adjoint(traced.params[i])
                                                              : nullptr;
            opt.step(lr, grads);
        }
    }
}

struct CandidateScores {
    std::vector<double> qhat;
    std::vector<double> sigma;
};

CandidateScores score_candidates(const OperatorModel& model, BoMode mode, const DenseMatrix& cand,
                                 std::span<const double> times) {
    const std::size_t count = cand.rows();
    const std::size_t t_count = times.size();

    DenseMatrix txs(t_count, 1);
    for (std::size_t i = 0; i < t_count; ++i) txs(i, 0) = times[i];
    DenseMatrix t_mu, t_sigma;
    model.trunk_eval_batch(txs, t_mu, t_sigma);

    std::vector<double> w(t_count);
    const double intervals = static_cast<double>(t_count - 1);
    for (std::size_t i = 0; i < t_count; ++i)
        w[i] = (i == 0 || i + 1 == t_count) ? 0.5 / intervals : 1.0 / intervals;

    const std::size_t dim = model.config().branch_input;
    DenseMatrix bin(count, dim);
    std::vector<double> shift(count, 0.0);
    for (std::size_t p = 0; p < count; ++p) {
        const ToySystem theta{cand(p, 0), cand(p, 1)};
        if (mode == BoMode::ParamToFunction) {
            bin(p, 0) = theta.alpha;
            bin(p, 1) = theta.beta;
        } else {
            double* row = bin.row(p);
            for (std::size_t i = 0; i < t_count; ++i)
                row[i] = transform_acceleration(toy_acceleration(theta, times[i]));
            shift[p] = toy_initial_velocity(theta);
        }
    }

    DenseMatrix b_mu, b_sigma;
    model.branch_eval_batch(bin, b_mu, b_sigma);

    CandidateScores out;
    out.qhat.assign(count, 0.0);
    std::vector<double> m(t_mu.cols());
    gemv(Trans::Yes, 1.0, t_mu, w, 0.0, m);
    gemv(Trans::No, 1.0, b_mu, m, 0.0, out.qhat);
    for (std::size_t p = 0; p < count; ++p) out.qhat[p] += shift[p];

    DenseMatrix s(count, t_count);
    gemm(Trans::No, Trans::Yes, 1.0, b_sigma, t_sigma, 0.0, s);
    const double lo = model.config().clip_lo;
    const double hi = model.config().clip_hi;
    out.sigma.assign(count, 0.0);
    for (std::size_t p = 0; p < count; ++p) {
        const double* row = s.row(p);
        double acc = 0.0;
        for (std::size_t i = 0; i < t_count; ++i)
            acc += w[i] * std::exp(std::clamp(row[i], lo, hi));
        out.sigma[p] = acc;
    }
    return out;
}

DenseMatrix draw_candidates(const BoConfig& cfg, Rng& rng) {
    if (cfg.grid_candidates) {
        const double aspect = (kToyAlphaMax - kToyAlphaMin) / (kToyBetaMax - kToyBetaMin);
        const std::size_t na = std::max<std::size_t>(
            2, static_cast<std::size_t>(
                   std::llround(std::sqrt(static_cast<double>(cfg.candidate_count) * aspect))));
        const std::size_t nb = std::max<std::size_t>(2, (cfg.candidate_count + na - 1) / na);
        DenseMatrix cand(na * nb, 2);
        std::size_t row = 0;
        for (std::size_t i = 0; i < na; ++i)
            for (std::size_t j = 0; j < nb; ++j, ++row) {
                cand(row, 0) = kToyAlphaMin + (kToyAlphaMax - kToyAlphaMin) *
                                                  static_cast<double>(i) /
                                                  static_cast<double>(na - 1);
                cand(row, 1) = kToyBetaMin + (kToyBetaMax - kToyBetaMin) *
                                                 static_cast<double>(j) /
                                                 static_cast<double>(nb - 1);
            }
        return cand;
    }
    DenseMatrix cand(cfg.candidate_count, 2);
    for (std::size_t p = 0; p < cfg.candidate_count; ++p) {
        cand(p, 0) = rng.uniform(kToyAlphaMin, kToyAlphaMax);
        cand(p, 1) = rng.uniform(kToyBetaMin, kToyBetaMax);
    }
    return cand;
}

struct TrialOutput {
    std::vector<BoIterationStat> rows;
    std::vector<BoTrialSummary> summaries;
};

TrialOutput run_trial(const BoConfig& cfg, const BoModeDefaults& md,
                      const std::vector<std::pair<std::size_t, double>>& stages,
                      const ModelConfig& arch, std::span<const double> times,
                      const ToyOptimum& truth, std::size_t trial) {
    TrialOutput out;

    Rng init_rng = Rng(cfg.seed).split(trial * 16 + 1);
    std::vector<QueryRecord> base;
    base.reserve(md.init_count);
    for (std::size_t i = 0; i < md.init_count; ++i) {
        const ToySystem theta{init_rng.uniform(kToyAlphaMin, -2.0),
                              init_rng.uniform(kToyBetaMin, kToyBetaMax)};
        base.push_back(make_record(cfg.mode, theta, times));
    }

    const AcquisitionSchedule sched{2.0, 1.0, 0.9, md.random0};
    const std::size_t k = md.picks_per_iter;

    for (std::size_t si = 0; si < 3; ++si) {
        const BoStrategy strategy = kStrategies[si];
        std::vector<QueryRecord> records = base;
        Rng srng = Rng(cfg.seed).split(trial * 16 + 2 + si);
        std::size_t queries = md.init_count;

        for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
            OperatorModel model(arch, mix_seed(cfg.seed, trial, si, iter));
            const LossKind loss = strategy == BoStrategy::Greedy ? LossKind::Mse : LossKind::Nll;
            fit_surrogate(model, records, times, stages, cfg.batch, loss,
                          mix_seed(cfg.seed, trial, si, 1000 + iter));

            const DenseMatrix cand = draw_candidates(cfg, srng);
            const CandidateScores scores = score_candidates(model, cfg.mode, cand, times);

            std::size_t best = 0;
            for (std::size_t p = 1; p < scores.qhat.size(); ++p)
                if (scores.qhat[p] > scores.qhat[best]) best = p;
            const double da = cand(best, 0) - truth.arg.alpha;
            const double db = cand(best, 1) - truth.arg.beta;
            out.rows.push_back({trial, iter, strategy,
                                std::abs(scores.qhat[best] - truth.value),
                                std::sqrt(da * da + db * db)});

            std::vector<std::size_t> picks;
            switch (strategy) {
                case BoStrategy::Ucb:
                    picks = acquire_batch(cand, scores.qhat, scores.sigma, sched.explore(iter),
                                          sched.spacing(iter), k);
                    break;
                case BoStrategy::Greedy:
                    picks = acquire_batch(cand, scores.qhat, scores.sigma, 0.0, 0.0, k);
                    break;
                case BoStrategy::Random:
                    for (std::size_t i = 0; i < k; ++i)
                        picks.push_back(srng.uniform_index(cand.rows()));
                    break;
            }
            const std::size_t extra = sched.random_count(iter);
            for (std::size_t i = 0; i < extra; ++i)
                picks.push_back(srng.uniform_index(cand.rows()));

            for (std::size_t idx : picks) {
                const ToySystem theta{cand(idx, 0), cand(idx, 1)};
                records.push_back(make_record(cfg.mode, theta, times));
            }
            queries += picks.size();
        }
        out.summaries.push_back({trial, strategy, queries});
    }
    return out;
}

}  // namespace

BoMode parse_bo_mode(const std::string& name) {
    if (name == "param") return BoMode::ParamToFunction;
    if (name == "function") return BoMode::FunctionToFunction;
    throw std::invalid_argument("bo: unknown mode '" + name + "' (expected param|function)");
}

std::string bo_mode_name(BoMode mode) {
    return mode == BoMode::ParamToFunction ? "param" : "function";
}

std::string bo_strategy_name(BoStrategy strategy) {
    switch (strategy) {
        case BoStrategy::Ucb: return "ucb";
        case BoStrategy::Greedy: return "greedy";
        case BoStrategy::Random: return "random";
    }
    return "?";
}

BoModeDefaults bo_mode_defaults(BoMode mode) {
    BoModeDefaults md;
    if (mode == BoMode::ParamToFunction) {
        md.init_count = 50;
        md.picks_per_iter = 10;
        md.random0 = 5.0;
        md.stages = {{15000, 1e-4}, {15000, 5e-5}, {15000, 1e-5}};
    } else {
        md.init_count = 10;
        md.picks_per_iter = 5;
        md.random0 = 4.0;
        md.stages = {{5000, 1e-4}, {5000, 5e-5}, {5000, 1e-5}};
    }
    return md;
}

BoReport run_bo(const BoConfig& cfg) {
    if (cfg.iterations == 0) throw std::invalid_argument("bo: iterations must be >= 1");
    if (cfg.time_points < 2) throw std::invalid_argument("bo: need at least 2 time points");
    if (cfg.batch == 0) throw std::invalid_argument("bo: batch must be >= 1");
    if (!(cfg.schedule_factor > 0.0))
        throw std::invalid_argument("bo: schedule factor must be positive");
    const BoModeDefaults md = bo_mode_defaults(cfg.mode);
    if (cfg.candidate_count < md.picks_per_iter)
        throw std::invalid_argument("bo: candidate set smaller than the per-iteration batch");

    std::vector<std::pair<std::size_t, double>> stages = md.stages;
    for (auto& [steps, lr] : stages)
        steps = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::llround(static_cast<double>(steps) * cfg.schedule_factor)));

    const ModelConfig arch = bo_arch(cfg.mode, cfg.time_points);
    const std::vector<double> times = time_grid(cfg.time_points);
    const ToyOptimum& truth = toy_optimum();

    std::vector<TrialOutput> per_trial(cfg.trials);
    const std::size_t workers = worker_count(cfg.threads, cfg.trials);
    parallel_for_jobs(workers, cfg.trials, [&](std::size_t trial) {
        per_trial[trial] = run_trial(cfg, md, stages, arch, times, truth, trial);
    });

    BoReport report;
    for (auto& t : per_trial) {
        report.rows.insert(report.rows.end(), t.rows.begin(), t.rows.end());
        report.summaries.insert(report.summaries.end(), t.summaries.begin(), t.summaries.end());
    }
    return report;
}

void write_bo_report(const BoReport& report, const std::string& path) {
    CsvWriter csv(path, {"trial", "iteration", "strategy", "value_error", "location_error"});
    for (const auto& r : report.rows)
        csv.row({CsvWriter::num(r.trial), CsvWriter::num(r.iteration),
                 bo_strategy_name(r.strategy), CsvWriter::num(r.value_error),
                 CsvWriter::num(r.location_error)});
    csv.close();
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

void write_bo_quantiles(const BoReport& report, const std::string& path) {
    std::size_t iterations = 0;
    for (const auto& r : report.rows) iterations = std::max(iterations, r.iteration + 1);

    std::vector<std::string> header{"iteration"};
    for (const char* metric : {"value", "location"})
        for (BoStrategy s : kStrategies)
            for (const char* q : {"q20", "q50", "q80"})
                header.push_back(bo_strategy_name(s) + "_" + metric + "_" + q);

    CsvWriter csv(path, header);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<std::string> cells{CsvWriter::num(it)};
        for (const bool location : {false, true})
            for (BoStrategy s : kStrategies) {
                std::vector<double> sample;
                for (const auto& r : report.rows)
                    if (r.iteration == it && r.strategy == s)
                        sample.push_back(location ? r.location_error : r.value_error);
                for (double q : {0.2, 0.5, 0.8})
                    cells.push_back(CsvWriter::num(quantile(sample, q)));
            }
        csv.row(cells);
    }
    csv.close();
}

}  // namespace opuq
