#include "opuq/al.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "opuq/bo.hpp"
#include "opuq/csvio.hpp"
#include "opuq/rng.hpp"
#include "opuq/threads.hpp"

namespace opuq {

namespace {

constexpr AlStrategy kAlStrategies[] = {AlStrategy::MaxSigma, AlStrategy::Random};

std::uint64_t al_seed(std::uint64_t root, std::uint64_t trial, std::uint64_t salt) {
    std::uint64_t state = root ^ (trial * 0x9e3779b97f4a7c15ull) ^ (salt << 32);
    splitmix64(state);
    return splitmix64(state);
}

double mean_sigma(const RecordPrediction& pred) {
    double acc = 0.0;
    for (double s : pred.sigma) acc += s;
    return pred.sigma.empty() ? 0.0 : acc / static_cast<double>(pred.sigma.size());
}

struct TrialOutput {
    std::vector<AlIterationStat> rows;
};

TrialOutput run_trial(const Dataset& pool, const ModelConfig& arch, const AlConfig& cfg,
                      std::size_t trial) {
    TrialOutput out;

    std::vector<std::size_t> order(pool.records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = Rng(cfg.seed).split(trial * 8 + 1);
    shuffle_rng.shuffle(order);
    const std::vector<std::size_t> init_set(order.begin(),
                                            order.begin() + static_cast<long>(cfg.init_count));

    for (std::size_t si = 0; si < 2; ++si) {
        const AlStrategy strategy = kAlStrategies[si];
        std::vector<std::size_t> train_set = init_set;
        std::vector<char> owned(pool.records.size(), 0);
        for (std::size_t r : train_set) owned[r] = 1;

        OperatorModel model(arch, al_seed(cfg.seed, trial, 1));
        Rng pick_rng = Rng(cfg.seed).split(trial * 8 + 3 + si);

        TrainConfig tc;
        tc.lr0 = cfg.lr0;
        tc.batch = cfg.batch;
        tc.loss = cfg.loss;
        tc.steps = cfg.initial_steps;
        tc.seed = al_seed(cfg.seed, trial, 100 + si);
        tc.record_indices = train_set;
        train(model, pool, tc);
        out.rows.push_back(
            {trial, 0, strategy, train_set.size(), evaluate(model, pool).pooled.l2_rel});

        for (std::size_t iter = 1; iter <= cfg.iterations; ++iter) {
            std::vector<std::size_t> remaining;
            remaining.reserve(pool.records.size() - train_set.size());
            for (std::size_t r = 0; r < pool.records.size(); ++r)
                if (!owned[r]) remaining.push_back(r);

            std::vector<std::size_t> picks;
            if (strategy == AlStrategy::MaxSigma) {
                std::vector<double> scores(remaining.size());
                for (std::size_t i = 0; i < remaining.size(); ++i)
                    scores[i] = mean_sigma(predict_record(model, pool, remaining[i]));
                picks = top_k_indices(scores, remaining, cfg.add_per_iter);
            } else {
                const auto draws =
                    pick_rng.sample_without_replacement(remaining.size(), cfg.add_per_iter);
                for (std::size_t d : draws) picks.push_back(remaining[d]);
            }
            for (std::size_t r : picks) {
                train_set.push_back(r);
                owned[r] = 1;
            }

            tc.steps = cfg.iter_steps;
            tc.seed = al_seed(cfg.seed, trial, 1000 + si * 100 + iter);
            tc.record_indices = train_set;
            train(model, pool, tc);
            out.rows.push_back(
                {trial, iter, strategy, train_set.size(), evaluate(model, pool).pooled.l2_rel});
        }
    }
    return out;
}

}  // namespace

std::string al_strategy_name(AlStrategy strategy) {
    return strategy == AlStrategy::MaxSigma ? "max-sigma" : "random";
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores,
                                       std::span<const std::size_t> pool, std::size_t k) {
    if (scores.size() != pool.size())
        throw std::invalid_argument("top_k: scores do not align with the pool");
    if (k > pool.size()) throw std::invalid_argument("top_k: k exceeds the pool");
    std::vector<std::size_t> position(pool.size());
    std::iota(position.begin(), position.end(), 0);
    std::sort(position.begin(), position.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    std::vector<std::size_t> picks(k);
    for (std::size_t i = 0; i < k; ++i) picks[i] = pool[position[i]];
    return picks;
}

AlReport run_al(const Dataset& pool, const ModelConfig& arch, const AlConfig& cfg) {
    if (cfg.init_count == 0) throw std::invalid_argument("al: init count must be >= 1");
    if (pool.records.size() < cfg.init_count + cfg.iterations * cfg.add_per_iter)
        throw std::invalid_argument("al: pool exhausted before the final iteration");

    std::vector<TrialOutput> per_trial(cfg.trials);
    const std::size_t workers = worker_count(cfg.threads, cfg.trials);
    parallel_for_jobs(workers, cfg.trials, [&](std::size_t trial) {
        per_trial[trial] = run_trial(pool, arch, cfg, trial);
    });

    AlReport report;
    for (auto& t : per_trial)
        report.rows.insert(report.rows.end(), t.rows.begin(), t.rows.end());
    return report;
}

void write_al_report(const AlReport& report, const std::string& path) {
    CsvWriter csv(path, {"trial", "iteration", "strategy", "train_size", "l2_rel"});
    for (const auto& r : report.rows)
        csv.row({CsvWriter::num(r.trial), CsvWriter::num(r.iteration),
                 al_strategy_name(r.strategy), CsvWriter::num(r.train_size),
                 CsvWriter::num(r.pool_l2_rel)});
    csv.close();
}

void write_al_quantiles(const AlReport& report, const std::string& path) {
    std::size_t iterations = 0;
    for (const auto& r : report.rows) iterations = std::max(iterations, r.iteration + 1);

    std::vector<std::string> header{"iteration"};
    for (AlStrategy s : kAlStrategies)
        for (const char* q : {"q20", "q50", "q80"}) {
            std::string name = al_strategy_name(s);
            std::replace(name.begin(), name.end(), '-', '_');
            header.push_back(name + "_" + q);
        }

    CsvWriter csv(path, header);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<std::string> cells{CsvWriter::num(it)};
        for (AlStrategy s : kAlStrategies) {
            std::vector<double> sample;
            for (const auto& r : report.rows)
                if (r.iteration == it && r.strategy == s) sample.push_back(r.pool_l2_rel);
            for (double q : {0.2, 0.5, 0.8}) cells.push_back(CsvWriter::num(quantile(sample, q)));
        }
        csv.row(cells);
    }
    csv.close();
}

}  // namespace opuq
