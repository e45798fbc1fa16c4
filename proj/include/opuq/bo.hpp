#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "opuq/toy.hpp"

namespace opuq {

/// Branch-input flavor for the benchmark-system surrogate: the raw (alpha,
/// beta) pair, or squashed acceleration samples with the known initial
/// velocity added back onto the prediction.
enum class BoMode { ParamToFunction, FunctionToFunction };
enum class BoStrategy { Ucb, Greedy, Random };

BoMode parse_bo_mode(const std::string& name);  // "param" | "function"
std::string bo_mode_name(BoMode mode);
std::string bo_strategy_name(BoStrategy strategy);  // "ucb" | "greedy" | "random"

/// Mode-dependent knobs: initial dataset size (drawn from [-7,-2]x[0,6]),
/// strategy picks per iteration, base count of uniform supplement queries,
/// and the full-length training stages as (steps, lr) pairs.
struct BoModeDefaults {
    std::size_t init_count = 0;
    std::size_t picks_per_iter = 0;
    double random0 = 0.0;
    std::vector<std::pair<std::size_t, double>> stages;
};
BoModeDefaults bo_mode_defaults(BoMode mode);

struct BoConfig {
    BoMode mode = BoMode::ParamToFunction;
    std::size_t trials = 10;
    std::size_t iterations = 20;
    double schedule_factor = 0.2;  // scales every stage's step count
    std::uint64_t seed = 0;
    std::size_t candidate_count = 50000;
    bool grid_candidates = false;  // fixed grid instead of per-iteration draws
    std::size_t time_points = 33;
    std::size_t batch = 256;
    std::size_t threads = 0;  // 0 = OPUQ_THREADS / hardware
};

struct BoIterationStat {
    std::size_t trial = 0;
    std::size_t iteration = 0;
    BoStrategy strategy = BoStrategy::Ucb;
    double value_error = 0.0;     // |max predicted qoi - true optimum value|
    double location_error = 0.0;  // distance from predicted argmax to true argmax
};

struct BoTrialSummary {
    std::size_t trial = 0;
    BoStrategy strategy = BoStrategy::Ucb;
    std::size_t queries = 0;  // system evaluations including the initial data
};

struct BoReport {
    std::vector<BoIterationStat> rows;  // trial-major, strategy, iteration
    std::vector<BoTrialSummary> summaries;
};

/// Runs every strategy on shared per-trial initial data: per iteration the
/// surrogate is retrained from scratch, scored on a fresh candidate set, the
/// predicted-argmax errors are recorded, and the strategy's picks plus the
/// decaying uniform supplement are queried and appended.
BoReport run_bo(const BoConfig& cfg);

/// trial,iteration,strategy,value_error,location_error
void write_bo_report(const BoReport& report, const std::string& path);
/// One row per iteration: q20/q50/q80 of both error metrics per strategy.
void write_bo_quantiles(const BoReport& report, const std::string& path);

/// Linear-interpolation quantile of an unsorted sample; q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace opuq
