#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "opuq/dataset.hpp"
#include "opuq/model.hpp"
#include "opuq/train.hpp"

namespace opuq {

enum class AlStrategy { MaxSigma, Random };
std::string al_strategy_name(AlStrategy strategy);  // "max-sigma" | "random"

struct AlConfig {
    std::size_t init_count = 100;
    std::size_t add_per_iter = 25;
    std::size_t iterations = 8;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    std::size_t initial_steps = 20000;  // first fit, from fresh weights
    std::size_t iter_steps = 2000;      // warm-started fit per iteration
    double lr0 = 2.5e-4;
    std::size_t batch = 512;
    LossKind loss = LossKind::Nll;
    std::size_t threads = 0;  // 0 = OPUQ_THREADS / hardware
};

struct AlIterationStat {
    std::size_t trial = 0;
    std::size_t iteration = 0;  // 0 = after the initial fit, before any additions
    AlStrategy strategy = AlStrategy::MaxSigma;
    std::size_t train_size = 0;
    double pool_l2_rel = 0.0;  // over the full pool
};

struct AlReport {
    std::vector<AlIterationStat> rows;  // trial-major, strategy, iteration
};

/// k entries of `pool` with the highest scores (scores aligned with pool),
/// best first, ties to the lower pool position.
std::vector<std::size_t> top_k_indices(std::span<const double> scores,
                                       std::span<const std::size_t> pool, std::size_t k);

/// Grows a per-trial training subset of `pool` by add_per_iter records per
/// iteration, either by highest per-record mean predicted sigma or uniformly
/// at random. Each iteration retrains warm-started from the previous weights
/// with a fresh optimizer, then records the full-pool relative l2 error.
/// Both strategies share each trial's initial subset and initial weights.
AlReport run_al(const Dataset& pool, const ModelConfig& arch, const AlConfig& cfg);

/// trial,iteration,strategy,train_size,l2_rel
void write_al_report(const AlReport& report, const std::string& path);
/// One row per iteration: q20/q50/q80 of the pool error per strategy.
void write_al_quantiles(const AlReport& report, const std::string& path);

}  // namespace opuq
