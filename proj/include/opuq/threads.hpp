#pragma once

#include <cstddef>
#include <functional>

namespace opuq {

/// Worker count for a pool of independent jobs: `requested` wins when
/// nonzero, else the OPUQ_THREADS env var, else the hardware count; always
/// clamped to [1, jobs].
std::size_t worker_count(std::size_t requested, std::size_t jobs);

/// Runs job(i) for i in [0, jobs) on `workers` threads (inline when 1).
/// Jobs must be independent; the first exception is rethrown after join.
void parallel_for_jobs(std::size_t workers, std::size_t jobs,
                       const std::function<void(std::size_t)>& job);

}  // namespace opuq
