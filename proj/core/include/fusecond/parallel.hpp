#pragma once

#include <cstddef>
#include <functional>

namespace fusecond {

// Parallelism degree requested by the caller, capped by FUSECOND_THREADS when
// that variable is set. Always >= 1.
std::size_t resolve_threads(std::size_t requested);

// Runs body(i) for i in [0, n), splitting the range into contiguous chunks over
// at most `threads` workers. Each index is processed exactly once; callers write
// only to per-index outputs, so results never depend on the schedule.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace fusecond
