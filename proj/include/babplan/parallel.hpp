#pragma once

#include <cstdint>
#include <functional>

namespace babplan {

// Worker count: BABPLAN_THREADS when set, otherwise the hardware count.
int thread_count();
void set_thread_count(int n);  // 0 restores the default

// Runs fn(begin, end) over disjoint chunks of [0, n). Chunk boundaries do not
// affect results anywhere this is used: every unit of work is independent and
// written to a distinct slot.
void parallel_chunks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace babplan
