#pragma once

#include <functional>

namespace ksf {

void set_num_threads(int n);
int num_threads();

// Splits [0, count) into contiguous chunks, one per worker; fn(begin, end) must only write disjoint data.
void parallel_for(long count, const std::function<void(long, long)>& fn, long min_chunk = 256);

}  // namespace ksf
