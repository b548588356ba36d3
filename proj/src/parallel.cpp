#include "ksf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace ksf {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads = std::max(1, n); }
int num_threads() { return g_threads; }

void parallel_for(long count, const std::function<void(long, long)>& fn, long min_chunk) {
    if (count <= 0) return;
    const long workers = std::min<long>(g_threads, std::max<long>(1, count / std::max<long>(1, min_chunk)));
    if (workers <= 1) {
        fn(0, count);
        return;
    }
    const long chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (long w = 1; w < workers; ++w) {
        const long b = w * chunk, e = std::min(count, b + chunk);
        if (b < e) pool.emplace_back(fn, b, e);
    }
    fn(0, std::min(count, chunk));
    for (auto& th : pool) th.join();
}

}  // namespace ksf
