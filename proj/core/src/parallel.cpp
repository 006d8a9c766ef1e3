#include "fwdsat/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace fwdsat {

std::size_t worker_count() {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("FWD_THREADS")) {
        try {
            const unsigned long cap = std::stoul(env);
            if (cap >= 1) n = std::min<std::size_t>(n, cap);
        } catch (const std::exception&) {
            // ignore malformed values
        }
    }
    return n;
}

void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::min(worker_count(), n);
    if (workers == 1) {
        fn(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t c = 0; c < workers; ++c) {
        const std::size_t begin = c * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, c, begin, end] { fn(c, begin, end); });
    }
    for (std::thread& t : pool) t.join();
}

} // namespace fwdsat
