#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace fwdsat {

// Worker count for batch work: hardware concurrency capped by FWD_THREADS.
std::size_t worker_count();

// Runs fn(chunk_index, begin, end) over [0, n) split into contiguous chunks,
// one per worker. Results must be keyed by chunk so reductions can combine
// them in chunk order, independent of scheduling.
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Deterministic reduction over [0, n): each chunk folds eval(i) with fold,
// then the per-chunk accumulators are combined in chunk index order.
template <class T, class Eval, class Fold>
T parallel_reduce(std::size_t n, T init, Eval eval, Fold fold) {
    if (n == 0) return init;
    std::size_t workers = worker_count();
    std::size_t chunks = std::min(workers, n);
    std::vector<T> partial(chunks, init);
    parallel_chunks(n, [&](std::size_t c, std::size_t begin, std::size_t end) {
        T acc = init;
        for (std::size_t i = begin; i < end; ++i) acc = fold(acc, eval(i));
        partial[c] = acc;
    });
    T out = init;
    for (const T& p : partial) out = fold(out, p);
    return out;
}

} // namespace fwdsat
