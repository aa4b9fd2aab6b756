#ifndef CRYOREDUCE_MAPREDUCE_HPP
#define CRYOREDUCE_MAPREDUCE_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "cryoreduce/datastore.hpp"
#include "cryoreduce/errors.hpp"

namespace cryoreduce {

inline unsigned default_worker_count() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1u : n;
}

namespace detail {

// Runs map over task indices [0, task_count) on `workers` threads, then folds
// the per-task results with a pairwise tree over task index order. The tree
// shape depends only on task_count, so the result is bit-identical across
// worker counts and scheduling orders. Each task runs exactly once; the first
// map failure sets an abort flag, unstarted tasks are skipped, and the error
// is rethrown as MapReduceError carrying the task index.
template <typename Partial, typename MapFn, typename ReduceFn>
Partial run_indexed(std::size_t task_count, MapFn&& map_fn, ReduceFn&& reduce_fn,
                    Partial identity, unsigned workers) {
    if (task_count == 0) return identity;
    if (workers == 0) workers = default_worker_count();

    std::vector<std::optional<Partial>> results(task_count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t failed_task = 0;

    auto worker_loop = [&]() {
        while (!abort.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= task_count) return;
            try {
                results[i] = map_fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                    failed_task = i;
                }
                abort.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    const unsigned thread_count = static_cast<unsigned>(
        std::min<std::size_t>(workers, task_count));
    if (thread_count <= 1) {
        worker_loop();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(thread_count);
        for (unsigned t = 0; t < thread_count; ++t) pool.emplace_back(worker_loop);
        for (auto& th : pool) th.join();
    }

    if (first_error) {
        std::string cause = "map task failed";
        try {
            std::rethrow_exception(first_error);
        } catch (const std::exception& e) {
            cause = e.what();
        } catch (...) {
        }
        throw MapReduceError("map failed on chunk " + std::to_string(failed_task) +
                                 ": " + cause,
                             failed_task);
    }

    // Pairwise fold, level by level, in index order.
    std::vector<Partial> level;
    level.reserve(task_count);
    for (auto& r : results) level.push_back(std::move(*r));
    while (level.size() > 1) {
        std::vector<Partial> next_level;
        next_level.reserve((level.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
            next_level.push_back(reduce_fn(std::move(level[i]), std::move(level[i + 1])));
        }
        if (level.size() % 2 == 1) next_level.push_back(std::move(level.back()));
        level = std::move(next_level);
    }
    return reduce_fn(std::move(identity), std::move(level.front()));
}

}  // namespace detail

// A map-reduce pass over the chunks of a DataStore. reduce_fn must be
// associative and commutative (up to floating-point roundoff) and identity
// must satisfy reduce_fn(identity, x) == x exactly.
template <typename Partial>
struct MapReduceJob {
    const DataStore* chunk_source = nullptr;
    std::function<Partial(const Chunk&)> map_fn;
    std::function<Partial(Partial, Partial)> reduce_fn;
    Partial identity{};
    unsigned workers = 0;  // 0 = logical CPU count
};

template <typename Partial>
Partial run(const MapReduceJob<Partial>& job) {
    if (job.chunk_source == nullptr || job.chunk_source->image_count() == 0)
        throw ValidationError("map-reduce job requires a nonempty datastore");
    const DataStore& store = *job.chunk_source;
    return detail::run_indexed<Partial>(
        store.chunk_count(),
        [&](std::size_t i) { return job.map_fn(store.read_chunk(i)); },
        job.reduce_fn, job.identity, job.workers);
}

}  // namespace cryoreduce

#endif
