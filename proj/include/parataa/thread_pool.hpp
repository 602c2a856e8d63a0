#ifndef PARATAA_THREAD_POOL_HPP
#define PARATAA_THREAD_POOL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace parataa {

/// Fork-join helper for index-parallel loops.
///
/// Indices are split into contiguous chunks, one per worker. Work items must
/// write only to their own output slot, which keeps results independent of
/// the thread count.
class ThreadPool {
public:
    explicit ThreadPool(int threads = default_thread_count()) : threads_(std::max(1, threads)) {}

    int size() const { return threads_; }

    /// Calls fn(i) for every i in [0, count). If any call throws, the
    /// exception from the lowest-numbered chunk is rethrown after all
    /// workers have joined.
    template <typename Fn>
    void parallel_for(std::size_t count, Fn&& fn) const {
        const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads_), count);
        if (workers <= 1) {
            for (std::size_t i = 0; i < count; ++i) {
                fn(i);
            }
            return;
        }
        std::vector<std::exception_ptr> errors(workers);
        auto run_chunk = [&](std::size_t w) {
            const std::size_t begin = count * w / workers;
            const std::size_t end = count * (w + 1) / workers;
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    fn(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        };
        {
            std::vector<std::jthread> pool;
            pool.reserve(workers - 1);
            for (std::size_t w = 1; w < workers; ++w) {
                pool.emplace_back(run_chunk, w);
            }
            run_chunk(0);
        }
        for (auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    /// PARATAA_THREADS if set and positive, otherwise the hardware concurrency.
    static int default_thread_count();

private:
    int threads_;
};

} // namespace parataa

#endif
