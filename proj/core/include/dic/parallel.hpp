#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dic {

//! Paths per reduction block. Fixed so results never depend on the thread count.
inline constexpr std::size_t kPathBlock = 4096;

/*! Evaluates fn(begin, end) over fixed-size blocks of [0, n) and returns the
    per-block results in block order. Merging them in that order gives
    bit-identical results for any number of workers.
*/
template <class Fn>
auto run_blocks(std::size_t n, unsigned threads, Fn&& fn) {
    using Result = decltype(fn(std::size_t{0}, std::size_t{0}));
    const std::size_t n_blocks = (n + kPathBlock - 1) / kPathBlock;
    std::vector<Result> results(n_blocks);
    auto work_on = [&](std::size_t b) {
        const std::size_t begin = b * kPathBlock;
        results[b] = fn(begin, std::min(n, begin + kPathBlock));
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_blocks)));
    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b)
            work_on(b);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (std::size_t b = next++; b < n_blocks; b = next++)
                    work_on(b);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = n_blocks;
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
    return results;
}

//! Running mean / second central moment, mergeable in a fixed order (Chan et al.).
struct MomentAccumulator {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        count += 1.0;
        const double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }
    void merge(const MomentAccumulator& o) {
        if (o.count == 0.0)
            return;
        if (count == 0.0) {
            *this = o;
            return;
        }
        const double n = count + o.count;
        const double delta = o.mean - mean;
        mean += delta * o.count / n;
        m2 += o.m2 + delta * delta * count * o.count / n;
        count = n;
    }
    double variance() const { return count > 1.0 ? m2 / (count - 1.0) : 0.0; }
    double stderr_of_mean() const;
};

} // namespace dic
