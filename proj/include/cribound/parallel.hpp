#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace cri {

inline unsigned default_thread_count() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

// Evaluates fn(0..count-1) across worker threads and returns the results
// indexed by input. Work items carry their own derived seeds and results are
// combined by the caller in index order, so the outcome is identical for any
// thread count (including the serial path). If several workers throw, the
// exception from the lowest index is rethrown to keep failures reproducible.
template <class T, class Fn>
std::vector<T> map_indexed(std::size_t count, Fn&& fn,
                           unsigned threads = default_thread_count()) {
    std::vector<T> results(count);
    if (count == 0) return results;
    if (threads <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
        return results;
    }
    if (threads > count) threads = static_cast<unsigned>(count);

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::atomic<bool> failed{false};

    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            if (failed.load(std::memory_order_relaxed)) return;
            try {
                results[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    if (failed.load()) {
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    return results;
}

}  // namespace cri
