#pragma once

#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace forma {

// Runs fn(i) for i in [0, n) over at most `threads` workers in contiguous
// index chunks. Workers write to disjoint slots chosen by index, so results
// are identical for any worker count.
template <class F>
void parallel_for(size_t n, unsigned threads, F&& fn) {
    if (threads <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    unsigned workers = threads;
    if (static_cast<size_t>(workers) > n) workers = static_cast<unsigned>(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    const size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        size_t begin = static_cast<size_t>(w) * chunk;
        size_t end = begin + chunk < n ? begin + chunk : n;
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace forma
