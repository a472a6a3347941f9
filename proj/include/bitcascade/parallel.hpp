#pragma once

// Index-parallel loops with a process-wide worker count. Work items write to
// their own output slot, so results never depend on the number of threads.
// Nested calls run inline on the calling worker.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bitcascade::parallel {

inline std::atomic<unsigned>& thread_count_storage() {
    static std::atomic<unsigned> count{1};
    return count;
}

inline void set_threads(unsigned n) { thread_count_storage() = std::max(1u, n); }

inline unsigned threads() { return thread_count_storage(); }

inline bool& inside_worker() {
    thread_local bool flag = false;
    return flag;
}

template <class Fn>
void for_each_index(std::size_t n, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads(), n));
    if (workers <= 1 || inside_worker()) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        inside_worker() = true;
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
        inside_worker() = false;
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace bitcascade::parallel
