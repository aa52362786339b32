#ifndef DKQL_PARALLEL_HPP
#define DKQL_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dkql {

inline unsigned default_threads() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs f(i) for i in [0, n) on up to `threads` threads. Work items must
/// write only to their own output slots. The exception of the lowest
/// failing index is rethrown, so failures are reported deterministically.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    if (n == 0) return;
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::size_t err_index = n;
    std::exception_ptr err;
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    pool.clear();
    if (err) std::rethrow_exception(err);
}

}  // namespace dkql

#endif  // DKQL_PARALLEL_HPP
