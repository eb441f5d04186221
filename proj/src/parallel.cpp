#include "pcw/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace pcw {

std::size_t thread_count() {
    static const std::size_t cached = [] {
        std::size_t n = std::thread::hardware_concurrency();
        if (n == 0) n = 1;
        if (const char* env = std::getenv("PCW_THREADS")) {
            const long cap = std::strtol(env, nullptr, 10);
            if (cap >= 1 && static_cast<std::size_t>(cap) < n) n = static_cast<std::size_t>(cap);
        }
        return n;
    }();
    return cached;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace pcw
