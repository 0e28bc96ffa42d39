#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tubeplan {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Splits [0, total) into `groups` contiguous ranges and runs fn(group, begin,
// end) for each, using up to `threads` workers. Group boundaries depend only
// on (total, groups), so reductions that combine per-group results in group
// order give the same answer for any worker count.
inline void for_each_group(std::size_t total, int groups, int threads,
                           const std::function<void(int, std::size_t, std::size_t)>& fn) {
    if (total == 0 || groups <= 0) return;
    if (static_cast<std::size_t>(groups) > total) groups = static_cast<int>(total);
    threads = std::min(resolve_threads(threads), groups);

    auto bounds = [&](int g) {
        std::size_t begin = total * g / groups;
        std::size_t end = total * (g + 1) / groups;
        return std::pair<std::size_t, std::size_t>(begin, end);
    };

    if (threads <= 1) {
        for (int g = 0; g < groups; ++g) {
            auto [b, e] = bounds(g);
            fn(g, b, e);
        }
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            int g = next.fetch_add(1);
            if (g >= groups) return;
            try {
                auto [b, e] = bounds(g);
                fn(g, b, e);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tubeplan
