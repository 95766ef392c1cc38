#include "mspgm/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace mspgm {

std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(std::size_t total, std::size_t chunk) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (chunk == 0) chunk = total == 0 ? 1 : total;
    for (std::size_t first = 0; first < total; first += chunk) {
        out.emplace_back(first, std::min(chunk, total - first));
    }
    return out;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    std::vector<std::exception_ptr> errors(count);
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, count); ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace mspgm
