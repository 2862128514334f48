// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sdpm {

/// Static-chunked parallel loop. Each index is processed exactly once and
/// results are expected to be written to index-owned slots, so the outcome
/// does not depend on the thread count.
class Executor {
public:
    explicit Executor(bool parallel = false, unsigned threads = 0) : parallel_(parallel) {
        threads_ = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
        if (!parallel_) threads_ = 1;
    }

    bool parallel() const noexcept { return parallel_; }
    unsigned threads() const noexcept { return threads_; }

    template <typename Fn>
    void for_each(std::size_t n, Fn&& fn) const {
        if (!parallel_ || n < 2 * kMinChunk) {
            for (std::size_t i = 0; i < n; ++i) fn(i);
            return;
        }
        const std::size_t workers = std::min<std::size_t>(threads_, (n + kMinChunk - 1) / kMinChunk);
        const std::size_t chunk = (n + workers - 1) / workers;
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            pool.emplace_back([&, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }

private:
    static constexpr std::size_t kMinChunk = 64;
    bool parallel_;
    unsigned threads_;
};

}  // namespace sdpm
