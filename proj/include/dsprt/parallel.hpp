// parallel.hpp -- deterministic trial parallelism: results are stored by
// trial index, so the reported statistics never depend on the worker count.
#pragma once
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace dsprt {

template <typename T, typename Fn>
std::vector<T> parallel_trials(std::uint64_t n, int threads, Fn&& fn) {
    std::vector<T> out(n);
    if (threads <= 1 || n < 2) {
        for (std::uint64_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::thread> pool;
    const int tc = threads;
    pool.reserve(static_cast<std::size_t>(tc));
    for (int w = 0; w < tc; ++w) {
        pool.emplace_back([&, w]() {
            for (std::uint64_t i = static_cast<std::uint64_t>(w); i < n;
                 i += static_cast<std::uint64_t>(tc))
                out[i] = fn(i);
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace dsprt
