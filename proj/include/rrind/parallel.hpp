#pragma once

// Counter-based seed derivation and an index-parallel loop whose results do
// not depend on the number of workers.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace rrind {

/// splitmix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed for stream `counter` under `parent`. Deriving seeds from
/// (parent, counter) instead of consuming a shared stream makes every
/// replicate reproducible on its own.
inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t counter) noexcept {
    return mix64(mix64(parent) ^ mix64(counter + 0x632be59bd9b4e019ULL));
}

inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b) noexcept {
    return derive_seed(derive_seed(parent, a), b);
}

using Rng = std::mt19937_64;

/// Worker count: explicit value if > 0, else RRIND_THREADS, else hardware.
inline unsigned resolve_threads(int requested = 0) {
    if (requested > 0) return static_cast<unsigned>(requested);
    if (const char* env = std::getenv("RRIND_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, count). Work is claimed dynamically; callers
/// write results into slot i so output is independent of scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

/// Uniform random permutation of {0..n-1} (Fisher-Yates).
inline void random_permutation(std::vector<std::size_t>& out, std::size_t n, Rng& rng) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(out[i - 1], out[pick(rng)]);
    }
}

}  // namespace rrind
