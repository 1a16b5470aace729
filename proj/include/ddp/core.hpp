#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace ddp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

// ---------------------------------------------------------------------------
// Scalar math

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Inverse of softplus; defined for y > 0.
inline double softplus_inv(double y) {
    if (y > 30.0) return y;
    return std::log(std::expm1(y));
}

// ---------------------------------------------------------------------------
// Dense row-major matrix. Sizes here are tiny (K, D, H <= a few hundred), so
// a flat vector plus an index is all we need.

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    std::span<double> row(int r) { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
    std::span<const double> row(int r) const {
        return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
    }

    bool empty() const { return data.empty(); }
    size_t size() const { return data.size(); }

    bool operator==(const Matrix&) const = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// ---------------------------------------------------------------------------
// Seeding and random draws. All randomness in the project flows from a root
// seed split per purpose, so reruns are bit-identical. Draw algorithms are
// spelled out here rather than taken from <random> distributions, which keeps
// the byte streams independent of the standard library implementation.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t root, uint64_t purpose) { return splitmix64(root ^ splitmix64(purpose)); }

struct Rng {
    std::mt19937_64 gen;

    explicit Rng(uint64_t seed) : gen(seed) {}

    uint64_t next_u64() { return gen(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log argument.
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int n) { return static_cast<int>(gen() % static_cast<uint64_t>(n)); }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    double normal(double mean = 0.0, double sd = 1.0) {
        // Box-Muller; the spare is discarded to keep state a pure mt19937_64.
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

// ---------------------------------------------------------------------------
// Deterministic parallel map: results land in index order, so the reduction
// that follows is identical no matter how many workers ran.

template <typename T, typename Fn>
std::vector<T> parallel_map(size_t n, int threads, Fn&& fn) {
    std::vector<T> out(n);
    if (threads <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    const int workers = static_cast<int>(std::min<size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (size_t i = w; i < n; i += workers) out[i] = fn(i);
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

// ---------------------------------------------------------------------------
// FNV-1a, used for checkpoint content hashes.

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ddp
