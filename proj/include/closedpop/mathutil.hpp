#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace closedpop {

inline constexpr double kProbFloor = 1e-300;

// log with the underflow floor: anything below kProbFloor maps to -inf, never NaN.
inline double safe_log(double x) {
    return x < kProbFloor ? -std::numeric_limits<double>::infinity() : std::log(x);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double invlogit(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// lgamma without the signgam global; all arguments here are positive.
inline double log_gamma(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

inline double log_beta(double a, double b) {
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

// log[ Gamma(N+1) / Gamma(N-n+1) ], valid for non-integer N >= n.
inline double log_falling_factorial(double N, int n) {
    return log_gamma(N + 1.0) - log_gamma(N - static_cast<double>(n) + 1.0);
}

// Multinomial-logit expansion with the last category as reference.
// working has k-1 entries; returns k probabilities summing to 1.
inline std::vector<double> mlogit_expand(std::span<const double> working) {
    const std::size_t k = working.size() + 1;
    std::vector<double> out(k);
    double m = 0.0;
    for (double w : working) m = std::max(m, w);
    double denom = std::exp(-m);
    for (std::size_t s = 0; s + 1 < k; ++s) {
        out[s] = std::exp(working[s] - m);
        denom += out[s];
    }
    for (std::size_t s = 0; s + 1 < k; ++s) out[s] /= denom;
    out[k - 1] = std::exp(-m) / denom;
    return out;
}

// Inverse of mlogit_expand.
inline std::vector<double> mlogit_collapse(std::span<const double> probs) {
    std::vector<double> out(probs.size() - 1);
    for (std::size_t s = 0; s + 1 < probs.size(); ++s)
        out[s] = std::log(probs[s]) - std::log(probs.back());
    return out;
}

// splitmix64; used to derive independent substreams from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for substream k of a master seed; a pure function of (master, k).
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t k) {
    return splitmix64(master ^ splitmix64(k + 0x9E3779B97F4A7C15ULL));
}

}  // namespace closedpop
