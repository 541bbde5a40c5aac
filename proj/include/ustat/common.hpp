#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ustat {

/// Neumaier-compensated accumulator.  All reductions that feed reported
/// numbers go through this in a fixed order so results do not depend on
/// thread count or incidental evaluation order.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double neumaier_total(const std::vector<double>& xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

/// Integer power by repeated multiplication; keeps exact sign semantics for
/// negative bases (std::pow would also work but this is cheaper and explicit).
inline double powi(double x, long k) {
    if (k < 0) return 1.0 / powi(x, -k);
    double r = 1.0, b = x;
    while (k > 0) {
        if (k & 1) r *= b;
        b *= b;
        k >>= 1;
    }
    return r;
}

inline bool is_integer(double p, double tol = 1e-12) {
    return std::abs(p - std::round(p)) <= tol;
}

/// pow with signed-integer semantics when p is (numerically) an integer,
/// else requires x >= 0.
inline double signed_pow(double x, double p) {
    if (is_integer(p)) return powi(x, static_cast<long>(std::llround(p)));
    if (x < 0.0)
        throw std::domain_error("signed_pow: negative base with non-integer exponent " +
                                std::to_string(p) + "; use an absolute-value mode");
    return std::pow(x, p);
}

// ---------------------------------------------------------------- rng -----

/// splitmix64 step; used to derive independent chunk seeds from (seed, index).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk) {
    return splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (chunk + 1)));
}

/// Uniform in [0,1) from a 64-bit word: top 53 bits.  Fixed mapping, never
/// std::uniform_real_distribution (implementation-defined sequences).
inline double u01_from_bits(std::uint64_t w) {
    return static_cast<double>(w >> 11) * 0x1.0p-53;
}

/// Inverse standard normal CDF.  Acklam's rational approximation refined by
/// one Halley step against erfc; |rel err| < 1e-14 over (1e-300, 1-1e-16).
double normal_icdf(double p);

/// Standard normal CDF (for Wilson intervals and checks).
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// ---------------------------------------------------------- parallelism ---

/// Deterministic chunked parallel loop: calls body(chunk_index) for
/// chunk_index in [0, nchunks); partition of work into chunks is fixed by the
/// caller, so results are identical for any thread count.
void parallel_chunks(std::uint64_t nchunks, int threads,
                     const std::function<void(std::uint64_t)>& body);

inline int resolve_threads(int threads) {
    if (threads > 0) return threads;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// --------------------------------------------------------------- errors ---

/// Thrown when an exact enumeration would exceed the configured budget.
struct EnumerationCapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an operation's preconditions (applicability) are violated.
struct ApplicabilityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace ustat
