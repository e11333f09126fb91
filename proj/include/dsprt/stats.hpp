// stats.hpp -- small statistical helpers shared by calibration and tests.
#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace dsprt {

// Streaming mean / variance accumulator (Welford).
class RunningStat {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double sd() const { return std::sqrt(variance()); }
    double se() const { return n_ > 0 ? sd() / std::sqrt(static_cast<double>(n_)) : 0.0; }

    void merge(const RunningStat& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) { *this = o; return; }
        const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
        const double d = o.mean_ - mean_;
        const double nt = na + nb;
        m2_ += o.m2_ + d * d * na * nb / nt;
        mean_ += d * nb / nt;
        n_ += o.n_;
    }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// One-sided upper Wilson score bound for a binomial proportion.
// z = 1.645 gives 95% one-sided coverage.
inline double wilson_upper(std::uint64_t successes, std::uint64_t n, double z = 1.645) {
    if (n == 0) throw std::invalid_argument("wilson_upper: n must be > 0");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = p + z2 / (2.0 * nn);
    const double rad = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
    return std::min(1.0, (center + rad) / denom);
}

// Binomial standard error of a proportion estimate.
inline double binom_se(std::uint64_t successes, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("binom_se: n must be > 0");
    const double p = static_cast<double>(successes) / static_cast<double>(n);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

// E|X|^k for X ~ N(mean, sd^2), integer k >= 0, in closed form via the
// one-sided truncated moment recursion
//   I_k = m I_{k-1} + sd^2 (k-1) I_{k-2},  I_k = int_0^inf x^k dN(m,sd^2),
// and E|X|^k = I_k(m) + I_k(-m).
inline double gaussian_abs_moment(double mean, double sd, int k) {
    if (k < 0) throw std::invalid_argument("gaussian_abs_moment: k must be >= 0");
    if (!(sd > 0.0)) throw std::invalid_argument("gaussian_abs_moment: sd must be > 0");
    auto one_sided = [&](double m) {
        const double a = m / sd;
        const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
        const double Phi = 0.5 * std::erfc(-a / std::sqrt(2.0));
        double prev = Phi;            // I_0
        double cur = m * Phi + sd * phi;  // I_1
        if (k == 0) return prev;
        for (int j = 2; j <= k; ++j) {
            const double next = m * cur + sd * sd * (j - 1) * prev;
            prev = cur;
            cur = next;
        }
        return cur;
    };
    return one_sided(mean) + one_sided(-mean);
}

}  // namespace dsprt
