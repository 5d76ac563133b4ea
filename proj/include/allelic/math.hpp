#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace allelic {

// Neumaier compensated summation; keeps p(n)-term probability sums and long
// rate sums accurate past plain double accumulation.
class KahanSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double log_binom(double n, double k) {
    if (k < 0.0 || k > n) return -std::numeric_limits<double>::infinity();
    if (k == 0.0 || k == n) return 0.0;
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double binom(double n, double k) {
    if (k < 0.0 || k > n) return 0.0;
    return std::floor(0.5 + std::exp(log_binom(n, k)));
}

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// h(m) = sum_{i=1}^{m-1} 1/i, the (m-1)th harmonic number.
// Exact loop for small m, Euler-Maclaurin tail otherwise (error < 1e-13).
inline double harmonic_number(std::int64_t m) {
    if (m <= 1) return 0.0;
    if (m <= 2048) {
        KahanSum s;
        for (std::int64_t i = m - 1; i >= 1; --i) s.add(1.0 / static_cast<double>(i));
        return s.value();
    }
    constexpr double euler_gamma = 0.5772156649015328606;
    const double x = static_cast<double>(m);
    const double x2 = x * x;
    return std::log(x) + euler_gamma - 0.5 / x - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x2 * x2);
}

inline double sqr(double x) { return x * x; }

} // namespace allelic
