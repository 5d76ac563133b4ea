#include "allelic/rng.hpp"

#include <stdexcept>

namespace allelic {

namespace {

double log_factorial(std::int64_t k) {
    static const double table[] = {0.0,
                                   0.0,
                                   0.6931471805599453,
                                   1.791759469228055,
                                   3.1780538303479458,
                                   4.787491742782046,
                                   6.579251212010101,
                                   8.525161361065415,
                                   10.60460290274525,
                                   12.801827480081469};
    if (k < 10) return table[k];
    return std::lgamma(static_cast<double>(k) + 1.0);
}

} // namespace

std::int64_t Rng::poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: mean must be >= 0");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
        // Knuth multiplication method
        const double limit = std::exp(-mean);
        std::int64_t k = -1;
        double prod = 1.0;
        do {
            prod *= uniform();
            ++k;
        } while (prod > limit);
        return k;
    }
    // PTRS transformed rejection (Hoermann 1993)
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform();
        double us = 0.5 - std::fabs(u);
        double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_mean - mean - log_factorial(static_cast<std::int64_t>(k))) {
            return static_cast<std::int64_t>(k);
        }
    }
}

} // namespace allelic
