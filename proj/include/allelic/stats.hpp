#pragma once

#include <cstdint>
#include <vector>

namespace allelic {

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0; // normal-theory CI half width
    std::size_t count = 0;
};

MeanCi mean_with_ci(const std::vector<double>& samples, double level = 0.95);

double sample_quantile(std::vector<double> samples, double q);

// Lower regularized incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

// P(chi^2_df <= x) and the upper tail p-value.
double chi_square_cdf(double x, double df);
inline double chi_square_p_value(double stat, double df) { return 1.0 - chi_square_cdf(stat, df); }

double normal_cdf(double z);

double poisson_pmf(std::int64_t k, double mean);

// Goodness of fit of integer samples against a Poisson law; cells with
// expected count < min_expected are pooled from the right tail.
struct GofResult {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 0.0;
};
GofResult chi_square_poisson_gof(const std::vector<std::int64_t>& samples, double mean, double min_expected = 5.0);

// Jarque-Bera normality statistic; chi^2_2 under normality.
GofResult jarque_bera(const std::vector<double>& samples);

// One-sided exact Spearman test that `values` decrease with their index
// (small p = strong evidence of a decreasing trend). Exact permutation null,
// usable for short grids (<= 8 points).
struct TrendResult {
    double rho = 0.0;
    double p_value = 1.0;
    bool nonincreasing = false;
};
TrendResult spearman_decreasing_trend(const std::vector<double>& values);

} // namespace allelic
