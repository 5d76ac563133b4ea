#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "allelic/rng.hpp"
#include "allelic/stats.hpp"

using namespace allelic;

TEST_CASE("chi-square distribution values") {
    // chi^2_2 CDF is 1 - exp(-x/2)
    CHECK(chi_square_cdf(4.0, 2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-10));
    CHECK(chi_square_p_value(9.21034, 2.0) == doctest::Approx(0.01).epsilon(1e-4));
    CHECK(chi_square_p_value(3.841459, 1.0) == doctest::Approx(0.05).epsilon(1e-4));
    CHECK(regularized_gamma_p(3.0, 1000.0) == doctest::Approx(1.0));
    CHECK(regularized_gamma_p(3.0, 0.0) == 0.0);
}

TEST_CASE("normal cdf") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-5));
    CHECK(normal_cdf(-1.959964) == doctest::Approx(0.025).epsilon(1e-4));
}

TEST_CASE("poisson pmf normalizes") {
    for (double mean : {0.3, 1.0, 17.5}) {
        double total = 0.0;
        for (std::int64_t k = 0; k < 200; ++k) total += poisson_pmf(k, mean);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("chi-square GOF accepts true Poisson samples") {
    Rng rng(5150);
    for (double mean : {1.0 / 3.0, 1.0, 17.3}) {
        std::vector<std::int64_t> samples(10000);
        for (auto& s : samples) s = rng.poisson(mean);
        const auto gof = chi_square_poisson_gof(samples, mean);
        CHECK(gof.p_value > 0.01);
    }
}

TEST_CASE("chi-square GOF rejects a wrong mean") {
    Rng rng(5151);
    std::vector<std::int64_t> samples(10000);
    for (auto& s : samples) s = rng.poisson(1.0);
    const auto gof = chi_square_poisson_gof(samples, 0.5);
    CHECK(gof.p_value < 1e-6);
}

TEST_CASE("spearman trend test") {
    const auto perfect = spearman_decreasing_trend({4.0, 3.0, 2.0, 1.0});
    CHECK(perfect.nonincreasing);
    CHECK(perfect.rho == doctest::Approx(-1.0));
    CHECK(perfect.p_value == doctest::Approx(1.0 / 24.0));
    CHECK(perfect.p_value <= 0.05);

    const auto swapped = spearman_decreasing_trend({3.0, 4.0, 2.0, 1.0});
    CHECK(!swapped.nonincreasing);
    CHECK(swapped.p_value > 0.05);

    const auto three = spearman_decreasing_trend({3.0, 2.0, 1.0});
    CHECK(three.p_value == doctest::Approx(1.0 / 6.0));

    CHECK_THROWS_AS(spearman_decreasing_trend({1.0}), std::invalid_argument);
}

TEST_CASE("jarque-bera separates normal-ish from skewed samples") {
    Rng rng(31337);
    std::vector<double> normalish(20000);
    for (auto& x : normalish) {
        double s = 0.0;
        for (int i = 0; i < 12; ++i) s += rng.uniform();
        x = s - 6.0;
    }
    const auto jb_normal = jarque_bera(normalish);
    CHECK(jb_normal.p_value > 0.005);

    std::vector<double> skewed(20000);
    for (auto& x : skewed) x = rng.exponential(1.0);
    CHECK(jarque_bera(skewed).statistic > 100.0);
}

TEST_CASE("mean, CI and quantiles") {
    std::vector<double> xs = {1.0, 2.0, 3.0, 4.0, 5.0};
    const auto ci = mean_with_ci(xs);
    CHECK(ci.mean == doctest::Approx(3.0));
    CHECK(ci.half_width == doctest::Approx(1.959963984540054 * std::sqrt(2.5 / 5.0)).epsilon(1e-12));
    CHECK(sample_quantile(xs, 0.5) == doctest::Approx(3.0));
    CHECK(sample_quantile(xs, 0.0) == doctest::Approx(1.0));
    CHECK(sample_quantile(xs, 1.0) == doctest::Approx(5.0));
    CHECK_THROWS_AS(mean_with_ci({}), std::invalid_argument);
}
