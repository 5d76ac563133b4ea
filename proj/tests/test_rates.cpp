#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "allelic/rates.hpp"
#include "allelic/rng.hpp"

using namespace allelic;

namespace {

LambdaModel uniform_grid(std::size_t points) {
    std::vector<std::pair<double, double>> grid;
    grid.reserve(points);
    const double h = 1.0 / static_cast<double>(points);
    for (std::size_t i = 0; i < points; ++i) {
        grid.emplace_back((static_cast<double>(i) + 0.5) * h, h);
    }
    return LambdaModel::grid_density(std::move(grid));
}

} // namespace

TEST_CASE("collision rates of the point-mass families") {
    const auto kingman = LambdaModel::kingman();
    CHECK(collision_rate(kingman, 7, 2) == 1.0);
    CHECK(collision_rate(kingman, 7, 3) == 0.0);
    const auto star = LambdaModel::star();
    CHECK(collision_rate(star, 5, 5) == 1.0);
    CHECK(collision_rate(star, 5, 3) == 0.0);
}

TEST_CASE("Bolthausen-Sznitman collision rate closed form") {
    const auto bs = LambdaModel::bolthausen_sznitman();
    CHECK(collision_rate(bs, 3, 2) == doctest::Approx(0.5).epsilon(1e-13));
    // (k-2)!(b-k)!/(b-1)! at b=5, k=3: 1*2/24
    CHECK(collision_rate(bs, 5, 3) == doctest::Approx(1.0 / 12.0).epsilon(1e-13));
}

TEST_CASE("collision rate argument checks") {
    const auto bs = LambdaModel::bolthausen_sznitman();
    CHECK_THROWS_AS(collision_rate(bs, 1, 2), std::domain_error);
    CHECK_THROWS_AS(collision_rate(bs, 5, 1), std::domain_error);
    CHECK_THROWS_AS(collision_rate(bs, 5, 6), std::domain_error);
    CHECK_THROWS_AS(collision_rate(LambdaModel::beta(2.5), 5, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_rate_table(bs, 1), std::domain_error);
}

TEST_CASE("rate table matches the telescoping identities") {
    const auto bs = LambdaModel::bolthausen_sznitman();
    const auto t3 = build_rate_table(bs, 3);
    CHECK(t3.group_rate[2] == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(t3.group_rate[3] == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(t3.total == doctest::Approx(2.0).epsilon(1e-13));

    const auto t100 = build_rate_table(bs, 100);
    CHECK(t100.total == doctest::Approx(99.0).epsilon(1e-12));
    CHECK(total_merge_rate(bs, 100) == doctest::Approx(99.0).epsilon(1e-13));

    const auto kingman = build_rate_table(LambdaModel::kingman(), 4);
    CHECK(kingman.group_rate[2] == doctest::Approx(6.0).epsilon(1e-13));
    CHECK(kingman.total == doctest::Approx(6.0).epsilon(1e-13));

    // C(b,j) lambda_{b,j} j(j-1) = b for every j
    for (std::int64_t j = 2; j <= 100; ++j) {
        const double lhs = t100.group_rate[static_cast<std::size_t>(j)] * static_cast<double>(j) *
                           static_cast<double>(j - 1);
        CHECK(lhs == doctest::Approx(100.0).epsilon(1e-12));
    }
}

TEST_CASE("rate table total equals the sum of group rates") {
    for (const auto& model : {LambdaModel::beta(1.5), LambdaModel::beta(0.3), uniform_grid(200)}) {
        for (std::int64_t b : {2, 3, 7, 40}) {
            const auto t = build_rate_table(model, b);
            double sum = 0.0;
            for (std::int64_t j = 2; j <= b; ++j) sum += t.group_rate[static_cast<std::size_t>(j)];
            CHECK(t.total == doctest::Approx(sum).epsilon(1e-12));
        }
    }
}

TEST_CASE("consistency recursion lambda_{b,k} = lambda_{b+1,k} + lambda_{b+1,k+1}") {
    const std::vector<LambdaModel> models = {LambdaModel::kingman(), LambdaModel::star(),
                                             LambdaModel::bolthausen_sznitman(), LambdaModel::beta(1.5),
                                             LambdaModel::beta(0.7)};
    for (const auto& model : models) {
        for (std::int64_t b = 2; b <= 199; ++b) {
            for (std::int64_t k = 2; k <= b; ++k) {
                const double lhs = collision_rate(model, b, k);
                const double rhs = collision_rate(model, b + 1, k) + collision_rate(model, b + 1, k + 1);
                CHECK(lhs >= 0.0);
                if (lhs > 0.0) {
                    CHECK(rhs == doctest::Approx(lhs).epsilon(1e-10));
                } else {
                    CHECK(std::fabs(rhs) <= 1e-15);
                }
            }
        }
    }
    // quadrature models satisfy the recursion algebraically as well
    const auto grid = uniform_grid(500);
    for (std::int64_t b : {2, 3, 5, 10, 50, 120, 199}) {
        for (std::int64_t k = 2; k <= b; ++k) {
            const double lhs = collision_rate(grid, b, k);
            const double rhs = collision_rate(grid, b + 1, k) + collision_rate(grid, b + 1, k + 1);
            CHECK(rhs == doctest::Approx(lhs).epsilon(1e-10));
        }
    }
}

TEST_CASE("grid atoms at the interval endpoints") {
    // half mass at 0 (pairwise merges only) and half at 1 (total merges only)
    const auto model = LambdaModel::grid_density({{0.0, 0.5}, {1.0, 0.5}});
    CHECK(collision_rate(model, 5, 2) == doctest::Approx(0.5));
    CHECK(collision_rate(model, 5, 5) == doctest::Approx(0.5));
    CHECK(collision_rate(model, 5, 3) == 0.0);
    CHECK(collision_rate(model, 2, 2) == doctest::Approx(1.0));
}

TEST_CASE("fine uniform grid reproduces Bolthausen-Sznitman rates") {
    const auto grid = uniform_grid(10000);
    const auto bs = LambdaModel::bolthausen_sznitman();
    for (std::int64_t b = 2; b <= 20; ++b) {
        for (std::int64_t k = 2; k <= b; ++k) {
            CHECK(std::fabs(collision_rate(grid, b, k) - collision_rate(bs, b, k)) <= 1e-6);
        }
    }
}

TEST_CASE("merge size sampling closed forms") {
    const auto bs = LambdaModel::bolthausen_sznitman();
    CHECK(sample_merge_size(bs, 2, 0.1) == 2);
    CHECK(sample_merge_size(bs, 2, 0.9) == 2);
    CHECK(sample_merge_size(bs, 3, 0.5) == 2); // P(j=2) = 3/4
    CHECK(sample_merge_size(bs, 3, 0.8) == 3);
    CHECK(sample_merge_size(LambdaModel::kingman(), 10, 0.9999) == 2);
    CHECK(sample_merge_size(LambdaModel::star(), 5, 0.0001) == 5);
    CHECK_THROWS_AS(sample_merge_size(bs, 1, 0.5), std::domain_error);
}

TEST_CASE("merge size sampling matches group rates empirically") {
    const auto bs = LambdaModel::bolthausen_sznitman();
    const std::int64_t b = 10;
    const auto table = build_rate_table(bs, b);
    Rng rng(20240817);
    const std::int64_t draws = 1000000;
    std::vector<std::int64_t> counts(static_cast<std::size_t>(b) + 1, 0);
    for (std::int64_t i = 0; i < draws; ++i) {
        ++counts[static_cast<std::size_t>(sample_merge_size(bs, b, rng.uniform()))];
    }
    for (std::int64_t j = 2; j <= b; ++j) {
        const double p = table.group_rate[static_cast<std::size_t>(j)] / table.total;
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
        const double phat = static_cast<double>(counts[static_cast<std::size_t>(j)]) / static_cast<double>(draws);
        CHECK(std::fabs(phat - p) <= 4.0 * se);
    }
}

TEST_CASE("cached merge tables agree with the direct sampler") {
    const auto beta = LambdaModel::beta(1.5);
    RateTableCache cache(beta);
    for (std::int64_t b : {2, 5, 17, 60}) {
        const auto cdf = cache.get(b);
        CHECK(cdf->total == doctest::Approx(build_rate_table(beta, b).total).epsilon(1e-12));
        for (double u : {0.001, 0.2, 0.5, 0.77, 0.999}) {
            CHECK(cdf->sample(u) == sample_merge_size(beta, b, u));
        }
    }
    // LRU eviction keeps the cache usable
    RateTableCache tiny(beta, 2);
    for (std::int64_t b = 2; b <= 12; ++b) (void)tiny.get(b);
    CHECK(tiny.get(5)->b == 5);
}

TEST_CASE("model spec strings") {
    CHECK(parse_model_spec("kingman").family == Family::Kingman);
    CHECK(parse_model_spec("bs").family == Family::BolthausenSznitman);
    CHECK(parse_model_spec("star").family == Family::Star);
    const auto beta = parse_model_spec("beta:1.25");
    CHECK(beta.family == Family::Beta);
    CHECK(beta.alpha == doctest::Approx(1.25));
    CHECK_THROWS_AS(parse_model_spec("beta:7"), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_spec("nope"), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_spec("grid:/does/not/exist.csv"), std::invalid_argument);
}
