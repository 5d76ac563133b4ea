#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "allelic/experiments.hpp"

using namespace allelic;

namespace {

ExperimentConfig base_config(const std::string& text) { return parse_experiment_config(text); }

const ObservableRow& row_of(const SweepReport& rep, std::int64_t n, const std::string& name) {
    for (const auto& r : rep.rows) {
        if (r.n == n && r.observable == name) return r;
    }
    REQUIRE(false);
    return rep.rows.front();
}

bool has_criterion(const SweepReport& rep, const std::string& name) {
    for (const auto& c : rep.criteria) {
        if (c.name == name) return true;
    }
    return false;
}

} // namespace

TEST_CASE("config parsing from key=value text") {
    const auto cfg = base_config("experiment = scalings\nmodel=bs\nrho = 0.25\nn_grid = 100,200,400\n"
                                 "replicates=50\nseed= 9\nthreads=2\n# comment\n");
    CHECK(cfg.experiment == "scalings");
    CHECK(cfg.rho == doctest::Approx(0.25));
    CHECK(cfg.n_grid == std::vector<std::int64_t>{100, 200, 400});
    CHECK(cfg.replicates == 50);
    CHECK(cfg.seed == 9);
    CHECK(cfg.threads == 2);
    CHECK_THROWS_AS(base_config("experiment=scalings\nbogus=1\n"), std::invalid_argument);
    CHECK_THROWS_AS(base_config("model=bs\n"), std::invalid_argument);
    CHECK_THROWS_AS(base_config("experiment=scalings\nn_grid=400,100\n"), std::invalid_argument);
}

TEST_CASE("config parsing from JSON") {
    const auto cfg = base_config(R"({"experiment":"fluid-distance","rho":0.5,"n_grid":[100,300],"replicates":20,"seed":4})");
    CHECK(cfg.experiment == "fluid-distance");
    CHECK(cfg.n_grid == std::vector<std::int64_t>{100, 300});
    CHECK(cfg.replicates == 20);
}

TEST_CASE("default grids per experiment") {
    CHECK(base_config("experiment=scalings").n_grid.size() == 4);
    CHECK(base_config("experiment=beta").n_grid == std::vector<std::int64_t>{100, 300, 1000, 3000});
}

TEST_CASE("replicate counts scale down with n when left unset") {
    const auto cfg = base_config("experiment=scalings");
    CHECK(resolved_replicates(cfg, 1000) == 2000);
    CHECK(resolved_replicates(cfg, 1000000) == 200);
    CHECK(resolved_replicates(cfg, 100000000) == 200);
    const auto pinned = base_config("experiment=scalings\nreplicates=50\n");
    CHECK(resolved_replicates(pinned, 1000) == 50);
}

TEST_CASE("scaling sweep carries the limit targets and reproduces bit for bit") {
    auto cfg = base_config("experiment=scalings\nrho=0.5\nn_grid=200,400,800\nreplicates=40\nseed=5\nk_max=3\n");
    const auto rep = spectrum_scaling_sweep(cfg);
    CHECK(row_of(rep, 200, "N1").target == doctest::Approx(0.5));
    CHECK(row_of(rep, 400, "N2").target == doctest::Approx(0.25));
    CHECK(row_of(rep, 800, "N3").target == doctest::Approx(1.0 / 12.0));
    CHECK(row_of(rep, 800, "N").target == doctest::Approx(0.5));
    CHECK(row_of(rep, 800, "S").target == doctest::Approx(0.5));
    CHECK(has_criterion(rep, "trend_N1"));
    CHECK(has_criterion(rep, "trend_S"));

    const auto rep_again = spectrum_scaling_sweep(cfg);
    CHECK(rep.to_csv() == rep_again.to_csv());
    CHECK(rep.to_summary_json() == rep_again.to_summary_json());

    auto threaded = cfg;
    threaded.threads = 4;
    const auto rep_threads = spectrum_scaling_sweep(threaded);
    CHECK(rep.to_csv() == rep_threads.to_csv());
}

TEST_CASE("confidence half-widths shrink like one over sqrt replicates") {
    auto small = base_config("experiment=scalings\nrho=0.5\nn_grid=300,600\nreplicates=60\nseed=6\nk_max=1\n");
    auto large = small;
    large.replicates = 240;
    const auto rep_small = spectrum_scaling_sweep(small);
    const auto rep_large = spectrum_scaling_sweep(large);
    const double ratio = row_of(rep_small, 300, "N1").half_width / row_of(rep_large, 300, "N1").half_width;
    CHECK(ratio >= 1.6);
    CHECK(ratio <= 2.4);
}

TEST_CASE("fluid-distance sweep reports distances and exceedance rows") {
    const auto cfg = base_config("experiment=fluid-distance\nrho=0.5\nn_grid=200,400\nreplicates=30\nk_max=2\n"
                                 "t0=1.5\ngrid_step=0.25\nseed=3\n");
    const auto rep = fluid_distance_sweep(cfg);
    const auto& med200 = row_of(rep, 200, "sup_distance_median");
    CHECK(med200.mean > 0.0);
    CHECK(std::isfinite(row_of(rep, 400, "exceed_frac_delta05").mean));
    CHECK(has_criterion(rep, "median_strictly_decreasing"));
    CHECK(has_criterion(rep, "exceedance_nonincreasing_delta05"));

    // t0 = 0 means identical initial conditions: zero distance
    auto zero_cfg = cfg;
    zero_cfg.t0 = 0.0;
    const auto zero_rep = fluid_distance_sweep(zero_cfg);
    CHECK(row_of(zero_rep, 200, "sup_distance_median").mean == 0.0);
}

TEST_CASE("kingman baseline structure at desk scale") {
    const auto cfg = base_config("experiment=kingman\nrho=0.5\nn_grid=100,300,900\nreplicates=80\nk_max=2\n"
                                 "chi_n=200\nchi_replicates=4000\nfluct_n=500\nfluct_replicates=3000\nseed=12\n");
    const auto rep = kingman_baseline(cfg);
    CHECK(row_of(rep, 900, "N_over_log_n").target == doctest::Approx(1.0));
    CHECK(has_criterion(rep, "poisson_law_N1"));
    CHECK(has_criterion(rep, "poisson_law_N2"));
    CHECK(has_criterion(rep, "fluctuation_mean_within_0.05"));
    CHECK(has_criterion(rep, "fluctuation_normality_jb_1pct"));
    // the exact finite-n center is reported as the fluctuation target
    const auto& fluct = row_of(rep, 500, "fluctuation_mean");
    CHECK(std::isfinite(fluct.target));
    CHECK(fluct.target > 0.0);
}

TEST_CASE("beta limits evaluate the displayed constants") {
    const auto cfg = base_config("experiment=beta\nalpha=1.5\nrho=1\nn_grid=60,120,240,480\nreplicates=20\n"
                                 "k_max=2\nseed=2\n");
    const auto rep = beta_limits(cfg);
    CHECK(row_of(rep, 60, "N").target == doctest::Approx(1.5 * std::tgamma(1.5)).epsilon(1e-12));
    CHECK(row_of(rep, 60, "N1").target == doctest::Approx(1.5 * 0.25 * std::tgamma(0.5)).epsilon(1e-12));
    CHECK(!has_criterion(rep, "N_constant_diverges"));

    auto near_two = cfg;
    near_two.alpha = 1.97;
    near_two.n_grid = {40, 80};
    near_two.replicates = 10;
    const auto flagged = beta_limits(near_two);
    CHECK(has_criterion(flagged, "N_constant_diverges"));

    auto bad = cfg;
    bad.alpha = 0.5;
    CHECK_THROWS_AS(beta_limits(bad), std::invalid_argument);
}

TEST_CASE("segregating sites sweep is coupled") {
    const auto cfg = base_config("experiment=sites\nrho=0.5\nn_grid=100,200,400\nreplicates=200\nseed=21\n");
    const auto rep = segregating_sites_lln(cfg);
    CHECK(row_of(rep, 100, "S").target == doctest::Approx(0.5));
    bool found = false;
    for (const auto& c : rep.criteria) {
        if (c.name == "coupled_S_ge_N") {
            found = true;
            CHECK(c.pass);
            CHECK(c.value == 0.0);
        }
    }
    CHECK(found);
}

TEST_CASE("exact-vs-mc total variation is small at moderate replicate counts") {
    const auto cfg = base_config("experiment=exact-vs-mc\nmodel=bs\nrho=0.5\nn=3\nreplicates=20000\nseed=14\n");
    const auto rep = exact_vs_mc(cfg);
    const auto& tv = row_of(rep, 3, "tv_distance");
    CHECK(tv.mean <= 0.01);
    CHECK(row_of(rep, 3, "tv_3sigma_bound").mean > 0.0);
    CHECK(rep.pass());
}

TEST_CASE("exact-vs-mc total variation shrinks like one over sqrt replicates") {
    // a single ratio is noisy; the mean over disjoint seeds should sit near 2
    double ratio_sum = 0.0;
    const int pairs = 6;
    for (int s = 0; s < pairs; ++s) {
        auto small = base_config("experiment=exact-vs-mc\nmodel=bs\nrho=0.5\nn=4\nreplicates=20000\nseed=" +
                                 std::to_string(100 + s) + "\n");
        auto large = small;
        large.replicates = 80000;
        large.seed += 1000;
        const double tv_small = row_of(exact_vs_mc(small), 4, "tv_distance").mean;
        const double tv_large = row_of(exact_vs_mc(large), 4, "tv_distance").mean;
        ratio_sum += tv_small / tv_large;
    }
    const double mean_ratio = ratio_sum / pairs;
    CHECK(mean_ratio >= 1.4);
    CHECK(mean_ratio <= 2.8);
}

TEST_CASE("experiment dispatch") {
    CHECK_THROWS_AS(run_experiment(base_config("experiment=unknown\n")), std::invalid_argument);
}
