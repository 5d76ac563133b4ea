#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <unordered_map>

#include "allelic/exact.hpp"
#include "allelic/math.hpp"
#include "allelic/simulate.hpp"

using namespace allelic;

namespace {

AlleleConfig config_of(const RunResult& r) {
    std::vector<std::int64_t> m;
    for (const auto& [size, count] : r.spectrum) {
        if (size > static_cast<std::int64_t>(m.size())) m.resize(static_cast<std::size_t>(size), 0);
        m[static_cast<std::size_t>(size - 1)] = count;
    }
    return AlleleConfig(std::move(m));
}

std::unordered_map<AlleleConfig, double, AlleleConfigHash> empirical_law(const LambdaModel& model, double rho,
                                                                          std::int64_t n, std::int64_t reps,
                                                                          std::uint64_t seed) {
    std::unordered_map<AlleleConfig, double, AlleleConfigHash> law;
    SimOptions opt;
    for (std::int64_t r = 0; r < reps; ++r) {
        law[config_of(simulate_freeze(model, rho, n, opt, derive_seed(seed, static_cast<std::uint64_t>(r))))] += 1.0;
    }
    for (auto& [cfg, p] : law) p /= static_cast<double>(reps);
    return law;
}

} // namespace

TEST_CASE("single block can only freeze") {
    for (const auto& model : {LambdaModel::kingman(), LambdaModel::bolthausen_sznitman(), LambdaModel::star()}) {
        const auto r = simulate_freeze(model, 1.0, 1, SimOptions{}, 7);
        CHECK(r.spectrum.at(1) == 1);
        CHECK(r.n_total == 1);
        CHECK(r.event_count == 1);
        CHECK(r.s_count == 0);
    }
}

TEST_CASE("two-sample law matches the first-step analysis") {
    const auto bs = LambdaModel::bolthausen_sznitman();
    const std::int64_t reps = 100000;
    std::int64_t merged_first = 0;
    SimOptions opt;
    for (std::int64_t r = 0; r < reps; ++r) {
        const auto res = simulate_freeze(bs, 0.5, 2, opt, derive_seed(11, static_cast<std::uint64_t>(r)));
        if (res.spectrum.count(2)) ++merged_first;
    }
    const double phat = static_cast<double>(merged_first) / static_cast<double>(reps);
    CHECK(std::fabs(phat - 0.5) <= 0.005);
}

TEST_CASE("Kingman simulation matches the Ewens formula at n = 6") {
    const std::int64_t reps = 100000;
    const auto law = empirical_law(LambdaModel::kingman(), 0.5, 6, reps, 23);
    for (const auto& cfg : enumerate_configs(6)) {
        const double p = ewens_q(1.0, cfg);
        const double phat = law.count(cfg) ? law.at(cfg) : 0.0;
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
        CHECK(std::fabs(phat - p) <= 4.0 * se + 1e-9);
    }
}

TEST_CASE("full-mode mass conservation at every event") {
    for (const auto& model : {LambdaModel::bolthausen_sznitman(), LambdaModel::kingman(), LambdaModel::star(),
                              LambdaModel::beta(1.5)}) {
        Rng rng(99);
        SimOptions opt;
        FreezeChain chain(model, 0.7, 60, opt, rng);
        std::int64_t events = 0;
        while (!chain.done()) {
            chain.step();
            ++events;
            const auto active = chain.active_spectrum();
            std::int64_t frozen_mass = 0;
            const auto res = chain.result();
            for (const auto& [size, count] : res.spectrum) frozen_mass += size * count;
            CHECK(active.total_mass + frozen_mass == 60);
            CHECK(active.total_blocks == chain.active_blocks());
        }
        CHECK(events <= 2 * 60 - 1);
    }
}

TEST_CASE("event count bound") {
    for (std::int64_t n : {1, 2, 17, 400}) {
        const auto r = simulate_freeze(LambdaModel::bolthausen_sznitman(), 0.5, n, SimOptions{}, 5);
        CHECK(r.event_count <= std::max<std::int64_t>(2 * n - 1, 1));
        std::int64_t mass = 0;
        for (const auto& [size, count] : r.spectrum) mass += size * count;
        CHECK(mass == n);
        CHECK(r.n_total >= 1);
    }
}

TEST_CASE("full and truncated runs agree event by event from one seed") {
    const std::int64_t n = 200;
    const std::int64_t d = 4;
    for (const auto& model : {LambdaModel::bolthausen_sznitman(), LambdaModel::kingman(), LambdaModel::beta(1.5)}) {
        for (std::uint64_t seed : {1ULL, 77ULL, 991ULL}) {
            Rng rng_full(seed);
            Rng rng_trunc(seed);
            SimOptions full_opt;
            SimOptions trunc_opt;
            trunc_opt.mode = SimMode::Truncated;
            trunc_opt.d = d;
            FreezeChain full(model, 0.5, n, full_opt, rng_full);
            FreezeChain trunc(model, 0.5, n, trunc_opt, rng_trunc);
            while (!full.done()) {
                CHECK(!trunc.done());
                for (std::int64_t dd = 1; dd <= d; ++dd) {
                    CHECK(full.truncated_coordinates(dd) == trunc.truncated_coordinates(dd));
                }
                CHECK(full.active_blocks() == trunc.active_blocks());
                CHECK(full.time() == trunc.time());
                const auto snap = trunc.truncated_state();
                std::int64_t actives = snap.y;
                for (auto v : snap.x) actives += v;
                CHECK(actives == trunc.active_blocks());
                CHECK(snap.t == trunc.time());
                full.step();
                trunc.step();
            }
            CHECK(trunc.done());
        }
    }
}

TEST_CASE("identical seeds reproduce results bit for bit") {
    SimOptions opt;
    opt.mode = SimMode::Truncated;
    opt.d = 3;
    opt.coupled_sites = true;
    const auto a = simulate_freeze(LambdaModel::bolthausen_sznitman(), 0.5, 500, opt, 12345);
    const auto b = simulate_freeze(LambdaModel::bolthausen_sznitman(), 0.5, 500, opt, 12345);
    CHECK(a.spectrum == b.spectrum);
    CHECK(a.tail_frozen == b.tail_frozen);
    CHECK(a.n_total == b.n_total);
    CHECK(a.s_count == b.s_count);
    CHECK(a.tree_length == b.tree_length);
    CHECK(a.event_count == b.event_count);
    const auto c = simulate_freeze(LambdaModel::bolthausen_sznitman(), 0.5, 500, opt, 54321);
    CHECK(a.s_count + a.n_total + a.event_count != c.s_count + c.n_total + c.event_count);
}

TEST_CASE("empirical law at n <= 5 is close to the absorption oracle") {
    const auto bs = LambdaModel::bolthausen_sznitman();
    for (std::int64_t n : {3, 5}) {
        const std::int64_t reps = 100000;
        const auto law = empirical_law(bs, 0.5, n, reps, 31);
        const auto oracle = absorption_oracle(bs, 0.5, n);
        double tv = 0.0;
        for (const auto& cfg : enumerate_configs(n)) {
            tv += std::fabs((law.count(cfg) ? law.at(cfg) : 0.0) - oracle.prob(cfg));
        }
        CHECK(0.5 * tv <= 0.01);
    }
}

TEST_CASE("coupled runs never produce fewer sites than skeleton freezes") {
    SimOptions opt;
    opt.mode = SimMode::Truncated;
    opt.d = 1;
    opt.coupled_sites = true;
    for (std::int64_t r = 0; r < 2000; ++r) {
        const auto res = simulate_freeze(LambdaModel::bolthausen_sznitman(), 0.5, 100, opt,
                                         derive_seed(321, static_cast<std::uint64_t>(r)));
        CHECK(res.s_count >= res.n_skeleton);
        CHECK(res.n_total >= res.n_skeleton);
        CHECK(res.n_total - res.n_skeleton <= 1);
    }
}

TEST_CASE("plain tree stats") {
    // two lineages merge at rate 1 under both models: E[length] = 2
    for (const auto& model : {LambdaModel::kingman(), LambdaModel::bolthausen_sznitman()}) {
        const std::int64_t reps = 20000;
        KahanSum total;
        for (std::int64_t r = 0; r < reps; ++r) {
            total.add(simulate_tree_stats(model, 0.5, 2, derive_seed(77, static_cast<std::uint64_t>(r))).tree_length);
        }
        CHECK(std::fabs(total.value() / static_cast<double>(reps) - 2.0) <= 0.06);
    }
    // rho -> 0: no sites
    for (std::uint64_t s = 0; s < 20; ++s) {
        CHECK(simulate_tree_stats(LambdaModel::bolthausen_sznitman(), 1e-12, 50, s).s_count == 0);
    }
    CHECK_THROWS_AS(simulate_tree_stats(LambdaModel::kingman(), 0.5, 1, 1), std::invalid_argument);
}

TEST_CASE("allelic partition spectrum from labelled blocks") {
    const std::vector<std::vector<std::int64_t>> blocks = {{1}, {2, 3, 5}, {4, 7, 8}, {6}};
    const auto spectrum = spectrum_of_blocks(blocks);
    CHECK(spectrum.multiplicity(1) == 2);
    CHECK(spectrum.multiplicity(2) == 0);
    CHECK(spectrum.multiplicity(3) == 2);
    CHECK(spectrum.sample_size() == 8);
}

TEST_CASE("tree oracle agrees with the freeze chain in distribution") {
    const auto bs = LambdaModel::bolthausen_sznitman();
    CHECK(tree_allelic_oracle(bs, 0.5, 1, 3) == AlleleConfig({1}));
    CHECK_THROWS_AS(tree_allelic_oracle(bs, 0.5, 11, 3), std::runtime_error);

    const std::int64_t n = 4;
    const std::int64_t reps = 100000;
    std::unordered_map<AlleleConfig, double, AlleleConfigHash> tree_law;
    for (std::int64_t r = 0; r < reps; ++r) {
        tree_law[tree_allelic_oracle(bs, 0.5, n, derive_seed(1001, static_cast<std::uint64_t>(r)))] += 1.0;
    }
    for (auto& [cfg, p] : tree_law) p /= static_cast<double>(reps);
    const auto freeze_law = empirical_law(bs, 0.5, n, reps, 1002);
    double tv = 0.0;
    for (const auto& cfg : enumerate_configs(n)) {
        const double a = tree_law.count(cfg) ? tree_law.at(cfg) : 0.0;
        const double b = freeze_law.count(cfg) ? freeze_law.at(cfg) : 0.0;
        tv += std::fabs(a - b);
    }
    CHECK(0.5 * tv <= 0.01);
}

TEST_CASE("paintbox partitions") {
    const auto one_block = paintbox_sample({1.0}, 5, 9);
    CHECK(one_block.size() == 1);
    CHECK(one_block[0].size() == 5);

    const auto dust_only = paintbox_sample({}, 3, 9);
    CHECK(dust_only.size() == 3);
    for (const auto& b : dust_only) CHECK(b.size() == 1);

    const auto halves = paintbox_sample({0.5, 0.5}, 100000, 42);
    CHECK(halves.size() == 2);
    CHECK(std::fabs(static_cast<double>(halves[0].size()) / 100000.0 - 0.5) <= 0.01);

    CHECK_THROWS_AS(paintbox_sample({0.8, 0.4}, 3, 1), std::domain_error);
    CHECK_THROWS_AS(paintbox_sample({0.4, 0.8}, 3, 1), std::domain_error);
}

TEST_CASE("trajectory sampling is right-continuous and starts at the initial state") {
    SimOptions opt;
    opt.mode = SimMode::Truncated;
    opt.d = 3;
    opt.sample_times = {0.0, 0.5, 1.0, 2.0, 5.0, 500.0};
    const auto res = simulate_freeze(LambdaModel::bolthausen_sznitman(), 0.5, 300, opt, 8);
    REQUIRE(res.trajectory.times.size() == opt.sample_times.size());
    CHECK(res.trajectory.values[0][0] == doctest::Approx(1.0)); // X_1(0)/n
    for (std::size_t c = 1; c + 1 < res.trajectory.values[0].size(); ++c) {
        CHECK(res.trajectory.values[0][c] == 0.0);
    }
    // far past absorption every active coordinate is zero
    const auto& last = res.trajectory.values.back();
    for (std::size_t c = 0; c + 1 < last.size(); ++c) CHECK(last[c] == 0.0);
    CHECK(res.trajectory.times == opt.sample_times);

    SimOptions one = opt;
    one.d = 1;
    const auto res1 = simulate_freeze(LambdaModel::bolthausen_sznitman(), 0.5, 300, one, 8);
    CHECK(res1.trajectory.values.back().back() > 0.0); // Z_1 at absorption

    SimOptions bad = opt;
    bad.mode = SimMode::Full;
    CHECK_THROWS_AS(simulate_freeze(LambdaModel::bolthausen_sznitman(), 0.5, 300, bad, 8), std::invalid_argument);
}
