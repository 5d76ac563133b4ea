#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "allelic/lambda_model.hpp"

namespace allelic {

// Shared configuration for the experiment harness. Loaded from key=value
// text or JSON; unknown keys are rejected.
struct ExperimentConfig {
    std::string experiment;
    std::string model = "bs";
    double rho = 0.5;
    double alpha = 1.5;
    std::int64_t k_max = 3;  // tracked spectrum sizes / truncation cutoff
    std::vector<std::int64_t> n_grid;
    std::int64_t replicates = 0; // 0 = auto: ~2000 at n=10^3 shrinking to 200 at n=10^6
    std::uint64_t seed = 1;
    std::string out_dir;

    double t0 = 3.0;          // fluid-distance horizon (rescaled time)
    double grid_step = 0.05;  // fluid-distance trajectory grid
    std::int64_t n_exact = 5; // exact_vs_mc sample size

    std::int64_t chi_n = 10000;        // kingman: sample size for the Poisson law check
    std::int64_t chi_replicates = 10000;
    std::int64_t fluct_n = 100000;     // kingman: sample size for the fluctuation check
    std::int64_t fluct_replicates = 10000;

    double trend_alpha = 0.05;
    double tolerance = 0.15;   // plain tolerance checks (kingman N/log n)
    double tv_tolerance = 0.01;
    int threads = 0;
};

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Replicate count used at sample size n: the configured value when set,
// otherwise 200 * (10^6/n)^(1/3) clamped to [200, 2000].
std::int64_t resolved_replicates(const ExperimentConfig& cfg, std::int64_t n);

struct ObservableRow {
    std::int64_t n = 0;
    std::string observable;
    std::int64_t replicates = 0;
    double mean = 0.0;
    double half_width = 0.0;
    double target = 0.0; // NaN when no limit target applies
};

struct CriterionResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct SweepReport {
    std::string experiment;
    ExperimentConfig config;
    std::vector<ObservableRow> rows;
    std::vector<CriterionResult> criteria;

    bool pass() const;
    std::string to_csv() const;
    std::string to_summary_json() const;
};

// Rescaled spectrum scalings of the Bolthausen-Sznitman coalescent with
// freeze: log n/n N_1 and N against rho, (log n)^2/n N_k against
// rho/(k(k-1)), and rescaled S from plain-tree runs, with monotone-trend
// acceptance along the n grid.
SweepReport spectrum_scaling_sweep(const ExperimentConfig& cfg);

// Distribution of sup_{t<=t0} ||Xbar^{n,d}(t) - x^(d)(t)||, with median and
// threshold-exceedance trends along the n grid.
SweepReport fluid_distance_sweep(const ExperimentConfig& cfg);

// Kingman/Ewens baselines: N/log n near 1, spectrum counts against their
// Poisson limits, and the centered fluctuation of N.
SweepReport kingman_baseline(const ExperimentConfig& cfg);

// Beta(2-alpha, alpha) limits for alpha in (1,2), full-mode simulation.
SweepReport beta_limits(const ExperimentConfig& cfg);

// Rescaled segregating sites against rho, coupled so S >= skeleton freezes
// holds pathwise; violations are counted.
SweepReport segregating_sites_lln(const ExperimentConfig& cfg);

// Total-variation distance between the empirical spectrum law and the
// absorption oracle, with the 3-sigma multinomial noise bound.
SweepReport exact_vs_mc(const ExperimentConfig& cfg);

SweepReport run_experiment(const ExperimentConfig& cfg);

} // namespace allelic
