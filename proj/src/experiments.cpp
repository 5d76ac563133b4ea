#include "allelic/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "allelic/exact.hpp"
#include "allelic/math.hpp"
#include "allelic/parallel.hpp"
#include "allelic/simulate.hpp"
#include "allelic/stats.hpp"

namespace allelic {

namespace {

using nlohmann::json;

constexpr double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::int64_t> parse_grid(const std::string& text) {
    std::vector<std::int64_t> grid;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        grid.push_back(std::stoll(item));
    }
    return grid;
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "experiment") cfg.experiment = value;
    else if (key == "model") cfg.model = value;
    else if (key == "rho") cfg.rho = std::stod(value);
    else if (key == "alpha") cfg.alpha = std::stod(value);
    else if (key == "d" || key == "k_max") cfg.k_max = std::stoll(value);
    else if (key == "n_grid") cfg.n_grid = parse_grid(value);
    else if (key == "replicates") cfg.replicates = std::stoll(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "t0") cfg.t0 = std::stod(value);
    else if (key == "grid_step") cfg.grid_step = std::stod(value);
    else if (key == "n" || key == "n_exact") cfg.n_exact = std::stoll(value);
    else if (key == "chi_n") cfg.chi_n = std::stoll(value);
    else if (key == "chi_replicates") cfg.chi_replicates = std::stoll(value);
    else if (key == "fluct_n") cfg.fluct_n = std::stoll(value);
    else if (key == "fluct_replicates") cfg.fluct_replicates = std::stoll(value);
    else if (key == "trend_alpha") cfg.trend_alpha = std::stod(value);
    else if (key == "tolerance") cfg.tolerance = std::stod(value);
    else if (key == "tv_tolerance") cfg.tv_tolerance = std::stod(value);
    else if (key == "threads") cfg.threads = std::stoi(value);
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::int64_t> default_grid(const std::string& experiment) {
    if (experiment == "scalings" || experiment == "sites") return {1000, 10000, 100000, 1000000};
    if (experiment == "fluid-distance" || experiment == "kingman") return {1000, 10000, 100000};
    if (experiment == "beta") return {100, 300, 1000, 3000};
    return {};
}

double spectrum_count(const RunResult& r, std::int64_t k) {
    const auto it = r.spectrum.find(k);
    return it == r.spectrum.end() ? 0.0 : static_cast<double>(it->second);
}

struct TrendCheck {
    bool nonincreasing = false;
    double p_value = 1.0;
};

TrendCheck trend_of(const std::vector<double>& abs_errors) {
    const auto t = spearman_decreasing_trend(abs_errors);
    return {t.nonincreasing, t.p_value};
}

void add_trend_criterion(SweepReport& rep, const std::string& name, const std::vector<double>& abs_errors) {
    if (abs_errors.size() < 2) return; // nothing to trend on a single-point grid
    const auto t = trend_of(abs_errors);
    CriterionResult c;
    c.name = name;
    c.pass = t.nonincreasing && t.p_value <= rep.config.trend_alpha;
    c.value = t.p_value;
    c.threshold = rep.config.trend_alpha;
    std::ostringstream os;
    os << "abs errors along n grid:";
    for (double e : abs_errors) os << ' ' << fmt(e);
    c.detail = os.str();
    rep.criteria.push_back(std::move(c));
}

std::uint64_t subseed(std::uint64_t base, std::uint64_t stream) { return derive_seed(base, 0xabcd0000ULL + stream); }

} // namespace

std::int64_t resolved_replicates(const ExperimentConfig& cfg, std::int64_t n) {
    if (cfg.replicates > 0) return cfg.replicates;
    const double scaled = 200.0 * std::cbrt(1e6 / static_cast<double>(n));
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::llround(scaled)), 200, 2000);
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    ExperimentConfig cfg;
    const std::string trimmed = trim(text);
    if (!trimmed.empty() && trimmed.front() == '{') {
        const json j = json::parse(trimmed);
        for (const auto& [key, value] : j.items()) {
            if (value.is_string()) {
                apply_key(cfg, key, value.get<std::string>());
            } else if (key == "n_grid" && value.is_array()) {
                cfg.n_grid.clear();
                for (const auto& v : value) cfg.n_grid.push_back(v.get<std::int64_t>());
            } else {
                apply_key(cfg, key, value.dump());
            }
        }
    } else {
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("malformed config line '" + line + "'");
            apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }
    if (cfg.experiment.empty()) throw std::invalid_argument("config must name an experiment");
    if (cfg.n_grid.empty()) cfg.n_grid = default_grid(cfg.experiment);
    if (!std::is_sorted(cfg.n_grid.begin(), cfg.n_grid.end())) {
        throw std::invalid_argument("n_grid must be increasing");
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_experiment_config(os.str());
}

bool SweepReport::pass() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.pass; });
}

std::string SweepReport::to_csv() const {
    std::ostringstream os;
    os << "experiment,n,observable,replicates,mean,half_width,target,abs_error\n";
    for (const auto& row : rows) {
        os << experiment << ',' << row.n << ',' << row.observable << ',' << row.replicates << ',' << fmt(row.mean)
           << ',' << fmt(row.half_width) << ',' << fmt(row.target) << ','
           << fmt(std::isnan(row.target) ? nan_value() : std::fabs(row.mean - row.target)) << '\n';
    }
    return os.str();
}

std::string SweepReport::to_summary_json() const {
    json j;
    j["schema"] = 1;
    j["experiment"] = experiment;
    json jc;
    jc["experiment"] = config.experiment;
    jc["model"] = config.model;
    jc["rho"] = config.rho;
    jc["alpha"] = config.alpha;
    jc["k_max"] = config.k_max;
    jc["n_grid"] = config.n_grid;
    jc["replicates"] = config.replicates;
    jc["seed"] = config.seed;
    jc["out_dir"] = config.out_dir;
    jc["t0"] = config.t0;
    jc["grid_step"] = config.grid_step;
    jc["n_exact"] = config.n_exact;
    jc["chi_n"] = config.chi_n;
    jc["chi_replicates"] = config.chi_replicates;
    jc["fluct_n"] = config.fluct_n;
    jc["fluct_replicates"] = config.fluct_replicates;
    jc["trend_alpha"] = config.trend_alpha;
    jc["tolerance"] = config.tolerance;
    jc["tv_tolerance"] = config.tv_tolerance;
    j["config"] = jc;
    j["criteria"] = json::array();
    for (const auto& c : criteria) {
        json e;
        e["name"] = c.name;
        e["pass"] = c.pass;
        e["value"] = c.value;
        e["threshold"] = c.threshold;
        e["detail"] = c.detail;
        j["criteria"].push_back(e);
    }
    j["pass"] = pass();
    return j.dump(2);
}

SweepReport spectrum_scaling_sweep(const ExperimentConfig& cfg) {
    SweepReport rep;
    rep.experiment = "scalings";
    rep.config = cfg;
    const LambdaModel model = parse_model_spec(cfg.model);
    const std::int64_t d = cfg.k_max;
    auto cache = std::make_shared<RateTableCache>(model);
    const std::uint64_t freeze_base = subseed(cfg.seed, 1);
    const std::uint64_t sites_base = subseed(cfg.seed, 2);

    std::map<std::string, std::pair<double, std::vector<double>>> abs_errors; // target, errors per n
    const auto target_for = [&](std::int64_t k) {
        return k <= 1 ? cfg.rho : cfg.rho / (static_cast<double>(k) * static_cast<double>(k - 1));
    };

    for (const std::int64_t n : cfg.n_grid) {
        const std::int64_t reps = resolved_replicates(cfg, n);
        const double ln = std::log(static_cast<double>(n));
        const double nd = static_cast<double>(n);
        std::vector<std::vector<double>> nk(static_cast<std::size_t>(d) + 1,
                                            std::vector<double>(static_cast<std::size_t>(reps)));
        std::vector<double> n_all(static_cast<std::size_t>(reps));
        std::vector<double> s_all(static_cast<std::size_t>(reps));
        SimOptions opt;
        opt.mode = SimMode::Truncated;
        opt.d = d;
        opt.cache = cache;
        parallel_replicates(reps, cfg.threads, [&](std::int64_t r) {
            const auto res = simulate_freeze(model, cfg.rho, n, opt, derive_seed(freeze_base, static_cast<std::uint64_t>(r)));
            nk[1][static_cast<std::size_t>(r)] = spectrum_count(res, 1) * ln / nd;
            for (std::int64_t k = 2; k <= d; ++k) {
                nk[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = spectrum_count(res, k) * ln * ln / nd;
            }
            n_all[static_cast<std::size_t>(r)] = static_cast<double>(res.n_total) * ln / nd;
            const auto ts = simulate_tree_stats(model, cfg.rho, n, derive_seed(sites_base, static_cast<std::uint64_t>(r)), cache);
            s_all[static_cast<std::size_t>(r)] = static_cast<double>(ts.s_count) * ln / nd;
        });

        const auto push = [&](const std::string& name, const std::vector<double>& samples, double target) {
            const auto ci = mean_with_ci(samples);
            rep.rows.push_back({n, name, reps, ci.mean, ci.half_width, target});
            auto& slot = abs_errors[name];
            slot.first = target;
            slot.second.push_back(std::fabs(ci.mean - target));
        };
        for (std::int64_t k = 1; k <= d; ++k) {
            push("N" + std::to_string(k), nk[static_cast<std::size_t>(k)], target_for(k));
        }
        push("N", n_all, cfg.rho);
        push("S", s_all, cfg.rho);
    }
    for (const auto& [name, data] : abs_errors) {
        add_trend_criterion(rep, "trend_" + name, data.second);
    }
    return rep;
}

SweepReport fluid_distance_sweep(const ExperimentConfig& cfg) {
    SweepReport rep;
    rep.experiment = "fluid-distance";
    rep.config = cfg;
    const LambdaModel model = parse_model_spec(cfg.model);
    const std::int64_t d = cfg.k_max;
    auto cache = std::make_shared<RateTableCache>(model);
    const std::uint64_t base = subseed(cfg.seed, 3);

    std::vector<double> grid;
    for (double t = 0.0; t < cfg.t0 + 1e-12; t += cfg.grid_step) grid.push_back(std::min(t, cfg.t0));
    if (grid.back() < cfg.t0) grid.push_back(cfg.t0);

    std::vector<std::vector<double>> closed(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) closed[i] = fluid_closed_form(d, cfg.rho, grid[i]);

    std::vector<double> medians;
    std::vector<double> exceed05;
    for (const std::int64_t n : cfg.n_grid) {
        const std::int64_t reps = resolved_replicates(cfg, n);
        std::vector<double> sup(static_cast<std::size_t>(reps));
        SimOptions opt;
        opt.mode = SimMode::Truncated;
        opt.d = d;
        opt.sample_times = grid;
        opt.cache = cache;
        parallel_replicates(reps, cfg.threads, [&](std::int64_t r) {
            const auto res = simulate_freeze(model, cfg.rho, n, opt, derive_seed(base, static_cast<std::uint64_t>(r)));
            double worst = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                double dist2 = 0.0;
                for (std::size_t c = 0; c < closed[i].size(); ++c) {
                    dist2 += sqr(res.trajectory.values[i][c] - closed[i][c]);
                }
                worst = std::max(worst, std::sqrt(dist2));
            }
            sup[static_cast<std::size_t>(r)] = worst;
        });

        const double ln = std::log(static_cast<double>(n));
        const double thr025 = std::pow(ln, (0.25 - 1.0) / 2.0);
        const double thr05 = std::pow(ln, (0.5 - 1.0) / 2.0);
        const double median = sample_quantile(sup, 0.5);
        const double q90 = sample_quantile(sup, 0.9);
        const auto frac_over = [&](double thr) {
            std::int64_t c = 0;
            for (double v : sup) {
                if (v > thr) ++c;
            }
            return static_cast<double>(c) / static_cast<double>(sup.size());
        };
        const auto ci = mean_with_ci(sup);
        rep.rows.push_back({n, "sup_distance_mean", reps, ci.mean, ci.half_width, nan_value()});
        rep.rows.push_back({n, "sup_distance_median", reps, median, 0.0, nan_value()});
        rep.rows.push_back({n, "sup_distance_q90", reps, q90, 0.0, nan_value()});
        rep.rows.push_back({n, "exceed_frac_delta025", reps, frac_over(thr025), 0.0, nan_value()});
        rep.rows.push_back({n, "exceed_frac_delta05", reps, frac_over(thr05), 0.0, nan_value()});
        medians.push_back(median);
        exceed05.push_back(frac_over(thr05));
    }

    CriterionResult med;
    med.name = "median_strictly_decreasing";
    med.pass = true;
    for (std::size_t i = 1; i < medians.size(); ++i) {
        if (!(medians[i] < medians[i - 1])) med.pass = false;
    }
    med.value = medians.empty() ? 0.0 : medians.back();
    med.threshold = medians.empty() ? 0.0 : medians.front();
    {
        std::ostringstream os;
        os << "medians:";
        for (double m : medians) os << ' ' << fmt(m);
        med.detail = os.str();
    }
    rep.criteria.push_back(med);

    CriterionResult exc;
    exc.name = "exceedance_nonincreasing_delta05";
    exc.pass = true;
    for (std::size_t i = 1; i < exceed05.size(); ++i) {
        if (exceed05[i] > exceed05[i - 1]) exc.pass = false;
    }
    exc.value = exceed05.empty() ? 0.0 : exceed05.back();
    exc.threshold = exceed05.empty() ? 0.0 : exceed05.front();
    {
        std::ostringstream os;
        os << "fractions over (log n)^-0.25:";
        for (double f : exceed05) os << ' ' << fmt(f);
        exc.detail = os.str();
    }
    rep.criteria.push_back(exc);
    return rep;
}

SweepReport kingman_baseline(const ExperimentConfig& cfg) {
    SweepReport rep;
    rep.experiment = "kingman";
    rep.config = cfg;
    const LambdaModel model = LambdaModel::kingman();
    const double theta = 2.0 * cfg.rho;
    const std::uint64_t base_a = subseed(cfg.seed, 4);
    const std::uint64_t base_chi = subseed(cfg.seed, 5);
    const std::uint64_t base_fluct = subseed(cfg.seed, 6);

    // (a) N(n)/log n near 1 (theta = 1)
    std::vector<double> n_errors;
    for (const std::int64_t n : cfg.n_grid) {
        const std::int64_t reps = resolved_replicates(cfg, n);
        const double ln = std::log(static_cast<double>(n));
        std::vector<double> samples(static_cast<std::size_t>(reps));
        SimOptions opt;
        opt.mode = SimMode::Truncated;
        opt.d = 1;
        parallel_replicates(reps, cfg.threads, [&](std::int64_t r) {
            const auto res = simulate_freeze(model, cfg.rho, n, opt, derive_seed(base_a, static_cast<std::uint64_t>(r)));
            samples[static_cast<std::size_t>(r)] = static_cast<double>(res.n_total) / ln;
        });
        const auto ci = mean_with_ci(samples);
        rep.rows.push_back({n, "N_over_log_n", reps, ci.mean, ci.half_width, 1.0});
        n_errors.push_back(std::fabs(ci.mean - 1.0));
    }
    {
        CriterionResult c;
        c.name = "N_over_log_n_nonincreasing";
        c.pass = true;
        for (std::size_t i = 1; i < n_errors.size(); ++i) {
            if (n_errors[i] > n_errors[i - 1]) c.pass = false;
        }
        c.value = n_errors.back();
        c.threshold = cfg.tolerance;
        c.pass = c.pass && n_errors.back() <= cfg.tolerance;
        rep.criteria.push_back(c);
    }

    // (b) spectrum counts against Poisson(theta/k)
    {
        std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(cfg.k_max) + 1,
                                                      std::vector<std::int64_t>(static_cast<std::size_t>(cfg.chi_replicates)));
        SimOptions opt;
        opt.mode = SimMode::Truncated;
        opt.d = cfg.k_max;
        parallel_replicates(cfg.chi_replicates, cfg.threads, [&](std::int64_t r) {
            const auto res = simulate_freeze(model, cfg.rho, cfg.chi_n, opt, derive_seed(base_chi, static_cast<std::uint64_t>(r)));
            for (std::int64_t k = 1; k <= cfg.k_max; ++k) {
                counts[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] =
                    static_cast<std::int64_t>(spectrum_count(res, k));
            }
        });
        for (std::int64_t k = 1; k <= cfg.k_max; ++k) {
            const double mean = theta / static_cast<double>(k);
            const auto gof = chi_square_poisson_gof(counts[static_cast<std::size_t>(k)], mean);
            rep.rows.push_back({cfg.chi_n, "chi2_p_N" + std::to_string(k), cfg.chi_replicates, gof.p_value, 0.0, nan_value()});
            CriterionResult c;
            c.name = "poisson_law_N" + std::to_string(k);
            c.value = gof.p_value;
            c.threshold = 0.01;
            c.pass = gof.p_value > 0.01;
            std::ostringstream os;
            os << "chi2=" << fmt(gof.statistic) << " df=" << fmt(gof.df) << " target mean=" << fmt(mean);
            c.detail = os.str();
            rep.criteria.push_back(std::move(c));
        }
    }

    // (c) fluctuation of N around log n. The exact finite-n mean of
    // (N - log n)/sqrt(log n) is (sum_i theta/(theta+i) - log n)/sqrt(log n),
    // which is the frozen target here (the Euler-Mascheroni offset does not
    // vanish at reachable n).
    {
        const double ln = std::log(static_cast<double>(cfg.fluct_n));
        KahanSum hsum;
        for (std::int64_t i = 0; i < cfg.fluct_n; ++i) hsum.add(theta / (theta + static_cast<double>(i)));
        const double center = (hsum.value() - ln) / std::sqrt(ln);
        std::vector<double> fluct(static_cast<std::size_t>(cfg.fluct_replicates));
        SimOptions opt;
        opt.mode = SimMode::Truncated;
        opt.d = 1;
        parallel_replicates(cfg.fluct_replicates, cfg.threads, [&](std::int64_t r) {
            const auto res = simulate_freeze(model, cfg.rho, cfg.fluct_n, opt, derive_seed(base_fluct, static_cast<std::uint64_t>(r)));
            fluct[static_cast<std::size_t>(r)] = (static_cast<double>(res.n_total) - ln) / std::sqrt(ln);
        });
        const auto ci = mean_with_ci(fluct);
        rep.rows.push_back({cfg.fluct_n, "fluctuation_mean", cfg.fluct_replicates, ci.mean, ci.half_width, center});
        CriterionResult c;
        c.name = "fluctuation_mean_within_0.05";
        c.value = std::fabs(ci.mean - center);
        c.threshold = 0.05;
        c.pass = c.value <= 0.05;
        c.detail = "exact center " + fmt(center);
        rep.criteria.push_back(std::move(c));

        const auto jb = jarque_bera(fluct);
        rep.rows.push_back({cfg.fluct_n, "fluctuation_jb_stat", cfg.fluct_replicates, jb.statistic, 0.0, nan_value()});
        CriterionResult cjb;
        cjb.name = "fluctuation_normality_jb_1pct";
        cjb.value = jb.p_value;
        cjb.threshold = 0.01;
        cjb.pass = jb.p_value > 0.01;
        cjb.detail = "JB=" + fmt(jb.statistic) + "; finite-n skew of N is real and detectable at this replicate count";
        rep.criteria.push_back(std::move(cjb));
    }
    return rep;
}

SweepReport beta_limits(const ExperimentConfig& cfg) {
    SweepReport rep;
    rep.experiment = "beta";
    rep.config = cfg;
    if (!(cfg.alpha > 1.0) || !(cfg.alpha < 2.0)) throw std::invalid_argument("beta_limits requires alpha in (1,2)");
    const LambdaModel model = LambdaModel::beta(cfg.alpha);
    auto cache = std::make_shared<RateTableCache>(model);
    const std::uint64_t base = subseed(cfg.seed, 7);
    const double a = cfg.alpha;

    const double n_constant = cfg.rho * a * (a - 1.0) * std::tgamma(a) / (2.0 - a);
    const auto k_constant = [&](std::int64_t k) {
        return cfg.rho * a * sqr(a - 1.0) * std::tgamma(static_cast<double>(k) + a - 2.0) /
               std::tgamma(static_cast<double>(k) + 1.0);
    };

    std::map<std::string, std::pair<double, std::vector<double>>> abs_errors;
    for (const std::int64_t n : cfg.n_grid) {
        const std::int64_t reps = resolved_replicates(cfg, n);
        const double scale = std::pow(static_cast<double>(n), a - 2.0);
        std::vector<double> n_all(static_cast<std::size_t>(reps));
        std::vector<std::vector<double>> nk(static_cast<std::size_t>(cfg.k_max) + 1,
                                            std::vector<double>(static_cast<std::size_t>(reps)));
        SimOptions opt;
        opt.mode = SimMode::Full;
        opt.cache = cache;
        parallel_replicates(reps, cfg.threads, [&](std::int64_t r) {
            const auto res = simulate_freeze(model, cfg.rho, n, opt, derive_seed(base, static_cast<std::uint64_t>(r)));
            n_all[static_cast<std::size_t>(r)] = static_cast<double>(res.n_total) * scale;
            for (std::int64_t k = 1; k <= cfg.k_max; ++k) {
                nk[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = spectrum_count(res, k) * scale;
            }
        });
        const auto push = [&](const std::string& name, const std::vector<double>& samples, double target) {
            const auto ci = mean_with_ci(samples);
            rep.rows.push_back({n, name, reps, ci.mean, ci.half_width, target});
            auto& slot = abs_errors[name];
            slot.first = target;
            slot.second.push_back(std::fabs(ci.mean - target));
        };
        push("N", n_all, n_constant);
        for (std::int64_t k = 1; k <= cfg.k_max; ++k) push("N" + std::to_string(k), nk[static_cast<std::size_t>(k)], k_constant(k));
    }
    for (const auto& [name, data] : abs_errors) add_trend_criterion(rep, "trend_" + name, data.second);

    if (2.0 - a < 0.05) {
        CriterionResult c;
        c.name = "N_constant_diverges";
        c.pass = true; // informational flag, not a failure
        c.value = n_constant;
        c.threshold = 0.0;
        c.detail = "alpha close to 2: the N limit constant has a pole at alpha=2";
        rep.criteria.push_back(std::move(c));
    }
    return rep;
}

SweepReport segregating_sites_lln(const ExperimentConfig& cfg) {
    SweepReport rep;
    rep.experiment = "sites";
    rep.config = cfg;
    const LambdaModel model = parse_model_spec(cfg.model);
    auto cache = std::make_shared<RateTableCache>(model);
    const std::uint64_t base = subseed(cfg.seed, 8);

    std::vector<double> abs_errors;
    std::int64_t violations = 0;
    for (const std::int64_t n : cfg.n_grid) {
        const std::int64_t reps = resolved_replicates(cfg, n);
        const double ln = std::log(static_cast<double>(n));
        const double nd = static_cast<double>(n);
        std::vector<double> s_all(static_cast<std::size_t>(reps));
        std::vector<std::int64_t> bad(static_cast<std::size_t>(reps), 0);
        SimOptions opt;
        opt.mode = SimMode::Truncated;
        opt.d = 1;
        opt.coupled_sites = true;
        opt.cache = cache;
        parallel_replicates(reps, cfg.threads, [&](std::int64_t r) {
            const auto res = simulate_freeze(model, cfg.rho, n, opt, derive_seed(base, static_cast<std::uint64_t>(r)));
            s_all[static_cast<std::size_t>(r)] = static_cast<double>(res.s_count) * ln / nd;
            if (res.s_count < res.n_skeleton) bad[static_cast<std::size_t>(r)] = 1;
        });
        std::int64_t bad_count = 0;
        for (auto b : bad) bad_count += b;
        violations += bad_count;
        const auto ci = mean_with_ci(s_all);
        rep.rows.push_back({n, "S", reps, ci.mean, ci.half_width, cfg.rho});
        rep.rows.push_back({n, "violations", reps, static_cast<double>(bad_count), 0.0, 0.0});
        abs_errors.push_back(std::fabs(ci.mean - cfg.rho));
    }
    add_trend_criterion(rep, "trend_S", abs_errors);
    CriterionResult c;
    c.name = "coupled_S_ge_N";
    c.pass = violations == 0;
    c.value = static_cast<double>(violations);
    c.threshold = 0.0;
    rep.criteria.push_back(std::move(c));
    return rep;
}

SweepReport exact_vs_mc(const ExperimentConfig& cfg) {
    SweepReport rep;
    rep.experiment = "exact-vs-mc";
    rep.config = cfg;
    const LambdaModel model = parse_model_spec(cfg.model);
    if (cfg.n_exact > 7) throw std::invalid_argument("exact_vs_mc guarded at n <= 7");
    const std::uint64_t base = subseed(cfg.seed, 9);
    const auto oracle = absorption_oracle(model, cfg.rho, cfg.n_exact);
    const std::int64_t reps = cfg.replicates > 0 ? cfg.replicates : 100000;

    std::vector<AlleleConfig> outcomes(static_cast<std::size_t>(reps));
    SimOptions opt;
    opt.mode = SimMode::Full;
    parallel_replicates(reps, cfg.threads, [&](std::int64_t r) {
        const auto res = simulate_freeze(model, cfg.rho, cfg.n_exact, opt, derive_seed(base, static_cast<std::uint64_t>(r)));
        std::vector<std::int64_t> m;
        for (const auto& [size, count] : res.spectrum) {
            if (size > static_cast<std::int64_t>(m.size())) m.resize(static_cast<std::size_t>(size), 0);
            m[static_cast<std::size_t>(size - 1)] = count;
        }
        outcomes[static_cast<std::size_t>(r)] = AlleleConfig(std::move(m));
    });
    std::unordered_map<AlleleConfig, std::int64_t, AlleleConfigHash> counts;
    for (const auto& cfg_out : outcomes) ++counts[cfg_out];

    const double m = static_cast<double>(reps);
    KahanSum tv;
    KahanSum bound;
    for (const auto& c : enumerate_configs(cfg.n_exact)) {
        const double p = oracle.prob(c);
        const auto it = counts.find(c);
        const double phat = it == counts.end() ? 0.0 : static_cast<double>(it->second) / m;
        tv.add(std::fabs(phat - p));
        bound.add(3.0 * std::sqrt(p * (1.0 - p) / m));
    }
    const double tv_dist = 0.5 * tv.value();
    const double tv_bound = 0.5 * bound.value();
    rep.rows.push_back({cfg.n_exact, "tv_distance", reps, tv_dist, 0.0, 0.0});
    rep.rows.push_back({cfg.n_exact, "tv_3sigma_bound", reps, tv_bound, 0.0, nan_value()});
    CriterionResult c;
    c.name = "tv_within_tolerance";
    c.pass = tv_dist <= cfg.tv_tolerance;
    c.value = tv_dist;
    c.threshold = cfg.tv_tolerance;
    rep.criteria.push_back(std::move(c));
    return rep;
}

SweepReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.experiment == "scalings") return spectrum_scaling_sweep(cfg);
    if (cfg.experiment == "fluid-distance") return fluid_distance_sweep(cfg);
    if (cfg.experiment == "kingman") return kingman_baseline(cfg);
    if (cfg.experiment == "beta") return beta_limits(cfg);
    if (cfg.experiment == "sites") return segregating_sites_lln(cfg);
    if (cfg.experiment == "exact-vs-mc" || cfg.experiment == "exact_vs_mc") return exact_vs_mc(cfg);
    throw std::invalid_argument("unknown experiment '" + cfg.experiment + "'");
}

} // namespace allelic
