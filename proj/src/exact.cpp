#include "allelic/exact.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "allelic/math.hpp"
#include "allelic/rates.hpp"

namespace allelic {

MoehleSolver::MoehleSolver(const LambdaModel& model, double rho) : model_(model), rho_(rho) {
    model_.validate();
    if (!(rho > 0.0)) throw std::invalid_argument("moehle_q requires rho > 0");
}

const std::vector<double>& MoehleSolver::group_rates(std::int64_t n) {
    auto it = group_rates_.find(n);
    if (it == group_rates_.end()) {
        it = group_rates_.emplace(n, build_rate_table(model_, n).group_rate).first;
    }
    return it->second;
}

double MoehleSolver::q(const AlleleConfig& cfg) {
    const std::int64_t n = cfg.sample_size();
    if (n < 1) throw std::domain_error("configuration has sample size 0");
    if (n == 1) return 1.0;
    auto memo = memo_.find(cfg);
    if (memo != memo_.end()) return memo->second;

    const auto& group = group_rates(n);
    KahanSum lambda_n;
    for (std::int64_t k = 2; k <= n; ++k) lambda_n.add(group[static_cast<std::size_t>(k)]);
    const double total = lambda_n.value() + static_cast<double>(n) * rho_;

    KahanSum acc;
    if (cfg.multiplicity(1) >= 1) {
        acc.add(static_cast<double>(n) * rho_ / total * q(cfg.with(1, -1)));
    }
    // merge of i+1 of the n initial singletons; the merged block plays the
    // role of a marked singleton in the (n-i)-sample and ends up in an
    // allelic block whose size it inflates by i
    for (std::int64_t i = 1; i <= n - 1; ++i) {
        const double w = group[static_cast<std::size_t>(i + 1)] / total;
        if (w == 0.0) continue;
        for (std::int64_t j = 1; j <= n - i; ++j) {
            if (cfg.multiplicity(i + j) < 1) continue;
            const AlleleConfig smaller = cfg.with(i + j, -1).with(j, +1);
            const double share =
                static_cast<double>(j) * static_cast<double>(cfg.multiplicity(j) + 1) / static_cast<double>(n - i);
            acc.add(w * share * q(smaller));
        }
    }
    const double value = acc.value();
    memo_.emplace(cfg, value);
    return value;
}

SpectrumDistribution MoehleSolver::distribution(std::int64_t n) {
    SpectrumDistribution dist;
    dist.n = n;
    dist.rho = rho_;
    dist.model = model_;
    KahanSum mass;
    for (const auto& cfg : enumerate_configs(n)) {
        const double p = q(cfg);
        dist.probs.emplace(cfg, p);
        mass.add(p);
    }
    dist.residual = std::fabs(mass.value() - 1.0);
    return dist;
}

double moehle_q(const LambdaModel& model, double rho, const AlleleConfig& cfg) {
    MoehleSolver solver(model, rho);
    return solver.q(cfg);
}

double ewens_q(double theta, const AlleleConfig& cfg) {
    if (!(theta > 0.0)) throw std::invalid_argument("ewens_q requires theta > 0");
    const std::int64_t n = cfg.sample_size();
    if (n < 1) throw std::domain_error("configuration has sample size 0");
    double log_q = std::lgamma(static_cast<double>(n) + 1.0);
    log_q += static_cast<double>(cfg.block_count()) * std::log(theta);
    for (std::int64_t i = 0; i < n; ++i) log_q -= std::log(theta + static_cast<double>(i));
    for (std::int64_t j = 1; j <= cfg.max_size(); ++j) {
        const double mj = static_cast<double>(cfg.multiplicity(j));
        if (mj == 0.0) continue;
        log_q -= mj * std::log(static_cast<double>(j));
        log_q -= std::lgamma(mj + 1.0);
    }
    return std::exp(log_q);
}

SpectrumDistribution ewens_distribution(double theta, std::int64_t n) {
    SpectrumDistribution dist;
    dist.n = n;
    dist.rho = theta / 2.0;
    dist.model = LambdaModel::kingman();
    KahanSum mass;
    for (const auto& cfg : enumerate_configs(n)) {
        const double p = ewens_q(theta, cfg);
        dist.probs.emplace(cfg, p);
        mass.add(p);
    }
    dist.residual = std::fabs(mass.value() - 1.0);
    return dist;
}

namespace {

// Active blocks as a sorted size multiset; exchangeability makes sizes a
// sufficient state.
struct OracleState {
    std::vector<std::int64_t> active; // ascending sizes
    AlleleConfig frozen;

    bool operator==(const OracleState& o) const { return active == o.active && frozen == o.frozen; }
};

struct OracleStateHash {
    std::size_t operator()(const OracleState& s) const {
        std::size_t h = AlleleConfigHash{}(s.frozen);
        for (auto v : s.active) {
            h ^= static_cast<std::size_t>(v) + 0x517cc1b727220a95ULL + (h << 6) + (h >> 2);
        }
        return h;
    }
};

// distinct sizes with counts, e.g. {1,1,3} -> {(1,2),(3,1)}
std::vector<std::pair<std::int64_t, std::int64_t>> size_classes(const std::vector<std::int64_t>& active) {
    std::vector<std::pair<std::int64_t, std::int64_t>> classes;
    for (auto s : active) {
        if (!classes.empty() && classes.back().first == s) {
            ++classes.back().second;
        } else {
            classes.emplace_back(s, 1);
        }
    }
    return classes;
}

void enumerate_selections(const std::vector<std::pair<std::int64_t, std::int64_t>>& classes, std::size_t idx,
                          std::int64_t left, double weight, std::vector<std::int64_t>& taken,
                          const std::function<void(const std::vector<std::int64_t>&, double)>& emit) {
    if (idx == classes.size()) {
        if (left == 0) emit(taken, weight);
        return;
    }
    const auto [size, count] = classes[idx];
    (void)size;
    for (std::int64_t a = 0; a <= std::min(left, count); ++a) {
        taken.push_back(a);
        enumerate_selections(classes, idx + 1, left - a, weight * binom(static_cast<double>(count), static_cast<double>(a)),
                             taken, emit);
        taken.pop_back();
    }
}

} // namespace

SpectrumDistribution absorption_oracle(const LambdaModel& model, double rho, std::int64_t n) {
    model.validate();
    if (!(rho > 0.0)) throw std::invalid_argument("absorption_oracle requires rho > 0");
    if (n < 1) throw std::domain_error("absorption_oracle requires n >= 1");
    if (n > 9) throw std::runtime_error("absorption_oracle guarded at n <= 9");

    SpectrumDistribution dist;
    dist.n = n;
    dist.rho = rho;
    dist.model = model;

    // mass flows through the DAG level by level: every jump strictly reduces
    // the active block count
    std::vector<std::unordered_map<OracleState, double, OracleStateHash>> levels(static_cast<std::size_t>(n) + 1);
    OracleState initial;
    initial.active.assign(static_cast<std::size_t>(n), 1);
    levels[static_cast<std::size_t>(n)].emplace(std::move(initial), 1.0);

    std::unordered_map<AlleleConfig, KahanSum, AlleleConfigHash> terminal;

    for (std::int64_t m = n; m >= 1; --m) {
        for (const auto& [state, prob] : levels[static_cast<std::size_t>(m)]) {
            const double freeze_rate = rho * static_cast<double>(m);
            const double merge_rate = m >= 2 ? total_merge_rate(model, m) : 0.0;
            const double total = freeze_rate + merge_rate;
            const auto classes = size_classes(state.active);

            // freezes: one block of some size leaves the active set
            for (const auto& [size, count] : classes) {
                const double p = prob * rho * static_cast<double>(count) / total;
                OracleState next = state;
                next.active.erase(std::find(next.active.begin(), next.active.end(), size));
                next.frozen = next.frozen.with(size, +1);
                if (next.active.empty()) {
                    terminal[next.frozen].add(p);
                } else {
                    auto& slot = levels[next.active.size()][next];
                    slot += p;
                }
            }

            // merges: any particular j-subset at rate lambda_{m,j}; subsets
            // grouped by per-class selection counts with multinomial weights
            if (m >= 2) {
                for (std::int64_t j = 2; j <= m; ++j) {
                    const double lam = collision_rate(model, m, j);
                    if (lam == 0.0) continue;
                    std::vector<std::int64_t> taken;
                    enumerate_selections(classes, 0, j, 1.0, taken, [&](const std::vector<std::int64_t>& sel, double ways) {
                        const double p = prob * lam * ways / total;
                        if (p == 0.0) return;
                        OracleState next = state;
                        std::int64_t merged = 0;
                        for (std::size_t c = 0; c < classes.size(); ++c) {
                            for (std::int64_t r = 0; r < sel[c]; ++r) {
                                next.active.erase(std::find(next.active.begin(), next.active.end(), classes[c].first));
                                merged += classes[c].first;
                            }
                        }
                        next.active.insert(std::lower_bound(next.active.begin(), next.active.end(), merged), merged);
                        auto& slot = levels[next.active.size()][next];
                        slot += p;
                    });
                }
            }
        }
        levels[static_cast<std::size_t>(m)].clear();
    }

    KahanSum mass;
    for (const auto& [cfg, sum] : terminal) {
        const double p = sum.value();
        dist.probs.emplace(cfg, p);
        mass.add(p);
    }
    dist.residual = std::fabs(mass.value() - 1.0);
    return dist;
}

} // namespace allelic
