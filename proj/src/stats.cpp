#include "allelic/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "allelic/math.hpp"

namespace allelic {

MeanCi mean_with_ci(const std::vector<double>& samples, double level) {
    if (samples.empty()) throw std::invalid_argument("mean_with_ci: empty sample");
    KahanSum sum;
    for (double x : samples) sum.add(x);
    const double mean = sum.value() / static_cast<double>(samples.size());
    KahanSum sq;
    for (double x : samples) sq.add(sqr(x - mean));
    MeanCi out;
    out.mean = mean;
    out.count = samples.size();
    if (samples.size() > 1) {
        const double var = sq.value() / static_cast<double>(samples.size() - 1);
        // normal quantile for the two-sided level (replicate counts are large)
        const double z = level >= 0.99 ? 2.5758293035489004 : (level >= 0.95 ? 1.959963984540054 : 1.6448536269514722);
        out.half_width = z * std::sqrt(var / static_cast<double>(samples.size()));
    }
    return out;
}

double sample_quantile(std::vector<double> samples, double q) {
    if (samples.empty()) throw std::invalid_argument("sample_quantile: empty sample");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile level outside [0,1]");
    std::sort(samples.begin(), samples.end());
    const double pos = q * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, samples.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return samples[lo] * (1.0 - frac) + samples[hi] * frac;
}

double regularized_gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("regularized_gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    const double log_prefix = a * std::log(x) - x - std::lgamma(a);
    if (x < a + 1.0) {
        // series expansion
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(log_prefix);
    }
    // continued fraction for Q(a,x), modified Lentz
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 - std::exp(log_prefix) * h;
}

double chi_square_cdf(double x, double df) {
    if (x <= 0.0) return 0.0;
    return regularized_gamma_p(df / 2.0, x / 2.0);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double poisson_pmf(std::int64_t k, double mean) {
    if (k < 0) return 0.0;
    return std::exp(static_cast<double>(k) * std::log(mean) - mean - std::lgamma(static_cast<double>(k) + 1.0));
}

GofResult chi_square_poisson_gof(const std::vector<std::int64_t>& samples, double mean, double min_expected) {
    if (samples.empty()) throw std::invalid_argument("chi_square_poisson_gof: empty sample");
    const auto m = static_cast<double>(samples.size());
    std::map<std::int64_t, std::int64_t> observed;
    std::int64_t max_k = 0;
    for (auto k : samples) {
        ++observed[k];
        max_k = std::max(max_k, k);
    }
    // cells 0..K-1 plus a >=K tail, pooled from the right until every cell
    // has enough expected mass
    std::int64_t K = max_k + 1;
    std::vector<double> expected;
    std::vector<double> obs;
    for (;;) {
        expected.assign(static_cast<std::size_t>(K) + 1, 0.0);
        double cum = 0.0;
        for (std::int64_t k = 0; k < K; ++k) {
            expected[static_cast<std::size_t>(k)] = m * poisson_pmf(k, mean);
            cum += expected[static_cast<std::size_t>(k)];
        }
        expected[static_cast<std::size_t>(K)] = std::max(m - cum, 0.0);
        const bool tail_ok = expected[static_cast<std::size_t>(K)] >= min_expected;
        if (tail_ok || K == 1) break;
        --K;
    }
    obs.assign(static_cast<std::size_t>(K) + 1, 0.0);
    for (auto [k, c] : observed) {
        obs[static_cast<std::size_t>(std::min(k, K))] += static_cast<double>(c);
    }
    GofResult r;
    double stat = 0.0;
    std::int64_t cells = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (expected[i] <= 0.0) continue;
        stat += sqr(obs[i] - expected[i]) / expected[i];
        ++cells;
    }
    r.statistic = stat;
    r.df = static_cast<double>(std::max<std::int64_t>(cells - 1, 1));
    r.p_value = chi_square_p_value(stat, r.df);
    return r;
}

GofResult jarque_bera(const std::vector<double>& samples) {
    if (samples.size() < 8) throw std::invalid_argument("jarque_bera: sample too small");
    const auto m = static_cast<double>(samples.size());
    KahanSum s;
    for (double x : samples) s.add(x);
    const double mean = s.value() / m;
    KahanSum m2, m3, m4;
    for (double x : samples) {
        const double d = x - mean;
        m2.add(d * d);
        m3.add(d * d * d);
        m4.add(d * d * d * d);
    }
    const double v = m2.value() / m;
    const double skew = (m3.value() / m) / std::pow(v, 1.5);
    const double kurt = (m4.value() / m) / (v * v);
    GofResult r;
    r.statistic = m / 6.0 * (skew * skew + sqr(kurt - 3.0) / 4.0);
    r.df = 2.0;
    r.p_value = chi_square_p_value(r.statistic, 2.0);
    return r;
}

namespace {

double spearman_rho(const std::vector<double>& ranks) {
    // rho against the identity ranking 0..n-1
    const auto n = static_cast<double>(ranks.size());
    double sum_d2 = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) sum_d2 += sqr(ranks[i] - static_cast<double>(i));
    return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
}

std::vector<double> ranks_of(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<double>(r);
    // midranks for ties
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        if (j > i) {
            const double mid = 0.5 * static_cast<double>(i + j);
            for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        }
        i = j + 1;
    }
    return ranks;
}

} // namespace

TrendResult spearman_decreasing_trend(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2 || n > 8) throw std::invalid_argument("spearman trend implemented for 2..8 grid points");
    TrendResult out;
    out.nonincreasing = true;
    for (std::size_t i = 1; i < n; ++i) {
        if (values[i] > values[i - 1]) out.nonincreasing = false;
    }
    const auto ranks = ranks_of(values);
    out.rho = spearman_rho(ranks);

    // exact permutation null: p = P(rho_perm <= rho_observed)
    std::vector<double> perm(n);
    std::iota(perm.begin(), perm.end(), 0.0);
    std::int64_t total = 0;
    std::int64_t at_most = 0;
    do {
        ++total;
        if (spearman_rho(perm) <= out.rho + 1e-12) ++at_most;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.p_value = static_cast<double>(at_most) / static_cast<double>(total);
    return out;
}

} // namespace allelic
