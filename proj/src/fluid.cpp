#include "allelic/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "allelic/math.hpp"

namespace allelic {

namespace {

void check_d_rho(std::int64_t d, double rho) {
    if (d < 1) throw std::invalid_argument("d must be >= 1");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
}

std::int64_t z_exponent(std::int64_t d) { return d == 1 ? 1 : 2; }

} // namespace

double fluid_z(std::int64_t k, double rho, double t) {
    if (k == 1) return rho * (1.0 - std::exp(-t));
    const double kk = static_cast<double>(k) * static_cast<double>(k - 1);
    return rho / kk * (1.0 - std::exp(-t) - t * std::exp(-t));
}

std::vector<double> fluid_closed_form(std::int64_t d, double rho, double t) {
    check_d_rho(d, rho);
    if (t < 0.0) throw std::invalid_argument("t must be >= 0");
    std::vector<double> v(static_cast<std::size_t>(d) + 2, 0.0);
    const double et = std::exp(-t);
    v[0] = et;
    for (std::int64_t k = 2; k <= d; ++k) {
        v[static_cast<std::size_t>(k - 1)] = t * et / (static_cast<double>(k) * static_cast<double>(k - 1));
    }
    v[static_cast<std::size_t>(d)] = t * et / static_cast<double>(d);
    v[static_cast<std::size_t>(d) + 1] = fluid_z(d, rho, t);
    return v;
}

std::vector<double> fluid_vector_field(std::int64_t d, double rho, const std::vector<double>& xi) {
    check_d_rho(d, rho);
    if (xi.size() != static_cast<std::size_t>(d) + 2) throw std::invalid_argument("xi must have d+2 coordinates");
    std::vector<double> b(xi.size(), 0.0);
    b[0] = -xi[0];
    for (std::int64_t k = 2; k <= d; ++k) {
        b[static_cast<std::size_t>(k - 1)] =
            xi[0] / (static_cast<double>(k) * static_cast<double>(k - 1)) - xi[static_cast<std::size_t>(k - 1)];
    }
    b[static_cast<std::size_t>(d)] = xi[0] / static_cast<double>(d) - xi[static_cast<std::size_t>(d)];
    b[static_cast<std::size_t>(d) + 1] = rho * xi[static_cast<std::size_t>(d - 1)];
    return b;
}

double fluid_lipschitz_constant(double rho) {
    return std::sqrt(rho * rho + std::numbers::pi * std::numbers::pi / 3.0);
}

FluidPath integrate_fluid_ode(std::int64_t d, double rho, double t_max, double step) {
    check_d_rho(d, rho);
    if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");
    if (t_max < 0.0) throw std::invalid_argument("t_max must be >= 0");

    FluidPath path;
    path.d = d;
    path.rho = rho;
    std::vector<double> x = fluid_closed_form(d, rho, 0.0);
    path.times.push_back(0.0);
    path.values.push_back(x);

    const auto f = [&](const std::vector<double>& xi) { return fluid_vector_field(d, rho, xi); };
    const std::size_t dim = x.size();
    double t = 0.0;
    while (t < t_max) {
        const double h = std::min(step, t_max - t);
        const auto k1 = f(x);
        std::vector<double> tmp(dim);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        const auto k2 = f(tmp);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        const auto k3 = f(tmp);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + h * k3[i];
        const auto k4 = f(tmp);
        for (std::size_t i = 0; i < dim; ++i) {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        path.times.push_back(t);
        path.values.push_back(x);
    }
    return path;
}

std::vector<double> rescale_truncated_state(const std::vector<double>& m, std::int64_t n, std::int64_t d) {
    if (m.size() != static_cast<std::size_t>(d) + 2) throw std::invalid_argument("state must have d+2 coordinates");
    if (n < 2) throw std::invalid_argument("rescaling requires n >= 2");
    const double ln = std::log(static_cast<double>(n));
    const double nd = static_cast<double>(n);
    std::vector<double> xi(m.size());
    xi[0] = m[0] / nd;
    for (std::size_t i = 1; i <= static_cast<std::size_t>(d); ++i) xi[i] = m[i] * ln / nd;
    xi[static_cast<std::size_t>(d) + 1] =
        m[static_cast<std::size_t>(d) + 1] * std::pow(ln, static_cast<double>(z_exponent(d))) / nd;
    return xi;
}

std::vector<double> unscale_truncated_state(const std::vector<double>& xi, std::int64_t n, std::int64_t d) {
    if (xi.size() != static_cast<std::size_t>(d) + 2) throw std::invalid_argument("state must have d+2 coordinates");
    if (n < 2) throw std::invalid_argument("rescaling requires n >= 2");
    const double ln = std::log(static_cast<double>(n));
    const double nd = static_cast<double>(n);
    std::vector<double> m(xi.size());
    m[0] = xi[0] * nd;
    for (std::size_t i = 1; i <= static_cast<std::size_t>(d); ++i) m[i] = xi[i] * nd / ln;
    m[static_cast<std::size_t>(d) + 1] =
        xi[static_cast<std::size_t>(d) + 1] * nd / std::pow(ln, static_cast<double>(z_exponent(d)));
    return m;
}

namespace {

// sum over (b_1..b_{k-1}) with sum_l l*b_l = k, sum_l b_l = j, b_l <= m_l of
// prod_l C(m_l, b_l) / C(M, j)
double composition_sum(std::int64_t k, std::int64_t j, const std::vector<std::int64_t>& m, double log_choose_Mj) {
    KahanSum total;
    // descend over block sizes 1..k-1
    std::function<void(std::int64_t, std::int64_t, std::int64_t, double)> rec =
        [&](std::int64_t l, std::int64_t size_left, std::int64_t count_left, double log_w) {
            if (count_left == 0) {
                if (size_left == 0) total.add(std::exp(log_w - log_choose_Mj));
                return;
            }
            if (l > k - 1) return;
            // remaining blocks have size >= l, so size_left >= l*count_left
            if (size_left < l * count_left) return;
            const std::int64_t m_l = l <= static_cast<std::int64_t>(m.size()) ? m[static_cast<std::size_t>(l - 1)] : 0;
            const std::int64_t b_max = std::min({m_l, count_left, size_left / l});
            for (std::int64_t b = 0; b <= b_max; ++b) {
                rec(l + 1, size_left - l * b, count_left - b,
                    log_w + log_binom(static_cast<double>(m_l), static_cast<double>(b)));
            }
        };
    rec(1, k, j, 0.0);
    return total.value();
}

// sum_{j=2}^{k} M/(j(j-1)) * S_{k,j}: the rate of merges whose result is a
// block of size exactly k
double creation_rate(std::int64_t k, const std::vector<std::int64_t>& m, std::int64_t M) {
    KahanSum out;
    const double Md = static_cast<double>(M);
    for (std::int64_t j = 2; j <= std::min(k, M); ++j) {
        const double log_choose = log_binom(Md, static_cast<double>(j));
        const double s = composition_sum(k, j, m, log_choose);
        if (s != 0.0) out.add(Md / (static_cast<double>(j) * static_cast<double>(j - 1)) * s);
    }
    return out.value();
}

void check_truncated_state(double rho, std::int64_t d, const std::vector<std::int64_t>& m) {
    if (d < 1) throw std::invalid_argument("d must be >= 1");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
    if (m.size() != static_cast<std::size_t>(d) + 1) {
        throw std::invalid_argument("state must have d+1 entries (m_1..m_d, m_{d+1})");
    }
    std::int64_t M = 0;
    for (auto v : m) {
        if (v < 0) throw std::domain_error("negative block count");
        M += v;
    }
    if (M == 0) throw std::domain_error("absorbed state has no drift");
}

std::int64_t active_count(const std::vector<std::int64_t>& m) {
    std::int64_t M = 0;
    for (auto v : m) M += v;
    return M;
}

} // namespace

std::vector<double> exact_drift(double rho, std::int64_t d, const std::vector<std::int64_t>& m) {
    check_truncated_state(rho, d, m);
    const std::int64_t M = active_count(m);
    const double h = harmonic_number(M);
    std::vector<double> beta(static_cast<std::size_t>(d) + 2, 0.0);

    beta[0] = -rho * static_cast<double>(m[0]) - static_cast<double>(m[0]) * h;
    for (std::int64_t k = 2; k <= d; ++k) {
        const double mk = static_cast<double>(m[static_cast<std::size_t>(k - 1)]);
        beta[static_cast<std::size_t>(k - 1)] = -rho * mk - mk * h + creation_rate(k, m, M);
    }
    // tail coordinate: every merge not resolving to a size <= d creates one
    // tail block; total merge rate is M-1
    const double m_tail = static_cast<double>(m[static_cast<std::size_t>(d)]);
    double tail_creation = M >= 2 ? static_cast<double>(M - 1) : 0.0;
    for (std::int64_t k = 2; k <= d; ++k) tail_creation -= creation_rate(k, m, M);
    beta[static_cast<std::size_t>(d)] = -rho * m_tail - m_tail * h + tail_creation;
    beta[static_cast<std::size_t>(d) + 1] = rho * static_cast<double>(m[static_cast<std::size_t>(d - 1)]);
    return beta;
}

std::vector<double> exact_variance(double rho, std::int64_t d, const std::vector<std::int64_t>& m) {
    check_truncated_state(rho, d, m);
    const std::int64_t M = active_count(m);
    const double h = harmonic_number(M);
    std::vector<double> alpha(static_cast<std::size_t>(d) + 2, 0.0);

    const double m1 = static_cast<double>(m[0]);
    alpha[0] = rho * m1 + m1 * (m1 - 1.0) + m1 * h;
    for (std::int64_t k = 2; k <= d; ++k) {
        const double mk = static_cast<double>(m[static_cast<std::size_t>(k - 1)]);
        alpha[static_cast<std::size_t>(k - 1)] = rho * mk + mk * (mk - 1.0) + mk * h + creation_rate(k, m, M);
    }
    // tail: jump is 1 - b_tail on merges producing a tail block, -b_tail on
    // the rest, -1 on tail freezes; the hypergeometric moments collapse to
    // m(m-1) - m h(M) + (total tail-producing merge rate)
    const double m_tail = static_cast<double>(m[static_cast<std::size_t>(d)]);
    double tail_creation = M >= 2 ? static_cast<double>(M - 1) : 0.0;
    for (std::int64_t k = 2; k <= d; ++k) tail_creation -= creation_rate(k, m, M);
    alpha[static_cast<std::size_t>(d)] = rho * m_tail + m_tail * (m_tail - 1.0) - m_tail * h + tail_creation;
    alpha[static_cast<std::size_t>(d) + 1] = rho * static_cast<double>(m[static_cast<std::size_t>(d - 1)]);
    return alpha;
}

std::vector<double> rescaled_drift(double rho, std::int64_t d, const std::vector<std::int64_t>& m, std::int64_t n) {
    if (n < 2) throw std::invalid_argument("rescaling requires n >= 2");
    const auto beta = exact_drift(rho, d, m);
    const double nd = static_cast<double>(n);
    const double ln = std::log(nd);
    std::vector<double> out(beta.size());
    out[0] = beta[0] / (nd * ln);
    for (std::size_t i = 1; i <= static_cast<std::size_t>(d); ++i) out[i] = beta[i] / nd;
    const double r = static_cast<double>(z_exponent(d));
    out[static_cast<std::size_t>(d) + 1] = beta[static_cast<std::size_t>(d) + 1] * std::pow(ln, r - 1.0) / nd;
    return out;
}

std::vector<double> rescaled_variance(double rho, std::int64_t d, const std::vector<std::int64_t>& m, std::int64_t n) {
    if (n < 2) throw std::invalid_argument("rescaling requires n >= 2");
    const auto alpha = exact_variance(rho, d, m);
    const double nd = static_cast<double>(n);
    const double ln = std::log(nd);
    std::vector<double> out(alpha.size());
    out[0] = alpha[0] / (nd * nd * ln);
    for (std::size_t i = 1; i <= static_cast<std::size_t>(d); ++i) out[i] = alpha[i] * ln / (nd * nd);
    const double r = static_cast<double>(z_exponent(d));
    out[static_cast<std::size_t>(d) + 1] =
        alpha[static_cast<std::size_t>(d) + 1] * std::pow(ln, 2.0 * r - 1.0) / (nd * nd);
    return out;
}

BoundCheck harmonic_bound_check(std::int64_t n, double x, double R) {
    if (n < 2) throw std::domain_error("harmonic bound requires n >= 2");
    if (!(R > std::exp(1.0))) throw std::domain_error("harmonic bound requires R > e");
    if (x < 1.0 / R - 1e-12 || x > 1.0 + 1e-12) throw std::domain_error("x outside [1/R, 1]");
    const double nx = x * static_cast<double>(n);
    const std::int64_t rounded = static_cast<std::int64_t>(std::llround(nx));
    if (std::fabs(nx - static_cast<double>(rounded)) > 1e-9 || rounded < 1) {
        throw std::domain_error("x must be a multiple of 1/n");
    }
    const double ln = std::log(static_cast<double>(n));
    BoundCheck c;
    c.value = std::fabs(harmonic_number(rounded) / ln - 1.0);
    c.bound = std::log(R) / ln;
    return c;
}

BoundCheck binom_ratio_bound_check(std::int64_t n, std::int64_t j, std::int64_t k) {
    if (j < 0 || j > n || k < 0) throw std::domain_error("binom bound requires 0 <= j <= n, k >= 0");
    BoundCheck c;
    const double diff =
        log_binom(static_cast<double>(n), static_cast<double>(j)) -
        log_binom(static_cast<double>(n + k), static_cast<double>(j));
    c.value = -std::expm1(diff);
    c.bound = static_cast<double>(k) * static_cast<double>(j) / static_cast<double>(n - j + 1);
    return c;
}

} // namespace allelic
