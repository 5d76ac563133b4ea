#pragma once

#include <cstdint>
#include <vector>

namespace allelic {

// Deterministic trajectory of the (d+2)-vector (x_1..x_d, y_{d+1}, z_d).
struct FluidPath {
    std::int64_t d = 1;
    double rho = 0.0;
    std::vector<double> times;
    std::vector<std::vector<double>> values;
};

// Closed-form solution started from (1, 0, ..., 0):
//   x_1 = e^-t, x_k = t e^-t / (k(k-1)), y_{d+1} = t e^-t / d,
//   z_1 = rho (1-e^-t), z_k = rho/(k(k-1)) (1 - e^-t - t e^-t).
// Coordinate order (x_1,...,x_d, y_{d+1}, z_d).
std::vector<double> fluid_closed_form(std::int64_t d, double rho, double t);

// z_k(t) individually, 1 <= k (used by the CLI to emit all frozen columns)
double fluid_z(std::int64_t k, double rho, double t);

// The linear vector field b^(d):
//   b_1 = -xi_1, b_k = xi_1/(k(k-1)) - xi_k, b_{d+1} = xi_1/d - xi_{d+1},
//   b_{d+2} = rho xi_d.
std::vector<double> fluid_vector_field(std::int64_t d, double rho, const std::vector<double>& xi);

// Lipschitz constant of b^(d) in the Euclidean norm.
double fluid_lipschitz_constant(double rho);

// Fixed-step RK4 from the fluid initial condition. Records every step plus
// the final time.
FluidPath integrate_fluid_ode(std::int64_t d, double rho, double t_max, double step);

// Conversions between integer chain states m = (X_1..X_d, Y_{d+1}, Z_d) and
// rescaled coordinates xi. The frozen coordinate uses exponent r = 1 when
// d = 1 and r = 2 when d >= 2; this is the single authority for that switch.
std::vector<double> rescale_truncated_state(const std::vector<double>& m, std::int64_t n, std::int64_t d);
std::vector<double> unscale_truncated_state(const std::vector<double>& xi, std::int64_t n, std::int64_t d);

// Exact drift beta^{n,d}(m) of the Bolthausen-Sznitman coalescent with
// freeze in truncated state m = (m_1..m_d, m_{d+1}); the last coordinate of
// the result is the Z_d drift rho*m_d. Composition sums are enumerated with
// pruning; binomial ratios go through log space.
std::vector<double> exact_drift(double rho, std::int64_t d, const std::vector<std::int64_t>& m);

// Per-coordinate second moments alpha_k^{n,d}(m) of the jumps.
std::vector<double> exact_variance(double rho, std::int64_t d, const std::vector<std::int64_t>& m);

// Rescaled drift of the rescaled chain at the state with integer data m,
// i.e. the map (eqn scaling) applied to exact_drift.
std::vector<double> rescaled_drift(double rho, std::int64_t d, const std::vector<std::int64_t>& m, std::int64_t n);

// Rescaled infinitesimal variance (per coordinate).
std::vector<double> rescaled_variance(double rho, std::int64_t d, const std::vector<std::int64_t>& m, std::int64_t n);

// Analytic inequality checks: return (value, bound); the caller asserts.
struct BoundCheck {
    double value = 0.0;
    double bound = 0.0;
};

// |h(nx)/log n - 1| <= log R / log n for x in (1/n)Z intersect [1/R, 1]
BoundCheck harmonic_bound_check(std::int64_t n, double x, double R);

// 0 <= 1 - C(n,j)/C(n+k,j) <= kj/(n-j+1)
BoundCheck binom_ratio_bound_check(std::int64_t n, std::int64_t j, std::int64_t k);

} // namespace allelic
