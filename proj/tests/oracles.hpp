#pragma once
// Reference computations that share no code paths with the library's calculus:
// adaptive Simpson quadrature and divergence read off from a numerically integrated flow.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace divkit::testing {

using Vec = std::vector<double>;
using FieldFn = std::function<Vec(std::span<const double>)>;
using ScalarFn = std::function<double(std::span<const double>)>;

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return detail::simpson_step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50);
}

/// Flow of X for time t by classical Runge-Kutta.
inline Vec flow(const FieldFn& x, Vec p, double t, int steps = 16) {
    const double h = t / steps;
    const std::size_t n = p.size();
    auto axpy = [n](const Vec& a, double s, const Vec& b) {
        Vec r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = a[i] + s * b[i];
        return r;
    };
    for (int s = 0; s < steps; ++s) {
        const Vec k1 = x(p);
        const Vec k2 = x(axpy(p, h / 2, k1));
        const Vec k3 = x(axpy(p, h / 2, k2));
        const Vec k4 = x(axpy(p, h, k3));
        for (std::size_t i = 0; i < n; ++i) p[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return p;
}

inline double det(std::vector<Vec> m) {
    const std::size_t n = m.size();
    double d = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        if (m[piv][c] == 0.0) return 0.0;
        if (piv != c) {
            std::swap(m[piv], m[c]);
            d = -d;
        }
        d *= m[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m[r][c] / m[c][c];
            for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
        }
    }
    return d;
}

/// rho(phi_t(p)) * det D phi_t(p): the pulled-back density coefficient.
inline double pulled_back_density(const FieldFn& x, const ScalarFn& rho, const Vec& p, double t) {
    const std::size_t n = p.size();
    const double e = 1e-5;
    std::vector<Vec> jac(n, Vec(n));
    for (std::size_t j = 0; j < n; ++j) {
        Vec a = p, b = p;
        a[j] += e;
        b[j] -= e;
        const Vec fa = flow(x, a, t), fb = flow(x, b, t);
        for (std::size_t i = 0; i < n; ++i) jac[i][j] = (fa[i] - fb[i]) / (2 * e);
    }
    return rho(flow(x, p, t)) * det(jac);
}

/// Coefficient of L_X(rho dx) at p, from d/dt of the pulled-back density.
/// Central differences at tau and tau/2 combined by Richardson extrapolation.
inline double lie_top_by_flow(const FieldFn& x, const ScalarFn& rho, const Vec& p, double tau = 2e-3) {
    auto central = [&](double t) {
        return (pulled_back_density(x, rho, p, t) - pulled_back_density(x, rho, p, -t)) / (2 * t);
    };
    return (4.0 * central(tau / 2) - central(tau)) / 3.0;
}

/// div_rho(X) at p from the flow.
inline double divergence_by_flow(const FieldFn& x, const ScalarFn& rho, const Vec& p) {
    return lie_top_by_flow(x, rho, p) / rho(p);
}

}  // namespace divkit::testing
