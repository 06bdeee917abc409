#pragma once
// Box integrals, compactly supported bump fields, and the check that the
// divergence of a compactly supported field integrates to zero.

#include <divkit/divops.hpp>
#include <divkit/errors.hpp>
#include <divkit/expr.hpp>
#include <divkit/gauss.hpp>
#include <divkit/geometry.hpp>

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace divkit {

constexpr int kDefaultGridResolution = 64;

/// Tensor-product composite Gauss over the chart's box. Charts with excluded disks are refused.
inline double grid_integral(const std::function<double(std::span<const double>)>& fn, const Chart& chart,
                            int resolution = kDefaultGridResolution,
                            const QuadratureRule& rule = QuadratureRule::standard()) {
    if (chart.has_holes()) throw PreconditionError("grid_integral requires a chart without excluded disks");
    return box_integral(fn, chart.lo(), chart.hi(), resolution, rule);
}

/// X = prod_i bump((x_i - c_i) / r) d/dx^direction, supported in the open cube of half-side r.
inline VectorField bump_field(const ChartRef& chart, std::span<const double> center, double radius,
                              std::size_t direction) {
    const std::size_t n = chart->dim();
    if (center.size() != n) throw PreconditionError("bump center dimension mismatch");
    if (direction >= n) throw PreconditionError("bump direction out of range");
    if (!(radius > 0.0)) throw PreconditionError("bump radius must be positive");
    for (std::size_t i = 0; i < n; ++i)
        if (center[i] - radius < chart->lo()[i] || center[i] + radius > chart->hi()[i])
            throw PreconditionError("bump support overflows the chart box");
    for (const Disk& d : chart->disks()) {
        // Distance from the disk center to the support cube.
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double gap = std::max(0.0, std::abs(d.center[i] - center[i]) - radius);
            s += gap * gap;
        }
        if (std::sqrt(s) <= d.radius) throw PreconditionError("bump support meets an excluded disk");
    }
    Expr profile(1.0);
    for (std::size_t i = 0; i < n; ++i) profile = profile * bump((chart->coordinate(i) - Expr(center[i])) / Expr(radius));
    std::vector<Expr> comps(n, Expr(0.0));
    comps[direction] = profile;
    return {chart, std::move(comps)};
}

namespace detail {

/// Points on the faces of the chart box, `per_axis` per face direction.
inline std::vector<Point> boundary_ring(const Chart& chart, std::size_t per_axis = 64) {
    const std::size_t n = chart.dim();
    std::vector<Point> out;
    for (std::size_t d = 0; d < n; ++d)
        for (int side = 0; side < 2; ++side) {
            std::vector<std::size_t> idx(n, 0);
            for (;;) {
                Point p(n);
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == d) {
                        p[k] = side ? chart.hi()[k] : chart.lo()[k];
                    } else {
                        const double u = static_cast<double>(idx[k]) / static_cast<double>(per_axis - 1);
                        p[k] = chart.lo()[k] + u * (chart.hi()[k] - chart.lo()[k]);
                    }
                }
                out.push_back(std::move(p));
                std::size_t k = 0;
                while (k < n && (k == d || ++idx[k] == per_axis)) {
                    if (k != d) idx[k] = 0;
                    ++k;
                }
                if (k == n) break;
            }
        }
    return out;
}

inline void require_vanishing_on_boundary(const VectorField& x) {
    for (const Point& p : boundary_ring(*x.chart))
        for (const Expr& c : x.components)
            if (std::abs(eval(c, p)) > 1e-12)
                throw PreconditionError("vector field does not vanish on the chart boundary");
}

}  // namespace detail

/// Integral over the box of D(X) * weight. For D = div_Omega and weight = rho this is
/// the integral of div_Omega(X) Omega.
inline double integrate_divergence(const DivOperator& d, const Expr& weight, const VectorField& x,
                                   int resolution = kDefaultGridResolution) {
    require_same_chart(d.chart(), x.chart);
    detail::require_vanishing_on_boundary(x);
    if (d.is_symbolic()) {
        const Expr integrand = d.symbolic(x) * weight;
        return grid_integral([&](std::span<const double> p) { return eval(integrand, p); }, *x.chart, resolution);
    }
    return grid_integral([&](std::span<const double> p) { return d.apply(x, p) * eval(weight, p); }, *x.chart,
                         resolution);
}

/// Integral of div_Omega(X) Omega over the box, computed as the integral of the
/// coefficient of L_X Omega. Zero for compactly supported X.
inline double integral_vanishing_check(const VolumeForm& omega, const VectorField& x,
                                       int resolution = kDefaultGridResolution) {
    require_same_chart(omega.chart, x.chart);
    detail::require_vanishing_on_boundary(x);
    const Expr integrand = lie_derivative_top(x, omega);
    return grid_integral([&](std::span<const double> p) { return eval(integrand, p); }, *x.chart, resolution);
}

}  // namespace divkit
