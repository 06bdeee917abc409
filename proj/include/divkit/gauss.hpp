#pragma once
// Composite Gauss-Legendre quadrature on intervals and boxes.

#include <divkit/errors.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace divkit {

/// Gauss-Legendre nodes and weights on [-1, 1] plus the composite subdivision density.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int segments_per_unit = 8;

    int order() const { return static_cast<int>(nodes.size()); }

    /// Nodes are the roots of P_n, found by Newton iteration from the Chebyshev guess.
    static QuadratureRule gauss_legendre(int order = 16, int segments_per_unit = 8) {
        if (order < 1) throw PreconditionError("quadrature order must be positive");
        QuadratureRule rule;
        rule.segments_per_unit = segments_per_unit;
        rule.nodes.resize(static_cast<std::size_t>(order));
        rule.weights.resize(static_cast<std::size_t>(order));
        const int n = order;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0;
                double p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                if (n == 1) p0 = 1.0;
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            // Recompute the derivative at the converged root for the weight.
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            const auto lo = static_cast<std::size_t>(i);
            const auto hi = static_cast<std::size_t>(n - 1 - i);
            rule.nodes[lo] = -x;
            rule.nodes[hi] = x;
            rule.weights[lo] = w;
            rule.weights[hi] = w;
        }
        if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
        return rule;
    }

    static const QuadratureRule& standard() {
        static const QuadratureRule rule = gauss_legendre(16, 8);
        return rule;
    }

    /// Segment count used for an interval of the given length.
    int segments_for(double length) const {
        return std::max(1, static_cast<int>(std::ceil(segments_per_unit * length - 1e-12)));
    }
};

/// Composite Gauss-Legendre integral of `fn` over [a, b] with `segments` equal panels.
inline double gauss_segment(const std::function<double(double)>& fn, double a, double b,
                            const QuadratureRule& rule, int segments) {
    if (!(a < b)) throw PreconditionError("gauss_segment requires a < b");
    if (segments < 1) throw PreconditionError("segment count must be positive");
    const double h = (b - a) / segments;
    double total = 0.0;
    for (int s = 0; s < segments; ++s) {
        const double mid = a + (s + 0.5) * h;
        double panel = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) panel += rule.weights[k] * fn(mid + 0.5 * h * rule.nodes[k]);
        total += 0.5 * h * panel;
    }
    return total;
}

/// Segment count taken from the rule's density.
inline double gauss_segment(const std::function<double(double)>& fn, double a, double b,
                            const QuadratureRule& rule = QuadratureRule::standard()) {
    if (!(a < b)) throw PreconditionError("gauss_segment requires a < b");
    return gauss_segment(fn, a, b, rule, rule.segments_for(b - a));
}

/// Tensor-product composite Gauss over the box [lo, hi] with `cells` panels per axis.
inline double box_integral(const std::function<double(std::span<const double>)>& fn, std::span<const double> lo,
                           std::span<const double> hi, int cells, const QuadratureRule& rule) {
    const std::size_t n = lo.size();
    if (n == 0 || hi.size() != n) throw PreconditionError("box bounds mismatch");
    if (cells < 1) throw PreconditionError("resolution must be positive");
    // 1-D abscissae and weights per axis, then iterate the tensor grid with an odometer.
    const std::size_t per_axis = static_cast<std::size_t>(cells) * rule.nodes.size();
    std::vector<std::vector<double>> xs(n), ws(n);
    for (std::size_t d = 0; d < n; ++d) {
        if (!(lo[d] < hi[d])) throw PreconditionError("empty box");
        const double h = (hi[d] - lo[d]) / cells;
        xs[d].reserve(per_axis);
        ws[d].reserve(per_axis);
        for (int c = 0; c < cells; ++c) {
            const double mid = lo[d] + (c + 0.5) * h;
            for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                xs[d].push_back(mid + 0.5 * h * rule.nodes[k]);
                ws[d].push_back(0.5 * h * rule.weights[k]);
            }
        }
    }
    std::vector<std::size_t> idx(n, 0);
    std::vector<double> point(n);
    double total = 0.0;
    for (;;) {
        double w = 1.0;
        for (std::size_t d = 0; d < n; ++d) {
            point[d] = xs[d][idx[d]];
            w *= ws[d][idx[d]];
        }
        total += w * fn(point);
        std::size_t d = 0;
        while (d < n && ++idx[d] == per_axis) idx[d++] = 0;
        if (d == n) break;
    }
    return total;
}

}  // namespace divkit
