#pragma once
// Sampled verification of the divergence-operator axioms:
//   cocycle   D([X,Y]) = X(D(Y)) - Y(D(X))
//   Leibniz   D(fX)    = f D(X) + s X(f)
// and of the Cartan identity L_[X,Y] = [L_X, L_Y] on top forms.

#include <divkit/divops.hpp>
#include <divkit/errors.hpp>
#include <divkit/expr.hpp>
#include <divkit/geometry.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace divkit {

// ---------------------------------------------------------------------------
// Fixture family. Bump kFixtureVersion whenever the manifest or generator changes.

constexpr int kFixtureVersion = 1;

struct FieldFixture {
    std::string label;
    VectorField field;
};

struct FunctionFixture {
    std::string label;
    Expr function;
};

namespace detail {

class UnitStream {
public:
    explicit UnitStream(std::uint64_t seed) : rng_(seed) {}
    double next() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * next(); }

private:
    std::mt19937_64 rng_;
};

inline void monomial_exponents(std::size_t n, int degree, std::vector<int>& current,
                               std::vector<std::vector<int>>& out) {
    if (current.size() == n) {
        out.push_back(current);
        return;
    }
    for (int a = 0; a <= degree; ++a) {
        current.push_back(a);
        monomial_exponents(n, degree - a, current, out);
        current.pop_back();
    }
}

/// Random polynomial of total degree <= `degree` with coefficients uniform in [-2, 2].
inline Expr random_polynomial(const Chart& chart, int degree, UnitStream& stream) {
    std::vector<std::vector<int>> exps;
    std::vector<int> cur;
    monomial_exponents(chart.dim(), degree, cur, exps);
    Expr out(0.0);
    for (const auto& e : exps) {
        Expr term(stream.uniform(-2.0, 2.0));
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] == 0) continue;
            const Expr xi = chart.coordinate(i);
            term = term * (e[i] == 1 ? xi : pow(xi, Expr(static_cast<double>(e[i]))));
        }
        out += term;
    }
    return out;
}

}  // namespace detail

/// Coordinate fields, rotation, dilation, a trigonometric field, then `n_random`
/// random polynomial fields of degree <= 3.
inline std::vector<FieldFixture> fixture_fields(const ChartRef& chart, std::size_t n_random, std::uint64_t seed) {
    const std::size_t n = chart->dim();
    std::vector<FieldFixture> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({"d/d" + chart->coordinates()[i], VectorField::coordinate(chart, i)});
    if (n >= 2) {
        std::vector<Expr> rot(n, Expr(0.0));
        rot[0] = -chart->coordinate(1);
        rot[1] = chart->coordinate(0);
        out.push_back({"rotation", VectorField(chart, rot)});
    }
    std::vector<Expr> dil, trig;
    for (std::size_t i = 0; i < n; ++i) {
        dil.push_back(chart->coordinate(i));
        const Expr next = chart->coordinate((i + 1) % n);
        trig.push_back(i % 2 == 0 ? sin(next) : cos(next));
    }
    out.push_back({"dilation", VectorField(chart, dil)});
    out.push_back({"trig", VectorField(chart, trig)});
    detail::UnitStream stream(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(kFixtureVersion));
    for (std::size_t r = 0; r < n_random; ++r) {
        std::vector<Expr> comps;
        for (std::size_t i = 0; i < n; ++i) comps.push_back(detail::random_polynomial(*chart, 3, stream));
        out.push_back({"poly" + std::to_string(r), VectorField(chart, comps)});
    }
    return out;
}

/// Test functions f for the Leibniz rule: fixed library plus `n_random` random polynomials.
inline std::vector<FunctionFixture> fixture_functions(const ChartRef& chart, std::size_t n_random,
                                                      std::uint64_t seed) {
    const std::size_t n = chart->dim();
    const Expr x = chart->coordinate(0);
    const Expr y = n >= 2 ? chart->coordinate(1) : chart->coordinate(0);
    std::vector<FunctionFixture> out;
    out.push_back({"x^2-y", pow(x, Expr(2.0)) - y});
    out.push_back({"sin(x)*y", sin(x) * y});
    out.push_back({"exp(x/2)", exp(x * Expr(0.5))});
    detail::UnitStream stream(~seed + static_cast<std::uint64_t>(kFixtureVersion));
    for (std::size_t r = 0; r < n_random; ++r)
        out.push_back({"fpoly" + std::to_string(r), detail::random_polynomial(*chart, 3, stream)});
    return out;
}

// ---------------------------------------------------------------------------
// Finite differences for black-box operators

/// Derivative of t -> g(p + t v) at t = 0 by the fourth-order central stencil.
/// The step shrinks by 10 once if a stencil point leaves the chart domain.
inline double directional_derivative(const std::function<double(std::span<const double>)>& g, const Chart& chart,
                                     std::span<const double> p, std::span<const double> v, double h) {
    const std::size_t n = p.size();
    Point q(n);
    auto at = [&](double t) {
        for (std::size_t i = 0; i < n; ++i) q[i] = p[i] + t * v[i];
        return g(q);
    };
    auto fits = [&](double step) {
        for (double t : {-2 * step, 2 * step}) {
            for (std::size_t i = 0; i < n; ++i) q[i] = p[i] + t * v[i];
            if (!chart.contains(q)) return false;
        }
        return true;
    };
    if (!fits(h)) {
        h /= 10.0;
        if (!fits(h)) throw DomainError("finite-difference stencil leaves the chart domain");
    }
    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
}

/// Default finite-difference step: 1e-5 times the shortest box side.
inline double default_fd_step(const Chart& chart) { return 1e-5 * chart.min_side(); }

// ---------------------------------------------------------------------------
// Residuals

/// D([X,Y]) - (X(D(Y)) - Y(D(X))) as an expression; D must be symbolic.
inline Expr cocycle_residual_expr(const DivOperator& d, const VectorField& x, const VectorField& y) {
    return d.symbolic(bracket(x, y)) - (apply_field(x, d.symbolic(y)) - apply_field(y, d.symbolic(x)));
}

/// Cocycle residual at p. Black-box operators are differentiated numerically along X(p) and Y(p).
inline double cocycle_residual(const DivOperator& d, const VectorField& x, const VectorField& y,
                               std::span<const double> p, std::optional<double> step = std::nullopt) {
    require_same_chart(d.chart(), x.chart);
    require_same_chart(d.chart(), y.chart);
    if (d.is_symbolic()) return eval(cocycle_residual_expr(d, x, y), p);
    const Chart& chart = *d.chart();
    const double h = step.value_or(default_fd_step(chart));
    const auto dy = [&](std::span<const double> q) { return d.apply(y, q); };
    const auto dx = [&](std::span<const double> q) { return d.apply(x, q); };
    const double x_dy = directional_derivative(dy, chart, p, x.at(p), h);
    const double y_dx = directional_derivative(dx, chart, p, y.at(p), h);
    return d.apply(bracket(x, y), p) - (x_dy - y_dx);
}

namespace detail {
inline VectorField scaled(const Expr& f, const VectorField& x) {
    std::vector<Expr> comps;
    for (const Expr& c : x.components) comps.push_back(f * c);
    return {x.chart, std::move(comps)};
}
}  // namespace detail

/// D(fX) - f D(X) - s X(f) as an expression; D must be symbolic.
inline Expr leibniz_residual_expr(const DivOperator& d, const Expr& f, const VectorField& x, double s) {
    return d.symbolic(detail::scaled(f, x)) - f * d.symbolic(x) - Expr(s) * apply_field(x, f);
}

inline double leibniz_residual(const DivOperator& d, const Expr& f, const VectorField& x, double s,
                               std::span<const double> p) {
    require_same_chart(d.chart(), x.chart);
    if (d.is_symbolic()) return eval(leibniz_residual_expr(d, f, x, s), p);
    return d.apply(detail::scaled(f, x), p) - eval(f, p) * d.apply(x, p) - s * eval(apply_field(x, f), p);
}

inline double leibniz_residual(const DivOperator& d, const Expr& f, const VectorField& x,
                               std::span<const double> p) {
    return leibniz_residual(d, f, x, 1.0, p);
}

/// Coefficient of (L_[X,Y] - L_X L_Y + L_Y L_X) applied to rho dx.
inline Expr cartan_identity_expr(const VectorField& x, const VectorField& y, const Expr& density) {
    require_same_chart(x.chart, y.chart);
    return lie_derivative_top(bracket(x, y), density) -
           (lie_derivative_top(x, lie_derivative_top(y, density)) - lie_derivative_top(y, lie_derivative_top(x, density)));
}

inline double cartan_identity_residual(const VectorField& x, const VectorField& y, const VolumeForm& omega,
                                       std::span<const double> p) {
    require_same_chart(x.chart, omega.chart);
    return eval(cartan_identity_expr(x, y, omega.density), p);
}

// ---------------------------------------------------------------------------
// Reports

struct FixtureResidual {
    std::string check;
    std::string label;
    double max_abs = 0.0;
    double value = 0.0;  // signed residual at the maximizing point
    Point argmax;
};

/// Aggregate of sampled residuals. pass <=> max_abs <= tol. A run whose skip rate
/// exceeds 10% reports max_abs = +inf.
struct ResidualReport {
    std::string check;
    std::size_t sample_count = 0;
    std::size_t evaluations = 0;
    std::size_t skipped = 0;
    double max_abs = 0.0;
    double value = 0.0;
    Point argmax;
    std::string witness;  // "<check> <fixture label>"
    std::vector<FixtureResidual> breakdown;
    double tol = 0.0;
    bool pass = true;

    /// Largest residual among breakdown entries of one check ("cocycle", "leibniz", ...).
    double max_for(std::string_view name) const {
        double m = 0.0;
        for (const auto& b : breakdown)
            if (b.check == name) m = std::max(m, b.max_abs);
        return m;
    }

    void absorb(FixtureResidual entry) {
        if (entry.max_abs > max_abs || (witness.empty() && entry.max_abs >= max_abs)) {
            max_abs = entry.max_abs;
            value = entry.value;
            argmax = entry.argmax;
            witness = entry.check + " " + entry.label;
        }
        breakdown.push_back(std::move(entry));
    }

    void finish() {
        if (evaluations > 0 && skipped * 10 > evaluations) {
            max_abs = std::numeric_limits<double>::infinity();
            witness = "skip rate above 10%";
        }
        pass = max_abs <= tol;
    }
};

struct AxiomConfig {
    std::uint64_t seed = 1;
    std::size_t n_points = 100;
    std::size_t n_fields = 8;
    std::size_t n_functions = 2;
    std::optional<double> tol;  // default: 1e-9 symbolic, 1e-6 finite differences
    std::optional<double> s;    // Leibniz coefficient; default: the operator's own
    bool finite_difference = false;  // evaluate through the black-box path even when symbolic

    static constexpr double kSymbolicTol = 1e-9;
    static constexpr double kFiniteDifferenceTol = 1e-6;
};

namespace detail {

/// Max |residual(p)| over points with lowest-index tie-break; domain errors count as skipped.
inline FixtureResidual sweep(const std::string& check, const std::string& label, const std::vector<Point>& pts,
                             const std::function<double(std::span<const double>)>& residual, ResidualReport& rep) {
    FixtureResidual r{check, label, 0.0, 0.0, pts.front()};
    for (const Point& p : pts) {
        ++rep.evaluations;
        double v = 0.0;
        try {
            v = residual(p);
        } catch (const DomainError&) {
            ++rep.skipped;
            continue;
        }
        const double a = std::isnan(v) ? std::numeric_limits<double>::infinity() : std::abs(v);
        if (a > r.max_abs) {
            r.max_abs = a;
            r.value = v;
            r.argmax = p;
        }
    }
    return r;
}

}  // namespace detail

/// Cocycle and Leibniz residuals of `d` over the fixture family at sample_points(chart, n_points, seed).
inline ResidualReport check_axioms(const DivOperator& d, const ChartRef& chart, const AxiomConfig& cfg = {}) {
    require_same_chart(d.chart(), chart);
    const bool symbolic = d.is_symbolic() && !cfg.finite_difference;
    const DivOperator op = symbolic ? d : DivOperator::opaque(d);
    const double s = cfg.s.value_or(d.leibniz_weight());

    ResidualReport rep;
    rep.check = "axioms";
    rep.tol = cfg.tol.value_or(symbolic ? AxiomConfig::kSymbolicTol : AxiomConfig::kFiniteDifferenceTol);
    const std::vector<Point> pts = sample_points(*chart, cfg.n_points, cfg.seed);
    rep.sample_count = pts.size();
    const auto fields = fixture_fields(chart, cfg.n_fields, cfg.seed);
    const auto functions = fixture_functions(chart, cfg.n_functions, cfg.seed);

    for (std::size_t a = 0; a < fields.size(); ++a)
        for (std::size_t b = a + 1; b < fields.size(); ++b) {
            const auto& x = fields[a].field;
            const auto& y = fields[b].field;
            const std::string label = "[" + fields[a].label + ", " + fields[b].label + "]";
            if (symbolic) {
                const Expr res = cocycle_residual_expr(op, x, y);
                rep.absorb(detail::sweep("cocycle", label, pts, [&](auto p) { return eval(res, p); }, rep));
            } else {
                const VectorField xy = bracket(x, y);
                const double h = default_fd_step(*chart);
                rep.absorb(detail::sweep(
                    "cocycle", label, pts,
                    [&](std::span<const double> p) {
                        const double x_dy =
                            directional_derivative([&](auto q) { return op.apply(y, q); }, *chart, p, x.at(p), h);
                        const double y_dx =
                            directional_derivative([&](auto q) { return op.apply(x, q); }, *chart, p, y.at(p), h);
                        return op.apply(xy, p) - (x_dy - y_dx);
                    },
                    rep));
            }
        }

    for (const auto& fx : fields)
        for (const auto& fn : functions) {
            const std::string label = "[" + fn.label + ", " + fx.label + "]";
            if (symbolic) {
                const Expr res = leibniz_residual_expr(op, fn.function, fx.field, s);
                rep.absorb(detail::sweep("leibniz", label, pts, [&](auto p) { return eval(res, p); }, rep));
            } else {
                const VectorField fX = detail::scaled(fn.function, fx.field);
                const Expr xf = apply_field(fx.field, fn.function);
                rep.absorb(detail::sweep(
                    "leibniz", label, pts,
                    [&](std::span<const double> p) {
                        return op.apply(fX, p) - eval(fn.function, p) * op.apply(fx.field, p) - s * eval(xf, p);
                    },
                    rep));
            }
        }
    rep.finish();
    return rep;
}

/// Cartan identity residual over random polynomial field pairs plus the library fields.
inline ResidualReport check_cartan(const VolumeForm& omega, const AxiomConfig& cfg = {}) {
    ResidualReport rep;
    rep.check = "cartan";
    rep.tol = cfg.tol.value_or(1e-8);
    const std::vector<Point> pts = sample_points(*omega.chart, cfg.n_points, cfg.seed);
    rep.sample_count = pts.size();
    const auto fields = fixture_fields(omega.chart, cfg.n_fields, cfg.seed);
    for (std::size_t a = 0; a < fields.size(); ++a)
        for (std::size_t b = a + 1; b < fields.size(); ++b) {
            const Expr res = cartan_identity_expr(fields[a].field, fields[b].field, omega.density);
            const std::string label = "[" + fields[a].label + ", " + fields[b].label + "]";
            rep.absorb(detail::sweep("cartan", label, pts, [&](auto p) { return eval(res, p); }, rep));
        }
    rep.finish();
    return rep;
}

}  // namespace divkit
