#pragma once
// Charts and the tensor objects living on them.

#include <divkit/errors.hpp>
#include <divkit/expr.hpp>
#include <divkit/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace divkit {

using Point = std::vector<double>;
using ExprMatrix = std::vector<std::vector<Expr>>;

/// Closed ball removed from a chart's box.
struct Disk {
    Point center;
    double radius = 0.0;

    bool operator==(const Disk&) const = default;
};

/// Open box minus finitely many closed disks, with a basepoint in the domain.
///
/// A chart without disks is convex, hence star-shaped about its basepoint; this is
/// the setting in which every closed 1-form is exact.
class Chart {
public:
    Chart(std::vector<std::string> coordinates, Point lo, Point hi, std::vector<Disk> disks = {},
          std::optional<Point> basepoint = std::nullopt)
        : coords_(std::move(coordinates)), lo_(std::move(lo)), hi_(std::move(hi)), disks_(std::move(disks)) {
        const std::size_t n = coords_.size();
        if (n == 0) throw ValidationError("chart needs at least one coordinate", 0);
        if (lo_.size() != n || hi_.size() != n) throw ValidationError("box dimension does not match coordinates", 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (coords_[i].empty()) throw ValidationError("empty coordinate name", 0);
            for (std::size_t j = i + 1; j < n; ++j)
                if (coords_[i] == coords_[j]) throw ValidationError("duplicate coordinate '" + coords_[i] + "'", 0);
            if (!(lo_[i] < hi_[i])) throw ValidationError("box interval for '" + coords_[i] + "' is empty", 0);
        }
        for (const Disk& d : disks_) {
            if (d.center.size() != n) throw ValidationError("disk center dimension mismatch", 0);
            if (!(d.radius > 0.0)) throw ValidationError("disk radius must be positive", 0);
        }
        if (basepoint) {
            basepoint_ = std::move(*basepoint);
        } else {
            basepoint_.resize(n);
            for (std::size_t i = 0; i < n; ++i) basepoint_[i] = 0.5 * (lo_[i] + hi_[i]);
        }
        if (basepoint_.size() != n || !contains(basepoint_))
            throw ValidationError("basepoint must lie in the chart domain", 0);
    }

    std::size_t dim() const { return coords_.size(); }
    const std::vector<std::string>& coordinates() const { return coords_; }
    const Point& lo() const { return lo_; }
    const Point& hi() const { return hi_; }
    const std::vector<Disk>& disks() const { return disks_; }
    const Point& basepoint() const { return basepoint_; }
    bool has_holes() const { return !disks_.empty(); }

    double min_side() const {
        double s = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < dim(); ++i) s = std::min(s, hi_[i] - lo_[i]);
        return s;
    }

    bool in_box(std::span<const double> p) const {
        if (p.size() != dim()) return false;
        for (std::size_t i = 0; i < dim(); ++i)
            if (!(p[i] > lo_[i] && p[i] < hi_[i])) return false;
        return true;
    }

    bool contains(std::span<const double> p) const {
        if (!in_box(p)) return false;
        for (const Disk& d : disks_)
            if (distance(p, d.center) <= d.radius) return false;
        return true;
    }

    Expr coordinate(std::size_t i) const { return Expr::variable(coords_.at(i), static_cast<int>(i)); }

    Expr parse(std::string_view text) const { return parse_expr(text, std::span<const std::string>(coords_)); }

    static double distance(std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    }

    bool operator==(const Chart&) const = default;

private:
    std::vector<std::string> coords_;
    Point lo_;
    Point hi_;
    std::vector<Disk> disks_;
    Point basepoint_;
};

using ChartRef = std::shared_ptr<const Chart>;

inline ChartRef make_chart(std::vector<std::string> coordinates, Point lo, Point hi, std::vector<Disk> disks = {},
                           std::optional<Point> basepoint = std::nullopt) {
    return std::make_shared<const Chart>(std::move(coordinates), std::move(lo), std::move(hi), std::move(disks),
                                         std::move(basepoint));
}

inline bool same_chart(const ChartRef& a, const ChartRef& b) { return a == b || (a && b && *a == *b); }

inline void require_same_chart(const ChartRef& a, const ChartRef& b) {
    if (!same_chart(a, b)) throw ChartMismatch();
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> eval_all(const std::vector<Expr>& comps, std::span<const double> p) {
    std::vector<double> out(comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i) out[i] = eval(comps[i], p);
    return out;
}

inline void require_components(const ChartRef& chart, std::size_t count, const char* what) {
    if (!chart) throw PreconditionError(std::string(what) + " without chart");
    if (count != chart->dim())
        throw PreconditionError(std::string(what) + " component count does not match chart dimension");
}

}  // namespace detail

/// X = sum X^i d/dx^i.
struct VectorField {
    ChartRef chart;
    std::vector<Expr> components;

    VectorField(ChartRef c, std::vector<Expr> comps) : chart(std::move(c)), components(std::move(comps)) {
        detail::require_components(chart, components.size(), "vector field");
    }

    static VectorField zero(const ChartRef& c) { return {c, std::vector<Expr>(c->dim(), Expr(0.0))}; }

    /// Coordinate field d/dx^i.
    static VectorField coordinate(const ChartRef& c, std::size_t i) {
        std::vector<Expr> comps(c->dim(), Expr(0.0));
        comps.at(i) = Expr(1.0);
        return {c, std::move(comps)};
    }

    std::size_t dim() const { return components.size(); }
    const Expr& operator[](std::size_t i) const { return components[i]; }
    std::vector<double> at(std::span<const double> p) const { return detail::eval_all(components, p); }
};

/// E = sum E_i dx^i.
struct OneForm {
    ChartRef chart;
    std::vector<Expr> components;

    OneForm(ChartRef c, std::vector<Expr> comps) : chart(std::move(c)), components(std::move(comps)) {
        detail::require_components(chart, components.size(), "one-form");
    }

    static OneForm zero(const ChartRef& c) { return {c, std::vector<Expr>(c->dim(), Expr(0.0))}; }

    std::size_t dim() const { return components.size(); }
    const Expr& operator[](std::size_t i) const { return components[i]; }
    std::vector<double> at(std::span<const double> p) const { return detail::eval_all(components, p); }

    /// E(X) as an expression.
    Expr pair(const VectorField& x) const {
        require_same_chart(chart, x.chart);
        Expr out(0.0);
        for (std::size_t i = 0; i < dim(); ++i) out += components[i] * x[i];
        return out;
    }
};

inline std::vector<Point> sample_points(const Chart& chart, std::size_t count, std::uint64_t seed);

/// Omega = rho dx^1 ^ ... ^ dx^n with rho > 0.
struct VolumeForm {
    ChartRef chart;
    Expr density;

    static constexpr std::size_t kValidationPoints = 100;
    static constexpr std::uint64_t kValidationSeed = 0x5eed;

    /// Validates positivity of the density on the standard sample set.
    VolumeForm(ChartRef c, Expr rho) : chart(std::move(c)), density(std::move(rho)) {
        if (!chart) throw PreconditionError("volume form without chart");
        for (const Point& p : sample_points(*chart, kValidationPoints, kValidationSeed)) {
            double v = 0.0;
            try {
                v = eval(density, p);
            } catch (const DomainError& e) {
                throw ValidationError(std::string("volume density undefined at a sample point: ") + e.what(), 0);
            }
            if (!(v > 0.0)) throw ValidationError("volume density is not positive on the chart", 0);
        }
    }
};

/// Parametric curve t in [0, 1] -> chart, components are expressions in the single variable `t`.
struct Path {
    ChartRef chart;
    std::vector<Expr> components;
    int segments = 8;

    Path(ChartRef c, std::vector<Expr> comps, int segs = 8)
        : chart(std::move(c)), components(std::move(comps)), segments(segs) {
        detail::require_components(chart, components.size(), "path");
        if (segments < 1) throw PreconditionError("path segment count must be positive");
        for (const Expr& e : components)
            for (const std::string& v : variables(e))
                if (v != "t") throw PreconditionError("path component uses variable '" + v + "' instead of t");
    }

    static Path parse(const ChartRef& c, const std::vector<std::string>& texts, int segs = 8) {
        static const std::vector<std::string> tvar{"t"};
        std::vector<Expr> comps;
        for (const std::string& s : texts) comps.push_back(parse_expr(s, std::span<const std::string>(tvar)));
        return {c, std::move(comps), segs};
    }

    /// Straight segment from a to b.
    static Path segment(const ChartRef& c, std::span<const double> a, std::span<const double> b, int segs = 8) {
        const Expr t = Expr::variable("t", 0);
        std::vector<Expr> comps;
        for (std::size_t i = 0; i < a.size(); ++i) comps.push_back(Expr(a[i]) + Expr(b[i] - a[i]) * t);
        return {c, std::move(comps), segs};
    }

    Point at(double t) const {
        const double tt[1] = {t};
        return detail::eval_all(components, tt);
    }
};

// ---------------------------------------------------------------------------
// Operations

/// X(f) = sum X^i d_i f.
inline Expr apply_field(const VectorField& x, const Expr& f) {
    Expr out(0.0);
    for (std::size_t i = 0; i < x.dim(); ++i) out += x[i] * diff(f, x.chart->coordinates()[i]);
    return out;
}

/// [X, Y]^k = sum_i (X^i d_i Y^k - Y^i d_i X^k).
inline VectorField bracket(const VectorField& x, const VectorField& y) {
    require_same_chart(x.chart, y.chart);
    std::vector<Expr> comps;
    comps.reserve(x.dim());
    for (std::size_t k = 0; k < x.dim(); ++k) comps.push_back(apply_field(x, y[k]) - apply_field(y, x[k]));
    return {x.chart, std::move(comps)};
}

/// Flat divergence sum_i d_i X^i.
inline Expr flat_divergence(const VectorField& x) {
    Expr out(0.0);
    for (std::size_t i = 0; i < x.dim(); ++i) out += diff(x[i], x.chart->coordinates()[i]);
    return out;
}

/// Coefficient of L_X(g dx^1 ^ ... ^ dx^n): X(g) + g sum_i d_i X^i. `g` need not be positive.
inline Expr lie_derivative_top(const VectorField& x, const Expr& g) {
    return apply_field(x, g) + g * flat_divergence(x);
}

inline Expr lie_derivative_top(const VectorField& x, const VolumeForm& omega) {
    require_same_chart(x.chart, omega.chart);
    return lie_derivative_top(x, omega.density);
}

/// df = sum d_i f dx^i.
inline OneForm d_function(const Expr& f, const ChartRef& chart) {
    std::vector<Expr> comps;
    for (const std::string& c : chart->coordinates()) comps.push_back(diff(f, c));
    return {chart, std::move(comps)};
}

/// dE as the antisymmetric matrix with entry (i, j) = d_i E_j - d_j E_i.
inline ExprMatrix d_oneform(const OneForm& e) {
    const std::size_t n = e.dim();
    const auto& names = e.chart->coordinates();
    ExprMatrix m(n, std::vector<Expr>(n, Expr(0.0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            m[i][j] = diff(e[j], names[i]) - diff(e[i], names[j]);
            m[j][i] = -m[i][j];
        }
    return m;
}

/// Point-evaluable one-form components; the common currency of symbolic and numeric forms.
using FormEvaluator = std::function<std::vector<double>(std::span<const double>)>;

/// Line integral of a point-evaluable form. Every quadrature node must lie in the chart domain.
inline double line_integral(const FormEvaluator& form, const Path& path,
                            const QuadratureRule& rule = QuadratureRule::standard()) {
    std::vector<Expr> velocity;
    for (const Expr& c : path.components) velocity.push_back(diff(c, "t"));
    const Chart& chart = *path.chart;
    auto integrand = [&](double t) {
        const double tt[1] = {t};
        const Point p = detail::eval_all(path.components, tt);
        if (!chart.contains(p)) throw DomainError("path leaves the chart domain at t=" + std::to_string(t));
        const std::vector<double> e = form(p);
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) s += e[i] * eval(velocity[i], tt);
        return s;
    };
    return gauss_segment(integrand, 0.0, 1.0, rule, path.segments);
}

inline double line_integral(const OneForm& e, const Path& path,
                            const QuadratureRule& rule = QuadratureRule::standard()) {
    require_same_chart(e.chart, path.chart);
    return line_integral([&](std::span<const double> p) { return e.at(p); }, path, rule);
}

/// Deterministic rejection sampling of interior points, kept 0.05 * (min box side) away
/// from the box boundary and from every excluded disk.
inline std::vector<Point> sample_points(const Chart& chart, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw PreconditionError("sample count must be at least 1");
    const double margin = 0.05 * chart.min_side();
    const std::size_t n = chart.dim();
    std::mt19937_64 rng(seed);
    // Fixed mapping of the raw 64-bit stream to [0, 1) keeps samples identical across standard libraries.
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<Point> out;
    out.reserve(count);
    const std::size_t max_attempts = 10000 * count;
    std::size_t attempts = 0;
    Point p(n);
    while (out.size() < count) {
        if (++attempts > max_attempts) throw Error("sample_points: rejection limit exceeded");
        for (std::size_t i = 0; i < n; ++i) {
            const double a = chart.lo()[i] + margin;
            const double b = chart.hi()[i] - margin;
            p[i] = a + (b - a) * unit();
        }
        bool ok = true;
        for (const Disk& d : chart.disks())
            if (Chart::distance(p, d.center) < d.radius + margin) {
                ok = false;
                break;
            }
        if (ok) out.push_back(p);
    }
    return out;
}

}  // namespace divkit
