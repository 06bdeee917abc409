#pragma once
// Classification of a candidate operator D against a reference divergence D0.
//
// E = D - D0 is extracted on coordinate fields. D is a divergence operator exactly when
// E is tensorial and closed; on a star-shaped chart E = df with f obtained by integrating
// E along straight segments from the basepoint, and D = div of e^f Omega0. On a chart with
// holes a non-zero period of E around a loop certifies that no such f exists.

#include <divkit/axioms.hpp>
#include <divkit/divops.hpp>
#include <divkit/errors.hpp>
#include <divkit/expr.hpp>
#include <divkit/gauss.hpp>
#include <divkit/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace divkit {

/// Error raised inside a classification stage; the message carries the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage " + stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Point-evaluable scalar field with no symbolic form (e.g. a quadrature-backed potential).
struct NumericScalarField {
    ChartRef chart;
    std::function<double(std::span<const double>)> fn;

    double operator()(std::span<const double> p) const { return fn(p); }
};

/// Positive density p -> rho(p) of a reconstructed volume form.
struct NumericDensity {
    ChartRef chart;
    std::function<double(std::span<const double>)> fn;

    double operator()(std::span<const double> p) const { return fn(p); }
};

/// E = D - D0 on coordinate fields; symbolic when both operators are.
struct ExtractedForm {
    ChartRef chart;
    std::optional<OneForm> symbolic;
    FormEvaluator numeric;

    std::vector<double> at(std::span<const double> p) const { return symbolic ? symbolic->at(p) : numeric(p); }
    FormEvaluator evaluator() const {
        if (symbolic) {
            auto form = std::make_shared<const OneForm>(*symbolic);
            return [form](std::span<const double> p) { return form->at(p); };
        }
        return numeric;
    }
};

/// E_i = D(d_i) - D0(d_i). Perturbations of D are peeled off so that
/// extract(perturbed(D0, E0), D0) returns E0 exactly.
inline ExtractedForm extract_oneform(const DivOperator& d, const DivOperator& d0) {
    require_same_chart(d.chart(), d0.chart());
    const ChartRef& chart = d.chart();
    const std::size_t n = chart->dim();
    if (const DivOperator* base = d.perturbation_base()) {
        ExtractedForm inner = extract_oneform(*base, d0);
        const OneForm& extra = *d.perturbation_form();
        if (inner.symbolic) {
            std::vector<Expr> comps;
            for (std::size_t i = 0; i < n; ++i) comps.push_back((*inner.symbolic)[i] + extra[i]);
            return {chart, OneForm(chart, std::move(comps)), {}};
        }
        auto extra_copy = std::make_shared<const OneForm>(extra);
        auto inner_fn = inner.numeric;
        return {chart, std::nullopt, [inner_fn, extra_copy](std::span<const double> p) {
                    std::vector<double> v = inner_fn(p);
                    const std::vector<double> e = extra_copy->at(p);
                    for (std::size_t i = 0; i < v.size(); ++i) v[i] += e[i];
                    return v;
                }};
    }
    if (d.is_symbolic() && d0.is_symbolic()) {
        std::vector<Expr> comps;
        for (std::size_t i = 0; i < n; ++i) {
            const VectorField di = VectorField::coordinate(chart, i);
            comps.push_back(simplify(d.symbolic(di) - d0.symbolic(di)));
        }
        return {chart, OneForm(chart, std::move(comps)), {}};
    }
    auto fields = std::make_shared<std::vector<VectorField>>();
    for (std::size_t i = 0; i < n; ++i) fields->push_back(VectorField::coordinate(chart, i));
    const DivOperator dd = DivOperator::opaque(d);
    const DivOperator dd0 = DivOperator::opaque(d0);
    return {chart, std::nullopt, [dd, dd0, fields](std::span<const double> p) {
                std::vector<double> v;
                for (const VectorField& f : *fields) v.push_back(dd.apply(f, p) - dd0.apply(f, p));
                return v;
            }};
}

/// E(fX)(p) - f(p) E(X)(p) with E = D - D0.
inline double tensoriality_residual(const DivOperator& d, const DivOperator& d0, const Expr& f, const VectorField& x,
                                    std::span<const double> p) {
    require_same_chart(d.chart(), d0.chart());
    const VectorField fx = detail::scaled(f, x);
    const double e_fx = d.apply(fx, p) - d0.apply(fx, p);
    const double e_x = d.apply(x, p) - d0.apply(x, p);
    return e_fx - eval(f, p) * e_x;
}

struct ClosednessResult {
    double max_abs = 0.0;
    double value = 0.0;  // signed d_i E_j - d_j E_i at the maximum
    std::size_t i = 0;
    std::size_t j = 0;
    Point point;
};

/// max over samples and index pairs i < j of |d_i E_j - d_j E_i|. Numeric forms are
/// differentiated by central differences with step h (default 1e-5 times the shortest side).
inline ClosednessResult closedness_residual(const ExtractedForm& e, std::span<const Point> samples,
                                            std::optional<double> step = std::nullopt) {
    ClosednessResult r;
    if (samples.empty()) return r;
    r.point = samples.front();
    const Chart& chart = *e.chart;
    const std::size_t n = chart.dim();
    if (n >= 2) r.j = 1;
    std::optional<ExprMatrix> de;
    if (e.symbolic) de = d_oneform(*e.symbolic);
    const double h = step.value_or(default_fd_step(chart));
    for (const Point& p : samples) {
        // partial[i][j] = d_i E_j (numeric path only)
        std::vector<std::vector<double>> partial;
        if (!de) {
            partial.assign(n, std::vector<double>(n, 0.0));
            for (std::size_t i = 0; i < n; ++i) {
                Point dir(n, 0.0);
                dir[i] = 1.0;
                for (std::size_t j = 0; j < n; ++j)
                    partial[i][j] = directional_derivative([&](std::span<const double> q) { return e.numeric(q)[j]; },
                                                           chart, p, dir, h);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double v = de ? eval((*de)[i][j], p) : partial[i][j] - partial[j][i];
                if (std::abs(v) > r.max_abs) {
                    r = {std::abs(v), v, i, j, p};
                }
            }
    }
    return r;
}

namespace detail {

inline NumericScalarField straight_line_potential(FormEvaluator form, const ChartRef& chart) {
    const Point base = chart->basepoint();
    return {chart, [form = std::move(form), base](std::span<const double> x) {
                const std::size_t n = base.size();
                bool at_base = true;
                for (std::size_t i = 0; i < n; ++i) at_base = at_base && x[i] == base[i];
                if (at_base) return 0.0;
                Point q(n);
                const auto integrand = [&](double t) {
                    for (std::size_t i = 0; i < n; ++i) q[i] = base[i] + t * (x[i] - base[i]);
                    const std::vector<double> e = form(q);
                    double s = 0.0;
                    for (std::size_t i = 0; i < n; ++i) s += e[i] * (x[i] - base[i]);
                    return s;
                };
                return gauss_segment(integrand, 0.0, 1.0);
            }};
}

}  // namespace detail

/// f(x) = integral over [0,1] of E(p0 + t(x - p0)) . (x - p0) dt, so f(p0) = 0 and df = E
/// for closed E. Requires a star-shaped (disk-free) chart.
inline NumericScalarField integrate_potential(const ExtractedForm& e, const ChartRef& chart) {
    if (chart->has_holes())
        throw PreconditionError("integrate_potential requires a chart without excluded disks");
    return detail::straight_line_potential(e.evaluator(), chart);
}

inline NumericScalarField integrate_potential(const OneForm& e, const ChartRef& chart) {
    return integrate_potential(ExtractedForm{e.chart, e, {}}, chart);
}

/// Line integral of E around a closed loop.
inline double monodromy_period(const FormEvaluator& e, const Path& loop) {
    const Point a = loop.at(0.0);
    const Point b = loop.at(1.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > 1e-12) throw PreconditionError("loop is not closed");
    return line_integral(e, loop);
}

inline double monodromy_period(const OneForm& e, const Path& loop) {
    require_same_chart(e.chart, loop.chart);
    return monodromy_period([&](std::span<const double> p) { return e.at(p); }, loop);
}

/// Density p -> e^{f(p)} rho0(p).
inline NumericDensity rebuild_volume(const NumericScalarField& f, const VolumeForm& omega0) {
    const Expr rho0 = omega0.density;
    return {f.chart, [f, rho0](std::span<const double> p) { return std::exp(f(p)) * eval(rho0, p); }};
}

/// div of a numeric density: X(rho)/rho + sum_i d_i X^i, X(rho) by central differences.
inline double numeric_divergence(const NumericDensity& rho, const VectorField& x, std::span<const double> p,
                                 const Chart& domain, std::optional<double> step = std::nullopt) {
    const double h = step.value_or(default_fd_step(domain));
    const double x_rho = directional_derivative(rho.fn, domain, p, x.at(p), h);
    return x_rho / rho(p) + eval(flat_divergence(x), p);
}

/// Largest axis-aligned sub-box of the chart containing the basepoint and no excluded disk.
inline ChartRef star_shaped_subchart(const Chart& chart) {
    Point lo = chart.lo();
    Point hi = chart.hi();
    const Point& p0 = chart.basepoint();
    for (const Disk& d : chart.disks()) {
        // Skip disks already outside the current box.
        double s = 0.0;
        for (std::size_t i = 0; i < chart.dim(); ++i) {
            const double c = std::clamp(d.center[i], lo[i], hi[i]);
            s += (c - d.center[i]) * (c - d.center[i]);
        }
        if (std::sqrt(s) > d.radius) continue;
        double best_volume = -1.0;
        Point best_lo, best_hi;
        for (std::size_t i = 0; i < chart.dim(); ++i) {
            for (int side = 0; side < 2; ++side) {
                Point l = lo, h = hi;
                if (side == 0 && p0[i] < d.center[i] - d.radius)
                    h[i] = std::min(h[i], d.center[i] - d.radius);
                else if (side == 1 && p0[i] > d.center[i] + d.radius)
                    l[i] = std::max(l[i], d.center[i] + d.radius);
                else
                    continue;
                double vol = 1.0;
                for (std::size_t k = 0; k < chart.dim(); ++k) vol *= h[k] - l[k];
                if (vol > best_volume) {
                    best_volume = vol;
                    best_lo = l;
                    best_hi = h;
                }
            }
        }
        if (best_volume < 0.0)
            throw PreconditionError("no disk-free sub-box contains the basepoint");
        lo = best_lo;
        hi = best_hi;
    }
    return make_chart(chart.coordinates(), lo, hi, std::vector<Disk>{}, p0);
}

/// One circle around each excluded disk, halfway between the disk and the nearest box face.
/// Disks whose circle would leave the domain get none.
inline std::vector<std::pair<std::string, Path>> default_loops(const ChartRef& chart) {
    std::vector<std::pair<std::string, Path>> out;
    if (chart->dim() < 2) return out;
    const std::size_t n = chart->dim();
    for (std::size_t k = 0; k < chart->disks().size(); ++k) {
        const Disk& d = chart->disks()[k];
        const double room = std::min({d.center[0] - chart->lo()[0], chart->hi()[0] - d.center[0],
                                      d.center[1] - chart->lo()[1], chart->hi()[1] - d.center[1]});
        if (room <= d.radius) continue;
        const double r = 0.5 * (d.radius + room);
        std::vector<Expr> comps;
        const Expr t = Expr::variable("t", 0);
        const Expr turn = Expr(2.0 * std::numbers::pi) * t;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == 0)
                comps.push_back(Expr(d.center[0]) + Expr(r) * cos(turn));
            else if (i == 1)
                comps.push_back(Expr(d.center[1]) + Expr(r) * sin(turn));
            else
                comps.push_back(Expr(d.center[i]));
        }
        Path loop(chart, std::move(comps), 8);
        bool inside = true;
        for (int j = 0; j < 256 && inside; ++j) inside = chart->contains(loop.at(j / 256.0));
        if (inside) out.emplace_back("around_disk" + std::to_string(k + 1), std::move(loop));
    }
    return out;
}

// ---------------------------------------------------------------------------

enum class Verdict { Divergence, ClosedNotExact, NotCocycle, NotTensorial };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Divergence:
            return "divergence";
        case Verdict::ClosedNotExact:
            return "closed_not_exact";
        case Verdict::NotCocycle:
            return "not_cocycle";
        case Verdict::NotTensorial:
            return "not_tensorial";
    }
    return "?";
}

struct Witness {
    std::string fixture;  // field/function labels or the index pair
    Point point;
    double value = 0.0;
};

struct ClassifyConfig {
    std::uint64_t seed = 1;
    std::size_t n_points = 100;
    std::size_t n_fields = 8;
    std::size_t n_functions = 2;
    double tol = 1e-6;
    std::vector<std::pair<std::string, Path>> loops;  // empty: one circle per excluded disk
};

struct Classification {
    Verdict verdict = Verdict::Divergence;
    std::optional<ExtractedForm> form;
    std::optional<NumericScalarField> potential;
    std::optional<NumericDensity> volume;
    ChartRef potential_chart;  // where the potential is defined (sub-box on charts with holes)
    std::vector<std::pair<std::string, double>> periods;
    std::optional<Witness> witness;

    struct Residuals {
        double tensoriality = 0.0;
        double closedness = 0.0;
        double period = 0.0;
        double reverification = 0.0;
    } residuals;
};

namespace detail {

template <class F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace detail

/// Decides whether D is div_Omega for some volume form Omega, given D0 = div_Omega0.
inline Classification classify(const DivOperator& d, const DivOperator& d0, const VolumeForm& omega0,
                               const ClassifyConfig& cfg = {}) {
    require_same_chart(d.chart(), d0.chart());
    const ChartRef chart = d.chart();
    Classification out;
    const std::vector<Point> pts = sample_points(*chart, cfg.n_points, cfg.seed);
    const auto fields = fixture_fields(chart, cfg.n_fields, cfg.seed);

    // (1) E(fX) = f E(X)
    detail::staged("tensoriality", [&] {
        const auto functions = fixture_functions(chart, cfg.n_functions, cfg.seed);
        const bool symbolic = d.is_symbolic() && d0.is_symbolic();
        for (const auto& fx : fields)
            for (const auto& fn : functions) {
                std::function<double(std::span<const double>)> res;
                Expr sym;
                if (symbolic) {
                    const VectorField scaled = detail::scaled(fn.function, fx.field);
                    sym = (d.symbolic(scaled) - d0.symbolic(scaled)) -
                          fn.function * (d.symbolic(fx.field) - d0.symbolic(fx.field));
                    res = [&sym](std::span<const double> p) { return eval(sym, p); };
                } else {
                    res = [&](std::span<const double> p) { return tensoriality_residual(d, d0, fn.function, fx.field, p); };
                }
                for (const Point& p : pts) {
                    const double v = res(p);
                    if (std::abs(v) > out.residuals.tensoriality) {
                        out.residuals.tensoriality = std::abs(v);
                        if (std::abs(v) > cfg.tol) out.witness = Witness{"[" + fn.label + ", " + fx.label + "]", p, v};
                    }
                }
            }
    });
    if (out.residuals.tensoriality > cfg.tol) {
        out.verdict = Verdict::NotTensorial;
        return out;
    }
    out.witness.reset();

    // (2) E = D - D0
    out.form = detail::staged("extract", [&] { return extract_oneform(d, d0); });

    // (3) dE = 0
    const ClosednessResult closed = detail::staged("closedness", [&] { return closedness_residual(*out.form, pts); });
    out.residuals.closedness = closed.max_abs;
    if (closed.max_abs > cfg.tol) {
        out.verdict = Verdict::NotCocycle;
        const auto& names = chart->coordinates();
        out.witness = Witness{"(" + names[closed.i] + ", " + names[closed.j] + ")", closed.point, closed.value};
        return out;
    }

    // (4b) periods on charts with holes
    if (chart->has_holes()) {
        detail::staged("periods", [&] {
            const FormEvaluator ev = out.form->evaluator();
            const auto loops = cfg.loops.empty() ? default_loops(chart) : cfg.loops;
            for (const auto& [name, loop] : loops) {
                const double period = monodromy_period(ev, loop);
                out.periods.emplace_back(name, period);
                out.residuals.period = std::max(out.residuals.period, std::abs(period));
            }
        });
        if (out.residuals.period > cfg.tol) {
            out.verdict = Verdict::ClosedNotExact;
            return out;
        }
    }

    // (4a) potential, rebuilt volume, re-verification
    detail::staged("potential", [&] {
        out.potential_chart = chart->has_holes() ? star_shaped_subchart(*chart) : chart;
        out.potential = detail::straight_line_potential(out.form->evaluator(), out.potential_chart);
        out.volume = rebuild_volume(*out.potential, omega0);
    });
    detail::staged("reverify", [&] {
        const std::vector<Point> check_pts =
            chart->has_holes() ? sample_points(*out.potential_chart, cfg.n_points, cfg.seed) : pts;
        const DivOperator dd = DivOperator::opaque(d);
        for (const auto& fx : fields)
            for (const Point& p : check_pts) {
                const double v = dd.apply(fx.field, p) - numeric_divergence(*out.volume, fx.field, p, *out.potential_chart);
                if (std::abs(v) > out.residuals.reverification) {
                    out.residuals.reverification = std::abs(v);
                    out.witness = Witness{fx.label, p, v};
                }
            }
        if (out.residuals.reverification > cfg.tol)
            throw Error("reconstructed volume form does not reproduce D (max residual " +
                        std::to_string(out.residuals.reverification) + ")");
    });
    out.witness.reset();
    out.verdict = Verdict::Divergence;
    return out;
}

/// Reference volume taken from D0 (volume, metric or s-density kinds).
inline Classification classify(const DivOperator& d, const DivOperator& d0, const ChartRef& chart,
                               const ClassifyConfig& cfg = {}) {
    require_same_chart(d.chart(), chart);
    const std::optional<Expr> rho0 = d0.density();
    if (!rho0) throw PreconditionError("reference operator has no density; pass its volume form explicitly");
    return classify(d, d0, VolumeForm(chart, *rho0), cfg);
}

}  // namespace divkit
