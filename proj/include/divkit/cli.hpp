#pragma once
// Command implementations behind the divkit executable. Each writes its report
// to `out` and returns the process exit code:
//   0 pass, 1 mathematical failure or negative verdict, 2 parse/validation, 3 runtime.

#include <divkit/axioms.hpp>
#include <divkit/divops.hpp>
#include <divkit/errors.hpp>
#include <divkit/geometry.hpp>
#include <divkit/quadrature.hpp>
#include <divkit/reconstruct.hpp>
#include <divkit/specfile.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace divkit::cli {

enum ExitCode { kPass = 0, kFail = 1, kInvalid = 2, kRuntime = 3 };

struct Options {
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    std::optional<std::size_t> points;
};

struct BumpOptions {
    std::optional<Point> center;  // default: box center
    std::optional<double> radius;  // default: 0.4 * shortest side
    std::size_t direction = 0;
    std::optional<int> resolution;
};

/// --seed, then DIVKIT_SEED, then the spec's [config] seed, then 1.
inline std::uint64_t resolve_seed(const Options& opts, const SpecFile& spec) {
    if (opts.seed) return *opts.seed;
    if (const char* env = std::getenv("DIVKIT_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0') throw ValidationError("DIVKIT_SEED is not an integer: '" + std::string(env) + "'", 0);
        return v;
    }
    return spec.config.seed.value_or(1);
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string point(std::span<const double> p) {
    std::string s;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) s += ',';
        s += num(p[i]);
    }
    return s;
}

// Labels go into whitespace-separated lines.
inline std::string token(std::string s) {
    std::string out;
    for (char c : s)
        if (c != ' ') out += c;
    return out;
}

inline void residual_line(std::ostream& out, const std::string& name, double value, double tol) {
    out << "RESIDUAL " << name << ' ' << num(value) << ' ' << num(tol) << ' ' << (value <= tol ? "PASS" : "FAIL")
        << '\n';
}

inline int cmd_check_axioms(const SpecFile& spec, const std::string& op_name, const Options& opts, std::ostream& out,
                            bool finite_difference = false) {
    const DivOperator& d = spec.op(op_name);
    AxiomConfig cfg;
    cfg.seed = resolve_seed(opts, spec);
    cfg.n_points = opts.points.value_or(spec.config.points.value_or(cfg.n_points));
    cfg.n_fields = spec.config.fields.value_or(cfg.n_fields);
    cfg.n_functions = spec.config.functions.value_or(cfg.n_functions);
    cfg.tol = opts.tol ? opts.tol : spec.config.tol;
    cfg.finite_difference = finite_difference;
    const ResidualReport rep = check_axioms(d, spec.chart, cfg);

    const bool symbolic = d.is_symbolic() && !finite_difference;
    out << "OPERATOR " << op_name << ' ' << kind_name(d.kind()) << ' ' << (symbolic ? "symbolic" : "finite-difference")
        << '\n';
    out << "SAMPLES " << rep.sample_count << " seed " << cfg.seed << '\n';
    residual_line(out, "cocycle", rep.max_for("cocycle"), rep.tol);
    residual_line(out, "leibniz", rep.max_for("leibniz"), rep.tol);
    if (rep.skipped) out << "SKIPPED " << rep.skipped << ' ' << rep.evaluations << '\n';
    if (!rep.pass) {
        // "<check> <fixture label>"
        const auto space = rep.witness.find(' ');
        out << "WITNESS " << rep.witness.substr(0, space);
        if (space != std::string::npos) out << ' ' << token(rep.witness.substr(space + 1));
        out << ' ' << num(rep.value) << ' ' << point(rep.argmax) << '\n';
    }
    out << "VERDICT " << (rep.pass ? "PASS" : "FAIL") << '\n';
    return rep.pass ? kPass : kFail;
}

inline int cmd_classify(const SpecFile& spec, const std::string& candidate, const std::string& base,
                        const Options& opts, std::ostream& out) {
    const DivOperator& d = spec.op(candidate);
    const DivOperator& d0 = spec.op(base);
    const std::optional<Expr> rho0 = d0.density();
    if (!rho0) throw ValidationError("base operator '" + base + "' has no volume form", 0);
    ClassifyConfig cfg;
    cfg.seed = resolve_seed(opts, spec);
    cfg.n_points = opts.points.value_or(spec.config.points.value_or(cfg.n_points));
    cfg.n_fields = spec.config.fields.value_or(cfg.n_fields);
    cfg.n_functions = spec.config.functions.value_or(cfg.n_functions);
    cfg.tol = opts.tol.value_or(spec.config.tol.value_or(cfg.tol));
    for (const auto& [name, loop] : spec.loops) cfg.loops.emplace_back(name, loop);

    const Classification c = classify(d, d0, VolumeForm(spec.chart, *rho0), cfg);
    out << "VERDICT " << verdict_name(c.verdict);
    if (c.verdict == Verdict::ClosedNotExact) {
        double worst = 0.0;
        for (const auto& [name, v] : c.periods)
            if (std::abs(v) > std::abs(worst)) worst = v;
        out << " PERIOD " << num(worst);
    }
    out << '\n';
    residual_line(out, "tensoriality", c.residuals.tensoriality, cfg.tol);
    if (c.verdict == Verdict::NotTensorial) {
        out << "WITNESS " << token(c.witness->fixture) << ' ' << num(c.witness->value) << ' ' << point(c.witness->point)
            << '\n';
        return kFail;
    }
    residual_line(out, "closedness", c.residuals.closedness, cfg.tol);
    if (c.verdict == Verdict::NotCocycle) {
        out << "WITNESS " << token(c.witness->fixture) << ' ' << num(c.witness->value) << ' ' << point(c.witness->point)
            << '\n';
        return kFail;
    }
    for (const auto& [name, v] : c.periods) out << "PERIOD " << name << ' ' << num(v) << '\n';
    if (c.verdict == Verdict::ClosedNotExact) return kFail;
    residual_line(out, "reverification", c.residuals.reverification, cfg.tol);
    // The reconstructed log-density ratio at a few sample points.
    for (const Point& p : sample_points(*c.potential_chart, 5, cfg.seed))
        out << "VALUE potential " << point(p) << ' ' << num((*c.potential)(p)) << '\n';
    return kPass;
}

inline int cmd_divergence(const SpecFile& spec, const std::string& op_name, const std::string& field_name,
                          const Options& opts, std::ostream& out, const std::optional<Point>& at = std::nullopt) {
    const DivOperator& d = spec.op(op_name);
    const VectorField& x = spec.field(field_name);
    std::optional<Expr> sym;
    if (d.is_symbolic()) {
        sym = simplify(d.symbolic(x));
        out << "EXPR " << to_string(*sym) << '\n';
    }
    std::vector<Point> pts;
    if (at) {
        if (at->size() != spec.chart->dim()) throw ValidationError("--at needs one value per coordinate", 0);
        if (!spec.chart->contains(*at)) throw ValidationError("--at " + point(*at) + " is outside the chart", 0);
        pts.push_back(*at);
    } else {
        pts = sample_points(*spec.chart, opts.points.value_or(spec.config.points.value_or(10)),
                            resolve_seed(opts, spec));
    }
    for (const Point& p : pts) out << "VALUE " << point(p) << ' ' << num(sym ? eval(*sym, p) : d.apply(x, p)) << '\n';
    return kPass;
}

/// Parallel residual of Omega against the connection and the gap between the two divergences.
inline int cmd_verify_kn(const SpecFile& spec, const std::string& volume_name, const std::string& connection_name,
                         const Options& opts, std::ostream& out) {
    const VolumeForm& omega = spec.volume(volume_name);
    const Connection& gamma = spec.connection(connection_name);
    const double tol = opts.tol.value_or(spec.config.tol.value_or(1e-8));
    const std::uint64_t seed = resolve_seed(opts, spec);
    const std::vector<Point> pts =
        sample_points(*spec.chart, opts.points.value_or(spec.config.points.value_or(100)), seed);

    const OneForm c = parallel_residual(omega, gamma);
    double parallel = 0.0;
    for (const Point& p : pts)
        for (double v : c.at(p)) parallel = std::max(parallel, std::abs(v));

    double equality = 0.0;
    for (const auto& fx : fixture_fields(spec.chart, spec.config.fields.value_or(8), seed)) {
        const Expr gap = div_affine(gamma, fx.field) - div_volume(omega, fx.field);
        for (const Point& p : pts) equality = std::max(equality, std::abs(eval(gap, p)));
    }
    residual_line(out, "parallel", parallel, tol);
    residual_line(out, "equality", equality, tol);
    const bool is_parallel = parallel <= tol;
    const bool is_equal = equality <= tol;
    if (is_parallel == is_equal) {
        out << "VERDICT " << (is_parallel ? "PARALLEL" : "NOT_PARALLEL") << '\n';
        return kPass;
    }
    out << "VERDICT INCONSISTENT\n";
    return kFail;
}

inline int cmd_integrate_vanish(const SpecFile& spec, const std::string& name, const BumpOptions& bump,
                                std::ostream& out) {
    const Chart& chart = *spec.chart;
    Point center = bump.center.value_or(Point{});
    if (!bump.center)
        for (std::size_t i = 0; i < chart.dim(); ++i) center.push_back(0.5 * (chart.lo()[i] + chart.hi()[i]));
    if (center.size() != chart.dim()) throw ValidationError("--center needs one value per coordinate", 0);
    if (bump.direction >= chart.dim()) throw ValidationError("--direction out of range", 0);
    const double radius = bump.radius.value_or(0.4 * chart.min_side());
    const int resolution = bump.resolution.value_or(spec.config.resolution.value_or(kDefaultGridResolution));
    const VectorField x = bump_field(spec.chart, center, radius, bump.direction);

    double value = 0.0;
    bool claim = true;
    if (auto it = spec.volumes.find(name); it != spec.volumes.end()) {
        value = integral_vanishing_check(it->second, x, resolution);
    } else {
        const DivOperator& d = spec.op(name);
        std::optional<Expr> weight = d.density();
        if (d.kind() == DivOperator::Kind::Perturbed) {
            weight = d.perturbation_base()->density();
            claim = false;
        }
        if (!weight) throw ValidationError("operator '" + name + "' has no volume form to integrate against", 0);
        if (d.kind() == DivOperator::Kind::SDensity && d.leibniz_weight() != 1.0) claim = false;
        value = integrate_divergence(d, *weight, x, resolution);
    }
    out << "VALUE integral " << num(value) << '\n';
    if (!claim) {
        out << "CLAIM NO_CLAIM\n";
        return kPass;
    }
    const bool ok = std::abs(value) <= 1e-6;
    out << "CLAIM VANISHES " << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kPass : kFail;
}

/// Runs `body`, mapping exceptions to exit codes and a message on `err`.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';  // what() already names the line
        return kInvalid;
    } catch (const ParseError& e) {
        err << "parse error at offset " << e.offset() << ": " << e.what() << '\n';
        return kInvalid;
    } catch (const StageError& e) {
        err << "error in stage " << e.stage() << ": " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntime;
    }
}

}  // namespace divkit::cli
