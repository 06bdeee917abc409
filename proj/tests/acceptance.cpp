// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <divkit/axioms.hpp>
#include <divkit/quadrature.hpp>
#include <divkit/reconstruct.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

using namespace divkit;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", n, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

void run(int n, const std::string& what, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(n, false, what, std::string("exception: ") + e.what());
    }
}

ChartRef square() { return make_chart({"x", "y"}, {-1, -1}, {1, 1}); }
ChartRef polar() { return make_chart({"r", "theta"}, {0.5, -1}, {2.5, 1}); }
Metric polar_metric(const ChartRef& c) { return Metric(c, {{Expr(1.0), Expr(0.0)}, {Expr(0.0), c->parse("r^2")}}); }
DivOperator flat(const ChartRef& c) { return DivOperator::volume(VolumeForm(c, Expr(1.0))); }

void axiom_suite() {
    const auto start = std::chrono::steady_clock::now();
    const ChartRef sq = square();
    const ChartRef pc = polar();
    const Metric g = polar_metric(pc);
    const Expr rho = sq->parse("exp(x^2 - y)");
    const std::vector<std::pair<std::string, DivOperator>> ops = {
        {"flat", flat(sq)},
        {"exp(x^2-y)", DivOperator::volume(VolumeForm(sq, rho))},
        {"polar metric", DivOperator::metric(g)},
        {"levi-civita", DivOperator::affine(levi_civita(g))},
        {"half density", DivOperator::sdensity(sq, rho, 0.5)},
        {"closed perturbation", DivOperator::perturbed(flat(sq), OneForm(sq, {sq->parse("2*x"), Expr(-1.0)}))},
    };
    double worst_sym = 0.0, worst_fd = 0.0;
    std::string failed;
    for (const auto& [name, d] : ops) {
        AxiomConfig cfg;
        cfg.n_points = 100;
        cfg.n_fields = 8;
        cfg.tol = 1e-8;
        const ResidualReport sym = check_axioms(d, d.chart(), cfg);
        cfg.finite_difference = true;
        cfg.tol = 1e-6;
        const ResidualReport fd = check_axioms(DivOperator::opaque(d), d.chart(), cfg);
        worst_sym = std::max(worst_sym, sym.max_abs);
        worst_fd = std::max(worst_fd, fd.max_abs);
        if (!sym.pass || !fd.pass) failed += " " + name;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(1, failed.empty() && secs <= 60.0, "axiom suite on 6 operators, 100 points x 8 fields",
           fmt("symbolic %.3g, finite-difference %.3g, %.1f s", worst_sym, worst_fd, secs) +
               (failed.empty() ? "" : ";" + failed));
}

void negative_control() {
    const ChartRef c = square();
    const DivOperator shear = DivOperator::perturbed(flat(c), OneForm(c, {c->parse("-y"), Expr(0.0)}));
    AxiomConfig cfg;
    const ResidualReport sym = check_axioms(shear, c, cfg);
    cfg.finite_difference = true;
    const ResidualReport fd = check_axioms(shear, c, cfg);
    // the coordinate pair sees exactly dE(d/dx, d/dy) = 1
    double sym_pair = NAN, fd_pair = NAN;
    for (const auto& b : sym.breakdown)
        if (b.check == "cocycle" && b.label == "[d/dx, d/dy]") sym_pair = b.max_abs;
    for (const auto& b : fd.breakdown)
        if (b.check == "cocycle" && b.label == "[d/dx, d/dy]") fd_pair = b.max_abs;
    const bool ok = !sym.pass && !fd.pass && std::abs(sym_pair - 1.0) <= 1e-6 && std::abs(fd_pair - 1.0) <= 1e-6;
    report(2, ok, "perturbation by (-y, 0) fails the cocycle check",
           fmt("coordinate pair residual %.9g symbolic, %.9g finite-difference", sym_pair, fd_pair));
}

void round_trip() {
    const ChartRef c = square();
    const Classification got = classify(DivOperator::volume(VolumeForm(c, c->parse("exp(x^2 - y)"))), flat(c), c);
    double err = INFINITY;
    if (got.verdict == Verdict::Divergence) {
        const Point& p0 = c->basepoint();
        const double f0 = p0[0] * p0[0] - p0[1];
        err = 0.0;
        for (const Point& p : sample_points(*c, 1000, 11))
            err = std::max(err, std::abs((*got.potential)(p) - (p[0] * p[0] - p[1] - f0)));
    }
    double reverify = got.residuals.reverification;

    // the other fixtures that should come back as divergences
    const ChartRef pc = polar();
    const auto polar_fit = classify(DivOperator::volume(VolumeForm(pc, pc->parse("r*exp(theta*r)"))),
                                    DivOperator::metric(polar_metric(pc)), pc);
    const ChartRef ann = make_chart({"x", "y"}, {-1, -1}, {1, 1}, {Disk{{0, 0}, 0.2}}, Point{0.5, 0.5});
    const auto ann_fit =
        classify(DivOperator::perturbed(flat(ann), OneForm(ann, {ann->parse("2*x"), Expr(1.0)})), flat(ann), ann);
    const auto bb_fit =
        classify(DivOperator::opaque(DivOperator::volume(VolumeForm(c, c->parse("2 + sin(3*x)*cos(y)")))), flat(c), c);
    bool all_div = got.verdict == Verdict::Divergence;
    for (const auto* r : {&polar_fit, &ann_fit, &bb_fit}) {
        all_div = all_div && r->verdict == Verdict::Divergence;
        reverify = std::max(reverify, r->residuals.reverification);
    }
    report(3, all_div && err <= 1e-6 && reverify <= 1e-6, "reconstruction of exp(x^2-y) against the flat divergence",
           fmt("max |f - (x^2-y)| %.3g, worst re-verification %.3g", err, reverify));
}

void obstruction() {
    const ChartRef c = make_chart({"x", "y"}, {-1, -1}, {1, 1}, {Disk{{0, 0}, 0.2}}, Point{0.5, 0.5});
    const OneForm w(c, {c->parse("-y/(x^2+y^2)"), c->parse("x/(x^2+y^2)")});
    ClassifyConfig cfg;
    cfg.loops = {{"r=0.5", Path::parse(c, {"0.5*cos(6.283185307179586*t)", "0.5*sin(6.283185307179586*t)"}, 8)}};
    const Classification got = classify(DivOperator::perturbed(flat(c), w), flat(c), c, cfg);
    const double period = got.periods.empty() ? NAN : got.periods[0].second;
    const bool ok = got.verdict == Verdict::ClosedNotExact && got.residuals.closedness <= 1e-6 &&
                    std::abs(period - 2 * std::numbers::pi) <= 1e-6;
    report(4, ok, "angular form on the annulus is closed but not exact",
           std::string("verdict ") + verdict_name(got.verdict) +
               fmt(", closedness %.3g, period %.12g", got.residuals.closedness, period));
}

void coincidence() {
    const ChartRef c = polar();
    const Metric g = polar_metric(c);
    const Connection lc = levi_civita(g);
    const VolumeForm omega = g.volume();
    double vol_gap = 0.0, aff_gap = 0.0;
    const auto pts = sample_points(*c, 100, 3);
    for (const auto& fx : fixture_fields(c, 8, 3)) {
        const Expr dm = div_metric(g, fx.field);
        const Expr dv = div_volume(omega, fx.field);
        const Expr da = div_affine(lc, fx.field);
        for (const Point& p : pts) {
            const double m = eval(dm, p);
            vol_gap = std::max(vol_gap, std::abs(m - eval(dv, p)));
            aff_gap = std::max(aff_gap, std::abs(m - eval(da, p)));
        }
    }
    report(5, vol_gap <= 1e-8 && aff_gap <= 1e-8, "metric, volume and Levi-Civita divergences coincide on polar",
           fmt("|metric - volume| %.3g, |affine - metric| %.3g", vol_gap, aff_gap));
}

void parallel_volume() {
    const ChartRef c = polar();
    const Metric g = polar_metric(c);
    const Connection lc = levi_civita(g);
    const VolumeForm omega = g.volume();
    const OneForm res = parallel_residual(omega, lc);
    double parallel = 0.0, equality = 0.0;
    const auto pts = sample_points(*c, 100, 5);
    for (const Point& p : pts)
        for (double v : res.at(p)) parallel = std::max(parallel, std::abs(v));
    for (const auto& fx : fixture_fields(c, 8, 5)) {
        const Expr gap = div_affine(lc, fx.field) - div_volume(omega, fx.field);
        for (const Point& p : pts) equality = std::max(equality, std::abs(eval(gap, p)));
    }
    report(6, parallel <= 1e-10 && equality <= 1e-8, "Levi-Civita connection leaves sqrt(G) dr dtheta parallel",
           fmt("parallel %.3g, operator equality %.3g", parallel, equality));
}

void integral_vanishing() {
    const ChartRef c = square();
    double worst = 0.0;
    int runs = 0;
    for (const char* rho : {"1", "exp(x^2 - y)", "2 + sin(3*x)*cos(y)"}) {
        const VolumeForm omega(c, c->parse(rho));
        for (const Point& centre : {Point{0.0, 0.0}, Point{0.2, -0.3}})
            for (std::size_t dir = 0; dir < 2; ++dir) {
                worst = std::max(worst, std::abs(integral_vanishing_check(omega, bump_field(c, centre, 0.6, dir), 64)));
                ++runs;
            }
    }
    report(7, worst <= 1e-6, "integral of div(X) Omega vanishes for bump fields",
           fmt("%g bump integrals on 3 volumes, worst %.3g", runs, worst));
}

void cartan() {
    const ChartRef c = square();
    double worst = 0.0;
    bool pass = true;
    for (const char* rho : {"1", "exp(x^2 - y)", "2 + sin(3*x)*cos(y)"}) {
        AxiomConfig cfg;
        cfg.n_points = 100;
        cfg.n_fields = 8;
        cfg.tol = 1e-8;
        const ResidualReport rep = check_cartan(VolumeForm(c, c->parse(rho)), cfg);
        worst = std::max(worst, rep.max_abs);
        pass = pass && rep.pass;
    }
    report(8, pass && worst <= 1e-8, "Cartan identity for random polynomial field pairs", fmt("worst %.3g", worst));
}

void zero_density() {
    const ChartRef c = square();
    const Expr rho = c->parse("2 + sin(x)*cos(y)");
    const DivOperator d = DivOperator::sdensity(c, rho, 0.0);
    AxiomConfig cfg;
    cfg.s = 0.0;
    const ResidualReport rep = check_axioms(d, c, cfg);
    const ExtractedForm e = extract_oneform(d, DivOperator::sdensity(c, Expr(1.0), 0.0));
    const OneForm dlog = d_function(log(rho), c);
    double form_gap = 0.0;
    for (const Point& p : sample_points(*c, 100, 9))
        for (std::size_t i = 0; i < 2; ++i) form_gap = std::max(form_gap, std::abs(e.at(p)[i] - dlog.at(p)[i]));
    const NumericScalarField pot = integrate_potential(e, c);
    const double shift = std::log(eval(rho, c->basepoint()));
    double pot_gap = 0.0;
    for (const Point& p : sample_points(*c, 200, 10))
        pot_gap = std::max(pot_gap, std::abs(pot(p) - (std::log(eval(rho, p)) - shift)));
    report(9, rep.pass && form_gap <= 1e-8 && pot_gap <= 1e-6, "s = 0 operators are d(log rho)",
           fmt("axioms %.3g, |E - dlog rho| %.3g, |potential - log rho| %.3g", rep.max_abs, form_gap, pot_gap));
}

}  // namespace

int main() {
    run(1, "axiom suite", axiom_suite);
    run(2, "negative control", negative_control);
    run(3, "reconstruction round trip", round_trip);
    run(4, "obstruction", obstruction);
    run(5, "coincidence", coincidence);
    run(6, "parallel volume", parallel_volume);
    run(7, "integral vanishing", integral_vanishing);
    run(8, "Cartan identity", cartan);
    run(9, "s = 0 characterization", zero_density);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures ? 1 : 0;
}
