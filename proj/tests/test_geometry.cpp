#include <divkit/axioms.hpp>
#include <divkit/geometry.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace divkit {
namespace {

ChartRef square() { return make_chart({"x", "y"}, {-1, -1}, {1, 1}); }
ChartRef annulus() { return make_chart({"x", "y"}, {-1, -1}, {1, 1}, {Disk{{0, 0}, 0.2}}, Point{0.5, 0.5}); }

VectorField field(const ChartRef& c, std::initializer_list<const char*> comps) {
    std::vector<Expr> v;
    for (const char* s : comps) v.push_back(c->parse(s));
    return {c, v};
}

testing::FieldFn fn(const VectorField& x) {
    return [x](std::span<const double> p) { return x.at(p); };
}

TEST(Chart, RejectsMalformedDomains) {
    EXPECT_THROW(Chart({"x"}, {1}, {0}), ValidationError);
    EXPECT_THROW(Chart({"x", "x"}, {0, 0}, {1, 1}), ValidationError);
    EXPECT_THROW(Chart({}, {}, {}), ValidationError);
    EXPECT_THROW(Chart({"x", "y"}, {-1, -1}, {1, 1}, {Disk{{0, 0}, -0.1}}), ValidationError);
    // default basepoint is the box center, which the disk covers
    EXPECT_THROW(Chart({"x", "y"}, {-1, -1}, {1, 1}, {Disk{{0, 0}, 0.2}}), ValidationError);
    EXPECT_THROW(Chart({"x"}, {0}, {1}, {}, Point{2.0}), ValidationError);
}

TEST(Chart, ContainmentRespectsBoxAndDisks) {
    const ChartRef c = annulus();
    const double in[2] = {0.5, 0.0}, hole[2] = {0.1, 0.0}, edge[2] = {1.0, 0.0};
    EXPECT_TRUE(c->contains(in));
    EXPECT_FALSE(c->contains(hole));
    EXPECT_FALSE(c->contains(edge));
    EXPECT_TRUE(c->has_holes());
    EXPECT_DOUBLE_EQ(c->min_side(), 2.0);
}

TEST(Chart, ParseUsesCoordinateNames) {
    const ChartRef c = square();
    EXPECT_THROW(c->parse("z + 1"), UnknownIdentifier);
    const double p[2] = {2.0, 3.0};
    EXPECT_DOUBLE_EQ(eval(c->parse("x*y"), p), 6.0);
}

TEST(SamplePoints, DeterministicInsideWithMargin) {
    const ChartRef c = annulus();
    const auto a = sample_points(*c, 200, 42);
    const auto b = sample_points(*c, 200, 42);
    const auto other = sample_points(*c, 200, 43);
    ASSERT_EQ(a.size(), 200u);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, other);
    const double margin = 0.05 * c->min_side();
    for (const Point& p : a) {
        EXPECT_TRUE(c->contains(p));
        EXPECT_GE(Chart::distance(p, Point{0, 0}), 0.2 + margin);
        for (int i = 0; i < 2; ++i) EXPECT_LE(std::abs(p[i]), 1.0 - margin);
    }
    EXPECT_THROW(sample_points(*c, 0, 1), PreconditionError);
}

TEST(Fields, ComponentCountMustMatchChart) {
    const ChartRef c = square();
    EXPECT_THROW(VectorField(c, {Expr(1.0)}), PreconditionError);
    EXPECT_THROW(OneForm(c, {Expr(1.0), Expr(2.0), Expr(3.0)}), PreconditionError);
}

TEST(Fields, DifferentChartsDoNotMix) {
    const ChartRef a = square();
    const ChartRef b = make_chart({"u", "v"}, {-1, -1}, {1, 1});
    EXPECT_THROW(bracket(VectorField::coordinate(a, 0), VectorField::coordinate(b, 0)), ChartMismatch);
    // structurally equal charts are the same chart
    EXPECT_NO_THROW(bracket(VectorField::coordinate(a, 0), VectorField::coordinate(square(), 1)));
}

TEST(Bracket, HandComputedExample) {
    // [x d/dy, y d/dx] = x d/dx - y d/dy
    const ChartRef c = square();
    const VectorField z = bracket(field(c, {"0", "x"}), field(c, {"y", "0"}));
    const double p[2] = {0.3, -0.7};
    EXPECT_NEAR(eval(z[0], p), 0.3, 1e-15);
    EXPECT_NEAR(eval(z[1], p), 0.7, 1e-15);
}

TEST(Bracket, CoordinateFieldsCommute) {
    const ChartRef c = square();
    const VectorField z = bracket(VectorField::coordinate(c, 0), VectorField::coordinate(c, 1));
    EXPECT_TRUE(z[0].is_constant(0.0));
    EXPECT_TRUE(z[1].is_constant(0.0));
}

TEST(Bracket, AntisymmetryAndJacobi) {
    const ChartRef c = square();
    const auto fx = fixture_fields(c, 4, 9);
    const auto pts = sample_points(*c, 25, 3);
    for (std::size_t a = 0; a + 2 < fx.size(); a += 2) {
        const VectorField& x = fx[a].field;
        const VectorField& y = fx[a + 1].field;
        const VectorField& z = fx[a + 2].field;
        const VectorField xy = bracket(x, y), yx = bracket(y, x);
        const VectorField j1 = bracket(x, bracket(y, z));
        const VectorField j2 = bracket(y, bracket(z, x));
        const VectorField j3 = bracket(z, bracket(x, y));
        for (const Point& p : pts)
            for (std::size_t k = 0; k < 2; ++k) {
                EXPECT_NEAR(eval(xy[k], p), -eval(yx[k], p), 1e-12);
                const double scale = 1.0 + std::abs(eval(j1[k], p));
                EXPECT_NEAR(eval(j1[k], p) + eval(j2[k], p) + eval(j3[k], p), 0.0, 1e-10 * scale);
            }
    }
}

TEST(LieDerivativeTop, TranslationOfExponentialDensity) {
    // L_{d/dx}(e^x dx^dy) = e^x dx^dy
    const ChartRef c = square();
    const Expr g = lie_derivative_top(VectorField::coordinate(c, 0), c->parse("exp(x)"));
    for (const Point& p : sample_points(*c, 10, 5)) EXPECT_NEAR(eval(g, p), std::exp(p[0]), 1e-14);
}

TEST(LieDerivativeTop, MatchesFlowOracle) {
    const ChartRef c = square();
    const VolumeForm omega(c, c->parse("exp(x^2 - y)"));
    const auto rho = [&](std::span<const double> p) { return eval(omega.density, p); };
    for (const auto& fx : fixture_fields(c, 3, 11)) {
        const Expr g = lie_derivative_top(fx.field, omega);
        for (const Point& p : sample_points(*c, 6, 2)) {
            const double want = testing::lie_top_by_flow(fn(fx.field), rho, p);
            EXPECT_NEAR(eval(g, p), want, 1e-5 * (1.0 + std::abs(want))) << fx.label;
        }
    }
}

TEST(FlatDivergence, DilationIsDimension) {
    const ChartRef c = make_chart({"x", "y", "z"}, {-1, -1, -1}, {1, 1, 1});
    EXPECT_TRUE(simplify(flat_divergence(field(c, {"x", "y", "z"}))).is_constant(3.0));
}

TEST(ExteriorDerivative, DSquaredVanishes) {
    const ChartRef c = square();
    for (const auto& f : fixture_functions(c, 3, 4)) {
        const ExprMatrix m = d_oneform(d_function(f.function, c));
        for (const Point& p : sample_points(*c, 20, 8))
            for (const auto& row : m)
                for (const Expr& e : row) EXPECT_NEAR(eval(e, p), 0.0, 1e-12) << f.label;
    }
}

TEST(ExteriorDerivative, ShearFormHasUnitCurl) {
    // d(-y dx) = dx^dy, entry (x, y) is d_x E_y - d_y E_x = 1
    const ChartRef c = square();
    const ExprMatrix m = d_oneform(OneForm(c, {c->parse("-y"), Expr(0.0)}));
    EXPECT_TRUE(simplify(m[0][1]).is_constant(1.0));
    EXPECT_TRUE(simplify(m[1][0]).is_constant(-1.0));
    EXPECT_TRUE(m[0][0].is_constant(0.0));
}

TEST(LineIntegral, ExactFormGivesEndpointDifference) {
    const ChartRef c = square();
    const Expr f = c->parse("sin(x)*y + x^2");
    const OneForm df = d_function(f, c);
    const Point a{-0.8, 0.3}, b{0.6, -0.5};
    const double want = eval(f, b) - eval(f, a);
    EXPECT_NEAR(line_integral(df, Path::segment(c, a, b)), want, 1e-12);
    // a curved path with the same ends
    const Path bent = Path::parse(c, {"-0.8 + 1.4*t", "0.3 - 0.8*t + 0.5*sin(3.141592653589793*t)"});
    EXPECT_NEAR(line_integral(df, bent), want, 1e-12);
}

TEST(LineIntegral, AngularFormAroundHoleMatchesSimpson) {
    const ChartRef c = annulus();
    const OneForm w(c, {c->parse("-y/(x^2+y^2)"), c->parse("x/(x^2+y^2)")});
    const Path loop = Path::parse(c, {"0.5*cos(6.283185307179586*t)", "0.5*sin(6.283185307179586*t)"});
    const double tau = 2 * std::numbers::pi;
    const double want = testing::adaptive_simpson(
        [&](double t) {
            const double x = 0.5 * std::cos(tau * t), y = 0.5 * std::sin(tau * t);
            const double dx = -0.5 * tau * std::sin(tau * t), dy = 0.5 * tau * std::cos(tau * t);
            return (-y * dx + x * dy) / (x * x + y * y);
        },
        0.0, 1.0);
    EXPECT_NEAR(want, tau, 1e-10);
    EXPECT_NEAR(line_integral(w, loop), want, 1e-10);
}

TEST(LineIntegral, LeavingTheDomainIsAnError) {
    const ChartRef c = annulus();
    const OneForm dx = d_function(c->parse("x"), c);
    EXPECT_THROW(line_integral(dx, Path::segment(c, Point{-0.5, 0.0}, Point{0.5, 0.0})), DomainError);
    EXPECT_THROW(line_integral(dx, Path::segment(c, Point{0.5, 0.5}, Point{1.5, 0.5})), DomainError);
}

TEST(Path, OnlyTheParameterIsAllowed) {
    const ChartRef c = square();
    EXPECT_THROW(Path::parse(c, {"x", "t"}), UnknownIdentifier);
    EXPECT_THROW(Path(c, {Expr::variable("s", 0), Expr(0.0)}), PreconditionError);
    EXPECT_THROW(Path::parse(c, {"t"}), PreconditionError);
}

TEST(VolumeForm, PositivityIsSampled) {
    const ChartRef c = square();
    EXPECT_THROW(VolumeForm(c, c->parse("x")), ValidationError);
    EXPECT_THROW(VolumeForm(c, c->parse("log(x)")), ValidationError);
    EXPECT_NO_THROW(VolumeForm(c, c->parse("2 + x")));
}

}  // namespace
}  // namespace divkit
