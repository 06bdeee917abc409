#include <divkit/divops.hpp>
#include <divkit/gauss.hpp>
#include <divkit/quadrature.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace divkit {
namespace {

ChartRef square() { return make_chart({"x", "y"}, {-1, -1}, {1, 1}); }

double bump_1d(double t) { return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; }

// Integral of bump over [-1, 1].
double bump_mass() { return testing::adaptive_simpson(bump_1d, -1.0, 1.0, 1e-14); }

TEST(GaussLegendre, NodesAndWeights) {
    const QuadratureRule r = QuadratureRule::gauss_legendre(16);
    ASSERT_EQ(r.order(), 16);
    EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 2.0, 1e-14);
    for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_NEAR(r.nodes[i], -r.nodes[15 - i], 1e-15);
        EXPECT_NEAR(r.weights[i], r.weights[15 - i], 1e-15);
        EXPECT_GT(r.weights[i], 0.0);
        EXPECT_LT(std::abs(r.nodes[i]), 1.0);
    }
}

TEST(GaussLegendre, ExactForPolynomialsUpToDegree31) {
    const QuadratureRule r = QuadratureRule::gauss_legendre(16);
    for (int k = 0; k <= 31; ++k) {
        const double got = gauss_segment([k](double t) { return std::pow(t, k); }, -1.0, 1.0, r, 1);
        const double want = k % 2 ? 0.0 : 2.0 / (k + 1);
        EXPECT_NEAR(got, want, 1e-14) << k;
    }
    // degree 32 is the first one it misses
    const double got = gauss_segment([](double t) { return std::pow(t, 32); }, -1.0, 1.0, r, 1);
    EXPECT_GT(std::abs(got - 2.0 / 33), 1e-12);
}

TEST(GaussLegendre, OddOrderHasCentreNode) {
    const QuadratureRule r = QuadratureRule::gauss_legendre(5);
    EXPECT_EQ(r.nodes[2], 0.0);
    EXPECT_NEAR(r.weights[2], 128.0 / 225.0, 1e-15);
}

TEST(GaussSegment, SegmentCountFollowsLength) {
    const QuadratureRule& r = QuadratureRule::standard();
    EXPECT_EQ(r.segments_for(1.0), 8);
    EXPECT_EQ(r.segments_for(2.0), 16);
    EXPECT_EQ(r.segments_for(0.01), 1);
    EXPECT_NEAR(gauss_segment([](double t) { return std::sin(t); }, 0.0, 3.0), 1.0 - std::cos(3.0), 1e-14);
    EXPECT_THROW(gauss_segment([](double) { return 1.0; }, 0.0, 1.0, r, 0), PreconditionError);
}

TEST(GaussSegment, BumpMassAgreesWithSimpson) {
    const double want = bump_mass();
    EXPECT_NEAR(want, 0.443993816, 1e-9);
    EXPECT_NEAR(gauss_segment(bump_1d, -1.0, 1.0), want, 1e-10);
}

TEST(BoxIntegral, SeparableProducts) {
    const double lo[3] = {0, -1, 0.5}, hi[3] = {1, 2, 1.5};
    const double got = box_integral([](std::span<const double> p) { return p[0] * p[0] * std::exp(p[1]) * p[2]; }, lo,
                                    hi, 4, QuadratureRule::standard());
    const double want = (1.0 / 3.0) * (std::exp(2.0) - std::exp(-1.0)) * ((1.5 * 1.5 - 0.25) / 2.0);
    EXPECT_NEAR(got, want, 1e-12);
}

TEST(GridIntegral, RefusesChartsWithHoles) {
    const ChartRef holed = make_chart({"x", "y"}, {-1, -1}, {1, 1}, {Disk{{0, 0}, 0.2}}, Point{0.5, 0.5});
    EXPECT_THROW(grid_integral([](std::span<const double>) { return 1.0; }, *holed), PreconditionError);
    EXPECT_NEAR(grid_integral([](std::span<const double>) { return 1.0; }, *square(), 8), 4.0, 1e-13);
}

TEST(BumpField, SupportAndShape) {
    const ChartRef c = square();
    const Point centre{0.1, 0.2};
    const VectorField x = bump_field(c, centre, 0.5, 0);
    EXPECT_TRUE(x[1].is_constant(0.0));
    const double inside[2] = {0.1, 0.2}, outside[2] = {0.65, 0.2};
    EXPECT_NEAR(eval(x[0], inside), std::exp(-2.0), 1e-15);
    EXPECT_EQ(eval(x[0], outside), 0.0);
}

TEST(BumpField, RejectsBadSupport) {
    const ChartRef c = square();
    EXPECT_THROW(bump_field(c, Point{0, 0}, 5.0, 0), PreconditionError);
    EXPECT_THROW(bump_field(c, Point{0.8, 0}, 0.3, 0), PreconditionError);
    EXPECT_THROW(bump_field(c, Point{0, 0}, 0.3, 2), PreconditionError);
    EXPECT_THROW(bump_field(c, Point{0, 0}, 0.0, 0), PreconditionError);
    const ChartRef holed = make_chart({"x", "y"}, {-1, -1}, {1, 1}, {Disk{{0, 0}, 0.2}}, Point{0.5, 0.5});
    EXPECT_THROW(bump_field(holed, Point{0.3, 0}, 0.2, 0), PreconditionError);
    EXPECT_NO_THROW(bump_field(holed, Point{0.6, 0.6}, 0.3, 1));
}

TEST(IntegralVanishing, ThreeDensities) {
    const ChartRef c = square();
    for (const char* rho : {"1", "exp(x^2 - y)", "2 + sin(3*x)*cos(y)"}) {
        const VolumeForm omega(c, c->parse(rho));
        for (std::size_t dir = 0; dir < 2; ++dir) {
            const VectorField x = bump_field(c, Point{0.1, -0.2}, 0.6, dir);
            EXPECT_LE(std::abs(integral_vanishing_check(omega, x, kDefaultGridResolution)), 1e-6) << rho;
            EXPECT_LE(std::abs(integrate_divergence(DivOperator::volume(omega), omega.density, x)), 1e-6) << rho;
        }
    }
}

TEST(IntegralVanishing, NeedsVanishingBoundaryValues) {
    const ChartRef c = square();
    const VolumeForm omega(c, Expr(1.0));
    EXPECT_THROW(integral_vanishing_check(omega, VectorField::coordinate(c, 0)), PreconditionError);
}

TEST(IntegrateDivergence, NonClosedPerturbationDoesNotVanish) {
    // div + E with E = -y dx on X = b((x-0.1)/0.5) b((y-0.2)/0.5) d/dx, flat density:
    // the divergence part integrates to 0, the E part to -(0.2 * 0.5 I)(0.5 I).
    const ChartRef c = square();
    const DivOperator flat = DivOperator::volume(VolumeForm(c, Expr(1.0)));
    const DivOperator shear = DivOperator::perturbed(flat, OneForm(c, {c->parse("-y"), Expr(0.0)}));
    const VectorField x = bump_field(c, Point{0.1, 0.2}, 0.5, 0);
    const double mass = bump_mass();
    EXPECT_NEAR(integrate_divergence(shear, Expr(1.0), x), -0.05 * mass * mass, 1e-9);
    EXPECT_NEAR(-0.05 * mass * mass, -0.009856525, 1e-9);
}

TEST(IntegrateDivergence, HalfDensityCarriesNoVanishing) {
    // s = 1/2: integral of (X(log rho) + div X / 2) rho = -(1/2) * integral of rho div X, nonzero for this bump.
    const ChartRef c = square();
    const Expr rho = c->parse("exp(x)");
    const DivOperator half = DivOperator::sdensity(c, rho, 0.5);
    const VectorField x = bump_field(c, Point{0.0, 0.0}, 0.8, 0);
    const double got = integrate_divergence(half, rho, x);
    // By parts: -(1/2) int e^x d_x(b) = (1/2) int e^x b; b = bump(x/0.8) bump(y/0.8).
    const double bx = testing::adaptive_simpson([](double t) { return std::exp(t) * bump_1d(t / 0.8); }, -0.8, 0.8);
    const double by = 0.8 * bump_mass();
    EXPECT_NEAR(got, 0.5 * bx * by, 1e-9);
    EXPECT_GT(std::abs(got), 1e-3);
}

TEST(IntegrateDivergence, BlackboxMatchesSymbolic) {
    const ChartRef c = square();
    const VolumeForm omega(c, c->parse("exp(x^2 - y)"));
    const DivOperator d = DivOperator::volume(omega);
    const VectorField x = bump_field(c, Point{0.2, 0.1}, 0.5, 1);
    // an integrand that is not a total divergence
    const Expr w = c->parse("1 + x^2");
    const double sym = integrate_divergence(d, w, x, 16);
    const double num = integrate_divergence(DivOperator::opaque(d), w, x, 16);
    EXPECT_NEAR(sym, num, 1e-7);
}

}  // namespace
}  // namespace divkit
