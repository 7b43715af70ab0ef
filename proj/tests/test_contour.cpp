#include <gtest/gtest.h>

#include <cmath>

#include "iiks/contour.hpp"
#include "iiks/kernels.hpp"

using namespace iiks;

TEST(Quadrature, TaylorCoefficientsOfExp) {
    // (1 / 2 pi i) \oint e^z z^{-k-1} dz = 1 / k!
    for (int k : {0, 3, 10}) {
        ContourSpec c;
        c.radius = 1.5;
        const QuadResult q = circle_quadrature_log([&](cplx z) { return z - (k + 1.0) * std::log(z); }, c, 1e-15);
        EXPECT_NEAR(q.value.real(), std::exp(-std::lgamma(k + 1.0)), 1e-15);
        EXPECT_NEAR(q.value.imag(), 0.0, 1e-15);
    }
}

TEST(Quadrature, GaussLegendreIsExactForPolynomials) {
    const GaussRule g = gauss_legendre(8, 0.0, 2.0);
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += g.w[i] * std::pow(g.x[i], 15);
    EXPECT_NEAR(s, std::pow(2.0, 16) / 16.0, 1e-9);
}

TEST(Quadrature, RejectsBadSpecs) {
    ContourSpec c;
    c.radius = -1.0;
    EXPECT_THROW(validate(c), std::domain_error);
    c.radius = 1.0;
    c.node_count = 100;
    EXPECT_THROW(validate(c), std::domain_error);
}

TEST(Quadrature, ParallelForIsThreadCountIndependent) {
    std::vector<double> a(37), b(37);
    parallel_for(37, 1, [&](long i) { a[i] = std::sin(i); });
    parallel_for(37, 4, [&](long i) { b[i] = std::sin(i); });
    EXPECT_EQ(a, b);
}

TEST(SingleContour, PhiMatchesTable) {
    for (const auto& f : {WeightFamily::meixner(0.5, 1.0), WeightFamily::charlier(4.0), WeightFamily::krawtchouk(60, 0.4)}) {
        const PhiTable t(f, 12, truncate(f));
        const SingleContour sc(f, 12);
        for (int n : {0, 1, 5, 11})
            for (long x : {0L, 3L, 9L, 20L}) EXPECT_NEAR(sc.phi(n, x).value, t(n, x), 1e-12) << f.name();
    }
}

TEST(SingleContour, MeixnerEpsilonImageMatchesOracle) {
    const WeightFamily f = WeightFamily::meixner(0.5, 1.0);
    const LatticeOracle O(f, 4);
    const SingleContour sc(f, 10);
    for (int n = 0; n < 8; ++n)
        for (long y = 0; y < 12; ++y) EXPECT_NEAR(sc.eps_phi(n, y).value, O.eps_phi(n)[y], 1e-12);
}

TEST(SingleContour, PrintedMeixnerExtractionIsDegenerate) {
    // the printed extraction gives phi_0 = delta_{x,0}
    const WeightFamily f = WeightFamily::meixner(0.5, 1.0);
    const SingleContour pr(f, 4, Convention::Printed);
    EXPECT_NEAR(pr.phi(0, 0).value, 1.0, 1e-12);
    EXPECT_NEAR(pr.phi(0, 3).value, 0.0, 1e-12);
}

TEST(Symbols, EpsilonInvertsD) {
    const WeightFamily f = WeightFamily::charlier(1.0);
    for (cplx z : {cplx(0.3, 0.2), cplx(-0.7, 0.1), cplx(1.2, -0.4)}) {
        const cplx dt = symbol(SymbolPlane::CharlierT, SymbolKind::D, z, f);
        const cplx et = symbol(SymbolPlane::CharlierT, SymbolKind::Epsilon, z, f);
        EXPECT_NEAR(std::abs(dt * et - 1.0), 0.0, 1e-14);
        // omega plane carries the dz/z measure
        const cplx dw = symbol(SymbolPlane::MeixnerOmega, SymbolKind::D, z, f);
        const cplx ew = symbol(SymbolPlane::MeixnerOmega, SymbolKind::Epsilon, z, f);
        EXPECT_NEAR(std::abs(z * dw * ew - 1.0), 0.0, 1e-14);
    }
}
