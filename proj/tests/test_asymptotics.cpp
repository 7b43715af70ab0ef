#include <gtest/gtest.h>

#include "iiks/asymptotics.hpp"

using namespace iiks;

TEST(Asymptotics, CosThetaAtSupportEnds) {
    for (const AsymParams a : {AsymParams::meixner(0.5), AsymParams::charlier(2.0), AsymParams::krawtchouk(0.5, 0.3)}) {
        const auto [lo, hi] = bulk_support(a);
        EXPECT_NEAR(std::abs(cos_theta(a, lo)), 1.0, 1e-12) << a.name();
        EXPECT_NEAR(std::abs(cos_theta(a, hi)), 1.0, 1e-12) << a.name();
        EXPECT_NEAR(cos_theta(a, lo), -cos_theta(a, hi), 1e-12) << a.name();
    }
    EXPECT_NEAR(cos_theta(AsymParams::charlier(1.0), 2.0), 0.0, 1e-15);
}

// cos theta(u) rounds to +-1 within about sqrt(eps) of each edge, which caps the accuracy near 1e-8.
TEST(Asymptotics, DensityIntegratesToOne) {
    for (const AsymParams a : {AsymParams::meixner(0.5), AsymParams::charlier(2.0), AsymParams::krawtchouk(0.5, 0.3)})
        EXPECT_NEAR(integrate_rho(a), 1.0, 1e-7) << a.name();
}

TEST(Asymptotics, SpacingRule) {
    const BulkPoint b = saddle_solve(AsymParams::charlier(1.0), 2.0);
    EXPECT_NEAR(2.0 * kPi * b.delta * b.rho, 1.0, 1e-14);
    EXPECT_LT(b.residual, 1e-14);
    EXPECT_LT(b.phase_residual, 1e-12);
    EXPECT_GT(b.z_plus.imag(), 0.0);
}

TEST(Asymptotics, MeixnerClosedFormMatchesOracle) {
    for (double xi : {0.25, 0.5, 0.81}) {
        const MeixnerGeometric g(std::sqrt(xi));
        const LatticeOracle O(WeightFamily::meixner(xi, 1.0), 4);
        EXPECT_LT((g.E_matrix(O.rank()) - O.E()).cwiseAbs().maxCoeff(), 1e-10) << xi;
    }
}

TEST(Asymptotics, MeixnerTables) {
    const double xi = 0.5;
    const MeixnerGeometric g(std::sqrt(xi));
    const LatticeOracle O(WeightFamily::meixner(xi, 1.0), 3);
    const long W = 30;
    const Eigen::MatrixXd P = g.phi_table(4, W);
    for (int n = 0; n < 4; ++n) {
        EXPECT_NEAR(P(n, 7), g.phi(n, 7), 1e-13);
        for (long x = 0; x < W; ++x) EXPECT_NEAR(P(n, x), O.phi()(n, x), 1e-12);
        const std::vector<double> e = g.eps_phi_table(n, W);
        for (long x = 0; x < W; ++x) EXPECT_NEAR(e[x], O.eps_phi(n)[x], 1e-12);
    }
}

TEST(Asymptotics, AmplitudeFit) {
    const std::vector<double> T{1.0, -2.0, 0.5}, V{3.0, -6.0, 1.5};
    const AmplitudeFit f = fit_amplitude(V, T);
    EXPECT_FALSE(f.degenerate);
    EXPECT_NEAR(f.c, 3.0, 1e-15);
    EXPECT_NEAR(f.residual, 0.0, 1e-15);
    const AmplitudeFit z = fit_amplitude({1.0, 1.0, 0.0}, {1.0, -1.0, 0.0});
    EXPECT_TRUE(z.degenerate);
    EXPECT_DOUBLE_EQ(z.residual, z.residual_unfitted);
}

TEST(Asymptotics, LogLogSlope) {
    std::vector<double> x, y;
    for (int k = 1; k <= 6; ++k) {
        x.push_back(k);
        y.push_back(3.0 * std::pow(k, -1.5));
    }
    EXPECT_NEAR(loglog_slope(x, y), -1.5, 1e-13);
}

TEST(Asymptotics, ParameterDomains) {
    EXPECT_THROW(AsymParams::charlier(-1.0), std::domain_error);
    EXPECT_THROW(AsymParams::meixner(1.0), std::domain_error);
    EXPECT_THROW(AsymParams::krawtchouk(0.5, 0.0), std::domain_error);
}
