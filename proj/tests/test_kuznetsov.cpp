#include <gtest/gtest.h>

#include "iiks/kuznetsov.hpp"

using namespace iiks;

TEST(Kuznetsov, GaussianClosedForm) {
    const double rp = std::sqrt(kPi);
    EXPECT_NEAR(std::abs(m_h_gaussian(1.0, 1.0) - rp), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(m_h_gaussian(1.0, std::exp(1.0)) - rp * std::exp(-1.0)), 0.0, 1e-15);
    const SpectralTest t = SpectralTest::gaussian(1.0);
    EXPECT_NEAR(std::abs(m_h_numeric(t, std::exp(1.0)).value - rp * std::exp(-1.0)), 0.0, 1e-12);
}

TEST(Kuznetsov, SectorAndReality) {
    EXPECT_LT(compare_on_sector(1.0, sector_grid()).max_rel, 1e-8);
    const RealityReport r = reality_symmetry_check(SpectralTest::gaussian(2.0));
    EXPECT_LT(r.max_imag_unit_circle, 1e-10);
    EXPECT_LT(r.real_axis_imag, 1e-10);
    EXPECT_LT(r.conjugation_error, 1e-12);
}

TEST(Kuznetsov, TabulatedTest) {
    std::vector<double> t, h;
    for (int i = -200; i <= 200; ++i) {
        t.push_back(0.05 * i);
        h.push_back(std::exp(-t.back() * t.back()));
    }
    const SpectralTest s = SpectralTest::tabulated(t, h);
    EXPECT_TRUE(s.certificate().ok);
    EXPECT_EQ(s.evenness_error(), 0.0);
    t[3] += 0.01;
    t[t.size() - 4] -= 0.01;
    EXPECT_THROW(SpectralTest::tabulated(t, h), std::domain_error);
}

TEST(Kuznetsov, BranchCut) {
    EXPECT_THROW(check_branch(cplx(-1.0, 0.0)), std::domain_error);
    EXPECT_THROW(check_branch(cplx(0.0, 0.0)), std::domain_error);
    EXPECT_NO_THROW(check_branch(cplx(-1.0, 1e-3)));
}

TEST(Kuznetsov, UniversalVariable) {
    const WeightFamily f = WeightFamily::charlier(1.0);
    const cplx z(0.3, -0.2);
    EXPECT_EQ(universal_w(f, z), 1.0 + z);
    EXPECT_EQ(universal_w_derivative(f, z), cplx(1.0));
}

TEST(Kuznetsov, SplicedOracleRejectsMeixner) {
    EXPECT_THROW(SplicedOracle(WeightFamily::meixner(0.5, 1.0), 4, SpectralTest::gaussian(1.0)), std::domain_error);
}
