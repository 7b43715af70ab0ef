#include <gtest/gtest.h>

#include "iiks/asymptotics.hpp"
#include "iiks/special.hpp"

using namespace iiks;

TEST(Special, AiryAtZero) {
    const AiryPair a = airy_contour(0.0);
    EXPECT_NEAR(a.ai, 0.355028053887817, 1e-14);
    EXPECT_NEAR(a.aip, -0.258819403792807, 1e-14);
}

TEST(Special, AiryContourMatchesSeries) {
    for (double x : {-3.0, -1.2, 0.4, 1.5, 3.0}) {
        const AiryPair c = airy_contour(x), s = airy_series(x);
        EXPECT_NEAR(c.ai, s.ai, 1e-12) << x;
        EXPECT_NEAR(c.aip, s.aip, 1e-12) << x;
    }
}

TEST(Special, BesselJ0) {
    EXPECT_NEAR(bessel_j(0.0, 1.0).first, 0.7651976865579666, 1e-15);
    // J0' = -J1, J1(1) = 0.4400505857449335
    EXPECT_NEAR(bessel_j(0.0, 1.0).second, -0.4400505857449335, 1e-14);
}

TEST(Special, SineKernelDiagonal) {
    EXPECT_DOUBLE_EQ(sine_kernel(0.3, 0.3), 1.0);
    EXPECT_NEAR(sine_kernel(0.0, 1.0), 0.0, 1e-16);
    EXPECT_NEAR(sine_kernel(0.0, 0.5), 2.0 / kPi, 1e-15);
}

TEST(Special, KernelsContinuousAtDiagonal) {
    const double x = 0.7, h = 1e-5;
    EXPECT_NEAR(airy_kernel(x, x + h), airy_kernel(x, x), 1e-5);
    EXPECT_NEAR(bessel_kernel(1.0, x, x + h), bessel_kernel(1.0, x, x), 1e-5);
}

TEST(Special, FredholmOfZeroKernel) {
    const GapResult g = fredholm_det([](double, double) { return 0.0; }, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(g.value, 1.0);
}
