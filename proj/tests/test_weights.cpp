#include <gtest/gtest.h>

#include <cmath>

#include "iiks/weights.hpp"

using namespace iiks;

namespace {

double gram_error(const WeightFamily& f, int n) {
    const TruncatedLattice lat = truncate(f);
    const PhiTable t(f, n, lat);
    double e = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b <= a; ++b) {
            double s = 0.0;
            for (long x = 0; x <= lat.x_max; ++x) s += t(a, x) * t(b, x);
            e = std::max(e, std::abs(s - (a == b ? 1.0 : 0.0)));
        }
    return e;
}

}  // namespace

TEST(Weights, GramIsIdentity) {
    EXPECT_LT(gram_error(WeightFamily::meixner(0.5, 1.0), 31), 1e-12);
    EXPECT_LT(gram_error(WeightFamily::meixner(0.3, 2.5), 31), 1e-12);
    EXPECT_LT(gram_error(WeightFamily::charlier(1.0), 31), 1e-12);
    EXPECT_LT(gram_error(WeightFamily::charlier(4.0), 31), 1e-12);
    EXPECT_LT(gram_error(WeightFamily::krawtchouk(60, 0.4), 31), 1e-12);
}

TEST(Weights, LowDegreesMatchClosedForms) {
    const double th = 2.5;
    const WeightFamily c = WeightFamily::charlier(th);
    const PhiTable t(c, 2, truncate(c));
    for (long x = 0; x < 12; ++x) {
        const double w = std::exp(-th + x * std::log(th) - std::lgamma(x + 1.0));
        EXPECT_NEAR(t(0, x), std::sqrt(w), 1e-14);
        EXPECT_NEAR(t(1, x), (x - th) / std::sqrt(th) * std::sqrt(w), 1e-13);
    }
    const WeightFamily k = WeightFamily::krawtchouk(10, 0.3);
    const PhiTable tk(k, 1, truncate(k));
    for (long x = 0; x <= 10; ++x) {
        const double lc = std::lgamma(11.0) - std::lgamma(x + 1.0) - std::lgamma(11.0 - x);
        EXPECT_NEAR(tk(0, x), std::exp(0.5 * (lc + x * std::log(0.3) + (10 - x) * std::log(0.7))), 1e-14);
    }
    const WeightFamily m = WeightFamily::meixner(0.4, 1.0);
    const PhiTable tm(m, 1, truncate(m));
    for (long x = 0; x < 12; ++x) EXPECT_NEAR(tm(0, x), std::sqrt(0.6 * std::pow(0.4, x)), 1e-14);
}

TEST(Weights, PositiveLeadingCoefficient) {
    // phi_n(x) has the sign of x^n for x beyond every zero
    const WeightFamily c = WeightFamily::charlier(1.0);
    const PhiTable t(c, 6, truncate(c));
    for (int n = 0; n < 6; ++n) EXPECT_GT(t(n, 40), 0.0);
}

TEST(Weights, RankAndTruncation) {
    EXPECT_EQ(WeightFamily::meixner(0.5, 1.0).rank(7), 14);
    EXPECT_EQ(WeightFamily::charlier(1.0).rank(7), 7);
    EXPECT_EQ(truncate(WeightFamily::krawtchouk(60, 0.4)).x_max, 60);
    const TruncatedLattice lat = truncate(WeightFamily::charlier(4.0));
    EXPECT_LT(lat.tail_mass, 1e-14);
    EXPECT_LE(log_weight(WeightFamily::charlier(4.0), lat.x_max) - log_weight(WeightFamily::charlier(4.0), 4),
              kDeepLogCut + 1.0);
}

TEST(Weights, RejectsBadParameters) {
    EXPECT_THROW(WeightFamily::meixner(1.0, 1.0), std::domain_error);
    EXPECT_THROW(WeightFamily::charlier(0.0), std::domain_error);
    EXPECT_THROW(WeightFamily::krawtchouk(0, 0.5), std::domain_error);
    EXPECT_THROW(orthonormal_phi(WeightFamily::krawtchouk(5, 0.5), 6, 0), std::domain_error);
    EXPECT_THROW(orthonormal_phi(WeightFamily::krawtchouk(5, 0.5), 0, 6), std::domain_error);
}

TEST(Weights, Beta1WeightRecursion) {
    const WeightFamily c = WeightFamily::charlier(2.0);
    // W(x) W(x-1) = w(x)
    for (long x = 1; x < 8; ++x) EXPECT_NEAR(beta1_weight(c, x) * beta1_weight(c, x - 1), weight(c, x), 1e-14);
}
