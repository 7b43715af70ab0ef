#include <gtest/gtest.h>

#include "iiks/lattice_ops.hpp"

using namespace iiks;

namespace {

struct Ops {
    TruncatedLattice lat;
    PhiTable phi;
    LatticeOperator D, eps, eps_direct;
};

Ops make(const WeightFamily& f) {
    Ops o;
    o.lat = truncate(f);
    o.phi = PhiTable(f, 21, o.lat);
    const auto lw = lattice_log_weights(f, o.lat);
    o.D = build_d(lw);
    o.eps = build_epsilon_factored(lw);
    o.eps_direct = build_epsilon_direct(f, o.lat);
    return o;
}

}  // namespace

TEST(LatticeOps, EpsilonIsAntisymmetric) {
    for (const auto& f : {WeightFamily::charlier(1.0), WeightFamily::meixner(0.5, 1.0)}) {
        const Ops o = make(f);
        EXPECT_LT((o.eps.m + o.eps.m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(LatticeOps, DirectEqualsFactoredOnInterior) {
    for (const auto& f : {WeightFamily::charlier(4.0), WeightFamily::meixner(0.5, 1.0)}) {
        const Ops o = make(f);
        const long h = o.lat.x_max / 2 + 1;
        EXPECT_LT((o.eps_direct.m.topLeftCorner(h, h) - o.eps.m.topLeftCorner(h, h)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(LatticeOps, DAndEpsilonAreMutualInverses) {
    const Ops o = make(WeightFamily::charlier(1.0));
    const InverseCheck c = check_mutual_inverse(o.D.m, o.eps.m, o.phi, 21);
    EXPECT_LT(c.d_eps, 1e-10);
    EXPECT_LT(c.eps_d, 1e-10);
}

TEST(LatticeOps, ApplyEpsilonMatchesMatrix) {
    const WeightFamily f = WeightFamily::charlier(2.0);
    const Ops o = make(f);
    const auto lf = epsilon_log_f(lattice_log_weights(f, o.lat));
    const std::vector<double> v = apply_epsilon(lf, o.phi.row(3));
    const Eigen::VectorXd ref = o.eps.m * Eigen::Map<const Eigen::VectorXd>(o.phi.row(3), o.lat.x_max + 1);
    for (long x = 0; x <= o.lat.x_max; ++x) EXPECT_NEAR(v[x], ref(x), 1e-13);
}

TEST(LatticeOps, DIsAntisymmetric) {
    // D- is the transpose of D+, so D = D+ - D- is antisymmetric
    const WeightFamily f = WeightFamily::charlier(1.0);
    const TruncatedLattice lat = truncate(f);
    const LatticeOperator p = build_dplus(f, lat), m = build_dminus(f, lat), d = build_d(f, lat);
    EXPECT_LT((p.m - m.m.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((d.m + d.m.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}
