#include <gtest/gtest.h>

#include "iiks/kernels.hpp"

using namespace iiks;

TEST(Kernels, ContourMatchesDirect) {
    const WeightFamily f = WeightFamily::charlier(1.0);
    const Window w = default_window(f, 4);
    EXPECT_LT(rel_error(projection_contour(f, 4, w), projection_direct(f, 4, w)), 1e-10);
}

TEST(Kernels, IdempotentOnSupportWindow) {
    const WeightFamily f = WeightFamily::charlier(4.0);
    const Window w = support_window(f, 4);
    const Eigen::MatrixXd K = projection_direct(f, 4, w);
    EXPECT_LT((K * K - K).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(K.trace(), 4.0, 1e-9);
}

TEST(Kernels, OracleS4Antisymmetric) {
    const WeightFamily f = WeightFamily::charlier(1.0);
    const KernelBlockSet b = oracle_block(f, 4, 4, {0, 20});
    EXPECT_EQ(b.provenance, "oracle");
    EXPECT_LT((b.S + b.S.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kernels, OracleS1IsKPlusRankOne) {
    const WeightFamily f = WeightFamily::charlier(1.0);
    const Window w{0, 20};
    const LatticeOracle O(f, 4);
    const KernelBlockSet b = O.block(1, w);
    const Eigen::MatrixXd K = O.K(w);
    Eigen::VectorXd ua(w.size()), ub(w.size());
    for (long i = 0; i < w.size(); ++i) {
        ua(i) = O.phi()(O.rank(), i);
        ub(i) = O.eps_phi(O.rank() - 1)[i];
    }
    EXPECT_LT((b.S - K - 0.5 * ua * ub.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Kernels, PrintedMeixnerNesting) {
    const WeightFamily f = WeightFamily::meixner(0.5, 1.0);
    const int N = 3;
    const Window w{0, 12};
    const Eigen::MatrixXd K = projection_direct(f, N, w);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(w.size(), w.size());
    PrintedDouble inner(f, N, printed_pair(f));
    EXPECT_LT((inner.projection(w) - (K - I)).cwiseAbs().maxCoeff(), 1e-12);
    PrintedDouble outer(f, N, meixner_outer_band(f));
    EXPECT_LT((outer.projection(w) - K).cwiseAbs().maxCoeff(), 1e-6);
}

// Radii below 1 enclose no singularity beyond the cancelled z = 0 terms, so
// both the printed projection and the constant-symbol composition vanish.
TEST(Kernels, PrintedCharlierVanishes) {
    const WeightFamily f = WeightFamily::charlier(1.0);
    const Window w{0, 12};
    PrintedDouble pd(f, 3, printed_pair(f));
    EXPECT_LT(pd.projection(w).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(pd.compose(w, [](cplx) { return cplx(1.0); }).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GT(projection_direct(f, 3, w).cwiseAbs().maxCoeff(), 0.1);
}
