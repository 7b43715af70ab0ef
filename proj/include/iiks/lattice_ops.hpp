#pragma once

// Nearest-neighbour difference operators D+, D-, D = D+ - D- and the inverse
// difference operator epsilon on the truncated lattice {0..X}.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "weights.hpp"

namespace iiks {

enum class OpKind { Dplus, Dminus, D, EpsilonDirect, EpsilonFactored };

struct LatticeOperator {
    Eigen::MatrixXd m;
    OpKind kind = OpKind::D;
    long x_max = 0;
    double tail_bound = 0.0;  // epsilon_direct: relative truncation certificate
};

inline LatticeOperator build_dplus(const std::vector<double>& lw) {
    const long X = static_cast<long>(lw.size()) - 1;
    LatticeOperator op{Eigen::MatrixXd::Zero(X + 1, X + 1), OpKind::Dplus, X};
    for (long x = 0; x < X; ++x) op.m(x, x + 1) = std::exp(0.5 * (lw[x] - lw[x + 1]));
    return op;
}

inline LatticeOperator build_dminus(const std::vector<double>& lw) {
    const long X = static_cast<long>(lw.size()) - 1;
    LatticeOperator op{Eigen::MatrixXd::Zero(X + 1, X + 1), OpKind::Dminus, X};
    for (long x = 1; x <= X; ++x) op.m(x, x - 1) = std::exp(0.5 * (lw[x - 1] - lw[x]));
    return op;
}

inline LatticeOperator build_d(const std::vector<double>& lw) {
    LatticeOperator op = build_dplus(lw);
    op.m -= build_dminus(lw).m;
    op.kind = OpKind::D;
    return op;
}

inline LatticeOperator build_dplus(const WeightFamily& f, const TruncatedLattice& t) {
    return build_dplus(lattice_log_weights(f, t));
}
inline LatticeOperator build_dminus(const WeightFamily& f, const TruncatedLattice& t) {
    return build_dminus(lattice_log_weights(f, t));
}
inline LatticeOperator build_d(const WeightFamily& f, const TruncatedLattice& t) {
    return build_d(lattice_log_weights(f, t));
}

// log of the diagonal factor in epsilon = F Upsilon F:
//   log f(2k)   =  sum_{j=1}^{2k}   (-1)^j L_j - L_{2k}/2
//   log f(2k+1) = -sum_{j=1}^{2k+1} (-1)^j L_j - L_{2k+1}/2
inline std::vector<double> epsilon_log_f(const std::vector<double>& lw) {
    std::vector<double> lf(lw.size());
    double alt = 0.0;
    for (std::size_t x = 0; x < lw.size(); ++x) {
        if (x > 0) alt += (x % 2 == 0 ? lw[x] : -lw[x]);
        lf[x] = (x % 2 == 0 ? alt : -alt) - 0.5 * lw[x];
    }
    return lf;
}

// Factored form. Fails with the offending index when F leaves double range.
inline LatticeOperator build_epsilon_factored(const std::vector<double>& lw) {
    const long X = static_cast<long>(lw.size()) - 1;
    const std::vector<double> lf = epsilon_log_f(lw);
    std::vector<double> f(lf.size());
    for (long x = 0; x <= X; ++x) {
        if (!(std::abs(lf[x]) < 700.0))
            throw std::overflow_error("epsilon_factored: F(" + std::to_string(x) +
                                      ") leaves double range (log f = " + std::to_string(lf[x]) + ")");
        f[x] = std::exp(lf[x]);
    }
    LatticeOperator op{Eigen::MatrixXd::Zero(X + 1, X + 1), OpKind::EpsilonFactored, X};
    for (long m = 0; m <= X; ++m) {
        if (m % 2 == 1) {
            for (long k = 0; k < m; k += 2) op.m(m, k) = f[m] * f[k];
        } else {
            for (long k = m + 1; k <= X; k += 2) op.m(m, k) = -f[m] * f[k];
        }
    }
    return op;
}

inline LatticeOperator build_epsilon_factored(const WeightFamily& f, const TruncatedLattice& t) {
    return build_epsilon_factored(lattice_log_weights(f, t));
}

// Direct form from consecutive weight ratios:
//   eps(2m, 2k+1)   = -sqrt(w(2m)/w(2k+1)) prod_{j=m}^{k} w(2j+1)/w(2j)
//   eps(2m+1, 2k)   =  sqrt(w(2k)/w(2m+1)) prod_{j=k}^{m} w(2j+1)/w(2j)
// Even rows are infinite sums cut at X; the certificate bounds the geometric
// tail of |eps(2m, .)| sqrt(w) past the cut relative to the largest term.
// Rows with 2m > X/2 are boundary rows and do not enter the certificate.
inline LatticeOperator build_epsilon_direct(const std::vector<double>& lw, bool finite_support,
                                            double tail_tol = 1e-12) {
    const long X = static_cast<long>(lw.size()) - 1;
    LatticeOperator op{Eigen::MatrixXd::Zero(X + 1, X + 1), OpKind::EpsilonDirect, X};
    std::vector<double> ratio((X + 2) / 2, 0.0);  // w(2j+1)/w(2j)
    for (long j = 0; 2 * j + 1 <= X; ++j) ratio[j] = std::exp(lw[2 * j + 1] - lw[2 * j]);
    const double lmax = *std::max_element(lw.begin(), lw.end());
    double worst = 0.0;
    for (long m = 0; 2 * m <= X; ++m) {
        double prod = 1.0, tmax = 0.0, tlast = 0.0, tprev = 0.0;
        for (long k = m; 2 * k + 1 <= X; ++k) {
            prod *= ratio[k];
            const double c = -std::exp(0.5 * (lw[2 * m] - lw[2 * k + 1])) * prod;
            op.m(2 * m, 2 * k + 1) = c;
            tprev = tlast;
            tlast = std::abs(c) * std::exp(0.5 * (lw[2 * k + 1] - lmax));
            tmax = std::max(tmax, tlast);
        }
        if (!finite_support && 4 * m <= X && tmax > 0.0) {
            const double r = tprev > 0.0 ? tlast / tprev : 1.0;
            const double tail = r < 1.0 ? tlast * r / (1.0 - r) : HUGE_VAL;
            worst = std::max(worst, tail / tmax);
        }
    }
    for (long m = 0; 2 * m + 1 <= X; ++m) {
        double prod = 1.0;
        for (long k = m; k >= 0; --k) {
            prod *= ratio[k];
            op.m(2 * m + 1, 2 * k) = std::exp(0.5 * (lw[2 * k] - lw[2 * m + 1])) * prod;
        }
    }
    op.tail_bound = worst;
    if (worst > tail_tol)
        throw std::runtime_error("epsilon_direct: tail bound " + std::to_string(worst) +
                                 " exceeds tolerance at X = " + std::to_string(X) +
                                 "; enlarge the lattice (try X >= " + std::to_string(2 * X) + ")");
    return op;
}

inline LatticeOperator build_epsilon_direct(const WeightFamily& f, const TruncatedLattice& t,
                                            double tail_tol = 1e-12) {
    return build_epsilon_direct(lattice_log_weights(f, t), f.finite_support(), tail_tol);
}

// epsilon v in O(X) with prefix and suffix sums over the factored form.
inline std::vector<double> apply_epsilon(const std::vector<double>& lf, const double* v) {
    const std::size_t L = lf.size();
    std::vector<double> f(L), out(L, 0.0);
    for (std::size_t x = 0; x < L; ++x) f[x] = std::exp(lf[x]);
    double suffix = 0.0;  // sum_{odd k >= x} f(k) v(k)
    for (std::size_t i = L; i-- > 0;) {
        if (i % 2 == 1) suffix += f[i] * v[i];
        else out[i] = -f[i] * suffix;
    }
    double prefix = 0.0;  // sum_{even k < x} f(k) v(k)
    for (std::size_t i = 0; i < L; ++i) {
        if (i % 2 == 0) prefix += f[i] * v[i];
        else out[i] = f[i] * prefix;
    }
    return out;
}

struct InverseCheck {
    double d_eps = 0.0;  // max_n max_{x<=window} |D eps phi_n - phi_n|
    double eps_d = 0.0;  // same for eps D phi_n
    long window = 0;
};

// Interior check of D eps = eps D = I on phi_0..phi_{n_test-1}. Boundary
// rows x > window feel the truncation and are excluded.
inline InverseCheck check_mutual_inverse(const Eigen::MatrixXd& D, const Eigen::MatrixXd& eps,
                                         const PhiTable& phi, int n_test, long window = -1) {
    const long X = phi.x_max();
    if (window < 0) window = X / 2;
    InverseCheck r;
    r.window = window;
    for (int n = 0; n < n_test && n < phi.size(); ++n) {
        Eigen::Map<const Eigen::VectorXd> v(phi.row(n), X + 1);
        const Eigen::VectorXd a = D * (eps * v);
        const Eigen::VectorXd b = eps * (D * v);
        for (long x = 0; x <= window; ++x) {
            r.d_eps = std::max(r.d_eps, std::abs(a(x) - v(x)));
            r.eps_d = std::max(r.eps_d, std::abs(b(x) - v(x)));
        }
    }
    return r;
}

}  // namespace iiks
