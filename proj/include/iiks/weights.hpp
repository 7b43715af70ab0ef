#pragma once

// Discrete weights, their truncated lattices, and orthonormal wave functions
// phi_n(x) = P_n(x) sqrt(w(x) / h_n).

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace iiks {

enum class Family { Meixner, Charlier, Krawtchouk };

struct WeightFamily {
    Family tag = Family::Charlier;
    double xi = 0.5;      // Meixner ratio, xi = s^2
    double beta_m = 1.0;  // Meixner shape
    double theta = 1.0;   // Charlier
    int M = 0;            // Krawtchouk support {0..M}
    double p = 0.5;

    static WeightFamily meixner(double xi, double beta_m) {
        if (!(xi > 0.0 && xi < 1.0) || !(beta_m > 0.0))
            throw std::domain_error("meixner: need 0 < xi < 1 and beta > 0");
        WeightFamily f;
        f.tag = Family::Meixner;
        f.xi = xi;
        f.beta_m = beta_m;
        return f;
    }
    static WeightFamily charlier(double theta) {
        if (!(theta > 0.0)) throw std::domain_error("charlier: need theta > 0");
        WeightFamily f;
        f.tag = Family::Charlier;
        f.theta = theta;
        return f;
    }
    static WeightFamily krawtchouk(int M, double p) {
        if (M < 1 || !(p > 0.0 && p < 1.0))
            throw std::domain_error("krawtchouk: need M >= 1 and 0 < p < 1");
        WeightFamily f;
        f.tag = Family::Krawtchouk;
        f.M = M;
        f.p = p;
        return f;
    }

    double s() const { return std::sqrt(xi); }
    double q() const { return 1.0 - p; }
    bool finite_support() const { return tag == Family::Krawtchouk; }

    // Number of wave functions in the projection K_N.
    int rank(int N) const { return tag == Family::Meixner ? 2 * N : N; }

    std::string name() const {
        switch (tag) {
            case Family::Meixner: return "meixner";
            case Family::Charlier: return "charlier";
            default: return "krawtchouk";
        }
    }
};

inline double log_weight(const WeightFamily& f, long x) {
    if (x < 0) return -std::numeric_limits<double>::infinity();
    const double xd = static_cast<double>(x);
    switch (f.tag) {
        case Family::Meixner:
            return std::lgamma(f.beta_m + xd) - std::lgamma(f.beta_m) - std::lgamma(xd + 1.0) +
                   xd * std::log(f.xi);
        case Family::Charlier:
            return -f.theta + xd * std::log(f.theta) - std::lgamma(xd + 1.0);
        default:
            if (x > f.M) return -std::numeric_limits<double>::infinity();
            return std::lgamma(f.M + 1.0) - std::lgamma(xd + 1.0) - std::lgamma(f.M - xd + 1.0) +
                   xd * std::log(f.p) + (f.M - xd) * std::log(f.q());
    }
}

inline double weight(const WeightFamily& f, long x) {
    if (x < 0 || (f.finite_support() && x > f.M))
        throw std::domain_error("weight: x outside the support");
    return std::exp(log_weight(f, x));
}

// W(0) = w(0), W(x) = w(x) / W(x-1). Evaluated in log space; a W(x-1) that
// would underflow in double is reported with its index.
inline std::vector<double> beta1_weight_log(const std::vector<double>& logw) {
    std::vector<double> out(logw.size());
    for (std::size_t x = 0; x < logw.size(); ++x) {
        if (x == 0) {
            out[0] = logw[0];
            continue;
        }
        if (out[x - 1] < std::log(std::numeric_limits<double>::min()))
            throw std::underflow_error("beta1_weight: W(" + std::to_string(x - 1) +
                                       ") underflows, division is not representable");
        out[x] = logw[x] - out[x - 1];
    }
    return out;
}

inline double beta1_weight(const WeightFamily& f, long x) {
    if (x < 0 || (f.finite_support() && x > f.M))
        throw std::domain_error("beta1_weight: x outside the support");
    std::vector<double> lw(static_cast<std::size_t>(x) + 1);
    for (long k = 0; k <= x; ++k) lw[k] = log_weight(f, k);
    return std::exp(beta1_weight_log(lw).back());
}

struct TruncatedLattice {
    long x_max = 0;
    double tail_tol = 1e-14;
    double log_cut = -760.0;  // log(w(x_max) / max w)
    double tail_mass = 0.0;   // bound on sum_{x > x_max} w / sum w
};

// Default cut: relative log weight below -760, far below the 1e-16 ratio, so
// that wave functions and epsilon images are resolved to near machine
// precision deep into the decay region.
constexpr double kDeepLogCut = -760.0;

inline TruncatedLattice truncate(const WeightFamily& f, double tail_tol = 1e-14,
                                 double log_cut = kDeepLogCut, long min_x_max = 0) {
    TruncatedLattice t;
    t.tail_tol = tail_tol;
    t.log_cut = log_cut;
    if (f.finite_support()) {
        t.x_max = f.M;
        return t;
    }
    double lmax = -std::numeric_limits<double>::infinity();
    long x = 0;
    for (;; ++x) {
        const double l = log_weight(f, x);
        const double lnext = log_weight(f, x + 1);
        lmax = std::max(lmax, l);
        if (lnext < l && l - lmax < log_cut && x >= min_x_max) {
            const double r = std::exp(lnext - l);
            const double tail = std::exp(lnext - lmax) / (1.0 - r);
            if (tail < tail_tol) {
                t.tail_mass = tail;
                break;
            }
        }
        if (x > 50000000) throw std::runtime_error("truncate: weight does not decay");
    }
    t.x_max = x;
    return t;
}

inline std::vector<double> lattice_log_weights(const WeightFamily& f, const TruncatedLattice& lat) {
    std::vector<double> lw(static_cast<std::size_t>(lat.x_max) + 1);
    for (long x = 0; x <= lat.x_max; ++x) lw[x] = log_weight(f, x);
    return lw;
}

// Monic three-term recurrence P_{n+1} = (x - b_n) P_n - a2_n P_{n-1}.
inline double recurrence_b(const WeightFamily& f, int n) {
    switch (f.tag) {
        case Family::Meixner: {
            const double c = f.xi;
            return (n + (n + f.beta_m) * c) / (1.0 - c);
        }
        case Family::Charlier: return n + f.theta;
        default: return f.p * (f.M - n) + n * f.q();
    }
}

inline double recurrence_a2(const WeightFamily& f, int n) {
    if (n == 0) return 0.0;
    switch (f.tag) {
        case Family::Meixner: {
            const double c = f.xi;
            return n * (n + f.beta_m - 1.0) * c / ((1.0 - c) * (1.0 - c));
        }
        case Family::Charlier: return n * f.theta;
        default: return n * (f.M - n + 1.0) * f.p * f.q();
    }
}

// log|P_n(x)| for the monic polynomial and its sign, with rescaling to avoid
// overflow.
inline double log_abs_monic(const WeightFamily& f, int n, double x, int* sign) {
    double pm1 = 0.0, p = 1.0, scale = 0.0;
    for (int k = 0; k < n; ++k) {
        const double pn = (x - recurrence_b(f, k)) * p - recurrence_a2(f, k) * pm1;
        pm1 = p;
        p = pn;
        const double a = std::abs(p);
        if (a > 1e100 || (a < 1e-100 && a > 0.0)) {
            const double e = std::log(a);
            p /= a;
            pm1 /= a;
            scale += e;
        }
    }
    if (sign) *sign = p > 0 ? 1 : (p < 0 ? -1 : 0);
    return p == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(p)) + scale;
}

// log h_n = log sum_x P_n(x)^2 w(x) over the lattice.
inline double log_norm_hn(const WeightFamily& f, int n, const TruncatedLattice& lat) {
    if (f.finite_support() && n > f.M) throw std::domain_error("norm_hn: degree above M");
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(lat.x_max) + 1);
    double tmax = -std::numeric_limits<double>::infinity();
    for (long x = 0; x <= lat.x_max; ++x) {
        const double t = 2.0 * log_abs_monic(f, n, static_cast<double>(x), nullptr) + log_weight(f, x);
        terms.push_back(t);
        tmax = std::max(tmax, t);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - tmax);
    return tmax + std::log(acc);
}

inline double norm_hn(const WeightFamily& f, int n, const TruncatedLattice& lat) {
    return std::exp(log_norm_hn(f, n, lat));
}

// Orthonormal wave functions on the truncated lattice by the discretized
// Stieltjes (Lanczos) process on diag(x) with full reorthogonalization.
// Forward recurrence loses all accuracy past the turning point; this does not.
// Sign convention: positive leading coefficient.
class PhiTable {
public:
    PhiTable() = default;

    PhiTable(const WeightFamily& f, int count, const TruncatedLattice& lat) : fam_(f), lat_(lat) {
        if (count < 1) throw std::domain_error("PhiTable: need at least one function");
        if (f.finite_support() && count > f.M + 1)
            throw std::domain_error("PhiTable: degree above M for a finite lattice");
        X_ = lat.x_max;
        const std::size_t L = static_cast<std::size_t>(X_) + 1;
        if (static_cast<std::size_t>(count) > L)
            throw std::domain_error("PhiTable: lattice shorter than requested degree");
        logw_ = lattice_log_weights(f, lat);
        build(count);
    }

    // Table over an explicit log-weight vector (tests, custom weights).
    PhiTable(const std::vector<double>& logw, int count) : logw_(logw) {
        X_ = static_cast<long>(logw.size()) - 1;
        if (count < 1 || static_cast<std::size_t>(count) > logw.size())
            throw std::domain_error("PhiTable: bad count");
        build(count);
    }

    int size() const { return n_; }
    long x_max() const { return X_; }
    const WeightFamily& family() const { return fam_; }
    const TruncatedLattice& lattice() const { return lat_; }
    const std::vector<double>& log_weights() const { return logw_; }
    bool underflow() const { return underflow_; }

    double operator()(int n, long x) const {
        if (n < 0 || n >= n_) throw std::domain_error("PhiTable: degree out of range");
        if (x < 0) throw std::domain_error("PhiTable: negative x");
        if (x > X_) return 0.0;
        return q_[static_cast<std::size_t>(n) * stride() + static_cast<std::size_t>(x)];
    }
    const double* row(int n) const { return q_.data() + static_cast<std::size_t>(n) * stride(); }
    std::size_t stride() const { return static_cast<std::size_t>(X_) + 1; }

    // Orthonormal recurrence x phi_n = a_{n+1} phi_{n+1} + b_n phi_n + a_n phi_{n-1}.
    double alpha(int n) const { return alpha_.at(n); }
    double beta(int n) const { return beta_.at(n); }

private:
    void build(int count) {
        n_ = count;
        const std::size_t L = stride();
        q_.assign(static_cast<std::size_t>(count) * L, 0.0);
        alpha_.assign(count, 0.0);
        beta_.assign(count + 1, 0.0);
        const double lmax = *std::max_element(logw_.begin(), logw_.end());
        double nrm = 0.0;
        for (std::size_t x = 0; x < L; ++x) {
            const double e = 0.5 * (logw_[x] - lmax);
            if (e < -745.0 && std::isfinite(logw_[x])) underflow_ = true;
            q_[x] = std::exp(e);
            nrm += q_[x] * q_[x];
        }
        nrm = std::sqrt(nrm);
        for (std::size_t x = 0; x < L; ++x) q_[x] /= nrm;
        std::vector<double> v(L);
        for (int n = 0; n < count; ++n) {
            const double* qn = &q_[n * L];
            for (std::size_t x = 0; x < L; ++x) v[x] = static_cast<double>(x) * qn[x];
            double a = 0.0;
            for (std::size_t x = 0; x < L; ++x) a += v[x] * qn[x];
            alpha_[n] = a;
            if (n + 1 == count) break;
            for (std::size_t x = 0; x < L; ++x) v[x] -= a * qn[x];
            if (n > 0) {
                const double* qp = &q_[(n - 1) * L];
                for (std::size_t x = 0; x < L; ++x) v[x] -= beta_[n] * qp[x];
            }
            for (int pass = 0; pass < 2; ++pass) {
                for (int k = 0; k <= n; ++k) {
                    const double* qk = &q_[k * L];
                    double d = 0.0;
                    for (std::size_t x = 0; x < L; ++x) d += v[x] * qk[x];
                    for (std::size_t x = 0; x < L; ++x) v[x] -= d * qk[x];
                }
            }
            double b = 0.0;
            for (std::size_t x = 0; x < L; ++x) b += v[x] * v[x];
            b = std::sqrt(b);
            if (!(b > 0.0)) throw std::runtime_error("PhiTable: Lanczos breakdown");
            beta_[n + 1] = b;
            double* qn1 = &q_[(n + 1) * L];
            for (std::size_t x = 0; x < L; ++x) qn1[x] = v[x] / b;
        }
    }

    WeightFamily fam_;
    TruncatedLattice lat_;
    std::vector<double> logw_;
    std::vector<double> q_;
    std::vector<double> alpha_, beta_;
    long X_ = 0;
    int n_ = 0;
    bool underflow_ = false;
};

// Single value phi_n(x); builds a table, so prefer PhiTable for many values.
inline double orthonormal_phi(const WeightFamily& f, int n, long x) {
    if (n < 0) throw std::domain_error("orthonormal_phi: negative degree");
    if (x < 0 || (f.finite_support() && x > f.M))
        throw std::domain_error("orthonormal_phi: x outside the support");
    if (f.finite_support() && n > f.M) throw std::domain_error("orthonormal_phi: degree above M");
    PhiTable t(f, n + 1, truncate(f));
    return t(n, x);
}

}  // namespace iiks
