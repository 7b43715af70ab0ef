#pragma once

// Saddle points, densities and spacings of the three families, and the
// convergence harnesses that compare finite-N blocks with the universal
// sine, Airy and Bessel kernels.

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "kernels.hpp"
#include "special.hpp"

namespace iiks {

// Asymptotic parameters: Meixner s = sqrt(xi); Charlier tau = theta / N;
// Krawtchouk gamma = N / M and p.
struct AsymParams {
    Family family = Family::Charlier;
    double s = 0.5;
    double tau = 1.0;
    double gamma = 0.5;
    double p = 0.5;
    double beta_m = 1.0;

    static AsymParams meixner(double s, double beta_m = 1.0) {
        if (!(s > 0.0 && s < 1.0) || !(beta_m > 0.0)) throw std::domain_error("meixner: need 0 < s < 1, beta_M > 0");
        AsymParams a;
        a.family = Family::Meixner;
        a.s = s;
        a.beta_m = beta_m;
        return a;
    }
    static AsymParams charlier(double tau) {
        if (!(tau > 0.0)) throw std::domain_error("charlier: tau must be positive");
        AsymParams a;
        a.family = Family::Charlier;
        a.tau = tau;
        return a;
    }
    static AsymParams krawtchouk(double gamma, double p) {
        if (!(gamma > 0.0 && gamma < 1.0 && p > 0.0 && p < 1.0))
            throw std::domain_error("krawtchouk: need 0 < gamma < 1, 0 < p < 1");
        AsymParams a;
        a.family = Family::Krawtchouk;
        a.gamma = gamma;
        a.p = p;
        return a;
    }
    double q() const { return 1.0 - p; }
    std::string name() const {
        switch (family) {
            case Family::Meixner: return "meixner";
            case Family::Charlier: return "charlier";
            default: return "krawtchouk";
        }
    }
};

// Large parameter per family: 2N, N, M.
struct FiniteModel {
    WeightFamily f;
    int N = 0;
    int A = 0;
};

inline FiniteModel model_at(const AsymParams& a, int A) {
    FiniteModel m;
    m.A = A;
    switch (a.family) {
        case Family::Meixner:
            if (A % 2) throw std::domain_error("meixner: the large parameter 2N must be even");
            m.N = A / 2;
            m.f = WeightFamily::meixner(a.s * a.s, a.beta_m);
            break;
        case Family::Charlier:
            m.N = A;
            m.f = WeightFamily::charlier(a.tau * A);
            break;
        default:
            m.N = static_cast<int>(std::lround(a.gamma * A));
            m.f = WeightFamily::krawtchouk(A, a.p);
            break;
    }
    return m;
}

// ------------------------------------------------------------ closed forms

inline std::pair<double, double> bulk_support(const AsymParams& a) {
    switch (a.family) {
        case Family::Meixner: return {(1.0 - a.s) / (1.0 + a.s), (1.0 + a.s) / (1.0 - a.s)};
        case Family::Charlier: {
            const double r = 2.0 * std::sqrt(a.tau);
            return {1.0 + a.tau - r, 1.0 + a.tau + r};
        }
        default: {
            const double c = a.p - a.gamma * (a.p - a.q());
            const double r = 2.0 * std::sqrt(a.gamma * (1.0 - a.gamma) * a.p * a.q());
            return {c - r, c + r};
        }
    }
}

inline double cos_theta(const AsymParams& a, double u) {
    switch (a.family) {
        case Family::Meixner: return (u * (1.0 + a.s * a.s) + (a.s * a.s - 1.0)) / (2.0 * a.s * u);
        case Family::Charlier: return (u - (1.0 + a.tau)) / (2.0 * std::sqrt(a.tau));
        default:
            return ((a.p - u) - a.gamma * (a.p - a.q())) / (2.0 * std::sqrt(a.gamma * (1.0 - a.gamma) * a.p * a.q()));
    }
}

// d cos(theta) / du.
inline double cos_theta_du(const AsymParams& a, double u) {
    switch (a.family) {
        case Family::Meixner: return (1.0 - a.s * a.s) / (2.0 * a.s * u * u);
        case Family::Charlier: return 1.0 / (2.0 * std::sqrt(a.tau));
        default: return -1.0 / (2.0 * std::sqrt(a.gamma * (1.0 - a.gamma) * a.p * a.q()));
    }
}

// Saddle quadratic c2 z^2 + c1 z + c0.
inline std::array<double, 3> saddle_quadratic(const AsymParams& a, double u) {
    switch (a.family) {
        case Family::Meixner: {
            const double s = a.s;
            return {u * s, (1.0 - u) - (1.0 + u) * s * s, u * s};
        }
        case Family::Charlier: return {a.tau, a.tau + 1.0 - u, 1.0};
        default: {
            const double pq = a.p * a.q();
            return {pq * (1.0 - a.gamma), -((a.p - u) - a.gamma * (a.p - a.q())), a.gamma};
        }
    }
}

inline cplx quadratic_value(const std::array<double, 3>& c, cplx z) { return (c[0] * z + c[1]) * z + c[2]; }

// One-variable phases and their z-derivatives.
inline cplx phase(const AsymParams& a, cplx z, double u) {
    switch (a.family) {
        case Family::Meixner:
            return std::log(1.0 - a.s / z) - std::log(1.0 - a.s * z) - (u - 1.0) * std::log(z);
        case Family::Charlier: return u * std::log(1.0 + z) - a.tau * z - std::log(z);
        default:
            return (1.0 - u) * std::log(1.0 + a.p * z) + u * std::log(1.0 - a.q() * z) - a.gamma * std::log(z);
    }
}

inline cplx phase_d1(const AsymParams& a, cplx z, double u) {
    switch (a.family) {
        case Family::Meixner: return a.s / (z * (z - a.s)) + a.s / (1.0 - a.s * z) - (u - 1.0) / z;
        case Family::Charlier: return u / (1.0 + z) - a.tau - 1.0 / z;
        default: {
            const double p = a.p, q = a.q();
            return (1.0 - u) * p / (1.0 + p * z) - u * q / (1.0 - q * z) - a.gamma / z;
        }
    }
}

inline cplx phase_d2(const AsymParams& a, cplx z, double u) {
    switch (a.family) {
        case Family::Meixner: {
            const double s = a.s;
            return -s * (2.0 * z - s) / (z * z * (z - s) * (z - s)) + s * s / ((1.0 - s * z) * (1.0 - s * z)) +
                   (u - 1.0) / (z * z);
        }
        case Family::Charlier: return -u / ((1.0 + z) * (1.0 + z)) + 1.0 / (z * z);
        default: {
            const double p = a.p, q = a.q();
            return -(1.0 - u) * p * p / ((1.0 + p * z) * (1.0 + p * z)) - u * q * q / ((1.0 - q * z) * (1.0 - q * z)) +
                   a.gamma / (z * z);
        }
    }
}

inline cplx phase_d3(const AsymParams& a, cplx z, double u) {
    const double h = 1e-4 * std::max(1.0, std::abs(z));
    return (phase_d2(a, z + h, u) - phase_d2(a, z - h, u)) / (2.0 * h);
}

enum class PointKind { Bulk, Lower, Upper };

inline std::string to_string(PointKind k) {
    switch (k) {
        case PointKind::Bulk: return "bulk";
        case PointKind::Lower: return "below-support";
        default: return "above-support";
    }
}

struct BulkPoint {
    AsymParams par;
    double u = 0.0;
    PointKind kind = PointKind::Bulk;
    cplx z_plus, z_minus;  // Im z_plus > 0
    double cos_theta = 0.0, theta = 0.0;
    cplx phi2_plus, phi2_minus;
    double residual = 0.0;      // max |quadratic(z)| / scale
    double phase_residual = 0.0;  // max |Phi'(z)|
    double rho = 0.0;           // closed-form density per unit u
    double delta = 0.0;         // spacing rule: 2 pi Delta rho = 1
};

inline double rho_closed(const AsymParams& a, double u) {
    const double c = cos_theta(a, u);
    if (!(c > -1.0 && c < 1.0)) return 0.0;
    double pref;
    switch (a.family) {
        case Family::Meixner: pref = (1.0 - a.s * a.s) / (2.0 * kPi * a.s * u * u); break;
        case Family::Charlier: pref = 1.0 / (2.0 * kPi * std::sqrt(a.tau)); break;
        default: pref = 1.0 / (2.0 * kPi * std::sqrt(a.gamma * (1.0 - a.gamma) * a.p * a.q())); break;
    }
    return pref / std::sqrt(1.0 - c * c);
}

inline BulkPoint saddle_solve(const AsymParams& a, double u) {
    BulkPoint b;
    b.par = a;
    b.u = u;
    b.cos_theta = cos_theta(a, u);
    const auto c = saddle_quadratic(a, u);
    const double disc = c[1] * c[1] - 4.0 * c[0] * c[2];
    if (!(b.cos_theta > -1.0 && b.cos_theta < 1.0) || disc >= 0.0) {
        const auto [lo, hi] = bulk_support(a);
        b.kind = u <= lo ? PointKind::Lower : PointKind::Upper;
        if (u > lo && u < hi) b.kind = b.cos_theta <= -1.0 ? PointKind::Lower : PointKind::Upper;
        return b;
    }
    const cplx sq(0.0, std::sqrt(-disc));
    b.z_plus = (-c[1] + sq) / (2.0 * c[0]);
    b.z_minus = (-c[1] - sq) / (2.0 * c[0]);
    if (b.z_plus.imag() < 0) std::swap(b.z_plus, b.z_minus);
    b.theta = std::acos(b.cos_theta);
    b.phi2_plus = phase_d2(a, b.z_plus, u);
    b.phi2_minus = phase_d2(a, b.z_minus, u);
    const double scale = std::abs(c[0]) + std::abs(c[1]) + std::abs(c[2]);
    b.residual = std::max(std::abs(quadratic_value(c, b.z_plus)), std::abs(quadratic_value(c, b.z_minus))) / scale;
    b.phase_residual = std::max(std::abs(phase_d1(a, b.z_plus, u)), std::abs(phase_d1(a, b.z_minus, u)));
    b.rho = rho_closed(a, u);
    b.delta = 1.0 / (2.0 * kPi * b.rho);
    return b;
}

// Spacings: the spacing rule 2 pi Delta rho = 1 and the tabulated Delta = 1 / (A rho).
struct Spacing {
    double rho = 0.0;
    double delta_rule = 0.0;
    double delta_table = 0.0;
    bool edge = false;
};

inline Spacing density_and_spacing(const AsymParams& a, double u, double A) {
    Spacing s;
    s.rho = rho_closed(a, u);
    if (s.rho == 0.0) {
        s.edge = true;
        return s;
    }
    s.delta_rule = 1.0 / (2.0 * kPi * s.rho);
    s.delta_table = 1.0 / (A * s.rho);
    return s;
}

// \int rho du over the support. The substitution u = lo + (hi - lo)(1 - cos t)/2
// absorbs the inverse square roots at both endpoints.
inline double integrate_rho(const AsymParams& a, double* err = nullptr) {
    const auto [lo, hi] = bulk_support(a);
    const double h = 0.5 * (hi - lo);
    boost::math::quadrature::tanh_sinh<double> ts;
    double e = 0.0;
    const double v = ts.integrate(
        [&](double t) {
            const double st = std::sin(t);
            return st == 0.0 ? 0.0 : rho_closed(a, lo + h * (1.0 - std::cos(t))) * h * st;
        },
        0.0, kPi, 1e-13, &e);
    if (err) *err = e;
    return v;
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

// Exponent of rho(u) ~ C |u - edge|^e at an endpoint, fitted over distances
// 1e-6 .. 1e-3 of the support width.
struct EdgeExponent {
    double lower = 0.0, upper = 0.0;
};

template <class Rho>
EdgeExponent edge_exponent(const AsymParams& a, Rho&& rho) {
    const auto [lo, hi] = bulk_support(a);
    const double w = hi - lo;
    std::vector<double> d, rl, ru;
    for (int k = 0; k <= 12; ++k) {
        const double dk = w * std::pow(10.0, -6.0 + 3.0 * k / 12.0);
        d.push_back(dk);
        rl.push_back(rho(lo + dk));
        ru.push_back(rho(hi - dk));
    }
    return {loglog_slope(d, rl), loglog_slope(d, ru)};
}

inline EdgeExponent edge_exponent(const AsymParams& a) {
    return edge_exponent(a, [&](double u) { return rho_closed(a, u); });
}

// Particles per lattice site predicted by the saddle angle, theta / (k pi)
// with k = 1 for Meixner and k = 2 for Charlier (both checked against the
// diagonal of the finite-N projection kernel). No single-angle law matches
// the Krawtchouk diagonal, so none is returned there.
inline std::optional<double> site_density_closed(const AsymParams& a, double u) {
    const double c = std::clamp(cos_theta(a, u), -1.0, 1.0);
    switch (a.family) {
        case Family::Meixner: return std::acos(c) / kPi;
        case Family::Charlier: return std::acos(c) / (2.0 * kPi);
        default: return std::nullopt;
    }
}

// Along the circle |z| = |z_plus|, locate the maximum of Re Phi. Returns the
// angle of the maximum and the spread of Re Phi (0 means the circle is a
// level set and the argmax is undefined).
struct ArgmaxCheck {
    double angle = 0.0, theta = 0.0, spread = 0.0;
    bool flat = false;
};

inline ArgmaxCheck argmax_check(const BulkPoint& b, int grid = 4096) {
    ArgmaxCheck r;
    r.theta = b.theta;
    const double R = std::abs(b.z_plus);
    double best = -HUGE_VAL, worst = HUGE_VAL;
    for (int j = 0; j < grid; ++j) {
        const double t = kPi * (j + 0.5) / grid;  // upper half; the lower half mirrors it
        const double v = phase(b.par, std::polar(R, t), b.u).real();
        if (v > best) {
            best = v;
            r.angle = t;
        }
        worst = std::min(worst, v);
    }
    r.spread = best - worst;
    r.flat = r.spread < 1e-10;
    return r;
}

// ---------------------------------------------------------- kernel windows

// Block of S_{N, beta} (beta = 2 gives K_N) on a contiguous window.
inline Eigen::MatrixXd scalar_block(const LatticeOracle& O, int beta, Window w) {
    if (beta == 2) return O.K(w);
    return O.block(beta, w).S;
}

inline Eigen::MatrixXd rank_one_block(const LatticeOracle& O, Window w) {
    const int a = O.rank(), b = a - 1;
    Eigen::VectorXd ua(w.size()), ub(w.size());
    for (long i = 0; i < w.size(); ++i) {
        const long x = w.lo + i;
        const bool in = x <= O.phi().x_max();
        ua(i) = in ? O.phi()(a, x) : 0.0;
        ub(i) = in ? O.eps_phi(b)[x] : 0.0;
    }
    return 0.5 * ua * ub.transpose();
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

// ------------------------------------------------------------- bulk harness

struct BulkOptions {
    AsymParams par;
    int beta = 4;
    double u = 2.0;
    std::vector<int> A = {32, 64, 128};
    double smax = 2.0;
    int grid = 17;
    int threads = 1;
};

struct AmplitudeFit {
    double c = 0.0;
    double residual = 0.0;           // sup |V / c - T|
    double residual_unfitted = 0.0;  // sup |V - T|
    bool degenerate = false;         // V has no component along T; residual falls back to unfitted
};

// One-constant least-squares fit V ~ c T on flattened samples.
inline AmplitudeFit fit_amplitude(const std::vector<double>& V, const std::vector<double>& T) {
    AmplitudeFit f;
    double num = 0, den = 0, vv = 0;
    for (std::size_t i = 0; i < V.size(); ++i) {
        num += V[i] * T[i];
        den += T[i] * T[i];
        vv += V[i] * V[i];
    }
    f.c = den > 0 ? num / den : 0.0;
    for (std::size_t i = 0; i < V.size(); ++i) f.residual_unfitted = std::max(f.residual_unfitted, std::abs(V[i] - T[i]));
    f.degenerate = !(std::abs(f.c) * std::sqrt(den) > 1e-6 * std::sqrt(vv));
    if (f.degenerate) {
        f.residual = f.residual_unfitted;
        return f;
    }
    for (std::size_t i = 0; i < V.size(); ++i) f.residual = std::max(f.residual, std::abs(V[i] / f.c - T[i]));
    return f;
}

struct BulkRow {
    int A = 0, N = 0;
    long x0 = 0;
    double rho_lattice = 0.0;  // K_N(x0, x0)
    double rho_closed = 0.0;   // closed-form density per unit u
    double c_fit = 0.0;
    double err = 0.0;           // sup |S / (rho c_fit) - sine(s_eff, t_eff)|
    double err_unfitted = 0.0;  // same with c_fit = 1
    double diag_err = 0.0;      // sup |S(x, x) / rho - 1|
    double err_literal = 0.0;   // x = floor(A u + s A rho), Delta = 1 / (A rho)
    double c_fit_literal = 0.0;
    bool degenerate = false;    // S is orthogonal to the sine kernel (no amplitude to fit)
    double rank_one_sup = 0.0;  // sup |rank-one| / rho (beta = 1)
};

struct BulkReport {
    BulkOptions opt;
    BulkPoint point;
    std::vector<BulkRow> rows;
    double slope = 0.0, slope_unfitted = 0.0, slope_literal = 0.0, slope_rank_one = 0.0;
};

inline BulkReport bulk_convergence_test(const BulkOptions& opt) {
    BulkReport rep;
    rep.opt = opt;
    rep.point = saddle_solve(opt.par, opt.u);
    if (rep.point.kind != PointKind::Bulk) throw std::domain_error("bulk harness: u is not in the bulk");
    const auto sg = linspace(-opt.smax, opt.smax, opt.grid);
    rep.rows.resize(opt.A.size());
    parallel_for(static_cast<long>(opt.A.size()), opt.threads, [&](long k) {
        const int A = opt.A[k];
        const FiniteModel m = model_at(opt.par, A);
        LatticeOracle O(m.f, m.N);
        BulkRow r;
        r.A = A;
        r.N = m.N;
        r.x0 = std::lround(A * opt.u);
        r.rho_lattice = O.K({r.x0, r.x0})(0, 0);
        r.rho_closed = rho_closed(opt.par, opt.u);
        const double rho = r.rho_lattice;
        std::vector<long> xc(opt.grid), xl(opt.grid);
        for (int i = 0; i < opt.grid; ++i) {
            xc[i] = r.x0 + std::lround(sg[i] / rho);
            xl[i] = static_cast<long>(std::floor(A * opt.u + sg[i] * A * r.rho_closed));
        }
        long lo = std::min(xc.front(), xl.front()), hi = std::max(xc.back(), xl.back());
        lo = std::max(0L, lo);
        if (m.f.finite_support()) hi = std::min<long>(hi, m.f.M);
        const Window w{lo, hi};
        const Eigen::MatrixXd S = scalar_block(O, opt.beta, w);
        const Eigen::MatrixXd R1 = opt.beta == 1 ? rank_one_block(O, w) : Eigen::MatrixXd();
        auto at = [&](const Eigen::MatrixXd& M, long x, long y) {
            if (x < w.lo || x > w.hi || y < w.lo || y > w.hi) return 0.0;
            return M(x - w.lo, y - w.lo);
        };
        // corrected scaling
        std::vector<double> V, T;
        for (int i = 0; i < opt.grid; ++i)
            for (int j = 0; j < opt.grid; ++j) {
                const double v = at(S, xc[i], xc[j]) / rho;
                const double t = sine_kernel((xc[i] - r.x0) * rho, (xc[j] - r.x0) * rho);
                V.push_back(v);
                T.push_back(t);
                if (i == j) r.diag_err = std::max(r.diag_err, std::abs(v - 1.0));
                if (opt.beta == 1) r.rank_one_sup = std::max(r.rank_one_sup, std::abs(at(R1, xc[i], xc[j])) / rho);
            }
        {
            const AmplitudeFit af = fit_amplitude(V, T);
            r.c_fit = af.c;
            r.err = af.residual;
            r.err_unfitted = af.residual_unfitted;
            r.degenerate = af.degenerate;
        }
        // literal scaling
        const double delta = 1.0 / (A * r.rho_closed);
        V.clear();
        T.clear();
        for (int i = 0; i < opt.grid; ++i)
            for (int j = 0; j < opt.grid; ++j) {
                const double v = delta * at(S, xl[i], xl[j]);
                const double t = sine_kernel(sg[i], sg[j]);
                V.push_back(v);
                T.push_back(t);
            }
        {
            const AmplitudeFit af = fit_amplitude(V, T);
            r.c_fit_literal = af.c;
            r.err_literal = af.residual;
        }
        rep.rows[k] = r;
    });
    std::vector<double> As, e, eu, el, e1;
    for (const auto& r : rep.rows) {
        As.push_back(r.A);
        e.push_back(r.err);
        eu.push_back(r.err_unfitted);
        el.push_back(std::max(r.err_literal, 1e-300));
        e1.push_back(std::max(r.rank_one_sup, 1e-300));
    }
    rep.slope = loglog_slope(As, e);
    rep.slope_unfitted = loglog_slope(As, eu);
    rep.slope_literal = loglog_slope(As, el);
    if (opt.beta == 1) rep.slope_rank_one = loglog_slope(As, e1);
    return rep;
}

// ------------------------------------------------------ correction dictionary

struct CorrectionDictionary {
    cplx Q0, Qa, Qb;
    cplx w_plus, w_minus;
    std::string symbol = "epsilon";
};

// Difference-quotient coefficients at the saddles w_pm = e^{+-i theta}.
template <class M, class MP>
CorrectionDictionary correction_dictionary(double theta, M&& m, MP&& mp, std::string tag = "epsilon") {
    CorrectionDictionary d;
    d.symbol = std::move(tag);
    d.w_plus = std::polar(1.0, theta);
    d.w_minus = std::polar(1.0, -theta);
    const cplx wp = d.w_plus, wm = d.w_minus;
    const cplx Mp = m(wp), Mm = m(wm);
    if (!std::isfinite(std::abs(Mp)) || !std::isfinite(std::abs(Mm)))
        throw std::domain_error("correction dictionary: saddle at a pole of the symbol");
    const cplx dw = wp - wm;
    d.Q0 = (Mp - Mm) / dw;
    d.Qa = (mp(wp) * dw - (Mp - Mm)) / (dw * dw);
    d.Qb = ((Mp - Mm) - mp(wm) * dw) / (dw * dw);
    return d;
}

inline CorrectionDictionary epsilon_dictionary(double theta) {
    return correction_dictionary(
        theta, [](cplx w) { return 1.0 / (w * w - 1.0); },
        [](cplx w) { return -2.0 * w / ((w * w - 1.0) * (w * w - 1.0)); });
}

// Closed forms quoted for the epsilon symbol.
inline CorrectionDictionary epsilon_dictionary_closed(double theta) {
    CorrectionDictionary d;
    const double c = std::cos(theta), s = std::sin(theta);
    d.w_plus = std::polar(1.0, theta);
    d.w_minus = std::polar(1.0, -theta);
    d.Q0 = -c / (2.0 * s * s);
    d.Qa = cplx(-1.0 / (4.0 * s * s), -c / (2.0 * s * s * s));
    d.Qb = cplx(-1.0 / (4.0 * s * s), c / (2.0 * s * s * s));
    return d;
}

// ------------------------------------------------------ correction extraction

struct CorrectionOptions {
    AsymParams par;
    int beta = 4;
    double u = 2.0;
    std::vector<int> A = {32, 64, 128, 256};
    double smax = 2.0;
    int grid = 17;
    bool subtract_rank_one = false;
    int threads = 1;
};

struct TwoBasisFit {
    double alpha = 0.0, beta = 0.0;
    double se_alpha = 0.0, se_beta = 0.0;
    double residual = 1.0;  // ||R - fit|| / ||R||
    double cond = 0.0;
};

inline TwoBasisFit fit_two_basis(const std::vector<double>& d, const std::vector<double>& R) {
    const long n = static_cast<long>(d.size());
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (long i = 0; i < n; ++i) {
        X(i, 0) = sine_kernel(d[i], 0.0);
        X(i, 1) = 2.0 * sinc_derivative(d[i]);
        y(i) = R[i];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    TwoBasisFit f;
    const auto sv = svd.singularValues();
    f.cond = sv(0) / std::max(sv(1), 1e-300);
    if (f.cond > 1e8) throw std::domain_error("two-basis fit: basis collinear on the window");
    const Eigen::VectorXd c = svd.solve(y);
    f.alpha = c(0);
    f.beta = c(1);
    const Eigen::VectorXd res = y - X * c;
    f.residual = y.norm() > 0 ? res.norm() / y.norm() : 0.0;
    const double s2 = res.squaredNorm() / std::max<long>(1, n - 2);
    const Eigen::MatrixXd cov = s2 * (X.transpose() * X).inverse();
    f.se_alpha = std::sqrt(cov(0, 0));
    f.se_beta = std::sqrt(cov(1, 1));
    return f;
}

struct CorrectionRow {
    int A = 0;
    double rho_lattice = 0.0;
    double r_norm = 0.0;  // max |R_A|
    TwoBasisFit fit;
};

struct CorrectionReport {
    CorrectionOptions opt;
    BulkPoint point;
    CorrectionDictionary dict, dict_closed;
    std::vector<CorrectionRow> rows;
    TwoBasisFit richardson;  // fit of 2 R_{A_last} - R_{A_prev}
    double alpha_hat = 0.0, beta_hat = 0.0;
    double alpha_noise = 0.0;
    double r_growth = 0.0;  // log-log slope of max |R_A| in A
};

inline CorrectionReport correction_extract(const CorrectionOptions& opt) {
    CorrectionReport rep;
    rep.opt = opt;
    rep.point = saddle_solve(opt.par, opt.u);
    if (rep.point.kind != PointKind::Bulk) throw std::domain_error("correction: u is not in the bulk");
    rep.dict = epsilon_dictionary(rep.point.theta);
    rep.dict_closed = epsilon_dictionary_closed(rep.point.theta);
    const auto sg = linspace(-opt.smax, opt.smax, opt.grid);
    const std::size_t nA = opt.A.size();
    rep.rows.resize(nA);
    std::vector<std::vector<double>> Rs(nA), Ds(nA);
    // Offsets are fixed by the largest A so that Richardson combines equal sites.
    std::vector<long> off(opt.grid);
    {
        const FiniteModel m = model_at(opt.par, opt.A.back());
        LatticeOracle O(m.f, m.N);
        const long x0 = std::lround(opt.A.back() * opt.u);
        const double rho = O.K({x0, x0})(0, 0);
        for (int i = 0; i < opt.grid; ++i) off[i] = std::lround(sg[i] / rho);
    }
    parallel_for(static_cast<long>(nA), opt.threads, [&](long k) {
        const int A = opt.A[k];
        const FiniteModel m = model_at(opt.par, A);
        LatticeOracle O(m.f, m.N);
        const long x0 = std::lround(A * opt.u);
        const double rho = O.K({x0, x0})(0, 0);
        const Window w{std::max(0L, x0 + off.front()), x0 + off.back()};
        Eigen::MatrixXd S = scalar_block(O, opt.beta, w);
        if (opt.beta == 1 && opt.subtract_rank_one) S -= rank_one_block(O, w);
        CorrectionRow r;
        r.A = A;
        r.rho_lattice = rho;
        std::vector<double> R, D;
        for (int i = 0; i < opt.grid; ++i)
            for (int j = 0; j < opt.grid; ++j) {
                const long x = x0 + off[i], y = x0 + off[j];
                const double s = off[i] * rho, t = off[j] * rho;
                const double v = (x >= w.lo && y >= w.lo) ? S(x - w.lo, y - w.lo) / rho : 0.0;
                R.push_back(A * (v - sine_kernel(s, t)));
                D.push_back(s - t);
                r.r_norm = std::max(r.r_norm, std::abs(R.back()));
            }
        r.fit = fit_two_basis(D, R);
        Rs[k] = std::move(R);
        Ds[k] = std::move(D);
        rep.rows[k] = r;
    });
    if (nA >= 2) {
        std::vector<double> Rr(Rs.back().size());
        for (std::size_t i = 0; i < Rr.size(); ++i) Rr[i] = 2.0 * Rs[nA - 1][i] - Rs[nA - 2][i];
        rep.richardson = fit_two_basis(Ds.back(), Rr);
        rep.alpha_hat = rep.richardson.alpha;
        rep.beta_hat = rep.richardson.beta;
        rep.alpha_noise = rep.richardson.se_alpha + std::abs(rep.richardson.alpha - rep.rows.back().fit.alpha);
    } else {
        rep.richardson = rep.rows.back().fit;
        rep.alpha_hat = rep.richardson.alpha;
        rep.beta_hat = rep.richardson.beta;
        rep.alpha_noise = rep.richardson.se_alpha;
    }
    std::vector<double> As, rn;
    for (const auto& r : rep.rows) {
        As.push_back(r.A);
        rn.push_back(std::max(r.r_norm, 1e-300));
    }
    if (nA >= 2) rep.r_growth = loglog_slope(As, rn);
    return rep;
}

// ------------------------------------------------------------- edge harness

struct EdgeConstants {
    double u_star = 0.0;
    cplx z_star;
    double kappa = 0.0;   // Phi'''(z*) at u*
    double lambda = 0.0;  // d/du Phi'(z*; u) at u*
    double c_literal = 0.0;   // (kappa / lambda)^{1/3}
    double c_cubic = 0.0;     // kappa^{1/3} / lambda from the cubic normal form
    double c_density = 0.0;   // (pi C)^{-2/3} with rho_site ~ C sqrt|u - u*|
    double coalescence_exponent = 0.0;
};

inline EdgeConstants edge_constants(const AsymParams& a, bool upper) {
    EdgeConstants e;
    const auto [lo, hi] = bulk_support(a);
    e.u_star = upper ? hi : lo;
    const auto c = saddle_quadratic(a, e.u_star);
    e.z_star = -c[1] / (2.0 * c[0]);
    e.kappa = std::abs(phase_d3(a, e.z_star, e.u_star));
    const double h = 1e-6;
    e.lambda = std::abs((phase_d1(a, e.z_star, e.u_star + h) - phase_d1(a, e.z_star, e.u_star - h)) / (2.0 * h));
    e.c_literal = std::cbrt(e.kappa / e.lambda);
    e.c_cubic = std::cbrt(e.kappa) / e.lambda;
    // theta ~ sqrt(2 |dcos/du| |u - u*|)
    const double slope = std::abs(cos_theta_du(a, e.u_star));
    double k = 0.0;
    if (a.family == Family::Meixner) k = 1.0;
    if (a.family == Family::Charlier) k = 2.0;
    if (k > 0.0) {
        const double C = std::sqrt(2.0 * slope) / (k * kPi);
        e.c_density = std::pow(kPi * C, -2.0 / 3.0);
    }
    std::vector<double> d, gap;
    for (int j = 0; j <= 8; ++j) {
        const double dj = (hi - lo) * std::pow(10.0, -5.0 + 3.0 * j / 8.0);
        const BulkPoint b = saddle_solve(a, upper ? e.u_star - dj : e.u_star + dj);
        d.push_back(dj);
        gap.push_back(std::abs(b.z_plus - b.z_minus));
    }
    e.coalescence_exponent = loglog_slope(d, gap);
    return e;
}

struct EdgeOptions {
    AsymParams par;
    int beta = 4;
    bool upper = true;
    std::vector<int> A = {64, 128, 256};
    double smin = -2.0, smax = 2.0;
    int grid = 9;
    bool literal_scale = false;  // use (kappa/lambda)^{1/3} instead of the density constant
    int threads = 1;
};

struct EdgeRow {
    int A = 0, N = 0;
    double c_scale = 0.0;
    double c_fit = 0.0;
    double residual = 0.0;  // sup |n S / c_fit - K_Ai| over the window
    double residual_unfitted = 0.0;
    bool degenerate = false;
    double rank_one_sup = 0.0;  // sup |c A^{1/3} rank-one| (beta = 1)
};

struct EdgeReport {
    EdgeOptions opt;
    EdgeConstants constants;
    std::vector<EdgeRow> rows;
    bool monotone = false;
    bool rank_one_monotone = false;
};

inline EdgeReport edge_convergence_test(const EdgeOptions& opt) {
    EdgeReport rep;
    rep.opt = opt;
    rep.constants = edge_constants(opt.par, opt.upper);
    const double c = (opt.literal_scale || rep.constants.c_density == 0.0) ? rep.constants.c_literal
                                                                              : rep.constants.c_density;
    const auto sg = linspace(opt.smin, opt.smax, opt.grid);
    rep.rows.resize(opt.A.size());
    parallel_for(static_cast<long>(opt.A.size()), opt.threads, [&](long k) {
        const int A = opt.A[k];
        const FiniteModel m = model_at(opt.par, A);
        LatticeOracle O(m.f, m.N);
        const double scale = c * std::cbrt(static_cast<double>(A));
        const double sgn = opt.upper ? 1.0 : -1.0;
        std::vector<long> xs(opt.grid);
        std::vector<double> se(opt.grid);
        for (int i = 0; i < opt.grid; ++i) {
            xs[i] = std::lround(A * rep.constants.u_star + sgn * sg[i] * scale);
            if (xs[i] < 0) xs[i] = 0;
            se[i] = sgn * (xs[i] - A * rep.constants.u_star) / scale;
        }
        const Window w{*std::min_element(xs.begin(), xs.end()), *std::max_element(xs.begin(), xs.end())};
        const Eigen::MatrixXd S = scalar_block(O, opt.beta, w);
        const Eigen::MatrixXd R1 = opt.beta == 1 ? rank_one_block(O, w) : Eigen::MatrixXd();
        std::vector<AiryPair> ap(opt.grid);
        for (int i = 0; i < opt.grid; ++i) ap[i] = airy_contour(se[i]);
        EdgeRow r;
        r.A = A;
        r.N = m.N;
        r.c_scale = c;
        std::vector<double> V, T;
        for (int i = 0; i < opt.grid; ++i)
            for (int j = 0; j < opt.grid; ++j) {
                const double v = scale * S(xs[i] - w.lo, xs[j] - w.lo);
                const double t = airy_kernel_from(ap[i], ap[j], se[i], se[j]);
                V.push_back(v);
                T.push_back(t);
                if (opt.beta == 1) r.rank_one_sup = std::max(r.rank_one_sup, scale * std::abs(R1(xs[i] - w.lo, xs[j] - w.lo)));
            }
        const AmplitudeFit af = fit_amplitude(V, T);
        r.c_fit = af.c;
        r.residual = af.residual;
        r.residual_unfitted = af.residual_unfitted;
        r.degenerate = af.degenerate;
        rep.rows[k] = r;
    });
    rep.monotone = true;
    rep.rank_one_monotone = true;
    for (std::size_t k = 1; k < rep.rows.size(); ++k) {
        rep.monotone = rep.monotone && rep.rows[k].residual < rep.rows[k - 1].residual;
        rep.rank_one_monotone = rep.rank_one_monotone && rep.rows[k].rank_one_sup < rep.rows[k - 1].rank_one_sup;
    }
    return rep;
}

// ---------------------------------------------------------------- crossover

// Meixner with beta_M = 1 in closed form: with a positive leading coefficient
// the x-generating function of phi_n is kappa B^n / (1 - s w),
// B = (w - s)/(1 - s w), kappa = sqrt(1 - s^2), and E_mn = <phi_m, eps phi_n>
// follows by coefficient extraction in B:
//   E_mn = s g_{m-n} [m >= n] / (1 - s^2) - (-1)^n kappa s c_n e_m / (1 - s^2),
// g_0 = s, g_odd = 1 + s^2, g_even = 2 s, e_m = 1 (m even) or s (m odd), and
// c_n = kappa ((-1)^n / (1 - s) - 1 / (1 + s)) / 2.
class MeixnerGeometric {
public:
    explicit MeixnerGeometric(double s) : s_(s), kappa_(std::sqrt(1.0 - s * s)) {
        if (!(s > 0.0 && s < 1.0)) throw std::domain_error("meixner: need 0 < s < 1");
    }

    double s() const { return s_; }

    double E(int m, int n) const {
        const double s = s_, k = kappa_;
        const double sg = (n % 2 == 0) ? 1.0 : -1.0;
        const double cn = 0.5 * k * (sg / (1.0 - s) - 1.0 / (1.0 + s));
        const double em = (m % 2 == 0) ? 1.0 : s;
        double g = 0.0;
        if (m >= n) {
            const int j = m - n;
            g = j == 0 ? s : (j % 2 ? 1.0 + s * s : 2.0 * s);
        }
        return (s * g - sg * k * s * cn * em) / (1.0 - s * s);
    }

    Eigen::MatrixXd E_matrix(int L) const {
        Eigen::MatrixXd e(L, L);
        for (int m = 0; m < L; ++m)
            for (int n = 0; n < L; ++n) e(m, n) = E(m, n);
        return e;
    }

    // phi_n(x) by the x-extraction contour on the generating function.
    double phi(int n, long x, double tol = 1e-15) const {
        const double s = s_;
        const double nd = n, xd = static_cast<double>(x);
        auto logI = [&](cplx w) {
            return std::log(kappa_) + nd * std::log((w - s) / (1.0 - s * w)) - std::log(1.0 - s * w) -
                   (xd + 1.0) * std::log(w);
        };
        ContourSpec c;
        c.radius = choose_radius(logI, 0.0, 1e-8, 0.999999 / s);
        const QuadResult q = circle_quadrature_log(logI, c, tol);
        return q.value.real();
    }

    // phi_n(x) for n < L, x < W by series multiplication: the w-series of
    // B^n / (1 - s w) is built up one factor of B at a time. |B| = 1 on the
    // unit circle, so the coefficients stay bounded and the recursion is stable.
    Eigen::MatrixXd phi_table(int L, long W) const {
        const double s = s_;
        std::vector<double> b(W);  // coefficients of B
        b[0] = -s;
        double sp = 1.0;
        for (long k = 1; k < W; ++k, sp *= s) b[k] = (1.0 - s * s) * sp;
        std::vector<double> cur(W), nxt(W);
        double p = 1.0;
        for (long k = 0; k < W; ++k, p *= s) cur[k] = p;  // 1 / (1 - s w)
        Eigen::MatrixXd P(L, W);
        for (int n = 0; n < L; ++n) {
            for (long x = 0; x < W; ++x) P(n, x) = kappa_ * cur[x];
            for (long x = 0; x < W; ++x) {
                double acc = 0.0;
                for (long k = 0; k <= x; ++k) acc += b[k] * cur[x - k];
                nxt[x] = acc;
            }
            cur.swap(nxt);
        }
        return P;
    }

    // eps phi_n(y) for y < W from its generating function
    // s (w g(w) - c_n) / (1 - w^2), g the generating function of phi_n.
    std::vector<double> eps_phi_table(int n, long W) const {
        const double s = s_;
        const Eigen::MatrixXd P = phi_table(n + 1, W);
        const double sg = (n % 2 == 0) ? 1.0 : -1.0;
        const double cn = 0.5 * kappa_ * (1.0 / (1.0 - s) - sg / (1.0 + s));
        std::vector<double> out(W);
        for (long y = 0; y < W; ++y) {
            const double c = (y >= 1 ? P(n, y - 1) : -cn);
            out[y] = s * c + (y >= 2 ? out[y - 2] : 0.0);
        }
        return out;
    }

private:
    double s_, kappa_;
};

struct CrossoverOptions {
    double alpha = 1.0;
    std::vector<int> N = {32, 64, 128};
    long window = 24;  // x in [0, window]
    int beta = 4;
    int threads = 1;
};

struct CrossoverRow {
    int N = 0;
    double xi = 0.0;
    double c_h = 0.0;       // lambda = c_h A x
    double c_fit = 0.0;     // amplitude against bessel(alpha)
    double residual = 0.0;  // sup |c_h A S / c_fit - bessel| / sup |bessel|
    double alpha_hat = 0.0;
    double diag_min = 0.0, diag_max = 0.0;  // c_h A S(x, x) over the window
    double k00 = 0.0;                       // K(0, 0); a fixed value in N means a discrete limit
};

struct CrossoverReport {
    CrossoverOptions opt;
    std::vector<CrossoverRow> rows;
    bool decreasing = false;
    bool alpha_recovered = false;
};

namespace detail {

// Fit amplitude of M against the Bessel kernel on the points lambda_i; returns
// the relative sup residual after the fit.
inline double bessel_residual(const Eigen::MatrixXd& V, const std::vector<double>& lam, double a, double* cfit) {
    const long n = V.rows();
    Eigen::MatrixXd T(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) T(i, j) = bessel_kernel(a, lam[i], lam[j]);
    const double den = T.squaredNorm();
    const double c = den > 0 ? (V.array() * T.array()).sum() / den : 0.0;
    if (cfit) *cfit = c;
    const double tmax = T.cwiseAbs().maxCoeff();
    if (tmax == 0.0) return HUGE_VAL;
    if (!(std::abs(c) * std::sqrt(den) > 1e-6 * V.norm())) return (V - T).cwiseAbs().maxCoeff() / tmax;
    return (V / c - T).cwiseAbs().maxCoeff() / tmax;
}

template <class F>
double golden(F&& f, double a, double b, int it = 60) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a), fc = f(c), fd = f(d);
    for (int i = 0; i < it; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

inline CrossoverReport crossover_test(const CrossoverOptions& opt) {
    if (!(opt.alpha > 0.0)) throw std::domain_error("crossover: alpha must be positive");
    CrossoverReport rep;
    rep.opt = opt;
    rep.rows.resize(opt.N.size());
    parallel_for(static_cast<long>(opt.N.size()), opt.threads, [&](long k) {
        const int N = opt.N[k], L = 2 * N, A = 2 * N;
        const double xi = 1.0 - opt.alpha / (2.0 * N);
        const MeixnerGeometric mg(std::sqrt(xi));
        const long W = opt.window + 1;
        const Eigen::MatrixXd Pl = mg.phi_table(L, W);
        const Eigen::MatrixXd K = Pl.transpose() * Pl;
        Eigen::MatrixXd S;
        if (opt.beta == 2) {
            S = K;
        } else if (opt.beta == 4) {
            S = Pl.transpose() * mg.E_matrix(L) * Pl;
        } else {
            // K + (1/2) phi_L (x) eps phi_{L-1}(y)
            const Eigen::MatrixXd Pa = mg.phi_table(L + 1, W);
            const std::vector<double> eb = mg.eps_phi_table(L - 1, W);
            S = K + 0.5 * Pa.row(L).transpose() * Eigen::Map<const Eigen::RowVectorXd>(eb.data(), W);
        }
        CrossoverRow r;
        r.N = N;
        r.xi = xi;
        r.k00 = K(0, 0);
        // c_h from the density: c_h A K(x, x) against bessel(alpha; lambda, lambda).
        auto dens_cost = [&](double lc) {
            const double ch = std::exp(lc);
            double e = 0.0;
            for (long x = 1; x < W; ++x) {
                const double lam = ch * A * x;
                const double d = ch * A * K(x, x) - bessel_kernel(opt.alpha, lam, lam);
                e += d * d;
            }
            return e;
        };
        r.c_h = std::exp(detail::golden(dens_cost, std::log(1e-6), std::log(10.0)));
        std::vector<double> lam(W);
        for (long x = 0; x < W; ++x) lam[x] = r.c_h * A * static_cast<double>(x);
        const Eigen::MatrixXd V = r.c_h * A * S;
        r.residual = detail::bessel_residual(V, lam, opt.alpha, &r.c_fit);
        r.diag_min = V.diagonal().minCoeff();
        r.diag_max = V.diagonal().maxCoeff();
        double best = HUGE_VAL;
        for (int i = 1; i <= 80; ++i) {
            const double a = 0.05 * i;
            const double e = detail::bessel_residual(V, lam, a, nullptr);
            if (e < best) {
                best = e;
                r.alpha_hat = a;
            }
        }
        rep.rows[k] = r;
    });
    rep.decreasing = true;
    for (std::size_t k = 1; k < rep.rows.size(); ++k)
        rep.decreasing = rep.decreasing && rep.rows[k].residual < rep.rows[k - 1].residual;
    rep.alpha_recovered = !rep.rows.empty() && std::abs(rep.rows.back().alpha_hat - opt.alpha) <= 0.2;
    return rep;
}

// --------------------------------------------------------- gap probabilities

struct GapResult {
    double value = 1.0;
    int nodes = 0;
    double change = 0.0;  // |det(n) - det(n/2)|
};

// det(I - K) on L^2(a, b) by Gauss-Legendre Nystrom with node doubling.
template <class Kern>
GapResult fredholm_det(Kern&& kernel, double a, double b, double tol = 1e-13, int max_nodes = 512) {
    auto eval = [&](int n) {
        const GaussRule g = gauss_legendre(n, a, b);
        Eigen::MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                M(i, j) = (i == j ? 1.0 : 0.0) - std::sqrt(g.w[i] * g.w[j]) * kernel(g.x[i], g.x[j]);
        return M.determinant();
    };
    GapResult r;
    int n = 8;
    double prev = eval(n);
    for (;;) {
        n *= 2;
        const double cur = eval(n);
        r.value = cur;
        r.nodes = n;
        r.change = std::abs(cur - prev);
        if (r.change <= tol) return r;
        if (n >= max_nodes) throw std::runtime_error("fredholm_det: no convergence at " + std::to_string(n) + " nodes");
        prev = cur;
    }
}

// det(I - K) for a kernel restricted to a finite set of lattice points.
inline double discrete_gap(const Eigen::MatrixXd& K) {
    return (Eigen::MatrixXd::Identity(K.rows(), K.cols()) - K).determinant();
}

struct GapRow {
    int sites = 0;
    double s_eff = 0.0;
    double discrete = 0.0;
    double sine = 0.0;
    int nodes = 0;
    double rel_diff = 0.0;
};

struct GapReport {
    AsymParams par;
    int A = 0;
    double u = 0.0;
    double rho_lattice = 0.0;
    std::vector<GapRow> rows;
    bool discrete_monotone = true;
    double max_rel_diff = 0.0;
};

// Finite-N gap of K_N on J = {x0, .., x0 + n - 1} against the sine-kernel gap
// on an interval of the same expected particle count n rho.
inline GapReport gap_compare(const AsymParams& a, int A, double u, double max_length = 1.0) {
    GapReport rep;
    rep.par = a;
    rep.A = A;
    rep.u = u;
    const FiniteModel m = model_at(a, A);
    LatticeOracle O(m.f, m.N);
    const long x0 = std::lround(A * u);
    rep.rho_lattice = O.K({x0, x0})(0, 0);
    const int nmax = std::max(1, static_cast<int>(std::floor(max_length / rep.rho_lattice + 1e-12)));
    const Eigen::MatrixXd K = O.K({x0, x0 + nmax - 1});
    double prev = 1.0;
    for (int n = 1; n <= nmax; ++n) {
        GapRow r;
        r.sites = n;
        r.s_eff = n * rep.rho_lattice;
        r.discrete = discrete_gap(K.topLeftCorner(n, n));
        const GapResult g = fredholm_det(sine_kernel, 0.0, r.s_eff);
        r.sine = g.value;
        r.nodes = g.nodes;
        r.rel_diff = std::abs(r.discrete - r.sine) / std::abs(r.sine);
        rep.discrete_monotone = rep.discrete_monotone && r.discrete <= prev && r.discrete > 0.0;
        prev = r.discrete;
        rep.max_rel_diff = std::max(rep.max_rel_diff, r.rel_diff);
        rep.rows.push_back(r);
    }
    return rep;
}

}  // namespace iiks
