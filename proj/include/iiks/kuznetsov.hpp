#pragma once

// Kuznetsov multiplier m_h(w) = \int h(t) w^{-2it} dt for an even spectral
// test h, and its splicing into the beta = 1, 4 kernel blocks as M = eps-hat m_h.
//
// The multiplier is evaluated in the universal variable w in which
// D-hat(w) = w - 1/w: w = omega (Meixner), w = 1 + t (Charlier, t-plane),
// w = R_K(v) = (1 - q v)/(1 + p v) (Krawtchouk). Principal branch of log w.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "asymptotics.hpp"
#include "contour.hpp"
#include "kernels.hpp"

namespace iiks {

// ------------------------------------------------------------- spectral test

enum class TestKind { Gaussian, Tabulated };

struct DecayCertificate {
    double rate = 0.0;       // fitted a in |h(t)| ~ C exp(-a |t|)
    double amplitude = 0.0;  // fitted C
    double required = 0.0;   // 2 (pi - delta)
    bool ok = false;
};

struct SpectralTest {
    TestKind kind = TestKind::Gaussian;
    double sigma = 1.0;
    std::vector<double> t, h;  // uniform symmetric grid (tabulated)
    double delta = 0.2;

    static SpectralTest gaussian(double sigma) {
        if (!(sigma > 0.0)) throw std::domain_error("gaussian test: sigma must be positive");
        SpectralTest s;
        s.sigma = sigma;
        return s;
    }

    static SpectralTest tabulated(std::vector<double> t, std::vector<double> h, double delta = 0.2) {
        if (t.size() != h.size() || t.size() < 3) throw std::domain_error("tabulated test: need matching samples");
        if (!(delta > 0.0 && delta < kPi)) throw std::domain_error("tabulated test: delta outside (0, pi)");
        const std::size_t n = t.size();
        const double dt = (t.back() - t.front()) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(t[i] + t[n - 1 - i]) > 1e-12 * (1.0 + std::abs(t[i])))
                throw std::domain_error("tabulated test: grid is not symmetric");
            if (i > 0 && std::abs(t[i] - t[i - 1] - dt) > 1e-9 * dt)
                throw std::domain_error("tabulated test: grid is not uniform");
        }
        SpectralTest s;
        s.kind = TestKind::Tabulated;
        s.t = std::move(t);
        s.h = std::move(h);
        s.delta = delta;
        return s;
    }

    double evenness_error() const {
        if (kind == TestKind::Gaussian) return 0.0;
        double e = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) e = std::max(e, std::abs(h[i] - h[h.size() - 1 - i]));
        return e;
    }

    // Exponential-moment certificate from a log-linear fit of the outer 10% of |h|.
    DecayCertificate certificate() const {
        DecayCertificate c;
        c.required = 2.0 * (kPi - delta);
        if (kind == TestKind::Gaussian) {
            c.rate = HUGE_VAL;
            c.ok = true;
            return c;
        }
        const std::size_t n = t.size(), k0 = n - std::max<std::size_t>(3, n / 10);
        std::vector<double> xs, ys;
        for (std::size_t i = k0; i < n; ++i)
            if (std::abs(h[i]) > 0.0) {
                xs.push_back(std::abs(t[i]));
                ys.push_back(std::log(std::abs(h[i])));
            }
        if (xs.size() < 2) {
            c.rate = HUGE_VAL;  // compactly supported on the grid
            c.ok = true;
            return c;
        }
        double mx = 0, my = 0, sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= xs.size();
        my /= xs.size();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        const double sl = sxy / sxx;
        c.rate = -sl;
        c.amplitude = std::exp(my - sl * mx);
        c.ok = c.rate > c.required;
        return c;
    }
};

inline void check_branch(cplx w) {
    if (w.imag() == 0.0 && w.real() <= 0.0)
        throw std::domain_error("m_h: w on the branch cut (-inf, 0]");
}

// Closed form for h(t) = exp(-sigma t^2).
inline cplx m_h_gaussian(double sigma, cplx w) {
    check_branch(w);
    const cplx L = std::log(w);
    return std::sqrt(kPi / sigma) * std::exp(-L * L / sigma);
}

inline cplx m_h_gaussian_derivative(double sigma, cplx w) {
    return -2.0 * std::log(w) / (sigma * w) * m_h_gaussian(sigma, w);
}

struct MhValue {
    cplx value;
    double error = 0.0;  // quadrature change plus tail bound
    int nodes = 0;
};

// The defining integral by composite Gauss-Legendre in t (Gaussian) or the
// trapezoidal rule on the sample grid plus a tail bound (tabulated).
inline MhValue m_h_numeric(const SpectralTest& test, cplx w, double tol = 1e-13) {
    check_branch(w);
    const cplx L = std::log(w);
    const double phi = L.imag();
    if (test.kind == TestKind::Gaussian) {
        const double sg = test.sigma;
        // |h(t) w^{-2it}| = exp(-sigma t^2 + 2 phi t), peak at phi / sigma
        const double c = phi / sg, T = std::sqrt((phi * phi / sg + 80.0) / sg);
        auto rule = [&](int panels) {
            const GaussRule g = gauss_legendre(20);
            const double a = c - T, hw = 2.0 * T / panels;
            cplx acc = 0.0;
            for (int p = 0; p < panels; ++p) {
                const double lo = a + hw * p;
                for (std::size_t k = 0; k < g.x.size(); ++k) {
                    const double tt = lo + 0.5 * hw * (g.x[k] + 1.0);
                    acc += 0.5 * hw * g.w[k] * std::exp(-sg * tt * tt - 2.0 * cplx(0, 1) * tt * L);
                }
            }
            return acc;
        };
        int panels = 8;
        cplx prev = rule(panels);
        for (; panels <= (1 << 14);) {
            panels *= 2;
            const cplx cur = rule(panels);
            const double e = std::abs(cur - prev);
            if (e <= tol * std::max(1.0, std::abs(cur))) return {cur, e, panels * 20};
            prev = cur;
        }
        throw QuadratureError("m_h: Gauss-Legendre did not converge", prev, 0.0, panels * 20);
    }
    const std::size_t n = test.t.size();
    const double dt = test.t[1] - test.t[0];
    cplx acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wt = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        acc += wt * test.h[i] * std::exp(-2.0 * cplx(0, 1) * test.t[i] * L);
    }
    acc *= dt;
    const DecayCertificate c = test.certificate();
    const double excess = c.rate - 2.0 * std::abs(phi);
    double tail = 0.0;
    if (std::isfinite(c.rate)) {
        if (!(excess > 0.0)) throw std::domain_error("m_h: test decay too slow for arg w");
        tail = 2.0 * c.amplitude * std::exp(-excess * test.t.back()) / excess;
    }
    return {acc, tail, static_cast<int>(n)};
}

inline cplx m_h(const SpectralTest& test, cplx w) {
    if (test.kind == TestKind::Gaussian) return m_h_gaussian(test.sigma, w);
    return m_h_numeric(test, w).value;
}

inline cplx m_h_derivative(const SpectralTest& test, cplx w) {
    if (test.kind == TestKind::Gaussian) return m_h_gaussian_derivative(test.sigma, w);
    check_branch(w);
    const cplx L = std::log(w);
    const double dt = test.t[1] - test.t[0];
    cplx acc = 0.0;
    for (std::size_t i = 0; i < test.t.size(); ++i) {
        const double wt = (i == 0 || i + 1 == test.t.size()) ? 0.5 : 1.0;
        acc += wt * test.h[i] * (-2.0 * cplx(0, 1) * test.t[i] / w) * std::exp(-2.0 * cplx(0, 1) * test.t[i] * L);
    }
    return acc * dt;
}

// --------------------------------------------------------- symmetry checks

inline std::vector<cplx> sector_grid(int n_radii = 5, int n_angles = 10, double max_arg = 0.75 * kPi,
                                     double rmin = 0.5, double rmax = 2.0) {
    std::vector<cplx> g;
    for (int i = 0; i < n_radii; ++i) {
        const double r = rmin * std::pow(rmax / rmin, n_radii > 1 ? static_cast<double>(i) / (n_radii - 1) : 0.0);
        for (int j = 0; j < n_angles; ++j) {
            const double a = -max_arg + 2.0 * max_arg * (n_angles > 1 ? static_cast<double>(j) / (n_angles - 1) : 0.5);
            g.push_back(std::polar(r, a));
        }
    }
    return g;
}

struct SectorComparison {
    int points = 0;
    double max_rel = 0.0;
    cplx worst_w;
};

inline SectorComparison compare_on_sector(double sigma, const std::vector<cplx>& grid) {
    SectorComparison c;
    const SpectralTest t = SpectralTest::gaussian(sigma);
    for (const cplx w : grid) {
        const cplx a = m_h_numeric(t, w).value, b = m_h_gaussian(sigma, w);
        const double e = std::abs(a - b) / std::abs(b);
        if (e > c.max_rel) {
            c.max_rel = e;
            c.worst_w = w;
        }
        ++c.points;
    }
    return c;
}

struct RealityReport {
    double max_imag_unit_circle = 0.0;  // max |Im m_h(e^{i phi})|, |phi| <= max_arg
    double conjugation_error = 0.0;     // |conj m_h(w) - m_h(1 / conj w)|
    double real_axis_imag = 0.0;        // max |Im m_h(r)|, r > 0
    int samples = 0;
};

inline RealityReport reality_symmetry_check(const SpectralTest& test, int n = 64, double max_arg = 0.75 * kPi,
                                            cplx probe = std::polar(1.3, kPi / 5.0), bool numeric = false) {
    RealityReport r;
    auto mh = [&](cplx w) { return numeric ? m_h_numeric(test, w).value : m_h(test, w); };
    for (int j = 0; j < n; ++j) {
        const double a = -max_arg + 2.0 * max_arg * j / (n - 1);
        r.max_imag_unit_circle = std::max(r.max_imag_unit_circle, std::abs(mh(std::polar(1.0, a)).imag()));
        const double x = std::exp(-1.0 + 2.0 * j / (n - 1));
        r.real_axis_imag = std::max(r.real_axis_imag, std::abs(mh(x).imag()));
    }
    r.conjugation_error = std::abs(std::conj(mh(probe)) - mh(1.0 / std::conj(probe)));
    r.samples = n;
    return r;
}

// ------------------------------------------------------------ spliced symbol

// Universal variable w(z) for the contour variable z of each family and dw/dz.
inline cplx universal_w(const WeightFamily& f, cplx z) {
    switch (f.tag) {
        case Family::Meixner: return z;
        case Family::Charlier: return 1.0 + z;
        default: return (1.0 - f.q() * z) / (1.0 + f.p * z);
    }
}

inline cplx universal_w_derivative(const WeightFamily& f, cplx z) {
    switch (f.tag) {
        case Family::Meixner:
        case Family::Charlier: return 1.0;
        default: {
            const cplx d = 1.0 + f.p * z;
            return -(f.q() + f.p) / (d * d);
        }
    }
}

class SplicedSymbol {
public:
    SplicedSymbol(const WeightFamily& f, int N, SpectralTest test)
        : f_(f), test_(std::move(test)), pd_(f, N, printed_pair(f)) {}

    const SpectralTest& test() const { return test_; }

    cplx m(cplx z) const { return m_h(test_, universal_w(f_, z)); }
    cplx eps(cplx z) const { return pd_.epshat(z); }
    cplx M(cplx z) const { return eps(z) * m(z); }

    // M'(z) = eps'(z) m + eps(z) m_h'(w) w'(z), eps' by a central difference
    // (eps-hat is rational and smooth away from its poles).
    cplx M_derivative(cplx z) const {
        const double h = 1e-6 * std::max(1.0, std::abs(z));
        const cplx de = (eps(z + h) - eps(z - h)) / (2.0 * h);
        return de * m(z) + eps(z) * m_h_derivative(test_, universal_w(f_, z)) * universal_w_derivative(f_, z);
    }

    // Largest |m_h(w + i0) - m_h(w - i0)| where the image of |z| = r crosses
    // the cut; zero when the image stays off (-inf, 0].
    double branch_jump(double r, int samples = 4096) const {
        double jump = 0.0;
        cplx prev = universal_w(f_, std::polar(r, -kPi));
        for (int k = 1; k <= samples; ++k) {
            const cplx cur = universal_w(f_, std::polar(r, -kPi + 2.0 * kPi * k / samples));
            if ((prev.imag() > 0) != (cur.imag() > 0)) {
                const double t = prev.imag() / (prev.imag() - cur.imag());
                const double xr = prev.real() + t * (cur.real() - prev.real());
                if (xr < 0.0) {
                    const cplx a = m_h(test_, cplx(xr, 1e-300)), b = m_h(test_, cplx(xr, -1e-300));
                    jump = std::max(jump, std::abs(a - b));
                }
            }
            prev = cur;
        }
        return jump;
    }

private:
    WeightFamily f_;
    SpectralTest test_;
    PrintedDouble pd_;
};

// ----------------------------------------------------------- spliced blocks

inline KernelBlockSet spliced_s4(const WeightFamily& f, int N, const SpectralTest& test, Window w, ContourPair pair) {
    const SplicedSymbol sym(f, N, test);
    PrintedDouble pd(f, N, pair);
    auto M = [&](cplx z) { return sym.M(z); };
    KernelBlockSet b;
    b.S = pd.compose(w, M);
    b.SD = pd.compose(w, M, Insert::DhatVar2);
    b.epsS = pd.compose(w, M, Insert::EpshatVar1);
    b.provenance = "contour";
    b.beta = 4;
    b.N = N;
    b.window = w;
    b.metadata["nesting"] = to_string(pair.nesting());
    b.metadata["pair"] = pair.label;
    b.metadata["branch_jump"] = std::to_string(std::max(sym.branch_jump(pair.r1), sym.branch_jump(pair.r2)));
    b.metadata["symbol"] = "eps-hat * m_h";
    return b;
}

inline KernelBlockSet spliced_s1(const WeightFamily& f, int N, const SpectralTest& test, Window w, ContourPair pair) {
    const SplicedSymbol sym(f, N, test);
    PrintedDouble pd(f, N, pair);
    const int a = f.rank(N), bdeg = a - 1;
    SingleContour sc(f, a + 2, Convention::Printed);
    const long nw = w.size();
    Eigen::VectorXd ua(nw), ea(nw), ub(nw), db(nw);
    for (long i = 0; i < nw; ++i) {
        const long x = w.lo + i;
        ua(i) = sc.phi(a, x).value;
        ea(i) = sc.eps_phi(a, x).value;
        ub(i) = sc.eps_phi_with(bdeg, x, [&](cplx z) { return sym.m(z); }).value;
        db(i) = sc.eps_phi_with(bdeg, x, [&](cplx z) { return sym.m(z) * pd.dhat(z); }).value;
    }
    const double coef = -1.0;
    KernelBlockSet b;
    b.S = pd.projection(w) + coef * ua * ub.transpose();
    b.SD = pd.projection(w, Insert::DhatVar2) + coef * ua * db.transpose();
    b.epsS = pd.projection(w, Insert::EpshatVar1) + coef * ea * ub.transpose();
    b.provenance = "contour";
    b.beta = 1;
    b.N = N;
    b.window = w;
    b.metadata["nesting"] = to_string(pair.nesting());
    b.metadata["pair"] = pair.label;
    b.metadata["symbol"] = "eps-hat * m_h";
    return b;
}

// Lattice realization of T_h eps: column n is the single-contour image of
// phi_n with the symbol eps-hat m_h, evaluated on the whole truncated lattice.
class SplicedOracle {
public:
    using Multiplier = std::function<cplx(cplx)>;  // function of the universal variable w

    SplicedOracle(const WeightFamily& f, int N, const SpectralTest& test, double radius = 0.0, int threads = 1)
        : SplicedOracle(f, N, [test](cplx w) { return m_h(test, w); }, radius, threads) {}

    // m = 1 gives the unspliced operator of the same symbol calculus.
    SplicedOracle(const WeightFamily& f, int N, Multiplier mult, double radius = 0.0, int threads = 1)
        : O_(f, N), f_(f) {
        if (f.tag == Family::Meixner)
            throw std::domain_error("spliced oracle: no symbol-calculus single contour in the Meixner x-plane");
        const int L = O_.rank(), cnt = std::min(L + 1, O_.phi().size());
        const long X = O_.phi().x_max();
        SingleContour sc(f, cnt + 1, Convention::Production);
        // keep the contour inside the disc where w(z) stays off the cut
        double rmax = 0.97;
        if (f.tag == Family::Krawtchouk) rmax = 0.97 * std::min(1.0 / f.p, 1.0 / f.q());
        cols_.assign(cnt, std::vector<double>(X + 1, 0.0));
        std::vector<double> imag(cnt, 0.0);
        parallel_for(cnt, threads, [&](long n) {
            for (long x = 0; x <= X; ++x) {
                std::optional<ContourSpec> spec;
                if (radius > 0.0) {
                    ContourSpec c;
                    c.radius = radius;
                    spec = c;
                } else {
                    auto logI = [&](cplx z) {
                        return sc.log_integrand(static_cast<int>(n), x, z) + std::log(sc.eps_symbol(z));
                    };
                    ContourSpec c;
                    c.radius = choose_radius(logI, 0.0, 1e-6, rmax);
                    spec = c;
                }
                const ContourValue v =
                    sc.eps_phi_with(static_cast<int>(n), x, [&](cplx z) { return mult(universal_w(f, z)); }, spec);
                cols_[n][x] = v.value;
                imag[n] = std::max(imag[n], std::abs(v.imag) * std::exp(sc.log_prefactor(static_cast<int>(n), x)));
            }
        });
        max_imag_ = *std::max_element(imag.begin(), imag.end());
        E_ = Eigen::MatrixXd::Zero(L, L);
        for (int m = 0; m < L; ++m)
            for (int n = 0; n < L; ++n) {
                double acc = 0.0;
                for (long x = 0; x <= X; ++x) acc += O_.phi()(m, x) * cols_[n][x];
                E_(m, n) = acc;
            }
    }

    const LatticeOracle& base() const { return O_; }
    const Eigen::MatrixXd& E() const { return E_; }
    const std::vector<double>& column(int n) const { return cols_.at(n); }
    double max_imag() const { return max_imag_; }

    KernelBlockSet block(int beta, Window w) const {
        KernelBlockSet b;
        b.provenance = "oracle";
        b.beta = beta;
        b.N = O_.rank();
        b.window = w;
        b.metadata["symbol"] = "eps-hat * m_h";
        const int L = O_.rank();
        const long X = O_.phi().x_max();
        const Eigen::MatrixXd P = O_.rows(w, L), Pe = O_.rows(w, L, 1), Pd = O_.rows(w, L, 2);
        if (beta == 4) {
            b.S = P.transpose() * E_ * P;
            b.SD = P.transpose() * E_ * Pd;
            b.epsS = Pe.transpose() * E_ * P;
            return b;
        }
        if (beta != 1) throw std::domain_error("spliced oracle: beta must be 1 or 4");
        const int a = L, bb = L - 1;
        if (a >= O_.phi().size()) throw std::domain_error("spliced oracle: rank-one index beyond the lattice");
        Eigen::VectorXd ua(w.size()), ea(w.size()), vb(w.size()), db(w.size());
        const std::vector<double> dv = O_.apply_d(cols_[bb].data());
        for (long i = 0; i < w.size(); ++i) {
            const long x = w.lo + i;
            const bool in = x <= X;
            ua(i) = in ? O_.phi()(a, x) : 0.0;
            ea(i) = in ? O_.eps_phi(a)[x] : 0.0;
            vb(i) = in ? cols_[bb][x] : 0.0;
            db(i) = in ? -dv[x] : 0.0;
        }
        b.S = P.transpose() * P + 0.5 * ua * vb.transpose();
        b.SD = P.transpose() * Pd + 0.5 * ua * db.transpose();
        b.epsS = Pe.transpose() * P + 0.5 * ea * vb.transpose();
        return b;
    }

private:
    LatticeOracle O_;
    WeightFamily f_;
    std::vector<std::vector<double>> cols_;
    Eigen::MatrixXd E_;
    double max_imag_ = 0.0;
};

// ---------------------------------------------------- spliced asymptotics

// Worked example: M(w) = m_h(w)/(w^2 - 1), M'(w) = ((w^2 - 1) m_h' - 2 w m_h)/(w^2 - 1)^2.
inline cplx worked_example_M_derivative(const SpectralTest& test, cplx w) {
    const cplx d = w * w - 1.0;
    return (d * m_h_derivative(test, w) - 2.0 * w * m_h(test, w)) / (d * d);
}

inline CorrectionDictionary spliced_dictionary(double theta, const SpectralTest& test) {
    return correction_dictionary(
        theta, [&](cplx w) { return m_h(test, w) / (w * w - 1.0); },
        [&](cplx w) { return worked_example_M_derivative(test, w); }, "spliced");
}

// Spliced and unit-symbol oracles of one finite Charlier model, shared by the
// edge and bulk reports.
struct SplicedModel {
    AsymParams par;
    int A = 0;
    FiniteModel model;
    SpectralTest test;
    SplicedOracle spliced, unit;

    SplicedModel(const SpectralTest& t, double tau, int A_, int threads = 1)
        : par(AsymParams::charlier(tau)),
          A(A_),
          model(model_at(par, A_)),
          test(t),
          spliced(model.f, model.N, t, 0.0, threads),
          unit(model.f, model.N, [](cplx) { return cplx(1.0); }, 0.0, threads) {}
};

inline double fitted_ratio(const Eigen::MatrixXd& num, const Eigen::MatrixXd& den) {
    const double d = den.squaredNorm();
    return d > 0 ? (num.array() * den.array()).sum() / d : 0.0;
}

struct SplicedEdgeReport {
    int A = 0;
    double tau = 1.0;
    double u_star = 0.0;
    cplx t_star, w_star;          // double saddle in the contour variable and its universal image
    double ratio_fit = 0.0;       // <S^h, S^1> / <S^1, S^1>, both from the same symbol calculus
    double ratio_fit_rel_residual = 0.0;
    double ratio_lattice = 0.0;   // <S^h, K eps K> / <K eps K, K eps K>
    double predicted_contour = 0.0;  // M'(t*) / eps'(t*) in the contour variable
    double predicted_worked = 0.0;   // worked-example M'(w*) / eps'(w*), eps = 1/(w^2 - 1)
    double predicted_limit = 0.0;    // m_h(1)
    double rel_error = 0.0;          // |ratio_fit / predicted_contour - 1|
    double max_imag = 0.0;
    bool within = false;
    double tolerance = 0.1;
};

// Charlier upper soft edge: the spliced beta = 4 scalar block against the
// unspliced one on the Airy window. The double saddle of the t-integrand sits
// at t* = tau^{-1/2}.
inline SplicedEdgeReport spliced_edge_ratio(const SplicedModel& sm, double smin = -4.0, double smax = 2.0,
                                            int grid = 13) {
    SplicedEdgeReport r;
    r.A = sm.A;
    r.tau = sm.par.tau;
    const EdgeConstants ec = edge_constants(sm.par, true);
    r.u_star = ec.u_star;
    const double c = ec.c_density != 0.0 ? ec.c_density : ec.c_literal;
    const double scale = c * std::cbrt(static_cast<double>(sm.A));
    std::vector<long> xs;
    for (double s : linspace(smin, smax, grid)) xs.push_back(std::max(0L, std::lround(sm.A * ec.u_star + s * scale)));
    const Window w{*std::min_element(xs.begin(), xs.end()), *std::max_element(xs.begin(), xs.end())};
    const Eigen::MatrixXd Sh = sm.spliced.block(4, w).S, S1 = sm.unit.block(4, w).S;
    r.ratio_fit = fitted_ratio(Sh, S1);
    r.ratio_fit_rel_residual = Sh.norm() > 0 ? (Sh - r.ratio_fit * S1).norm() / Sh.norm() : 1.0;
    r.ratio_lattice = fitted_ratio(Sh, sm.spliced.base().block(4, w).S);
    r.max_imag = sm.spliced.max_imag();
    const SplicedSymbol sym(sm.model.f, sm.model.N, sm.test);
    r.t_star = 1.0 / std::sqrt(sm.par.tau);
    r.w_star = universal_w(sm.model.f, r.t_star);
    const double h = 1e-6;
    const cplx de = (sym.eps(r.t_star + h) - sym.eps(r.t_star - h)) / (2.0 * h);
    r.predicted_contour = (sym.M_derivative(r.t_star) / de).real();
    const cplx ws = r.w_star, dw = ws * ws - 1.0;
    r.predicted_worked = (worked_example_M_derivative(sm.test, ws) / (-2.0 * ws / (dw * dw))).real();
    r.predicted_limit = m_h(sm.test, 1.0).real();
    r.rel_error = std::abs(r.ratio_fit / r.predicted_contour - 1.0);
    r.within = r.rel_error <= r.tolerance;
    return r;
}

struct SplicedBulkReport {
    double u = 0.0;
    int A = 0;
    double c_fit_sine = 0.0;  // spliced beta = 1 block against sine (corrected scaling)
    double residual_sine = 0.0;
    bool degenerate = false;
    double ratio_to_unspliced = 0.0;  // <S^h, S^1> / <S^1, S^1>, beta = 4, same symbol calculus
    cplx m_at_saddle;                 // m_h(w_+), w_+ the universal image of the t-saddle
};

// Charlier bulk: fits the spliced blocks and reports the frozen-factor candidate.
inline SplicedBulkReport spliced_bulk(const SplicedModel& sm, double u, double smax = 2.0, int grid = 17) {
    SplicedBulkReport r;
    r.u = u;
    r.A = sm.A;
    const BulkPoint bp = saddle_solve(sm.par, u);
    if (bp.kind != PointKind::Bulk) throw std::domain_error("spliced bulk: u is not in the bulk");
    const long x0 = std::lround(sm.A * u);
    const double rho = sm.spliced.base().K({x0, x0})(0, 0);
    std::vector<long> xs;
    for (double s : linspace(-smax, smax, grid)) xs.push_back(std::max(0L, x0 + std::lround(s / rho)));
    const Window w{xs.front(), xs.back()};
    const Eigen::MatrixXd S1 = sm.spliced.block(1, w).S;
    std::vector<double> V, T;
    for (long xi : xs)
        for (long yi : xs) {
            V.push_back(S1(xi - w.lo, yi - w.lo) / rho);
            T.push_back(sine_kernel((xi - x0) * rho, (yi - x0) * rho));
        }
    const AmplitudeFit af = fit_amplitude(V, T);
    r.c_fit_sine = af.c;
    r.residual_sine = af.residual;
    r.degenerate = af.degenerate;
    r.ratio_to_unspliced = fitted_ratio(sm.spliced.block(4, w).S, sm.unit.block(4, w).S);
    r.m_at_saddle = m_h(sm.test, universal_w(sm.model.f, bp.z_plus));
    return r;
}

}  // namespace iiks
