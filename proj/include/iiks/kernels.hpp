#pragma once

// Correlation-kernel blocks: the projection K_N by direct summation and by a
// double contour integral, the printed contour compositions, the beta = 1, 4
// Pfaffian scalar blocks, and lattice oracles built from matrix products.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "contour.hpp"
#include "lattice_ops.hpp"
#include "quadrature.hpp"
#include "weights.hpp"

namespace iiks {

struct Window {
    long lo = 0, hi = 0;  // inclusive
    long size() const { return hi - lo + 1; }
};

inline Window default_window(const WeightFamily& f, int N) {
    if (f.tag == Family::Krawtchouk) return {0, f.M};
    return {0, 4L * N};
}

// Smallest window [0, hi] (at least the default one) outside which the
// diagonal of K_N carries less than `tail` in total. Idempotence of K is a
// statement about the full lattice and can only be checked on such a window.
inline Window support_window(const WeightFamily& f, int N, double tail = 1e-10) {
    const TruncatedLattice lat = truncate(f);
    const int rank = f.rank(N);
    const PhiTable t(f, rank, lat);
    std::vector<double> d(lat.x_max + 1, 0.0);
    for (int k = 0; k < rank; ++k)
        for (long x = 0; x <= lat.x_max; ++x) d[x] += t(k, x) * t(k, x);
    double acc = 0.0;
    long hi = lat.x_max;
    while (hi > 0 && acc + d[hi] < tail) acc += d[hi--];
    return {0, std::max(hi, default_window(f, N).hi)};
}

// K_N(x, y) = sum_{k < rank} phi_k(x) phi_k(y) over a window.
inline Eigen::MatrixXd projection_direct(const PhiTable& t, int rank, Window wx, Window wy) {
    if (rank > t.size()) throw std::domain_error("projection_direct: table too short");
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(wx.size(), wy.size());
    for (int k = 0; k < rank; ++k)
        for (long i = 0; i < wx.size(); ++i) {
            const double a = t(k, wx.lo + i);
            if (a == 0.0) continue;
            for (long j = 0; j < wy.size(); ++j) K(i, j) += a * t(k, wy.lo + j);
        }
    return K;
}

inline Eigen::MatrixXd projection_direct(const WeightFamily& f, int N, Window w) {
    const int rank = f.rank(N);
    PhiTable t(f, rank, truncate(f));
    return projection_direct(t, rank, w, w);
}

// ----------------------------------------------------- dual double contour
//
// K_N(x, y) = -P(x, y) (2 pi i)^{-2} \oint_s \oint_z F_x(s) G_y(z) / (z - s) dz ds
//
// F_x extracts the coefficient s^x of the x-generating function; G_y carries
// the y-dependence with the degree summed as a geometric series, which leaves
// the pole of the projection at the centre z0 of the z-circle. The formula
// holds when no point of the s-circle lies in the closed z-disc: either the
// circles are disjoint and side by side (|z0| > r_s + r_z) or the s-circle
// encloses the z-disc (r_s > |z0| + r_z).
class DualKernel {
public:
    DualKernel(const WeightFamily& f, int N) : f_(f), N_(N), L_(f.rank(N)) {
        if (f.tag == Family::Krawtchouk && N > f.M + 1)
            throw std::domain_error("DualKernel: N above M + 1");
        switch (f.tag) {
            case Family::Charlier:
                z0_ = f.theta;
                rs_max_ = 1e6;
                rz_max_ = 1e6;
                break;
            case Family::Meixner:
                z0_ = f.xi;
                rs_max_ = 1.0;
                rz_max_ = 1.0 - f.xi;
                break;
            default:
                z0_ = f.p / f.q();
                rs_max_ = 1e6;
                rz_max_ = 1.0 / f.q();
        }
    }

    double tol = 1e-14;
    int max_nodes = 4096;

    double z0() const { return z0_; }

    double log_pref(long x, long y) const {
        const double xd = static_cast<double>(x), yd = static_cast<double>(y);
        switch (f_.tag) {
            case Family::Charlier:
                return -f_.theta + 0.5 * (xd + yd) * std::log(f_.theta) +
                       0.5 * (std::lgamma(xd + 1.0) - std::lgamma(yd + 1.0));
            case Family::Meixner: {
                const double b = f_.beta_m, c = f_.xi;
                auto lpoch = [&](double n) { return std::lgamma(b + n) - std::lgamma(b); };
                return b * std::log(1.0 - c) +
                       0.5 * (lpoch(yd) + yd * std::log(c) + std::lgamma(xd + 1.0) + xd * std::log(c) -
                              std::lgamma(yd + 1.0) - lpoch(xd));
            }
            default: {
                auto lC = [&](double k) {
                    return std::lgamma(f_.M + 1.0) - std::lgamma(k + 1.0) - std::lgamma(f_.M - k + 1.0);
                };
                return 0.5 * (log_weight(f_, x) + log_weight(f_, y)) - lC(xd);
            }
        }
    }

    cplx log_F(long x, cplx s) const {
        const double xd = static_cast<double>(x), L = L_;
        switch (f_.tag) {
            case Family::Charlier:
                return s - (xd + 1.0) * std::log(s) + L * std::log(f_.theta - s);
            case Family::Meixner:
                return (1.0 - f_.beta_m - L) * std::log(1.0 - s) + L * std::log(f_.xi - s) -
                       (xd + 1.0) * std::log(s);
            default: {
                const double p = f_.p, q = f_.q();
                return (1.0 - L) * std::log(q) + (f_.M + 1.0 - L) * std::log(1.0 + s) +
                       L * std::log(p - q * s) - (xd + 1.0) * std::log(s);
            }
        }
    }

    cplx log_G(long y, cplx z) const {
        const double yd = static_cast<double>(y), L = L_;
        switch (f_.tag) {
            case Family::Charlier:
                return f_.theta - z + yd * (std::log(z) - std::log(f_.theta)) - L * std::log(f_.theta - z);
            case Family::Meixner: {
                const double c = f_.xi, b = f_.beta_m;
                return -yd * std::log(c) - b * std::log(1.0 - c) + yd * std::log(z) +
                       (b + L - 1.0) * std::log(1.0 - z) - L * std::log(c - z);
            }
            default: {
                const double p = f_.p, q = f_.q();
                return -yd * std::log(p) + (yd - f_.M + L - 1.0) * std::log(q) + yd * std::log(z) +
                       (L - f_.M - 1.0) * std::log(1.0 + z) - L * std::log(p - q * z);
            }
        }
    }

    struct Radii {
        double rs = 0, rz = 0;
        bool enclosing = false;
        double cost = 0;
    };

    // Radii for a block of x and y values: minimise the larger of the
    // per-point costs subject to one of the two admissible configurations.
    Radii choose(const std::vector<long>& xs, const std::vector<long>& ys) const {
        auto cost_s = [&](double r) {
            double c = -HUGE_VAL;
            for (long x : xs) c = std::max(c, ring_cost([&](cplx s) { return log_F(x, s); }, 0.0, r));
            return c;
        };
        auto cost_z = [&](double r) {
            double c = -HUGE_VAL;
            for (long y : ys) c = std::max(c, ring_cost([&](cplx z) { return log_G(y, z); }, z0_, r));
            return c;
        };
        Radii best;
        best.cost = HUGE_VAL;
        const int K = 48;
        // side by side
        for (int i = 1; i < K; ++i) {
            const double t = static_cast<double>(i) / K;
            const double rs = 0.9 * z0_ * t, rz = std::min(0.9 * z0_ * (1.0 - t), 0.98 * rz_max_);
            if (rs >= rs_max_) continue;
            const double c = cost_s(rs) + cost_z(rz);
            if (c < best.cost) best = {rs, rz, false, c};
        }
        // enclosing
        for (int i = 1; i < K; ++i) {
            const double rz_hi = std::min(0.98 * rz_max_, 100.0 * (z0_ + 1.0));
            const double rz = rz_hi * std::pow(1e-5, 1.0 - static_cast<double>(i) / K);
            const double need = 1.1 * (z0_ + rz);
            if (need >= 0.995 * rs_max_) continue;
            // smallest admissible s radius is usually the cheapest; also try a
            // geometric grid above it
            for (int j = 0; j < 12; ++j) {
                const double rs = need * std::pow(std::min(rs_max_ * 0.99, need * 64.0) / need, j / 11.0);
                if (rs >= rs_max_) break;
                const double c = cost_s(rs) + cost_z(rz);
                if (c < best.cost) best = {rs, rz, true, c};
            }
        }
        if (!std::isfinite(best.cost)) throw std::runtime_error("DualKernel: no admissible radii");
        return best;
    }

    bool symmetric() const { return f_.tag == Family::Meixner && std::abs(f_.beta_m - 1.0) < 1e-15; }

    // Meixner, beta = 1: with R(s) = (c - s)/(c (1 - s)),
    //   K = [r_s r_t < c] delta_xy
    //       - c^{(x+y)/2} (2 pi i)^{-2} \oint\oint (c R(s) R(t))^L / (1 - s t / c) s^{-x-1} t^{-y-1}
    // where the delta comes from the full completeness sum when the torus lies
    // inside the pole set s t = c. Both radii sit at their own saddles, which
    // the side-by-side dual form cannot achieve for this family.
    cplx log_S(long x, cplx s) const {
        const double c = f_.xi, L = L_, xd = static_cast<double>(x);
        return L * (std::log(c - s) - std::log(1.0 - s)) + (0.5 * (xd - L)) * std::log(c) - (xd + 1.0) * std::log(s);
    }

    Radii choose_symmetric(const std::vector<long>& xs, const std::vector<long>& ys) const {
        auto cost = [&](const std::vector<long>& v, double r) {
            double c = -HUGE_VAL;
            for (long x : v) c = std::max(c, ring_cost([&](cplx s) { return log_S(x, s); }, 0.0, r));
            return c;
        };
        auto best_r = [&](const std::vector<long>& v) {
            double br = 0.5, bc = HUGE_VAL;
            for (int i = 0; i <= 64; ++i) {
                const double r = 0.9 * std::pow(1e-4, 1.0 - i / 64.0);
                const double c = cost(v, r);
                if (c < bc) {
                    bc = c;
                    br = r;
                }
            }
            return br;
        };
        const double c = f_.xi, gap = 1.25;
        double rs = best_r(xs), rt = best_r(ys);
        Radii out{rs, rt, rs * rt > c, cost(xs, rs) + cost(ys, rt)};
        if (std::abs(std::log(rs * rt / c)) >= std::log(gap)) return out;
        Radii best;
        best.cost = HUGE_VAL;
        for (double target : {c * gap, c / gap}) {
            for (int i = 0; i <= 16; ++i) {
                // split the required change of log(rs rt) between the two radii
                const double lam = i / 16.0, d = std::log(target / (rs * rt));
                const double a = rs * std::exp(lam * d), b = rt * std::exp((1.0 - lam) * d);
                if (a >= 0.9 || b >= 0.9) continue;
                const double cc = cost(xs, a) + cost(ys, b);
                if (cc < best.cost) best = {a, b, a * b > c, cc};
            }
        }
        return best;
    }

    // K on the rectangle xs x ys with one set of radii; nodes are doubled
    // until every entry is converged.
    Eigen::MatrixXd block(const std::vector<long>& xs, const std::vector<long>& ys, double* err_out = nullptr,
                          int* nodes_out = nullptr) const {
        if (!symmetric()) return block_with(false, xs, ys, err_out, nodes_out);
        // far from the diagonal the symmetric saddles leave the unit disc;
        // the dual form is the fallback there
        try {
            return block_with(true, xs, ys, err_out, nodes_out);
        } catch (const QuadratureError&) {
            return block_with(false, xs, ys, err_out, nodes_out);
        }
    }

    Eigen::MatrixXd block_with(bool sym, const std::vector<long>& xs, const std::vector<long>& ys,
                               double* err_out = nullptr, int* nodes_out = nullptr) const {
        const Radii r = sym ? choose_symmetric(xs, ys) : choose(xs, ys);
        const cplx cz0 = sym ? 0.0 : z0_;
        auto lA = [&](long x, cplx s) { return sym ? log_S(x, s) : log_F(x, s); };
        auto lB = [&](long y, cplx z) { return sym ? log_S(y, z) : log_G(y, z); };
        auto cauchy = [&](cplx s, cplx z) { return sym ? 1.0 / (1.0 - s * z / f_.xi) : 1.0 / (z - s); };
        const long nx = static_cast<long>(xs.size()), ny = static_cast<long>(ys.size());
        // common real shifts keep the exponentials in range
        std::vector<double> sx(nx), sy(ny);
        for (long i = 0; i < nx; ++i) sx[i] = ring_cost([&](cplx s) { return lA(xs[i], s); }, 0.0, r.rs) - std::log(r.rs);
        for (long j = 0; j < ny; ++j) sy[j] = ring_cost([&](cplx z) { return lB(ys[j], z); }, cz0, r.rz) - std::log(r.rz);
        auto eval = [&](int n, Eigen::MatrixXd* mag) {
            const CircleNodes cs = circle_nodes(0.0, r.rs, n), cz = circle_nodes(cz0, r.rz, n);
            Eigen::MatrixXcd A(nx, n), B(n, ny), C(n, n);
            for (long i = 0; i < nx; ++i)
                for (int k = 0; k < n; ++k) A(i, k) = cs.wt[k] * std::exp(lA(xs[i], cs.z[k]) - sx[i]);
            for (int k = 0; k < n; ++k)
                for (long j = 0; j < ny; ++j) B(k, j) = cz.wt[k] * std::exp(lB(ys[j], cz.z[k]) - sy[j]);
            double cmax = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    C(a, b) = cauchy(cs.z[a], cz.z[b]);
                    cmax = std::max(cmax, std::abs(C(a, b)));
                }
            const Eigen::MatrixXcd V = A * (C * B);
            Eigen::MatrixXd out(nx, ny);
            *mag = Eigen::MatrixXd(nx, ny);
            for (long i = 0; i < nx; ++i)
                for (long j = 0; j < ny; ++j) {
                    const double sc =
                        std::exp((sym ? 0.0 : log_pref(xs[i], ys[j])) + sx[i] + sy[j]);
                    out(i, j) = -sc * V(i, j).real();
                    if (sym && !r.enclosing && xs[i] == ys[j]) out(i, j) += 1.0;
                    (*mag)(i, j) = sc * r.rs * r.rz * cmax;
                }
            return out;
        };
        Eigen::MatrixXd mag;
        int n = 64;
        Eigen::MatrixXd prev = eval(n, &mag);
        for (;;) {
            n *= 2;
            Eigen::MatrixXd cur = eval(n, &mag);
            const Eigen::MatrixXd diff = (cur - prev).cwiseAbs();
            const Eigen::MatrixXd floor = 64.0 * std::numeric_limits<double>::epsilon() * mag;
            bool ok = true;
            double e = 0.0;
            for (long i = 0; i < nx; ++i)
                for (long j = 0; j < ny; ++j) {
                    e = std::max(e, std::max(diff(i, j), floor(i, j)));
                    if (diff(i, j) > tol && diff(i, j) > floor(i, j)) ok = false;
                }
            if (ok) {
                if (err_out) *err_out = e;
                if (nodes_out) *nodes_out = n;
                return cur;
            }
            if (n >= max_nodes)
                throw QuadratureError("DualKernel: no convergence at " + std::to_string(n) + " nodes", 0.0, e, n);
            prev = std::move(cur);
        }
    }

    // Window evaluation in square tiles; on a square window only the upper
    // tiles are integrated and K(y, x) = K(x, y) fills the rest.
    Eigen::MatrixXd window(Window wx, Window wy, int tile = 8, double* err_out = nullptr, int threads = 1) const {
        Eigen::MatrixXd K(wx.size(), wy.size());
        const long tx = (wx.size() + tile - 1) / tile, ty = (wy.size() + tile - 1) / tile;
        const bool square = wx.lo == wy.lo && wx.hi == wy.hi;
        std::vector<double> errs(tx * ty, 0.0);
        parallel_for(tx * ty, threads, [&](long id) {
            const long bi = id / ty, bj = id % ty;
            if (square && bj < bi) return;
            std::vector<long> xs, ys;
            for (long x = wx.lo + bi * tile; x <= std::min(wx.hi, wx.lo + (bi + 1) * tile - 1); ++x) xs.push_back(x);
            for (long y = wy.lo + bj * tile; y <= std::min(wy.hi, wy.lo + (bj + 1) * tile - 1); ++y) ys.push_back(y);
            double e = 0.0;
            const Eigen::MatrixXd b = block(xs, ys, &e);
            K.block(xs.front() - wx.lo, ys.front() - wy.lo, xs.size(), ys.size()) = b;
            errs[id] = e;
        });
        if (square)
            for (long i = 0; i < K.rows(); ++i)
                for (long j = 0; j < i; ++j)
                    if (i / tile != j / tile) K(i, j) = K(j, i);
        if (err_out) *err_out = *std::max_element(errs.begin(), errs.end());
        return K;
    }

private:
    template <class LogF>
    static double ring_cost(LogF&& f, cplx c, double r, int nang = 48) {
        double mx = -HUGE_VAL;
        for (int k = 0; k < nang; ++k) mx = std::max(mx, f(c + std::polar(r, 2.0 * kPi * (k + 0.5) / nang)).real());
        return mx + std::log(r);
    }

    WeightFamily f_;
    int N_, L_;
    double z0_ = 0, rs_max_ = 0, rz_max_ = 0;
};

inline Eigen::MatrixXd projection_contour(const WeightFamily& f, int N, Window w, double* err = nullptr,
                                          int threads = 1) {
    return DualKernel(f, N).window(w, w, 8, err, threads);
}

// ------------------------------------------------ printed double contours

enum class Nesting { Var1Inner, Var2Inner };

inline std::string to_string(Nesting n) { return n == Nesting::Var1Inner ? "var1-inner" : "var2-inner"; }

// Radii of the two circles |z1| = r1 (x-variable) and |z2| = r2 (y-variable).
struct ContourPair {
    double r1 = 0.5, r2 = 0.7;
    std::string label;
    Nesting nesting() const { return r1 < r2 ? Nesting::Var1Inner : Nesting::Var2Inner; }
};

// The nesting stated for each family with the default radii: Meixner puts
// the first variable inside, Charlier and Krawtchouk the second.
inline ContourPair printed_pair(const WeightFamily& f) {
    switch (f.tag) {
        case Family::Meixner: {
            const double s = f.s();
            return {(2.0 * s + 1.0) / 3.0, (s + 2.0) / 3.0, "printed"};
        }
        case Family::Charlier: return {0.7, 0.35, "printed"};
        default: {
            const double r = std::min(1.0 / f.p, 1.0 / f.q());
            return {0.8 * r, 0.4 * r, "printed"};
        }
    }
}

inline ContourPair swapped(const ContourPair& c) { return {c.r2, c.r1, c.label + "-swapped"}; }

// Meixner radii in (1, 1/s) with the first variable inside.
inline ContourPair meixner_outer_band(const WeightFamily& f) {
    const double s = f.s(), a = 1.0 / s - 1.0;
    return {1.0 + a / 3.0, 1.0 + 2.0 * a / 3.0, "outer-band"};
}

enum class Insert { None, DhatVar2, EpshatVar1 };
enum class S4Numerator { Printed, DifferenceQuotient };

class PrintedDouble {
public:
    PrintedDouble(const WeightFamily& f, int N, ContourPair pair) : f_(f), N_(N), L_(f.rank(N)), pair_(pair) {}

    double tol = 1e-13;
    int max_nodes = 2048;
    double last_error = 0.0;  // max node-doubling difference
    double last_floor = 0.0;  // rounding floor from the largest summand
    int last_nodes = 0;

    const ContourPair& pair() const { return pair_; }

    cplx log_a(long x, cplx z) const {
        const double xd = static_cast<double>(x);
        switch (f_.tag) {
            case Family::Meixner: return log_meixner_G(L_, z, f_.s()) + (L_ - xd - 1.0) * std::log(z);
            case Family::Charlier: return -f_.theta * z + xd * std::log(1.0 + z) - (N_ + 1.0) * std::log(z);
            default:
                return (f_.M - xd) * std::log(1.0 + f_.p * z) + xd * std::log(1.0 - f_.q() * z) -
                       (N_ + 1.0) * std::log(z);
        }
    }
    cplx log_b(long y, cplx z) const {
        const double yd = static_cast<double>(y);
        switch (f_.tag) {
            case Family::Meixner: return log_meixner_G(L_, z, f_.s()) + (L_ - yd - 1.0) * std::log(z);
            case Family::Charlier: return -f_.theta * z + yd * std::log(1.0 + z) + (N_ - 1.0) * std::log(z);
            default:
                return (f_.M - yd) * std::log(1.0 + f_.p * z) + yd * std::log(1.0 - f_.q() * z) +
                       (N_ - 1.0) * std::log(z);
        }
    }
    double log_pref(long x, long y) const {
        if (f_.tag == Family::Meixner) return 0.0;
        return 0.5 * (log_weight(f_, x) + log_weight(f_, y));
    }

    cplx dhat(cplx z) const {
        switch (f_.tag) {
            case Family::Meixner: return symbol(SymbolPlane::MeixnerOmega, SymbolKind::D, z);
            case Family::Charlier: return symbol(SymbolPlane::CharlierT, SymbolKind::D, z);
            default: return symbol(SymbolPlane::KrawtchoukV, SymbolKind::D, z, f_);
        }
    }
    cplx epshat(cplx z) const {
        switch (f_.tag) {
            case Family::Meixner: return symbol(SymbolPlane::MeixnerOmega, SymbolKind::Epsilon, z);
            case Family::Charlier: return symbol(SymbolPlane::CharlierT, SymbolKind::Epsilon, z);
            default: return symbol(SymbolPlane::KrawtchoukV, SymbolKind::Epsilon, z, f_);
        }
    }

    // Cauchy factor of the projection.
    cplx cauchy(cplx z1, cplx z2) const {
        return f_.tag == Family::Meixner ? 1.0 / (z1 * z2 - 1.0) : 1.0 / (z1 - z2);
    }

    Eigen::MatrixXd projection(Window w, Insert ins = Insert::None) {
        return run(w, [&](cplx a, cplx b) { return cauchy(a, b); }, ins);
    }

    // Composition K T K for a multiplier m_T.
    Eigen::MatrixXd compose(Window w, const std::function<cplx(cplx)>& m, Insert ins = Insert::None) {
        return run(
            w, [&](cplx a, cplx b) { return cauchy(a, b) * (m(a) - m(b)) / (a - b); }, ins);
    }

    Eigen::MatrixXd s4(Window w, Insert ins = Insert::None, S4Numerator num = S4Numerator::Printed) {
        if (f_.tag == Family::Meixner && num == S4Numerator::Printed)
            return run(
                w, [&](cplx a, cplx b) { return cauchy(a, b) * (b - a) / ((a * a - 1.0) * (b * b - 1.0)); }, ins);
        return compose(w, [&](cplx z) { return epshat(z); }, ins);
    }

private:
    template <class Core>
    Eigen::MatrixXd run(Window w, Core&& core, Insert ins) {
        const long nw = w.size();
        std::vector<double> sx(nw), sy(nw);
        for (long i = 0; i < nw; ++i) {
            sx[i] = -HUGE_VAL;
            sy[i] = -HUGE_VAL;
            const CircleNodes c1 = circle_nodes(0.0, pair_.r1, 64), c2 = circle_nodes(0.0, pair_.r2, 64);
            for (int k = 0; k < 64; ++k) {
                sx[i] = std::max(sx[i], log_a(w.lo + i, c1.z[k]).real());
                sy[i] = std::max(sy[i], log_b(w.lo + i, c2.z[k]).real());
            }
        }
        auto eval = [&](int n, double* floor) {
            const CircleNodes c1 = circle_nodes(0.0, pair_.r1, n), c2 = circle_nodes(0.0, pair_.r2, n);
            Eigen::MatrixXcd A(nw, n), B(n, nw), C(n, n);
            double amax = 0, bmax = 0, cmax = 0;
            for (int k = 0; k < n; ++k) {
                const cplx e1 = ins == Insert::EpshatVar1 ? epshat(c1.z[k]) : 1.0;
                const cplx e2 = ins == Insert::DhatVar2 ? dhat(c2.z[k]) : 1.0;
                for (long i = 0; i < nw; ++i) {
                    A(i, k) = c1.wt[k] * e1 * std::exp(log_a(w.lo + i, c1.z[k]) - sx[i]);
                    B(k, i) = c2.wt[k] * e2 * std::exp(log_b(w.lo + i, c2.z[k]) - sy[i]);
                    amax = std::max(amax, std::abs(A(i, k)) * n);
                    bmax = std::max(bmax, std::abs(B(k, i)) * n);
                }
            }
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    C(a, b) = core(c1.z[a], c2.z[b]);
                    cmax = std::max(cmax, std::abs(C(a, b)));
                }
            const Eigen::MatrixXcd V = A * (C * B);
            Eigen::MatrixXd out(nw, nw);
            double fl = 0.0;
            for (long i = 0; i < nw; ++i)
                for (long j = 0; j < nw; ++j) {
                    const double sc = std::exp(log_pref(w.lo + i, w.lo + j) + sx[i] + sy[j]);
                    out(i, j) = sc * V(i, j).real();
                    fl = std::max(fl, 64.0 * std::numeric_limits<double>::epsilon() * sc * amax * bmax * cmax);
                }
            *floor = fl;
            return out;
        };
        int n = 128;
        double fl = 0.0;
        Eigen::MatrixXd prev = eval(n, &fl);
        for (;;) {
            n *= 2;
            Eigen::MatrixXd cur = eval(n, &fl);
            const double e = (cur - prev).cwiseAbs().maxCoeff();
            if (e <= std::max(tol, fl) || n >= max_nodes) {
                last_error = e;
                last_floor = fl;
                last_nodes = n;
                return cur;
            }
            prev = std::move(cur);
        }
    }

    WeightFamily f_;
    int N_, L_;
    ContourPair pair_;
};

// ----------------------------------------------------------- block sets

struct KernelBlockSet {
    Eigen::MatrixXd S, SD, epsS;
    std::string provenance;  // "contour" | "oracle"
    int beta = 4;
    int N = 0;
    Window window;
    std::map<std::string, std::string> metadata;
};

// Printed beta = 4 blocks: scalar block plus the D-hat / eps-hat insertions.
inline KernelBlockSet s4_block(const WeightFamily& f, int N, Window w, ContourPair pair,
                               S4Numerator num = S4Numerator::Printed) {
    PrintedDouble pd(f, N, pair);
    KernelBlockSet b;
    b.S = pd.s4(w, Insert::None, num);
    b.SD = pd.s4(w, Insert::DhatVar2, num);
    b.epsS = pd.s4(w, Insert::EpshatVar1, num);
    b.provenance = "contour";
    b.beta = 4;
    b.N = N;
    b.window = w;
    b.metadata["nesting"] = to_string(pair.nesting());
    b.metadata["radii"] = std::to_string(pair.r1) + "," + std::to_string(pair.r2);
    b.metadata["pair"] = pair.label;
    b.metadata["quadrature_floor"] = std::to_string(pd.last_floor);
    return b;
}

// Printed beta = 1 blocks. The printed rank-one term is (1/4 pi^2) times the
// product of two bare contour integrals, i.e. -(2 pi i)^2 / (4 pi^2) = -1
// times the product of the Cauchy integrals; that literal coefficient is used.
inline KernelBlockSet s1_block(const WeightFamily& f, int N, Window w, ContourPair pair) {
    PrintedDouble pd(f, N, pair);
    const int a = f.rank(N), bdeg = a - 1;
    SingleContour sc(f, a + 2, Convention::Printed);
    const long nw = w.size();
    Eigen::VectorXd ua(nw), ea(nw), ub(nw), db(nw);
    for (long i = 0; i < nw; ++i) {
        const long x = w.lo + i;
        ua(i) = sc.phi(a, x).value;
        ea(i) = sc.eps_phi(a, x).value;
        ub(i) = sc.eps_phi(bdeg, x).value;
        db(i) = sc.eps_phi_with(bdeg, x, [&](cplx z) { return pd.dhat(z); }).value;
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
    b.metadata["radii"] = std::to_string(pair.r1) + "," + std::to_string(pair.r2);
    b.metadata["pair"] = pair.label;
    b.metadata["rank_one_coefficient"] = "-1 (printed 1/(4 pi^2) with bare integrals)";
    return b;
}

// ------------------------------------------------------------ lattice oracle

// Matrix-product oracles on the truncated lattice: K = Phi^T Phi,
// K eps K = Phi^T E Phi with E_mn = <phi_m, eps phi_n>, and the beta = 1
// rank-one perturbation with indices a = rank, b = rank - 1.
class LatticeOracle {
public:
    LatticeOracle(const WeightFamily& f, int N, std::optional<TruncatedLattice> lat = {})
        : f_(f), N_(N), L_(f.rank(N)) {
        const TruncatedLattice t = lat ? *lat : truncate(f);
        const int cnt = f.finite_support() ? std::min(L_ + 1, f.M + 1) : L_ + 1;
        phi_ = PhiTable(f, cnt, t);
        X_ = phi_.x_max();
        lf_ = epsilon_log_f(phi_.log_weights());
        const long S = X_ + 1;
        eps_phi_.resize(cnt);
        d_phi_.resize(cnt);
        for (int n = 0; n < cnt; ++n) {
            eps_phi_[n] = apply_epsilon(lf_, phi_.row(n));
            d_phi_[n] = apply_d(phi_.row(n));
        }
        E_ = Eigen::MatrixXd::Zero(L_, L_);
        for (int m = 0; m < L_; ++m)
            for (int n = 0; n < L_; ++n) {
                double acc = 0.0;
                for (long x = 0; x < S; ++x) acc += phi_(m, x) * eps_phi_[n][x];
                E_(m, n) = acc;
            }
    }

    const PhiTable& phi() const { return phi_; }
    const Eigen::MatrixXd& E() const { return E_; }
    int rank() const { return L_; }
    const std::vector<double>& eps_phi(int n) const { return eps_phi_.at(n); }
    const std::vector<double>& log_f() const { return lf_; }

    // D v on the lattice (v given on 0..X).
    std::vector<double> apply_d(const double* v) const {
        const auto& lw = phi_.log_weights();
        std::vector<double> out(X_ + 1, 0.0);
        for (long x = 0; x <= X_; ++x) {
            double acc = 0.0;
            if (x < X_) acc += std::exp(0.5 * (lw[x] - lw[x + 1])) * v[x + 1];
            if (x > 0) acc -= std::exp(0.5 * (lw[x - 1] - lw[x])) * v[x - 1];
            out[x] = acc;
        }
        return out;
    }

    // Rows of Phi over a window, with an optional map applied per degree.
    Eigen::MatrixXd rows(Window w, int count, int which = 0) const {
        Eigen::MatrixXd P(count, w.size());
        for (int n = 0; n < count; ++n)
            for (long i = 0; i < w.size(); ++i) {
                const long x = w.lo + i;
                double v = 0.0;
                if (x <= X_) {
                    if (which == 0) v = phi_(n, x);
                    else if (which == 1) v = eps_phi_[n][x];
                    else v = -d_phi_[n][x];  // (v^T D)(y) = -(D v)(y)
                }
                P(n, i) = v;
            }
        return P;
    }

    Eigen::MatrixXd K(Window w) const {
        const Eigen::MatrixXd P = rows(w, L_);
        return P.transpose() * P;
    }

    // K T K for an operator given by its Gram matrix T_mn = <phi_m, T phi_n>.
    Eigen::MatrixXd sandwich(Window w, const Eigen::MatrixXd& T) const {
        const Eigen::MatrixXd P = rows(w, L_);
        return P.transpose() * T * P;
    }

    KernelBlockSet block(int beta, Window w) const {
        KernelBlockSet b;
        b.provenance = "oracle";
        b.beta = beta;
        b.N = N_;
        b.window = w;
        const Eigen::MatrixXd P = rows(w, L_), Pe = rows(w, L_, 1), Pd = rows(w, L_, 2);
        if (beta == 4) {
            b.S = P.transpose() * E_ * P;
            b.SD = P.transpose() * E_ * Pd;
            b.epsS = Pe.transpose() * E_ * P;
        } else if (beta == 1) {
            const int a = L_, bb = L_ - 1;
            if (a >= phi_.size()) throw std::domain_error("oracle: rank-one index beyond the lattice");
            Eigen::VectorXd ua(w.size()), ea(w.size()), ub(w.size()), db(w.size());
            for (long i = 0; i < w.size(); ++i) {
                const long x = w.lo + i;
                const bool in = x <= X_;
                ua(i) = in ? phi_(a, x) : 0.0;
                ea(i) = in ? eps_phi_[a][x] : 0.0;
                ub(i) = in ? eps_phi_[bb][x] : 0.0;
            }
            // (eps phi_b)^T D evaluated as -(D eps phi_b)
            const std::vector<double> dv = apply_d(eps_phi_[bb].data());
            for (long i = 0; i < w.size(); ++i) db(i) = (w.lo + i <= X_) ? -dv[w.lo + i] : 0.0;
            b.S = P.transpose() * P + 0.5 * ua * ub.transpose();
            b.SD = P.transpose() * Pd + 0.5 * ua * db.transpose();
            b.epsS = Pe.transpose() * P + 0.5 * ea * ub.transpose();
        } else {
            b.S = P.transpose() * P;
            b.SD = P.transpose() * Pd;
            b.epsS = Pe.transpose() * P;
        }
        b.metadata["x_max"] = std::to_string(X_);
        return b;
    }

private:
    WeightFamily f_;
    int N_, L_;
    long X_ = 0;
    PhiTable phi_;
    std::vector<double> lf_;
    std::vector<std::vector<double>> eps_phi_, d_phi_;
    Eigen::MatrixXd E_;
};

inline KernelBlockSet oracle_block(const WeightFamily& f, int N, int beta, Window w) {
    return LatticeOracle(f, N).block(beta, w);
}

// Relative error max|A - B| / max|B|.
inline double rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double d = b.cwiseAbs().maxCoeff();
    return (a - b).cwiseAbs().maxCoeff() / (d > 0 ? d : 1.0);
}

}  // namespace iiks
