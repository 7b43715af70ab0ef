#pragma once

// Single-contour (Cauchy coefficient) representations of wave functions and
// their epsilon images, the rational symbols of D and epsilon, and the
// Meixner generating function G_m.
//
// Two conventions are kept side by side:
//   Production - normalisation fixed by the lattice norm of the extracted
//                polynomial and sign fixed to a positive leading coefficient,
//                so values agree with PhiTable.
//   Printed    - the published formulas taken literally (normalisation,
//                sign, G_m form). Used by adjudication and discrepancy reports.

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadrature.hpp"
#include "weights.hpp"

namespace iiks {

enum class Convention { Production, Printed };

// G_m(w) = (1 - s w)^{-m} (1 - s / w)^m
inline cplx meixner_G(int m, cplx w, double s) {
    if (std::abs(w) == 0.0) throw std::domain_error("meixner_G: w = 0");
    return std::pow(1.0 - s * w, -m) * std::pow(1.0 - s / w, m);
}

inline cplx log_meixner_G(int m, cplx w, double s) {
    return -static_cast<double>(m) * std::log(1.0 - s * w) + static_cast<double>(m) * std::log(1.0 - s / w);
}

// ---------------------------------------------------------------- symbols

enum class SymbolPlane { MeixnerOmega, CharlierT, CharlierW, KrawtchoukV };
enum class SymbolKind { D, Epsilon };

struct SymbolSingularities {
    std::vector<cplx> poles;
    std::vector<cplx> zeros;
};

inline cplx symbol(SymbolPlane plane, SymbolKind kind, cplx z, const WeightFamily& f = {}) {
    switch (plane) {
        case SymbolPlane::MeixnerOmega:
        case SymbolPlane::CharlierW:
            return kind == SymbolKind::D ? z - 1.0 / z : 1.0 / (z * z - 1.0);
        case SymbolPlane::CharlierT:
            return kind == SymbolKind::D ? z * (2.0 + z) / (1.0 + z) : (1.0 + z) / (z * (2.0 + z));
        default: {
            const double p = f.p, q = f.q();
            if (kind == SymbolKind::D) {
                const cplx R = (1.0 - q * z) / (1.0 + p * z);
                return R - 1.0 / R;
            }
            return (1.0 + p * z) * (1.0 + p * z) / (-2.0 * z + (q - p) * z * z);
        }
    }
}

inline SymbolSingularities symbol_singularities(SymbolPlane plane, SymbolKind kind,
                                                const WeightFamily& f = {}) {
    SymbolSingularities s;
    switch (plane) {
        case SymbolPlane::MeixnerOmega:
        case SymbolPlane::CharlierW:
            if (kind == SymbolKind::D) {
                s.poles = {0.0};
                s.zeros = {1.0, -1.0};
            } else {
                s.poles = {1.0, -1.0};
            }
            break;
        case SymbolPlane::CharlierT:
            if (kind == SymbolKind::D) {
                s.poles = {-1.0};
                s.zeros = {0.0, -2.0};
            } else {
                s.poles = {0.0, -2.0};
                s.zeros = {-1.0};
            }
            break;
        default: {
            const double p = f.p, q = f.q();
            std::vector<cplx> a = {0.0}, b = {-1.0 / p, 1.0 / q};
            if (std::abs(q - p) > 0.0) a.push_back(2.0 / (q - p));
            if (kind == SymbolKind::D) {
                s.poles = b;
                s.zeros = a;
            } else {
                s.poles = a;
                s.zeros = {-1.0 / p, -1.0 / p};
            }
        }
    }
    return s;
}

// Exact map t = (sqrt(theta)/2)(w - 1/w) and its Jacobian dt/dw.
struct WMap {
    cplx t;
    cplx dt_dw;
};
inline WMap charlier_w_map(double theta, cplx w) {
    const double a = 0.5 * std::sqrt(theta);
    return {a * (w - 1.0 / w), a * (1.0 + 1.0 / (w * w))};
}

// ------------------------------------------------ single-contour engine

struct ContourValue {
    double value = 0.0;
    double error = 0.0;
    double imag = 0.0;  // imaginary residue of the quadrature, should be ~0
    int nodes = 0;
    double radius = 0.0;
};

class SingleContour {
public:
    // nmax: number of degrees (0..nmax-1) whose norms are tabulated.
    SingleContour(const WeightFamily& f, int nmax, Convention conv = Convention::Production)
        : fam_(f), conv_(conv) {
        const TruncatedLattice lat = truncate(f);
        const int cnt = f.finite_support() ? std::min(nmax + 1, f.M + 1) : nmax + 1;
        PhiTable t(f, cnt, lat);
        // log h_n of the monic polynomials from the Stieltjes coefficients:
        // h_n = h_0 prod_{k<=n} a_k^2 with h_0 = sum_x w(x) over the lattice.
        const auto& lw = t.log_weights();
        const double lmax = *std::max_element(lw.begin(), lw.end());
        double acc = 0.0;
        for (double l : lw) acc += std::exp(l - lmax);
        log_h_.resize(cnt);
        log_h_[0] = lmax + std::log(acc);
        for (int n = 1; n < cnt; ++n) log_h_[n] = log_h_[n - 1] + 2.0 * std::log(t.beta(n));
    }

    const WeightFamily& family() const { return fam_; }
    Convention convention() const { return conv_; }
    double log_monic_norm(int n) const { return log_h_.at(n); }

    double tol = 1e-14;  // absolute quadrature tolerance

    ContourValue phi(int n, long x, std::optional<ContourSpec> spec = {}) const {
        check_args(n, x);
        auto logI = [&](cplx z) { return log_integrand(n, x, z); };
        return run(logI, n, x, spec, false);
    }

    // Epsilon image by the symbol calculus (printed multiplier inserted).
    // For Meixner with beta = 1 in the Production convention the exact
    // geometric formula is used instead (see meixner_eps_phi).
    ContourValue eps_phi(int n, long y, std::optional<ContourSpec> spec = {}) const {
        check_args(n, y);
        if (conv_ == Convention::Production && fam_.tag == Family::Meixner)
            return meixner_eps_phi(n, y, spec);
        auto logI = [&](cplx z) { return log_integrand(n, y, z) + std::log(eps_symbol(z)); };
        return run(logI, n, y, spec, true);
    }

    // Single-contour image with the epsilon symbol times an extra multiplier
    // (the Kuznetsov splice). The multiplier is evaluated on the contour
    // variable of the family.
    ContourValue eps_phi_with(int n, long y, const std::function<cplx(cplx)>& extra,
                              std::optional<ContourSpec> spec = {}) const {
        check_args(n, y);
        auto logI = [&](cplx z) {
            return log_integrand(n, y, z) + std::log(eps_symbol(z)) + std::log(extra(z));
        };
        return run(logI, n, y, spec, true);
    }

    cplx eps_symbol(cplx z) const {
        switch (fam_.tag) {
            case Family::Meixner:
                if (conv_ == Convention::Printed) return 1.0 / (z * z - 1.0);
                throw std::domain_error("no production epsilon symbol in the Meixner x-plane");
            case Family::Charlier: return symbol(SymbolPlane::CharlierT, SymbolKind::Epsilon, z);
            default: return symbol(SymbolPlane::KrawtchoukV, SymbolKind::Epsilon, z, fam_);
        }
    }

    // Admissible radius interval of the contour variable.
    std::pair<double, double> radius_band(bool with_eps) const {
        const double big = 1e6, small = 1e-6;
        switch (fam_.tag) {
            case Family::Meixner: {
                const double s = fam_.s();
                if (conv_ == Convention::Printed) return {s, with_eps ? 1.0 : 1.0 / s};
                return {small, with_eps ? 1.0 : 1.0};
            }
            case Family::Charlier:
                if (conv_ == Convention::Printed) return {small, 1.0};
                return {small, with_eps ? 2.0 : big};
            default: {
                const double p = fam_.p, q = fam_.q();
                if (conv_ == Convention::Printed) return {small, std::min(1.0 / p, 1.0 / q)};
                if (!with_eps) return {small, big};
                double r = 1.0 / p;
                if (std::abs(q - p) > 0.0) r = std::min(r, std::abs(2.0 / (q - p)));
                return {small, r};
            }
        }
    }

    // Log of the integrand without the 1/(2 pi i), for the extraction of
    // coefficient x (Meixner Production) or degree n (other cases).
    cplx log_integrand(int n, long x, cplx z) const {
        const double xd = static_cast<double>(x), nd = static_cast<double>(n);
        switch (fam_.tag) {
            case Family::Meixner:
                if (conv_ == Convention::Printed)
                    return log_meixner_G(n, z, fam_.s()) + (nd - xd - 1.0) * std::log(z);
                return nd * std::log(1.0 - z / fam_.xi) - (nd + fam_.beta_m) * std::log(1.0 - z) -
                       (xd + 1.0) * std::log(z);
            case Family::Charlier:
                return -fam_.theta * z + xd * std::log(1.0 + z) - (nd + 1.0) * std::log(z);
            default:
                return (fam_.M - xd) * std::log(1.0 + fam_.p * z) + xd * std::log(1.0 - fam_.q() * z) -
                       (nd + 1.0) * std::log(z);
        }
    }

    // Real prefactor (log) and sign in front of (1/2 pi i) \oint.
    double log_prefactor(int n, long x) const {
        const double xd = static_cast<double>(x), nd = static_cast<double>(n);
        const double lw = log_weight(fam_, x);
        switch (fam_.tag) {
            case Family::Meixner: {
                if (conv_ == Convention::Printed) return 0.0;
                const double c = fam_.xi, b = fam_.beta_m;
                // phi = sqrt(x! c^x / (beta)_x) [sigma^x](...) / ||M_n||,
                // ||M_n||^2 = h_n (1 - 1/c)^{2n} / ((beta)_n)^2.
                return 0.5 * (xd * std::log(c) + std::lgamma(xd + 1.0) - std::lgamma(b + xd) + std::lgamma(b)) -
                       0.5 * log_h_.at(n) - nd * std::log(1.0 / c - 1.0) + std::lgamma(b + nd) - std::lgamma(b);
            }
            case Family::Charlier:
                // Extracted polynomial is C_n / n!; printed text divides by sqrt(h_n) only.
                return 0.5 * lw - 0.5 * log_h_.at(n) + (conv_ == Convention::Production ? std::lgamma(nd + 1.0) : 0.0);
            default:
                // Extracted polynomial has leading coefficient (-1)^n / n!.
                return 0.5 * lw - 0.5 * log_h_.at(n) + std::lgamma(nd + 1.0);
        }
    }

    double sign(int n) const {
        if (conv_ == Convention::Printed) return 1.0;
        if (fam_.tag == Family::Charlier) return 1.0;
        return (n % 2 == 0) ? 1.0 : -1.0;
    }

private:
    void check_args(int n, long x) const {
        if (n < 0 || n >= static_cast<int>(log_h_.size()))
            throw std::domain_error("single contour: degree outside the tabulated range");
        if (x < 0 || (fam_.finite_support() && x > fam_.M))
            throw std::domain_error("single contour: x outside the support");
    }

    template <class LogF>
    ContourValue run(LogF&& logI, int n, long x, std::optional<ContourSpec> spec, bool with_eps) const {
        const auto band = radius_band(with_eps);
        ContourSpec c;
        if (spec) {
            c = *spec;
            if (!(c.radius > band.first && c.radius < band.second))
                throw std::domain_error("single contour: radius " + std::to_string(c.radius) +
                                        " outside the admissible band (" + std::to_string(band.first) + ", " +
                                        std::to_string(band.second) + ")");
        } else {
            const double lo = band.first * 1.0001, hi = band.second * 0.97;
            c.radius = choose_radius(logI, 0.0, lo, hi);
        }
        const double lp = log_prefactor(n, x);
        auto shifted = [&](cplx z) { return logI(z) + lp; };
        const QuadResult q = circle_quadrature_log(shifted, c, tol);
        ContourValue v;
        v.value = sign(n) * q.value.real();
        v.imag = q.value.imag();
        v.error = q.error;
        v.nodes = q.nodes;
        v.radius = c.radius;
        return v;
    }

    // Meixner, beta = 1: with a positive leading coefficient the x-generating
    // function of phi_n is
    //   g_n(w) = kappa B(w)^n / (1 - s w),  B = (w - s)/(1 - s w),
    // and that of eps phi_n is s (w g_n(w) - c_n) / (1 - w^2) with c_n the sum
    // of phi_n over odd sites, c_n = kappa (1/(1 - s) - (-1)^n/(1 + s)) / 2.
    ContourValue meixner_eps_phi(int n, long y, std::optional<ContourSpec> spec) const {
        if (std::abs(fam_.beta_m - 1.0) > 1e-15)
            throw std::domain_error("Meixner epsilon image by contour requires beta = 1");
        const double s = fam_.s(), kappa = std::sqrt(1.0 - s * s);
        const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
        const double cn = 0.5 * kappa * (1.0 / (1.0 - s) - sgn / (1.0 + s));
        const double yd = static_cast<double>(y);
        auto logI = [&](cplx w) {
            const cplx B = (w - s) / (1.0 - s * w);
            const cplx g = kappa * std::pow(B, n) / (1.0 - s * w);
            return std::log(s * (w * g - cn) / (1.0 - w * w)) - (yd + 1.0) * std::log(w);
        };
        ContourSpec c;
        if (spec) {
            c = *spec;
            if (!(c.radius > 0.0 && c.radius < 1.0))
                throw std::domain_error("Meixner epsilon contour must lie inside the unit circle");
        } else {
            c.radius = choose_radius(logI, 0.0, 1e-6, 0.97);
        }
        const QuadResult q = circle_quadrature_log(logI, c, tol);
        return {q.value.real(), q.error, q.value.imag(), q.nodes, c.radius};
    }

    WeightFamily fam_;
    Convention conv_;
    std::vector<double> log_h_;
};

// Convenience wrappers with the production convention.
inline ContourValue phi_via_contour(const WeightFamily& f, int n, long x,
                                    std::optional<ContourSpec> spec = {},
                                    Convention conv = Convention::Production) {
    return SingleContour(f, n + 2, conv).phi(n, x, spec);
}

inline ContourValue eps_phi_via_contour(const WeightFamily& f, int n, long y,
                                        std::optional<ContourSpec> spec = {},
                                        Convention conv = Convention::Printed) {
    return SingleContour(f, n + 2, conv).eps_phi(n, y, spec);
}

}  // namespace iiks
