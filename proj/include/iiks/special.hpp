#pragma once

// Universal limit kernels. Standard definitions:
//   sine(s, t)   = sin(pi (s - t)) / (pi (s - t)), 1 on the diagonal
//   airy(x, y)   = (Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y),  Ai'(x)^2 - x Ai(x)^2 on the diagonal
//   bessel(a; x, y) = (J_a(sx) sy J_a'(sy) - sx J_a'(sx) J_a(sy)) / (2 (x - y)),  sx = sqrt(x),
//                     (J_a(sx)^2 - J_{a+1}(sx) J_{a-1}(sx)) / 4 on the diagonal
// Ai comes from the contour integral Ai(x) = (1/2 pi i) \int_{a - i inf}^{a + i inf} e^{t^3/3 - x t} dt
// on a vertical line; J_a from its power series.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "quadrature.hpp"

namespace iiks {

inline double sine_kernel(double s, double t) {
    const double d = s - t;
    if (std::abs(d) < 1e-12) return 1.0 - (kPi * d) * (kPi * d) / 6.0;
    return std::sin(kPi * d) / (kPi * d);
}

// d/dd of sinc(d) = sin(pi d)/(pi d); (d_s - d_t) sine(s - t) = 2 sinc'(s - t).
inline double sinc_derivative(double d) {
    if (std::abs(d) < 1e-6) return -kPi * kPi * d / 3.0;
    const double pd = kPi * d;
    return (pd * std::cos(pd) - std::sin(pd)) / (kPi * d * d);
}

struct AiryPair {
    double ai = 0.0, aip = 0.0;
    int nodes = 0;
};

// Trapezoidal rule on the line t = a + i y; the integrand decays like
// exp(-a y^2) and is entire, so the rule converges geometrically in 1/h.
inline AiryPair airy_contour(double x, double tol = 1e-15) {
    const double a = x > 1.0 ? std::sqrt(x) : 1.0 / (1.0 + std::sqrt(std::abs(x)));
    // |integrand| <= exp(a^3/3 - a x - a y^2)
    const double ymax = std::sqrt((40.0 + std::max(0.0, a * a * a / 3.0 - a * x)) / a) + 1.0;
    double floor = 0.0;  // rounding level of the sum
    auto sum = [&](int n, double* s_ai, double* s_aip) {
        const double h = 2.0 * ymax / n;
        cplx acc0 = 0.0, acc1 = 0.0;
        double mag = 0.0;
        for (int j = 0; j <= n; ++j) {
            const double y = -ymax + h * j;
            const cplx t(a, y);
            const cplx e = std::exp(t * t * t / 3.0 - x * t);
            const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
            acc0 += wj * e;
            acc1 += wj * (-t * e);
            mag = std::max(mag, std::abs(t * e) + std::abs(e));
        }
        floor = 64.0 * std::numeric_limits<double>::epsilon() * mag * ymax;
        // dt = i dy, prefactor 1/(2 pi i)
        *s_ai = (acc0 * h).real() / (2.0 * kPi);
        *s_aip = (acc1 * h).real() / (2.0 * kPi);
    };
    int n = 256;
    double a0, a1, b0, b1;
    sum(n, &a0, &a1);
    for (; n <= (1 << 22);) {
        n *= 2;
        sum(n, &b0, &b1);
        const double lim = std::max(tol * std::max({1.0, std::abs(b0), std::abs(b1)}), floor);
        if (std::abs(b0 - a0) <= lim && std::abs(b1 - a1) <= lim)
            return {b0, b1, n};
        a0 = b0;
        a1 = b1;
    }
    throw std::runtime_error("airy: no convergence at x = " + std::to_string(x));
}

// Maclaurin series, used to validate the contour values at small |x|.
inline AiryPair airy_series(double x) {
    const double c1 = 0.355028053887817239, c2 = 0.258819403792806798;
    long double f = 1, g = x, fp = 0, gp = 1;
    long double tf = 1, tg = x;
    const long double x3 = static_cast<long double>(x) * x * x;
    for (int k = 1; k < 200; ++k) {
        tf *= x3 / ((3.0L * k - 1) * (3.0L * k));
        tg *= x3 / ((3.0L * k) * (3.0L * k + 1));
        f += tf;
        g += tg;
        fp += tf * (3.0L * k) / x;
        gp += tg * (3.0L * k + 1) / x;
        if (std::abs(tf) < 1e-30L && std::abs(tg) < 1e-30L) break;
    }
    if (x == 0.0) fp = 0.0, gp = 1.0;
    return {static_cast<double>(c1 * f - c2 * g), static_cast<double>(c1 * fp - c2 * gp), 0};
}

inline double airy_kernel_from(const AiryPair& px, const AiryPair& py, double x, double y) {
    if (std::abs(x - y) < 1e-12) return px.aip * px.aip - x * px.ai * px.ai;
    return (px.ai * py.aip - px.aip * py.ai) / (x - y);
}

inline double airy_kernel(double x, double y) {
    const AiryPair px = airy_contour(x), py = airy_contour(y);
    return airy_kernel_from(px, py, x, y);
}

// J_a(z) and J_a'(z) by the power series (long double accumulation). Accurate
// to about 1e-12 relative for z <= 20.
inline std::pair<double, double> bessel_j(double a, double z) {
    if (z < 0.0) throw std::domain_error("bessel_j: z must be nonnegative");
    if (z == 0.0) {
        if (a == 0.0) return {1.0, 0.0};
        if (a == 1.0) return {0.0, 0.5};
        return {0.0, a < 1.0 ? HUGE_VAL : 0.0};
    }
    const long double h = static_cast<long double>(z) / 2.0L;
    const long double lh = std::log(h);
    long double s = 0, sp = 0;
    for (int k = 0; k < 300; ++k) {
        const long double lg = std::lgamma(static_cast<long double>(k) + 1.0L) +
                               std::lgamma(static_cast<long double>(k) + a + 1.0L);
        const long double mag = std::exp((2.0L * k + a) * lh - lg);
        const long double term = (k % 2 == 0) ? mag : -mag;
        s += term;
        sp += term * (2.0L * k + a);
        if (k > z && mag < 1e-22L * std::abs(s)) break;
    }
    // d/dz (z/2)^{2k+a} = (2k + a)/z (z/2)^{2k+a}
    return {static_cast<double>(s), static_cast<double>(sp / z)};
}

inline double bessel_kernel(double a, double x, double y) {
    if (x < 0.0 || y < 0.0) throw std::domain_error("bessel kernel: arguments must be nonnegative");
    const double sx = std::sqrt(x), sy = std::sqrt(y);
    if (std::abs(x - y) < 1e-12 * std::max(1.0, x)) {
        const double j = bessel_j(a, sx).first, jp = bessel_j(a + 1.0, sx).first, jm = bessel_j(a - 1.0, sx).first;
        return 0.25 * (j * j - jp * jm);
    }
    const auto [jx, djx] = bessel_j(a, sx);
    const auto [jy, djy] = bessel_j(a, sy);
    return (jx * sy * djy - sx * djx * jy) / (2.0 * (x - y));
}

}  // namespace iiks
