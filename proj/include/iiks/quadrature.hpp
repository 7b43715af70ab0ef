#pragma once

// Periodic trapezoidal quadrature on circles, Gauss-Legendre rules, radius
// selection for steepest-descent-like circles, and a deterministic
// parallel_for.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace iiks {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Deterministic pairwise summation; order depends only on n.
template <class T>
T pairwise_sum(const T* v, std::size_t n) {
    if (n == 0) return T{};
    if (n <= 8) {
        T acc = v[0];
        for (std::size_t i = 1; i < n; ++i) acc += v[i];
        return acc;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}
template <class T>
T pairwise_sum(const std::vector<T>& v) {
    return pairwise_sum(v.data(), v.size());
}

enum class Orientation { Counterclockwise = 1, Clockwise = -1 };
enum class BranchPolicy { None, PrincipalLog, Continuous };

struct ContourSpec {
    cplx center{0.0, 0.0};
    double radius = 0.5;
    int node_count = 256;
    Orientation orientation = Orientation::Counterclockwise;
    BranchPolicy branch = BranchPolicy::None;
};

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline void validate(const ContourSpec& c) {
    if (!(c.radius > 0.0)) throw std::domain_error("contour: radius must be positive");
    if (c.node_count < 16 || !is_pow2(c.node_count))
        throw std::domain_error("contour: node_count must be a power of two >= 16");
}

// Nodes z_j = c + r e^{i t_j}, t_j = 2 pi (j + 1/2) / n, and weights such that
// (1 / 2 pi i) \oint f dz ~= sum_j wt_j f(z_j). Midpoint nodes keep the
// negative real axis off the node set.
struct CircleNodes {
    std::vector<cplx> z, wt;
    std::vector<double> angle;  // in (-pi, pi)
};

inline CircleNodes circle_nodes(cplx center, double radius, int n,
                                Orientation o = Orientation::Counterclockwise) {
    CircleNodes c;
    c.z.resize(n);
    c.wt.resize(n);
    c.angle.resize(n);
    const double sgn = static_cast<double>(static_cast<int>(o));
    for (int j = 0; j < n; ++j) {
        double t = 2.0 * kPi * (j + 0.5) / n;
        if (t > kPi) t -= 2.0 * kPi;
        const cplx e = std::polar(1.0, t);
        c.angle[j] = t;
        c.z[j] = center + radius * e;
        c.wt[j] = sgn * radius * e / static_cast<double>(n);
    }
    return c;
}

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, cplx last, double err, int nodes)
        : std::runtime_error(what), last_value(last), last_error(err), last_nodes(nodes) {}
    cplx last_value;
    double last_error;
    int last_nodes;
};

struct QuadResult {
    cplx value;
    double error = 0.0;
    int nodes = 0;
};

// (1 / 2 pi i) \oint exp(logf(z)) dz by node doubling. logf returns a complex
// logarithm of the integrand; a real shift fixed at the first level keeps the
// exponentials in range. Error estimate |I(n) - I(n/2)|, accepted when below
// tol or when at the rounding floor of the summands.
template <class LogF>
QuadResult circle_quadrature_log(LogF&& logf, const ContourSpec& spec, double tol = 1e-12,
                                 int cap = 1 << 20) {
    validate(spec);
    int n = std::max(spec.node_count, 256);
    double shift = -std::numeric_limits<double>::infinity();
    {
        const CircleNodes c = circle_nodes(spec.center, spec.radius, 64, spec.orientation);
        for (const cplx& z : c.z) shift = std::max(shift, logf(z).real());
        if (!std::isfinite(shift)) shift = 0.0;
    }
    auto eval = [&](int m, double* mag) {
        const CircleNodes c = circle_nodes(spec.center, spec.radius, m, spec.orientation);
        std::vector<cplx> t(m);
        double mx = 0.0;
        for (int j = 0; j < m; ++j) {
            const cplx l = logf(c.z[j]);
            t[j] = c.wt[j] * std::exp(l - shift);
            mx = std::max(mx, std::abs(t[j]) * m);
        }
        *mag = mx;
        return pairwise_sum(t);
    };
    double mag = 0.0;
    cplx prev = eval(n / 2, &mag);
    for (;;) {
        cplx cur = eval(n, &mag);
        const double scale = std::exp(shift);
        const double err = std::abs(cur - prev) * scale;
        const double floor = 64.0 * std::numeric_limits<double>::epsilon() * mag * scale;
        if (err <= tol || err <= floor) return {cur * scale, std::max(err, floor), n};
        if (n >= cap)
            throw QuadratureError("circle_quadrature: no convergence at " + std::to_string(n) +
                                      " nodes (estimate " + std::to_string(err) + ")",
                                  cur * scale, err, n);
        prev = cur;
        n *= 2;
    }
}

template <class F>
QuadResult circle_quadrature(F&& f, const ContourSpec& spec, double tol = 1e-12, int cap = 1 << 20) {
    return circle_quadrature_log([&](cplx z) { return std::log(cplx(f(z))); }, spec, tol, cap);
}

// Radius minimizing max over angles of Re log f(c + r e^{i t}) + log r on
// [rlo, rhi], by golden-section search in log r. For a Cauchy coefficient
// integral this is the circle through the relevant saddle, which keeps the
// trapezoidal sum free of cancellation.
template <class LogF>
double choose_radius(LogF&& logf, cplx center, double rlo, double rhi, int nangles = 64) {
    auto cost = [&](double lr) {
        const double r = std::exp(lr);
        double mx = -std::numeric_limits<double>::infinity();
        // angles k pi / nangles include the real axis, where poles and zeros
        // of the generating functions sit
        for (int j = 0; j < 2 * nangles; ++j) {
            const double t = kPi * j / nangles;
            mx = std::max(mx, logf(center + std::polar(r, t)).real());
        }
        return mx + lr;
    };
    double a = std::log(rlo), b = std::log(rhi);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = cost(c), fd = cost(d);
    for (int it = 0; it < 80 && b - a > 1e-6; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = cost(d);
        }
    }
    return std::exp(0.5 * (a + b));
}

// Gauss-Legendre nodes and weights on [a, b] by Newton iteration.
struct GaussRule {
    std::vector<double> x, w;
};

inline GaussRule gauss_legendre(int n, double a = -1.0, double b = 1.0) {
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * k - 1.0) * z * p2 - (k - 1.0) * p3) / k;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * pp * pp);
        g.x[i] = -z;
        g.x[n - 1 - i] = z;
        g.w[i] = w;
        g.w[n - 1 - i] = w;
    }
    const double h = 0.5 * (b - a), m = 0.5 * (b + a);
    for (int i = 0; i < n; ++i) {
        g.x[i] = m + h * g.x[i];
        g.w[i] *= h;
    }
    return g;
}

// Static-chunk parallel loop. Each index writes only its own slot, so the
// result does not depend on the thread count.
inline void parallel_for(long n, int threads, const std::function<void(long)>& body) {
    if (threads <= 1 || n < 2) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    const int t = static_cast<int>(std::min<long>(threads, n));
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k)
        pool.emplace_back([&, k] {
            for (long i = k; i < n; i += t) body(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace iiks
