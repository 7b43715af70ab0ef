// Acceptance suite: one PASS/FAIL line per criterion, preceded by the
// measured quantities it was decided on. `acceptance --criterion 3` runs one
// criterion; no argument runs all of them in order.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "iiks/adjudication.hpp"
#include "iiks/asymptotics.hpp"
#include "iiks/kuznetsov.hpp"

using namespace iiks;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
};

int g_threads = 1;

void note(const char* fmt, auto... args) {
    std::printf("    ");
    std::printf(fmt, args...);
    std::printf("\n");
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

std::vector<WeightFamily> desk_families() {
    return {WeightFamily::meixner(0.5, 1.0), WeightFamily::charlier(1.0), WeightFamily::charlier(4.0),
            WeightFamily::krawtchouk(60, 0.4)};
}

std::string label(const WeightFamily& f) {
    switch (f.tag) {
        case Family::Meixner: return fmt("meixner(xi=%g)", f.xi);
        case Family::Charlier: return fmt("charlier(theta=%g)", f.theta);
        default: return fmt("krawtchouk(M=%d,p=%g)", f.M, f.p);
    }
}

// 1. Orthonormality of phi_0..phi_30.
Outcome orthonormality() {
    double worst = 0.0;
    for (const auto& f : desk_families()) {
        const TruncatedLattice lat = truncate(f);
        const int n = 31;
        const PhiTable t(f, n, lat);
        Eigen::MatrixXd P(n, lat.x_max + 1);
        for (int k = 0; k < n; ++k)
            for (long x = 0; x <= lat.x_max; ++x) P(k, x) = t(k, x);
        const double g = max_abs(P * P.transpose() - Eigen::MatrixXd::Identity(n, n));
        note("%-26s sites %5ld  max|Gram - I| = %.3e", label(f).c_str(), lat.x_max + 1, g);
        worst = std::max(worst, g);
    }
    return {worst < 1e-9, fmt("max |Gram - I| = %.3e (tol 1e-9)", worst)};
}

// 2. Epsilon and D identities.
Outcome operator_identities() {
    bool ok = true;
    for (const auto& f : desk_families()) {
        const TruncatedLattice lat = truncate(f);
        const PhiTable t(f, 21, lat);
        const auto lw = lattice_log_weights(f, lat);
        const LatticeOperator Ef = build_epsilon_factored(lw), Ed = build_epsilon_direct(f, lat), D = build_d(lw);
        const long half = lat.x_max / 2 + 1;
        const double df = max_abs(Ed.m.topLeftCorner(half, half) - Ef.m.topLeftCorner(half, half));
        const double anti = std::max(max_abs(Ef.m + Ef.m.transpose()), max_abs(Ed.m + Ed.m.transpose()));
        const InverseCheck c = check_mutual_inverse(D.m, Ef.m, t, 21);
        const bool fam = df < 1e-12 && anti < 1e-10 && c.d_eps < 1e-8 && c.eps_d < 1e-8;
        note("%-26s direct-factored %.2e  antisym %.2e  |D eps phi - phi| %.2e  |eps D phi - phi| %.2e  (x <= %ld) %s",
             label(f).c_str(), df, anti, c.d_eps, c.eps_d, c.window, fam ? "ok" : "FAIL");
        ok = ok && fam;
    }
    return {ok, ok ? "all identities within tolerance" : "at least one identity outside tolerance (see rows)"};
}

// 3. Contour projection vs direct sum, and idempotence.
Outcome projection_formulas() {
    double worst_rel = 0.0, worst_idem = 0.0;
    for (const auto& f : {WeightFamily::meixner(0.5, 1.0), WeightFamily::charlier(4.0), WeightFamily::krawtchouk(60, 0.4)})
        for (int N : {4, 8, 12}) {
            const Window w = support_window(f, N);
            const int rank = f.rank(N);
            const PhiTable t(f, rank, truncate(f));
            const Eigen::MatrixXd Kd = projection_direct(t, rank, w, w);
            double qerr = 0.0;
            const Eigen::MatrixXd Kc = projection_contour(f, N, w, &qerr, g_threads);
            const double rel = max_abs(Kc - Kd) / max_abs(Kd);
            const double idem = max_abs(Kc * Kc - Kc);
            note("%-26s N=%2d window [0,%ld]  rel %.3e  |K^2 - K| %.3e  quadrature %.1e", label(f).c_str(), N, w.hi, rel,
                 idem, qerr);
            worst_rel = std::max(worst_rel, rel);
            worst_idem = std::max(worst_idem, idem);
        }
    return {worst_rel < 1e-8 && worst_idem < 1e-9,
            fmt("max rel %.3e (tol 1e-8), max |K^2 - K| %.3e (tol 1e-9)", worst_rel, worst_idem)};
}

// 4. Nesting adjudication: a unique matching convention, or exit 3 with a
// structured report.
Outcome adjudication() {
    bool ok = true;
    int exits3 = 0;
    for (const auto& f : {WeightFamily::meixner(0.5, 1.0), WeightFamily::charlier(1.0), WeightFamily::krawtchouk(60, 0.4)}) {
        const AdjudicationReport r = adjudicate(f, 6);
        note("%-26s N=6 window [%ld,%ld] exit %d: %s", label(f).c_str(), r.window.lo, r.window.hi, r.exit_code,
             r.summary.c_str());
        bool structured = !r.candidates.empty() && std::isfinite(r.constant_symbol_rel);
        for (const auto& c : r.candidates) {
            std::string coef;
            for (std::size_t k = 0; k < c.compose_decomposition.coef.size(); ++k) coef += fmt(" %s=%.3g", c.compose_decomposition.basis[k].c_str(), c.compose_decomposition.coef[k]);
            note("  %-44s K %.2e  K-I %.2e  compose %.2e  s4 %.2e/%.2e/%.2e  s1 %.2e/%.2e/%.2e  unexplained %.2e%s",
                 c.name.c_str(), c.rel_projection, c.rel_projection_delta, c.rel_compose, c.rel_s4_S, c.rel_s4_SD,
                 c.rel_s4_epsS, c.rel_s1_S, c.rel_s1_SD, c.rel_s1_epsS, c.compose_decomposition.unexplained,
                 coef.c_str());
            structured = structured && std::isfinite(c.rel_compose) && std::isfinite(c.compose_decomposition.unexplained);
        }
        if (r.exit_code == 3) ++exits3;
        ok = ok && (r.exit_code == 0 || (r.exit_code == 3 && structured));
    }
    return {ok, exits3 ? fmt("no unique convention for %d families; exit 3 with structured discrepancy report", exits3)
                       : std::string("a unique convention reproduces every oracle block")};
}

// 5. Closed forms of the saddle analysis.
Outcome closed_forms() {
    bool ok = true;
    auto check = [&](bool c, const std::string& what) {
        note("%-62s %s", what.c_str(), c ? "ok" : "FAIL");
        ok = ok && c;
    };
    const auto ch = AsymParams::charlier(1.0), mx = AsymParams::meixner(0.5), kr = AsymParams::krawtchouk(0.5, 0.4);
    double res = 0.0;
    for (const auto& a : {ch, mx, kr}) {
        const auto [lo, hi] = bulk_support(a);
        for (double u : linspace(lo, hi, 41)) {
            const BulkPoint b = saddle_solve(a, u);
            if (b.kind == PointKind::Bulk) res = std::max(res, b.residual);
        }
    }
    check(res < 1e-12, fmt("saddle quadratic residual %.2e (tol 1e-12)", res));
    const double c1 = cos_theta(ch, 2.0), c2 = cos_theta(mx, 1.0);
    check(std::abs(c1) < 1e-15, fmt("cos theta, charlier tau=1 u=2: %.17g (expect 0)", c1));
    check(std::abs(c2 - 0.5) < 1e-15, fmt("cos theta, meixner s=1/2 u=1: %.17g (expect 1/2)", c2));
    const auto sm = bulk_support(mx), sc = bulk_support(ch);
    check(std::abs(sm.first - 1.0 / 3.0) < 1e-15 && std::abs(sm.second - 3.0) < 1e-15,
          fmt("support meixner s=1/2: (%.17g, %.17g)", sm.first, sm.second));
    check(std::abs(sc.first) < 1e-15 && std::abs(sc.second - 4.0) < 1e-15,
          fmt("support charlier tau=1: (%.17g, %.17g)", sc.first, sc.second));
    double spacing = 0.0;
    for (const auto& a : {ch, mx, kr}) {
        const auto [lo, hi] = bulk_support(a);
        for (double u : linspace(lo, hi, 23)) {
            const Spacing s = density_and_spacing(a, u, 256);
            if (!s.edge) spacing = std::max(spacing, std::abs(2.0 * kPi * s.delta_rule * s.rho - 1.0));
        }
    }
    check(spacing < 1e-14, fmt("|2 pi Delta rho - 1| = %.2e", spacing));
    for (const auto& a : {ch, mx, kr}) {
        double e = 0.0;
        const double v = integrate_rho(a, &e);
        check(std::abs(v - 1.0) < 1e-6, fmt("integral of rho, %s: %.12f", a.name().c_str(), v));
    }
    for (const auto& a : {ch, mx, kr}) {
        const EdgeExponent ex = edge_exponent(a);
        check(std::abs(ex.lower - 0.5) < 0.05 && std::abs(ex.upper - 0.5) < 0.05,
              fmt("edge exponent of rho, %s: lower %.4f upper %.4f (expect 0.5)", a.name().c_str(), ex.lower, ex.upper));
    }
    return {ok, ok ? "all closed forms verified" : "at least one closed-form check failed (see rows)"};
}

// 6. Bulk universality.
Outcome bulk() {
    bool ok = true;
    for (const auto& [a, u] : {std::pair{AsymParams::charlier(1.0), 2.0}, {AsymParams::krawtchouk(0.5, 0.5), 0.5}})
        for (int beta : {1, 4}) {
            BulkOptions o;
            o.par = a;
            o.beta = beta;
            o.u = u;
            o.threads = g_threads;
            const BulkReport r = bulk_convergence_test(o);
            for (const auto& row : r.rows)
                note("%-10s beta=%d u=%.2f A=%4d  sup err %.3e  c_fit %.4f%s  rank-one %.3e", a.name().c_str(), beta, u,
                     row.A, row.err, row.c_fit, row.degenerate ? " (degenerate)" : "", row.rank_one_sup);
            const bool in = r.slope >= -1.4 && r.slope <= -0.6;
            note("%-10s beta=%d slope %.3f %s", a.name().c_str(), beta, r.slope, in ? "ok" : "FAIL");
            ok = ok && in;
        }
    return {ok, ok ? "all slopes in [-1.4, -0.6]" : "slope outside [-1.4, -0.6] for at least one case"};
}

// 7. Shape of the first correction at theta = pi/2.
Outcome correction() {
    CorrectionOptions o;
    o.par = AsymParams::charlier(1.0);
    o.beta = 4;
    o.u = 2.0;
    o.threads = g_threads;
    const CorrectionReport r = correction_extract(o);
    for (const auto& row : r.rows)
        note("A=%4d  max|R_A| %.3e  fit alpha %.4g beta %.4g residual %.3f", row.A, row.r_norm, row.fit.alpha,
             row.fit.beta, row.fit.residual);
    note("dictionary Q0 %.3g  Qa %.3g%+.3gi  (closed %.3g%+.3gi)", r.dict.Q0.real(), r.dict.Qa.real(), r.dict.Qa.imag(),
         r.dict_closed.Qa.real(), r.dict_closed.Qa.imag());
    note("growth of max|R_A| in A: %.3f", r.r_growth);
    const bool res = r.richardson.residual < 0.15;
    const bool alpha = std::abs(r.alpha_hat) < 3.0 * r.alpha_noise;
    return {res && alpha, fmt("two-basis residual %.3f (tol 0.15), alpha %.3g vs 3 x noise %.3g", r.richardson.residual,
                              r.alpha_hat, 3.0 * r.alpha_noise)};
}

// 8. Soft edge.
Outcome edge() {
    bool ok = true;
    for (int beta : {4, 1}) {
        EdgeOptions o;
        o.par = AsymParams::charlier(1.0);
        o.beta = beta;
        o.threads = g_threads;
        const EdgeReport r = edge_convergence_test(o);
        for (const auto& row : r.rows)
            note("beta=%d A=%4d  c_fit %.4f  residual %.3e%s  rank-one %.3e", beta, row.A, row.c_fit, row.residual,
                 row.degenerate ? " (degenerate)" : "", row.rank_one_sup);
        note("beta=%d residual monotone %s%s", beta, r.monotone ? "yes" : "no",
             beta == 1 ? (r.rank_one_monotone ? ", rank-one decreasing" : ", rank-one not decreasing") : "");
        ok = ok && r.monotone && (beta != 1 || r.rank_one_monotone);
    }
    return {ok, ok ? "edge residual decreases and the rank-one term vanishes"
                   : "edge residual or rank-one term does not decrease (see rows)"};
}

// 9. Meixner to Laguerre crossover.
Outcome crossover() {
    bool ok = true;
    for (int beta : {4, 1})
        for (double alpha : {0.5, 1.0, 2.0}) {
            CrossoverOptions o;
            o.alpha = alpha;
            o.beta = beta;
            o.threads = g_threads;
            const CrossoverReport r = crossover_test(o);
            for (const auto& row : r.rows)
                note("beta=%d alpha=%.1f N=%4d  c_h %.3g  c_fit %.3g  residual %.3e  alpha_hat %.2f  K(0,0) %.4f", beta,
                     alpha, row.N, row.c_h, row.c_fit, row.residual, row.alpha_hat, row.k00);
            note("beta=%d alpha=%.1f decreasing %s, alpha recovered %s", beta, alpha, r.decreasing ? "yes" : "no",
                 r.alpha_recovered ? "yes" : "no");
            ok = ok && r.decreasing && r.alpha_recovered;
        }
    return {ok, ok ? "residual decreases and alpha is recovered" : "no Bessel convergence (see rows)"};
}

// 10. Kuznetsov splicing.
Outcome kuznetsov() {
    bool ok = true;
    auto item = [&](bool c, const std::string& what) {
        note("%-88s %s", what.c_str(), c ? "ok" : "FAIL");
        ok = ok && c;
    };
    double sector = 0.0;
    for (double sigma : {1.0, 2.0}) sector = std::max(sector, compare_on_sector(sigma, sector_grid()).max_rel);
    item(sector < 1e-8, fmt("m_h numeric vs closed form on the sector grid: %.2e (tol 1e-8)", sector));
    const auto g1 = SpectralTest::gaussian(1.0);
    const RealityReport rr = reality_symmetry_check(g1);
    item(rr.max_imag_unit_circle < 1e-10,
         fmt("unit-circle reality max|Im m_h|: %.2e (tol 1e-10), conjugation %.2e", rr.max_imag_unit_circle,
             rr.conjugation_error));

    const WeightFamily f = WeightFamily::charlier(1.0);
    const int N = 6;
    const Window w = default_window(f, N);
    const auto g2 = SpectralTest::gaussian(2.0);
    const SplicedOracle so(f, N, g2, 0.0, g_threads);
    const AdjudicationReport adj = adjudicate(f, N);
    for (const auto& p : nesting_candidates(f)) {
        const KernelBlockSet c4 = spliced_s4(f, N, g2, w, p), o4 = so.block(4, w);
        const KernelBlockSet c1 = spliced_s1(f, N, g2, w, p), o1 = so.block(1, w);
        note("  sigma=2 %-28s s4 %.2e/%.2e/%.2e  s1 %.2e/%.2e/%.2e  branch jump %s", p.label.c_str(),
             rel_error(c4.S, o4.S), rel_error(c4.SD, o4.SD), rel_error(c4.epsS, o4.epsS), rel_error(c1.S, o1.S),
             rel_error(c1.SD, o1.SD), rel_error(c1.epsS, o1.epsS), c4.metadata.at("branch_jump").c_str());
    }
    if (adj.winner >= 0) {
        const ContourPair p = adj.candidates[adj.winner].pair;
        const KernelBlockSet c4 = spliced_s4(f, N, g2, w, p), o4 = so.block(4, w);
        const KernelBlockSet c1 = spliced_s1(f, N, g2, w, p), o1 = so.block(1, w);
        const double e = std::max({rel_error(c4.S, o4.S), rel_error(c4.SD, o4.SD), rel_error(c4.epsS, o4.epsS),
                                   rel_error(c1.S, o1.S), rel_error(c1.SD, o1.SD), rel_error(c1.epsS, o1.epsS)});
        item(e < 1e-6, fmt("spliced contour blocks vs spliced oracle under %s: %.2e (tol 1e-6)", p.label.c_str(), e));
    } else {
        item(false, "spliced contour blocks vs spliced oracle: no adjudicated nesting (criterion 4 exits 3)");
    }

    {
        const auto gs = SpectralTest::gaussian(1e6);
        const double q = std::sqrt(kPi / 1e6);
        const SplicedOracle s(f, N, gs, 0.0, g_threads);
        const SplicedOracle unit(f, N, [](cplx) { return cplx(1.0); }, 0.0, g_threads);
        const LatticeOracle O(f, N);
        const double literal = rel_error(s.block(4, w).S, q * O.block(4, w).S);
        const double same = rel_error(s.block(4, w).S, q * unit.block(4, w).S);
        note("  sigma=1e6 spliced oracle vs sqrt(pi/sigma) unit-symbol oracle: %.2e", same);
        item(literal < 1e-4,
             fmt("sigma=1e6 constant limit, spliced K eps K vs sqrt(pi/sigma) K eps K: %.2e (tol 1e-4)", literal));
    }

    const SplicedModel sm(g2, 1.0, 64, g_threads);
    const SplicedEdgeReport er = spliced_edge_ratio(sm);
    note("  edge A=64: fitted ratio %.4f (fit residual %.2e), lattice ratio %.4f, M'/eps' contour %.4f, worked %.4f, "
         "m_h(1) %.4f",
         er.ratio_fit, er.ratio_fit_rel_residual, er.ratio_lattice, er.predicted_contour, er.predicted_worked,
         er.predicted_limit);
    item(er.within, fmt("edge diagonal-derivative ratio vs M'(w*)/eps'(w*): rel %.3f (tol 0.1)", er.rel_error));
    return {ok, ok ? "all items within tolerance" : "at least one item outside tolerance (see rows)"};
}

// 11. Gap probabilities.
Outcome gaps() {
    const GapReport g = gap_compare(AsymParams::charlier(1.0), 256, 2.0);
    for (const auto& r : g.rows)
        note("sites %2d  s %.4f  discrete %.8f  sine %.8f  rel %.3e", r.sites, r.s_eff, r.discrete, r.sine, r.rel_diff);
    const GapResult z = fredholm_det([](double, double) { return 0.0; }, 0.0, 1.0);
    const double dz = discrete_gap(Eigen::MatrixXd::Zero(5, 5));
    note("trivial kernel: Nystrom det %.17g, discrete det %.17g", z.value, dz);
    const bool ok = g.max_rel_diff < 0.02 && z.value == 1.0 && dz == 1.0;
    return {ok, fmt("max rel diff %.3e (tol 0.02), trivial det %s", g.max_rel_diff,
                    z.value == 1.0 && dz == 1.0 ? "exactly 1" : "not 1")};
}

struct Criterion {
    int id;
    const char* name;
    double budget;  // seconds
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> which;
    app.add_option("--criterion,-c", which, "criterion numbers (default: all)")->check(CLI::Range(1, 11));
    app.add_option("--threads", g_threads, "worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all = {
        {1, "orthonormality", 10, orthonormality},
        {2, "operator identities", 30, operator_identities},
        {3, "projection formulas", 180, projection_formulas},
        {4, "nesting adjudication", 600, adjudication},
        {5, "closed forms", 60, closed_forms},
        {6, "bulk universality", 1200, bulk},
        {7, "correction shape", 1200, correction},
        {8, "soft edge", 1200, edge},
        {9, "crossover", 1200, crossover},
        {10, "kuznetsov splicing", 900, kuznetsov},
        {11, "gap probabilities", 300, gaps},
    };
    if (which.empty())
        for (const auto& c : all) which.push_back(c.id);
    int failed = 0;
    for (int id : which) {
        const Criterion& c = all[id - 1];
        std::printf("[%d] %s\n", c.id, c.name);
        std::fflush(stdout);
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = dt < c.budget;
        const bool pass = o.pass && in_time;
        std::printf("%s %d %s: %s; %.1f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.summary.c_str(),
                    dt, c.budget, in_time ? "" : ", exceeded");
        std::fflush(stdout);
        if (!pass) ++failed;
    }
    return failed ? 1 : 0;
}
