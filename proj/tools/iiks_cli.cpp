// Command-line driver: kernel windows, the invariant suite, asymptotic
// harnesses and Kuznetsov splicing. Matrices and tables go to CSV (17
// significant digits), reports and run metadata to JSON.
//
// Exit codes: 0 ok, 1 usage, 2 numerical failure, 3 adjudicated mismatch.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "iiks/adjudication.hpp"
#include "iiks/asymptotics.hpp"
#include "iiks/kuznetsov.hpp"
#include "iiks/version.hpp"

using namespace iiks;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kUsage = 1, kNumerical = 2, kMismatch = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------ config

struct FamilyArgs {
    std::string family = "charlier";
    double xi = 0.5, beta_m = 1.0, theta = 1.0, p = 0.4;
    int M = 60;

    void add(CLI::App* app) {
        app->add_option("--family", family, "meixner | charlier | krawtchouk")
            ->check(CLI::IsMember({"meixner", "charlier", "krawtchouk"}))
            ->capture_default_str();
        app->add_option("--xi", xi, "Meixner ratio")->capture_default_str();
        app->add_option("--beta-m", beta_m, "Meixner shape")->capture_default_str();
        app->add_option("--theta", theta, "Charlier parameter")->capture_default_str();
        app->add_option("--M", M, "Krawtchouk support size")->capture_default_str();
        app->add_option("--p", p, "Krawtchouk probability")->capture_default_str();
    }
    WeightFamily make() const {
        if (family == "meixner") return WeightFamily::meixner(xi, beta_m);
        if (family == "charlier") return WeightFamily::charlier(theta);
        return WeightFamily::krawtchouk(M, p);
    }
};

struct AsymArgs {
    std::string family = "charlier";
    double s = 0.5, tau = 1.0, gamma = 0.5, p = 0.5, beta_m = 1.0;

    void add(CLI::App* app) {
        app->add_option("--family", family, "meixner | charlier | krawtchouk")
            ->check(CLI::IsMember({"meixner", "charlier", "krawtchouk"}))
            ->capture_default_str();
        app->add_option("--s", s, "Meixner s = sqrt(xi)")->capture_default_str();
        app->add_option("--tau", tau, "Charlier theta / N")->capture_default_str();
        app->add_option("--gamma", gamma, "Krawtchouk N / M")->capture_default_str();
        app->add_option("--p", p, "Krawtchouk probability")->capture_default_str();
        app->add_option("--beta-m", beta_m, "Meixner shape")->capture_default_str();
    }
    AsymParams make() const {
        if (family == "meixner") return AsymParams::meixner(s, beta_m);
        if (family == "charlier") return AsymParams::charlier(tau);
        return AsymParams::krawtchouk(gamma, p);
    }
};

Window parse_window(const std::string& s) {
    const auto c = s.find(':');
    if (c == std::string::npos) throw UsageError("window must be lo:hi, got " + s);
    Window w;
    try {
        w.lo = std::stol(s.substr(0, c));
        w.hi = std::stol(s.substr(c + 1));
    } catch (const std::exception&) {
        throw UsageError("window must be lo:hi, got " + s);
    }
    if (w.lo < 0 || w.hi < w.lo) throw UsageError("window needs 0 <= lo <= hi, got " + s);
    return w;
}

ContourPair parse_pair(const WeightFamily& f, const std::string& name) {
    if (name == "printed") return printed_pair(f);
    if (name == "swapped") return swapped(printed_pair(f));
    if (f.tag == Family::Meixner && name == "outer") return meixner_outer_band(f);
    if (f.tag == Family::Meixner && name == "outer-swapped") return swapped(meixner_outer_band(f));
    throw UsageError("unknown contour pair '" + name + "' for " + f.name());
}

// ------------------------------------------------------------------ output

struct Output {
    fs::path dir;
    std::string stem;
    json meta;

    fs::path path(const std::string& ext) const { return dir / (stem + ext); }
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const fs::path& p, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::ofstream o(p);
    if (!o) throw std::runtime_error("cannot write " + p.string());
    for (std::size_t i = 0; i < header.size(); ++i) o << (i ? "," : "") << header[i];
    o << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << num(r[i]);
        o << "\n";
    }
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream o(p);
    if (!o) throw std::runtime_error("cannot write " + p.string());
    o << j.dump(2) << "\n";
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

// Finite doubles only; JSON has no inf or nan.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ----------------------------------------------------------------- kernel

struct KernelCmd {
    FamilyArgs fam;
    int beta = 4, N = 8;
    std::string window, pair = "printed";
    bool oracle = false;
    double tol = 1e-6;
};

int cmd_kernel(const KernelCmd& c, Output& out, int threads) {
    const WeightFamily f = c.fam.make();
    if (c.beta != 1 && c.beta != 2 && c.beta != 4) throw UsageError("--beta must be 1, 2 or 4");
    if (c.N < 1) throw UsageError("--N must be positive");
    const Window w = c.window.empty() ? default_window(f, c.N) : parse_window(c.window);
    const LatticeOracle O(f, c.N);
    KernelBlockSet blocks;
    if (c.beta == 2) {
        blocks.S = c.oracle ? O.K(w) : projection_contour(f, c.N, w, nullptr, threads);
        blocks.provenance = c.oracle ? "oracle" : "contour";
    } else if (c.oracle) {
        blocks = O.block(c.beta, w);
    } else {
        const ContourPair p = parse_pair(f, c.pair);
        blocks = c.beta == 4 ? s4_block(f, c.N, w, p) : s1_block(f, c.N, w, p);
    }
    std::vector<std::vector<double>> rows;
    for (long i = 0; i < w.size(); ++i)
        for (long j = 0; j < w.size(); ++j) {
            if (c.beta == 2)
                rows.push_back({double(w.lo + i), double(w.lo + j), blocks.S(i, j)});
            else
                rows.push_back({double(w.lo + i), double(w.lo + j), blocks.S(i, j), blocks.SD(i, j), blocks.epsS(i, j)});
        }
    if (c.beta == 2)
        write_csv(out.path(".csv"), {"x", "y", "K"}, rows);
    else
        write_csv(out.path(".csv"), {"x", "y", "S", "SD", "epsS"}, rows);
    out.meta["provenance"] = blocks.provenance;
    out.meta["window"] = {w.lo, w.hi};
    for (const auto& [k, v] : blocks.metadata) out.meta["blocks"][k] = v;
    if (c.oracle) return kOk;
    // contour output is always compared with the oracle
    double rel = 0.0;
    if (c.beta == 2) {
        rel = rel_error(blocks.S, O.K(w));
    } else {
        const KernelBlockSet o = O.block(c.beta, w);
        rel = std::max({rel_error(blocks.S, o.S), rel_error(blocks.SD, o.SD), rel_error(blocks.epsS, o.epsS)});
    }
    out.meta["oracle_rel_error"] = number(rel);
    out.meta["oracle_tolerance"] = c.tol;
    if (rel < c.tol) return kOk;
    out.meta["mismatch"] = "contour blocks differ from the lattice oracle; run validate for the adjudication report";
    return kMismatch;
}

// --------------------------------------------------------------- validate

struct ValidateCmd {
    int N = 8;
    std::string nesting;  // claimed convention (pair label); empty: adjudicate
    double tol = 1e-6;
};

int cmd_validate(const ValidateCmd& c, Output& out, int threads) {
    json inv = json::array();
    bool numeric_ok = true;
    auto record = [&](const std::string& name, const std::string& family, double value, double tol) {
        const bool pass = value < tol;
        inv.push_back({{"invariant", name}, {"family", family}, {"residual", number(value)}, {"tolerance", tol},
                       {"pass", pass}});
        numeric_ok = numeric_ok && pass;
        std::printf("%-4s %-26s %-12s %.3e (tol %.0e)\n", pass ? "ok" : "FAIL", name.c_str(), family.c_str(), value, tol);
    };
    const std::vector<WeightFamily> fams = {WeightFamily::meixner(0.5, 1.0), WeightFamily::charlier(1.0),
                                            WeightFamily::krawtchouk(60, 0.4)};
    for (const auto& f : fams) {
        const TruncatedLattice lat = truncate(f);
        const PhiTable t(f, 31, lat);
        Eigen::MatrixXd P(31, lat.x_max + 1);
        for (int k = 0; k < 31; ++k)
            for (long x = 0; x <= lat.x_max; ++x) P(k, x) = t(k, x);
        record("orthonormality", f.name(), (P * P.transpose() - Eigen::MatrixXd::Identity(31, 31)).cwiseAbs().maxCoeff(),
               1e-9);
        const auto lw = lattice_log_weights(f, lat);
        const LatticeOperator Ef = build_epsilon_factored(lw), Ed = build_epsilon_direct(f, lat), D = build_d(lw);
        const long h = lat.x_max / 2 + 1;
        record("epsilon_factorization", f.name(),
               (Ed.m.topLeftCorner(h, h) - Ef.m.topLeftCorner(h, h)).cwiseAbs().maxCoeff(), 1e-12);
        record("epsilon_antisymmetry", f.name(), (Ef.m + Ef.m.transpose()).cwiseAbs().maxCoeff(), 1e-10);
        const InverseCheck ic = check_mutual_inverse(D.m, Ef.m, t, 21);
        record("D_eps_identity", f.name(), ic.d_eps, 1e-8);
        record("eps_D_identity", f.name(), ic.eps_d, 1e-8);
        const Window w = support_window(f, c.N);
        const int rank = f.rank(c.N);
        const PhiTable tk(f, rank, lat);
        const Eigen::MatrixXd Kd = projection_direct(tk, rank, w, w);
        const Eigen::MatrixXd Kc = projection_contour(f, c.N, w, nullptr, threads);
        record("contour_vs_oracle", f.name(), (Kc - Kd).cwiseAbs().maxCoeff() / Kd.cwiseAbs().maxCoeff(), 1e-8);
        record("idempotence", f.name(), (Kc * Kc - Kc).cwiseAbs().maxCoeff(), 1e-9);
    }
    json adj = json::array();
    bool mismatch = false;
    for (const auto& f : fams) {
        const AdjudicationReport r = adjudicate(f, 6, {}, c.tol);
        json j = {{"family", r.family},
                  {"N", r.N},
                  {"window", {r.window.lo, r.window.hi}},
                  {"exit_code", r.exit_code},
                  {"summary", r.summary},
                  {"constant_symbol_rel", number(r.constant_symbol_rel)}};
        for (const auto& cand : r.candidates) {
            json d = json::object();
            for (std::size_t k = 0; k < cand.compose_decomposition.coef.size(); ++k)
                d[cand.compose_decomposition.basis[k]] = number(cand.compose_decomposition.coef[k]);
            j["candidates"].push_back({{"name", cand.name},
                                       {"pair", cand.pair.label},
                                       {"nesting", to_string(cand.pair.nesting())},
                                       {"rel_projection", number(cand.rel_projection)},
                                       {"rel_projection_minus_identity", number(cand.rel_projection_delta)},
                                       {"rel_compose", number(cand.rel_compose)},
                                       {"rel_s4", {number(cand.rel_s4_S), number(cand.rel_s4_SD), number(cand.rel_s4_epsS)}},
                                       {"rel_s1", {number(cand.rel_s1_S), number(cand.rel_s1_SD), number(cand.rel_s1_epsS)}},
                                       {"residual_decomposition", d},
                                       {"unexplained", number(cand.compose_decomposition.unexplained)},
                                       {"matches", cand.matches}});
        }
        if (!c.nesting.empty()) {
            // a claimed convention: name it as the loser when it does not reproduce the oracle
            bool found = false, wins = false;
            for (const auto& cand : r.candidates)
                if (cand.pair.label == c.nesting || cand.name == c.nesting) {
                    found = true;
                    wins = wins || cand.matches;
                    if (!cand.matches) j["losing_convention"].push_back(cand.name);
                }
            if (!found) throw UsageError("no convention named '" + c.nesting + "' for " + f.name());
            j["claimed_convention"] = c.nesting;
            j["claimed_convention_matches"] = wins;
            mismatch = mismatch || !wins;
        } else {
            mismatch = mismatch || r.exit_code != 0;
        }
        std::printf("adjudication %-10s exit %d: %s\n", r.family.c_str(), r.exit_code, r.summary.c_str());
        adj.push_back(j);
    }
    out.meta["invariants"] = inv;
    out.meta["adjudication"] = adj;
    write_json(out.path(".report.json"), {{"invariants", inv}, {"adjudication", adj}});
    if (!numeric_ok) return kNumerical;
    return mismatch ? kMismatch : kOk;
}

// ------------------------------------------------------------ asymptotics

std::vector<int> parse_list(const std::string& s) {
    std::vector<int> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            v.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw UsageError("expected a comma-separated integer list, got " + s);
        }
    }
    if (v.empty()) throw UsageError("empty list");
    return v;
}

struct AsymCmd {
    AsymArgs par;
    int grid = 200, beta = 4;
    double u = 2.0, alpha = 1.0, max_length = 1.0;
    std::string A = "32,64,128", N = "32,64,128";
    bool subtract_rank_one = false, lower = false;
};

int asym_density(const AsymCmd& c, Output& out) {
    const AsymParams a = c.par.make();
    const auto [lo, hi] = bulk_support(a);
    std::vector<std::vector<double>> rows;
    for (int i = 1; i <= c.grid; ++i) {
        const double u = lo + (hi - lo) * i / (c.grid + 1.0);
        const BulkPoint b = saddle_solve(a, u);
        rows.push_back({u, b.cos_theta, b.rho, b.delta});
    }
    write_csv(out.path(".csv"), {"u", "cos_theta", "rho", "delta"}, rows);
    double e = 0.0;
    const double integral = integrate_rho(a, &e);
    const EdgeExponent ex = edge_exponent(a);
    out.meta["support"] = {lo, hi};
    out.meta["integral_rho"] = integral;
    out.meta["edge_exponent"] = {ex.lower, ex.upper};
    return kOk;
}

int asym_bulk(const AsymCmd& c, Output& out, int threads) {
    BulkOptions o;
    o.par = c.par.make();
    o.beta = c.beta;
    o.u = c.u;
    o.A = parse_list(c.A);
    o.threads = threads;
    const BulkReport r = bulk_convergence_test(o);
    json rows = json::array();
    for (const auto& w : r.rows)
        rows.push_back({{"A", w.A},
                        {"x0", w.x0},
                        {"rho_lattice", w.rho_lattice},
                        {"rho_closed", w.rho_closed},
                        {"c_fit", w.c_fit},
                        {"sup_error", number(w.err)},
                        {"sup_error_unfitted", number(w.err_unfitted)},
                        {"diag_error", number(w.diag_err)},
                        {"sup_error_literal", number(w.err_literal)},
                        {"c_fit_literal", w.c_fit_literal},
                        {"degenerate", w.degenerate},
                        {"rank_one_sup", w.rank_one_sup}});
    out.meta["rows"] = rows;
    out.meta["slope"] = number(r.slope);
    out.meta["slope_unfitted"] = number(r.slope_unfitted);
    out.meta["slope_literal"] = number(r.slope_literal);
    out.meta["slope_rank_one"] = number(r.slope_rank_one);
    out.meta["saddle"] = {{"z_plus", complex_json(r.point.z_plus)}, {"theta", r.point.theta}, {"rho", r.point.rho}};
    return kOk;
}

int asym_correction(const AsymCmd& c, Output& out, int threads) {
    CorrectionOptions o;
    o.par = c.par.make();
    o.beta = c.beta;
    o.u = c.u;
    o.A = parse_list(c.A);
    o.subtract_rank_one = c.subtract_rank_one;
    o.threads = threads;
    const CorrectionReport r = correction_extract(o);
    json rows = json::array();
    for (const auto& w : r.rows)
        rows.push_back({{"A", w.A},
                        {"r_norm", w.r_norm},
                        {"alpha", w.fit.alpha},
                        {"beta", w.fit.beta},
                        {"residual", w.fit.residual}});
    out.meta["rows"] = rows;
    out.meta["alpha_hat"] = r.alpha_hat;
    out.meta["beta_hat"] = r.beta_hat;
    out.meta["alpha_noise"] = r.alpha_noise;
    out.meta["residual"] = r.richardson.residual;
    out.meta["condition"] = r.richardson.cond;
    out.meta["r_growth"] = number(r.r_growth);
    out.meta["dictionary"] = {{"Q0", complex_json(r.dict.Q0)},
                              {"Qa", complex_json(r.dict.Qa)},
                              {"Qb", complex_json(r.dict.Qb)},
                              {"Qa_closed", complex_json(r.dict_closed.Qa)}};
    return kOk;
}

int asym_edge(const AsymCmd& c, Output& out, int threads) {
    EdgeOptions o;
    o.par = c.par.make();
    o.beta = c.beta;
    o.upper = !c.lower;
    o.A = parse_list(c.A == "32,64,128" ? "64,128,256" : c.A);
    o.threads = threads;
    const EdgeReport r = edge_convergence_test(o);
    json rows = json::array();
    for (const auto& w : r.rows)
        rows.push_back({{"A", w.A},
                        {"c_scale", w.c_scale},
                        {"c_fit", w.c_fit},
                        {"residual", number(w.residual)},
                        {"residual_unfitted", number(w.residual_unfitted)},
                        {"degenerate", w.degenerate},
                        {"rank_one_sup", w.rank_one_sup}});
    out.meta["rows"] = rows;
    out.meta["monotone"] = r.monotone;
    out.meta["rank_one_monotone"] = r.rank_one_monotone;
    out.meta["constants"] = {{"u_star", r.constants.u_star},
                             {"kappa", r.constants.kappa},
                             {"lambda", r.constants.lambda},
                             {"c_literal", r.constants.c_literal},
                             {"c_cubic", r.constants.c_cubic},
                             {"c_density", r.constants.c_density}};
    return kOk;
}

int asym_crossover(const AsymCmd& c, Output& out, int threads) {
    CrossoverOptions o;
    o.alpha = c.alpha;
    o.beta = c.beta;
    o.N = parse_list(c.N);
    o.threads = threads;
    const CrossoverReport r = crossover_test(o);
    json rows = json::array();
    for (const auto& w : r.rows)
        rows.push_back({{"N", w.N},
                        {"xi", w.xi},
                        {"c_h", w.c_h},
                        {"c_fit", w.c_fit},
                        {"residual", number(w.residual)},
                        {"alpha_hat", w.alpha_hat},
                        {"k00", w.k00}});
    out.meta["rows"] = rows;
    out.meta["decreasing"] = r.decreasing;
    out.meta["alpha_recovered"] = r.alpha_recovered;
    return kOk;
}

int asym_gap(const AsymCmd& c, Output& out) {
    const std::vector<int> A = parse_list(c.A == "32,64,128" ? "256" : c.A);
    const GapReport g = gap_compare(c.par.make(), A.front(), c.u, c.max_length);
    std::vector<std::vector<double>> rows;
    for (const auto& r : g.rows) rows.push_back({double(r.sites), r.s_eff, r.discrete, r.sine, r.rel_diff});
    write_csv(out.path(".csv"), {"sites", "s", "discrete", "sine", "rel_diff"}, rows);
    out.meta["rho_lattice"] = g.rho_lattice;
    out.meta["max_rel_diff"] = g.max_rel_diff;
    out.meta["discrete_monotone"] = g.discrete_monotone;
    return kOk;
}

// ----------------------------------------------------------------- splice

struct SpliceCmd {
    FamilyArgs fam;
    double sigma = 2.0;
    int N = 6, A = 64;
    std::string window, table;  // table: tabulated spectral test, two columns t,h
    double tau = 1.0;
};

SpectralTest spectral_test(const SpliceCmd& c) {
    if (c.table.empty()) return SpectralTest::gaussian(c.sigma);
    std::ifstream in(c.table);
    if (!in) throw UsageError("cannot read " + c.table);
    std::vector<double> t, h;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double a, b;
        if (ls >> a >> b) {
            t.push_back(a);
            h.push_back(b);
        }
    }
    return SpectralTest::tabulated(t, h);
}

int splice_kernel(const SpliceCmd& c, Output& out, int threads) {
    const WeightFamily f = c.fam.make();
    const Window w = c.window.empty() ? default_window(f, c.N) : parse_window(c.window);
    const SpectralTest test = spectral_test(c);
    const SplicedOracle so(f, c.N, test, 0.0, threads);
    const KernelBlockSet b4 = so.block(4, w), b1 = so.block(1, w);
    std::vector<std::vector<double>> rows;
    for (long i = 0; i < w.size(); ++i)
        for (long j = 0; j < w.size(); ++j)
            rows.push_back({double(w.lo + i), double(w.lo + j), b4.S(i, j), b4.SD(i, j), b4.epsS(i, j), b1.S(i, j)});
    write_csv(out.path(".csv"), {"x", "y", "S4", "S4D", "epsS4", "S1"}, rows);
    json cmp = json::array();
    for (const auto& p : nesting_candidates(f)) {
        const KernelBlockSet c4 = spliced_s4(f, c.N, test, w, p), c1 = spliced_s1(f, c.N, test, w, p);
        cmp.push_back({{"pair", p.label},
                       {"nesting", to_string(p.nesting())},
                       {"rel_s4", {number(rel_error(c4.S, b4.S)), number(rel_error(c4.SD, b4.SD)),
                                   number(rel_error(c4.epsS, b4.epsS))}},
                       {"rel_s1", {number(rel_error(c1.S, b1.S)), number(rel_error(c1.SD, b1.SD)),
                                   number(rel_error(c1.epsS, b1.epsS))}},
                       {"branch_jump", c4.metadata.at("branch_jump")}});
    }
    out.meta["provenance"] = "spliced oracle";
    out.meta["window"] = {w.lo, w.hi};
    out.meta["oracle_max_imag"] = so.max_imag();
    out.meta["contour_vs_oracle"] = cmp;
    if (test.kind == TestKind::Tabulated) {
        const DecayCertificate dc = test.certificate();
        out.meta["certificate"] = {{"rate", dc.rate}, {"required", dc.required}, {"ok", dc.ok}};
    }
    return kOk;
}

int splice_sector(const SpliceCmd& c, Output& out) {
    const SpectralTest test = spectral_test(c);
    std::vector<std::vector<double>> rows;
    for (int j = 0; j < 64; ++j) {
        const double a = -0.75 * kPi + 1.5 * kPi * j / 63.0;
        const cplx v = m_h(test, std::polar(1.0, a));
        rows.push_back({a, v.real(), v.imag()});
    }
    write_csv(out.path(".csv"), {"arg", "re_m", "im_m"}, rows);
    const RealityReport r = reality_symmetry_check(test);
    out.meta["max_imag_unit_circle"] = r.max_imag_unit_circle;
    out.meta["conjugation_error"] = r.conjugation_error;
    out.meta["real_axis_imag"] = r.real_axis_imag;
    if (test.kind == TestKind::Gaussian) out.meta["sector_max_rel"] = compare_on_sector(c.sigma, sector_grid()).max_rel;
    return kOk;
}

int splice_edge(const SpliceCmd& c, Output& out, int threads) {
    const SplicedModel sm(spectral_test(c), c.tau, c.A, threads);
    const SplicedEdgeReport r = spliced_edge_ratio(sm);
    out.meta["ratio_fit"] = r.ratio_fit;
    out.meta["ratio_fit_rel_residual"] = r.ratio_fit_rel_residual;
    out.meta["ratio_lattice"] = r.ratio_lattice;
    out.meta["predicted_contour"] = r.predicted_contour;
    out.meta["predicted_worked"] = r.predicted_worked;
    out.meta["predicted_limit"] = r.predicted_limit;
    out.meta["rel_error"] = r.rel_error;
    out.meta["within_tolerance"] = r.within;
    out.meta["tolerance"] = r.tolerance;
    out.meta["t_star"] = complex_json(r.t_star);
    out.meta["w_star"] = complex_json(r.w_star);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IIKS double-contour kernels of discrete orthogonal polynomial ensembles"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<CLI::ConfigINI>());
    app.set_config("--config", "", "key=value configuration file");
    int threads = 1;
    const char* env_out = std::getenv("IIKS_OUTPUT_DIR");
    std::string out_dir = env_out ? env_out : ".";
    std::string stem;
    app.add_option("--threads", threads, "cap on worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--out", out_dir, "output directory (default $IIKS_OUTPUT_DIR or .)");
    app.add_option("--name", stem, "file stem for outputs (default: the command)");

    KernelCmd kc;
    auto* kernel = app.add_subcommand("kernel", "kernel window as CSV with JSON metadata");
    kc.fam.add(kernel);
    kernel->add_option("--beta", kc.beta, "1, 2 (projection K_N) or 4")->capture_default_str();
    kernel->add_option("--N", kc.N)->capture_default_str();
    kernel->add_option("--window", kc.window, "lo:hi (default [0, 4N], or [0, M])");
    kernel->add_option("--pair", kc.pair, "contour pair: printed | swapped | outer | outer-swapped")->capture_default_str();
    kernel->add_flag("--oracle", kc.oracle, "emit the lattice oracle instead of the contour blocks");
    kernel->add_option("--tol", kc.tol, "oracle agreement tolerance")->capture_default_str();

    ValidateCmd vc;
    auto* validate = app.add_subcommand("validate", "invariant suite and nesting adjudication");
    validate->add_option("--N", vc.N, "N for the contour and idempotence checks")->capture_default_str();
    validate->add_option("--nesting", vc.nesting, "claim a convention (pair label) instead of adjudicating");
    validate->add_option("--tol", vc.tol, "adjudication tolerance")->capture_default_str();

    AsymCmd ac;
    auto* asym = app.add_subcommand("asym", "asymptotic harnesses");
    asym->require_subcommand(1);
    auto add_asym = [&](const char* name, const char* help) {
        auto* s = asym->add_subcommand(name, help);
        ac.par.add(s);
        return s;
    };
    auto* density = add_asym("density", "CSV of (u, cos theta, rho, Delta) over the support");
    density->add_option("--grid", ac.grid)->capture_default_str();
    auto* bulkc = add_asym("bulk", "bulk sine-kernel convergence");
    auto* corr = add_asym("correction", "two-basis fit of the first correction");
    auto* edgec = add_asym("edge", "soft-edge Airy convergence");
    auto* gapc = add_asym("gap", "Nystrom sine gap vs discrete gap");
    auto* cross = asym->add_subcommand("crossover", "Meixner hard edge vs the Bessel kernel");
    for (auto* s : {bulkc, corr, edgec}) {
        s->add_option("--beta", ac.beta, "1 or 4")->capture_default_str();
        s->add_option("--A", ac.A, "comma-separated large parameters")->capture_default_str();
    }
    for (auto* s : {bulkc, corr, gapc}) s->add_option("--u", ac.u, "bulk point")->capture_default_str();
    corr->add_flag("--subtract-rank-one", ac.subtract_rank_one);
    edgec->add_flag("--lower", ac.lower, "lower soft edge");
    gapc->add_option("--A", ac.A, "large parameter (default 256)");
    gapc->add_option("--max-length", ac.max_length)->capture_default_str();
    cross->add_option("--alpha", ac.alpha)->capture_default_str();
    cross->add_option("--beta", ac.beta, "1 or 4")->capture_default_str();
    cross->add_option("--N", ac.N, "comma-separated N")->capture_default_str();

    SpliceCmd sc;
    auto* splice = app.add_subcommand("splice", "Kuznetsov-multiplier splicing");
    splice->require_subcommand(1);
    auto add_splice = [&](const char* name, const char* help) {
        auto* s = splice->add_subcommand(name, help);
        s->add_option("--sigma", sc.sigma, "Gaussian test h(t) = exp(-sigma t^2)")->capture_default_str();
        s->add_option("--table", sc.table, "tabulated test: two columns t, h on a symmetric uniform grid");
        return s;
    };
    auto* skernel = add_splice("kernel", "spliced oracle window and contour comparison");
    sc.fam.add(skernel);
    skernel->add_option("--N", sc.N)->capture_default_str();
    skernel->add_option("--window", sc.window, "lo:hi");
    auto* ssector = add_splice("sector", "m_h on the unit circle and the reality check");
    auto* sedge = add_splice("edge", "edge diagonal-derivative ratio, Charlier");
    sedge->add_option("--tau", sc.tau)->capture_default_str();
    sedge->add_option("--A", sc.A)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    // the leaf subcommand names the run
    std::string command;
    const CLI::App* leaf = &app;
    while (!leaf->get_subcommands().empty()) {
        leaf = leaf->get_subcommands().front();
        command += (command.empty() ? "" : "-") + leaf->get_name();
    }
    Output out;
    out.dir = out_dir;
    out.stem = stem.empty() ? command : stem;
    out.meta["command"] = command;
    out.meta["version"] = kVersion;
    out.meta["deterministic"] = true;
    out.meta["config"] = app.config_to_str(true, false);
    out.meta["threads"] = threads;

    int code = kOk;
    try {
        fs::create_directories(out.dir);
        if (kernel->parsed()) code = cmd_kernel(kc, out, threads);
        else if (validate->parsed()) code = cmd_validate(vc, out, threads);
        else if (density->parsed()) code = asym_density(ac, out);
        else if (bulkc->parsed()) code = asym_bulk(ac, out, threads);
        else if (corr->parsed()) code = asym_correction(ac, out, threads);
        else if (edgec->parsed()) code = asym_edge(ac, out, threads);
        else if (cross->parsed()) code = asym_crossover(ac, out, threads);
        else if (gapc->parsed()) code = asym_gap(ac, out);
        else if (skernel->parsed()) code = splice_kernel(sc, out, threads);
        else if (ssector->parsed()) code = splice_sector(sc, out);
        else if (sedge->parsed()) code = splice_edge(sc, out, threads);
    } catch (const UsageError& e) {
        std::cerr << "usage: " << e.what() << "\n";
        return kUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "usage: " << e.what() << "\n";
        return kUsage;
    } catch (const QuadratureError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        out.meta["error"] = e.what();
        code = kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        out.meta["error"] = e.what();
        code = kNumerical;
    }
    out.meta["exit_code"] = code;
    try {
        write_json(out.path(".json"), out.meta);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kNumerical;
    }
    std::printf("%s -> %s (exit %d)\n", command.c_str(), out.path(".json").string().c_str(), code);
    return code;
}
