// End-to-end acceptance checks.  Each criterion prints exactly one PASS/FAIL
// line; the process exit code is the number of failed criteria.  Expected
// values come from closed forms or from independent oracles (finite
// differences, bisection, dense grid search) evaluated in this file.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "csmarate/csma.hpp"
#include "csmarate/dynamics.hpp"
#include "csmarate/mac_sim.hpp"
#include "csmarate/optimizer.hpp"
#include "csmarate/rng.hpp"
#include "csmarate/scenario.hpp"
#include "csmarate/topology.hpp"

using namespace csmarate;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %d (%s): %s — %s\n", id, name, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------- 1 --
// Fixed-rho CSMA starves the flower's center link; the rate must equal the
// closed form rho/(2 rho^2 + 4 rho + 1).  Note: the historically quoted
// 4-digit decimal 0.1099 is inconsistent with that formula at rho = 2.24
// (the formula gives 0.11203); the formula is authoritative and the coarse
// 2-digit 0.11 is reproduced.
void criterion1() {
    const Scenario a = builtin_topology("a");
    const IndependentSetFamily fam = enumerate_independent_sets(a.graph());
    const double rho = 2.24;
    const LinkRateVector y = lcsma_throughput(fam, rho);
    const double formula = rho / (2 * rho * rho + 4 * rho + 1);
    const bool formula_ok = std::abs(y.y[1] - formula) < 1e-12;
    const bool band_ok = std::abs(y.y[1] - 0.1120) <= 0.0005;
    report(1, "lcsma starvation constant", formula_ok && band_ok,
           "y2=" + fmt(y.y[1]) + " vs formula " + fmt(formula) +
               " (the 0.1099 decimal sometimes quoted contradicts the formula; "
               "0.1120 +- 0.0005 band used)");
}

// ---------------------------------------------------------------------- 2 --
// The event simulator's empirical schedule distribution converges to the
// product form: TV < 0.02 at horizon 1e6, and doubling the horizon does not
// worsen the median TV over 10 seeds.
void criterion2() {
    const Scenario a = builtin_topology("a");
    const IndependentSetFamily fam = enumerate_independent_sets(a.graph());
    const double beta = 800.0;
    const TAVector r(std::vector<double>(4, 2.0 / beta)); // beta*r = 2 on every link
    const ScheduleDistribution exact = stationary_distribution(fam, r, beta);

    std::vector<double> tv1e5, tv1e6, tv2e6;
    CsmaSimOptions opt;
    opt.snapshot_times = {1e5, 1e6};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const CsmaSimResult res = simulate_csma(fam, r, beta, 2e6, seed, opt);
        tv1e5.push_back(tv_distance(res.snapshots[0].second, exact.tau));
        tv1e6.push_back(tv_distance(res.snapshots[1].second, exact.tau));
        tv2e6.push_back(tv_distance(res.empirical_tau, exact.tau));
    }
    const bool all_small = *std::max_element(tv1e6.begin(), tv1e6.end()) < 0.02;
    const bool monotone = median(tv2e6) <= median(tv1e6);
    report(2, "product-form validation", all_small && monotone,
           "TV medians: 1e5=" + fmt(median(tv1e5)) + " 1e6=" + fmt(median(tv1e6)) +
               " 2e6=" + fmt(median(tv2e6)) + ", max at 1e6 = " +
               fmt(*std::max_element(tv1e6.begin(), tv1e6.end())));
}

// ---------------------------------------------------------------------- 3 --
// Single-connection closure: every link's aggressiveness settles at
// (2 alpha^2)^(1/3) and the links agree with each other within 1%.
void criterion3() {
    const Scenario a = builtin_topology("a");
    IntegrateOptions opt;
    opt.alpha = 0.05;
    const Trajectory traj = integrate_system(a, IntegrationMode::appendixB, 2000.0, 1e-3, opt);
    const std::vector<double>& r = traj.final_state().r;
    const double expect = std::cbrt(2.0 * 0.05 * 0.05); // 0.17100
    double lo = r[0], hi = r[0];
    bool band = true;
    for (double v : r) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        band = band && std::abs(v - expect) / expect <= 0.01;
    }
    const bool equalized = hi / lo <= 1.01;
    report(3, "single-connection fixed point", band && equalized,
           "r in [" + fmt(lo) + ", " + fmt(hi) + "], target " + fmt(expect) +
               ", spread " + fmt(hi / lo));
}

// ---------------------------------------------------------------------- 4 --
// The fluid system's fixed point solves the regularized NUM problem: per-flow
// rates within 1% of the solver, solver KKT residual at most 1e-6.
void criterion4() {
    bool all_ok = true;
    std::string detail;
    for (const char* name : {"a", "b", "c"}) {
        const Scenario s = builtin_topology(name);
        const double beta = 2000.0;
        const NumSolution sol = solve_mp(s, beta, UtilityFunction::alpha2(), 1e-6);
        IntegrateOptions opt;
        opt.beta = beta;
        opt.alpha = 0.5;
        opt.k = 10.0;
        const Trajectory traj = integrate_system(s, IntegrationMode::proposed, 1.2e5, 1e-3, opt);
        double worst = 0.0;
        for (std::size_t i = 0; i < sol.x_star.size(); ++i)
            worst = std::max(worst, std::abs(traj.final_state().x[i] - sol.x_star[i]) /
                                        sol.x_star[i]);
        const bool ok = sol.converged && sol.kkt_residual <= 1e-6 && worst <= 0.01;
        all_ok = all_ok && ok;
        detail += std::string(name) + ": max dev " + fmt(worst * 100) + "% kkt " +
                  fmt(sol.kkt_residual) + "; ";
    }
    report(4, "fluid equilibrium equals the optimum", all_ok, detail);
}

// ---------------------------------------------------------------------- 5 --
// No starvation at the optimum (min rate >= 0.01 on a-d) while fixed-rho
// CSMA starves the designated flows (< 0.12 normalized rate).  The chain
// topology's middle links carry (rho + rho^2)/(1 + 4 rho + 3 rho^2) ~= 0.29
// at the rho = 2.24 operating point, and never less than half the end-link
// rate at any rho, so that leg of the check fails by construction; it is
// reported honestly rather than weakened.
void criterion5() {
    bool solver_ok = true;
    std::string detail = "min x*: ";
    for (const char* name : {"a", "b", "c", "d"}) {
        const NumSolution sol =
            solve_mp(builtin_topology(name), 2000.0, UtilityFunction::alpha2(), 1e-6);
        double mn = sol.x_star[0];
        for (double x : sol.x_star) mn = std::min(mn, x);
        solver_ok = solver_ok && sol.converged && mn >= 0.01;
        detail += std::string(name) + "=" + fmt(mn) + " ";
    }

    const double rho = 2.24;
    bool lcsma_ok = true;
    detail += "| fixed-rho starved rates: ";
    const struct {
        const char* topo;
        std::vector<std::size_t> links;
    } starved[] = {{"a", {1}}, {"b", {0}}, {"c", {1, 2}}};
    for (const auto& sc : starved) {
        const Scenario s = builtin_topology(sc.topo);
        const LinkRateVector y =
            lcsma_throughput(enumerate_independent_sets(s.graph()), rho);
        for (std::size_t l : sc.links) {
            detail += std::string(sc.topo) + "/" + s.link_names()[l] + "=" + fmt(y.y[l]) + " ";
            lcsma_ok = lcsma_ok && y.y[l] < 0.12;
        }
    }
    if (!lcsma_ok)
        detail += "(chain middle links carry 0.29 at rho=2.24 and at least half "
                  "the end-link rate at any rho; 0.12 is unattainable there)";
    report(5, "no starvation at optimum vs fixed-rho starvation", solver_ok && lcsma_ok,
           detail);
}

// ---------------------------------------------------------------------- 6 --
// The log partition function's gradient is the service-rate vector: central
// finite differences on 100 random instances with up to 6 links.
void criterion6() {
    Rng rng(2026);
    double worst = 0.0;
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.next() % 6);
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.u01() < 0.4) edges.push_back({i, j});
        const IndependentSetFamily fam = enumerate_independent_sets(ConflictGraph(n, edges));
        const double beta = 0.5 + rng.u01() * 1.5;
        std::vector<double> r(static_cast<std::size_t>(n));
        for (auto& v : r) v = rng.u01() * 0.8;
        const LinkRateVector y =
            link_service_rates(stationary_distribution(fam, TAVector(r), beta));
        for (std::size_t l = 0; l < r.size(); ++l) {
            const double h = 1e-6;
            std::vector<double> rp = r, rm = r;
            rp[l] += h;
            rm[l] -= h;
            if (rm[l] < 0.0) rm[l] = 0.0; // keep the evaluation in-domain
            const long double up = log_partition(fam, TAVector(rp), beta);
            const long double dn = log_partition(fam, TAVector(rm), beta);
            const double fd = static_cast<double>((up - dn) / (rp[l] - rm[l]));
            worst = std::max(worst, std::abs(fd - y.y[l]) / std::abs(y.y[l]));
            ++checked;
        }
    }
    report(6, "gradient identity", worst <= 1e-6,
           "worst relative error " + fmt(worst) + " over " + std::to_string(checked) +
               " partial derivatives");
}

// ---------------------------------------------------------------------- 7 --
// Queue-level MAC: arrivals at 90% of an interior point stay stable under the
// adaptive rule (service within 2% of arrivals) and overflow the flower's
// center link when the aggressiveness is frozen at the fixed-rho point.
void criterion7() {
    const Scenario a = builtin_topology("a");
    const std::vector<double> lambda = {0.54, 0.27, 0.27, 0.27}; // 0.9 * (0.6,0.3,0.3,0.3)
    const double beta = 800.0, horizon = 1e6;

    const AqmSimResult adaptive =
        simulate_acsma_aqm(a, lambda, 2e-4, beta, 1.0, horizon, 2026);
    bool stable = true;
    double worst = 0.0;
    for (std::size_t l = 0; l < 4; ++l) {
        const double ratio = adaptive.service_rate[l] / lambda[l];
        worst = std::max(worst, 1.0 - ratio);
        stable = stable && ratio >= 0.98;
    }

    AqmSimOptions fixed;
    fixed.fixed_r = std::vector<double>(4, std::log(2.24) / beta);
    const AqmSimResult frozen =
        simulate_acsma_aqm(a, lambda, 2e-4, beta, 1.0, horizon, 2026, fixed);
    const bool overflow = frozen.final_queue[1] > 5e4 &&
                          frozen.service_rate[1] < 0.5 * lambda[1];

    report(7, "adaptive MAC stability vs fixed-rho overflow", stable && overflow,
           "adaptive worst service deficit " + fmt(worst * 100) + "%, frozen center queue " +
               std::to_string(frozen.final_queue[1]) + " served " +
               fmt(frozen.service_rate[1]));
}

// ---------------------------------------------------------------------- 8 --
// Penalty formulation: identical to the wireless solver when no wired links
// exist; reproduces the closed-form single-flow optimum of a capacity-2
// wired bottleneck (x satisfies 1/x^2 = (x-2)/x, i.e. x = 1 + sqrt 2).
void criterion8() {
    const Scenario a = builtin_topology("a");
    const NumSolution mp = solve_mp(a, 800.0, UtilityFunction::alpha2(), 1e-8);
    const NumSolution ep = solve_ep(a, 800.0, 1e-8);
    const double obj_diff = std::abs(mp.objective - ep.objective);

    const Scenario wired("w", false, ConflictGraph(1, {}), {"idle"},
                         {WiredLink{"e", 2.0}}, {Flow{"f", {}, {0}}}, ParameterBlock{});
    const NumSolution sol = solve_ep(wired, 800.0, 1e-8);
    // Independent oracle: phi'(x) = 1/x^2 - (x-2)^+/x is strictly decreasing.
    double lo = 1e-3, hi = 50.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double d = 1.0 / (mid * mid) - (mid > 2.0 ? (mid - 2.0) / mid : 0.0);
        (d > 0 ? lo : hi) = mid;
    }
    const double x_ref = 0.5 * (lo + hi);
    const double closed = 1.0 + std::sqrt(2.0);
    const bool ok = mp.converged && ep.converged && sol.converged && obj_diff <= 1e-10 &&
                    std::abs(sol.x_star[0] - x_ref) <= 1e-4 &&
                    std::abs(sol.x_star[0] - closed) <= 1e-4;
    report(8, "penalty formulation reduction and closed form", ok,
           "objective diff " + fmt(obj_diff) + ", wired x* " + fmt(sol.x_star[0]) +
               " vs 1+sqrt(2) = " + fmt(closed));
}

// ---------------------------------------------------------------------- 9 --
// Small instances against a dense-grid maximization of the primal value.
// value(x) = sum U(x) + min_{r>=0} [ g_beta(r) - r . load(x) ]; the inner
// minimum is solved by cyclic per-coordinate bisection (the coordinate
// derivative y_l(r) - load_l is strictly increasing in r_l).
struct GridCase {
    std::string name;
    Scenario scenario;
    double beta;
};

double inner_dual_min(const IndependentSetFamily& fam, const std::vector<double>& load,
                      double beta, std::vector<double>& r) {
    const std::size_t n = load.size();
    std::vector<double> rr = r;
    auto deriv = [&](std::size_t l, double v) {
        rr = r;
        rr[l] = v;
        const LinkRateVector y =
            link_service_rates(stationary_distribution(fam, TAVector(rr), beta));
        return y.y[l] - load[l];
    };
    for (int cycle = 0; cycle < 60; ++cycle) {
        for (std::size_t l = 0; l < n; ++l) {
            if (deriv(l, 0.0) >= 0.0) {
                r[l] = 0.0;
                continue;
            }
            double lo = 0.0, hi = std::max(1.0, 2.0 * std::min(r[l], 100.0) + 1.0);
            while (deriv(l, hi) < 0.0 && hi < 1e4) hi *= 2.0;
            if (deriv(l, hi) < 0.0) {
                // load_l exceeds every achievable service rate; the inner
                // minimum is unbounded below, i.e. this lattice point lies
                // outside the capacity region.  Reset the warm start so the
                // runaway r does not poison later evaluations.
                std::fill(r.begin(), r.end(), 0.5);
                return -std::numeric_limits<double>::infinity();
            }
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (deriv(l, mid) < 0.0 ? lo : hi) = mid;
            }
            r[l] = 0.5 * (lo + hi);
        }
        const LinkRateVector y =
            link_service_rates(stationary_distribution(fam, TAVector(r), beta));
        double worst = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            double gl = y.y[l] - load[l];
            if (r[l] <= 0.0 && gl > 0.0) gl = 0.0;
            worst = std::max(worst, std::abs(gl));
        }
        if (worst < 1e-11) break;
    }
    double dot = 0.0;
    for (std::size_t l = 0; l < n; ++l) dot += r[l] * load[l];
    return log_partition(fam, TAVector(r), beta) - dot;
}

std::vector<double> grid_oracle(const Scenario& s, double beta) {
    const IndependentSetFamily fam = enumerate_independent_sets(s.graph());
    const std::size_t nflows = s.flows().size();
    const std::size_t nlinks = static_cast<std::size_t>(s.graph().link_count());
    std::vector<double> warm(nlinks, 0.5);
    auto value = [&](const std::vector<double>& x) {
        double util = 0.0;
        for (double v : x) util += -1.0 / v;
        std::vector<double> load(nlinks, 0.0);
        for (std::size_t i = 0; i < nflows; ++i)
            for (int l : s.flows()[i].wireless_route)
                load[static_cast<std::size_t>(l)] += x[i];
        // The benchmark graphs are paths and cliques (perfect graphs), so
        // per-link and per-edge caps carve out the capacity region exactly.
        // Reject infeasible lattice points here: on them the truncated
        // coordinate descent would badly over-estimate the unbounded inner
        // minimum.
        for (double ld : load)
            if (ld > 1.0) return -std::numeric_limits<double>::infinity();
        for (const auto& [a, b] : s.graph().conflicts())
            if (load[static_cast<std::size_t>(a)] + load[static_cast<std::size_t>(b)] > 1.0)
                return -std::numeric_limits<double>::infinity();
        return util + inner_dual_min(fam, load, beta, warm);
    };

    // Dense sweep with shrinking boxes around the best lattice point.
    const int points = 7, refinements = 10;
    std::vector<double> lob(nflows, 0.02), hib(nflows, 1.2);
    std::vector<double> best(nflows, 0.5);
    double best_v = -1e300;
    for (int pass = 0; pass < refinements; ++pass) {
        std::vector<int> idx(nflows, 0);
        std::vector<double> x(nflows);
        while (true) {
            for (std::size_t i = 0; i < nflows; ++i)
                x[i] = lob[i] + (hib[i] - lob[i]) * idx[i] / (points - 1);
            const double v = value(x);
            if (v > best_v) {
                best_v = v;
                best = x;
            }
            std::size_t d = 0;
            while (d < nflows && ++idx[d] == points) idx[d++] = 0;
            if (d == nflows) break;
        }
        for (std::size_t i = 0; i < nflows; ++i) {
            const double step = (hib[i] - lob[i]) / (points - 1);
            lob[i] = std::max(0.005, best[i] - 1.5 * step);
            hib[i] = best[i] + 1.5 * step;
        }
    }
    return best;
}

void criterion9() {
    std::vector<GridCase> cases;
    cases.push_back({"single", Scenario("g1", false, ConflictGraph(1, {}), {"l1"}, {},
                                        {Flow{"f1", {0}, {}}}, ParameterBlock{}),
                     400.0});
    cases.push_back({"clique2", Scenario("g2", false, ConflictGraph(2, {{0, 1}}),
                                         {"l1", "l2"}, {},
                                         {Flow{"f1", {0}, {}}, Flow{"f2", {1}, {}}},
                                         ParameterBlock{}),
                     500.0});
    cases.push_back(
        {"chain3", Scenario("g3", false, ConflictGraph(3, {{0, 1}, {1, 2}}),
                            {"l1", "l2", "l3"}, {},
                            {Flow{"f1", {0}, {}}, Flow{"f2", {1}, {}}, Flow{"f3", {2}, {}}},
                            ParameterBlock{}),
         300.0});
    cases.push_back(
        {"chain5", Scenario("g5", false,
                            ConflictGraph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}),
                            {"l1", "l2", "l3", "l4", "l5"}, {},
                            {Flow{"fA", {0, 1}, {}}, Flow{"fB", {2}, {}}, Flow{"fC", {3, 4}, {}}},
                            ParameterBlock{}),
         200.0});

    bool all_ok = true;
    std::string detail;
    for (const auto& gc : cases) {
        const NumSolution sol = solve_mp(gc.scenario, gc.beta, UtilityFunction::alpha2(), 1e-9);
        const std::vector<double> ref = grid_oracle(gc.scenario, gc.beta);
        double worst = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i)
            worst = std::max(worst, std::abs(sol.x_star[i] - ref[i]));
        all_ok = all_ok && sol.converged && worst <= 1e-3;
        detail += gc.name + ": max |dx| " + fmt(worst) + "; ";
    }
    report(9, "grid-oracle equivalence on small instances", all_ok, detail);
}

} // namespace

int main() {
    using CriterionFn = void (*)();
    const CriterionFn fns[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                               criterion6, criterion7, criterion8, criterion9};
    int id = 1;
    for (CriterionFn fn : fns) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(id, "exception", false, e.what());
        }
        ++id;
    }
    std::printf("%d of 9 criteria passed\n", 9 - g_failures);
    return g_failures;
}
