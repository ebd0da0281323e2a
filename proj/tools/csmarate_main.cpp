#include <CLI11.hpp>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "csmarate/csma.hpp"
#include "csmarate/dynamics.hpp"
#include "csmarate/kernels.hpp"
#include "csmarate/mac_sim.hpp"
#include "csmarate/optimizer.hpp"
#include "csmarate/scenario.hpp"
#include "csmarate/topology.hpp"

namespace fs = std::filesystem;
using namespace csmarate;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitInput = 2;

struct CommonArgs {
    std::string topology;
    std::string scenario_path;
    std::optional<double> beta, alpha, k, rmax, dt, horizon;
    std::uint64_t seed = 1;
    std::string mode;
    std::string out;
    unsigned replications = 1;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    auto* topo = cmd->add_option("--topology", a.topology, "builtin topology (a..e)");
    auto* scen = cmd->add_option("--scenario", a.scenario_path, "scenario file path");
    topo->excludes(scen);
    cmd->add_option("--beta", a.beta, "override beta");
    cmd->add_option("--alpha", a.alpha, "override alpha");
    cmd->add_option("--k", a.k, "override connection gain k");
    cmd->add_option("--rmax", a.rmax, "override r_max");
    cmd->add_option("--dt", a.dt, "override integration step");
    cmd->add_option("--horizon", a.horizon, "override horizon");
    cmd->add_option("--seed", a.seed, "RNG seed");
    cmd->add_option("--mode", a.mode, "mode (integrate: proposed|proposed_wired|appendixB|"
                                      "reno_over_lcsma; simulate: csma|aqm)");
    cmd->add_option("--out", a.out, "output directory (default $CSMARATE_OUT or .)");
    cmd->add_option("--replications", a.replications, "independent seeded runs (simulate)");
}

Scenario resolve_scenario(const CommonArgs& a) {
    if (!a.topology.empty()) return builtin_topology(a.topology);
    if (!a.scenario_path.empty()) return load_scenario_file(a.scenario_path);
    throw std::invalid_argument("one of --topology or --scenario is required");
}

void apply_overrides(Scenario& s, const CommonArgs& a) {
    if (a.beta) s.params().beta = *a.beta;
    if (a.alpha) s.params().alpha = *a.alpha;
    if (a.k) s.params().k = *a.k;
    if (a.rmax) s.params().r_max = *a.rmax;
    if (a.dt) s.params().dt = *a.dt;
    if (a.horizon) s.params().horizon = *a.horizon;
}

fs::path out_dir(const CommonArgs& a) {
    std::string dir = a.out;
    if (dir.empty()) {
        if (const char* env = std::getenv("CSMARATE_OUT"); env != nullptr && *env != '\0')
            dir = env;
        else
            dir = ".";
    }
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << content;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------

int cmd_solve(const CommonArgs& a) {
    Scenario s = resolve_scenario(a);
    apply_overrides(s, a);
    const fs::path dir = out_dir(a);
    const double beta = s.params().beta;
    NumSolution sol = s.has_wired_flows()
                          ? solve_ep(s, beta, 1e-6)
                          : solve_mp(s, beta, UtilityFunction::alpha2(), 1e-6);
    write_file(dir / "solution.csv", solution_csv(sol, s));
    const std::string report = solution_report(sol, s);
    write_file(dir / "report.txt", report);
    std::cout << report;
    return sol.converged ? kExitOk : kExitNumerical;
}

int cmd_integrate(const CommonArgs& a) {
    Scenario s = resolve_scenario(a);
    const fs::path dir = out_dir(a);
    const IntegrationMode mode =
        integration_mode_from_string(a.mode.empty() ? "proposed" : a.mode);
    IntegrateOptions opt;
    opt.beta = a.beta;
    opt.alpha = a.alpha;
    opt.k = a.k;
    opt.r_max = a.rmax;
    const double dt = a.dt.value_or(s.params().dt);
    const double horizon = a.horizon.value_or(s.params().horizon);
    try {
        const Trajectory traj = integrate_system(s, mode, horizon, dt, opt);
        write_file(dir / "trajectory.csv", trajectory_csv(traj, s));
        const SystemState& fin = traj.final_state();
        std::ostringstream sum;
        sum << "mode " << traj.mode << ", t_final " << fmt(fin.t)
            << (traj.reached_equilibrium ? " (equilibrium)" : "") << "\n";
        for (std::size_t i = 0; i < fin.x.size(); ++i)
            sum << "  flow " << s.flows()[i].id << " x=" << fmt(fin.x[i]) << "\n";
        for (std::size_t l = 0; l < fin.r.size(); ++l)
            sum << "  link " << s.link_names()[l] << " r=" << fmt(fin.r[l])
                << " y=" << fmt(fin.y[l]) << "\n";
        for (const auto& e : traj.events) sum << "  event: " << e << "\n";
        write_file(dir / "integrate_summary.txt", sum.str());
        std::cout << sum.str();
        return kExitOk;
    } catch (const IntegrationDivergedError& e) {
        std::cerr << "error: " << e.what() << " (last finite state at t="
                  << fmt(e.last_state().t) << ")\n";
        return kExitNumerical;
    }
}

int simulate_one(const Scenario& s, const CommonArgs& a, std::uint64_t seed,
                 const std::string& suffix) {
    const fs::path dir = out_dir(a);
    const double horizon = a.horizon.value_or(s.params().horizon);
    const std::string mode = a.mode.empty() ? "csma" : a.mode;
    if (mode == "csma") {
        const IndependentSetFamily family = enumerate_independent_sets(s.graph());
        // Default operating point: the fixed-rho legacy-CSMA TA.
        const double rho = 2.24;
        std::vector<double> rv(static_cast<std::size_t>(s.graph().link_count()),
                               std::log(rho) / s.params().beta);
        TAVector r(rv, s.params().r_max);
        CsmaSimOptions opt;
        opt.max_log_events = 100000;
        const CsmaSimResult res = simulate_csma(family, r, s.params().beta, horizon, seed, opt);
        const ScheduleDistribution exact = stationary_distribution(family, r, s.params().beta);
        const double tv = tv_distance(res.empirical_tau, exact.tau);
        std::ostringstream sum;
        sum << "csma simulation: horizon " << fmt(horizon) << ", seed " << seed << "\n";
        sum << "  tv distance to product form: " << fmt(tv) << "\n";
        for (std::size_t l = 0; l < res.airtime.size(); ++l)
            sum << "  link " << s.link_names()[l] << " airtime " << fmt(res.airtime[l]) << "\n";
        write_file(dir / ("sim_summary" + suffix + ".txt"), sum.str());
        write_file(dir / ("events" + suffix + ".csv"), event_log_csv(res.event_log, s));
        std::cout << sum.str();
        return kExitOk;
    }
    if (mode == "aqm") {
        std::vector<double> lambda(static_cast<std::size_t>(s.graph().link_count()), 0.0);
        for (const auto& [link, rate] : s.arrival_rates())
            lambda[static_cast<std::size_t>(s.link_index(link))] = rate;
        AqmSimOptions opt;
        opt.max_log_events = 100000;
        const AqmSimResult res =
            simulate_acsma_aqm(s, lambda, s.params().mac_alpha, s.params().beta,
                               s.params().update_interval, horizon, seed, opt);
        std::ostringstream trace;
        trace << "t";
        for (const auto& ln : s.link_names()) trace << ",queue:" << ln;
        trace << "\n";
        for (const auto& [t, qs] : res.queue_trace) {
            trace << fmt(t);
            for (double q : qs) trace << "," << fmt(q);
            trace << "\n";
        }
        const std::string sum = aqm_summary(res, s, horizon);
        write_file(dir / ("aqm_summary" + suffix + ".txt"), sum);
        write_file(dir / ("queue_trace" + suffix + ".csv"), trace.str());
        write_file(dir / ("events" + suffix + ".csv"), event_log_csv(res.event_log, s));
        std::cout << sum;
        return kExitOk;
    }
    throw std::invalid_argument("simulate mode must be csma or aqm");
}

int cmd_simulate(const CommonArgs& a) {
    Scenario s = resolve_scenario(a);
    apply_overrides(s, a);
    const unsigned reps = std::max(1u, a.replications);
    if (reps == 1) return simulate_one(s, a, a.seed, "");
    const unsigned workers =
        std::min(reps, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<int> codes(reps, kExitOk);
    for (unsigned base = 0; base < reps; base += workers) {
        std::vector<std::thread> pool;
        for (unsigned i = base; i < std::min(reps, base + workers); ++i)
            pool.emplace_back([&, i] {
                codes[i] = simulate_one(s, a, a.seed + i, "_rep" + std::to_string(i));
            });
        for (auto& t : pool) t.join();
    }
    for (int c : codes)
        if (c != kExitOk) return c;
    return kExitOk;
}

int cmd_compare(const CommonArgs& a) {
    Scenario s = resolve_scenario(a);
    apply_overrides(s, a);
    if (s.has_wired_flows())
        throw std::invalid_argument("compare requires a wireless-only scenario");
    const fs::path dir = out_dir(a);
    const double beta = s.params().beta;
    const UtilityFunction u = UtilityFunction::alpha2();
    const NumSolution sol = solve_mp(s, beta, u, 1e-6);
    if (!sol.converged) {
        std::cerr << "error: MP solve did not converge\n";
        return kExitNumerical;
    }

    // Legacy CSMA row: fixed-rho throughput, bottleneck share per flow.
    const IndependentSetFamily family = enumerate_independent_sets(s.graph());
    const LinkRateVector ylcsma = lcsma_throughput(family, 2.24);
    std::vector<int> flows_per_link(static_cast<std::size_t>(s.graph().link_count()), 0);
    for (const auto& f : s.flows())
        for (int l : f.wireless_route) ++flows_per_link[static_cast<std::size_t>(l)];
    std::vector<double> x_lcsma;
    for (const auto& f : s.flows()) {
        double rate = 1.0;
        for (int l : f.wireless_route) {
            const auto li = static_cast<std::size_t>(l);
            rate = std::min(rate, ylcsma.y[li] / std::max(1, flows_per_link[li]));
        }
        x_lcsma.push_back(rate);
    }

    // Proposed row: fluid equilibrium of the multi-connection system.
    IntegrateOptions opt;
    opt.beta = a.beta.value_or(beta);
    opt.alpha = a.alpha.value_or(0.5); // contraction-friendly adaptation gain
    opt.k = a.k;
    const double horizon = a.horizon.value_or(2e5);
    const double dt = a.dt.value_or(s.params().dt);
    const Trajectory traj = integrate_system(s, IntegrationMode::proposed, horizon, dt, opt);
    const std::vector<double>& x_fluid = traj.final_state().x;

    std::ostringstream out;
    out << "scheme";
    for (const auto& f : s.flows()) out << ",x:" << f.id;
    out << ",delta_u\n";
    auto emit = [&](const std::string& scheme, const std::vector<double>& x) {
        out << scheme;
        for (double v : x) out << "," << fmt(v);
        out << "," << fmt(utility_gap(x, sol.x_star, u)) << "\n";
    };
    emit("lcsma_fixed_rho", x_lcsma);
    emit("proposed_fluid", x_fluid);
    write_file(dir / "compare.csv", out.str());
    std::cout << out.str();
    return kExitOk;
}

int cmd_capacity(const CommonArgs& a, const std::string& yspec) {
    Scenario s = resolve_scenario(a);
    const fs::path dir = out_dir(a);
    std::vector<double> y;
    std::stringstream ss(yspec);
    std::string tok;
    while (std::getline(ss, tok, ',')) y.push_back(std::stod(tok));
    if (y.size() != static_cast<std::size_t>(s.graph().link_count()))
        throw std::invalid_argument("--y must list one rate per wireless link");
    const IndependentSetFamily family = enumerate_independent_sets(s.graph());
    const MembershipResult res = capacity_membership(family, y);
    std::ostringstream out;
    out << "verdict: " << to_string(res.verdict) << "\n";
    out << "max total slack: " << fmt(res.max_total_slack) << "\n";
    if (!res.tau_certificate.empty()) {
        out << "certificate:\n";
        for (std::size_t k = 0; k < res.tau_certificate.size(); ++k) {
            if (res.tau_certificate[k] <= 0.0) continue;
            out << "  tau{";
            bool first = true;
            for (std::uint32_t bits = family.set_mask(k); bits; bits &= bits - 1) {
                const int l = std::countr_zero(bits);
                if (!first) out << " ";
                out << s.link_names()[static_cast<std::size_t>(l)];
                first = false;
            }
            out << "} = " << fmt(res.tau_certificate[k]) << "\n";
        }
    }
    write_file(dir / "capacity.txt", out.str());
    std::cout << out.str();
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rate-control simulator and optimizer for adaptive-CSMA networks"};
    app.require_subcommand(1);

    CommonArgs solve_args, integ_args, sim_args, cmp_args, cap_args;
    std::string yspec;

    CLI::App* c_solve = app.add_subcommand("solve", "solve the NUM problem (MP, or EP with wired links)");
    add_common(c_solve, solve_args);
    CLI::App* c_integ = app.add_subcommand("integrate", "integrate a fluid dynamic system");
    add_common(c_integ, integ_args);
    CLI::App* c_sim = app.add_subcommand("simulate", "discrete-event MAC simulation");
    add_common(c_sim, sim_args);
    CLI::App* c_cmp = app.add_subcommand("compare", "utility-gap comparison table");
    add_common(c_cmp, cmp_args);
    CLI::App* c_cap = app.add_subcommand("capacity", "capacity-region membership");
    add_common(c_cap, cap_args);
    c_cap->add_option("--y", yspec, "comma-separated per-link rates")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (c_solve->parsed()) return cmd_solve(solve_args);
        if (c_integ->parsed()) return cmd_integrate(integ_args);
        if (c_sim->parsed()) return cmd_simulate(sim_args);
        if (c_cmp->parsed()) return cmd_compare(cmp_args);
        if (c_cap->parsed()) return cmd_capacity(cap_args, yspec);
    } catch (const ScenarioParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const IntegrationDivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitInput;
}
