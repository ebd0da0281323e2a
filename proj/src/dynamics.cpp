#include "csmarate/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>

#include "csmarate/csma.hpp"

namespace csmarate {

IntegrationDivergedError::IntegrationDivergedError(std::string what, SystemState last)
    : std::runtime_error(std::move(what)), last_(std::move(last)) {}

double projection_plus(double g, double z) {
    if (z <= 0.0) return std::max(g, 0.0);
    return g;
}

std::vector<double> acsma_derivative(const std::vector<double>& arrival,
                                     const std::vector<double>& service,
                                     const std::vector<double>& r, double alpha) {
    if (arrival.size() != service.size() || arrival.size() != r.size())
        throw std::invalid_argument("acsma_derivative: vector lengths differ");
    std::vector<double> dr(r.size());
    for (std::size_t l = 0; l < r.size(); ++l)
        dr[l] = alpha * projection_plus(arrival[l] - service[l], r[l]);
    return dr;
}

double reno_derivative(double x, double T, double end_to_end_price) {
    // (x^2/2)(2/(T^2 x^2) - q) expanded: finite at x = 0 and free of the
    // 0 * inf product the factored form produces there.
    const double g = 1.0 / (T * T) - 0.5 * x * x * end_to_end_price;
    return projection_plus(g, x);
}

double multiconn_derivative(double x, double n, double T, double end_to_end_price) {
    const double g = n / (T * T) - x * x * end_to_end_price / (2.0 * n);
    return projection_plus(g, x);
}

double droptail_price(double aggregate_arrival, double y_l) {
    if (aggregate_arrival <= 0.0) return 0.0;
    return std::max(aggregate_arrival - y_l, 0.0) / aggregate_arrival;
}

double wired_price(double aggregate_arrival, double capacity) {
    return droptail_price(aggregate_arrival, capacity);
}

double connection_count(double T, double k, bool integer_mode) {
    const double fluid = k * T;
    if (!integer_mode) return fluid;
    return std::max(1.0, std::floor(fluid));
}

double connection_count_general(double T, double x, double marginal_utility, double k) {
    return k * std::sqrt(marginal_utility * T * T * x * x / 2.0);
}

double end_to_end_price(const std::vector<double>& wireless_prices,
                        const std::vector<double>& wired_prices) {
    double q = 0.0;
    for (double p : wireless_prices) q += p;
    for (double p : wired_prices) q += p;
    return q;
}

double end_to_end_price_exact(const std::vector<double>& wireless_prices,
                              const std::vector<double>& wired_prices) {
    double keep = 1.0;
    for (double p : wireless_prices) keep *= 1.0 - p;
    for (double p : wired_prices) keep *= 1.0 - p;
    return 1.0 - keep;
}

IntegrationMode integration_mode_from_string(const std::string& name) {
    if (name == "proposed") return IntegrationMode::proposed;
    if (name == "proposed_wired") return IntegrationMode::proposed_wired;
    if (name == "appendixB") return IntegrationMode::appendixB;
    if (name == "reno_over_lcsma") return IntegrationMode::reno_over_lcsma;
    throw std::invalid_argument("unknown integration mode: " + name);
}

std::string to_string(IntegrationMode mode) {
    switch (mode) {
        case IntegrationMode::proposed: return "proposed";
        case IntegrationMode::proposed_wired: return "proposed_wired";
        case IntegrationMode::appendixB: return "appendixB";
        case IntegrationMode::reno_over_lcsma: return "reno_over_lcsma";
    }
    return "?";
}

namespace {

// Everything the per-step derivative evaluation needs, preallocated once so
// the million-step loops never allocate.
struct Workspace {
    const Scenario* scenario = nullptr;
    const IndependentSetFamily* family = nullptr;
    IntegrationMode mode{};
    double beta = 0.0, alpha = 0.0, k = 0.0, prop_delay = 0.0;
    std::optional<double> r_max;
    bool integer_connections = false;

    std::size_t nflows = 0, nlinks = 0, nwired = 0;
    std::vector<std::vector<int>> flows_on_link;  // link -> flow indices
    std::vector<std::vector<int>> flows_on_wired; // wired link -> flow indices

    // Scratch
    std::vector<double> br, w, tau, y, arrival, wired_load, p_w, T, n, price;

    void init(const Scenario& s, const IndependentSetFamily& fam, IntegrationMode m,
              const IntegrateOptions& opt) {
        scenario = &s;
        family = &fam;
        mode = m;
        beta = opt.beta.value_or(m == IntegrationMode::appendixB ? 10.0 : s.params().beta);
        alpha = opt.alpha.value_or(s.params().alpha);
        k = opt.k.value_or(s.params().k);
        r_max = opt.r_max ? opt.r_max : s.params().r_max;
        prop_delay = s.params().prop_delay;
        integer_connections = opt.integer_connections;
        nflows = s.flows().size();
        nlinks = static_cast<std::size_t>(s.graph().link_count());
        nwired = s.wired().size();
        flows_on_link.assign(nlinks, {});
        flows_on_wired.assign(nwired, {});
        for (std::size_t f = 0; f < nflows; ++f) {
            for (int l : s.flows()[f].wireless_route)
                flows_on_link[static_cast<std::size_t>(l)].push_back(static_cast<int>(f));
            for (int wl : s.flows()[f].wired_route)
                flows_on_wired[static_cast<std::size_t>(wl)].push_back(static_cast<int>(f));
        }
        br.resize(nlinks);
        w.resize(fam.size());
        tau.resize(fam.size());
        y.resize(nlinks);
        arrival.resize(nlinks);
        wired_load.resize(nwired);
        p_w.resize(nwired);
        T.resize(nflows);
        n.resize(nflows);
        price.resize(nflows);
    }

    void service_rates(const std::vector<double>& r) {
        for (std::size_t l = 0; l < nlinks; ++l) br[l] = beta * r[l];
        detail::set_scores(*family, br.data(), w.data());
        detail::softmax_scores(*family, w.data(), tau.data(), y.data());
    }

    // Fills dx/dr and the derived fields (T, n, p_w, y) for the state (x, r).
    // frozen_n: when non-null, use these connection counts instead of kT
    // (integer mode holds them between refreshes).
    void derivative(const std::vector<double>& x, const std::vector<double>& r,
                    const std::vector<double>* frozen_n, std::vector<double>& dx,
                    std::vector<double>& dr) {
        const auto& flows = scenario->flows();
        service_rates(r);
        for (std::size_t l = 0; l < nlinks; ++l) {
            double a = 0.0;
            for (int f : flows_on_link[l]) a += x[static_cast<std::size_t>(f)];
            arrival[l] = a;
        }
        for (std::size_t wl = 0; wl < nwired; ++wl) {
            double a = 0.0;
            for (int f : flows_on_wired[wl]) a += x[static_cast<std::size_t>(f)];
            wired_load[wl] = a;
            p_w[wl] = wired_price(a, scenario->wired()[wl].capacity);
        }

        switch (mode) {
            case IntegrationMode::proposed:
            case IntegrationMode::proposed_wired:
                for (std::size_t s = 0; s < nflows; ++s) {
                    double rsum = 0.0;
                    for (int l : flows[s].wireless_route)
                        rsum += r[static_cast<std::size_t>(l)];
                    double q = rsum;
                    if (mode == IntegrationMode::proposed_wired)
                        for (int wl : flows[s].wired_route)
                            q += p_w[static_cast<std::size_t>(wl)];
                    T[s] = prop_delay + rsum / alpha;
                    n[s] = frozen_n != nullptr ? (*frozen_n)[s]
                                               : connection_count(T[s], k, false);
                    price[s] = q;
                    dx[s] = multiconn_derivative(x[s], n[s], T[s], q);
                }
                for (std::size_t l = 0; l < nlinks; ++l)
                    dr[l] = alpha * projection_plus(arrival[l] - y[l], r[l]);
                break;

            case IntegrationMode::appendixB:
                for (std::size_t s = 0; s < nflows; ++s) {
                    // Aggressiveness tracks queue length, so the loss price a
                    // flow sees is the summed r along its route.
                    double rsum = 0.0;
                    for (int l : flows[s].wireless_route)
                        rsum += r[static_cast<std::size_t>(l)];
                    const double q = rsum;
                    T[s] = (x[s] > 0.0 && rsum > 0.0)
                               ? rsum / (alpha * x[s])
                               : std::numeric_limits<double>::infinity();
                    n[s] = 1.0;
                    price[s] = q;
                    const double invT2 = T[s] == std::numeric_limits<double>::infinity()
                                             ? 0.0
                                             : 1.0 / (T[s] * T[s]);
                    dx[s] = projection_plus(invT2 - 0.5 * x[s] * x[s] * q, x[s]);
                }
                for (std::size_t l = 0; l < nlinks; ++l)
                    dr[l] = alpha * projection_plus(arrival[l] - y[l], r[l]);
                break;

            case IntegrationMode::reno_over_lcsma:
                for (std::size_t s = 0; s < nflows; ++s) {
                    double rsum = 0.0, q = 0.0;
                    for (int l : flows[s].wireless_route) {
                        const auto li = static_cast<std::size_t>(l);
                        rsum += r[li];
                        q += droptail_price(arrival[li], y[li]);
                    }
                    for (int wl : flows[s].wired_route) q += p_w[static_cast<std::size_t>(wl)];
                    T[s] = prop_delay + rsum / alpha;
                    n[s] = 1.0;
                    price[s] = q;
                    dx[s] = reno_derivative(x[s], T[s], q);
                }
                for (std::size_t l = 0; l < nlinks; ++l) dr[l] = 0.0;
                break;
        }
    }
};

bool all_finite_and_bounded(const std::vector<double>& v) {
    for (double a : v)
        if (!std::isfinite(a) || std::abs(a) > 1e9) return false;
    return true;
}

} // namespace

Trajectory integrate_system(const Scenario& scenario, IntegrationMode mode, double horizon,
                            double dt, const IntegrateOptions& options) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_system: dt must be positive");
    if (!(horizon >= dt)) throw std::invalid_argument("integrate_system: horizon must be >= dt");

    const IndependentSetFamily family = enumerate_independent_sets(scenario.graph());
    Workspace ws;
    ws.init(scenario, family, mode, options);

    const std::size_t nflows = ws.nflows, nlinks = ws.nlinks;

    std::vector<double> x(nflows, 0.1), r(nlinks, nflows == 0 ? 0.0 : 0.1);
    if (!options.x0.empty()) {
        if (options.x0.size() != nflows)
            throw std::invalid_argument("integrate_system: x0 length mismatch");
        x = options.x0;
    }
    if (!options.r0.empty()) {
        if (options.r0.size() != nlinks)
            throw std::invalid_argument("integrate_system: r0 length mismatch");
        r = options.r0;
    }
    if (mode == IntegrationMode::reno_over_lcsma) {
        const double frozen = ws.r_max.value_or(0.01);
        std::fill(r.begin(), r.end(), frozen);
    }
    if (ws.r_max)
        for (double& v : r) v = std::min(v, *ws.r_max);

    Trajectory traj;
    traj.dt = dt;
    traj.mode = to_string(mode);

    const double sample_interval =
        options.sample_interval > 0.0 ? options.sample_interval
                                      : std::max(dt, horizon / 1000.0);

    std::vector<double> dx(nflows), dr(nlinks);
    std::vector<double> k2x, k2r, k3x, k3r, k4x, k4r, mx, mr;
    if (options.method == IntegrateOptions::Method::rk4) {
        k2x.resize(nflows); k2r.resize(nlinks);
        k3x.resize(nflows); k3r.resize(nlinks);
        k4x.resize(nflows); k4r.resize(nlinks);
        mx.resize(nflows); mr.resize(nlinks);
    }

    std::vector<double> frozen_n(nflows, 1.0);
    const bool use_frozen_n = options.integer_connections &&
                              (mode == IntegrationMode::proposed ||
                               mode == IntegrationMode::proposed_wired);
    double next_n_refresh = 0.0;

    // Trailing-window equilibrium detector: compare consecutive window means
    // of the flow rates (and of r when there are no flows).
    const auto window_steps =
        static_cast<std::uint64_t>(std::max(1.0, options.equilibrium_window / dt));
    std::vector<double> win_acc(nflows + nlinks, 0.0), win_prev;
    std::uint64_t win_count = 0;

    std::vector<bool> saturated(nlinks, false);
    int logged_events = 0;

    auto snapshot = [&](double t) {
        SystemState st;
        st.t = t;
        st.x = x;
        st.n.assign(ws.n.begin(), ws.n.end());
        st.T.assign(ws.T.begin(), ws.T.end());
        st.r = r;
        st.y.assign(ws.y.begin(), ws.y.end());
        st.p_w.assign(ws.p_w.begin(), ws.p_w.end());
        return st;
    };

    // Derived fields for the t=0 sample.
    if (use_frozen_n) {
        ws.derivative(x, r, nullptr, dx, dr);
        frozen_n.assign(ws.n.begin(), ws.n.end());
        for (double& v : frozen_n) v = std::max(1.0, std::floor(v));
        next_n_refresh = 5.0;
    }
    ws.derivative(x, r, use_frozen_n ? &frozen_n : nullptr, dx, dr);
    traj.samples.push_back(snapshot(0.0));

    const auto steps = static_cast<std::uint64_t>(std::llround(horizon / dt));
    double next_sample = sample_interval;

    for (std::uint64_t step = 0; step < steps; ++step) {
        const double t = static_cast<double>(step) * dt;

        if (use_frozen_n && t >= next_n_refresh) {
            for (std::size_t s = 0; s < nflows; ++s)
                frozen_n[s] = std::max(1.0, std::floor(ws.k * ws.T[s]));
            next_n_refresh += 5.0;
        }
        const std::vector<double>* fn = use_frozen_n ? &frozen_n : nullptr;

        if (options.method == IntegrateOptions::Method::euler) {
            ws.derivative(x, r, fn, dx, dr);
            for (std::size_t s = 0; s < nflows; ++s) x[s] += dt * dx[s];
            for (std::size_t l = 0; l < nlinks; ++l) r[l] += dt * dr[l];
        } else {
            ws.derivative(x, r, fn, dx, dr);
            auto eval_at = [&](double hx, const std::vector<double>& ax,
                              const std::vector<double>& ar, std::vector<double>& ox,
                              std::vector<double>& orr) {
                for (std::size_t s = 0; s < nflows; ++s)
                    mx[s] = std::max(0.0, x[s] + hx * ax[s]);
                for (std::size_t l = 0; l < nlinks; ++l)
                    mr[l] = std::max(0.0, r[l] + hx * ar[l]);
                ws.derivative(mx, mr, fn, ox, orr);
            };
            eval_at(0.5 * dt, dx, dr, k2x, k2r);
            eval_at(0.5 * dt, k2x, k2r, k3x, k3r);
            eval_at(dt, k3x, k3r, k4x, k4r);
            for (std::size_t s = 0; s < nflows; ++s)
                x[s] += dt / 6.0 * (dx[s] + 2.0 * k2x[s] + 2.0 * k3x[s] + k4x[s]);
            for (std::size_t l = 0; l < nlinks; ++l)
                r[l] += dt / 6.0 * (dr[l] + 2.0 * k2r[l] + 2.0 * k3r[l] + k4r[l]);
        }

        for (double& v : x) v = std::max(0.0, v);
        for (std::size_t l = 0; l < nlinks; ++l) {
            r[l] = std::max(0.0, r[l]);
            if (ws.r_max) {
                const bool hit = r[l] >= *ws.r_max;
                if (hit) r[l] = *ws.r_max;
                if (hit != saturated[l] && logged_events < 200 &&
                    mode != IntegrationMode::reno_over_lcsma) {
                    char buf[96];
                    std::snprintf(buf, sizeof buf, "t=%.6g link=%zu %s r_max", t + dt, l,
                                  hit ? "enters" : "leaves");
                    traj.events.emplace_back(buf);
                    ++logged_events;
                }
                saturated[l] = hit;
            }
        }

        if (!all_finite_and_bounded(x) || !all_finite_and_bounded(r)) {
            ws.derivative(traj.samples.back().x, traj.samples.back().r, fn, dx, dr);
            throw IntegrationDivergedError(
                "integration diverged at t=" + std::to_string(t + dt), traj.samples.back());
        }

        const double tnew = static_cast<double>(step + 1) * dt;
        if (tnew + 1e-12 >= next_sample || step + 1 == steps) {
            ws.derivative(x, r, fn, dx, dr); // refresh derived fields for the sample
            traj.samples.push_back(snapshot(tnew));
            while (next_sample <= tnew + 1e-12) next_sample += sample_interval;
        }

        if (options.detect_equilibrium) {
            for (std::size_t s = 0; s < nflows; ++s) win_acc[s] += x[s];
            for (std::size_t l = 0; l < nlinks; ++l) win_acc[nflows + l] += r[l];
            if (++win_count == window_steps) {
                for (double& v : win_acc) v /= static_cast<double>(window_steps);
                if (!win_prev.empty()) {
                    double worst = 0.0;
                    for (std::size_t i = 0; i < win_acc.size(); ++i) {
                        const double scale = std::max(std::abs(win_prev[i]), 1e-9);
                        worst = std::max(worst, std::abs(win_acc[i] - win_prev[i]) / scale);
                    }
                    if (worst < options.equilibrium_threshold) {
                        traj.reached_equilibrium = true;
                        traj.equilibrium_time = tnew;
                        ws.derivative(x, r, fn, dx, dr);
                        if (traj.samples.back().t < tnew)
                            traj.samples.push_back(snapshot(tnew));
                        char buf[64];
                        std::snprintf(buf, sizeof buf, "t=%.6g equilibrium detected", tnew);
                        traj.events.emplace_back(buf);
                        return traj;
                    }
                }
                win_prev = win_acc;
                std::fill(win_acc.begin(), win_acc.end(), 0.0);
                win_count = 0;
            }
        }
    }

    return traj;
}

std::string trajectory_csv(const Trajectory& traj, const Scenario& scenario) {
    std::ostringstream out;
    out << "t";
    for (const auto& f : scenario.flows())
        out << ",flow:" << f.id << ":x,flow:" << f.id << ":n,flow:" << f.id << ":T";
    for (const auto& ln : scenario.link_names()) out << ",link:" << ln << ":r,link:" << ln << ":y";
    for (const auto& w : scenario.wired()) out << ",wired:" << w.name << ":p";
    out << "\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        out << buf;
    };
    for (const auto& st : traj.samples) {
        std::snprintf(buf, sizeof buf, "%.17g", st.t);
        out << buf;
        for (std::size_t s = 0; s < st.x.size(); ++s) {
            put(st.x[s]);
            put(st.n[s]);
            put(st.T[s]);
        }
        for (std::size_t l = 0; l < st.r.size(); ++l) {
            put(st.r[l]);
            put(st.y[l]);
        }
        for (double p : st.p_w) put(p);
        out << "\n";
    }
    return out.str();
}

} // namespace csmarate
