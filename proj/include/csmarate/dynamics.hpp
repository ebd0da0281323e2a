#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csmarate/scenario.hpp"
#include "csmarate/topology.hpp"

namespace csmarate {

// Full state of one fluid system at a point in time.
struct SystemState {
    double t = 0.0;
    std::vector<double> x;   // per-flow rate
    std::vector<double> n;   // per-flow connection count (>= 0, real in fluid mode)
    std::vector<double> T;   // per-flow round-trip time
    std::vector<double> r;   // per wireless link, transmission aggressiveness
    std::vector<double> y;   // per wireless link, service rate at current r
    std::vector<double> p_w; // per wired link, loss price in [0, 1]
};

struct Trajectory {
    std::vector<SystemState> samples; // strictly increasing t
    double dt = 0.0;
    std::string mode;
    std::vector<std::string> events; // saturation episodes, equilibrium detection
    bool reached_equilibrium = false;
    double equilibrium_time = 0.0;
    const SystemState& final_state() const { return samples.back(); }
};

class IntegrationDivergedError : public std::runtime_error {
public:
    IntegrationDivergedError(std::string what, SystemState last);
    const SystemState& last_state() const { return last_; }

private:
    SystemState last_;
};

// [g]^+_z: the positive-part projection used by every state-constrained ODE;
// passes g through in the interior, floors it at 0 on the boundary z <= 0.
double projection_plus(double g, double z);

// dr_l/dt = alpha * [arrival_l - service_l]^+_{r_l}.  The r_max clamp is a
// separate saturating projection applied by the integrator.
std::vector<double> acsma_derivative(const std::vector<double>& arrival,
                                     const std::vector<double>& service,
                                     const std::vector<double>& r, double alpha);

// Single-connection Reno congestion avoidance: dx/dt = (x^2/2)(2/(T^2 x^2) - q)
// evaluated in the cancellation-free form 1/T^2 - x^2 q / 2, with the
// positive-part projection at x = 0.
double reno_derivative(double x, double T, double end_to_end_price);

// Multi-connection variant: dx/dt = (x^2/2n)(2n^2/(T^2 x^2) - q).  Reduces to
// reno_derivative exactly at n = 1.
double multiconn_derivative(double x, double n, double T, double end_to_end_price);

// Drop-tail loss fraction: (arrival - y)^+ / arrival, 0 when idle.
double droptail_price(double aggregate_arrival, double y_l);

// Wired drop fraction: same shape with the capacity as the service rate.
double wired_price(double aggregate_arrival, double capacity);

// n_s = k*T_s; integer mode floors and keeps at least one connection open.
double connection_count(double T, double k, bool integer_mode = false);

// n_s = k*sqrt(U'(x) * T^2 * x^2 / 2); collapses to k*T/sqrt(2) for U'=1/x^2.
double connection_count_general(double T, double x, double marginal_utility, double k);

// Linearized end-to-end price: plain sum of per-link prices along the route.
double end_to_end_price(const std::vector<double>& wireless_prices,
                        const std::vector<double>& wired_prices);

// Exact route loss 1 - prod(1 - p); the linearized form is its first-order
// expansion and is what the dynamic systems use.
double end_to_end_price_exact(const std::vector<double>& wireless_prices,
                              const std::vector<double>& wired_prices);

enum class IntegrationMode { proposed, proposed_wired, appendixB, reno_over_lcsma };

IntegrationMode integration_mode_from_string(const std::string& name);
std::string to_string(IntegrationMode mode);

struct IntegrateOptions {
    // Overrides for the scenario parameters; unset keeps the scenario value.
    std::optional<double> beta;
    std::optional<double> alpha;
    std::optional<double> k;
    std::optional<double> r_max;

    enum class Method { euler, rk4 } method = Method::euler;
    bool integer_connections = false; // floor(kT) refreshed every 5 s
    double sample_interval = 1.0;     // trajectory sampling stride (time units)

    // Early exit once a trailing window's mean |dstate| drops below the
    // threshold (per component, relative to window-mean magnitude).
    bool detect_equilibrium = true;
    double equilibrium_window = 200.0;
    double equilibrium_threshold = 3e-5;

    std::vector<double> x0; // optional initial rates (default 0.1)
    std::vector<double> r0; // optional initial aggressiveness (default 0.1)
};

// Fixed-step integration of the selected fluid system.  The CSMA chain is
// assumed to mix instantaneously: every step recomputes the exact product
// form at the current r.
//
// Mode notes:
//  - proposed:        multi-connection sources, n = kT, prices are the TA
//                     values themselves; RTT closed as prop_delay + sum r/alpha.
//  - proposed_wired:  adds wired-link drop prices to the route price.
//  - appendixB:       one single-connection flow per link, RTT closed as
//                     r/(alpha x); beta defaults to 10 in this mode (the
//                     pathology is beta-independent and small beta reaches
//                     the fixed point in simulated seconds).
//  - reno_over_lcsma: r frozen at r_max (default 0.01) on every link,
//                     drop-tail prices close the loop.
Trajectory integrate_system(const Scenario& scenario, IntegrationMode mode, double horizon,
                            double dt, const IntegrateOptions& options = {});

// Trajectory CSV: header t,flow:<id>:x,flow:<id>:n,flow:<id>:T,...,link:<id>:r,
// link:<id>:y,...,wired:<id>:p; one row per sample.
std::string trajectory_csv(const Trajectory& traj, const Scenario& scenario);

} // namespace csmarate
