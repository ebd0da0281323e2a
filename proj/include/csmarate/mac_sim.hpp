#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csmarate/csma.hpp"
#include "csmarate/scenario.hpp"
#include "csmarate/topology.hpp"

namespace csmarate {

enum class MacEventKind : std::uint8_t {
    countdown_expired,
    transmission_end,
    packet_arrival,
    packet_served,
    drop,
};

const char* to_string(MacEventKind k);

struct MacEvent {
    double time = 0.0;
    MacEventKind kind{};
    int link = 0;
    std::uint64_t queue = 0; // queue length after the event (AQM mode)
    double r = 0.0;          // TA at the event
};

struct CsmaSimOptions {
    // Record empirical distributions at these times (ascending) in addition
    // to the final one.
    std::vector<double> snapshot_times;
    std::size_t max_log_events = 0; // 0 = keep no event log
};

struct CsmaSimResult {
    std::vector<double> empirical_tau; // aligned with family.sets()
    std::vector<double> airtime;       // per-link fraction of time active
    std::uint64_t transitions = 0;     // number of schedule changes
    std::vector<std::pair<double, std::vector<double>>> snapshots; // (t, tau)
    std::vector<MacEvent> event_log;   // first max_log_events events
};

// Event-driven simulation of the continuous-time CSMA chain: idle unfrozen
// links count down an Exponential(mean exp(-beta r_l)) timer, transmit for
// Exponential(mean 1), and freeze (resume, not resample) while a conflicting
// link transmits.  Deterministic for a given seed; one RNG stream per link.
CsmaSimResult simulate_csma(const IndependentSetFamily& family, const TAVector& r, double beta,
                            double horizon, std::uint64_t seed,
                            const CsmaSimOptions& options = {});

// 0.5 * L1 distance between two distributions over the same support.
double tv_distance(const std::vector<double>& a, const std::vector<double>& b);

struct AqmSimOptions {
    // When set, the TA stays fixed at this value on every link (legacy-CSMA
    // comparison mode) instead of tracking alpha * queue.
    std::vector<double> fixed_r;
    std::size_t max_log_events = 0;
    // Keep one queue/r sample every trace_stride TA updates (0 = auto-pick
    // so the trace stays under ~10k rows).
    std::uint64_t trace_stride = 0;
};

struct AqmSimResult {
    // Exact integer accounting; arrived == served + dropped + final_queue.
    std::vector<std::uint64_t> arrived, dropped, served, dummies, final_queue;
    std::vector<double> max_queue;     // per link
    std::vector<double> mean_queue;    // time-weighted
    std::vector<double> airtime;       // fraction of time transmitting (incl. dummies)
    std::vector<double> service_rate;  // served / horizon
    std::vector<double> final_r;
    std::vector<std::pair<double, std::vector<double>>> queue_trace; // (t, queue per link)
    std::vector<MacEvent> event_log;
};

// Queue-level adaptive-CSMA with AQM: Poisson packet arrivals per link,
// unit-time packets, tail drop with probability min(r, 1) on insertion,
// periodic TA refresh r = alpha * Q, and dummy packets (airtime only, never
// queued, exempt from AQM) when a link wins the channel with an empty queue.
AqmSimResult simulate_acsma_aqm(const Scenario& scenario,
                                const std::vector<double>& arrival_rates, double alpha,
                                double beta, double update_interval, double horizon,
                                std::uint64_t seed, const AqmSimOptions& options = {});

// Event-log CSV (time,link,kind,queue,r) and a plain-text summary block.
std::string event_log_csv(const std::vector<MacEvent>& log, const Scenario& scenario);
std::string aqm_summary(const AqmSimResult& res, const Scenario& scenario, double horizon);

} // namespace csmarate
