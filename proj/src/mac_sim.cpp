#include "csmarate/mac_sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "csmarate/rng.hpp"

namespace csmarate {

const char* to_string(MacEventKind k) {
    switch (k) {
        case MacEventKind::countdown_expired: return "countdown_expired";
        case MacEventKind::transmission_end: return "transmission_end";
        case MacEventKind::packet_arrival: return "packet_arrival";
        case MacEventKind::packet_served: return "packet_served";
        case MacEventKind::drop: return "drop";
    }
    return "?";
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("tv_distance: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return 0.5 * acc;
}

namespace {

// Heap entry; ver stamps cancel stale entries lazily.  Ordering by
// (time, link, kind) keeps runs bit-reproducible.
struct Ev {
    double t;
    int link;
    std::uint8_t kind;
    std::uint64_t ver;
};
struct EvLater {
    bool operator()(const Ev& a, const Ev& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.link != b.link) return a.link > b.link;
        return a.kind > b.kind;
    }
};
using EventHeap = std::priority_queue<Ev, std::vector<Ev>, EvLater>;

int find_set_index(const std::vector<std::uint32_t>& sets, std::uint32_t mask) {
    const auto it = std::lower_bound(sets.begin(), sets.end(), mask);
    if (it == sets.end() || *it != mask) return -1;
    return static_cast<int>(it - sets.begin());
}

} // namespace

CsmaSimResult simulate_csma(const IndependentSetFamily& family, const TAVector& r, double beta,
                            double horizon, std::uint64_t seed, const CsmaSimOptions& options) {
    const int n = family.link_count();
    const auto nl = static_cast<std::size_t>(n);
    if (r.r.size() != nl) throw std::invalid_argument("simulate_csma: r length mismatch");
    if (!(horizon > 0.0)) throw std::invalid_argument("simulate_csma: horizon must be positive");

    std::vector<double> mean_countdown(nl);
    for (std::size_t l = 0; l < nl; ++l) mean_countdown[l] = std::exp(-beta * r.r[l]);

    std::vector<Rng> rng;
    rng.reserve(nl);
    for (std::size_t l = 0; l < nl; ++l) rng.emplace_back(seed, l);

    enum : std::uint8_t { kExpire = 0, kTxEnd = 1 };
    EventHeap heap;
    std::vector<std::uint64_t> ver(nl, 0);
    std::vector<double> deadline(nl, 0.0);   // valid while the countdown runs
    std::vector<double> remaining(nl, 0.0);  // valid while frozen
    std::vector<bool> frozen(nl, false), active(nl, false);

    std::uint32_t active_mask = 0;
    std::vector<double> set_time(family.size(), 0.0);
    double now = 0.0;
    std::uint64_t transitions = 0;

    CsmaSimResult res;
    std::size_t next_snapshot = 0;
    auto snapshot_order = options.snapshot_times;
    std::sort(snapshot_order.begin(), snapshot_order.end());

    auto log_event = [&](double t, MacEventKind k, int link) {
        if (res.event_log.size() < options.max_log_events)
            res.event_log.push_back(MacEvent{t, k, link, 0, r.r[static_cast<std::size_t>(link)]});
    };

    for (std::size_t l = 0; l < nl; ++l) {
        deadline[l] = rng[l].expo(mean_countdown[l]);
        heap.push(Ev{deadline[l], static_cast<int>(l), kExpire, ver[l]});
    }

    auto account = [&](double upto) {
        const int idx = find_set_index(family.sets(), active_mask);
        if (idx < 0) throw std::logic_error("simulate_csma: active set is not independent");
        set_time[static_cast<std::size_t>(idx)] += upto - now;
        now = upto;
    };
    auto take_snapshot = [&](double t) {
        std::vector<double> tau(set_time);
        for (double& v : tau) v /= t;
        res.snapshots.emplace_back(t, std::move(tau));
    };

    while (!heap.empty()) {
        const Ev ev = heap.top();
        if (ev.t >= horizon) break;
        heap.pop();
        const auto l = static_cast<std::size_t>(ev.link);
        if (ev.ver != ver[l]) continue; // cancelled

        while (next_snapshot < snapshot_order.size() && snapshot_order[next_snapshot] <= ev.t) {
            account(snapshot_order[next_snapshot]);
            take_snapshot(now);
            ++next_snapshot;
        }
        account(ev.t);

        if (ev.kind == kExpire) {
            // The countdown only runs while unfrozen, so starting to
            // transmit is always legal here; assert it anyway.
            if (active_mask & family.graph().neighbor_mask(ev.link))
                throw std::logic_error("simulate_csma: conflicting transmission");
            active[l] = true;
            active_mask |= 1u << ev.link;
            ++transitions;
            ++ver[l];
            heap.push(Ev{now + rng[l].expo(1.0), ev.link, kTxEnd, ver[l]});
            log_event(now, MacEventKind::countdown_expired, ev.link);
            // Freeze conflicting idle links.
            for (std::uint32_t bits = family.graph().neighbor_mask(ev.link); bits;
                 bits &= bits - 1) {
                const auto m = static_cast<std::size_t>(std::countr_zero(bits));
                if (!frozen[m] && !active[m]) {
                    frozen[m] = true;
                    remaining[m] = deadline[m] - now;
                    ++ver[m]; // cancel the pending expiry
                }
            }
        } else {
            active[l] = false;
            active_mask &= ~(1u << ev.link);
            ++transitions;
            ++ver[l];
            deadline[l] = now + rng[l].expo(mean_countdown[l]);
            heap.push(Ev{deadline[l], ev.link, kExpire, ver[l]});
            log_event(now, MacEventKind::transmission_end, ev.link);
            // Unfreeze neighbors whose last active conflict just ended.
            for (std::uint32_t bits = family.graph().neighbor_mask(ev.link); bits;
                 bits &= bits - 1) {
                const auto m = static_cast<std::size_t>(std::countr_zero(bits));
                if (frozen[m] && (active_mask & family.graph().neighbor_mask(
                                                    static_cast<int>(m))) == 0) {
                    frozen[m] = false;
                    deadline[m] = now + remaining[m];
                    heap.push(Ev{deadline[m], static_cast<int>(m), kExpire, ver[m]});
                }
            }
        }
    }

    while (next_snapshot < snapshot_order.size() && snapshot_order[next_snapshot] <= horizon) {
        account(snapshot_order[next_snapshot]);
        take_snapshot(now);
        ++next_snapshot;
    }
    account(horizon);

    res.empirical_tau = set_time;
    for (double& v : res.empirical_tau) v /= horizon;
    res.airtime.assign(nl, 0.0);
    for (std::size_t k = 0; k < family.size(); ++k)
        for (std::uint32_t bits = family.set_mask(k); bits; bits &= bits - 1)
            res.airtime[static_cast<std::size_t>(std::countr_zero(bits))] +=
                res.empirical_tau[k];
    res.transitions = transitions;
    return res;
}

// ---------------------------------------------------------------------------

AqmSimResult simulate_acsma_aqm(const Scenario& scenario,
                                const std::vector<double>& arrival_rates, double alpha,
                                double beta, double update_interval, double horizon,
                                std::uint64_t seed, const AqmSimOptions& options) {
    const auto& graph = scenario.graph();
    const auto nl = static_cast<std::size_t>(graph.link_count());
    if (arrival_rates.size() != nl)
        throw std::invalid_argument("simulate_acsma_aqm: arrival rate length mismatch");
    for (double a : arrival_rates)
        if (!(a >= 0.0)) throw std::invalid_argument("simulate_acsma_aqm: negative arrival rate");
    if (!(horizon > 0.0) || !(update_interval > 0.0))
        throw std::invalid_argument("simulate_acsma_aqm: horizon/update_interval must be positive");
    const bool fixed = !options.fixed_r.empty();
    if (fixed && options.fixed_r.size() != nl)
        throw std::invalid_argument("simulate_acsma_aqm: fixed_r length mismatch");

    // Streams: per-link MAC randomness, then per-link arrival processes, then
    // one AQM coin stream per link.
    std::vector<Rng> mac_rng, arr_rng, aqm_rng;
    for (std::size_t l = 0; l < nl; ++l) mac_rng.emplace_back(seed, l);
    for (std::size_t l = 0; l < nl; ++l) arr_rng.emplace_back(seed, nl + l);
    for (std::size_t l = 0; l < nl; ++l) aqm_rng.emplace_back(seed, 2 * nl + l);

    enum : std::uint8_t { kArrival = 0, kExpire = 1, kTxEnd = 2, kUpdate = 3 };
    EventHeap heap;
    std::vector<std::uint64_t> ver(nl, 0);
    std::vector<double> deadline(nl, 0.0), remaining(nl, 0.0), r(nl, 0.0);
    std::vector<bool> frozen(nl, false), active(nl, false), has_payload(nl, false);
    std::vector<std::uint64_t> queue(nl, 0);

    if (fixed) r = options.fixed_r;

    AqmSimResult res;
    res.arrived.assign(nl, 0);
    res.dropped.assign(nl, 0);
    res.served.assign(nl, 0);
    res.dummies.assign(nl, 0);
    res.final_queue.assign(nl, 0);
    res.max_queue.assign(nl, 0.0);
    res.mean_queue.assign(nl, 0.0);
    res.airtime.assign(nl, 0.0);
    res.service_rate.assign(nl, 0.0);

    const auto total_updates = static_cast<std::uint64_t>(horizon / update_interval) + 1;
    std::uint64_t stride = options.trace_stride;
    if (stride == 0) stride = std::max<std::uint64_t>(1, total_updates / 10000);

    auto log_event = [&](double t, MacEventKind k, int link) {
        if (res.event_log.size() < options.max_log_events)
            res.event_log.push_back(MacEvent{t, k, link, queue[static_cast<std::size_t>(link)],
                                             r[static_cast<std::size_t>(link)]});
    };

    std::uint32_t active_mask = 0;
    double now = 0.0;

    auto advance = [&](double upto) {
        const double dt = upto - now;
        for (std::size_t l = 0; l < nl; ++l) {
            res.mean_queue[l] += dt * static_cast<double>(queue[l]);
            if (active[l]) res.airtime[l] += dt;
        }
        now = upto;
    };

    for (std::size_t l = 0; l < nl; ++l) {
        deadline[l] = mac_rng[l].expo(std::exp(-beta * r[l]));
        heap.push(Ev{deadline[l], static_cast<int>(l), kExpire, ver[l]});
        if (arrival_rates[l] > 0.0)
            heap.push(Ev{arr_rng[l].expo(1.0 / arrival_rates[l]), static_cast<int>(l),
                         kArrival, 0});
    }
    std::uint64_t update_no = 1;
    heap.push(Ev{update_interval, 0, kUpdate, 0});

    while (!heap.empty()) {
        const Ev ev = heap.top();
        if (ev.t >= horizon) break;
        heap.pop();
        const auto l = static_cast<std::size_t>(ev.link);

        switch (ev.kind) {
            case kArrival: {
                advance(ev.t);
                ++res.arrived[l];
                const double pdrop = std::min(r[l], 1.0);
                if (aqm_rng[l].u01() < pdrop) {
                    ++res.dropped[l];
                    log_event(now, MacEventKind::drop, ev.link);
                } else {
                    ++queue[l];
                    res.max_queue[l] = std::max(res.max_queue[l], static_cast<double>(queue[l]));
                    log_event(now, MacEventKind::packet_arrival, ev.link);
                }
                heap.push(Ev{now + arr_rng[l].expo(1.0 / arrival_rates[l]), ev.link,
                             kArrival, 0});
                break;
            }
            case kUpdate: {
                advance(ev.t);
                if (!fixed)
                    for (std::size_t m = 0; m < nl; ++m)
                        r[m] = alpha * static_cast<double>(queue[m]);
                if (update_no % stride == 0) {
                    std::vector<double> qs(nl);
                    for (std::size_t m = 0; m < nl; ++m) qs[m] = static_cast<double>(queue[m]);
                    res.queue_trace.emplace_back(now, std::move(qs));
                }
                ++update_no;
                heap.push(Ev{static_cast<double>(update_no) * update_interval, 0, kUpdate, 0});
                break;
            }
            case kExpire: {
                if (ev.ver != ver[l]) break;
                advance(ev.t);
                if (active_mask & graph.neighbor_mask(ev.link))
                    throw std::logic_error("simulate_acsma_aqm: conflicting transmission");
                active[l] = true;
                active_mask |= 1u << ev.link;
                has_payload[l] = queue[l] > 0;
                if (!has_payload[l]) ++res.dummies[l];
                ++ver[l];
                heap.push(Ev{now + 1.0, ev.link, kTxEnd, ver[l]}); // unit packet time
                log_event(now, MacEventKind::countdown_expired, ev.link);
                for (std::uint32_t bits = graph.neighbor_mask(ev.link); bits; bits &= bits - 1) {
                    const auto m = static_cast<std::size_t>(std::countr_zero(bits));
                    if (!frozen[m] && !active[m]) {
                        frozen[m] = true;
                        remaining[m] = deadline[m] - now;
                        ++ver[m];
                    }
                }
                break;
            }
            case kTxEnd: {
                if (ev.ver != ver[l]) break;
                advance(ev.t);
                active[l] = false;
                active_mask &= ~(1u << ev.link);
                if (has_payload[l]) {
                    --queue[l];
                    ++res.served[l];
                    log_event(now, MacEventKind::packet_served, ev.link);
                } else {
                    log_event(now, MacEventKind::transmission_end, ev.link);
                }
                ++ver[l];
                deadline[l] = now + mac_rng[l].expo(std::exp(-beta * r[l]));
                heap.push(Ev{deadline[l], ev.link, kExpire, ver[l]});
                for (std::uint32_t bits = graph.neighbor_mask(ev.link); bits; bits &= bits - 1) {
                    const auto m = static_cast<std::size_t>(std::countr_zero(bits));
                    if (frozen[m] &&
                        (active_mask & graph.neighbor_mask(static_cast<int>(m))) == 0) {
                        frozen[m] = false;
                        deadline[m] = now + remaining[m];
                        heap.push(Ev{deadline[m], static_cast<int>(m), kExpire, ver[m]});
                    }
                }
                break;
            }
        }
    }
    advance(horizon);

    for (std::size_t l = 0; l < nl; ++l) res.final_queue[l] = queue[l];
    res.final_r = r;
    for (std::size_t l = 0; l < nl; ++l) {
        res.mean_queue[l] /= horizon;
        res.airtime[l] /= horizon;
        res.service_rate[l] = static_cast<double>(res.served[l]) / horizon;
    }
    return res;
}

std::string event_log_csv(const std::vector<MacEvent>& log, const Scenario& scenario) {
    std::ostringstream out;
    out << "time,link,kind,queue,r\n";
    char buf[64];
    for (const auto& ev : log) {
        std::snprintf(buf, sizeof buf, "%.17g", ev.time);
        out << buf << "," << scenario.link_names()[static_cast<std::size_t>(ev.link)] << ","
            << to_string(ev.kind) << "," << ev.queue << ",";
        std::snprintf(buf, sizeof buf, "%.17g", ev.r);
        out << buf << "\n";
    }
    return out.str();
}

std::string aqm_summary(const AqmSimResult& res, const Scenario& scenario, double horizon) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "aqm summary (horizon %.17g)\n", horizon);
    out << buf;
    for (std::size_t l = 0; l < res.arrived.size(); ++l) {
        std::snprintf(buf, sizeof buf,
                      "  link %-8s arrived=%llu served=%llu dropped=%llu dummies=%llu "
                      "final_queue=%llu airtime=%.6g mean_queue=%.6g final_r=%.6g\n",
                      scenario.link_names()[l].c_str(),
                      static_cast<unsigned long long>(res.arrived[l]),
                      static_cast<unsigned long long>(res.served[l]),
                      static_cast<unsigned long long>(res.dropped[l]),
                      static_cast<unsigned long long>(res.dummies[l]),
                      static_cast<unsigned long long>(res.final_queue[l]), res.airtime[l],
                      res.mean_queue[l], res.final_r[l]);
        out << buf;
    }
    return out.str();
}

} // namespace csmarate
