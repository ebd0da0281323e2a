#pragma once

#include <optional>
#include <vector>

#include "csmarate/topology.hpp"

namespace csmarate {

// Per-link transmission aggressiveness.  Entries are nonnegative and, when an
// upper bound is attached, never exceed it (validated on construction).
struct TAVector {
    std::vector<double> r;
    std::optional<double> r_max;

    TAVector() = default;
    explicit TAVector(std::vector<double> values, std::optional<double> bound = std::nullopt);
};

// Stationary probability of every independent set, aligned with
// family.sets().  Non-owning view of the family: keep the family alive for
// as long as the distribution is used.
struct ScheduleDistribution {
    std::vector<double> tau;
    const IndependentSetFamily* family = nullptr;
};

// Per-link airtime fractions; every entry lies in [0, 1].
struct LinkRateVector {
    std::vector<double> y;

    LinkRateVector() = default;
    explicit LinkRateVector(std::vector<double> values);
};

// tau_i proportional to exp(beta * sum_{l in i} r_l), normalized.
// Log-space with max-subtraction, so any finite beta*r is safe.
ScheduleDistribution stationary_distribution(const IndependentSetFamily& family,
                                             const TAVector& r, double beta);

// y_l = sum over sets containing l of tau_i.
LinkRateVector link_service_rates(const ScheduleDistribution& dist);

// Fixed-aggressiveness CSMA throughput: y_l = sum_{i: l in i} rho^|i| /
// sum_i rho^|i|.  Identical to link_service_rates(stationary_distribution)
// with beta*r_l = ln(rho) on every link.
LinkRateVector lcsma_throughput(const IndependentSetFamily& family, double rho);

// g_beta(r) = (1/beta) * log sum_i exp(beta * sum_{l in i} r_l), computed as
// a numerically stable log-sum-exp.  Its gradient in r is the link service
// rate vector.
double log_partition(const IndependentSetFamily& family, const TAVector& r, double beta);

namespace detail {
// w[k] = sum of br over the member links of set k (callers pass br = beta*r).
// Shared by the stationary computation and the solvers.
void set_scores(const IndependentSetFamily& family, const double* br, double* w);

// Softmax of precomputed scores into tau (length family.size()); returns the
// log-sum-exp of the scores.  Marginals via the active kernel backend when
// out_y is non-null (length link_count).
double softmax_scores(const IndependentSetFamily& family, const double* w, double* tau,
                      double* out_y);
} // namespace detail

} // namespace csmarate
