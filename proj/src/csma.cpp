#include "csmarate/csma.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "csmarate/kernels.hpp"

namespace csmarate {

TAVector::TAVector(std::vector<double> values, std::optional<double> bound)
    : r(std::move(values)), r_max(bound) {
    for (double v : r) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("TAVector: entries must be finite and nonnegative");
        if (r_max && v > *r_max + 1e-15)
            throw std::invalid_argument("TAVector: entry " + std::to_string(v) +
                                        " exceeds r_max " + std::to_string(*r_max));
    }
}

LinkRateVector::LinkRateVector(std::vector<double> values) : y(std::move(values)) {
    for (double v : y)
        if (!(v >= 0.0) || v > 1.0 + 1e-12)
            throw std::invalid_argument("LinkRateVector: entries must lie in [0, 1]");
}

namespace detail {

void set_scores(const IndependentSetFamily& family, const double* br, double* w) {
    const auto& sets = family.sets();
    for (std::size_t k = 0; k < sets.size(); ++k) {
        double acc = 0.0;
        for (std::uint32_t bits = sets[k]; bits; bits &= bits - 1)
            acc += br[std::countr_zero(bits)];
        w[k] = acc;
    }
}

double softmax_scores(const IndependentSetFamily& family, const double* w, double* tau,
                      double* out_y) {
    const auto& be = kernels::active_backend();
    const std::size_t m = family.size();
    const double wmax = be.max_value(w, m);
    const double z = be.exp_shift_sum(w, m, wmax, tau);
    be.scale(tau, m, 1.0 / z);
    if (out_y != nullptr) {
        const auto nlinks = static_cast<std::size_t>(family.link_count());
        if (family.has_indicator()) {
            be.masked_marginals(family.indicator().data(), tau, m, nlinks, out_y);
        } else {
            for (std::size_t l = 0; l < nlinks; ++l) out_y[l] = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                for (std::uint32_t bits = family.set_mask(k); bits; bits &= bits - 1)
                    out_y[static_cast<std::size_t>(std::countr_zero(bits))] += tau[k];
        }
    }
    return wmax + std::log(z);
}

} // namespace detail

namespace {

void check_inputs(const IndependentSetFamily& family, const TAVector& r, double beta) {
    if (r.r.size() != static_cast<std::size_t>(family.link_count()))
        throw std::invalid_argument("TAVector length does not match link count");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be positive and finite");
}

} // namespace

ScheduleDistribution stationary_distribution(const IndependentSetFamily& family,
                                             const TAVector& r, double beta) {
    check_inputs(family, r, beta);
    const std::size_t n = r.r.size();
    std::vector<double> br(n);
    for (std::size_t l = 0; l < n; ++l) br[l] = beta * r.r[l];
    ScheduleDistribution dist;
    dist.family = &family;
    dist.tau.resize(family.size());
    std::vector<double> w(family.size());
    detail::set_scores(family, br.data(), w.data());
    detail::softmax_scores(family, w.data(), dist.tau.data(), nullptr);
    return dist;
}

LinkRateVector link_service_rates(const ScheduleDistribution& dist) {
    if (dist.family == nullptr || dist.tau.size() != dist.family->size())
        throw std::invalid_argument("ScheduleDistribution is not attached to its family");
    const auto& family = *dist.family;
    std::vector<double> y(static_cast<std::size_t>(family.link_count()), 0.0);
    const auto& be = kernels::active_backend();
    if (family.has_indicator()) {
        be.masked_marginals(family.indicator().data(), dist.tau.data(), family.size(),
                            y.size(), y.data());
    } else {
        for (std::size_t k = 0; k < family.size(); ++k)
            for (std::uint32_t bits = family.set_mask(k); bits; bits &= bits - 1)
                y[static_cast<std::size_t>(std::countr_zero(bits))] += dist.tau[k];
    }
    // Clip the rounding fringe so the [0,1] invariant holds exactly.
    for (double& v : y) v = std::min(1.0, std::max(0.0, v));
    return LinkRateVector(std::move(y));
}

LinkRateVector lcsma_throughput(const IndependentSetFamily& family, double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw std::invalid_argument("rho must be positive and finite");
    const double lr = std::log(rho);
    std::vector<double> w(family.size());
    for (std::size_t k = 0; k < family.size(); ++k) w[k] = lr * family.set_size(k);
    std::vector<double> tau(family.size());
    std::vector<double> y(static_cast<std::size_t>(family.link_count()), 0.0);
    detail::softmax_scores(family, w.data(), tau.data(), y.data());
    for (double& v : y) v = std::min(1.0, std::max(0.0, v));
    return LinkRateVector(std::move(y));
}

double log_partition(const IndependentSetFamily& family, const TAVector& r, double beta) {
    check_inputs(family, r, beta);
    const std::size_t n = r.r.size();
    std::vector<double> br(n);
    for (std::size_t l = 0; l < n; ++l) br[l] = beta * r.r[l];
    std::vector<double> w(family.size());
    std::vector<double> tau(family.size());
    detail::set_scores(family, br.data(), w.data());
    const double lse = detail::softmax_scores(family, w.data(), tau.data(), nullptr);
    return lse / beta;
}

} // namespace csmarate
