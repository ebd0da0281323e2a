#include "csmarate/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace csmarate {

// ---------------------------------------------------------------------------
// Utilities

UtilityFunction::UtilityFunction(Kind k, double a, std::function<double(double)> u,
                                 std::function<double(double)> uprime)
    : kind_(k), alpha_(a), u_(std::move(u)), uprime_(std::move(uprime)) {}

UtilityFunction UtilityFunction::alpha2() {
    return UtilityFunction(Kind::alpha2, 2.0, [](double x) { return -1.0 / x; },
                           [](double x) { return 1.0 / (x * x); });
}

UtilityFunction UtilityFunction::alpha_fair(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("alpha_fair: alpha must be positive");
    if (a == 1.0)
        return UtilityFunction(Kind::alpha_fair, 1.0, [](double x) { return std::log(x); },
                               [](double x) { return 1.0 / x; });
    return UtilityFunction(
        Kind::alpha_fair, a,
        [a](double x) { return std::pow(x, 1.0 - a) / (1.0 - a); },
        [a](double x) { return std::pow(x, -a); });
}

UtilityFunction UtilityFunction::custom(std::function<double(double)> u,
                                        std::function<double(double)> uprime) {
    return UtilityFunction(Kind::custom, 0.0, std::move(u), std::move(uprime));
}

double UtilityFunction::invert_marginal(double q) const {
    if (!(q > 0.0)) throw std::invalid_argument("invert_marginal: q must be positive");
    switch (kind_) {
        case Kind::alpha2: return 1.0 / std::sqrt(q);
        case Kind::alpha_fair: return std::pow(q, -1.0 / alpha_);
        case Kind::custom: break;
    }
    // U' is strictly decreasing; bisect on log-spaced brackets.
    double lo = 1e-12, hi = 1e12;
    if (uprime_(lo) < q) return lo;
    if (uprime_(hi) > q) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (uprime_(mid) > q) lo = mid;
        else hi = mid;
    }
    return std::sqrt(lo * hi);
}

double utility_gap(const std::vector<double>& x_achieved, const std::vector<double>& x_star,
                   const UtilityFunction& u) {
    if (x_achieved.size() != x_star.size())
        throw std::invalid_argument("utility_gap: vector lengths differ");
    double gap = 0.0;
    for (std::size_t s = 0; s < x_achieved.size(); ++s) {
        if (!(x_achieved[s] > 0.0) || !(x_star[s] > 0.0))
            throw std::domain_error("utility_gap: rates must be strictly positive");
        gap += u.value(x_achieved[s]) - u.value(x_star[s]);
    }
    return gap;
}

// ---------------------------------------------------------------------------
// Capacity membership: dense two-phase simplex with Bland's rule.

namespace {

struct Simplex {
    // max c^T v  s.t.  E v = b (b >= 0), v >= 0.  Dense tableau.
    std::size_t rows, cols;               // structural columns only
    std::vector<double> tab;              // (rows) x (cols + rows + 1): E | artificials | b
    std::vector<int> basis;               // per row, column index (cols+i for artificials)
    static constexpr double kEps = 1e-10;

    double& at(std::size_t i, std::size_t j) { return tab[i * (cols + rows + 1) + j]; }
    std::size_t rhs() const { return cols + rows; }

    Simplex(std::size_t m, std::size_t n) : rows(m), cols(n), tab(m * (n + m + 1), 0.0) {}

    void pivot(std::size_t pr, std::size_t pc) {
        const std::size_t width = cols + rows + 1;
        const double pv = at(pr, pc);
        for (std::size_t j = 0; j < width; ++j) at(pr, j) /= pv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == pr) continue;
            const double f = at(i, pc);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) at(i, j) -= f * at(pr, j);
        }
        basis[pr] = static_cast<int>(pc);
    }

    // Maximizes obj over the current basis; allowed(j) gates entering
    // columns.  Returns the optimum.  Bland's rule prevents cycling.
    template <typename Allowed>
    double run(const std::vector<double>& obj, Allowed allowed) {
        for (;;) {
            // Reduced costs: c_j - c_B^T B^{-1} A_j, computed from the tableau.
            std::size_t enter = SIZE_MAX;
            for (std::size_t j = 0; j < cols + rows; ++j) {
                if (!allowed(j)) continue;
                bool basic = false;
                for (std::size_t i = 0; i < rows; ++i)
                    if (basis[i] == static_cast<int>(j)) { basic = true; break; }
                if (basic) continue;
                double red = obj[j];
                for (std::size_t i = 0; i < rows; ++i)
                    red -= obj[static_cast<std::size_t>(basis[i])] * at(i, j);
                if (red > kEps) { enter = j; break; }
            }
            if (enter == SIZE_MAX) break;
            std::size_t leave = SIZE_MAX;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < rows; ++i) {
                const double a = at(i, enter);
                if (a > kEps) {
                    const double ratio = at(i, rhs()) / a;
                    if (ratio < best - kEps ||
                        (ratio < best + kEps && leave != SIZE_MAX &&
                         basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave == SIZE_MAX)
                throw std::runtime_error("simplex: unbounded objective");
            pivot(leave, enter);
        }
        double val = 0.0;
        for (std::size_t i = 0; i < rows; ++i)
            val += obj[static_cast<std::size_t>(basis[i])] * at(i, rhs());
        return val;
    }
};

} // namespace

std::string to_string(Membership m) {
    switch (m) {
        case Membership::inside: return "inside";
        case Membership::boundary: return "boundary";
        case Membership::outside: return "outside";
    }
    return "?";
}

MembershipResult capacity_membership(const IndependentSetFamily& family,
                                     const LinkRateVector& y) {
    return capacity_membership(family, y.y);
}

MembershipResult capacity_membership(const IndependentSetFamily& family,
                                     const std::vector<double>& demand) {
    const auto n = static_cast<std::size_t>(family.link_count());
    const std::size_t m = family.size();
    if (demand.size() != n)
        throw std::invalid_argument("capacity_membership: y length mismatch");
    for (double v : demand)
        if (!(v >= 0.0))
            throw std::invalid_argument("capacity_membership: y must be nonnegative");

    // Columns: tau_0..tau_{m-1}, s_0..s_{n-1}.  Rows: per-link balance then
    // the probability-mass row.
    Simplex sx(n + 1, m + n);
    for (std::size_t l = 0; l < n; ++l) {
        for (std::size_t k = 0; k < m; ++k)
            sx.at(l, k) = (family.set_mask(k) >> l) & 1u ? 1.0 : 0.0;
        sx.at(l, m + l) = -1.0;
        sx.at(l, sx.rhs()) = demand[l];
    }
    for (std::size_t k = 0; k < m; ++k) sx.at(n, k) = 1.0;
    sx.at(n, sx.rhs()) = 1.0;
    for (std::size_t i = 0; i < n + 1; ++i) sx.at(i, m + n + i) = 1.0; // artificials
    sx.basis.resize(n + 1);
    for (std::size_t i = 0; i < n + 1; ++i) sx.basis[i] = static_cast<int>(m + n + i);

    // Phase 1: minimize artificial mass == maximize its negation.
    std::vector<double> phase1(m + n + n + 1, 0.0);
    for (std::size_t i = 0; i < n + 1; ++i) phase1[m + n + i] = -1.0;
    const double art = -sx.run(phase1, [](std::size_t) { return true; });
    MembershipResult res;
    if (art > 1e-8) {
        res.verdict = Membership::outside;
        return res;
    }

    // Pivot zero-valued artificials out of the basis; a later pivot could
    // otherwise re-inflate one, silently relaxing its row (which shows up as
    // a bogus unbounded phase 2).  Rows with no structural coefficient are
    // redundant and keep their parked artificial untouched.
    const std::size_t structural = m + n;
    for (std::size_t i = 0; i < n + 1; ++i) {
        if (static_cast<std::size_t>(sx.basis[i]) < structural) continue;
        for (std::size_t j = 0; j < structural; ++j)
            if (std::abs(sx.at(i, j)) > 1e-9) {
                sx.pivot(i, j);
                break;
            }
    }

    // Phase 2: maximize total slack, artificial columns locked out.
    std::vector<double> phase2(m + n + n + 1, 0.0);
    for (std::size_t l = 0; l < n; ++l) phase2[m + l] = 1.0;
    res.max_total_slack = sx.run(phase2, [structural](std::size_t j) { return j < structural; });

    res.tau_certificate.assign(m, 0.0);
    for (std::size_t i = 0; i < n + 1; ++i)
        if (sx.basis[i] >= 0 && static_cast<std::size_t>(sx.basis[i]) < m)
            res.tau_certificate[static_cast<std::size_t>(sx.basis[i])] = sx.at(i, sx.rhs());
    res.verdict = res.max_total_slack > 1e-9 ? Membership::inside : Membership::boundary;
    return res;
}

// ---------------------------------------------------------------------------
// The dual solver shared by MP and EP.

namespace {

constexpr double kXFloor = 1e-9;
constexpr double kXCap = 1e4;

// Wired penalty integral(0..z) (v - C)^+ / v dv and its derivatives.
double wired_penalty(double z, double c) {
    if (z <= c) return 0.0;
    return (z - c) - c * std::log(z / c);
}
double wired_penalty_d1(double z, double c) { return z > c ? (z - c) / z : 0.0; }
double wired_penalty_d2(double z, double c) { return z > c ? c / (z * z) : 0.0; }

struct DualProblem {
    const Scenario* scenario;
    const IndependentSetFamily* family;
    const UtilityFunction* util;
    double beta;
    double inner_tol;
    bool use_penalty; // any flow routed over a wired link

    std::size_t nflows, nlinks, nwired;
    std::vector<std::vector<int>> flows_on_link, flows_on_wired;

    // Scratch for evaluations.
    mutable std::vector<double> w, tau, y, q, x, load, z;

    DualProblem(const Scenario& s, const IndependentSetFamily& fam, const UtilityFunction& u,
                double b, double itol)
        : scenario(&s), family(&fam), util(&u), beta(b), inner_tol(itol) {
        nflows = s.flows().size();
        nlinks = static_cast<std::size_t>(s.graph().link_count());
        nwired = s.wired().size();
        use_penalty = s.has_wired_flows();
        flows_on_link.assign(nlinks, {});
        flows_on_wired.assign(nwired, {});
        for (std::size_t f = 0; f < nflows; ++f) {
            for (int l : s.flows()[f].wireless_route)
                flows_on_link[static_cast<std::size_t>(l)].push_back(static_cast<int>(f));
            for (int wl : s.flows()[f].wired_route)
                flows_on_wired[static_cast<std::size_t>(wl)].push_back(static_cast<int>(f));
        }
        w.resize(fam.size());
        tau.resize(fam.size());
        y.resize(nlinks);
        q.resize(nflows);
        x.resize(nflows);
        load.resize(nlinks);
        z.resize(nwired);
    }

    void route_prices(const std::vector<double>& r) const {
        const auto& flows = scenario->flows();
        for (std::size_t s = 0; s < nflows; ++s) {
            double acc = 0.0;
            for (int l : flows[s].wireless_route) acc += r[static_cast<std::size_t>(l)];
            q[s] = acc;
        }
    }

    double clamp_rate(double v) const { return std::min(kXCap, std::max(kXFloor, v)); }

    // argmax_x U(x) - q x (per flow) when no penalty couples the flows;
    // cyclic 1-D bisection otherwise.  Fills x and z.
    void inner_maximize(const std::vector<double>& r) const {
        route_prices(r);
        const auto& flows = scenario->flows();
        for (std::size_t s = 0; s < nflows; ++s)
            x[s] = clamp_rate(util->invert_marginal(std::max(q[s], 1e-18)));
        if (use_penalty) {
            std::vector<double> zrest(nwired);
            for (int pass = 0; pass < 400; ++pass) {
                double worst = 0.0;
                for (std::size_t wl = 0; wl < nwired; ++wl) {
                    double acc = 0.0;
                    for (int f : flows_on_wired[wl]) acc += x[static_cast<std::size_t>(f)];
                    z[wl] = acc;
                }
                for (std::size_t s = 0; s < nflows; ++s) {
                    if (flows[s].wired_route.empty()) continue; // closed form already exact
                    // phi'(v) = U'(v) - q_s - sum_w p_w(z_-s + v), strictly
                    // decreasing in v.
                    const std::size_t nw = flows[s].wired_route.size();
                    for (std::size_t j = 0; j < nw; ++j) {
                        const auto wl = static_cast<std::size_t>(flows[s].wired_route[j]);
                        zrest[j] = z[wl] - x[s];
                    }
                    auto dphi = [&](double v) {
                        double acc = util->marginal(v) - q[s];
                        for (std::size_t j = 0; j < nw; ++j) {
                            const auto wl = static_cast<std::size_t>(flows[s].wired_route[j]);
                            acc -= wired_penalty_d1(zrest[j] + v,
                                                    scenario->wired()[wl].capacity);
                        }
                        return acc;
                    };
                    double lo = kXFloor, hi = kXCap, nx;
                    if (dphi(hi) >= 0.0) nx = hi;
                    else if (dphi(lo) <= 0.0) nx = lo;
                    else {
                        for (int it = 0; it < 100; ++it) {
                            const double mid = 0.5 * (lo + hi);
                            if (dphi(mid) > 0.0) lo = mid;
                            else hi = mid;
                        }
                        nx = 0.5 * (lo + hi);
                    }
                    worst = std::max(worst, std::abs(nx - x[s]));
                    // Keep z consistent as we sweep.
                    for (std::size_t j = 0; j < nw; ++j) {
                        const auto wl = static_cast<std::size_t>(flows[s].wired_route[j]);
                        z[wl] = zrest[j] + nx;
                    }
                    x[s] = nx;
                }
                if (worst < inner_tol) break;
            }
        }
        for (std::size_t wl = 0; wl < nwired; ++wl) {
            double acc = 0.0;
            for (int f : flows_on_wired[wl]) acc += x[static_cast<std::size_t>(f)];
            z[wl] = acc;
        }
        for (std::size_t l = 0; l < nlinks; ++l) {
            double acc = 0.0;
            for (int f : flows_on_link[l]) acc += x[static_cast<std::size_t>(f)];
            load[l] = acc;
        }
    }

    void product_form(const std::vector<double>& r) const {
        std::vector<double> br(nlinks);
        for (std::size_t l = 0; l < nlinks; ++l) br[l] = beta * r[l];
        detail::set_scores(*family, br.data(), w.data());
        detail::softmax_scores(*family, w.data(), tau.data(), y.data());
    }

    // Dual value at r (inner max already folded in).
    double value(const std::vector<double>& r) const {
        inner_maximize(r);
        double v = 0.0;
        for (std::size_t s = 0; s < nflows; ++s) v += util->value(x[s]) - x[s] * q[s];
        if (use_penalty)
            for (std::size_t wl = 0; wl < nwired; ++wl)
                v -= wired_penalty(z[wl], scenario->wired()[wl].capacity);
        std::vector<double> br(nlinks);
        for (std::size_t l = 0; l < nlinks; ++l) br[l] = beta * r[l];
        detail::set_scores(*family, br.data(), w.data());
        const double wmax = *std::max_element(w.begin(), w.end());
        double zsum = 0.0;
        for (std::size_t k = 0; k < family->size(); ++k) zsum += std::exp(w[k] - wmax);
        return v + (wmax + std::log(zsum)) / beta;
    }

    double kkt_residual(const std::vector<double>& r) const {
        double res = 0.0;
        for (std::size_t l = 0; l < nlinks; ++l) {
            const double slack = load[l] - y[l];
            res = std::max(res, std::max(slack, 0.0));
            res = std::max(res, std::abs(r[l] * slack));
        }
        return res;
    }

    // -d x_s / d q_s >= 0 at the current inner solution (used for the
    // Gauss-Newton dual Hessian).  For penalty-coupled flows the wired
    // curvature is folded into the implicit derivative.
    double neg_dx_dq(std::size_t s) const {
        const double v = x[s];
        if (v <= kXFloor * (1 + 1e-9) || v >= kXCap * (1 - 1e-9)) return 0.0;
        double curvature;
        switch (util->kind()) {
            case UtilityFunction::Kind::alpha2: curvature = -2.0 / (v * v * v); break;
            case UtilityFunction::Kind::alpha_fair:
                curvature = -util->fairness_alpha() * std::pow(v, -util->fairness_alpha() - 1.0);
                break;
            default: {
                const double h = std::max(1e-6 * v, 1e-9);
                curvature = (util->marginal(v + h) - util->marginal(v - h)) / (2.0 * h);
                break;
            }
        }
        for (int wl : scenario->flows()[s].wired_route) {
            const auto wi = static_cast<std::size_t>(wl);
            curvature -= wired_penalty_d2(z[wi], scenario->wired()[wi].capacity);
        }
        return curvature < 0.0 ? -1.0 / curvature : 0.0;
    }
};

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_linear(std::vector<double> a, std::vector<double> b, std::size_t n,
                  std::vector<double>& out) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::abs(a[row * n + col]) > std::abs(a[piv * n + col])) piv = row;
        if (std::abs(a[piv * n + col]) < 1e-300) return false;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t row = col + 1; row < n; ++row) {
            const double f = a[row * n + col] / a[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[row * n + j] -= f * a[col * n + j];
            b[row] -= f * b[col];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= a[i * n + j] * out[j];
        out[i] = acc / a[i * n + i];
    }
    return true;
}

NumSolution solve_dual(const Scenario& scenario, double beta, const UtilityFunction& u,
                       double tol, const SolveOptions& options, bool allow_wired) {
    if (!(beta > 0.0)) throw std::invalid_argument("solver: beta must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("solver: tol must be positive");
    if (!allow_wired && scenario.has_wired_flows())
        throw std::invalid_argument("solve_mp requires a wireless-only scenario");

    auto family = std::make_shared<IndependentSetFamily>(
        enumerate_independent_sets(scenario.graph()));
    DualProblem dp(scenario, *family, u, beta, options.inner_tol);
    const std::size_t n = dp.nlinks, m = family->size();

    std::vector<double> r(n, 0.5);
    double fval = dp.value(r);
    dp.product_form(r);

    std::vector<double> grad(n), hess(n * n), step(n), trial(n);
    double lambda = 1e-8;
    int it = 0;
    const int max_it = std::max(1, options.max_iterations);
    double residual = std::numeric_limits<double>::infinity();

    for (it = 0; it < max_it; ++it) {
        dp.inner_maximize(r);
        dp.product_form(r);
        residual = dp.kkt_residual(r);
        if (residual <= tol) break;

        for (std::size_t l = 0; l < n; ++l) grad[l] = dp.y[l] - dp.load[l];

        // H = beta * Cov_tau(set indicators) + sum_s (-dx/dq) e_s e_s^T.
        std::fill(hess.begin(), hess.end(), 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            const double tk = dp.tau[k];
            if (tk < 1e-300) continue;
            const std::uint32_t mask = family->set_mask(k);
            for (std::uint32_t b1 = mask; b1; b1 &= b1 - 1) {
                const auto l1 = static_cast<std::size_t>(std::countr_zero(b1));
                for (std::uint32_t b2 = mask; b2; b2 &= b2 - 1) {
                    const auto l2 = static_cast<std::size_t>(std::countr_zero(b2));
                    hess[l1 * n + l2] += beta * tk;
                }
            }
        }
        for (std::size_t l1 = 0; l1 < n; ++l1)
            for (std::size_t l2 = 0; l2 < n; ++l2)
                hess[l1 * n + l2] -= beta * dp.y[l1] * dp.y[l2];
        for (std::size_t s = 0; s < dp.nflows; ++s) {
            const double gslope = dp.neg_dx_dq(s);
            if (gslope <= 0.0) continue;
            const auto& route = scenario.flows()[s].wireless_route;
            for (int l1 : route)
                for (int l2 : route)
                    hess[static_cast<std::size_t>(l1) * n + static_cast<std::size_t>(l2)] +=
                        gslope;
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
            std::vector<double> damped = hess;
            for (std::size_t l = 0; l < n; ++l) damped[l * n + l] += lambda;
            std::vector<double> rhs(n);
            for (std::size_t l = 0; l < n; ++l) rhs[l] = -grad[l];
            if (!solve_linear(damped, rhs, n, step)) {
                lambda = std::max(lambda * 10.0, 1e-6);
                continue;
            }
            double t = 1.0;
            for (int bt = 0; bt < 40; ++bt) {
                for (std::size_t l = 0; l < n; ++l)
                    trial[l] = std::max(0.0, r[l] + t * step[l]);
                const double ftrial = dp.value(trial);
                bool take = ftrial < fval - 1e-14 * std::abs(fval);
                if (!take && std::abs(ftrial - fval) <= 1e-12 * std::max(1.0, std::abs(fval))) {
                    // Close to the optimum the dual decrease underflows the
                    // comparison above; judge the step by the KKT residual
                    // instead (Newton on the stationarity system).
                    dp.product_form(trial);
                    take = dp.kkt_residual(trial) <= 0.5 * residual;
                }
                if (take) {
                    r = trial;
                    fval = ftrial;
                    accepted = true;
                    lambda = std::max(lambda * 0.3, 1e-10);
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) lambda = std::max(lambda * 10.0, 1e-6);
        }
        if (!accepted) {
            // Projected-gradient fallback keeps progress when the model is bad.
            double t = 1.0 / beta;
            bool moved = false;
            for (int bt = 0; bt < 60; ++bt) {
                for (std::size_t l = 0; l < n; ++l)
                    trial[l] = std::max(0.0, r[l] - t * grad[l]);
                const double ftrial = dp.value(trial);
                if (ftrial < fval) {
                    r = trial;
                    fval = ftrial;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved) break; // stationary to machine precision
        }
    }

    dp.inner_maximize(r);
    dp.product_form(r);
    residual = dp.kkt_residual(r);

    NumSolution sol;
    sol.family = family;
    sol.x_star.assign(dp.x.begin(), dp.x.end());
    sol.r_star = r;
    sol.p_w_star.resize(dp.nwired);
    for (std::size_t wl = 0; wl < dp.nwired; ++wl)
        sol.p_w_star[wl] = wired_penalty_d1(dp.z[wl], scenario.wired()[wl].capacity);
    sol.tau_star.family = family.get();
    sol.tau_star.tau.assign(dp.tau.begin(), dp.tau.end());
    sol.kkt_residual = residual;
    sol.converged = residual <= tol;
    sol.iterations = it;

    // Primal objective: sum U + (1/beta) H(tau) - penalties.
    double entropy = 0.0;
    for (double tv : sol.tau_star.tau)
        if (tv > 0.0) entropy -= tv * std::log(tv);
    double obj = entropy / beta;
    for (std::size_t s = 0; s < dp.nflows; ++s) obj += u.value(dp.x[s]);
    if (dp.use_penalty)
        for (std::size_t wl = 0; wl < dp.nwired; ++wl)
            obj -= wired_penalty(dp.z[wl], scenario.wired()[wl].capacity);
    sol.objective = obj;
    return sol;
}

} // namespace

double dual_objective(const Scenario& scenario, const std::vector<double>& x,
                      const std::vector<double>& r, double beta, const UtilityFunction& u) {
    const auto nflows = scenario.flows().size();
    const auto nlinks = static_cast<std::size_t>(scenario.graph().link_count());
    if (x.size() != nflows || r.size() != nlinks)
        throw std::invalid_argument("dual_objective: dimension mismatch");
    const IndependentSetFamily family = enumerate_independent_sets(scenario.graph());
    TAVector rv(r);
    double v = log_partition(family, rv, beta);
    for (std::size_t s = 0; s < nflows; ++s) {
        if (x[s] <= 0.0) return -std::numeric_limits<double>::infinity();
        double qs = 0.0;
        for (int l : scenario.flows()[s].wireless_route) qs += r[static_cast<std::size_t>(l)];
        v += u.value(x[s]) - x[s] * qs;
    }
    if (scenario.has_wired_flows()) {
        for (std::size_t wl = 0; wl < scenario.wired().size(); ++wl) {
            double z = 0.0;
            for (std::size_t s = 0; s < nflows; ++s)
                for (int w2 : scenario.flows()[s].wired_route)
                    if (static_cast<std::size_t>(w2) == wl) z += x[s];
            v -= wired_penalty(z, scenario.wired()[wl].capacity);
        }
    }
    return v;
}

NumSolution solve_mp(const Scenario& scenario, double beta, const UtilityFunction& u,
                     double tol, const SolveOptions& options) {
    return solve_dual(scenario, beta, u, tol, options, /*allow_wired=*/false);
}

NumSolution solve_ep(const Scenario& scenario, double beta, double tol,
                     const SolveOptions& options) {
    return solve_dual(scenario, beta, UtilityFunction::alpha2(), tol, options,
                      /*allow_wired=*/true);
}

std::string solution_csv(const NumSolution& sol, const Scenario& scenario) {
    std::ostringstream out;
    char buf[64];
    out << "kind,id,value\n";
    for (std::size_t s = 0; s < sol.x_star.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.17g", sol.x_star[s]);
        out << "flow," << scenario.flows()[s].id << "," << buf << "\n";
    }
    for (std::size_t l = 0; l < sol.r_star.size(); ++l) {
        std::snprintf(buf, sizeof buf, "%.17g", sol.r_star[l]);
        out << "link," << scenario.link_names()[l] << "," << buf << "\n";
    }
    for (std::size_t wl = 0; wl < sol.p_w_star.size(); ++wl) {
        std::snprintf(buf, sizeof buf, "%.17g", sol.p_w_star[wl]);
        out << "wired," << scenario.wired()[wl].name << "," << buf << "\n";
    }
    std::snprintf(buf, sizeof buf, "%.17g", sol.objective);
    out << "objective,," << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", sol.kkt_residual);
    out << "kkt_residual,," << buf << "\n";
    out << "converged,," << (sol.converged ? 1 : 0) << "\n";
    return out.str();
}

std::string solution_report(const NumSolution& sol, const Scenario& scenario) {
    std::ostringstream out;
    char buf[160];
    out << "solution for scenario '" << scenario.name() << "'\n";
    std::snprintf(buf, sizeof buf, "  objective     %.10g\n  kkt residual  %.3g\n  iterations    %d\n",
                  sol.objective, sol.kkt_residual, sol.iterations);
    out << buf << (sol.converged ? "  status        converged\n" : "  status        NOT converged\n");
    for (std::size_t s = 0; s < sol.x_star.size(); ++s) {
        std::snprintf(buf, sizeof buf, "  flow %-8s x* = %.8g\n", scenario.flows()[s].id.c_str(),
                      sol.x_star[s]);
        out << buf;
    }
    for (std::size_t l = 0; l < sol.r_star.size(); ++l) {
        std::snprintf(buf, sizeof buf, "  link %-8s r* = %.8g\n",
                      scenario.link_names()[l].c_str(), sol.r_star[l]);
        out << buf;
    }
    for (std::size_t wl = 0; wl < sol.p_w_star.size(); ++wl) {
        std::snprintf(buf, sizeof buf, "  wired %-7s p* = %.8g\n",
                      scenario.wired()[wl].name.c_str(), sol.p_w_star[wl]);
        out << buf;
    }
    return out.str();
}

} // namespace csmarate
