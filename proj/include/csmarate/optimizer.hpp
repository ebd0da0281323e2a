#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "csmarate/csma.hpp"
#include "csmarate/scenario.hpp"
#include "csmarate/topology.hpp"

namespace csmarate {

// Strictly concave increasing utility on x > 0.
class UtilityFunction {
public:
    enum class Kind { alpha2, alpha_fair, custom };

    static UtilityFunction alpha2();              // U(x) = -1/x
    static UtilityFunction alpha_fair(double a);  // x^(1-a)/(1-a), log x at a=1
    static UtilityFunction custom(std::function<double(double)> u,
                                  std::function<double(double)> uprime);

    Kind kind() const { return kind_; }
    double fairness_alpha() const { return alpha_; }
    double value(double x) const { return u_(x); }
    double marginal(double x) const { return uprime_(x); }

    // Solves U'(x) = q for x > 0 (closed form for the builtin kinds,
    // bisection for custom).  q must be positive.
    double invert_marginal(double q) const;

private:
    UtilityFunction(Kind k, double a, std::function<double(double)> u,
                    std::function<double(double)> uprime);
    Kind kind_;
    double alpha_;
    std::function<double(double)> u_, uprime_;
};

struct NumSolution {
    std::vector<double> x_star;    // per flow
    std::vector<double> r_star;    // per wireless link (dual prices)
    std::vector<double> p_w_star;  // per wired link
    ScheduleDistribution tau_star; // points into *family below
    std::shared_ptr<const IndependentSetFamily> family; // keeps tau_star valid
    double objective = 0.0;        // primal objective at (x*, tau*)
    double kkt_residual = 0.0;
    bool converged = false;
    int iterations = 0;
};

enum class Membership { inside, boundary, outside };

struct MembershipResult {
    Membership verdict{};
    std::vector<double> tau_certificate; // aligned with family.sets(); empty when outside
    double max_total_slack = 0.0;        // optimum of the classifying LP
};

std::string to_string(Membership m);

// Is y dominated by some convex combination of independent sets?  Solved as
// a two-phase dense simplex maximizing total slack of A*tau - s = y,
// sum tau = 1.  outside: infeasible; inside: feasible with positive total
// slack; boundary: feasible but only with A*tau = y exactly.  The raw-vector
// overload accepts any nonnegative demand (entries above 1 are simply
// outside); the LinkRateVector overload is a convenience for achieved rates.
MembershipResult capacity_membership(const IndependentSetFamily& family,
                                     const LinkRateVector& y);
MembershipResult capacity_membership(const IndependentSetFamily& family,
                                     const std::vector<double>& demand);

// L2(x, r) = sum U(x_s) - sum_l r_l * load_l(x) + g_beta(r), minus the wired
// penalty terms when the scenario routes flows over wired links.
double dual_objective(const Scenario& scenario, const std::vector<double>& x,
                      const std::vector<double>& r, double beta, const UtilityFunction& u);

struct SolveOptions {
    int max_iterations = 1000000;
    // Convergence tolerance of the cyclic inner maximization used when wired
    // links couple the flows.
    double inner_tol = 1e-12;
};

// Entropy-regularized NUM over the wireless capacity region.  Damped Newton
// descent on the dual variable r with exact inner maximization over x and
// exact product-form tau.  On success the returned KKT residual (primal
// infeasibility and complementary slackness; stationarity holds by
// construction) is at most tol.  Requires a wireless-only scenario.
NumSolution solve_mp(const Scenario& scenario, double beta, const UtilityFunction& u,
                     double tol, const SolveOptions& options = {});

// Same problem with wired links priced through the penalty
// integral(0..z) (v - C)^+ / v dv = (z - C) - C ln(z/C) for z > C.
// Pairs with the alpha=2 utility.  Without wired routes it degenerates to
// solve_mp exactly (same code path).
NumSolution solve_ep(const Scenario& scenario, double beta, double tol,
                     const SolveOptions& options = {});

// sum_s (U(x_achieved_s) - U(x_star_s)); nonpositive when x_achieved is
// suboptimal.  Throws std::domain_error on rates outside the utility domain.
double utility_gap(const std::vector<double>& x_achieved, const std::vector<double>& x_star,
                   const UtilityFunction& u);

// CSV (per-flow x*, per-link r*, objective, residual) and a human-readable
// report for the CLI.
std::string solution_csv(const NumSolution& sol, const Scenario& scenario);
std::string solution_report(const NumSolution& sol, const Scenario& scenario);

} // namespace csmarate
