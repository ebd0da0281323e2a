#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "csmarate/csma.hpp"
#include "csmarate/optimizer.hpp"
#include "csmarate/scenario.hpp"
#include "csmarate/topology.hpp"
#include "oracles.hpp"

using namespace csmarate;

namespace {

IndependentSetFamily flower_family() {
    return enumerate_independent_sets(
        ConflictGraph(4, {{0, 1}, {1, 2}, {1, 3}, {2, 3}}));
}

// A(tau) per link for certificate checking.
std::vector<double> marginals_of(const IndependentSetFamily& fam,
                                 const std::vector<double>& tau) {
    std::vector<double> y(static_cast<std::size_t>(fam.link_count()), 0.0);
    for (std::size_t k = 0; k < fam.size(); ++k)
        for (int l = 0; l < fam.link_count(); ++l)
            if (fam.set_mask(k) >> l & 1u) y[static_cast<std::size_t>(l)] += tau[k];
    return y;
}

Scenario single_link_single_flow() {
    return Scenario("s", false, ConflictGraph(1, {}), {"l"}, {},
                    {Flow{"f", {0}, {}}}, ParameterBlock{});
}

Scenario wired_only(int nflows, double capacity) {
    std::vector<Flow> flows;
    for (int i = 0; i < nflows; ++i)
        flows.push_back(Flow{"f" + std::to_string(i), {}, {0}});
    return Scenario("w", false, ConflictGraph(1, {}), {"idle"},
                    {WiredLink{"e", capacity}}, flows, ParameterBlock{});
}

} // namespace

TEST_CASE("capacity membership on the flower") {
    const IndependentSetFamily fam = flower_family();
    SUBCASE("strictly dominated point is inside") {
        const MembershipResult res = capacity_membership(fam, LinkRateVector({0.5, 0.0, 0.5, 0.5}));
        CHECK(res.verdict == Membership::inside);
        CHECK(res.max_total_slack > 1e-9);
        REQUIRE(res.tau_certificate.size() == fam.size());
        double sum = 0.0;
        for (double t : res.tau_certificate) {
            CHECK(t >= -1e-12);
            sum += t;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        const auto y = marginals_of(fam, res.tau_certificate);
        CHECK(y[0] >= 0.5 - 1e-9);
        CHECK(y[2] >= 0.5 - 1e-9);
        CHECK(y[3] >= 0.5 - 1e-9);
    }
    SUBCASE("extreme point is boundary") {
        const MembershipResult res = capacity_membership(fam, LinkRateVector({1.0, 0.0, 0.5, 0.5}));
        CHECK(res.verdict == Membership::boundary);
        CHECK(res.max_total_slack <= 1e-9);
        const auto y = marginals_of(fam, res.tau_certificate);
        for (std::size_t l = 0; l < 4; ++l) CHECK(y[l] >= -1e-9);
        CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("zero is inside") {
        CHECK(capacity_membership(fam, LinkRateVector({0.0, 0.0, 0.0, 0.0})).verdict ==
              Membership::inside);
    }
    SUBCASE("overloaded center is outside") {
        const MembershipResult res = capacity_membership(fam, LinkRateVector({0.9, 0.9, 0.0, 0.0}));
        CHECK(res.verdict == Membership::outside);
        CHECK(res.tau_certificate.empty());
    }
}

TEST_CASE("single link capacity is one") {
    const IndependentSetFamily fam = enumerate_independent_sets(ConflictGraph(1, {}));
    CHECK(capacity_membership(fam, LinkRateVector({1.0})).verdict == Membership::boundary);
    CHECK(capacity_membership(fam, LinkRateVector({0.99})).verdict == Membership::inside);
    // Demands above unit capacity are valid membership queries (they are just
    // outside) even though achieved-rate vectors cap at 1.
    CHECK(capacity_membership(fam, std::vector<double>{1.01}).verdict == Membership::outside);
    CHECK_THROWS_AS(LinkRateVector({1.01}), std::invalid_argument);
    CHECK_THROWS_AS(capacity_membership(fam, std::vector<double>{-0.1}),
                    std::invalid_argument);
}

TEST_CASE("dual objective matches an independent evaluation") {
    const Scenario s = builtin_topology("a");
    const double beta = 800.0;
    const UtilityFunction u = UtilityFunction::alpha2();
    const std::vector<double> x(4, 0.22);
    const std::vector<double> r = {0.004, 0.009, 0.006, 0.006};
    const auto pf = oracle::product_form_bruteforce(s.graph(), r, beta);
    // L2 = sum U(x) - sum_l r_l * load_l + g_beta(r); every flow here uses one link.
    long double expect = 0.0L;
    for (double xs : x) expect += -1.0 / xs;
    for (std::size_t l = 0; l < 4; ++l) expect -= r[l] * x[l];
    expect += pf.log_partition;
    const double got = dual_objective(s, x, r, beta, u);
    CHECK(got == doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
}

TEST_CASE("dual objective guards the boundary") {
    const Scenario s = builtin_topology("a");
    const double v = dual_objective(s, {0.0, 0.1, 0.1, 0.1}, {0.0, 0.0, 0.0, 0.0}, 800.0,
                                    UtilityFunction::alpha2());
    CHECK(v == -std::numeric_limits<double>::infinity());
}

TEST_CASE("single link, single flow matches the 1-D bisection oracle") {
    const Scenario s = single_link_single_flow();
    const double beta = 2000.0;
    const NumSolution sol = solve_mp(s, beta, UtilityFunction::alpha2(), 1e-8);
    REQUIRE(sol.converged);
    CHECK(sol.kkt_residual <= 1e-8);
    // KKT: U'(x) = r and y(r) = x, i.e. y(r) - r^{-1/2} = 0 (increasing in r).
    auto gap = [&](double r) {
        const double y = 1.0 / (1.0 + std::exp(-beta * r));
        return -(y - 1.0 / std::sqrt(r)); // flip sign for the decreasing helper
    };
    const double r_ref = oracle::bisect_decreasing(gap, 1e-6, 100.0);
    const double x_ref = 1.0 / std::sqrt(r_ref);
    CHECK(sol.x_star[0] == doctest::Approx(x_ref).epsilon(1e-4));
    CHECK(sol.r_star[0] == doctest::Approx(r_ref).epsilon(1e-3));
}

TEST_CASE("no starvation on the flower at beta=2000") {
    const NumSolution sol = solve_mp(builtin_topology("a"), 2000.0,
                                     UtilityFunction::alpha2(), 1e-6);
    REQUIRE(sol.converged);
    for (double x : sol.x_star) CHECK(x > 0.0);
    double tau_sum = 0.0;
    for (double t : sol.tau_star.tau) tau_sum += t;
    CHECK(tau_sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("zero flows maximize entropy") {
    const Scenario s("zf", false, ConflictGraph(4, {{0, 1}, {1, 2}, {1, 3}, {2, 3}}),
                     {"1", "2", "3", "4"}, {}, {}, ParameterBlock{});
    const double beta = 800.0;
    const NumSolution sol = solve_mp(s, beta, UtilityFunction::alpha2(), 1e-8);
    REQUIRE(sol.converged);
    REQUIRE(sol.tau_star.tau.size() == 7);
    for (double t : sol.tau_star.tau) CHECK(t == doctest::Approx(1.0 / 7).epsilon(1e-8));
    CHECK(sol.objective == doctest::Approx(std::log(7.0) / beta).epsilon(1e-9));
}

TEST_CASE("strong duality and softmax consistency on the benchmarks") {
    for (const char* name : {"a", "b", "c", "d"}) {
        const Scenario s = builtin_topology(name);
        const double beta = 2000.0, tol = 1e-6;
        const NumSolution sol = solve_mp(s, beta, UtilityFunction::alpha2(), tol);
        REQUIRE(sol.converged);
        CHECK(sol.kkt_residual <= tol);
        const double dual = dual_objective(s, sol.x_star, sol.r_star, beta,
                                           UtilityFunction::alpha2());
        CHECK(std::abs(dual - sol.objective) <= 10 * tol);
        const ScheduleDistribution exact =
            stationary_distribution(*sol.family, TAVector(sol.r_star), beta);
        REQUIRE(exact.tau.size() == sol.tau_star.tau.size());
        for (std::size_t k = 0; k < exact.tau.size(); ++k)
            CHECK(sol.tau_star.tau[k] == doctest::Approx(exact.tau[k]).epsilon(1e-10));
    }
}

TEST_CASE("symmetric topologies get identical rates") {
    std::vector<Flow> flows;
    for (int i = 0; i < 3; ++i) flows.push_back(Flow{"f" + std::to_string(i), {i}, {}});
    const Scenario s("sym", false, ConflictGraph(3, {{0, 1}, {0, 2}, {1, 2}}),
                     {"a", "b", "c"}, {}, flows, ParameterBlock{});
    const NumSolution sol = solve_mp(s, 2000.0, UtilityFunction::alpha2(), 1e-8);
    REQUIRE(sol.converged);
    CHECK(std::abs(sol.x_star[0] - sol.x_star[1]) < 1e-8);
    CHECK(std::abs(sol.x_star[0] - sol.x_star[2]) < 1e-8);
}

TEST_CASE("solve_mp rejects wired scenarios") {
    CHECK_THROWS_AS(solve_mp(builtin_topology("e"), 2000.0, UtilityFunction::alpha2(), 1e-6),
                    std::invalid_argument);
}

TEST_CASE("utility gap identities") {
    const UtilityFunction u = UtilityFunction::alpha2();
    const std::vector<double> x_star = {0.4, 0.1, 0.3};
    CHECK(utility_gap(x_star, x_star, u) == doctest::Approx(0.0));
    std::vector<double> half = x_star;
    for (double& v : half) v *= 0.5;
    double expect = 0.0;
    for (double v : x_star) expect -= 1.0 / v;
    CHECK(utility_gap(half, x_star, u) == doctest::Approx(expect).epsilon(1e-12));
    // Starvation sensitivity: the gap dives as a rate approaches zero.
    std::vector<double> starved = x_star;
    starved[1] = 1e-9;
    CHECK(utility_gap(starved, x_star, u) < -1e8);
    CHECK_THROWS_AS(utility_gap({0.0, 0.1, 0.1}, x_star, u), std::domain_error);
}

TEST_CASE("utility function inverses") {
    const UtilityFunction u2 = UtilityFunction::alpha2();
    CHECK(u2.invert_marginal(4.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(u2.marginal(0.5) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(u2.value(2.0) == doctest::Approx(-0.5));

    const UtilityFunction u3 = UtilityFunction::alpha_fair(3.0);
    CHECK(u3.invert_marginal(8.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(u3.value(2.0) == doctest::Approx(std::pow(2.0, -2.0) / -2.0).epsilon(1e-12));

    const UtilityFunction u1 = UtilityFunction::alpha_fair(1.0); // log utility
    CHECK(u1.value(2.0) == doctest::Approx(std::log(2.0)));
    CHECK(u1.invert_marginal(0.25) == doctest::Approx(4.0).epsilon(1e-12));

    const UtilityFunction uc = UtilityFunction::custom(
        [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
    CHECK(uc.invert_marginal(0.2) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("penalty solver degenerates to the wireless solver without wired links") {
    const Scenario s = builtin_topology("a");
    const NumSolution mp = solve_mp(s, 800.0, UtilityFunction::alpha2(), 1e-8);
    const NumSolution ep = solve_ep(s, 800.0, 1e-8);
    REQUIRE(mp.converged);
    REQUIRE(ep.converged);
    CHECK(std::abs(mp.objective - ep.objective) <= 1e-10);
    for (std::size_t i = 0; i < mp.x_star.size(); ++i)
        CHECK(std::abs(mp.x_star[i] - ep.x_star[i]) <= 1e-10);
}

TEST_CASE("wired closed forms") {
    SUBCASE("one flow, capacity two") {
        const NumSolution sol = solve_ep(wired_only(1, 2.0), 800.0, 1e-8);
        REQUIRE(sol.converged);
        // 1/x^2 = (x-2)/x  =>  x^2 - 2x - 1 = 0  =>  x = 1 + sqrt(2).
        CHECK(sol.x_star[0] == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-4));
        auto phi_prime = [](double v) { return 1.0 / (v * v) - (v > 2.0 ? (v - 2.0) / v : 0.0); };
        const double x_ref = oracle::bisect_decreasing(phi_prime, 1e-3, 50.0);
        CHECK(sol.x_star[0] == doctest::Approx(x_ref).epsilon(1e-6));
    }
    SUBCASE("two symmetric flows, capacity two") {
        const NumSolution sol = solve_ep(wired_only(2, 2.0), 800.0, 1e-8);
        REQUIRE(sol.converged);
        const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
        CHECK(sol.x_star[0] == doctest::Approx(golden).epsilon(1e-4));
        CHECK(sol.x_star[1] == doctest::Approx(golden).epsilon(1e-4));
        CHECK(sol.p_w_star[0] == doctest::Approx((2 * golden - 2.0) / (2 * golden)).epsilon(1e-3));
    }
}

TEST_CASE("mixed wireless and wired benchmark keeps every flow alive") {
    const NumSolution sol = solve_ep(builtin_topology("e"), 2000.0, 1e-6);
    REQUIRE(sol.converged);
    REQUIRE(sol.x_star.size() == 3);
    for (double x : sol.x_star) CHECK(x > 0.0);
}

TEST_CASE("solution exports carry the essentials") {
    const Scenario s = builtin_topology("a");
    const NumSolution sol = solve_mp(s, 800.0, UtilityFunction::alpha2(), 1e-6);
    const std::string csv = solution_csv(sol, s);
    CHECK(csv.find("flow,f1,") != std::string::npos);
    CHECK(csv.find("link,1,") != std::string::npos);
    CHECK(csv.find("objective") != std::string::npos);
    const std::string rep = solution_report(sol, s);
    CHECK(rep.find("f1") != std::string::npos);
    CHECK(rep.find("kkt") != std::string::npos);
}
