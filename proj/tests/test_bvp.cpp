#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <flatzone/bvp.hpp>
#include <flatzone/diagnostics.hpp>

#include <cmath>
#include <vector>

using namespace flatzone;

namespace {
Transform unit_model() { return Transform(Nonlinearity::model_power(1.0, 1.0, 1.0)); }

BvpSolution solve_unit(double lambda, int m,
                       std::vector<long long> schedule = {100, 1000, 10000, 100000, 1000000,
                                                          10000000}) {
    const Transform t = unit_model();
    const Grid g = Grid::interval(1.0, m);
    const std::vector<double> f(g.m, 1.0);
    return solve_semilinear(t, lambda, f, g, std::move(schedule));
}
}  // namespace

TEST_CASE("touching datum scale reproduces the exact parabola") {
    const BvpSolution sol = solve_unit(6.0, 2001);
    REQUIRE(sol.converged);
    CHECK(sol.schedule_converged);
    CHECK(sol.residual_inf < 1e-6);
    CHECK(sol.L == doctest::Approx(0.5));
    CHECK(sol.n_final >= 1000000);

    const Grid& g = sol.grid;
    double uerr = 0.0, verr = 0.0;
    for (int i = 0; i < g.m; ++i) {
        const double s = g.node(i);
        const double ue = 1.0 - s * s;
        uerr = std::max(uerr, std::abs(sol.u[i] - ue));
        verr = std::max(verr, std::abs(sol.v[i] - (ue - 0.5 * ue * ue)));
    }
    CHECK(uerr <= 1e-4);   // second-order grid at m = 2001 gives ~2.5e-7
    CHECK(verr <= 1e-4);
    CHECK(sol.v[g.center_index()] == doctest::Approx(0.5).epsilon(1e-6));

    // exactly at the critical scale the flat set is at most the center node
    CHECK(sol.flat_set.size() <= 1);
}

TEST_CASE("subcritical scale stays strictly below the ceiling") {
    const BvpSolution sol = solve_unit(3.0, 801);
    REQUIRE(sol.converged);
    CHECK(sol.flat_set.empty());
    const double mu = *std::max_element(sol.u.begin(), sol.u.end());
    CHECK(mu < 1.0 - 1e-3);
    // v(0.5) for the half-scale problem is below the touching value 0.46875
    CHECK(sol.v[sol.grid.center_index()] < 0.5);
}

TEST_CASE("supercritical scale grows a flat zone of the predicted width") {
    const int m = 2001;
    const BvpSolution sol = solve_unit(12.0, m);
    REQUIRE(sol.converged);
    REQUIRE_FALSE(sol.flat_set.empty());

    const Grid& g = sol.grid;
    const double h = g.h();
    const double lo = g.node(sol.flat_set.first), hi = g.node(sol.flat_set.last);
    CHECK(lo == doctest::Approx(-hi).epsilon(1e-12));  // symmetric
    // half-width 1 - sqrt(6/12) = 0.29289321881
    const double predicted = 1.0 - std::sqrt(0.5);
    CHECK(std::abs(0.5 * (hi - lo) - predicted) <= 2.0 * h);

    // on the flat set u sits at the ceiling and v at the integrated level
    for (int i = sol.flat_set.first; i <= sol.flat_set.last; ++i) {
        CHECK(sol.u[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(sol.v[i] - sol.L) <= sol.delta_flat + 64 * 1e-16);
    }
    // off the flat set the solution is strictly below the ceiling
    CHECK(sol.u[sol.flat_set.first - 8] < 1.0);
    CHECK(sol.u[sol.flat_set.last + 8] < 1.0);
}

TEST_CASE("flat detection tolerance shrinks with the truncation schedule") {
    const BvpSolution rough = solve_unit(12.0, 801, {100, 1000});
    const BvpSolution fine = solve_unit(12.0, 801);
    REQUIRE(rough.converged);
    REQUIRE(fine.converged);
    CHECK(fine.delta_flat < rough.delta_flat);
    CHECK(fine.n_final > rough.n_final);
    // level distances move toward zero along the continuation
    REQUIRE(fine.level_distance.size() >= 2);
    CHECK(std::abs(fine.level_distance.back()) <
          std::abs(fine.level_distance.front()) + 1e-12);
}

TEST_CASE("single-stage truncations bracket the limit monotonically") {
    // g_n >= g pushes the semilinear solution up; raising the cap lowers it.
    const Transform t = unit_model();
    const Grid g = Grid::interval(1.0, 401);
    const std::vector<double> f(g.m, 1.0);
    double prev = 1e300;
    for (const long long n : {100LL, 1000LL, 10000LL, 100000LL}) {
        const BvpSolution sol = solve_semilinear(t, 6.0, f, g, {n});
        REQUIRE(sol.converged);
        const double center = sol.v[g.center_index()];
        CHECK(center < prev);
        CHECK(center > 0.5 - 1e-6);  // exact touching value from below never crossed far
        prev = center;
    }
    CHECK(prev == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("solutions increase with the datum scale") {
    const Transform t = unit_model();
    const Grid g = Grid::interval(1.0, 801);
    const std::vector<double> f(g.m, 1.0);
    BvpSolution prev;
    bool have_prev = false;
    for (const double lam : {2.0, 4.0, 6.0, 8.0, 10.0}) {
        BvpSolution sol = solve_semilinear(t, lam, f, g);
        REQUIRE(sol.converged);
        if (have_prev) CHECK(comparison_check(prev, sol));
        prev = std::move(sol);
        have_prev = true;
    }
}

TEST_CASE("ball geometry: radial flat solution") {
    const Transform t = unit_model();
    const Grid g = Grid::ball(3, 1.0, 1001);
    const std::vector<double> f(g.m, 1.0);
    const BvpSolution sol = solve_semilinear(t, 40.0, f, g);
    REQUIRE(sol.converged);
    REQUIRE_FALSE(sol.flat_set.empty());
    CHECK(sol.flat_set.first == 0);  // flat ball around the center
    // radially nonincreasing
    for (int i = 1; i < g.m; ++i) CHECK(sol.u[i] <= sol.u[i - 1] + 1e-12);
    CHECK(sol.u[g.m - 1] == 0.0);
}

TEST_CASE("interface residuals of the recovered quasilinear solution") {
    const Transform t = unit_model();
    const Grid g = Grid::interval(1.0, 2001);
    const std::vector<double> f(g.m, 1.0);

    SUBCASE("no flat zone: uniform second-order residual") {
        const BvpSolution sol = solve_semilinear(t, 6.0, f, g);
        REQUIRE(sol.converged);
        const QuasilinearResidual qr = quasilinear_residual(t, sol, 6.0, f);
        CHECK(qr.offplateau_residual_inf < 5e-3);
        CHECK(qr.plateau_nodes.empty());
    }

    SUBCASE("flat zone: plateau identity and thin collar") {
        const BvpSolution sol = solve_semilinear(t, 12.0, f, g);
        REQUIRE(sol.converged);
        const QuasilinearResidual qr = quasilinear_residual(t, sol, 12.0, f);
        CHECK(qr.offplateau_residual_inf < 5e-3);
        REQUIRE_FALSE(qr.plateau_nodes.empty());
        for (const double d : qr.plateau_density)
            CHECK(d == doctest::Approx(12.0).epsilon(0.01));
        // contact is quartic, so the near-touching collar spans about
        // (delta_touch/2)^(1/4) per side; it must stay that thin
        const int per_side = int(std::pow(qr.delta_touch / 2.0, 0.25) / g.h()) + 2;
        CHECK(qr.collar_nodes <= 2 * per_side + 2);
        CHECK(qr.delta_touch <= 1e-5);
    }
}

TEST_CASE("direct quasilinear solve cross-checks the transform route") {
    const Transform t = unit_model();
    const Grid g = Grid::interval(1.0, 401);
    const std::vector<double> f(g.m, 1.0);

    const BvpSolution semi = solve_semilinear(t, 3.0, f, g, {1000});
    const BvpSolution direct = solve_quasilinear_direct(t, 3.0, f, g, 1000);
    REQUIRE(semi.converged);
    REQUIRE(direct.converged);
    double gap = 0.0;
    for (int i = 0; i < g.m; ++i) gap = std::max(gap, std::abs(semi.u[i] - direct.u[i]));
    // both routes solve the same capped problem; the gap is pure Newton /
    // floating-point algebra, a few times the 1e-8 solve tolerance scaled
    // through the change of variables
    CHECK(gap < 3e-5);
}

TEST_CASE("input validation") {
    const Transform t = unit_model();
    const Grid g = Grid::interval(1.0, 101);
    const std::vector<double> f(g.m, 1.0);
    CHECK_THROWS_AS(solve_semilinear(t, 6.0, f, g, {100, 100}), std::invalid_argument);
    CHECK_THROWS_AS(solve_semilinear(t, 6.0, f, g, {1000, 100}), std::invalid_argument);
    CHECK_THROWS_AS(solve_semilinear(t, 6.0, std::vector<double>(7, 1.0), g),
                    std::invalid_argument);
    CHECK_THROWS_AS(solve_quasilinear_direct(t, -1.0, f, g, 1000), std::invalid_argument);
}
