#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <flatzone/thresholds.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace flatzone;

namespace {
constexpr double kPi = 3.14159265358979323846;
Transform model(double gamma) { return Transform(Nonlinearity::model_power(1.0, gamma, 1.0)); }
}  // namespace

TEST_CASE("principal eigenvalue: interval and ball references") {
    SUBCASE("interval (-1, 1): pi^2 / 4") {
        const Grid g = Grid::interval(1.0, 2001);
        const std::vector<double> f(g.m, 1.0);
        const EigenResult e = principal_eigenvalue(f, g);
        CHECK(std::abs(e.lambda1 - kPi * kPi / 4.0) / (kPi * kPi / 4.0) <= 1e-6);
        REQUIRE(int(e.mode.size()) == g.m);
        CHECK(e.mode[0] == 0.0);
        CHECK(e.mode[g.m - 1] == 0.0);
        for (int i = 1; i + 1 < g.m; ++i) CHECK(e.mode[i] > 0.0);
    }
    SUBCASE("unit ball in three dimensions: pi^2") {
        const Grid g = Grid::ball(3, 1.0, 2001);
        const std::vector<double> f(g.m, 1.0);
        const EigenResult e = principal_eigenvalue(f, g);
        CHECK(std::abs(e.lambda1 - kPi * kPi) / (kPi * kPi) <= 1e-6);
    }
    SUBCASE("scaling: interval half-width two divides the eigenvalue by four") {
        const Grid g = Grid::interval(2.0, 1001);
        const std::vector<double> f(g.m, 1.0);
        const EigenResult e = principal_eigenvalue(f, g);
        CHECK(e.lambda1 == doctest::Approx(kPi * kPi / 16.0).epsilon(1e-5));
    }
}

TEST_CASE("random trial functions never beat the principal eigenvalue") {
    const Grid g = Grid::interval(1.0, 501);
    const std::vector<double> f(g.m, 1.0);
    const double lambda1 = principal_eigenvalue(f, g).lambda1;

    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> phi(g.m, 0.0);
        for (int i = 1; i + 1 < g.m; ++i) phi[i] = dist(rng);
        const double rq = rayleigh_quotient(f, g, phi);
        CHECK(rq >= lambda1 * (1.0 - 1e-10));
    }
}

TEST_CASE("nonexistence bound: closed form when the coefficient is integrable") {
    const Grid g = Grid::interval(1.0, 2001);
    const std::vector<double> f(g.m, 1.0);

    // gamma = 1/2: lambda1 e^{H(sigma)} psi(sigma) = (pi^2 / 8)(e^2 + 1)
    const Transform t = model(0.5);
    const double bound = nonexistence_bound(t, f, g);
    const double closed = kPi * kPi / 8.0 * (std::exp(2.0) + 1.0);
    CHECK(bound == doctest::Approx(closed).epsilon(1e-5));

    // not integrable: no finite bound exists
    CHECK_THROWS_AS(nonexistence_bound(model(1.0), f, g), std::domain_error);
    CHECK_THROWS_AS(nonexistence_bound(model(2.0), f, g), std::domain_error);
}

TEST_CASE("linear lower bound from the comparison datum") {
    const Grid g = Grid::interval(1.0, 2001);
    const std::vector<double> f(g.m, 1.0);
    // -w'' = 1 on (-1,1) peaks at 1/2, so the bound is sigma / (1/2) = 2
    CHECK(existence_lower_bound(f, g, 1.0) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(existence_lower_bound(f, g, 0.5) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("threshold estimate: bisection on flat-zone appearance") {
    const Grid g = Grid::interval(1.0, 2001);
    const std::vector<double> f(g.m, 1.0);
    const Transform t = model(1.0);

    SUBCASE("unit interval: threshold at the critical touching scale 6") {
        const LambdaEstimate e = estimate_Lambda(t, f, g);
        REQUIRE(e.converged);
        CHECK(std::abs(e.Lambda_hat - 6.0) <= 0.01);
        CHECK(e.bracket_lo <= e.Lambda_hat);
        CHECK(e.Lambda_hat <= e.bracket_hi);
        CHECK(e.bracket_hi - e.bracket_lo <= 0.01 + 1e-12);
        CHECK(e.predicate_calls >= 5);
    }

    SUBCASE("doubling the radius divides the threshold by four") {
        const Grid g2 = Grid::interval(2.0, 2001);
        const std::vector<double> f2(g2.m, 1.0);
        const LambdaEstimate e = estimate_Lambda(t, f2, g2);
        REQUIRE(e.converged);
        CHECK(std::abs(e.Lambda_hat - 1.5) <= 0.01);
    }

    SUBCASE("estimate is stable under grid refinement") {
        const Grid g1 = Grid::interval(1.0, 1001);
        const std::vector<double> f1(g1.m, 1.0);
        const double tol = 1e-2;
        const LambdaEstimate a = estimate_Lambda(t, f1, g1, 0.0, 0.0, tol);
        const LambdaEstimate b = estimate_Lambda(t, f, g, 0.0, 0.0, tol);
        REQUIRE(a.converged);
        REQUIRE(b.converged);
        CHECK(std::abs(a.Lambda_hat - b.Lambda_hat) <= 4.0 * tol);
    }

    SUBCASE("validation") {
        CHECK_THROWS_AS(estimate_Lambda(t, f, g, 0.0, 0.0, -1.0), std::invalid_argument);
    }
}

TEST_CASE("threshold report: strong blow-up keeps every scale solvable") {
    const Grid g = Grid::interval(1.0, 1001);
    const std::vector<double> f(g.m, 1.0);
    const ThresholdReport r = threshold_report(model(2.0), f, g);
    CHECK(r.regime == ThresholdRegime::AlwaysExists);
    CHECK(std::isinf(r.H_sigma));
    CHECK_FALSE(r.lambda_ne_upper.has_value());
    CHECK_FALSE(r.lambda_sub_certificate.has_value());
    CHECK_FALSE(r.Lambda_hat.has_value());
    CHECK(r.lambda1 == doctest::Approx(kPi * kPi / 4.0).epsilon(1e-5));
}

TEST_CASE("threshold report: borderline blow-up with certificates") {
    const Grid g = Grid::interval(1.0, 2001);
    const std::vector<double> f(g.m, 1.0);
    const ThresholdReport r = threshold_report(model(1.0), f, g);
    CHECK(r.regime == ThresholdRegime::FiniteThreshold);
    CHECK(std::isinf(r.H_sigma));
    CHECK(r.psi_sigma == doctest::Approx(0.5));
    CHECK_FALSE(r.lambda_ne_upper.has_value());  // coefficient not integrable
    REQUIRE(r.lambda_sub_certificate.has_value());
    CHECK(*r.lambda_sub_certificate == doctest::Approx(12.0).epsilon(1e-6));
    CHECK(r.lambda_lower_linear == doctest::Approx(2.0).epsilon(1e-6));
    REQUIRE(r.Lambda_hat.has_value());
    CHECK(std::abs(r.Lambda_hat->Lambda_hat - 6.0) <= 0.01);
    // ordering: linear lower bound <= estimate <= subsolution certificate
    CHECK(r.lambda_lower_linear <= r.Lambda_hat->Lambda_hat + 1e-2);
    CHECK(r.Lambda_hat->Lambda_hat <= *r.lambda_sub_certificate + 1e-2);
}

TEST_CASE("threshold report: integrable blow-up gives the full chain") {
    const Grid g = Grid::interval(1.0, 2001);
    const std::vector<double> f(g.m, 1.0);
    const double tol = 1e-2;
    const ThresholdReport r = threshold_report(model(0.5), f, g, true, tol);
    CHECK(r.regime == ThresholdRegime::FiniteThreshold);
    CHECK(r.H_sigma == doctest::Approx(2.0).epsilon(1e-10));
    REQUIRE(r.lambda_ne_upper.has_value());
    REQUIRE(r.lambda_sub_certificate.has_value());
    REQUIRE(r.Lambda_hat.has_value());
    const double hat = r.Lambda_hat->Lambda_hat;
    // lower bound <= estimate <= nonexistence bound, with bracket slack
    CHECK(r.lambda_lower_linear <= hat + tol);
    CHECK(hat <= *r.lambda_ne_upper + tol);
    CHECK(hat <= *r.lambda_sub_certificate + tol);
    CHECK(*r.lambda_ne_upper ==
          doctest::Approx(kPi * kPi / 8.0 * (std::exp(2.0) + 1.0)).epsilon(1e-5));
}

TEST_CASE("threshold report: intermediate exponent regression anchor") {
    // For 1 < gamma < 2 the detector operates at the representation limit of
    // the transformed variable; the estimate is pinned as a regression anchor.
    const Grid g = Grid::interval(1.0, 1001);
    const std::vector<double> f(g.m, 1.0);
    const ThresholdReport r = threshold_report(model(1.5), f, g);
    CHECK(r.regime == ThresholdRegime::FiniteThreshold);
    REQUIRE(r.Lambda_hat.has_value());
    CHECK(r.Lambda_hat->Lambda_hat > 10.0);
    CHECK(r.Lambda_hat->Lambda_hat < 11.3);
    CHECK(r.lambda_lower_linear <= r.Lambda_hat->Lambda_hat);
}

TEST_CASE("report without the bisection estimate") {
    const Grid g = Grid::interval(1.0, 801);
    const std::vector<double> f(g.m, 1.0);
    const ThresholdReport r = threshold_report(model(1.0), f, g, /*with_estimate=*/false);
    CHECK_FALSE(r.Lambda_hat.has_value());
    CHECK(r.regime == ThresholdRegime::FiniteThreshold);
}
