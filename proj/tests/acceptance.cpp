// Acceptance gate: nine end-to-end checks of the library against closed-form
// targets. Prints one PASS/FAIL line per check with its wall time and exits
// nonzero if any check fails. All tolerances are pinned here, in code.
#include <flatzone/bvp.hpp>
#include <flatzone/diagnostics.hpp>
#include <flatzone/shooting.hpp>
#include <flatzone/thresholds.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace flatzone;

namespace {

constexpr double kPi = 3.14159265358979323846;

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

// budget_s <= 0 disables the wall-time gate.
void criterion(int k, const char* label, double budget_s,
               const std::function<std::string()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    try {
        detail = body();
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    const double secs = seconds_since(t0);
    if (ok && budget_s > 0.0 && secs > budget_s) {
        ok = false;
        detail = "over wall-time budget of " + num(budget_s) + "s";
    }
    std::printf("%s criterion %d: %s (%s) [%.2fs]\n", ok ? "PASS" : "FAIL", k, label,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
}

Transform model(double A, double gamma, double sigma) {
    return Transform(Nonlinearity::model_power(A, gamma, sigma));
}

std::vector<double> ones(int m) { return std::vector<double>(m, 1.0); }

}  // namespace

int main() {
    // 1. Borderline blow-up at the touching scale: the solved profile must
    //    reproduce the exact parabola 1 - s^2 on [-1, 1] to 1e-4.
    criterion(1, "touching-scale solve matches the exact parabola", 5.0, [] {
        const Transform t = model(1, 1, 1);
        const Grid g = Grid::interval(1.0, 2001);
        const BvpSolution sol = solve_semilinear(t, 6.0, ones(g.m), g);
        require(sol.converged, "solver did not converge: " + sol.failure_message);
        double uerr = 0.0;
        for (int i = 0; i < g.m; ++i) {
            const double s = g.node(i);
            uerr = std::max(uerr, std::abs(sol.u[i] - (1.0 - s * s)));
        }
        require(uerr <= 1e-4, "max|u - (1-s^2)| = " + num(uerr) + " > 1e-4");
        return "max|u - (1-s^2)| = " + num(uerr);
    });

    // 2. Touching radius closed form: R_L(lambda) = sqrt(6/lambda) for the
    //    borderline model, verified to 1e-8 at three parameter values.
    criterion(2, "touching radius matches sqrt(6/lambda)", 1.0, [] {
        const Transform t = model(1, 1, 1);
        double worst = 0.0;
        for (const double lam : {1.5, 6.0, 24.0}) {
            const double r = radius(t, t.L(), lam);
            worst = std::max(worst, std::abs(r - std::sqrt(6.0 / lam)));
        }
        require(worst <= 1e-8, "worst radius error " + num(worst) + " > 1e-8");
        return "worst error " + num(worst) + " over lambda in {1.5, 6, 24}";
    });

    // 3. Existence-threshold estimator: Lambda is 6 on the unit interval and
    //    scales to 1.5 on the half-width-2 interval; each estimate within
    //    0.01 and under 60 s.
    criterion(3, "threshold estimate hits 6 (R=1) and 1.5 (R=2)", 0.0, [] {
        const Transform t = model(1, 1, 1);
        std::ostringstream d;
        const double targets[2] = {6.0, 1.5};
        const double radii[2] = {1.0, 2.0};
        for (int c = 0; c < 2; ++c) {
            const Grid g = Grid::interval(radii[c], 2001);
            const auto t0 = std::chrono::steady_clock::now();
            const LambdaEstimate est = estimate_Lambda(t, ones(g.m), g);
            const double secs = seconds_since(t0);
            require(est.converged, "estimate did not converge: " + est.failure_message);
            const double err = std::abs(est.Lambda_hat - targets[c]);
            require(err <= 0.01, "R=" + num(radii[c]) + ": |Lambda_hat - " +
                                     num(targets[c]) + "| = " + num(err) + " > 0.01");
            require(secs <= 60.0, "R=" + num(radii[c]) + " estimate took " + num(secs) +
                                      "s > 60s");
            if (c) d << ", ";
            d << "R=" << radii[c] << ": " << est.Lambda_hat << " (" << num(secs) << "s)";
        }
        return d.str();
    });

    // 4. Principal eigenvalue: pi^2/4 on the unit interval and pi^2 on the
    //    unit 3-ball, each to 1e-6 relative at m=2001.
    criterion(4, "principal eigenvalues match pi^2/4 and pi^2", 0.0, [] {
        const Grid gi = Grid::interval(1.0, 2001);
        const double l1 = principal_eigenvalue(ones(gi.m), gi).lambda1;
        const double rel1 = std::abs(l1 - kPi * kPi / 4.0) / (kPi * kPi / 4.0);
        require(rel1 <= 1e-6, "interval rel error " + num(rel1) + " > 1e-6");
        const Grid gb = Grid::ball(3, 1.0, 2001);
        const double l3 = principal_eigenvalue(ones(gb.m), gb).lambda1;
        const double rel3 = std::abs(l3 - kPi * kPi) / (kPi * kPi);
        require(rel3 <= 1e-6, "3-ball rel error " + num(rel3) + " > 1e-6");
        return "interval rel " + num(rel1) + ", 3-ball rel " + num(rel3);
    });

    // 5. Integrable blow-up bound chain: linear lower bound <= estimated
    //    threshold <= closed-form nonexistence bound (pi^2/8)(e^2 + 1),
    //    with the estimator tolerance as slack.
    criterion(5, "integrable-h bound chain brackets the estimate", 0.0, [] {
        const Transform t = model(1, 0.5, 1);
        const Grid g = Grid::interval(1.0, 2001);
        const double tol = 1e-2;
        const ThresholdReport rep = threshold_report(t, ones(g.m), g, true, tol);
        require(rep.Lambda_hat.has_value() && rep.Lambda_hat->converged,
                "threshold estimate missing or unconverged");
        const double hat = rep.Lambda_hat->Lambda_hat;
        require(rep.lambda_ne_upper.has_value(), "nonexistence bound missing");
        const double closed = (kPi * kPi / 8.0) * (std::exp(2.0) + 1.0);
        const double ne = *rep.lambda_ne_upper;
        require(std::abs(ne - closed) <= 1e-5 * closed,
                "nonexistence bound " + num(ne) + " != closed form " + num(closed));
        require(rep.lambda_lower_linear <= hat + tol,
                "lower bound " + num(rep.lambda_lower_linear) + " above estimate " + num(hat));
        require(hat <= ne + tol,
                "estimate " + num(hat) + " above nonexistence bound " + num(ne));
        return num(rep.lambda_lower_linear) + " <= " + num(hat) + " <= " + num(ne);
    });

    // 6. Touching curvature: predicted u''(0) = -lambda/3 for the borderline
    //    1-D model; the quartic center fit of the lambda=6 solve must land
    //    within 5% of -2.
    criterion(6, "predicted and fitted touching curvature agree", 0.0, [] {
        const Nonlinearity nl = Nonlinearity::model_power(1, 1, 1);
        for (const double lam : {3.0, 6.0, 9.0}) {
            const AsymptoticsPrediction p = curvature_asymptotics(nl, lam, 1.0, 1);
            require(p.case_tag == ContactCase::II, "expected the borderline case tag");
            require(std::abs(p.predicted_u_second_deriv_at_0 + lam / 3.0) <= 1e-12,
                    "prediction at lambda=" + num(lam) + " is " +
                        num(p.predicted_u_second_deriv_at_0) + ", want " + num(-lam / 3.0));
        }
        const Transform t = model(1, 1, 1);
        const Grid g = Grid::interval(1.0, 2001);
        const BvpSolution sol = solve_semilinear(t, 6.0, ones(g.m), g);
        require(sol.converged, "solver did not converge");
        const TouchingFit fit = fit_touching_behavior(sol, t);
        require(fit.applicable, "center fit inapplicable: " + fit.reason);
        const double err = std::abs(fit.u_second_deriv - (-2.0));
        require(err <= 0.05 * 2.0, "fitted u''(0) = " + num(fit.u_second_deriv) +
                                       " misses -2 by " + num(err) + " (>5%)");
        return "fit u''(0) = " + num(fit.u_second_deriv) + " vs -2";
    });

    // 7. Flat-zone structure under refinement: interior plateau density stays
    //    within 1% of lambda = 12, the edge flux is below 10h at every level,
    //    and the flux decays with at least first order across two refinements.
    criterion(7, "plateau density 12 +/- 1%, flux <= 10h, order >= 1", 0.0, [] {
        const Transform t = model(1, 1, 1);
        struct Level {
            int m;
            long long nfin;
        };
        const std::vector<Level> levels = {{2005, 1000000}, {4009, 4000000}, {8025, 16000000}};
        std::vector<double> log_h, log_flux;
        std::ostringstream d;
        for (const Level& lv : levels) {
            std::vector<long long> sched = {100,        1000,         10000, 100000,
                                            lv.nfin / 10, lv.nfin};
            std::sort(sched.begin(), sched.end());
            sched.erase(std::unique(sched.begin(), sched.end()), sched.end());
            const Grid g = Grid::interval(1.0, lv.m);
            const std::vector<double> f = ones(g.m);
            const BvpSolution sol = solve_semilinear(t, 12.0, f, g, sched);
            require(sol.converged, "m=" + std::to_string(lv.m) + ": solver did not converge");
            require(!sol.flat_set.empty(), "m=" + std::to_string(lv.m) + ": no flat zone");
            const QuasilinearResidual qr = quasilinear_residual(t, sol, 12.0, f);
            int interior = 0, bad = 0;
            for (std::size_t k = 0; k < qr.plateau_nodes.size(); ++k) {
                const int i = qr.plateau_nodes[k];
                if (i < sol.flat_set.first + 2 || i > sol.flat_set.last - 2) continue;
                ++interior;
                if (std::abs(qr.plateau_density[k] - 12.0) > 0.01 * 12.0) ++bad;
            }
            require(interior > 0, "m=" + std::to_string(lv.m) + ": no interior plateau nodes");
            require(bad == 0, "m=" + std::to_string(lv.m) + ": " + std::to_string(bad) +
                                  " of " + std::to_string(interior) +
                                  " interior densities off 12 by more than 1%");
            const double flux = plateau_flux(sol);
            require(flux <= 10.0 * g.h(), "m=" + std::to_string(lv.m) + ": flux " +
                                              num(flux) + " > 10h = " + num(10.0 * g.h()));
            log_h.push_back(std::log(g.h()));
            log_flux.push_back(std::log(flux));
            d << "m=" << lv.m << ": flux " << num(flux) << "; ";
        }
        double xb = 0, yb = 0;
        for (std::size_t k = 0; k < log_h.size(); ++k) {
            xb += log_h[k];
            yb += log_flux[k];
        }
        xb /= double(log_h.size());
        yb /= double(log_h.size());
        double sxy = 0, sxx = 0;
        for (std::size_t k = 0; k < log_h.size(); ++k) {
            sxy += (log_h[k] - xb) * (log_flux[k] - yb);
            sxx += (log_h[k] - xb) * (log_h[k] - xb);
        }
        const double order = sxy / sxx;
        require(order >= 1.0, "flux decay order " + num(order) + " < 1");
        d << "order " << num(order);
        return d.str();
    });

    // 8. Property suite across the blow-up families, 30 s per family:
    //    transform round trip, g' against finite differences, the shooting
    //    first integral, comparison monotonicity in lambda, truncation
    //    monotonicity, and the gradient-energy bound.
    criterion(8, "transform/shooting/solver properties across gamma", 0.0, [] {
        std::ostringstream d;
        for (const double gamma : {0.5, 1.0, 1.5, 2.0}) {
            const auto t0 = std::chrono::steady_clock::now();
            const std::string tag = "gamma=" + num(gamma) + ": ";
            const Transform t = model(1, gamma, 1);
            const double L = t.L();

            // psi round trip, capped where e^{-H} stays representable (the
            // stronger families saturate psi at L before s reaches sigma)
            const double s_edge = gamma <= 1.0 ? 0.999 : (gamma <= 1.5 ? 0.98 : 0.93);
            for (int k = 0; k <= 64; ++k) {
                const double s = s_edge * double(k) / 64.0;
                require(std::abs(t.eval_psi_inv(t.eval_psi(s)) - s) <= 1e-9,
                        tag + "psi round trip fails at s=" + num(s));
            }
            // g' against a centered difference
            for (int k = 1; k < 48; ++k) {
                const double v = 0.9 * L * double(k) / 48.0;
                const double e = 1e-7 * L;
                const double fd = (t.eval_g(v + e) - t.eval_g(v - e)) / (2.0 * e);
                require(std::abs(t.eval_g_prime(v) - fd) <= 1e-5 * (1.0 + std::abs(fd)),
                        tag + "g' vs finite difference fails at v=" + num(v));
            }
            // shooting first integral at lambda = 3
            const double ell = gamma < 2.0 ? L : 0.9 * L;
            const ShootingSolution tr = trace(t, ell, 3.0, 65);
            const double GE = t.eval_G(ell);
            for (const auto& smp : tr.samples) {
                const double lhs = smp.v_prime * smp.v_prime;
                const double rhs = 2.0 * 3.0 * (GE - t.eval_G(smp.v));
                require(std::abs(lhs - rhs) <= 1e-8,
                        tag + "first integral off by " + num(std::abs(lhs - rhs)));
            }
            // solutions increase with lambda
            const Grid g = Grid::interval(1.0, 401);
            const std::vector<double> f = ones(g.m);
            const std::vector<long long> sched = {100, 1000, 10000, 100000};
            const BvpSolution s1 = solve_semilinear(t, 1.0, f, g, sched);
            const BvpSolution s2 = solve_semilinear(t, 2.0, f, g, sched);
            const BvpSolution s3 = solve_semilinear(t, 3.0, f, g, sched);
            require(s1.converged && s2.converged && s3.converged,
                    tag + "a comparison solve did not converge");
            require(comparison_check(s1, s2) && comparison_check(s2, s3),
                    tag + "solutions not monotone in lambda");
            // truncation monotone: ceiling decreasing toward L, and the
            // single-stage center value non-increasing in n
            double prev_Ln = std::numeric_limits<double>::infinity();
            for (const long long n : {100LL, 1000LL, 10000LL, 100000LL, 1000000LL}) {
                const TruncatedNonlinearity tn = truncate(t, n);
                require(tn.L_n >= L - 1e-14, tag + "truncated ceiling fell below L");
                require(tn.L_n < prev_Ln + 1e-15, tag + "truncated ceiling not decreasing");
                prev_Ln = tn.L_n;
            }
            // Successive single-stage solutions decrease nodewise, up to
            // 1e-9 slack: where the stage no longer bites, the two discrete
            // problems coincide and the comparison sees only the Newton
            // stopping noise (~1e-11 at tol 1e-8).
            std::vector<double> prev_v;
            for (const long long n : {100LL, 1000LL, 10000LL}) {
                const BvpSolution sn = solve_semilinear(t, 3.0, f, g, {n});
                require(sn.converged, tag + "single-stage solve did not converge");
                if (!prev_v.empty())
                    for (std::size_t i = 0; i < prev_v.size(); ++i)
                        require(sn.v[i] <= prev_v[i] + 1e-9,
                                tag + "truncation stage raised v at a node");
                prev_v = sn.v;
            }
            // gradient energy controlled by the datum mass
            const EnergyCheck en = energy_bound_check(s2, 2.0, f, t.source());
            require(en.holds && en.margin > 0.0, tag + "energy bound fails");

            const double secs = seconds_since(t0);
            require(secs <= 30.0, tag + "family took " + num(secs) + "s > 30s");
            d << "gamma=" << gamma << " ok (" << num(secs) << "s); ";
        }
        return d.str();
    });

    // 9. Strong blow-up regime: classified always-solvable, the level radii
    //    diverge along ell = L(1 - 2^-k) (strictly increasing, above 10 by
    //    k = 16), and no flat set appears for lambda up to 1e3.
    criterion(9, "strong blow-up: always exists, radii diverge, no flat", 0.0, [] {
        const Transform t = model(1, 2, 1);
        const Grid g = Grid::interval(1.0, 1001);
        const std::vector<double> f = ones(g.m);
        const ThresholdReport rep = threshold_report(t, f, g, true, 1e-2);
        require(rep.regime == ThresholdRegime::AlwaysExists, "regime is not AlwaysExists");
        require(!rep.Lambda_hat.has_value(), "unexpected threshold estimate");
        require(!rep.lambda_ne_upper.has_value(), "unexpected nonexistence bound");

        const double L = t.L();
        double prev = 0.0, r16 = 0.0;
        for (int k = 1; k <= 16; ++k) {
            const double ell = L * (1.0 - std::ldexp(1.0, -k));
            const double r = radius(t, ell, 0.01);
            require(std::isfinite(r), "level radius not finite at k=" + std::to_string(k));
            require(r > prev, "level radii not strictly increasing at k=" + std::to_string(k));
            prev = r;
            if (k == 16) r16 = r;
        }
        require(r16 > 10.0, "radius at k=16 is " + num(r16) + ", expected > 10");

        for (const double lam : {10.0, 100.0, 1000.0}) {
            const BvpSolution sol = solve_semilinear(t, lam, f, g);
            require(sol.converged, "lambda=" + num(lam) + ": solver did not converge");
            require(sol.flat_set.empty(),
                    "lambda=" + num(lam) + ": spurious flat set of " +
                        std::to_string(sol.flat_set.size()) + " nodes");
        }
        return "radius(k=16) = " + num(r16) + ", no flat through lambda=1000";
    });

    std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                failures);
    return failures == 0 ? 0 : 1;
}
