#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bvp.hpp"
#include "grid.hpp"
#include "shooting.hpp"
#include "transform.hpp"

namespace flatzone {

// ---------------------------------------------------------------------------
// principal eigenvalue of the weighted problem -Lap v = lambda f v
// ---------------------------------------------------------------------------
struct EigenResult {
    double lambda1 = 0.0;
    std::vector<double> mode;  // full node vector, boundary zeros, sup-norm 1
    int iterations = 0;
};

// Rayleigh quotient of the pencil (A, diag(f)) under the symmetrizing weights:
// (phi' W A phi) / (phi' W F phi). phi is a full node vector; boundary entries
// are ignored (the operator sees homogeneous Dirichlet data).
inline double rayleigh_quotient(const std::vector<double>& f, const Grid& grid,
                                const std::vector<double>& phi) {
    detail::check_f(f, grid.m);
    if (int(phi.size()) != grid.m)
        throw std::invalid_argument("rayleigh_quotient: phi must have one value per node");
    const int n = grid.unknowns();
    std::vector<double> Asub, Adiag, Asup, x(n), Ax(n);
    grid.laplacian(Asub, Adiag, Asup);
    for (int k = 0; k < n; ++k) x[k] = phi[grid.node_of(k)];
    detail::apply_tridiag(Asub, Adiag, Asup, x, Ax);
    const std::vector<double> w = grid.symmetrizer();
    double num = 0.0, den = 0.0;
    for (int k = 0; k < n; ++k) {
        num += w[k] * x[k] * Ax[k];
        den += w[k] * f[grid.node_of(k)] * x[k] * x[k];
    }
    if (!(den > 0.0))
        throw std::domain_error("rayleigh_quotient: phi has no mass where f > 0");
    return num / den;
}

inline EigenResult principal_eigenvalue(const std::vector<double>& f, const Grid& grid,
                                        double tol_rel = 1e-10) {
    detail::check_f(f, grid.m);
    if (detail::inf_norm(f) == 0.0)
        throw std::invalid_argument("principal_eigenvalue: f must be positive somewhere");
    const int n = grid.unknowns();
    std::vector<double> Asub, Adiag, Asup;
    grid.laplacian(Asub, Adiag, Asup);
    const std::vector<double> w = grid.symmetrizer();
    std::vector<double> fu(n);
    for (int k = 0; k < n; ++k) fu[k] = f[grid.node_of(k)];

    std::vector<double> x(n, 1.0), y(n), Ax(n);
    double lambda = 0.0;
    int it = 0;
    for (; it < 10000; ++it) {
        for (int k = 0; k < n; ++k) y[k] = fu[k] * x[k];
        x = solve_tridiagonal(Asub, Adiag, Asup, y);
        const double nrm = detail::inf_norm(x);
        if (!(nrm > 0.0))
            throw std::runtime_error("principal_eigenvalue: iteration collapsed to zero");
        for (double& xv : x) xv /= nrm;
        detail::apply_tridiag(Asub, Adiag, Asup, x, Ax);
        double num = 0.0, den = 0.0;
        for (int k = 0; k < n; ++k) {
            num += w[k] * x[k] * Ax[k];
            den += w[k] * fu[k] * x[k] * x[k];
        }
        const double lam_new = num / den;
        if (it > 0 && std::abs(lam_new - lambda) <= tol_rel * std::abs(lam_new)) {
            lambda = lam_new;
            ++it;
            break;
        }
        lambda = lam_new;
    }
    EigenResult out;
    out.lambda1 = lambda;
    out.iterations = it;
    out.mode.assign(grid.m, 0.0);
    double mx = 0.0;
    for (int k = 0; k < n; ++k) mx = std::max(mx, std::abs(x[k]));
    for (int k = 0; k < n; ++k) out.mode[grid.node_of(k)] = x[k] / mx;
    return out;
}

// ---------------------------------------------------------------------------
// closed-form threshold bounds
// ---------------------------------------------------------------------------

// Upper bound for nonexistence: no solution (flat or not) exists once
//   lambda >= lambda1(f) e^{H(sigma)} psi(sigma).
// Meaningful only when H(sigma) is finite (h integrable at sigma); otherwise
// the bound is vacuous (+infinity) and a domain error is raised.
inline double nonexistence_bound(const Transform& t, const std::vector<double>& f,
                                 const Grid& grid) {
    const double Hs = t.source().H_sigma();
    if (!std::isfinite(Hs))
        throw std::domain_error(
            "nonexistence_bound: H(sigma) is infinite (h not integrable); no finite bound");
    return principal_eigenvalue(f, grid).lambda1 * std::exp(Hs) * t.L();
}

// Lower bound from the linear problem: with A z = f, any lambda below
// sigma / max z keeps the transformed solution below psi(sigma) (v <= lambda z
// by comparison, and psi(sigma) <= sigma), so solutions exist and are not
// flat.
inline double existence_lower_bound(const std::vector<double>& f, const Grid& grid,
                                    double sigma) {
    detail::check_f(f, grid.m);
    if (!(sigma > 0.0)) throw std::invalid_argument("existence_lower_bound: sigma must be > 0");
    const int n = grid.unknowns();
    std::vector<double> Asub, Adiag, Asup, rhs(n);
    grid.laplacian(Asub, Adiag, Asup);
    for (int k = 0; k < n; ++k) rhs[k] = f[grid.node_of(k)];
    const std::vector<double> z = solve_tridiagonal(Asub, Adiag, Asup, rhs);
    const double zm = detail::inf_norm(z);
    if (!(zm > 0.0))
        throw std::invalid_argument("existence_lower_bound: f must be positive somewhere");
    return sigma / zm;
}

// ---------------------------------------------------------------------------
// estimate_Lambda: bisect the flat/no-flat transition of the discrete solver
// ---------------------------------------------------------------------------
struct LambdaEstimate {
    double Lambda_hat = 0.0;
    double bracket_lo = 0.0, bracket_hi = 0.0;
    int predicate_calls = 0;
    bool converged = false;
    std::string failure_message;
};

namespace detail {
// deep schedule for the transition search: the flat-detection threshold
// delta_flat(n = 1e7) ~ 1e-14 keeps false positives out near the transition
inline const std::vector<long long>& lambda_search_schedule() {
    static const std::vector<long long> s{100, 1000, 10000, 100000, 1000000, 10000000};
    return s;
}
}  // namespace detail

inline LambdaEstimate estimate_Lambda(const Transform& t, const std::vector<double>& f,
                                      const Grid& grid, double lo = 0.0, double hi = 0.0,
                                      double tol_lambda = 1e-2) {
    detail::check_f(f, grid.m);
    if (!(tol_lambda > 0.0))
        throw std::invalid_argument("estimate_Lambda: tol_lambda must be > 0");
    if (!t.source().classify().sqrt_h_integrable)
        throw std::domain_error(
            "estimate_Lambda: sqrt(h) not integrable; flat solutions exist for no lambda");

    LambdaEstimate out;
    auto flat_at = [&](double lambda) {
        ++out.predicate_calls;
        BvpSolution sol =
            solve_semilinear(t, lambda, f, grid, detail::lambda_search_schedule());
        if (!sol.converged)
            throw std::runtime_error("estimate_Lambda: solver failed at lambda=" +
                                     std::to_string(lambda) + ": " + sol.failure_message);
        return !sol.flat_set.empty();
    };

    if (lo <= 0.0) lo = existence_lower_bound(f, grid, t.sigma());
    if (hi <= 0.0) hi = 4.0 * lo;

    // expand the bracket: lo must be flat-free, hi must be flat
    int guard = 0;
    while (flat_at(lo)) {
        lo *= 0.5;
        if (++guard > 10) {
            out.failure_message = "no flat-free lower bracket found";
            out.bracket_lo = lo;
            out.bracket_hi = hi;
            return out;
        }
    }
    guard = 0;
    while (!flat_at(hi)) {
        hi *= 2.0;
        if (++guard > 10) {
            out.failure_message = "no flat upper bracket found";
            out.bracket_lo = lo;
            out.bracket_hi = hi;
            return out;
        }
    }
    while (hi - lo > tol_lambda) {
        const double mid = 0.5 * (lo + hi);
        (flat_at(mid) ? hi : lo) = mid;
    }
    out.bracket_lo = lo;
    out.bracket_hi = hi;
    out.Lambda_hat = 0.5 * (lo + hi);
    out.converged = true;
    return out;
}

// ---------------------------------------------------------------------------
// combined threshold report
// ---------------------------------------------------------------------------
enum class ThresholdRegime { AlwaysExists, FiniteThreshold };

struct ThresholdReport {
    double lambda1 = 0.0;
    double H_sigma = 0.0;  // +infinity when h is not integrable
    double psi_sigma = 0.0;
    std::optional<double> lambda_ne_upper;        // present iff H_sigma finite
    std::optional<double> lambda_sub_certificate; // present for constant f on admissible h
    double lambda_lower_linear = 0.0;
    std::optional<LambdaEstimate> Lambda_hat;     // present when estimated
    ThresholdRegime regime = ThresholdRegime::FiniteThreshold;
};

inline ThresholdReport threshold_report(const Transform& t, const std::vector<double>& f,
                                        const Grid& grid, bool with_estimate = true,
                                        double tol_lambda = 1e-2) {
    detail::check_f(f, grid.m);
    ThresholdReport out;
    out.lambda1 = principal_eigenvalue(f, grid).lambda1;
    out.H_sigma = t.source().H_sigma();
    out.psi_sigma = t.L();
    out.lambda_lower_linear = existence_lower_bound(f, grid, t.sigma());
    const auto cls = t.source().classify();
    out.regime = cls.sqrt_h_integrable ? ThresholdRegime::FiniteThreshold
                                       : ThresholdRegime::AlwaysExists;
    if (std::isfinite(out.H_sigma))
        out.lambda_ne_upper = out.lambda1 * std::exp(out.H_sigma) * out.psi_sigma;

    const bool f_const =
        std::all_of(f.begin(), f.end(), [&](double v) { return v == f.front(); });
    if (f_const && f.front() > 0.0 && cls.sqrt_h_integrable) {
        const int N = grid.radial() ? grid.N : 1;
        const RadialSubsolution sub = radial_subsolution(t, N, grid.R);
        out.lambda_sub_certificate = sub.lambda_sub / f.front();
    }

    if (with_estimate && out.regime == ThresholdRegime::FiniteThreshold)
        out.Lambda_hat = estimate_Lambda(t, f, grid, 0.0, 0.0, tol_lambda);
    return out;
}

}  // namespace flatzone
