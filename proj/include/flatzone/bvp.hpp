#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "transform.hpp"

namespace flatzone {

struct FlatSet {
    int first = 0, last = -1;  // node indices, inclusive; empty when last < first
    bool empty() const { return last < first; }
    int size() const { return empty() ? 0 : last - first + 1; }
};

// Discrete solution of -Lap v = lambda f g(v) (and its quasilinear pullback
// u = psi^{-1}(v)) on a Grid, plus solver telemetry. Node vectors span the
// full grid, boundary zeros included.
struct BvpSolution {
    Grid grid;
    double lambda = 0.0;
    std::vector<double> v, u;
    FlatSet flat_set;
    std::vector<long long> n_schedule_used;
    std::vector<int> newton_iterations;     // per schedule level
    std::vector<double> level_distance;     // sup-distance to the previous level
    bool schedule_converged = false;        // last inter-level distance < tol
    double residual_inf = 0.0;              // final discrete semilinear residual
    double L = 0.0, L_n = 0.0, delta_flat = 0.0;
    long long n_final = 0;
    bool converged = false;
    std::string failure_message;
};

namespace detail {

// Damped Newton with Armijo backtracking on the residual sup-norm. The system
// is F(x) = A x - rhs(x) with A tridiagonal and rhs'(x) diagonal, so the
// Jacobian stays tridiagonal. rhs must accept any real argument: iterates are
// unconstrained, which keeps the line search honest (projection onto a box
// can pin the sup-norm at a clamped node and stall the search). Returns true
// on convergence; x holds the last iterate either way.
template <class Rhs, class RhsPrime>
bool damped_newton(const std::vector<double>& Asub, const std::vector<double>& Adiag,
                   const std::vector<double>& Asup, Rhs&& rhs, RhsPrime&& rhs_prime,
                   double x_scale, double tol_abs, double scale_hint, int max_iter,
                   std::vector<double>& x, int& iters, double& res_inf, std::string& msg) {
    const int n = int(x.size());
    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<double> F(n), Jsub(n), Jdiag(n), Jsup(n), step(n), xt(n), Ft(n);

    auto residual = [&](const std::vector<double>& z, std::vector<double>& out) {
        apply_tridiag(Asub, Adiag, Asup, z, out);
        for (int k = 0; k < n; ++k) out[k] -= rhs(k, z[k]);
    };

    residual(x, F);
    res_inf = inf_norm(F);
    iters = 0;
    for (; iters < max_iter; ++iters) {
        double maxdiag = 0.0;
        for (int k = 0; k < n; ++k) {
            Jsub[k] = Asub[k];
            Jsup[k] = Asup[k];
            Jdiag[k] = Adiag[k] - rhs_prime(k, x[k]);
            maxdiag = std::max(maxdiag, std::abs(Jdiag[k]));
        }
        const double floor_abs =
            16.0 * eps * (maxdiag * std::max(inf_norm(x), x_scale) + scale_hint);
        const double tol_eff = std::max(tol_abs, floor_abs);
        if (res_inf <= tol_eff) return true;

        for (int k = 0; k < n; ++k) step[k] = -F[k];
        step = solve_tridiagonal(Jsub, Jdiag, Jsup, step);

        double t = 1.0;
        bool accepted = false;
        for (int half = 0; half <= 50; ++half) {
            for (int k = 0; k < n; ++k) xt[k] = x[k] + t * step[k];
            residual(xt, Ft);
            const double rt = inf_norm(Ft);
            if (rt <= (1.0 - 1e-4 * t) * res_inf) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            msg = "line search stagnated after 50 step halvings";
            return false;
        }
        double dx = 0.0;
        for (int k = 0; k < n; ++k) dx = std::max(dx, std::abs(xt[k] - x[k]));
        x.swap(xt);
        F.swap(Ft);
        res_inf = inf_norm(F);
        if (dx <= 4.0 * eps * std::max(inf_norm(x), x_scale)) return true;  // machine-level stagnation
    }
    msg = "Newton did not converge within the iteration cap";
    return false;
}

inline void check_f(const std::vector<double>& f, int m) {
    if (int(f.size()) != m) throw std::invalid_argument("f must have one value per grid node");
    for (double t : f)
        if (!(t >= 0.0)) throw std::invalid_argument("f must be nonnegative at every node");
}

}  // namespace detail

enum class InitialIterate { LinearSolve, Zero };

// Detect the maximal contiguous run of nodes with v >= L - delta_flat around
// the global maximizer, and pull the solution back through psi^{-1}.
inline void back_map(const Transform& t, BvpSolution& sol) {
    const int m = sol.grid.m;
    sol.u.assign(m, 0.0);
    const double L = t.L();
    for (int i = 0; i < m; ++i) sol.u[i] = t.eval_psi_inv(std::min(sol.v[i], L));
    // Contact needs the touching profile to close at finite radius, which
    // requires sqrt(h) integrable at sigma. When it is not, no flat zone
    // exists at any lambda; v grazing the ceiling is then a double-precision
    // saturation of the transform, not a dead core, so report the set empty.
    const IntegrabilityReport cls = t.source().classify();
    if (!cls.inconclusive && !cls.sqrt_h_integrable) {
        sol.flat_set = FlatSet{};
        return;
    }
    int imax = 0;
    for (int i = 1; i < m; ++i)
        if (sol.v[i] > sol.v[imax]) imax = i;
    const double cut = L - sol.delta_flat;
    if (sol.v[imax] < cut) {
        sol.flat_set = FlatSet{};
        return;
    }
    int a = imax, b = imax;
    while (a > 0 && sol.v[a - 1] >= cut) --a;
    while (b + 1 < m && sol.v[b + 1] >= cut) ++b;
    sol.flat_set = FlatSet{a, b};
}

// Monotone truncation schedule for -Lap v = lambda f g(v): solve each level's
// Lipschitz problem with g_n by damped Newton, warm-starting from the previous
// level. The whole schedule always runs; early exit on small inter-level
// distance is unsound near the critical lambda, where the flat-zone threshold
// delta_flat shrinks with n faster than the iterates move.
inline BvpSolution solve_semilinear(const Transform& t, double lambda,
                                    const std::vector<double>& f, const Grid& grid,
                                    std::vector<long long> n_schedule = {100, 1000, 10000, 100000,
                                                                         1000000, 10000000},
                                    double tol = 1e-8,
                                    InitialIterate init = InitialIterate::LinearSolve) {
    if (!(lambda > 0.0)) throw std::invalid_argument("solve_semilinear: lambda must be positive");
    if (n_schedule.empty()) throw std::invalid_argument("solve_semilinear: empty n_schedule");
    for (std::size_t i = 1; i < n_schedule.size(); ++i)
        if (n_schedule[i] <= n_schedule[i - 1])
            throw std::invalid_argument("solve_semilinear: n_schedule must be increasing");
    detail::check_f(f, grid.m);

    BvpSolution sol;
    sol.grid = grid;
    sol.lambda = lambda;
    sol.L = t.L();

    const int n_unk = grid.unknowns();
    std::vector<double> Asub, Adiag, Asup;
    grid.laplacian(Asub, Adiag, Asup);
    std::vector<double> fu(n_unk);
    for (int k = 0; k < n_unk; ++k) fu[k] = f[grid.node_of(k)];
    const double fmax = detail::inf_norm(fu);
    const double scale = lambda * std::max(1.0, fmax);

    std::vector<double> x(n_unk, 0.0);
    if (init == InitialIterate::LinearSolve) {
        std::vector<double> rhs(n_unk);
        for (int k = 0; k < n_unk; ++k) rhs[k] = lambda * fu[k];
        x = solve_tridiagonal(Asub, Adiag, Asup, rhs);
    }

    sol.converged = true;
    std::vector<double> prev = x;
    TruncatedNonlinearity tr;
    for (long long n : n_schedule) {
        tr = truncate(t, n);
        int iters = 0;
        double res = 0.0;
        std::string msg;
        const bool ok = detail::damped_newton(
            Asub, Adiag, Asup,
            [&](int k, double vk) { return lambda * fu[k] * tr.g_n(vk); },
            [&](int k, double vk) { return lambda * fu[k] * tr.g_n_prime(vk); }, tr.L_n,
            tol * std::max(1.0, scale), scale, 200, x, iters, res, msg);
        sol.n_schedule_used.push_back(n);
        sol.newton_iterations.push_back(iters);
        double dist = 0.0;
        for (int k = 0; k < n_unk; ++k) dist = std::max(dist, std::abs(x[k] - prev[k]));
        sol.level_distance.push_back(dist);
        sol.residual_inf = res;
        prev = x;
        if (!ok) {
            sol.converged = false;
            sol.failure_message = "truncation level n=" + std::to_string(n) + ": " + msg;
            break;
        }
    }
    sol.n_final = sol.n_schedule_used.back();
    sol.L_n = tr.L_n;
    sol.schedule_converged =
        sol.level_distance.size() >= 2 && sol.converged && sol.level_distance.back() < tol;
    sol.delta_flat = std::max(2.0 * truncation_overshoot(t, tr),
                              32.0 * std::numeric_limits<double>::epsilon() * sol.L);

    sol.v.assign(grid.m, 0.0);
    for (int k = 0; k < n_unk; ++k) sol.v[grid.node_of(k)] = x[k];
    back_map(t, sol);
    return sol;
}

// Residual of the original quasilinear equation evaluated on the pulled-back
// solution, partitioned by distance to the ceiling:
//  - off-plateau nodes: -Lap_h u + h(u)|D_h u|^2 - lambda f, sup-norm reported;
//  - flat-interior nodes: the defect density lambda f + Lap_h u (= lambda f
//    when u is exactly constant there);
//  - a thin collar of near-touching nodes (v within delta_touch of L, not
//    flat): excluded from the sup and reported separately. psi^{-1} expands a
//    v-error e to an O(sqrt(e)) u-error near the ceiling, so the quasilinear
//    residual there measures roundoff amplification, not solver error.
struct QuasilinearResidual {
    double offplateau_residual_inf = 0.0;
    std::vector<int> plateau_nodes;         // flat-interior node indices
    std::vector<double> plateau_density;    // lambda f + Lap_h u at those nodes
    double collar_residual_inf = 0.0;
    int collar_nodes = 0;
    double delta_touch = 0.0;
};

inline QuasilinearResidual quasilinear_residual(const Transform& t, const BvpSolution& sol,
                                                double lambda, const std::vector<double>& f) {
    const Grid& g = sol.grid;
    detail::check_f(f, g.m);
    QuasilinearResidual out;
    out.delta_touch = 1e-6 * sol.L;

    const int n_unk = g.unknowns();
    std::vector<double> Asub, Adiag, Asup, uu(n_unk), Au(n_unk);
    g.laplacian(Asub, Adiag, Asup);
    for (int k = 0; k < n_unk; ++k) uu[k] = sol.u[g.node_of(k)];
    detail::apply_tridiag(Asub, Adiag, Asup, uu, Au);  // boundary values are zero

    const double hs = g.h();
    auto in_flat = [&](int i) { return !sol.flat_set.empty() && i >= sol.flat_set.first && i <= sol.flat_set.last; };
    const double sg = t.sigma();

    for (int k = 0; k < n_unk; ++k) {
        const int i = g.node_of(k);
        if (in_flat(i)) {
            const bool left_flat = g.radial() && i == 0 ? in_flat(1) : in_flat(i - 1);
            const bool right_flat = in_flat(i + 1);
            if (left_flat && right_flat) {
                out.plateau_nodes.push_back(i);
                out.plateau_density.push_back(lambda * f[i] - Au[k]);
            }
            continue;
        }
        if (sol.v[i] >= sol.L - out.delta_touch) {
            // near-touching collar
            double du = (g.radial() && i == 0)
                            ? 0.0
                            : (sol.u[i + 1] - sol.u[i - 1]) / (2.0 * hs);
            const double ui = std::min(sol.u[i], sg * (1.0 - 1e-14));
            const double r = Au[k] + t.source().h(ui) * du * du - lambda * f[i];
            out.collar_residual_inf = std::max(out.collar_residual_inf, std::abs(r));
            ++out.collar_nodes;
            continue;
        }
        double du = (g.radial() && i == 0) ? 0.0 : (sol.u[i + 1] - sol.u[i - 1]) / (2.0 * hs);
        const double r = Au[k] + t.source().h(sol.u[i]) * du * du - lambda * f[i];
        out.offplateau_residual_inf = std::max(out.offplateau_residual_inf, std::abs(r));
    }
    return out;
}

// Newton solve of the truncated quasilinear system directly in the u variable
// (cross-check of the transform route): -Lap_h u + h_n(u)|D_h u|^2 = lambda f.
inline BvpSolution solve_quasilinear_direct(const Transform& t, double lambda,
                                            const std::vector<double>& f, const Grid& grid,
                                            long long n, double tol = 1e-8) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("solve_quasilinear_direct: lambda must be positive");
    detail::check_f(f, grid.m);
    const TruncatedNonlinearity tr = truncate(t, n);

    BvpSolution sol;
    sol.grid = grid;
    sol.lambda = lambda;
    sol.L = t.L();
    sol.L_n = tr.L_n;
    sol.n_final = n;
    sol.n_schedule_used = {n};

    const int n_unk = grid.unknowns();
    std::vector<double> Asub, Adiag, Asup;
    grid.laplacian(Asub, Adiag, Asup);
    std::vector<double> fu(n_unk);
    for (int k = 0; k < n_unk; ++k) fu[k] = f[grid.node_of(k)];
    const double fmax = detail::inf_norm(fu);
    const double scale = lambda * std::max(1.0, fmax);
    const double hs = grid.h();
    // iterates live below the level where the truncated transform saturates:
    // psi_n maps [0, sigma_n + 40/n] onto all of [0, L_n] but an e^{-40} sliver
    const double u_cap = tr.sigma_n + 40.0 / double(n);

    std::vector<double> x(n_unk);
    {
        std::vector<double> rhs(n_unk);
        for (int k = 0; k < n_unk; ++k) rhs[k] = lambda * fu[k];
        x = solve_tridiagonal(Asub, Adiag, Asup, rhs);
        for (double& xv : x) xv = std::min(xv, u_cap);
    }

    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<double> F(n_unk), Jsub(n_unk), Jdiag(n_unk), Jsup(n_unk), step(n_unk), xt(n_unk),
        Ft(n_unk);
    auto du_at = [&](const std::vector<double>& z, int k) {
        if (grid.radial() && k == 0) return 0.0;
        const double zl = k > 0 ? z[k - 1] : 0.0;
        const double zr = k + 1 < n_unk ? z[k + 1] : 0.0;
        return (zr - zl) / (2.0 * hs);
    };
    auto residual = [&](const std::vector<double>& z, std::vector<double>& out) {
        detail::apply_tridiag(Asub, Adiag, Asup, z, out);
        for (int k = 0; k < n_unk; ++k) {
            const double du = du_at(z, k);
            out[k] += tr.h_n(z[k]) * du * du - lambda * fu[k];
        }
    };
    auto clampv = [&](std::vector<double>& z) {
        for (double& zv : z) zv = std::min(u_cap, std::max(0.0, zv));
    };

    residual(x, F);
    double res = detail::inf_norm(F);
    int iters = 0;
    bool ok = false;
    std::string msg;
    for (; iters < 1000; ++iters) {
        double maxdiag = 0.0;
        for (int k = 0; k < n_unk; ++k) {
            const double du = du_at(x, k);
            const double hn = tr.h_n(x[k]);
            Jdiag[k] = Adiag[k] + tr.h_n_prime(x[k]) * du * du;
            Jsub[k] = Asub[k] - hn * du / hs;
            Jsup[k] = Asup[k] + hn * du / hs;
            maxdiag = std::max(maxdiag, std::abs(Jdiag[k]));
        }
        const double tol_eff = std::max(tol * std::max(1.0, scale),
                                        16.0 * eps * (maxdiag * std::max(detail::inf_norm(x), 1.0) + scale));
        if (res <= tol_eff) {
            ok = true;
            break;
        }
        for (int k = 0; k < n_unk; ++k) step[k] = -F[k];
        step = solve_tridiagonal(Jsub, Jdiag, Jsup, step);
        double tstep = 1.0;
        bool accepted = false;
        for (int half = 0; half <= 50; ++half) {
            for (int k = 0; k < n_unk; ++k) xt[k] = x[k] + tstep * step[k];
            clampv(xt);
            residual(xt, Ft);
            if (detail::inf_norm(Ft) <= (1.0 - 1e-4 * tstep) * res) {
                accepted = true;
                break;
            }
            tstep *= 0.5;
        }
        if (!accepted) {
            msg = "line search stagnated after 50 step halvings";
            break;
        }
        double dx = 0.0;
        for (int k = 0; k < n_unk; ++k) dx = std::max(dx, std::abs(xt[k] - x[k]));
        x.swap(xt);
        F.swap(Ft);
        res = detail::inf_norm(F);
        if (dx <= 4.0 * eps * std::max(detail::inf_norm(x), 1.0)) {
            ok = true;
            break;
        }
    }
    sol.newton_iterations = {iters};
    sol.residual_inf = res;
    sol.converged = ok;
    if (!ok) sol.failure_message = "direct quasilinear solve: " + (msg.empty() ? std::string("no convergence") : msg);

    sol.u.assign(grid.m, 0.0);
    sol.v.assign(grid.m, 0.0);
    for (int k = 0; k < n_unk; ++k) sol.u[grid.node_of(k)] = x[k];
    const double sg = t.sigma();
    for (int i = 0; i < grid.m; ++i) sol.v[i] = t.eval_psi(std::min(sol.u[i], sg));
    sol.delta_flat = std::max(2.0 * truncation_overshoot(t, tr),
                              32.0 * std::numeric_limits<double>::epsilon() * sol.L);
    // flat detection on v, same rule as the transform route
    int imax = 0;
    for (int i = 1; i < grid.m; ++i)
        if (sol.v[i] > sol.v[imax]) imax = i;
    if (sol.v[imax] >= sol.L - sol.delta_flat) {
        int a = imax, b = imax;
        while (a > 0 && sol.v[a - 1] >= sol.L - sol.delta_flat) --a;
        while (b + 1 < grid.m && sol.v[b + 1] >= sol.L - sol.delta_flat) ++b;
        sol.flat_set = FlatSet{a, b};
    }
    return sol;
}

}  // namespace flatzone
