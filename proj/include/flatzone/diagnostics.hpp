#pragma once

// Post-hoc analyses of computed solutions: predicted vs. measured behavior at
// a touching point, plateau edge flux, defect-measure density, the truncated
// energy bound, and ordered-solution comparison.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bvp.hpp"
#include "grid.hpp"
#include "nonlinearity.hpp"
#include "quadrature.hpp"
#include "transform.hpp"

namespace flatzone {

// ---------------------------------------------------------------------------
// contact trichotomy

// Contact order at a touching point, classified by the one-sided derivative of
// 1/h at sigma: divergent (case I), finite negative (case II), zero (case III).
enum class ContactCase { I, II, III };

inline const char* to_string(ContactCase c) {
    switch (c) {
        case ContactCase::I: return "I";
        case ContactCase::II: return "II";
        default: return "III";
    }
}

struct AsymptoticsPrediction {
    ContactCase case_tag = ContactCase::I;
    double predicted_u_second_deriv_at_0 = 0.0;  // cases I and II; 0 in case III
    std::optional<double> predicted_G_slope;     // case III only: -sqrt(Lambda f0)
};

// Predicted touching-point behavior for the model power blow-up in dimension N
// at parameter Lambda with datum value f0 at the center. Requires gamma < 2,
// i.e. sqrt(h) integrable up to sigma; beyond that no touching solution forms
// and the prediction is undefined.
inline AsymptoticsPrediction curvature_asymptotics(const Nonlinearity& nl, double Lambda,
                                                   double f0, int N) {
    if (nl.kind() != Nonlinearity::Kind::ModelPower)
        throw std::invalid_argument("curvature_asymptotics: model power nonlinearity required");
    if (N < 1) throw std::invalid_argument("curvature_asymptotics: N must be positive");
    const double gamma = nl.gamma();
    if (gamma >= 2.0)
        throw std::domain_error(
            "curvature_asymptotics: inapplicable, sqrt(h) is not integrable up to sigma");
    AsymptoticsPrediction out;
    if (gamma < 1.0) {
        out.case_tag = ContactCase::I;
        out.predicted_u_second_deriv_at_0 = -Lambda * f0 / double(N);
    } else if (gamma == 1.0) {
        // (1/h)'(sigma) = -gamma/A, so the curvature denominator is N + 2A/gamma.
        out.case_tag = ContactCase::II;
        out.predicted_u_second_deriv_at_0 = -Lambda * f0 / (double(N) + 2.0 * nl.A() / gamma);
    } else {
        out.case_tag = ContactCase::III;
        out.predicted_u_second_deriv_at_0 = 0.0;
        out.predicted_G_slope = -std::sqrt(Lambda * f0);
    }
    return out;
}

// Primitive of sqrt(h): the transformed length in which a case-III profile
// leaves its touching point linearly. Finite at u = sigma exactly when the
// blow-up is milder than (sigma-s)^{-2}.
inline double sqrt_h_primitive(const Nonlinearity& nl, double u) {
    const double sg = nl.sigma();
    u = std::min(u, sg);
    if (u <= 0.0) return 0.0;
    if (nl.kind() == Nonlinearity::Kind::ModelPower) {
        const double sA = std::sqrt(nl.A());
        if (nl.gamma() == 2.0) {
            if (u >= sg) return std::numeric_limits<double>::infinity();
            return sA * std::log(sg / (sg - u));
        }
        const double p = 1.0 - 0.5 * nl.gamma();
        if (p < 0.0 && u >= sg) return std::numeric_limits<double>::infinity();
        return sA * (std::pow(sg, p) - std::pow(sg - u, p)) / p;
    }
    // Tabulated: integrate sqrt(hd) in the distance d = sigma - s, with d =
    // tau^4 flattening the endpoint singularity enough for the quadrature.
    const double d0 = sg - u;
    return adaptive_simpson(
        [&](double tau) {
            const double t3 = tau * tau * tau;
            return 4.0 * t3 * std::sqrt(nl.hd(t3 * tau));
        },
        std::pow(d0, 0.25), std::pow(sg, 0.25), 1e-9);
}

// ---------------------------------------------------------------------------
// shared node-level helpers

namespace detail {

// Finite-volume weights for the domain measure (r^{N-1} dr on a ball, plain dr
// on an interval): each node integrates its own cell exactly.
inline std::vector<double> quadrature_weights(const Grid& g) {
    std::vector<double> w(g.m, 0.0);
    const double hs = g.h();
    if (!g.radial()) {
        for (int i = 0; i < g.m; ++i) w[i] = hs;
        w[0] = w[g.m - 1] = 0.5 * hs;
        return w;
    }
    const double N = double(g.N);
    auto cell = [&](double a, double b) { return (std::pow(b, N) - std::pow(a, N)) / N; };
    w[0] = cell(0.0, 0.5 * hs);
    for (int i = 1; i + 1 < g.m; ++i) w[i] = cell(g.node(i) - 0.5 * hs, g.node(i) + 0.5 * hs);
    w[g.m - 1] = cell(g.R - 0.5 * hs, g.R);
    return w;
}

// Discrete derivative: centered inside, one-sided at domain boundaries, zero at
// a radial center (even reflection).
inline double node_derivative(const Grid& g, const std::vector<double>& u, int i) {
    const double hs = g.h();
    if (i == 0) return g.radial() ? 0.0 : (u[1] - u[0]) / hs;
    if (i == g.m - 1) return (u[i] - u[i - 1]) / hs;
    return (u[i + 1] - u[i - 1]) / (2.0 * hs);
}

// h in the truncated form a solve at level n actually used; flat nodes carry
// u = sigma exactly, where the raw h is already outside its domain.
inline double h_truncated(const Nonlinearity& nl, double u, double cap) {
    if (u >= nl.sigma()) return cap;
    return std::min(nl.h(std::max(u, 0.0)), cap);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// measured touching behavior

// Measured counterpart of curvature_asymptotics, extracted from a computed
// solution by least squares over the 5% of nodes nearest the center (at least
// 8). Non-throwing: a solution that never comes near touching yields an
// inapplicable report with the reason filled in.
struct TouchingFit {
    bool applicable = false;
    std::string reason;
    double u_second_deriv = 0.0;    // twice the r^2 coefficient of the even fit
    double u_center_fit = 0.0;      // fitted value at r = 0
    std::optional<double> G_slope;  // slope of sqrt_h_primitive(u) vs |r|
    int fit_nodes = 0;
};

inline TouchingFit fit_touching_behavior(const BvpSolution& sol, const Transform& t) {
    TouchingFit out;
    const Grid& g = sol.grid;
    if (int(sol.v.size()) != g.m || int(sol.u.size()) != g.m) {
        out.reason = "solution samples missing";
        return out;
    }
    const double L = t.L();
    if (sol.v[g.center_index()] < L - 1e-3 * L) {
        out.reason = "solution not near touching: v(0) < L - 1e-3 L";
        return out;
    }
    int count = std::max(8, int(std::lround(0.05 * double(g.m))));
    count = std::min(count, g.m);
    std::vector<std::pair<double, double>> pts;  // (|r|, u)
    pts.reserve(count);
    if (g.radial()) {
        for (int i = 0; i < count; ++i) pts.emplace_back(g.node(i), sol.u[i]);
    } else {
        const int c = g.center_index();
        int lo = std::max(0, c - count / 2);
        int hi = std::min(g.m - 1, lo + count - 1);
        for (int i = lo; i <= hi; ++i) pts.emplace_back(std::abs(g.node(i)), sol.u[i]);
    }
    out.fit_nodes = int(pts.size());

    // Radial profiles are even, so fit u ~ c0 + c2 r^2.
    double s0 = 0, s2 = 0, s4 = 0, b0 = 0, b2 = 0;
    for (const auto& [r, u] : pts) {
        const double r2 = r * r;
        s0 += 1.0;
        s2 += r2;
        s4 += r2 * r2;
        b0 += u;
        b2 += r2 * u;
    }
    const double det = s0 * s4 - s2 * s2;
    if (!(det > 0.0)) {
        out.reason = "degenerate fit window";
        return out;
    }
    out.u_center_fit = (s4 * b0 - s2 * b2) / det;
    out.u_second_deriv = 2.0 * (s0 * b2 - s2 * b0) / det;
    out.applicable = true;

    const Nonlinearity& nl = t.source();
    if (nl.kind() == Nonlinearity::Kind::ModelPower && nl.gamma() > 1.0 && nl.gamma() < 2.0) {
        // The transformed length leaves the contact set linearly, but only
        // where the solve resolves the distance to sigma: nodes whose v sits
        // within a few ulp of L (or inside the flat set) carry no contact
        // depth. Fit the slope over the first resolved stretch going outward.
        const double floor_tol = 64.0 * std::numeric_limits<double>::epsilon() * L;
        const FlatSet& fs = sol.flat_set;
        auto resolved = [&](int i) {
            if (!fs.empty() && i >= fs.first && i <= fs.last) return false;
            return sol.v[i] < L - floor_tol;
        };
        double n = 0, sr = 0, srr = 0, sy = 0, sry = 0;
        int taken = 0;
        const int c = g.center_index();
        for (int i = c; i < g.m && taken < count; ++i) {
            if (!resolved(i)) continue;
            const double r = std::abs(g.node(i));
            const double y = sqrt_h_primitive(nl, sol.u[i]);
            n += 1.0;
            sr += r;
            srr += r * r;
            sy += y;
            sry += r * y;
            ++taken;
        }
        const double den = n * srr - sr * sr;
        if (taken >= 8 && den > 0.0) out.G_slope = (n * sry - sr * sy) / den;
    }
    return out;
}

// ---------------------------------------------------------------------------
// plateau flux

// Largest one-sided derivative magnitude of u at a plateau edge, taken from
// the non-flat side. The normal flux of a genuine dead core vanishes, so this
// should decay at least linearly under mesh refinement.
inline double plateau_flux(const BvpSolution& sol) {
    const Grid& g = sol.grid;
    const FlatSet& fs = sol.flat_set;
    if (fs.empty()) throw std::domain_error("plateau_flux: inapplicable, flat set is empty");
    if (fs.size() < 3)
        throw std::domain_error("plateau_flux: inapplicable, plateau interior is empty");
    if (fs.first == 0 && fs.last == g.m - 1)
        throw std::domain_error("plateau_flux: inapplicable, no nodes outside the plateau");
    const double hs = g.h();
    double flux = 0.0;
    if (fs.first > 0)
        flux = std::max(flux, std::abs(sol.u[fs.first] - sol.u[fs.first - 1]) / hs);
    if (fs.last < g.m - 1)
        flux = std::max(flux, std::abs(sol.u[fs.last + 1] - sol.u[fs.last]) / hs);
    return flux;
}

// ---------------------------------------------------------------------------
// defect measure

struct DefectMeasure {
    std::vector<double> density;  // one value per node
    double total_mass = 0.0;      // density integrated with the cell weights
};

// Nodewise density of the measure the gradient term generates: lambda f on the
// plateau interior, h(u)|D_h u|^2 elsewhere. Off the plateau edge h is
// evaluated in the truncated form the solve actually used, since flat nodes
// carry u = sigma exactly where raw h diverges.
inline DefectMeasure defect_measure(const BvpSolution& sol, double lambda,
                                    const std::vector<double>& f, const Nonlinearity& nl) {
    const Grid& g = sol.grid;
    detail::check_f(f, g.m);
    DefectMeasure out;
    out.density.assign(g.m, 0.0);
    const auto w = detail::quadrature_weights(g);
    const FlatSet& fs = sol.flat_set;
    const double cap =
        sol.n_final > 0 ? double(sol.n_final) : std::numeric_limits<double>::infinity();
    auto flat_interior = [&](int i) {
        if (fs.empty() || i < fs.first || i > fs.last) return false;
        const bool left = g.radial() && i == 0 ? fs.last >= 1 : i - 1 >= fs.first;
        return left && i + 1 <= fs.last;
    };
    for (int i = 0; i < g.m; ++i) {
        double d;
        if (flat_interior(i)) {
            d = lambda * f[i];
        } else {
            const double du = detail::node_derivative(g, sol.u, i);
            d = detail::h_truncated(nl, sol.u[i], cap) * du * du;
        }
        out.density[i] = d;
        out.total_mass += d * w[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// energy bound

struct EnergyCheck {
    double gradient_energy = 0.0;  // sum of h_n(u) |D_h u|^2 over the cells
    double datum_mass = 0.0;       // sum of lambda f over the cells
    double margin = 0.0;           // datum_mass - gradient_energy
    bool holds = false;
};

// The truncated gradient energy never exceeds the mass of the datum; verified
// with the same cell weights as defect_measure, with 1% slack for the
// discretization.
inline EnergyCheck energy_bound_check(const BvpSolution& sol, double lambda,
                                      const std::vector<double>& f, const Nonlinearity& nl) {
    const Grid& g = sol.grid;
    detail::check_f(f, g.m);
    EnergyCheck out;
    const auto w = detail::quadrature_weights(g);
    const double cap =
        sol.n_final > 0 ? double(sol.n_final) : std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.m; ++i) {
        const double du = detail::node_derivative(g, sol.u, i);
        out.gradient_energy += detail::h_truncated(nl, sol.u[i], cap) * du * du * w[i];
        out.datum_mass += lambda * f[i] * w[i];
    }
    out.margin = out.datum_mass - out.gradient_energy;
    out.holds = out.gradient_energy <= out.datum_mass * 1.01 + 1e-12;
    return out;
}

// ---------------------------------------------------------------------------
// ordered comparison

// Solutions at ordered parameters must be nodewise ordered. Requires matching
// discretizations (the grids must describe the same nodes) and a.lambda <=
// b.lambda; the nonlinearity is assumed shared, since solutions do not carry
// it.
inline bool comparison_check(const BvpSolution& a, const BvpSolution& b) {
    if (a.grid.geometry != b.grid.geometry || a.grid.m != b.grid.m || a.grid.N != b.grid.N ||
        a.grid.R != b.grid.R)
        throw std::invalid_argument("comparison_check: grids differ");
    if (a.u.size() != b.u.size())
        throw std::invalid_argument("comparison_check: sample counts differ");
    if (a.lambda > b.lambda)
        throw std::invalid_argument("comparison_check: first argument must have the smaller lambda");
    for (std::size_t i = 0; i < a.u.size(); ++i)
        if (a.u[i] > b.u[i] + 1e-8) return false;
    return true;
}

}  // namespace flatzone
