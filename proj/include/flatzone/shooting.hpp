#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "quadrature.hpp"
#include "transform.hpp"

namespace flatzone {

// One point of a radial profile: v(s) with v' = dv/ds, s the distance from the
// profile top (center of the support).
struct ShootingSample {
    double s = 0.0, v = 0.0, v_prime = 0.0;
};

struct ShootingSolution {
    double ell = 0.0, lambda = 0.0, R_ell = 0.0;
    std::vector<ShootingSample> samples;  // s increasing, v decreasing from ell to 0
};

namespace detail {

// Desingularized energy integral
//   W(d) = e^{2 Hd(d)} (G(psi(sigma - d_floor)) - G(psi(sigma - d)))
//        = int_lo^d exp(-2 (Hd(tau) - Hd(d))) dtau,  lo >= d_floor.
// The exponent is <= 0 throughout (Hd decreases), so nothing overflows even
// where e^{-Hd} alone would underflow. Since hd decreases in d, the integrand
// is below e^{-45} once d - tau > 22.5/hd(d); the window is clipped there.
inline double energy_window(const Nonlinearity& nl, double d, double d_floor) {
    if (!(d > d_floor)) return 0.0;
    const double hd_d = nl.hd(d);
    const double width = 22.5 / hd_d;
    // Laplace regime: when the decay window is vastly narrower than d, the
    // integrand is e^{-2 hd(d) u} in u = d - tau to machine accuracy, so the
    // window integrates in closed form to 1/(2 hd) with a -hd'/(2 hd^2)
    // relative correction (|corr| <= ~3e-8 at the switch point). Below
    // width ~ 1e-6 d the window also approaches the spacing of adjacent
    // doubles around d, where direct quadrature returns only rounding noise.
    if (width < 1e-6 * d && d - width > d_floor)
        return (1.0 - nl.hd_prime(d) / (2.0 * hd_d * hd_d)) / (2.0 * hd_d);
    const double Hd_d = nl.Hd(d);
    const double lo = std::max(d_floor, d - width);
    const double Hsig = nl.H_sigma();
    auto f = [&](double tau) {
        if (tau <= 0.0)
            return std::isfinite(Hsig) ? std::exp(-2.0 * (Hsig - Hd_d)) : 0.0;
        if (tau >= d) return 1.0;
        return std::exp(-2.0 * nl.Hd_diff(tau, d));
    };
    return adaptive_simpson(f, lo, d, 1e-12);
}

// Substitution exponent p for d = d_floor + tau^p at the touching level: large
// enough that the arclength integrand p tau^{p-1} / sqrt(W(tau^p)) vanishes at
// tau = 0 and the H-differences stay smooth in tau. W(d) ~ d^omega near zero
// with omega = max(1, gamma), giving the exponent p(1 - omega/2) - 1 >= 1; the
// second clause keeps tau^{p(1-gamma)} regular for gamma != 1.
inline int arc_substitution_power(double gamma_eff) {
    const double omega = std::max(1.0, gamma_eff);
    int p = 4;
    auto ok = [&](int q) {
        if (q * (1.0 - omega / 2.0) < 2.0) return false;
        if (gamma_eff != 1.0 && q * std::abs(1.0 - gamma_eff) < 2.0) return false;
        return true;
    };
    while (p < 64 && !ok(p)) p += 2;
    return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// radius: half-width R(ell, lambda) of the radial profile that starts flat at
// level ell and falls to zero, from the first integral
//   v'(s) = -sqrt(2 lambda (G(ell) - G(v))).
// In the distance coordinate d (v = psi(sigma - d)) the arclength element is
// dd / sqrt(2 lambda W(d)) with W the desingularized energy above; d = d_m +
// tau^p removes the root singularity at the top. Exact in lambda: R scales as
// lambda^{-1/2}. At ell = L the radius is finite iff sqrt(h) is integrable;
// otherwise +infinity is returned.
// ---------------------------------------------------------------------------

namespace detail {

// distance from the top of the level-ell profile down to depth d_upper
inline double arc_length_to_depth(const Transform& t, double ell, double lambda,
                                  double d_upper) {
    const auto& nl = t.source();
    const double d_m = t.d_of_ell(ell);
    if (!(d_upper > d_m)) return 0.0;
    int p = 2;
    if (ell >= t.L()) {
        const auto cls = nl.classify();
        p = arc_substitution_power(cls.gamma_effective.value_or(1.0));
    }
    const double sg = t.sigma();
    auto F = [&](double tau) {
        if (tau <= 0.0) return p == 2 ? 2.0 : 0.0;
        const double d = std::min(sg, d_m + std::pow(tau, double(p)));
        const double W = energy_window(nl, d, d_m);
        return W > 0.0 ? double(p) * std::pow(tau, double(p - 1)) / std::sqrt(W) : 0.0;
    };
    const double tau_max = std::pow(d_upper - d_m, 1.0 / double(p));
    return adaptive_simpson(F, 0.0, tau_max, 1e-11) / std::sqrt(2.0 * lambda);
}

// Dense sampling of the touching profile (ell = L) for interpolation: sample
// points uniform in the substitution coordinate tau (d = tau^p), which grades
// the arclength spacing quadratically toward the profile top. Chebyshev levels
// in v put their first sample far past the quartic top, and an interpolant
// built there is too crude for second differences. Values are exact per
// sample: v = L - tail_psi(d).
inline ShootingSolution dense_touching_profile(const Transform& t, double lambda, int K) {
    const auto& nl = t.source();
    const auto cls = nl.classify();
    const int p = arc_substitution_power(cls.gamma_effective.value_or(1.0));
    const double sg = t.sigma();
    const double L = t.L();
    auto F = [&](double tau) {
        if (tau <= 0.0) return 0.0;
        const double d = std::min(sg, std::pow(tau, double(p)));
        const double W = energy_window(nl, d, 0.0);
        return W > 0.0 ? double(p) * std::pow(tau, double(p - 1)) / std::sqrt(W) : 0.0;
    };
    const double pref = 1.0 / std::sqrt(2.0 * lambda);
    const double tau_max = std::pow(sg, 1.0 / double(p));

    ShootingSolution out;
    out.ell = L;
    out.lambda = lambda;
    out.samples.push_back({0.0, L, 0.0});
    double s = 0.0, tau_prev = 0.0;
    for (int j = 1; j < K; ++j) {
        const double tau = tau_max * double(j) / double(K - 1);
        s += pref * adaptive_simpson(F, tau_prev, tau, 1e-11);
        tau_prev = tau;
        const double d = std::min(sg, std::pow(tau, double(p)));
        const double v = (j == K - 1) ? 0.0 : std::max(0.0, L - t.tail_psi(d));
        const double W = energy_window(nl, d, 0.0);
        const double slope = -std::sqrt(2.0 * lambda * W) * std::exp(-nl.Hd(d));
        out.samples.push_back({s, v, slope});
    }
    out.R_ell = s;
    return out;
}

}  // namespace detail

inline double radius(const Transform& t, double ell, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("radius: lambda must be positive");
    if (!(ell >= 0.0) || ell > t.L()) throw std::domain_error("radius: ell outside [0, L]");
    if (ell == 0.0) return 0.0;
    if (ell >= t.L() && !t.source().classify().sqrt_h_integrable)
        return std::numeric_limits<double>::infinity();
    return detail::arc_length_to_depth(t, ell, lambda, t.sigma());
}

// smallest lambda at which the touching profile fits inside radius R:
// R(L, lambda) = R  <=>  lambda = (R(L, 1) / R)^2. +infinity when sqrt(h) is
// not integrable (the profile never fits).
inline double critical_lambda(const Transform& t, double R) {
    if (!(R > 0.0)) throw std::invalid_argument("critical_lambda: R must be positive");
    const double rl = radius(t, t.L(), 1.0);
    if (!std::isfinite(rl)) return std::numeric_limits<double>::infinity();
    return (rl / R) * (rl / R);
}

// arclength of the touching profile between the level L - depth and zero; the
// quantity whose behavior as depth -> 0 separates finite touching radius
// (sqrt(h) integrable: converges to R_L) from profiles that never reach the
// ceiling (divergence).
inline double touching_edge_distance(const Transform& t, double depth, double lambda = 1.0) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("touching_edge_distance: lambda must be positive");
    if (!(depth > 0.0) || depth >= t.L())
        throw std::domain_error("touching_edge_distance: depth outside (0, L)");
    const auto& nl = t.source();
    const double d_eps = t.d_of_ell(t.L() - depth);
    const double sg = t.sigma();
    auto F = [&](double d) {
        const double W = detail::energy_window(nl, std::min(d, sg), 0.0);
        return 1.0 / std::sqrt(W);
    };
    return adaptive_simpson(F, d_eps, sg, 1e-10) / std::sqrt(2.0 * lambda);
}

// ---------------------------------------------------------------------------
// trace: sample the level-ell profile at Chebyshev-spaced values
//   v_j = ell (1 + cos(pi j / (K-1))) / 2,   j = 0..K-1,
// cumulative arclength between consecutive depth levels, slopes from the first
// integral in desingularized form v' = -sqrt(2 lambda W(d)) e^{-Hd(d)}.
// ---------------------------------------------------------------------------
inline ShootingSolution trace(const Transform& t, double ell, double lambda,
                              int n_samples = 33) {
    if (n_samples < 16) throw std::invalid_argument("trace: need at least 16 samples");
    if (!(lambda > 0.0)) throw std::invalid_argument("trace: lambda must be positive");
    if (!(ell > 0.0) || ell > t.L()) throw std::domain_error("trace: ell outside (0, L]");
    if (ell >= t.L() && !t.source().classify().sqrt_h_integrable)
        throw std::domain_error("trace: touching profile has infinite radius here");

    const auto& nl = t.source();
    const double d_m = t.d_of_ell(ell);
    const double sg = t.sigma();
    int p = 2;
    if (ell >= t.L()) {
        const auto cls = nl.classify();
        p = detail::arc_substitution_power(cls.gamma_effective.value_or(1.0));
    }
    auto F = [&](double tau) {
        if (tau <= 0.0) return p == 2 ? 2.0 : 0.0;
        const double d = std::min(sg, d_m + std::pow(tau, double(p)));
        const double W = detail::energy_window(nl, d, d_m);
        return W > 0.0 ? double(p) * std::pow(tau, double(p - 1)) / std::sqrt(W) : 0.0;
    };

    const int K = n_samples;
    const double pref = 1.0 / std::sqrt(2.0 * lambda);
    ShootingSolution out;
    out.ell = ell;
    out.lambda = lambda;

    std::vector<double> dj(K);
    dj[0] = d_m;
    for (int j = 1; j < K; ++j) {
        const double vj = ell * 0.5 * (1.0 + std::cos(M_PI * double(j) / double(K - 1)));
        dj[j] = (j == K - 1) ? sg : t.d_of_ell(vj);
    }

    out.samples.push_back({0.0, ell, 0.0});
    double s = 0.0, tau_prev = 0.0;
    for (int j = 1; j < K; ++j) {
        const double tau_j = std::pow(dj[j] - d_m, 1.0 / double(p));
        s += pref * adaptive_simpson(F, tau_prev, tau_j, 1e-11);
        tau_prev = tau_j;
        const double vj = (j == K - 1)
                              ? 0.0
                              : ell * 0.5 * (1.0 + std::cos(M_PI * double(j) / double(K - 1)));
        const double W = detail::energy_window(nl, dj[j], d_m);
        const double slope = -std::sqrt(2.0 * lambda * W) * std::exp(-nl.Hd(dj[j]));
        out.samples.push_back({s, vj, slope});
    }
    out.R_ell = s;
    return out;
}

// ---------------------------------------------------------------------------
// flat_family: the one-parameter family of touching solutions with a plateau.
//   w(s) = L                     for |s| <= plateau,
//   w(s) = v_L(|s| - plateau)    for plateau <= |s| <= plateau + R_L,
//   w(s) = 0                     beyond,
// where v_L is the touching profile at this lambda. The glued profile is C^1:
// v_L'(0) = 0. Profile values interpolate a dense trace; slopes come from the
// traced first-integral values, so w'(plateau+) = 0 exactly.
// ---------------------------------------------------------------------------
struct FlatFamilyProfile {
    double lambda = 0.0, plateau = 0.0, R_L = 0.0, zero_crossing = 0.0, L = 0.0;
    pchip arc_v, arc_vp;  // y in [0, R_L] -> v, v' along the touching profile

    double value(double s) const {
        const double y = std::abs(s) - plateau;
        if (y <= 0.0) return L;
        if (y >= R_L) return 0.0;
        return arc_v(y);
    }
    double derivative(double s) const {
        const double y = std::abs(s) - plateau;
        if (y <= 0.0 || y >= R_L) return 0.0;
        const double d = arc_vp(y);
        return s < 0.0 ? -d : d;
    }
};

inline FlatFamilyProfile flat_family(const Transform& t, double lambda, double plateau,
                                     int n_samples = 513) {
    if (!(plateau >= 0.0)) throw std::invalid_argument("flat_family: plateau must be >= 0");
    if (!(lambda > 0.0)) throw std::invalid_argument("flat_family: lambda must be positive");
    if (!t.source().classify().sqrt_h_integrable)
        throw std::domain_error("flat_family: touching profile has infinite radius");
    const ShootingSolution sol = detail::dense_touching_profile(t, lambda, n_samples);
    FlatFamilyProfile out;
    out.lambda = lambda;
    out.plateau = plateau;
    out.R_L = sol.R_ell;
    out.zero_crossing = plateau + sol.R_ell;
    out.L = t.L();
    std::vector<double> ss, vv, vp;
    ss.reserve(sol.samples.size());
    for (const auto& sm : sol.samples) {
        ss.push_back(sm.s);
        vv.push_back(sm.v);
        vp.push_back(sm.v_prime);
    }
    out.arc_v = pchip(ss, vv);
    out.arc_vp = pchip(ss, vp);
    return out;
}

// ---------------------------------------------------------------------------
// radial_subsolution: explicit flat subsolution on the ball |x| < R in R^N.
// The 1-D touching profile V (lambda = 1) extended by a plateau of length
//   plateau = (N-1) sqrt(2 C),   C = sup_{0 < d <= sigma} W(d)
//             = sup_{0 < tv <= L} (G(L) - G(L - tv)) / g(L - tv)^2,
// absorbs the curvature term (N-1) w'/r; scaling the glued profile of width
// R_bar = R_1D + plateau onto the ball yields a subsolution at
//   lambda_sub = 2 R_bar^2 / R^2,
// certifying existence of flat solutions for all lambda >= lambda_sub.
// ---------------------------------------------------------------------------
struct RadialSubsolution {
    int N = 1;
    double R = 1.0;
    double C = 0.0, plateau = 0.0, R_bar = 0.0, lambda_sub = 0.0;
    double L = 0.0, R_1d = 0.0;
    pchip arc_v;  // y in [0, R_1d] -> touching-profile value at lambda = 1

    // profile on the ball: w(r) = V(|r| R_bar / R)
    double value(double r) const {
        double y = std::abs(r) * R_bar / R;
        if (y <= plateau) return L;
        y -= plateau;
        if (y >= R_1d) return 0.0;
        return arc_v(y);
    }
};

inline RadialSubsolution radial_subsolution(const Transform& t, int N, double R,
                                            int n_samples = 2049) {
    if (N < 1) throw std::invalid_argument("radial_subsolution: N must be >= 1");
    if (!(R > 0.0)) throw std::invalid_argument("radial_subsolution: R must be positive");
    if (!t.source().classify().sqrt_h_integrable)
        throw std::domain_error("radial_subsolution: touching profile has infinite radius");

    const auto& nl = t.source();
    const double sg = t.sigma();

    // C = sup W(d): coarse scan, then golden-section refinement around the max
    const int K = 512;
    double C = 0.0;
    int kbest = K;
    for (int k = 1; k <= K; ++k) {
        const double w = detail::energy_window(nl, sg * double(k) / double(K), 0.0);
        if (w > C) {
            C = w;
            kbest = k;
        }
    }
    {
        double a = sg * double(std::max(1, kbest - 1)) / double(K);
        double b = sg * double(std::min(K, kbest + 1)) / double(K);
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = detail::energy_window(nl, x1, 0.0), f2 = detail::energy_window(nl, x2, 0.0);
        for (int it = 0; it < 60; ++it) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = detail::energy_window(nl, x2, 0.0);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = detail::energy_window(nl, x1, 0.0);
            }
        }
        C = std::max(C, std::max(f1, f2));
    }

    RadialSubsolution out;
    out.N = N;
    out.R = R;
    out.C = C;
    out.L = t.L();
    out.plateau = double(N - 1) * std::sqrt(2.0 * C);

    const ShootingSolution sol = detail::dense_touching_profile(t, 1.0, n_samples);
    out.R_1d = sol.R_ell;
    out.R_bar = sol.R_ell + out.plateau;
    out.lambda_sub = 2.0 * out.R_bar * out.R_bar / (R * R);
    std::vector<double> ss, vv;
    ss.reserve(sol.samples.size());
    for (const auto& sm : sol.samples) {
        ss.push_back(sm.s);
        vv.push_back(sm.v);
    }
    out.arc_v = pchip(ss, vv);
    return out;
}

// Discrete certificate for the subsolution: -Lap_h w <= lambda_sub g(w) at
// every interior node of a radial grid with m nodes. Returns the worst slack
// min_k [lambda_sub g(w_k) - (A_h w)_k]; the check passes when it is above
// -max(1e-9, 4 lambda_sub (h/R_bar)^2) (the plateau kink contributes a purely
// one-sided O(h^2)-scale discretization spike with no RHS slack to hide in).
struct SubsolutionCheck {
    double worst_slack = 0.0;
    int worst_node = 0;
    double tolerance = 0.0;
    bool certified = false;
};

inline SubsolutionCheck check_radial_subsolution(const Transform& t,
                                                 const RadialSubsolution& sub, int m) {
    const Grid g = Grid::ball(sub.N, sub.R, m);
    const int n_unk = g.unknowns();
    std::vector<double> Asub, Adiag, Asup, w(n_unk), Aw(n_unk);
    g.laplacian(Asub, Adiag, Asup);
    for (int k = 0; k < n_unk; ++k) w[k] = sub.value(g.node(g.node_of(k)));
    detail::apply_tridiag(Asub, Adiag, Asup, w, Aw);

    SubsolutionCheck out;
    const double hs = g.h();
    out.tolerance =
        -std::max(1e-9, 4.0 * sub.lambda_sub * (hs / sub.R_bar) * (hs / sub.R_bar));
    out.worst_slack = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_unk; ++k) {
        const double slack = sub.lambda_sub * t.eval_g(std::min(w[k], t.L())) - Aw[k];
        if (slack < out.worst_slack) {
            out.worst_slack = slack;
            out.worst_node = g.node_of(k);
        }
    }
    out.certified = out.worst_slack >= out.tolerance;
    return out;
}

}  // namespace flatzone
