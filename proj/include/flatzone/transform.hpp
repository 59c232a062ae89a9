#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nonlinearity.hpp"
#include "quadrature.hpp"

namespace flatzone {

// Cached evaluators for H, psi, psi^{-1}, g, g', G and the ceiling L = psi(sigma).
//
//   psi(s) = int_0^s e^{-H},   g(v) = e^{-H(psi^{-1}(v))},   G(v) = int_0^v g.
//
// G never needs its own table: G(psi(s)) = int_0^s e^{-2H}, so one pass yields
// both. The power family with gamma = 1 has closed forms for everything and
// bypasses the tables. Table path: cumulative Gauss quadrature on a grid graded
// quadratically toward sigma (s = sigma(1 - tau^2)), where all the action is.
//
// Tail quantities are exposed directly in d = sigma - s:
//   tail_psi(d) = L - psi(sigma-d),  tail_G(d) = G(L) - G(psi(sigma-d)),
// computed by desingularized quadrature (the e^{-H(d)} factor is pulled out of
// the integral so only bounded exponentials are ever evaluated).
class Transform {
public:
    explicit Transform(Nonlinearity nl, bool force_tables = false)
        : nl_(std::move(nl)) {
        closed_form_ = !force_tables && nl_.kind() == Nonlinearity::Kind::ModelPower &&
                       nl_.gamma() == 1.0;
        if (closed_form_) {
            L_ = nl_.sigma() / (nl_.A() + 1.0);
            GL_ = nl_.sigma() / (1.0 + 2.0 * nl_.A());
        } else {
            build_tables();
        }
    }

    const Nonlinearity& source() const { return nl_; }
    bool closed_form() const { return closed_form_; }
    double sigma() const { return nl_.sigma(); }
    double L() const { return L_; }
    double G_of_L() const { return GL_; }

    // ------------------------------------------------------------- eval ops

    double eval_H(double s) const {
        if (s < 0.0 || s >= sigma()) throw std::domain_error("eval_H: s outside [0, sigma); H may be infinite at sigma, query h_integrable first");
        if (s == 0.0) return 0.0;
        return nl_.H(s);
    }

    double eval_psi(double s) const {
        const double sg = sigma();
        if (s < 0.0 || s > sg) throw std::domain_error("eval_psi: s outside [0, sigma]");
        if (s == 0.0) return 0.0;
        if (s == sg) return L_;
        if (closed_form_) {
            const double A = nl_.A();
            return L_ * (1.0 - std::pow((sg - s) / sg, A + 1.0));
        }
        return psi_of_s_(s);
    }

    double eval_psi_inv(double v) const {
        if (v < 0.0 || v > L_) throw std::domain_error("eval_psi_inv: v outside [0, L]");
        if (v == 0.0) return 0.0;
        if (v == L_) return sigma();
        if (closed_form_) {
            const double A = nl_.A();
            return sigma() * (1.0 - std::pow(1.0 - v / L_, 1.0 / (A + 1.0)));
        }
        // safeguarded Newton on the cached monotone interpolant
        const auto& ps = psi_;
        std::size_t lo = 0, hi = ps.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (ps[mid] <= v ? lo : hi) = mid;
        }
        double a = s_[lo], b = s_[hi];
        double s = a + (b - a) * (v - ps[lo]) / std::max(ps[hi] - ps[lo], 1e-300);
        for (int it = 0; it < 60; ++it) {
            const double F = psi_of_s_(s) - v;
            (F <= 0.0 ? a : b) = s;
            const double dF = psi_of_s_.deriv(s);
            double step = dF > 0.0 ? F / dF : 0.0;
            double snew = s - step;
            if (!(snew > a) || !(snew < b)) snew = 0.5 * (a + b);
            if (std::abs(snew - s) <= 2.0 * std::numeric_limits<double>::epsilon() * sigma()) return snew;
            s = snew;
        }
        return s;
    }

    double eval_g(double v) const {
        if (v < 0.0 || v > L_) throw std::domain_error("eval_g: v outside [0, L]");
        if (v == 0.0) return 1.0;
        if (closed_form_) {
            const double A = nl_.A();
            return std::pow(std::max(0.0, 1.0 - v / L_), A / (1.0 + A));
        }
        if (v == L_) {
            const double Hs = nl_.H_sigma();
            return std::isinf(Hs) ? 0.0 : std::exp(-Hs);
        }
        const double d = sigma() - eval_psi_inv(v);
        return std::exp(-nl_.Hd(std::max(d, 1e-300)));
    }

    // g'(v) = -h(psi^{-1}(v)); at v = L the limit is -inf (h blows up at
    // sigma), returned as the classified limit rather than thrown
    double eval_g_prime(double v) const {
        if (v < 0.0 || v > L_) throw std::domain_error("eval_g_prime: v outside [0, L]");
        if (v == L_) return -std::numeric_limits<double>::infinity();
        if (closed_form_) {
            const double A = nl_.A();
            return -(A / sigma()) * std::pow(1.0 - v / L_, -1.0 / (1.0 + A));
        }
        const double d = sigma() - eval_psi_inv(v);
        return -nl_.hd(std::max(d, 1e-300));
    }

    double eval_G(double v) const {
        if (v < 0.0 || v > L_) throw std::domain_error("eval_G: v outside [0, L]");
        if (v == 0.0) return 0.0;
        if (v == L_) return GL_;
        if (closed_form_) {
            const double A = nl_.A();
            return GL_ * (1.0 - std::pow(1.0 - v / L_, (1.0 + 2.0 * A) / (1.0 + A)));
        }
        return G_of_v_(v);
    }

    // ------------------------------------------------- tail (d = sigma - s)

    // L - psi(sigma - d) = int_0^d e^{-Hd}
    double tail_psi(double d) const {
        const double sg = sigma();
        if (d < 0.0 || d > sg) throw std::domain_error("tail_psi: d outside [0, sigma]");
        if (d == 0.0) return 0.0;
        if (closed_form_) return L_ * std::pow(d / sg, nl_.A() + 1.0);
        const double E = std::exp(-nl_.Hd(d));
        if (E == 0.0) return 0.0;
        const double a = std::max(0.0, d - 45.0 / nl_.hd(d));
        const double Hdd = nl_.Hd(d);
        const double W1 = adaptive_simpson(
            [&](double t) { return std::exp(Hdd - nl_.Hd(std::max(t, 1e-300))); }, a, d);
        return E * W1;
    }

    // G(L) - G(psi(sigma - d)) = int_0^d e^{-2 Hd}
    double tail_G(double d) const {
        const double sg = sigma();
        if (d < 0.0 || d > sg) throw std::domain_error("tail_G: d outside [0, sigma]");
        if (d == 0.0) return 0.0;
        if (closed_form_) return GL_ * std::pow(d / sg, 1.0 + 2.0 * nl_.A());
        const double Hdd = nl_.Hd(d);
        const double E = std::exp(-Hdd);
        if (E == 0.0) return 0.0;
        const double a = std::max(0.0, d - 22.5 / nl_.hd(d));
        const double W = adaptive_simpson(
            [&](double t) { return std::exp(2.0 * (Hdd - nl_.Hd(std::max(t, 1e-300)))); }, a, d);
        return E * E * W;
    }

    // solve tail_psi(d) = L - ell for d (the distance coordinate of level ell)
    double d_of_ell(double ell) const {
        if (ell < 0.0 || ell > L_) throw std::domain_error("d_of_ell: ell outside [0, L]");
        if (ell == L_) return 0.0;
        if (ell == 0.0) return sigma();
        const double target = L_ - ell;
        if (closed_form_) return sigma() * std::pow(target / L_, 1.0 / (nl_.A() + 1.0));
        // bracket on a log grid, then safeguarded Newton (derivative e^{-Hd})
        double lo = sigma() * 1e-300, hi = sigma();
        for (int k = 1; k <= 600; ++k) {
            const double d = sigma() * std::pow(10.0, -0.05 * k);
            const double t = tail_psi(d);
            if (t >= target) { hi = d; continue; }
            lo = d;
            break;
        }
        double d = 0.5 * (lo + hi);
        for (int it = 0; it < 80; ++it) {
            const double F = tail_psi(d) - target;
            (F <= 0.0 ? lo : hi) = d;
            const double dF = std::exp(-nl_.Hd(d));
            double dnew = dF > 0.0 ? d - F / dF : 0.5 * (lo + hi);
            if (!(dnew > lo) || !(dnew < hi)) dnew = 0.5 * (lo + hi);
            if (std::abs(dnew - d) <= 1e-14 * d) return dnew;
            d = dnew;
        }
        return d;
    }

private:
    void build_tables() {
        constexpr std::size_t N = 4097;
        const double sg = sigma();
        s_.resize(N);
        psi_.resize(N);
        Gpsi_.resize(N);
        s_[0] = 0.0;
        psi_[0] = 0.0;
        Gpsi_[0] = 0.0;
        for (std::size_t j = 1; j < N; ++j) {
            const double tau1 = double(N - 1 - (j - 1)) / double(N - 1);  // cell upper tau
            const double tau0 = double(N - 1 - j) / double(N - 1);        // cell lower tau
            s_[j] = sg * (1.0 - tau0 * tau0);
            // ds = -2 sg tau dtau; integrate over tau in [tau0, tau1]
            psi_[j] = psi_[j - 1] + gauss5([&](double t) {
                return std::exp(-nl_.Hd(sg * t * t)) * 2.0 * sg * t; }, tau0, tau1);
            Gpsi_[j] = Gpsi_[j - 1] + gauss5([&](double t) {
                return std::exp(-2.0 * nl_.Hd(sg * t * t)) * 2.0 * sg * t; }, tau0, tau1);
        }
        s_[N - 1] = sg;
        L_ = psi_[N - 1];
        GL_ = Gpsi_[N - 1];
        psi_of_s_ = pchip(s_, psi_);
        // psi increments underflow near sigma when H blows up fast; keep a
        // strictly increasing subsequence so G(v) interpolation stays valid
        std::vector<double> pv, gv;
        pv.reserve(N);
        gv.reserve(N);
        pv.push_back(psi_[0]);
        gv.push_back(Gpsi_[0]);
        for (std::size_t j = 1; j < N; ++j) {
            if (psi_[j] > pv.back()) {
                pv.push_back(psi_[j]);
                gv.push_back(Gpsi_[j]);
            }
        }
        if (pv.back() < L_) {
            pv.push_back(L_);
            gv.push_back(GL_);
        } else {
            gv.back() = GL_;
        }
        G_of_v_ = pchip(pv, gv);
    }

    Nonlinearity nl_;
    bool closed_form_ = false;
    double L_ = 0.0, GL_ = 0.0;
    std::vector<double> s_, psi_, Gpsi_;
    pchip psi_of_s_, G_of_v_;
};

// --------------------------------------------------------------- truncation

// h_n = min(h, n) with sigma_n the crossing h(sigma_n) = n, and the induced
// piecewise reaction term: g_n equals g below psi(sigma_n), then falls on a
// linear ramp of slope -n, hitting zero at L_n = psi(sigma_n) + g(psi(sigma_n))/n.
// The ramp's slope matches g'(psi(sigma_n)^-) = -h(sigma_n) = -n, so g_n is C^1.
struct TruncatedNonlinearity {
    const Transform* t = nullptr;
    long long n = 0;
    double sigma_n = 0.0, d_n = 0.0;
    double psi_sn = 0.0;  // psi(sigma_n)
    double g_sn = 0.0;    // g at psi_sn
    double L_n = 0.0;
    bool degenerate = false;  // n <= h(0): h_n = min(h, n) everywhere, sigma_n = 0

    // defined for all s >= 0 (the direct quasilinear solver may evaluate
    // iterates above sigma, where h_n is the constant n)
    double h_n(double s) const {
        if (s >= sigma_n) return double(n);
        const double hv = t->source().h(s);
        return hv > double(n) ? double(n) : hv;
    }
    double h_n_prime(double s) const {
        if (s >= sigma_n) return 0.0;
        return t->source().hd_prime(t->source().sigma() - s);
    }
    // Defined on all of R so Newton iterates never fall off the domain: constant
    // below 0, the affine ramp continues (negative) past L_n.  Solutions stay in
    // [0, L_n] by the maximum principle, so the extensions never affect results.
    double g_n(double v) const {
        if (v < 0.0) return 1.0;
        if (v <= psi_sn) return t->eval_g(v);
        return g_sn - double(n) * (v - psi_sn);
    }
    double g_n_prime(double v) const {
        if (v < 0.0) return 0.0;
        if (v < psi_sn) return t->eval_g_prime(v);
        return -double(n);
    }
};

inline TruncatedNonlinearity truncate(const Transform& t, long long n) {
    if (n <= 0) throw std::invalid_argument("truncate: n must be positive");
    const auto& nl = t.source();
    const double sg = nl.sigma();
    TruncatedNonlinearity tr;
    tr.t = &t;
    tr.n = n;
    const double h0 = nl.hd(sg);  // h(0)
    if (double(n) <= h0) {
        tr.degenerate = true;
        tr.sigma_n = 0.0;
        tr.d_n = sg;
        tr.psi_sn = 0.0;
        tr.g_sn = 1.0;
        tr.L_n = 1.0 / double(n);
        return tr;
    }
    if (nl.kind() == Nonlinearity::Kind::ModelPower) {
        tr.d_n = std::pow(nl.A() / double(n), 1.0 / nl.gamma());
    } else {
        // monotone bisection in log d
        double lo = sg * 1e-300, hi = sg;
        while (hi - lo > 1e-13 * hi) {
            const double mid = std::sqrt(lo * hi);
            (nl.hd(mid) > double(n) ? lo : hi) = mid;
        }
        tr.d_n = 0.5 * (lo + hi);
    }
    tr.sigma_n = sg - tr.d_n;
    tr.psi_sn = t.L() - t.tail_psi(tr.d_n);
    tr.g_sn = std::exp(-nl.Hd(tr.d_n));
    tr.L_n = tr.psi_sn + tr.g_sn / double(n);
    return tr;
}

// truncation overshoot L_n - L = g(psi(sigma_n))/n - tail_psi(d_n), computed
// without forming the near-cancelling difference of two O(1) psi values
inline double truncation_overshoot(const Transform& t, const TruncatedNonlinearity& tr) {
    return tr.g_sn / double(tr.n) - t.tail_psi(tr.d_n);
}

}  // namespace flatzone
