#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "quadrature.hpp"

namespace flatzone {

struct IntegrabilityReport {
    bool sqrt_h_integrable = false;
    bool h_integrable = false;
    std::optional<double> gamma_effective;
    bool inconclusive = false;
};

// Singular coefficient h on [0, sigma): either the model power family
// h(s) = A*(sigma-s)^(-gamma) or a strictly increasing breakpoint table.
// All tail quantities are exposed in the distance variable d = sigma - s;
// forming d from s near sigma loses everything to cancellation, so the
// tail-critical callers pass d directly.
class Nonlinearity {
public:
    enum class Kind { ModelPower, Tabulated };

    static Nonlinearity model_power(double A, double gamma, double sigma) {
        if (!(A > 0.0) || !(gamma > 0.0) || !(sigma > 0.0))
            throw std::invalid_argument("model_power: A, gamma, sigma must be positive");
        Nonlinearity nl;
        nl.kind_ = Kind::ModelPower;
        nl.A_ = A;
        nl.gamma_ = gamma;
        nl.sigma_ = sigma;
        return nl;
    }

    static Nonlinearity tabulated(std::vector<std::pair<double, double>> pts, double sigma) {
        if (!(sigma > 0.0)) throw std::invalid_argument("tabulated: sigma must be positive");
        if (pts.size() < 4) throw std::invalid_argument("tabulated: need >= 4 breakpoints");
        std::vector<double> s, h;
        for (auto& [si, hi] : pts) {
            if (!s.empty() && !(si > s.back() && hi > h.back()))
                throw std::invalid_argument("tabulated: breakpoints must be strictly increasing in s and h");
            if (si < 0.0 || si >= sigma) throw std::invalid_argument("tabulated: s outside [0, sigma)");
            if (hi < 0.0) throw std::invalid_argument("tabulated: h must be >= 0");
            s.push_back(si);
            h.push_back(hi);
        }
        Nonlinearity nl;
        nl.kind_ = Kind::Tabulated;
        nl.sigma_ = sigma;
        nl.tab_ = pchip(s, h);
        nl.fit_tail();
        nl.build_cumulative();
        return nl;
    }

    Kind kind() const { return kind_; }
    double sigma() const { return sigma_; }
    double A() const { return A_; }
    double gamma() const { return gamma_; }

    // h(s); s in [0, sigma)
    double h(double s) const {
        if (s < 0.0 || s >= sigma_) throw std::domain_error("h: s outside [0, sigma)");
        return hd(sigma_ - s);
    }

    // h at distance d = sigma - s from the blow-up level; d in (0, sigma]
    double hd(double d) const {
        if (kind_ == Kind::ModelPower) return A_ * std::pow(d, -gamma_);
        const double s = sigma_ - d;
        if (s <= tab_.x_back()) return std::max(0.0, tab_(std::max(s, tab_.x_front())));
        return tail_A_ * std::pow(d, -tail_gamma_);
    }

    // dh/ds at distance d = sigma - s (h is increasing in s, so this is >= 0)
    double hd_prime(double d) const {
        if (kind_ == Kind::ModelPower) return A_ * gamma_ * std::pow(d, -gamma_ - 1.0);
        const double s = sigma_ - d;
        if (s <= tab_.x_back()) return tab_.deriv(std::max(s, tab_.x_front()));
        return tail_A_ * tail_gamma_ * std::pow(d, -tail_gamma_ - 1.0);
    }

    // H(s) = integral of h from 0 to s, written as a function of d = sigma - s.
    // Closed form for the power family; cumulative table + power tail otherwise.
    double Hd(double d) const {
        if (!(d > 0.0)) throw std::domain_error("Hd: d must be > 0 (H may be infinite at sigma; query h_integrable first)");
        if (d > sigma_) throw std::domain_error("Hd: d > sigma");
        if (kind_ == Kind::ModelPower) {
            if (gamma_ == 1.0) return A_ * std::log(sigma_ / d);
            return A_ * (std::pow(d, 1.0 - gamma_) - std::pow(sigma_, 1.0 - gamma_)) / (gamma_ - 1.0);
        }
        const double s = sigma_ - d;
        if (s <= 0.0) return 0.0;
        if (s <= tab_.x_back()) return cum_at(s);
        return cum_back_ + tail_H(d) - tail_H(sigma_ - tab_.x_back());
    }

    double H(double s) const {
        if (s < 0.0 || s >= sigma_) throw std::domain_error("H: s outside [0, sigma)");
        if (s == 0.0) return 0.0;
        return Hd(sigma_ - s);
    }

    // Hd(tau) - Hd(d) for 0 < tau <= d, evaluated without cancellation. The
    // naive difference subtracts two values of size d^(1-gamma); once d drops
    // below ~1e-10 the rounding of each operand dominates the O(1) difference
    // and downstream quadratures see pure noise. Writing the difference as
    // d^(1-gamma) * expm1((1-gamma) * log1p((tau-d)/d)) keeps full relative
    // accuracy at any depth.
    double Hd_diff(double tau, double d) const {
        if (!(tau > 0.0) || !(d > 0.0) || tau > d || d > sigma_)
            throw std::domain_error("Hd_diff: need 0 < tau <= d <= sigma");
        if (kind_ == Kind::ModelPower) {
            if (gamma_ == 1.0) return -A_ * std::log1p((tau - d) / d);
            return A_ * std::pow(d, 1.0 - gamma_) *
                   std::expm1((1.0 - gamma_) * std::log1p((tau - d) / d)) /
                   (gamma_ - 1.0);
        }
        return Hd(tau) - Hd(d);  // tables never resolve depths small enough to cancel
    }

    // H(sigma) when finite (h integrable); +inf otherwise
    double H_sigma() const {
        if (kind_ == Kind::ModelPower) {
            if (gamma_ >= 1.0) return std::numeric_limits<double>::infinity();
            return A_ * std::pow(sigma_, 1.0 - gamma_) / (1.0 - gamma_);
        }
        if (tail_gamma_ >= 1.0) return std::numeric_limits<double>::infinity();
        return cum_back_ - tail_H(sigma_ - tab_.x_back());
    }

    IntegrabilityReport classify() const {
        IntegrabilityReport r;
        if (kind_ == Kind::ModelPower) {
            r.gamma_effective = gamma_;
            r.sqrt_h_integrable = gamma_ < 2.0;
            r.h_integrable = gamma_ < 1.0;
            return r;
        }
        r.gamma_effective = tail_gamma_;
        r.sqrt_h_integrable = tail_gamma_ < 2.0;
        r.h_integrable = tail_gamma_ < 1.0;
        r.inconclusive = tail_residual_ > 1e-2;
        return r;
    }

private:
    Nonlinearity() = default;

    // power-law exponent fitted to the last decade of breakpoints (in d),
    // anchored so the tail is continuous at the final breakpoint
    void fit_tail() {
        const auto& xs = tab_.xs();
        const auto& hs = tab_.ys();
        const double d_last = sigma_ - xs.back();
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double d = sigma_ - xs[i];
            if (d <= 10.0 * d_last && hs[i] > 0.0) {
                lx.push_back(std::log(d));
                ly.push_back(std::log(hs[i]));
            }
        }
        if (lx.size() < 3) {
            for (std::size_t i = xs.size() >= 3 ? xs.size() - 3 : 0; i < xs.size(); ++i) {
                if (hs[i] <= 0.0) continue;
                lx.push_back(std::log(sigma_ - xs[i]));
                ly.push_back(std::log(hs[i]));
            }
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = double(lx.size());
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        const double slope = (n * sxy - sx * sy) / std::max(n * sxx - sx * sx, 1e-300);
        tail_gamma_ = std::max(-slope, 1e-6);
        tail_A_ = hs.back() * std::pow(d_last, tail_gamma_);
        tail_residual_ = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            const double fit = std::log(tail_A_) - tail_gamma_ * lx[i];
            tail_residual_ = std::max(tail_residual_, std::abs(fit - ly[i]));
        }
    }

    // cumulative integral of the interpolant at each breakpoint (exact per
    // Hermite cell: h/2*(y0+y1) + h^2/12*(d0-d1))
    void build_cumulative() {
        const auto& xs = tab_.xs();
        cum_.assign(xs.size(), 0.0);
        for (std::size_t i = 0; i + 1 < xs.size(); ++i)
            cum_[i + 1] = cum_[i] + cell_integral(i, xs[i + 1]);
        cum_back_ = cum_.back() + (xs.front() > 0.0 ? xs.front() * tab_.ys().front() : 0.0);
        // note: h on [0, first breakpoint] is taken constant at its first value
    }

    double cell_integral(std::size_t i, double upto) const {
        const auto& xs = tab_.xs();
        const double a = xs[i];
        return gauss5([&](double t) { return tab_(t); }, a, upto);
    }

    double cum_at(double s) const {
        const auto& xs = tab_.xs();
        double head = 0.0;
        if (xs.front() > 0.0) head = std::min(s, xs.front()) * tab_.ys().front();
        if (s <= xs.front()) return head;
        std::size_t lo = 0, hi = xs.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (xs[mid] <= s ? lo : hi) = mid;
        }
        return head + cum_[lo] + cell_integral(lo, s);
    }

    // antiderivative of the tail power law: integral of h over [s, s_last]
    // expressed through d; tail_H(d) is the primitive evaluated at distance d
    double tail_H(double d) const {
        if (tail_gamma_ == 1.0) return -tail_A_ * std::log(d);
        return tail_A_ * std::pow(d, 1.0 - tail_gamma_) / (tail_gamma_ - 1.0);
    }

    Kind kind_ = Kind::ModelPower;
    double A_ = 1.0, gamma_ = 1.0, sigma_ = 1.0;

    pchip tab_;
    std::vector<double> cum_;
    double cum_back_ = 0.0;
    double tail_A_ = 1.0, tail_gamma_ = 1.0, tail_residual_ = 0.0;
};

inline IntegrabilityReport classify(const Nonlinearity& nl) { return nl.classify(); }

}  // namespace flatzone
