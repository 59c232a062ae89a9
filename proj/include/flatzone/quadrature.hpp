#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace flatzone {

// ---------------------------------------------------------------- quadrature

// Adaptive Simpson with interval bisection. Relative tolerance is applied
// against the running whole-interval estimate; recursion stops early on
// subintervals whose contribution is negligible in absolute terms.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double rel_tol = 1e-11,
                        int max_depth = 52) {
    if (!(b > a)) return 0.0;
    struct Rec {
        const std::remove_reference_t<F>& f;
        double rel_tol;
        int max_depth;
        double whole_scale;
        double run(double a, double fa, double m, double fm, double b, double fb,
                   double s, int depth) const {
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double sl = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double sr = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            const double err = sl + sr - s;
            const double tol = rel_tol * std::max(whole_scale, std::abs(sl + sr));
            if (depth >= max_depth || std::abs(err) <= 15.0 * tol)
                return sl + sr + err / 15.0;
            return run(a, fa, lm, flm, m, fm, sl, depth + 1) +
                   run(m, fm, rm, frm, b, fb, sr, depth + 1);
        }
    };
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    Rec rec{f, rel_tol, max_depth, std::abs(s)};
    return rec.run(a, fa, m, fm, b, fb, s, 0);
}

// Composite Simpson on a uniform grid; npts must be odd and >= 3.
template <class F>
double composite_simpson(F&& f, double a, double b, std::size_t npts) {
    if (npts < 3 || npts % 2 == 0) throw std::invalid_argument("composite_simpson: npts must be odd >= 3");
    const double h = (b - a) / double(npts - 1);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i + 1 < npts; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + double(i) * h);
    return s * h / 3.0;
}

// 5-point Gauss-Legendre on [a,b]; exact through degree 9.
template <class F>
double gauss5(F&& f, double a, double b) {
    static const double x[5] = {-0.906179845938663993, -0.538469310105683091, 0.0,
                                0.538469310105683091, 0.906179845938663993};
    static const double w[5] = {0.236926885056189088, 0.478628670499366468,
                                0.568888888888888889, 0.478628670499366468,
                                0.236926885056189088};
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += w[i] * f(c + r * x[i]);
    return s * r;
}

// ------------------------------------------------------- monotone cubic (FC)

// Fritsch-Carlson monotone piecewise-cubic interpolant through (x_i, y_i),
// x strictly increasing. Stays monotone wherever the data is.
class pchip {
public:
    pchip() = default;
    pchip(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw std::invalid_argument("pchip: need >= 2 matching nodes");
        d_.resize(n);
        std::vector<double> s(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double dx = x_[i + 1] - x_[i];
            if (!(dx > 0.0)) throw std::invalid_argument("pchip: x not strictly increasing");
            s[i] = (y_[i + 1] - y_[i]) / dx;
        }
        d_[0] = end_slope(s[0], n > 2 ? s[1] : s[0], x_[1] - x_[0],
                          n > 2 ? x_[2] - x_[1] : x_[1] - x_[0]);
        d_[n - 1] = end_slope(s[n - 2], n > 2 ? s[n - 3] : s[n - 2],
                              x_[n - 1] - x_[n - 2],
                              n > 2 ? x_[n - 2] - x_[n - 3] : x_[n - 1] - x_[n - 2]);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (s[i - 1] * s[i] <= 0.0) { d_[i] = 0.0; continue; }
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            const double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
            d_[i] = (w0 + w1) / (w0 / s[i - 1] + w1 / s[i]);
        }
    }

    double operator()(double xq) const {
        const std::size_t i = cell(xq);
        double t, h;
        hermite_args(i, xq, t, h);
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    }

    double deriv(double xq) const {
        const std::size_t i = cell(xq);
        double t, h;
        hermite_args(i, xq, t, h);
        const double g00 = 6 * t * (t - 1), g10 = (1 - t) * (1 - 3 * t);
        const double g01 = 6 * t * (1 - t), g11 = t * (3 * t - 2);
        return (g00 * y_[i] + g01 * y_[i + 1]) / h + g10 * d_[i] + g11 * d_[i + 1];
    }

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }
    const std::vector<double>& xs() const { return x_; }
    const std::vector<double>& ys() const { return y_; }

private:
    static double end_slope(double s0, double s1, double h0, double h1) {
        double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0) return 0.0;
        if (s0 * s1 < 0.0 && std::abs(d) > 3.0 * std::abs(s0)) return 3.0 * s0;
        return d;
    }
    std::size_t cell(double xq) const {
        std::size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (x_[mid] <= xq ? lo : hi) = mid;
        }
        return lo;
    }
    void hermite_args(std::size_t i, double xq, double& t, double& h) const {
        h = x_[i + 1] - x_[i];
        t = (xq - x_[i]) / h;
    }

    std::vector<double> x_, y_, d_;
};

}  // namespace flatzone
