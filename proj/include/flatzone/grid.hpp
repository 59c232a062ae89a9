#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace flatzone {

// Uniform 1D grid for the interval (-R, R) or the radial coordinate of a ball
// B_R in R^N. Nodes include both ends; Dirichlet boundary nodes carry fixed
// zeros and the remaining nodes are solver unknowns. The radial grid treats
// r = 0 as an unknown with the symmetry closure -Lap u|_0 = 2N(u0 - u1)/h^2.
struct Grid {
    enum class Geometry { Interval, RadialBall };

    Geometry geometry = Geometry::Interval;
    int N = 1;       // space dimension (RadialBall only; Interval is 1D)
    double R = 1.0;  // half-width / ball radius
    int m = 0;       // total node count, boundaries included

    static Grid interval(double R, int m) {
        if (!(R > 0.0)) throw std::invalid_argument("Grid: R must be positive");
        if (m < 16) throw std::invalid_argument("Grid: need m >= 16 nodes");
        Grid g;
        g.geometry = Geometry::Interval;
        g.N = 1;
        g.R = R;
        g.m = m;
        return g;
    }
    static Grid ball(int N, double R, int m) {
        if (N < 1) throw std::invalid_argument("Grid: dimension N must be >= 1");
        if (!(R > 0.0)) throw std::invalid_argument("Grid: R must be positive");
        if (m < 16) throw std::invalid_argument("Grid: need m >= 16 nodes");
        Grid g;
        g.geometry = Geometry::RadialBall;
        g.N = N;
        g.R = R;
        g.m = m;
        return g;
    }

    bool radial() const { return geometry == Geometry::RadialBall; }
    double h() const { return (radial() ? R : 2.0 * R) / double(m - 1); }
    double node(int i) const { return radial() ? double(i) * h() : -R + double(i) * h(); }
    int center_index() const { return radial() ? 0 : (m - 1) / 2; }

    // unknown layout: interval nodes 1..m-2, ball nodes 0..m-2
    int unknowns() const { return radial() ? m - 1 : m - 2; }
    int node_of(int k) const { return radial() ? k : k + 1; }
    int unknown_of(int i) const { return radial() ? i : i - 1; }
    bool is_boundary(int i) const { return radial() ? i == m - 1 : (i == 0 || i == m - 1); }

    // volume quadrature weight of node i (measure r^{N-1} dr on the ball,
    // plain trapezoid on the interval)
    double weight(int i) const {
        const double hs = h();
        if (!radial()) return (i == 0 || i == m - 1) ? 0.5 * hs : hs;
        const double r = node(i);
        if (i == 0) return std::pow(0.5 * hs, double(N)) / double(N);
        if (i == m - 1) return 0.5 * hs * std::pow(r, double(N - 1));
        return hs * std::pow(r, double(N - 1));
    }

    // tridiagonal bands of the discrete -Laplacian acting on the unknowns
    // (row k: sub[k]*x_{k-1} + diag[k]*x_k + sup[k]*x_{k+1})
    void laplacian(std::vector<double>& sub, std::vector<double>& diag,
                   std::vector<double>& sup) const {
        const int n = unknowns();
        const double hs = h(), ih2 = 1.0 / (hs * hs);
        sub.assign(n, 0.0);
        diag.assign(n, 0.0);
        sup.assign(n, 0.0);
        if (!radial()) {
            for (int k = 0; k < n; ++k) {
                diag[k] = 2.0 * ih2;
                if (k > 0) sub[k] = -ih2;
                if (k + 1 < n) sup[k] = -ih2;
            }
            return;
        }
        diag[0] = 2.0 * double(N) * ih2;
        if (n > 1) sup[0] = -2.0 * double(N) * ih2;
        for (int k = 1; k < n; ++k) {
            const double r = node(k);
            const double rm = std::pow(r - 0.5 * hs, double(N - 1));
            const double rp = std::pow(r + 0.5 * hs, double(N - 1));
            const double rc = std::pow(r, double(N - 1));
            sub[k] = -ih2 * rm / rc;
            diag[k] = ih2 * (rm + rp) / rc;
            if (k + 1 < n) sup[k] = -ih2 * rp / rc;
        }
    }

    // row weights that symmetrize the -Laplacian (w_k * A_kj = w_j * A_jk),
    // used for Rayleigh quotients on the radial operator
    std::vector<double> symmetrizer() const {
        const int n = unknowns();
        std::vector<double> w(n, 1.0);
        if (!radial()) return w;
        const double hs = h();
        w[0] = std::pow(0.5 * hs, double(N - 1)) / (2.0 * double(N));
        for (int k = 1; k < n; ++k) w[k] = std::pow(node(k), double(N - 1));
        return w;
    }
};

// Thomas algorithm for (sub, diag, sup) x = rhs; bands are copied internally
inline std::vector<double> solve_tridiagonal(const std::vector<double>& sub,
                                             const std::vector<double>& diag,
                                             const std::vector<double>& sup,
                                             std::vector<double> rhs) {
    const int n = int(diag.size());
    std::vector<double> c(n, 0.0);
    double piv = diag[0];
    if (piv == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
    c[0] = (n > 1 ? sup[0] : 0.0) / piv;
    rhs[0] /= piv;
    for (int k = 1; k < n; ++k) {
        piv = diag[k] - sub[k] * c[k - 1];
        if (piv == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
        if (k + 1 < n) c[k] = sup[k] / piv;
        rhs[k] = (rhs[k] - sub[k] * rhs[k - 1]) / piv;
    }
    for (int k = n - 2; k >= 0; --k) rhs[k] -= c[k] * rhs[k + 1];
    return rhs;
}

namespace detail {

inline void apply_tridiag(const std::vector<double>& sub, const std::vector<double>& diag,
                          const std::vector<double>& sup, const std::vector<double>& x,
                          std::vector<double>& y) {
    const int n = int(diag.size());
    for (int k = 0; k < n; ++k) {
        double s = diag[k] * x[k];
        if (k > 0) s += sub[k] * x[k - 1];
        if (k + 1 < n) s += sup[k] * x[k + 1];
        y[k] = s;
    }
}

inline double inf_norm(const std::vector<double>& x) {
    double m = 0.0;
    for (double t : x) m = std::max(m, std::abs(t));
    return m;
}

}  // namespace detail

}  // namespace flatzone
