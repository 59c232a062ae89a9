// Demo: shoot the touching profile for a few blow-up exponents and show how
// the support radius reacts, then glue a plateau into a flat interval profile.

#include <flatzone/shooting.hpp>
#include <flatzone/transform.hpp>

#include <cstdio>

using namespace flatzone;

int main() {
    std::printf("touching profiles at lambda = 6, A = 1, sigma = 1\n");
    std::printf("%8s %12s %12s %14s\n", "gamma", "L", "R_L", "crit lambda(R=1)");
    for (const double gamma : {0.5, 1.0, 1.5, 2.0}) {
        const Transform t(Nonlinearity::model_power(1.0, gamma, 1.0));
        const double RL = radius(t, t.L(), 6.0);
        const double crit = critical_lambda(t, 1.0);
        std::printf("%8.2f %12.8f %12.6g %14.6g\n", gamma, t.L(), RL, crit);
    }

    const Transform t(Nonlinearity::model_power(1.0, 1.0, 1.0));
    std::printf("\nlevel-set trace, gamma = 1, ell = L, lambda = 6\n");
    const ShootingSolution sh = trace(t, t.L(), 6.0, 17);
    std::printf("%12s %12s %12s\n", "s", "v", "v'");
    for (const auto& p : sh.samples) std::printf("%12.6f %12.8f %12.6f\n", p.s, p.v, p.v_prime);

    std::printf("\nflat family member with plateau 0.3 (lambda = 6):\n");
    const FlatFamilyProfile w = flat_family(t, 6.0, 0.3);
    std::printf("%12s %12s %12s\n", "s", "w", "w'");
    for (const double s : {0.0, 0.15, 0.3, 0.6, 1.0, 1.3})
        std::printf("%12.3f %12.8f %12.6f\n", s, w.value(s), w.derivative(s));
    return 0;
}
