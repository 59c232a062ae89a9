// Demo: full threshold report for three blow-up strengths of the model
// nonlinearity on the unit interval with f = 1.

#include <flatzone/thresholds.hpp>

#include <cstdio>

using namespace flatzone;

static void show(double gamma) {
    const Transform t(Nonlinearity::model_power(1.0, gamma, 1.0));
    const Grid g = Grid::interval(1.0, 2001);
    const std::vector<double> f(g.m, 1.0);
    const ThresholdReport r = threshold_report(t, f, g);
    std::printf("gamma = %.2f\n", gamma);
    std::printf("  lambda1            = %.9f\n", r.lambda1);
    std::printf("  psi(sigma)         = %.9f\n", r.psi_sigma);
    if (r.lambda_ne_upper) std::printf("  nonexistence above = %.9f\n", *r.lambda_ne_upper);
    if (r.lambda_sub_certificate)
        std::printf("  subsolution at     = %.9f\n", *r.lambda_sub_certificate);
    std::printf("  linear lower bound = %.9f\n", r.lambda_lower_linear);
    if (r.Lambda_hat)
        std::printf("  estimate           = %.6f in [%.6f, %.6f] (%d solves)\n",
                    r.Lambda_hat->Lambda_hat, r.Lambda_hat->bracket_lo, r.Lambda_hat->bracket_hi,
                    r.Lambda_hat->predicate_calls);
    std::printf("  regime             = %s\n\n",
                r.regime == ThresholdRegime::AlwaysExists ? "AlwaysExists" : "FiniteThreshold");
}

int main() {
    for (const double gamma : {0.5, 1.0, 2.0}) show(gamma);
    return 0;
}
