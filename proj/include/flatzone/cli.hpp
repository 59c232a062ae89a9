#pragma once

// Command-line front end. Five subcommands over one flag vocabulary:
//   transform  tabulate the change of variables (s,H,psi) and (v,g,gprime)
//   shoot      radial profile from a starting level, radii and critical lambda
//   solve      Dirichlet solve with flat-set detection and diagnostics
//   threshold  existence/nonexistence bounds and threshold estimate
//   sweep      solve across a lambda range, one CSV row per lambda
//
// Exit codes: 0 success, 2 usage/configuration error, 3 computation failure.
// All validation happens before any output file is opened.

#include <CLI11.hpp>

#include <flatzone/bvp.hpp>
#include <flatzone/diagnostics.hpp>
#include <flatzone/grid.hpp>
#include <flatzone/io.hpp>
#include <flatzone/nonlinearity.hpp>
#include <flatzone/shooting.hpp>
#include <flatzone/thresholds.hpp>
#include <flatzone/transform.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace flatzone::cli {

inline constexpr const char* kVersion = "flatzone 1.0.0";

struct RunConfig {
    std::string cmd;
    double A = 1.0, gamma = 1.0, sigma = 1.0;
    std::string h_table;
    std::string geometry = "interval";
    int N = 1;
    double R = 1.0;
    int m = 2001;
    double lambda = 1.0;
    std::string lambda_range;
    double ell = 0.0;
    bool ell_set = false;
    int samples = -1;  // resolved per subcommand after parsing
    double f_const = 1.0;
    std::string f_table;
    double tol = 1e-8;
    double tol_lambda = 1e-2;
    std::string out, report;
};

namespace detail {

inline std::string config_echo(const RunConfig& c) {
    std::ostringstream o;
    o << "cmd=" << c.cmd << " A=" << io::num(c.A) << " gamma=" << io::num(c.gamma)
      << " sigma=" << io::num(c.sigma) << " h_table=" << (c.h_table.empty() ? "-" : c.h_table)
      << " geometry=" << c.geometry << " N=" << c.N << " R=" << io::num(c.R) << " m=" << c.m
      << " lambda=" << io::num(c.lambda)
      << " lambda_range=" << (c.lambda_range.empty() ? "-" : c.lambda_range)
      << " ell=" << (c.ell_set ? io::num(c.ell) : std::string("L")) << " samples=" << c.samples
      << " f_const=" << io::num(c.f_const) << " f_table=" << (c.f_table.empty() ? "-" : c.f_table)
      << " tol=" << io::num(c.tol) << " tol_lambda=" << io::num(c.tol_lambda);
    return o.str();
}

inline std::string csv_preamble(const std::string& echo) {
    return std::string("# ") + kVersion + "\n# config: " + echo + "\n";
}

inline Nonlinearity build_nonlinearity(const RunConfig& c) {
    if (!c.h_table.empty()) return Nonlinearity::tabulated(io::read_table(c.h_table), c.sigma);
    return Nonlinearity::model_power(c.A, c.gamma, c.sigma);
}

inline Grid build_grid(const RunConfig& c) {
    if (c.geometry == "interval") return Grid::interval(c.R, c.m);
    if (c.geometry == "ball") return Grid::ball(c.N, c.R, c.m);
    throw std::invalid_argument("geometry must be 'interval' or 'ball'");
}

inline std::vector<double> build_f(const RunConfig& c, const Grid& g) {
    if (!c.f_table.empty()) {
        const auto tab = io::read_table(c.f_table);
        std::vector<double> f(g.m);
        for (int i = 0; i < g.m; ++i) f[i] = io::interp_table(tab, g.node(i));
        return f;
    }
    if (!(c.f_const > 0.0)) throw std::invalid_argument("f-const must be positive");
    return std::vector<double>(g.m, c.f_const);
}

inline void thresholds_into(io::ordered_json& j, const ThresholdReport& r) {
    j["lambda1"] = r.lambda1;
    j["H_sigma"] = io::json_number(r.H_sigma);
    j["psi_sigma"] = r.psi_sigma;
    if (r.lambda_ne_upper) j["lambda_ne_upper"] = *r.lambda_ne_upper;
    if (r.lambda_sub_certificate) j["lambda_sub_certificate"] = *r.lambda_sub_certificate;
    j["lambda_lower_linear"] = r.lambda_lower_linear;
    if (r.Lambda_hat) {
        j["Lambda_hat"] = r.Lambda_hat->Lambda_hat;
        j["bracket_lo"] = r.Lambda_hat->bracket_lo;
        j["bracket_hi"] = r.Lambda_hat->bracket_hi;
        j["predicate_calls"] = r.Lambda_hat->predicate_calls;
        j["estimate_converged"] = r.Lambda_hat->converged;
        if (!r.Lambda_hat->converged) j["estimate_failure_message"] = r.Lambda_hat->failure_message;
    }
    j["regime"] =
        r.regime == ThresholdRegime::AlwaysExists ? "AlwaysExists" : "FiniteThreshold";
}

// "A:B:STEP" -> { A, A+STEP, ..., <= B }; index-based so steps do not drift.
inline std::vector<double> parse_lambda_range(const std::string& spec) {
    const auto bad = [&](const char* why) {
        throw std::invalid_argument(std::string("lambda-range '") + spec + "': " + why);
    };
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
        const std::size_t c = spec.find(':', pos);
        parts.push_back(spec.substr(pos, c == std::string::npos ? c : c - pos));
        if (c == std::string::npos) break;
        pos = c + 1;
    }
    if (parts.size() != 3) bad("expected A:B:STEP");
    double vals[3];
    for (int i = 0; i < 3; ++i) {
        char* end = nullptr;
        vals[i] = std::strtod(parts[i].c_str(), &end);
        if (parts[i].empty() || end != parts[i].c_str() + parts[i].size() ||
            !std::isfinite(vals[i]))
            bad("unparseable number");
    }
    const double a = vals[0], b = vals[1], step = vals[2];
    if (!(step > 0.0)) bad("step must be positive");
    if (!(a > 0.0)) bad("start must be positive");
    if (b < a) bad("range is empty");
    const long long kmax = static_cast<long long>(std::floor((b - a) / step + 1e-9));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(kmax) + 1);
    for (long long k = 0; k <= kmax; ++k) out.push_back(a + double(k) * step);
    return out;
}

}  // namespace detail

// --- transform: two CSV blocks sampling the forward and inverse data --------

inline int cmd_transform(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Nonlinearity nl = detail::build_nonlinearity(cfg);
    const Transform tr(nl);
    if (cfg.samples < 1) throw std::invalid_argument("samples must be >= 1");
    const int S = cfg.samples;
    const double sg = nl.sigma(), L = tr.L();
    const std::string echo = detail::config_echo(cfg);

    std::ostringstream csv;
    csv << detail::csv_preamble(echo) << "s,H,psi\n";
    for (int i = 0; i < S; ++i) {
        const double s = sg * double(i) / double(S);
        csv << io::num(s) << ',' << io::num(tr.eval_H(s)) << ',' << io::num(tr.eval_psi(s))
            << '\n';
    }
    csv << "v,g,gprime\n";
    for (int i = 0; i < S; ++i) {
        const double v = L * double(i) / double(S);
        csv << io::num(v) << ',' << io::num(tr.eval_g(v)) << ',' << io::num(tr.eval_g_prime(v))
            << '\n';
    }
    const int rc = io::write_output(cfg.out, csv.str(), out, err);
    if (rc != 0 || cfg.report.empty()) return rc;

    io::ordered_json j;
    j["version"] = kVersion;
    j["config"] = echo;
    j["kind"] = nl.kind() == Nonlinearity::Kind::ModelPower ? "model_power" : "tabulated";
    j["closed_form"] = tr.closed_form();
    j["sigma"] = sg;
    j["L"] = L;
    j["G_of_L"] = tr.G_of_L();
    j["H_sigma"] = io::json_number(nl.H_sigma());
    return io::write_output(cfg.report, j.dump(2) + "\n", out, err);
}

// --- shoot: one radial profile plus its radii ------------------------------

inline int cmd_shoot(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Nonlinearity nl = detail::build_nonlinearity(cfg);
    const Transform tr(nl);
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(cfg.R > 0.0)) throw std::invalid_argument("R must be positive");
    const double L = tr.L();
    const double ell = cfg.ell_set ? cfg.ell : L;
    if (ell < 0.0 || ell > L)
        throw std::invalid_argument("ell outside [0, L], L = " + io::num(L));
    const std::string echo = detail::config_echo(cfg);

    const double R_L = radius(tr, L, cfg.lambda);
    const double R_ell = ell == 0.0 ? 0.0 : (ell >= L ? R_L : radius(tr, ell, cfg.lambda));
    const double crit = critical_lambda(tr, cfg.R);

    std::ostringstream csv;
    csv << detail::csv_preamble(echo) << "s,v,vprime\n";
    if (ell == 0.0) {
        csv << "0,0,0\n";
    } else if (std::isfinite(R_ell)) {
        const ShootingSolution sh = trace(tr, ell, cfg.lambda, cfg.samples);
        for (const auto& p : sh.samples)
            csv << io::num(p.s) << ',' << io::num(p.v) << ',' << io::num(p.v_prime) << '\n';
    }
    // infinite radius: the profile never reaches zero, no rows to emit

    const int rc = io::write_output(cfg.out, csv.str(), out, err);
    if (rc != 0) return rc;

    io::ordered_json j;
    j["version"] = kVersion;
    j["config"] = echo;
    j["ell"] = ell;
    j["lambda"] = cfg.lambda;
    j["R_ell"] = io::json_number(R_ell);
    j["R_L"] = io::json_number(R_L);
    j["critical_lambda_for_R"] = io::json_number(crit);
    if (cfg.report.empty()) return 0;
    return io::write_output(cfg.report, j.dump(2) + "\n", out, err);
}

// --- solve: Dirichlet solve, flat set, residuals, diagnostics ---------------

inline int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Nonlinearity nl = detail::build_nonlinearity(cfg);
    const Transform tr(nl);
    const Grid g = detail::build_grid(cfg);
    const std::vector<double> f = detail::build_f(cfg, g);
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    const std::string echo = detail::config_echo(cfg);

    const BvpSolution sol = solve_semilinear(tr, cfg.lambda, f, g,
                                             {100, 1000, 10000, 100000, 1000000, 10000000},
                                             cfg.tol);

    if (!sol.converged) {
        io::ordered_json j;
        j["version"] = kVersion;
        j["config"] = echo;
        j["converged"] = false;
        j["failure_message"] = sol.failure_message;
        j["lambda"] = cfg.lambda;
        j["m"] = g.m;
        j["n_schedule_used"] = sol.n_schedule_used;
        j["newton_iterations"] = sol.newton_iterations;
        j["residual_inf"] = io::json_number(sol.residual_inf);
        io::write_output(cfg.report, j.dump(2) + "\n", out, err);
        err << "error: solve failed: " << sol.failure_message << "\n";
        return 3;
    }

    const QuasilinearResidual qr = quasilinear_residual(tr, sol, cfg.lambda, f);
    const ThresholdReport thr = threshold_report(tr, f, g, /*with_estimate=*/false);
    const TouchingFit fit = fit_touching_behavior(sol, tr);
    const DefectMeasure dm = defect_measure(sol, cfg.lambda, f, nl);
    const EnergyCheck ec = energy_bound_check(sol, cfg.lambda, f, nl);
    const bool fe = sol.flat_set.empty();

    std::ostringstream csv;
    csv << detail::csv_preamble(echo) << "coord,v,u,flat\n";
    for (int i = 0; i < g.m; ++i) {
        const bool fl = !fe && i >= sol.flat_set.first && i <= sol.flat_set.last;
        csv << io::num(g.node(i)) << ',' << io::num(sol.v[i]) << ',' << io::num(sol.u[i]) << ','
            << (fl ? '1' : '0') << '\n';
    }

    io::ordered_json j;
    j["version"] = kVersion;
    j["config"] = echo;
    j["converged"] = true;
    j["lambda"] = cfg.lambda;
    j["geometry"] = cfg.geometry;
    j["N"] = g.N;
    j["R"] = g.R;
    j["m"] = g.m;
    j["L"] = sol.L;
    j["L_n"] = sol.L_n;
    j["delta_flat"] = sol.delta_flat;
    j["n_final"] = sol.n_final;
    j["schedule_converged"] = sol.schedule_converged;
    j["n_schedule_used"] = sol.n_schedule_used;
    j["newton_iterations"] = sol.newton_iterations;
    long long total_it = 0;
    for (const int it : sol.newton_iterations) total_it += it;
    j["total_newton_iterations"] = total_it;
    j["level_distance"] = sol.level_distance;
    j["residual_inf"] = sol.residual_inf;
    j["offplateau_residual_inf"] = qr.offplateau_residual_inf;
    j["plateau_node_count"] = static_cast<long long>(qr.plateau_nodes.size());
    if (!qr.plateau_density.empty()) {
        const auto [dmin, dmax] =
            std::minmax_element(qr.plateau_density.begin(), qr.plateau_density.end());
        j["plateau_density_min"] = *dmin;
        j["plateau_density_max"] = *dmax;
    }
    j["collar_residual_inf"] = qr.collar_residual_inf;
    j["collar_nodes"] = qr.collar_nodes;
    j["delta_touch"] = qr.delta_touch;
    j["flat_empty"] = fe;
    if (!fe) {
        j["flat_first"] = sol.flat_set.first;
        j["flat_last"] = sol.flat_set.last;
        j["flat_lo"] = g.node(sol.flat_set.first);
        j["flat_hi"] = g.node(sol.flat_set.last);
    }
    j["flat_half_width"] =
        fe ? 0.0
           : (g.radial() ? g.node(sol.flat_set.last)
                         : 0.5 * (g.node(sol.flat_set.last) - g.node(sol.flat_set.first)));
    j["max_u"] = *std::max_element(sol.u.begin(), sol.u.end());
    j["max_v"] = *std::max_element(sol.v.begin(), sol.v.end());
    detail::thresholds_into(j, thr);
    try {
        const AsymptoticsPrediction pr =
            curvature_asymptotics(nl, cfg.lambda, f[g.center_index()], g.radial() ? g.N : 1);
        j["prediction_applicable"] = true;
        j["prediction_case"] = to_string(pr.case_tag);
        j["prediction_u_second_deriv"] = pr.predicted_u_second_deriv_at_0;
        if (pr.predicted_G_slope) j["prediction_G_slope"] = *pr.predicted_G_slope;
    } catch (const std::logic_error& e) {
        j["prediction_applicable"] = false;
        j["prediction_reason"] = e.what();
    }
    j["fit_applicable"] = fit.applicable;
    if (fit.applicable) {
        j["fit_u_second_deriv"] = fit.u_second_deriv;
        j["fit_u_center"] = fit.u_center_fit;
        if (fit.G_slope) j["fit_G_slope"] = *fit.G_slope;
        j["fit_nodes"] = fit.fit_nodes;
    } else {
        j["fit_reason"] = fit.reason;
    }
    try {
        j["plateau_flux"] = plateau_flux(sol);
    } catch (const std::logic_error& e) {
        j["plateau_flux_reason"] = e.what();
    }
    j["defect_total_mass"] = dm.total_mass;
    j["energy_gradient"] = ec.gradient_energy;
    j["energy_datum_mass"] = ec.datum_mass;
    j["energy_margin"] = ec.margin;
    j["energy_holds"] = ec.holds;

    const int rc = io::write_output(cfg.out, csv.str(), out, err);
    if (rc != 0) return rc;
    return io::write_output(cfg.report, j.dump(2) + "\n", out, err);
}

// --- threshold: bounds, certificates, and the bracketed estimate ------------

inline int cmd_threshold(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Nonlinearity nl = detail::build_nonlinearity(cfg);
    const Transform tr(nl);
    const Grid g = detail::build_grid(cfg);
    const std::vector<double> f = detail::build_f(cfg, g);
    if (!(cfg.tol_lambda > 0.0)) throw std::invalid_argument("tol-lambda must be positive");
    const std::string echo = detail::config_echo(cfg);

    const ThresholdReport thr = threshold_report(tr, f, g, /*with_estimate=*/true,
                                                 cfg.tol_lambda);

    io::ordered_json j;
    j["version"] = kVersion;
    j["config"] = echo;
    detail::thresholds_into(j, thr);
    const std::string path = !cfg.report.empty() ? cfg.report : cfg.out;
    return io::write_output(path, j.dump(2) + "\n", out, err);
}

// --- sweep: one solve per lambda, monotonicity enforced ---------------------

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Nonlinearity nl = detail::build_nonlinearity(cfg);
    const Transform tr(nl);
    const Grid g = detail::build_grid(cfg);
    const std::vector<double> f = detail::build_f(cfg, g);
    if (cfg.lambda_range.empty())
        throw std::invalid_argument("sweep requires --lambda-range A:B:STEP");
    const std::vector<double> lambdas = detail::parse_lambda_range(cfg.lambda_range);
    const std::string echo = detail::config_echo(cfg);

    std::ostringstream csv;
    csv << detail::csv_preamble(echo) << "lambda,max_u,flat_width,iterations\n";
    double prev_max = -1.0;
    int flat_rows = 0;
    double first_flat = 0.0;
    for (const double lam : lambdas) {
        const BvpSolution sol = solve_semilinear(tr, lam, f, g,
                                                 {100, 1000, 10000, 100000, 1000000, 10000000},
                                                 cfg.tol);
        if (!sol.converged)
            throw std::runtime_error("solve failed at lambda = " + io::num(lam) + ": " +
                                     sol.failure_message);
        const double mu = *std::max_element(sol.u.begin(), sol.u.end());
        if (mu + 1e-8 < prev_max)
            throw std::runtime_error("max_u decreased at lambda = " + io::num(lam) +
                                     ": sweep is not monotone");
        prev_max = std::max(prev_max, mu);
        const double width =
            sol.flat_set.empty() ? 0.0
                                 : g.node(sol.flat_set.last) - g.node(sol.flat_set.first);
        long long its = 0;
        for (const int it : sol.newton_iterations) its += it;
        csv << io::num(lam) << ',' << io::num(mu) << ',' << io::num(width) << ',' << its
            << '\n';
        if (width > 0.0 && flat_rows == 0) first_flat = lam;
        if (width > 0.0) ++flat_rows;
    }

    const int rc = io::write_output(cfg.out, csv.str(), out, err);
    if (rc != 0 || cfg.report.empty()) return rc;

    io::ordered_json j;
    j["version"] = kVersion;
    j["config"] = echo;
    j["count"] = static_cast<long long>(lambdas.size());
    j["lambda_first"] = lambdas.front();
    j["lambda_last"] = lambdas.back();
    j["flat_rows"] = flat_rows;
    if (flat_rows > 0) j["first_flat_lambda"] = first_flat;
    return io::write_output(cfg.report, j.dump(2) + "\n", out, err);
}

// --- dispatcher --------------------------------------------------------------

namespace detail {

inline void add_common(CLI::App* c, RunConfig& cfg) {
    c->add_option("--A", cfg.A, "blow-up coefficient A > 0");
    c->add_option("--gamma", cfg.gamma, "blow-up exponent gamma > 0");
    c->add_option("--sigma", cfg.sigma, "blow-up level sigma > 0");
    c->add_option("--h-table", cfg.h_table, "CSV table s,h(s) replacing the power-law model");
    c->add_option("--geometry", cfg.geometry, "domain shape")
        ->check(CLI::IsMember({"interval", "ball"}));
    c->add_option("--N", cfg.N, "space dimension (ball geometry)");
    c->add_option("--R", cfg.R, "domain half-width / ball radius");
    c->add_option("--m", cfg.m, "total grid nodes including boundaries");
    c->add_option("--lambda", cfg.lambda, "datum scale");
    c->add_option("--lambda-range", cfg.lambda_range, "sweep range A:B:STEP");
    c->add_option("--ell", cfg.ell, "starting level for the shot profile (default: L)");
    c->add_option("--samples", cfg.samples, "sample count for tabulated output");
    c->add_option("--f-const", cfg.f_const, "constant datum value");
    c->add_option("--f-table", cfg.f_table, "CSV table x,f(x) for the datum");
    c->add_option("--tol", cfg.tol, "nonlinear solver tolerance");
    c->add_option("--tol-lambda", cfg.tol_lambda, "bracket width for the threshold estimate");
    c->add_option("--out", cfg.out, "CSV output path (default: stdout)");
    c->add_option("--report", cfg.report, "JSON report path");
}

}  // namespace detail

// Entry point shared by the binary and in-process tests. `args` excludes the
// program name.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    if (args.size() == 1 && args[0] == "--version") {
        out << kVersion << "\n";
        return 0;
    }
    RunConfig cfg;
    CLI::App app{"numerical laboratory for flat solutions of singular quasilinear problems"};
    app.require_subcommand(1);
    detail::add_common(app.add_subcommand("transform", "tabulate the change of variables"),
                       cfg);
    detail::add_common(
        app.add_subcommand("shoot", "radial profile, support radii, critical lambda"), cfg);
    detail::add_common(
        app.add_subcommand("solve", "Dirichlet solve with flat-set detection"), cfg);
    detail::add_common(
        app.add_subcommand("threshold", "existence / nonexistence threshold report"), cfg);
    detail::add_common(app.add_subcommand("sweep", "solve across a lambda range"), cfg);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    cfg.cmd = sub->get_name();
    cfg.ell_set = sub->count("--ell") > 0;
    if (sub->count("--samples") == 0)
        cfg.samples = cfg.cmd == "transform" ? 101 : (cfg.cmd == "shoot" ? 33 : 0);

    try {
        if (cfg.cmd == "transform") return cmd_transform(cfg, out, err);
        if (cfg.cmd == "shoot") return cmd_shoot(cfg, out, err);
        if (cfg.cmd == "solve") return cmd_solve(cfg, out, err);
        if (cfg.cmd == "threshold") return cmd_threshold(cfg, out, err);
        return cmd_sweep(cfg, out, err);
    } catch (const std::logic_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace flatzone::cli
