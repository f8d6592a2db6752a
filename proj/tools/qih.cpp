// qih: terminal ingredients, regions and closed-loop runs for QIH-NMPC.

#include <iostream>

#include <CLI11.hpp>

#include "qih/cli.hpp"

int main(int argc, char** argv) {
    using namespace qih;

    CLI::App app{"Terminal ingredient synthesis and NMPC simulation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string model, config, approach, method, lyap;
    double kappa = 0, rho_x = 0, rho_u = 0, tp = 0, dc = 0, t_end = 0, t_max = 0, beta = 0;
    std::vector<std::string> ic;
    std::string out;
    int samples = 0, jobs = 0, iteration = 0;
    std::uint64_t seed = 0;
    std::vector<double> grid;

    auto* o_model = app.add_option("--model", model, "cstr2 | linear-test");
    auto* o_config = app.add_option("--config", config, "flat JSON key/value file");
    auto* o_approach = app.add_option("--approach", approach, "ca | ac | lqr");
    auto* o_kappa = app.add_option("--kappa", kappa);
    auto* o_rho_x = app.add_option("--rho-x", rho_x);
    auto* o_rho_u = app.add_option("--rho-u", rho_u);
    auto* o_method = app.add_option("--method", method, "norm | ineq | both");
    auto* o_lyap = app.add_option("--lyapunov-form", lyap, "standard | transposed");
    auto* o_tp = app.add_option("--tp", tp, "prediction horizon time");
    auto* o_dc = app.add_option("--dc", dc, "control interval");
    auto* o_t_end = app.add_option("--t-end", t_end);
    auto* o_t_max = app.add_option("--t-max", t_max);
    auto* o_ic = app.add_option("--ic", ic, "initial deviation state \"x1,x2\" (repeatable)");
    auto* o_out = app.add_option("--out", out, "output directory");
    auto* o_beta = app.add_option("--beta", beta, "alpha shrink factor");
    auto* o_samples = app.add_option("--samples", samples, "boundary samples per shell");
    auto* o_seed = app.add_option("--seed", seed);
    auto* o_jobs = app.add_option("--jobs", jobs, "worker threads (0: all cores)");
    auto* o_iteration = app.add_option("--iteration", iteration, "sweep iteration (1 or 2)");
    auto* o_grid = app.add_option("--grid", grid, "explicit sweep values")->delimiter(',');

    auto* linearize = app.add_subcommand("linearize", "Jacobian linearization at the operating point");
    auto* region = app.add_subcommand("region", "terminal ingredients and region for one approach");
    auto* sweep = app.add_subcommand("sweep", "parameter sweep of region area");
    auto* simulate = app.add_subcommand("simulate", "receding-horizon closed-loop runs");
    auto* min_horizon = app.add_subcommand("min-horizon", "minimum feasible prediction horizon matrix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : cli::kConfigError;
    }

    return cli::guarded([&] {
        RunConfig cfg;
        if (*o_config) cfg = parse_config(io::read_text(config));
        if (*o_model) cfg.model = model;
        if (*o_approach) cfg.approach = parse_approach(approach);
        if (*o_kappa) cfg.kappa = kappa;
        if (*o_rho_x) cfg.rho_x = rho_x;
        if (*o_rho_u) cfg.rho_u = rho_u;
        if (*o_method) cfg.methods = detail::parse_methods(method);
        if (*o_lyap) cfg.lyapunov_form = parse_lyapunov_form(lyap);
        if (*o_tp) cfg.T_p = tp;
        if (*o_dc) cfg.dc = dc;
        if (*o_t_end) cfg.t_end = t_end;
        if (*o_t_max) cfg.T_max = t_max;
        if (*o_ic) {
            cfg.ics.clear();
            for (const auto& s : ic) cfg.ics.push_back(parse_ic(s));
        }
        if (*o_out) cfg.out = out;
        if (*o_beta) cfg.beta = beta;
        if (*o_samples) cfg.samples = samples;
        if (*o_seed) cfg.seed = seed;
        if (*o_jobs) cfg.jobs = jobs;
        if (*o_iteration) cfg.sweep_iteration = iteration;
        if (*o_grid) {
            cfg.sweep_values = grid;
            cfg.sweep_values_set = true;
        }

        if (*linearize) return cli::cmd_linearize(cfg, std::cout);
        if (*region) return cli::cmd_region(cfg, std::cout);
        if (*sweep) return cli::cmd_sweep(cfg, std::cout);
        if (*simulate) return cli::cmd_simulate(cfg, std::cout);
        if (*min_horizon) return cli::cmd_min_horizon(cfg, std::cout);
        return static_cast<int>(cli::kConfigError);
    });
}
