#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nvdnp/commands.hpp"
#include "nvdnp/errors.hpp"
#include "nvdnp/parallel.hpp"
#include "nvdnp/version.hpp"

using namespace nvdnp;

int main(int argc, char** argv) {
    CLI::App app{"NV-to-liquid polarization transfer: estimation, analytic prediction, "
                 "Gaussian-state simulation, comparison and parameter sweeps"};
    app.set_version_flag("--version", std::string(version_string));
    app.require_subcommand(1);

    CommandOptions opt;
    opt.threads = default_threads();

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* c = sub->add_option("--config", opt.config_path, "scenario config (JSON)");
        if (needs_config) c->required();
        sub->add_option("--out-dir", opt.out_dir, "output directory (created if absent)");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& v) { opt.seed = v; }, "override RNG seed");
        sub->add_option_function<int>(
            "--traj", [&](const int& v) { opt.n_traj = v; }, "override ensemble size");
        sub->add_option("--threads", opt.threads, "worker threads");
    };

    auto* est = app.add_subcommand("estimate", "estimate sigma^2, tau_c, gamma(t), chi");
    add_common(est);

    auto* pred = app.add_subcommand("predict", "closed-form polarization curves from an estimate");
    add_common(pred);
    std::string estimate_path;
    pred->add_option("--estimate", estimate_path, "estimate.json from a prior estimate run")
        ->required();

    auto* simc = app.add_subcommand("simulate", "Gaussian-state ensemble simulation");
    add_common(simc);
    SimulateOptions sim;
    simc->add_option_function<std::string>(
        "--dump-traj", [&](const std::string& v) { sim.dump_traj_dir = v; },
        "write per-trajectory coupling dumps here");
    simc->add_option_function<std::string>(
        "--replay-traj", [&](const std::string& v) { sim.replay_traj_dir = v; },
        "replay coupling dumps from here");

    auto* cmp = app.add_subcommand("compare", "compare curves (and measured data)");
    CompareOptions copt;
    cmp->add_option("curves", copt.curve_paths, "curve CSV files; first is the reference")
        ->required();
    cmp->add_option_function<std::string>(
        "--measured", [&](const std::string& v) { copt.measured_path = v; },
        "measured 3-column CSV (t_us, population, error)");
    cmp->add_option_function<double>(
        "--t1rho-us", [&](const double& v) { copt.t1rho_us = v; },
        "T1rho for alpha from the tail fit");
    cmp->add_option("--tail-fraction", copt.tail_fraction, "window fraction for the tail fit");
    cmp->add_option("--out-dir", copt.out_dir, "output directory");

    auto* swp = app.add_subcommand("sweep", "sweep one parameter, tabulate rates and exponents");
    add_common(swp);
    SweepOptions sopt;
    swp->add_option("--param", sopt.parameter, "one of rho|z0|D|B|T1rho")->required();
    swp->add_option("--values", sopt.values, "sweep values (comma separated)")
        ->required()
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints usage or help
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        if (est->parsed()) cmd_estimate(opt);
        if (pred->parsed()) cmd_predict(opt, estimate_path);
        if (simc->parsed()) cmd_simulate(opt, sim);
        if (cmp->parsed()) cmd_compare(copt);
        if (swp->parsed()) cmd_sweep(opt, sopt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return exit_ok;
}
