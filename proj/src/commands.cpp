#include "nvdnp/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "nvdnp/analytic.hpp"
#include "nvdnp/errors.hpp"
#include "nvdnp/gaussian_sim.hpp"
#include "nvdnp/io.hpp"
#include "nvdnp/statistics.hpp"

namespace nvdnp {

namespace fs = std::filesystem;

namespace {

class Timer {
public:
    Timer() : t0_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

void print_warnings(const ScenarioConfig& cfg) {
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
}

} // namespace

ScenarioConfig load_config_with_overrides(const CommandOptions& opt) {
    ScenarioConfig cfg = ScenarioConfig::load(opt.config_path);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.n_traj) {
        cfg.n_traj = *opt.n_traj;
        cfg.validate();
    }
    return cfg;
}

// ---------------------------------------------------------------------------

void cmd_estimate(const CommandOptions& opt) {
    Timer timer;
    ScenarioConfig cfg = load_config_with_overrides(opt);
    print_warnings(cfg);
    ensure_dir(opt.out_dir);

    CorrelationEstimate est = estimate_correlation(cfg, cfg.n_traj, opt.threads);

    const std::string report_path = join_path(opt.out_dir, "estimate.json");
    write_text_file(report_path, estimate_to_json(cfg, est));

    RunManifest man;
    man.command = "estimate";
    man.config_hash = cfg.content_hash();
    man.seed = cfg.seed;
    man.seed_streams = {"correlation[0.." + std::to_string(cfg.n_traj - 1) + "]",
                        "moments[0..63]"};
    man.threads = opt.threads;
    man.timings_ms["estimate"] = timer.ms();
    man.add_output(report_path);
    man.write(join_path(opt.out_dir, "estimate_manifest.json"));

    std::cout << "tau_c = " << est.tau_c << " +- " << est.tau_c_se << " us, sigma2 = "
              << est.sigma2 << " +- " << est.sigma2_se << " rad^2/us^2, chi = " << est.chi
              << " (" << est.regime_label << ")\n";
}

// ---------------------------------------------------------------------------

void cmd_predict(const CommandOptions& opt, const std::string& estimate_path) {
    Timer timer;
    ScenarioConfig cfg = load_config_with_overrides(opt);
    print_warnings(cfg);
    ensure_dir(opt.out_dir);
    CorrelationEstimate est = estimate_from_json(read_text_file(estimate_path));

    AnalyticModel model;
    model.n_spins = static_cast<double>(cfg.n_spins());
    model.sigma2 = est.sigma2;
    model.tau_c = est.tau_c;
    model.n_bath = cfg.bath_mean_population;

    const std::int64_t steps = cfg.n_steps();
    PolarizationCurve curve;
    curve.provenance = CurveProvenance::analytic;
    curve.times.resize(steps + 1);
    curve.n_mean.resize(steps + 1);
    for (std::int64_t k = 0; k <= steps; ++k) {
        curve.times[k] = k * cfg.dt;
        curve.n_mean[k] = closed_form(model, curve.times[k]);
    }

    const double horizon = validity_horizon(cfg, est);
    const double tail_rate =
        long_time_rate(model) + (cfg.t1rho ? 1.0 / *cfg.t1rho : 0.0);

    std::map<std::string, std::string> ann;
    ann["model"] = "closed-form exponential-kernel";
    ann["n_spins"] = std::to_string(cfg.n_spins());
    ann["sigma2_rad2_per_us2"] = fmt(est.sigma2);
    ann["tau_c_us"] = fmt(est.tau_c);
    ann["validity_horizon_us"] = fmt(horizon);
    ann["tail_rate_per_us"] = fmt(tail_rate);
    if (horizon < cfg.t_max)
        ann["warning"] = "validity horizon " + fmt(horizon) +
                         " us is shorter than t_max " + fmt(cfg.t_max) + " us";

    const std::string closed_path = join_path(opt.out_dir, "predicted.csv");
    write_curve_csv(closed_path, curve, ann);

    RunManifest man;
    man.command = "predict";
    man.config_hash = cfg.content_hash();
    man.seed = cfg.seed;
    man.threads = opt.threads;
    man.add_output(closed_path);

    if (cfg.t1rho) {
        AnalyticModel relaxed = model;
        relaxed.t1rho = cfg.t1rho;
        PolarizationCurve rc = curve;
        for (std::int64_t k = 0; k <= steps; ++k)
            rc.n_mean[k] = closed_form_with_relaxation(relaxed, rc.times[k]);
        ann["model"] = "closed-form exponential-kernel + T1rho channel";
        ann["t1rho_us"] = fmt(*cfg.t1rho);
        const std::string rel_path = join_path(opt.out_dir, "predicted_t1rho.csv");
        write_curve_csv(rel_path, rc, ann);
        man.add_output(rel_path);
    }

    man.timings_ms["predict"] = timer.ms();
    man.write(join_path(opt.out_dir, "predict_manifest.json"));
}

// ---------------------------------------------------------------------------

void cmd_simulate(const CommandOptions& opt, const SimulateOptions& sim) {
    Timer timer;
    ScenarioConfig cfg = load_config_with_overrides(opt);
    print_warnings(cfg);
    ensure_dir(opt.out_dir);

    RunOptions ropt;
    ropt.threads = opt.threads;
    ropt.n_traj = opt.n_traj;
    if (sim.dump_traj_dir) {
        ensure_dir(*sim.dump_traj_dir);
        ropt.dump_dir = sim.dump_traj_dir;
    }
    if (sim.replay_traj_dir) ropt.replay_dir = sim.replay_traj_dir;
    if (sim.replay_traj_dir && cfg.detuning_fluctuations)
        throw ValidationError("replay carries couplings only; detuning_fluctuations requires "
                              "live generation");

    SimOutcome out = run(cfg, ropt);

    std::map<std::string, std::string> ann;
    ann["engine"] = out.diagnostics.engine;
    ann["n_traj"] = std::to_string(ropt.n_traj ? *ropt.n_traj : cfg.n_traj);
    ann["n_spins"] = std::to_string(cfg.n_spins());
    const std::string curve_path = join_path(opt.out_dir, "simulated.csv");
    write_curve_csv(curve_path, out.curve, ann);

    std::ostringstream diag;
    diag << "engine = " << out.diagnostics.engine << "\n"
         << "bath_gain = " << out.bath_gain << "\n"
         << "max_step_norm_drift = " << out.diagnostics.max_step_norm_drift << "\n"
         << "max_hermiticity_drift = " << out.diagnostics.max_hermiticity_drift << "\n"
         << "max_occupation_excess = " << out.diagnostics.max_occupation_excess << "\n"
         << "swap_count = " << out.diagnostics.swap_count << "\n"
         << "mean_discarded_excitation = " << out.diagnostics.mean_discarded_excitation << "\n";
    const std::string diag_path = join_path(opt.out_dir, "diagnostics.txt");
    write_text_file(diag_path, diag.str());

    RunManifest man;
    man.command = "simulate";
    man.config_hash = cfg.content_hash();
    man.seed = cfg.seed;
    man.seed_streams = {"bath_init[traj]", "diffusion[traj]"};
    man.threads = opt.threads;
    man.timings_ms["simulate"] = timer.ms();
    man.add_output(curve_path);
    man.add_output(diag_path);
    man.write(join_path(opt.out_dir, "simulate_manifest.json"));
}

// ---------------------------------------------------------------------------

namespace {

double interp(const PolarizationCurve& c, double t) {
    const auto& ts = c.times;
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin()) return c.n_mean.front();
    if (it == ts.end()) return c.n_mean.back();
    const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
    return (1.0 - w) * c.n_mean[lo] + w * c.n_mean[hi];
}

struct TailFit {
    bool ok = false;
    double rate = 0.0; // -slope of log(2n-1)
};

TailFit fit_tail(const std::vector<double>& t, const std::vector<double>& n,
                 double tail_fraction) {
    TailFit fit;
    const double t0 = t.back() - tail_fraction * (t.back() - t.front());
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double dev = 2.0 * n[i] - 1.0;
        if (t[i] >= t0 && dev > 1e-3) {
            xs.push_back(t[i]);
            ys.push_back(std::log(dev));
        }
    }
    if (xs.size() < 3) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double m = static_cast<double>(xs.size());
    const double denom = m * sxx - sx * sx;
    if (denom == 0) return fit;
    fit.ok = true;
    fit.rate = -(m * sxy - sx * sy) / denom;
    return fit;
}

} // namespace

void cmd_compare(const CompareOptions& opt) {
    if (opt.curve_paths.empty()) throw ValidationError("compare: at least one curve required");
    ensure_dir(opt.out_dir);

    std::vector<PolarizationCurve> curves;
    std::vector<std::string> names;
    for (const auto& p : opt.curve_paths) {
        curves.push_back(read_curve_csv(p));
        names.push_back(fs::path(p).filename().string());
    }
    if (opt.measured_path) {
        curves.push_back(read_measured_csv(*opt.measured_path));
        names.push_back(fs::path(*opt.measured_path).filename().string() + " (measured)");
    }

    double lo = curves.front().times.front(), hi = curves.front().times.back();
    for (const auto& c : curves) {
        lo = std::max(lo, c.times.front());
        hi = std::min(hi, c.times.back());
    }
    if (lo >= hi)
        throw ValidationError("compare: curve time grids do not overlap");

    std::vector<double> grid;
    for (double t : curves.front().times)
        if (t >= lo && t <= hi) grid.push_back(t);
    if (grid.size() < 2) throw ValidationError("compare: overlap contains fewer than 2 points");

    std::vector<std::vector<double>> vals(curves.size());
    for (std::size_t c = 0; c < curves.size(); ++c) {
        vals[c].reserve(grid.size());
        for (double t : grid) vals[c].push_back(interp(curves[c], t));
    }

    std::ostringstream rep;
    rep << "comparison report\n"
        << "reference = " << names.front() << "\n"
        << "overlap_us = [" << lo << ", " << hi << "]\n"
        << "grid_points = " << grid.size() << "\n\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        double ss = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double d = vals[c][i] - vals[0][i];
            ss += d * d;
        }
        const double rms = std::sqrt(ss / grid.size());
        const TailFit tail = fit_tail(grid, vals[c], opt.tail_fraction);
        rep << "curve = " << names[c] << "\n"
            << "  rms_vs_reference = " << rms << "\n"
            << "  rms_fraction_of_half = " << rms / 0.5 << "\n";
        if (tail.ok) {
            rep << "  tail_rate_per_us = " << tail.rate << "\n";
            if (opt.t1rho_us) {
                const double alpha = 1.0 - (1.0 / *opt.t1rho_us) / tail.rate;
                rep << "  alpha_from_tail = " << alpha << "\n";
            }
        } else {
            rep << "  tail_rate_per_us = unavailable (tail below noise floor)\n";
        }
    }

    const std::string report_path = join_path(opt.out_dir, "compare_report.txt");
    write_text_file(report_path, rep.str());

    // gnuplot-ready: aligned columns, one block.
    std::ostringstream dat;
    dat << "# t_us";
    for (const auto& n : names) dat << " \"" << n << "\"";
    dat << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dat << grid[i];
        for (std::size_t c = 0; c < curves.size(); ++c) dat << ' ' << vals[c][i];
        dat << "\n";
    }
    const std::string dat_path = join_path(opt.out_dir, "compare_combined.dat");
    write_text_file(dat_path, dat.str());

    RunManifest man;
    man.command = "compare";
    man.add_output(report_path);
    man.add_output(dat_path);
    man.write(join_path(opt.out_dir, "compare_manifest.json"));

    std::cout << rep.str();
}

// ---------------------------------------------------------------------------

void cmd_sweep(const CommandOptions& opt, const SweepOptions& sweep) {
    Timer timer;
    ScenarioConfig base = load_config_with_overrides(opt);
    print_warnings(base);
    ensure_dir(opt.out_dir);

    const std::string& par = sweep.parameter;
    if (par != "rho" && par != "z0" && par != "D" && par != "B" && par != "T1rho")
        throw ValidationError("sweep: parameter must be one of rho|z0|D|B|T1rho");
    if (sweep.values.empty()) throw ValidationError("sweep: no values given");

    std::ostringstream csv;
    csv << std::setprecision(10);
    csv << "value,tau_c_us,tau_c_se_us,sigma2,sigma2_se,tau_p_inv_per_us,alpha,chi,error\n";

    std::vector<double> fit_x, fit_y;
    for (double v : sweep.values) {
        ScenarioConfig cfg = base;
        cfg.warnings.clear();
        cfg.nucleus_count.reset(); // derived from density and box below
        try {
            if (par == "rho") {
                cfg.density = v;
            } else if (par == "z0") {
                // box geometry scales with depth; estimation window follows.
                const double scale = v / base.z0;
                cfg.z0 = v;
                cfg.box_length = base.box_length * scale;
                cfg.est_t_max = base.estimate_t_max() * scale * scale;
            } else if (par == "D") {
                cfg.diffusion = v;
                cfg.est_t_max = base.estimate_t_max() * (base.diffusion / v);
                cfg.dt = base.dt * (base.diffusion / v);
            } else if (par == "B") {
                cfg.b_field = v;
            } else if (par == "T1rho") {
                cfg.t1rho = v;
            }
            cfg.validate();
            const CorrelationEstimate est = estimate_correlation(cfg, cfg.n_traj, opt.threads);
            AnalyticModel model;
            model.n_spins = static_cast<double>(cfg.n_spins());
            model.sigma2 = est.sigma2;
            model.tau_c = est.tau_c;
            model.t1rho = cfg.t1rho;
            const double tp_inv = long_time_rate(model);
            const double alpha = cfg.t1rho ? transfer_efficiency(model)
                                           : std::numeric_limits<double>::quiet_NaN();
            csv << v << ',' << est.tau_c << ',' << est.tau_c_se << ',' << est.sigma2 << ','
                << est.sigma2_se << ',' << tp_inv << ',' << alpha << ',' << est.chi << ",\n";
            if (v > 0 && tp_inv > 0) {
                fit_x.push_back(std::log(v));
                fit_y.push_back(std::log(tp_inv));
            }
        } catch (const std::exception& e) {
            csv << v << ",,,,,,,,\"" << e.what() << "\"\n";
        }
    }

    if (fit_x.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < fit_x.size(); ++i) {
            sx += fit_x[i];
            sy += fit_y[i];
            sxx += fit_x[i] * fit_x[i];
            sxy += fit_x[i] * fit_y[i];
        }
        const double m = static_cast<double>(fit_x.size());
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        csv << "# loglog_exponent tau_p_inv vs " << par << " = " << slope << "\n";
    }

    const std::string sweep_path = join_path(opt.out_dir, "sweep.csv");
    write_text_file(sweep_path, csv.str());

    RunManifest man;
    man.command = "sweep";
    man.config_hash = base.content_hash();
    man.seed = base.seed;
    man.threads = opt.threads;
    man.timings_ms["sweep"] = timer.ms();
    man.add_output(sweep_path);
    man.write(join_path(opt.out_dir, "sweep_manifest.json"));
}

} // namespace nvdnp
