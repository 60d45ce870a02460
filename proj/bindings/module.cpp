#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nvdnp/analytic.hpp"
#include "nvdnp/bath.hpp"
#include "nvdnp/config.hpp"
#include "nvdnp/constants.hpp"
#include "nvdnp/dipolar.hpp"
#include "nvdnp/gaussian_sim.hpp"
#include "nvdnp/io.hpp"
#include "nvdnp/statistics.hpp"
#include "nvdnp/version.hpp"

namespace py = pybind11;
using namespace nvdnp;

namespace {

py::dict estimate_to_dict(const CorrelationEstimate& est) {
    py::dict d;
    d["sigma2"] = est.sigma2;
    d["sigma2_se"] = est.sigma2_se;
    d["sigma2_c0"] = est.sigma2_c0;
    d["sigma2_c0_se"] = est.sigma2_c0_se;
    d["tau_c"] = est.tau_c;
    d["tau_c_se"] = est.tau_c_se;
    d["gamma_plateau"] = est.gamma_plateau;
    d["gamma_plateau_se"] = est.gamma_plateau_se;
    d["plateau_detected"] = est.plateau_detected;
    d["plateau_spread"] = est.plateau_spread;
    d["exp_fit_tau"] = est.exp_fit_tau;
    d["exp_fit_residual"] = est.exp_fit_residual;
    d["chi"] = est.chi;
    d["regime"] = est.regime_label;
    d["lag_times"] = est.lag_times;
    d["corr"] = est.corr;
    d["corr_se"] = est.corr_se;
    d["gamma"] = est.gamma;
    d["gamma_se"] = est.gamma_se;
    d["mean_a"] = est.moments.mean_a;
    d["mean_a_se"] = est.moments.mean_a_se;
    d["third_cumulant"] = est.moments.third_cumulant;
    d["third_cumulant_se"] = est.moments.third_cumulant_se;
    d["mean_g"] = est.moments.mean_g;
    d["dt_est"] = est.dt_est;
    d["n_traj"] = est.n_traj;
    d["walkers_per_traj"] = est.walkers_per_traj;
    d["mean_swaps_per_walker"] = est.mean_swaps_per_walker;
    return d;
}

py::dict curve_to_dict(const PolarizationCurve& c) {
    py::dict d;
    d["times"] = c.times;
    d["n_mean"] = c.n_mean;
    d["stderr"] = c.stderr_;
    d["provenance"] = provenance_name(c.provenance);
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Polarization transfer from a driven NV electron spin to diffusing nuclei: "
              "stochastic bath statistics, analytic master-equation model and Gaussian-state "
              "ensemble simulation. Units: nm, us, rad/us, tesla.";
    m.attr("__version__") = version_string;

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);

    m.attr("gamma_e") = constants().gamma_e;
    m.attr("gamma_n") = constants().gamma_n;
    m.attr("b0") = constants().b0;
    m.def("larmor_frequency", &larmor_frequency, py::arg("b_tesla"),
          "omega_N = gamma_n |B| in rad/us");
    m.def("gauss_to_tesla", &gauss_to_tesla);
    m.def("tesla_to_gauss", &tesla_to_gauss);

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_static("load", &ScenarioConfig::load, py::arg("path"))
        .def_static("from_json", &ScenarioConfig::from_json_text, py::arg("text"))
        .def("to_json", &ScenarioConfig::to_json, py::arg("indent") = 2)
        .def("validate", &ScenarioConfig::validate)
        .def("content_hash", &ScenarioConfig::content_hash)
        .def_readwrite("z0", &ScenarioConfig::z0)
        .def_readwrite("diffusion", &ScenarioConfig::diffusion)
        .def_readwrite("density", &ScenarioConfig::density)
        .def_readwrite("b_field", &ScenarioConfig::b_field)
        .def_readwrite("rabi", &ScenarioConfig::rabi)
        .def_readwrite("box_length", &ScenarioConfig::box_length)
        .def_readwrite("nucleus_count", &ScenarioConfig::nucleus_count)
        .def_readwrite("t1rho", &ScenarioConfig::t1rho)
        .def_readwrite("dt", &ScenarioConfig::dt)
        .def_readwrite("t_max", &ScenarioConfig::t_max)
        .def_readwrite("n_traj", &ScenarioConfig::n_traj)
        .def_readwrite("seed", &ScenarioConfig::seed)
        .def_readwrite("nv_axis_tilt_deg", &ScenarioConfig::nv_axis_tilt_deg)
        .def_readwrite("bath_mean_population", &ScenarioConfig::bath_mean_population)
        .def_readwrite("detuning_fluctuations", &ScenarioConfig::detuning_fluctuations)
        .def_readwrite("est_t_max", &ScenarioConfig::est_t_max)
        .def_readwrite("est_walkers_per_traj", &ScenarioConfig::est_walkers_per_traj)
        .def_readwrite("est_moment_samples", &ScenarioConfig::est_moment_samples)
        .def_property_readonly("omega_n", &ScenarioConfig::omega_n)
        .def_property_readonly("n_spins", &ScenarioConfig::n_spins)
        .def_property_readonly("warnings",
                               [](const ScenarioConfig& c) { return c.warnings; })
        .def("__repr__", [](const ScenarioConfig& c) {
            return "<ScenarioConfig z0=" + std::to_string(c.z0) +
                   " nm, N=" + std::to_string(c.n_spins()) + ">";
        });

    py::class_<HyperfineVector>(m, "HyperfineVector")
        .def_readonly("ax", &HyperfineVector::ax)
        .def_readonly("ay", &HyperfineVector::ay)
        .def_readonly("az", &HyperfineVector::az)
        .def("__repr__", [](const HyperfineVector& a) {
            return "<HyperfineVector (" + std::to_string(a.ax) + ", " + std::to_string(a.ay) +
                   ", " + std::to_string(a.az) + ") rad/us>";
        });

    m.def("hyperfine",
          [](double x, double y, double z, double tilt_deg) {
              return DipolarField(tilt_deg).hyperfine(x, y, z);
          },
          py::arg("x"), py::arg("y"), py::arg("z"), py::arg("tilt_deg") = 0.0,
          "Secular hyperfine vector at a position relative to the NV (nm)");
    m.def("coupling",
          [](double x, double y, double z, double tilt_deg) {
              return DipolarField(tilt_deg).coupling(x, y, z);
          },
          py::arg("x"), py::arg("y"), py::arg("z"), py::arg("tilt_deg") = 0.0,
          "Flip-flop coupling g = (A_x + i A_y)/4");
    m.def("coupling_bound", &DipolarField::coupling_bound, py::arg("z0"));

    m.def("sigma2_quadrature", &sigma2_quadrature, py::arg("z0"), py::arg("box_length"),
          py::arg("tilt_deg") = 0.0, py::arg("points_per_axis") = 64,
          "Gauss-Legendre Var(A_x) over the box");

    m.def("estimate_moments",
          [](const ScenarioConfig& cfg, std::int64_t n_samples, unsigned threads) {
              const auto mom = estimate_moments(cfg, n_samples, threads);
              py::dict d;
              d["mean_a"] = mom.mean_a;
              d["mean_a_se"] = mom.mean_a_se;
              d["sigma2"] = mom.sigma2;
              d["sigma2_se"] = mom.sigma2_se;
              d["third_cumulant"] = mom.third_cumulant;
              d["third_cumulant_se"] = mom.third_cumulant_se;
              d["mean_g"] = mom.mean_g;
              d["n_samples"] = mom.n_samples;
              return d;
          },
          py::arg("config"), py::arg("n_samples") = 2'000'000, py::arg("threads") = 1,
          py::call_guard<py::gil_scoped_release>());

    m.def("estimate_correlation",
          [](const ScenarioConfig& cfg, int n_traj, unsigned threads) {
              CorrelationEstimate est;
              {
                  py::gil_scoped_release release;
                  est = estimate_correlation(cfg, n_traj, threads);
              }
              return estimate_to_dict(est);
          },
          py::arg("config"), py::arg("n_traj"), py::arg("threads") = 1,
          "sigma^2, tau_c, gamma(t), chi and diagnostics from bath trajectories");

    py::class_<AnalyticModel>(m, "AnalyticModel")
        .def(py::init([](double n_spins, double sigma2, double tau_c,
                         std::optional<double> t1rho, double n_bath) {
                 AnalyticModel mod;
                 mod.n_spins = n_spins;
                 mod.sigma2 = sigma2;
                 mod.tau_c = tau_c;
                 mod.t1rho = t1rho;
                 mod.n_bath = n_bath;
                 mod.validate();
                 return mod;
             }),
             py::arg("n_spins"), py::arg("sigma2"), py::arg("tau_c"),
             py::arg("t1rho") = std::nullopt, py::arg("n_bath") = 0.5)
        .def_readwrite("n_spins", &AnalyticModel::n_spins)
        .def_readwrite("sigma2", &AnalyticModel::sigma2)
        .def_readwrite("tau_c", &AnalyticModel::tau_c)
        .def_readwrite("t1rho", &AnalyticModel::t1rho)
        .def_readwrite("n_bath", &AnalyticModel::n_bath);

    m.def("closed_form", &closed_form, py::arg("model"), py::arg("t"));
    m.def("closed_form",
          [](const AnalyticModel& mod, const std::vector<double>& t) {
              std::vector<double> out(t.size());
              for (std::size_t i = 0; i < t.size(); ++i) out[i] = closed_form(mod, t[i]);
              return out;
          },
          py::arg("model"), py::arg("t"));
    m.def("closed_form_with_relaxation", &closed_form_with_relaxation, py::arg("model"),
          py::arg("t"));
    m.def("closed_form_with_relaxation",
          [](const AnalyticModel& mod, const std::vector<double>& t) {
              std::vector<double> out(t.size());
              for (std::size_t i = 0; i < t.size(); ++i)
                  out[i] = closed_form_with_relaxation(mod, t[i]);
              return out;
          },
          py::arg("model"), py::arg("t"));
    m.def("short_time_rate", &short_time_rate);
    m.def("long_time_rate", &long_time_rate);
    m.def("transfer_efficiency", &transfer_efficiency);
    m.def("solve_master",
          [](const AnalyticModel& mod, const std::function<double(double)>& gamma,
             const std::vector<double>& grid) {
              return curve_to_dict(solve_master(mod, gamma, grid));
          },
          py::arg("model"), py::arg("gamma"), py::arg("grid"),
          "Integrate the population equation with an arbitrary memory kernel");
    m.def("scaling_rate",
          [](double rho, double z0, double diffusion, double rho_ref, double z0_ref,
             double d_ref, const AnalyticModel& model) {
              return scaling_rate(rho, z0, diffusion, {rho_ref, z0_ref, d_ref, model});
          },
          py::arg("rho"), py::arg("z0"), py::arg("diffusion"), py::arg("rho_ref"),
          py::arg("z0_ref"), py::arg("d_ref"), py::arg("reference_model"));

    py::class_<MacroscopicGeometry>(m, "MacroscopicGeometry")
        .def(py::init<>())
        .def_readwrite("nv_areal_density", &MacroscopicGeometry::nv_areal_density)
        .def_readwrite("oil_thickness", &MacroscopicGeometry::oil_thickness)
        .def_readwrite("proton_density", &MacroscopicGeometry::proton_density);
    m.def("macroscopic_polarization", &macroscopic_polarization, py::arg("alpha"),
          py::arg("n_spins"), py::arg("repetition_time"), py::arg("t1n"),
          py::arg("geometry") = MacroscopicGeometry{});
    m.def("thermal_polarization", &thermal_polarization, py::arg("b_tesla"),
          py::arg("temperature_k") = 295.0);
    m.def("validity_horizon",
          [](const ScenarioConfig& cfg, double tau_c, double third_cumulant,
             std::complex<double> mean_g) {
              CorrelationEstimate est;
              est.tau_c = tau_c;
              est.moments.third_cumulant = third_cumulant;
              est.moments.mean_g = mean_g;
              return validity_horizon(cfg, est);
          },
          py::arg("config"), py::arg("tau_c"), py::arg("third_cumulant"), py::arg("mean_g"));

    py::class_<CorrelationMatrix>(m, "CorrelationMatrix")
        .def_static("init_state", &CorrelationMatrix::init_state, py::arg("n_nuclei"),
                    py::arg("bath_population") = 0.5)
        .def("step",
             [](CorrelationMatrix& c, const std::vector<std::complex<double>>& g,
                double omega_rabi, double omega_n, double dt) {
                 c.step(g, omega_rabi, omega_n, dt);
             },
             py::arg("couplings"), py::arg("omega_rabi"), py::arg("omega_n"), py::arg("dt"))
        .def("step_dense",
             [](CorrelationMatrix& c, const std::vector<std::complex<double>>& g,
                double omega_rabi, double omega_n, const std::vector<double>& det, double dt) {
                 c.step_dense(g, omega_rabi, omega_n, det, dt);
             },
             py::arg("couplings"), py::arg("omega_rabi"), py::arg("omega_n"),
             py::arg("bath_detunings"), py::arg("dt"))
        .def("reset_modes",
             [](CorrelationMatrix& c, const std::vector<std::uint32_t>& idx) {
                 c.reset_modes(idx);
             },
             py::arg("nucleus_indices"))
        .def("apply_t1rho", &CorrelationMatrix::apply_t1rho, py::arg("dt"), py::arg("t1rho"))
        .def_property_readonly("population", &CorrelationMatrix::population)
        .def_property_readonly("trace", &CorrelationMatrix::trace)
        .def_property_readonly("bath_gain", &CorrelationMatrix::bath_gain)
        .def_property_readonly("hermiticity_drift", &CorrelationMatrix::hermiticity_drift)
        .def_property_readonly("occupations", &CorrelationMatrix::occupations)
        .def_property_readonly("matrix",
                               [](const CorrelationMatrix& c) { return c.matrix(); });

    py::class_<ExcitationAmplitudes>(m, "ExcitationAmplitudes")
        .def_static("init_state", &ExcitationAmplitudes::init_state, py::arg("n_nuclei"),
                    py::arg("bath_population") = 0.5)
        .def("step",
             [](ExcitationAmplitudes& a, const std::vector<std::complex<double>>& g,
                double omega_rabi, double omega_n, double dt) {
                 a.step(g, omega_rabi, omega_n, dt);
             },
             py::arg("couplings"), py::arg("omega_rabi"), py::arg("omega_n"), py::arg("dt"))
        .def("reset_modes",
             [](ExcitationAmplitudes& a, const std::vector<std::uint32_t>& idx) {
                 a.reset_modes(idx);
             },
             py::arg("nucleus_indices"))
        .def("apply_t1rho", &ExcitationAmplitudes::apply_t1rho, py::arg("dt"),
             py::arg("t1rho"))
        .def_property_readonly("population", &ExcitationAmplitudes::population)
        .def_property_readonly("bath_gain", &ExcitationAmplitudes::bath_gain)
        .def_property_readonly("amplitudes",
                               [](const ExcitationAmplitudes& a) { return a.amplitudes(); })
        .def("to_matrix", &ExcitationAmplitudes::to_matrix);

    m.def("run_simulation",
          [](const ScenarioConfig& cfg, unsigned threads, std::optional<int> n_traj) {
              SimOutcome out;
              {
                  py::gil_scoped_release release;
                  RunOptions opts;
                  opts.threads = threads;
                  opts.n_traj = n_traj;
                  out = run(cfg, opts);
              }
              py::dict d;
              d["curve"] = curve_to_dict(out.curve);
              d["bath_gain"] = out.bath_gain;
              py::dict diag;
              diag["engine"] = out.diagnostics.engine;
              diag["max_step_norm_drift"] = out.diagnostics.max_step_norm_drift;
              diag["max_hermiticity_drift"] = out.diagnostics.max_hermiticity_drift;
              diag["max_occupation_excess"] = out.diagnostics.max_occupation_excess;
              diag["swap_count"] = out.diagnostics.swap_count;
              diag["mean_discarded_excitation"] = out.diagnostics.mean_discarded_excitation;
              d["diagnostics"] = diag;
              return d;
          },
          py::arg("config"), py::arg("threads") = 1, py::arg("n_traj") = std::nullopt,
          "Ensemble Gaussian-state simulation; returns the population curve and diagnostics");
}
