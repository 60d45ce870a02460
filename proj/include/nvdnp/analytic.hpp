#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nvdnp {

// Parameters of the incoherent polarization-transfer model
//   d<n>/dt + (1/4) N gamma(t) (<n> - n_B) = 0   (+ optional T1rho channel)
struct AnalyticModel {
    double n_spins = 0.0;       // N
    double sigma2 = 0.0;        // rad^2/us^2
    double tau_c = 1.0;         // us
    std::optional<double> t1rho; // us
    double n_bath = 0.5;        // <n>_B

    void validate() const;
};

enum class CurveProvenance { analytic, gaussian_sim, measured };

std::string provenance_name(CurveProvenance p);
CurveProvenance provenance_from_name(const std::string& s);

struct PolarizationCurve {
    std::vector<double> times;   // us
    std::vector<double> n_mean;  // NV population, [1/2, 1] initially 1
    std::vector<double> stderr_; // empty or per-point ensemble error
    CurveProvenance provenance = CurveProvenance::analytic;
};

// Exponential-kernel closed form (no T1rho):
//   <n> = 1/2 + 1/2 exp( (1/4) N tau_c^2 sigma2 (1 - t/tau_c - e^{-t/tau_c}) )
double closed_form(const AnalyticModel& model, double t);

// log(2<n> - 1): the decay exponent, numerically stable for small t and safe
// where the population itself underflows to 1/2.
double closed_form_log_deviation(const AnalyticModel& model, double t);

// Same closed form with the T1rho channel folded in (exact for n_bath = 1/2).
double closed_form_with_relaxation(const AnalyticModel& model, double t);

// Early Gaussian decay rate sqrt(N sigma2 / 8), rad/us.
double short_time_rate(const AnalyticModel& model);
// Late exponential rate (1/4) N sigma2 tau_c = 1/tau_p, 1/us.
double long_time_rate(const AnalyticModel& model);

// Integrates the master equation with a caller-supplied memory kernel
// gamma(t) on the given time grid. Adaptive Dormand-Prince with relative
// tolerance 1e-8; throws when gamma(0) != 0 or gamma(t) < 0 on the grid.
PolarizationCurve solve_master(const AnalyticModel& model,
                               const std::function<double(double)>& gamma,
                               const std::vector<double>& grid);

// alpha = (1/tau_p) / (1/tau_p + 1/T1rho); requires t1rho.
double transfer_efficiency(const AnalyticModel& model);

// Rescales a calibrated reference rate by rho/(z0 D) (both in the reference's
// units): 1/tau_p' = 1/tau_p * (rho/rho_ref) (z0_ref/z0) (D_ref/D).
struct ScalingReference {
    double rho_ref, z0_ref, d_ref;
    AnalyticModel model;
};
double scaling_rate(double rho, double z0, double diffusion, const ScalingReference& ref);

// Steady-state per-nucleus polarization for a dense NV layer under a thin oil
// film. Every assumed factor is an explicit parameter:
//   injected polarization per NV cycle   = (1/2) alpha / N per addressed
//     nucleus, times N addressed nuclei  = alpha/2
//   cycle rate                           = 1/repetition_time
//   nuclei fed per NV (steady spreading) = proton_density * oil_thickness /
//                                          nv_areal_density
//   balance against T1n decay            => P_n = (alpha/2) (T1n/t_rep)
//                                          nv_areal_density /
//                                          (proton_density * oil_thickness)
struct MacroscopicGeometry {
    double nv_areal_density = 1e-3; // nm^-2 (1e11 cm^-2 dense shallow layer)
    double oil_thickness = 3000.0;  // nm
    double proton_density = 50.0;   // nm^-3
};

double macroscopic_polarization(double alpha, double n_spins, double repetition_time,
                                double t1n, const MacroscopicGeometry& geom);

// Thermal Boltzmann benchmark tanh(gamma_n hbar B / 2 kT) ~ 1e-7 at 0.066 T.
double thermal_polarization(double b_tesla, double temperature_k = 295.0);

} // namespace nvdnp
