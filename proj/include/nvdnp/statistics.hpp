#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nvdnp/config.hpp"
#include "nvdnp/errors.hpp"

namespace nvdnp {

// One-time (equilibrium) moments of the transverse hyperfine components over
// the uniform nuclear distribution in the box. Components x and y are pooled;
// standard errors come from batch means.
struct MomentsEstimate {
    double mean_a = 0.0;        // <A_alpha>, rad/us
    double mean_a_se = 0.0;
    double sigma2 = 0.0;        // Var(A_alpha), rad^2/us^2
    double sigma2_se = 0.0;
    double third_cumulant = 0.0; // <xi^3>, rad^3/us^3
    double third_cumulant_se = 0.0;
    double mean_ax = 0.0;       // per-component means (tilted NV axes break x<->-x symmetry)
    double mean_ay = 0.0;
    std::complex<double> mean_g{0.0, 0.0}; // (mean_ax + i mean_ay)/4
    std::int64_t n_samples = 0;
};

struct CorrelationEstimate {
    std::vector<double> lag_times;  // us
    std::vector<double> corr;       // C(t) = <xi(t) xi(0)>, per component
    std::vector<double> corr_se;
    std::vector<double> gamma;      // running integral of corr, rad^2/us
    std::vector<double> gamma_se;

    double sigma2 = 0.0;            // from the iid moments pass
    double sigma2_se = 0.0;
    double sigma2_c0 = 0.0;         // C(0) of the trajectory ensemble
    double sigma2_c0_se = 0.0;
    double gamma_plateau = 0.0;
    double gamma_plateau_se = 0.0;
    double tau_c = 0.0;             // gamma_plateau / C(0), same-sample ratio
    double tau_c_se = 0.0;          // delete-one jackknife over trajectories
    bool plateau_detected = false;
    double plateau_spread = 0.0;    // block-mean variation over the last 20%

    double exp_fit_tau = 0.0;       // assumption (ii) diagnostic
    double exp_fit_residual = 0.0;  // RMS(model - gamma)/gamma(end)

    double chi = 0.0;               // omega_N * tau_c
    std::string regime_label;

    MomentsEstimate moments;

    double dt_est = 0.0;
    int n_traj = 0;
    int walkers_per_traj = 0;
    double mean_swaps_per_walker = 0.0;
};

// Raised when gamma(t) has not plateaued within the estimation window; the
// partial estimate is attached for inspection.
struct InconclusiveEstimateError : NumericalError {
    explicit InconclusiveEstimateError(const std::string& msg, CorrelationEstimate partial_)
        : NumericalError(msg), partial(std::move(partial_)) {}
    CorrelationEstimate partial;
};

MomentsEstimate estimate_moments(const ScenarioConfig& cfg, std::int64_t n_samples,
                                 unsigned threads = 1);

namespace detail {

// Fills ax[w]/ay[w] (n_samples points each) for one trajectory's walker set.
using SeriesGenerator =
    std::function<void(int traj, std::vector<std::vector<double>>& ax,
                       std::vector<std::vector<double>>& ay, std::int64_t& swap_count)>;

// FFT autocorrelation + trapezoidal integration + plateau/ratio/jackknife
// reduction, independent of where the series came from (the tests feed it a
// synthetic process with known sigma^2 and tau_c). Moments and chi are left
// for the caller.
CorrelationEstimate reduce_correlation(const SeriesGenerator& gen, int n_traj, int walkers,
                                       std::size_t n_lags, std::size_t n_samples, double dt_est,
                                       unsigned threads);

} // namespace detail

// Ensemble autocorrelation of the transverse hyperfine field along single
// walker trajectories; gamma by trapezoidal integration, tau_c from the
// plateau ratio. Deterministic for fixed (cfg.seed, n_traj) and any thread
// count.
CorrelationEstimate estimate_correlation(const ScenarioConfig& cfg, int n_traj,
                                         unsigned threads = 1);

inline double regime_chi(const ScenarioConfig& cfg, const CorrelationEstimate& est) {
    return cfg.omega_n() * est.tau_c;
}

inline std::string regime_label(double chi) {
    return chi >= 1.0 ? "resonant-transfer regime" : "motional-suppression regime";
}

// min( 1/(N |<xi^3>| tau_c^2), 1/(N |<g>|^2 tau_c) ), no safety margin applied.
double validity_horizon(const ScenarioConfig& cfg, const CorrelationEstimate& est);

// Deterministic Gauss-Legendre evaluation of Var(A_x) over the box (the
// Monte-Carlo estimators are cross-checked against this in the tests).
double sigma2_quadrature(double z0, double box_length, double tilt_deg = 0.0,
                         unsigned points_per_axis = 64);

} // namespace nvdnp
