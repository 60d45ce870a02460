#include "nvdnp/analytic.hpp"

#include <algorithm>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "nvdnp/constants.hpp"
#include "nvdnp/errors.hpp"

namespace nvdnp {

void AnalyticModel::validate() const {
    if (n_spins < 0) throw ValidationError("AnalyticModel: N must be >= 0");
    if (sigma2 < 0) throw ValidationError("AnalyticModel: sigma2 must be >= 0");
    if (tau_c <= 0) throw ValidationError("AnalyticModel: tau_c must be > 0");
    if (n_bath < 0 || n_bath > 1) throw ValidationError("AnalyticModel: n_B must lie in [0,1]");
    if (t1rho && *t1rho <= 0) throw ValidationError("AnalyticModel: T1rho must be > 0");
}

namespace {

// f(x) = 1 - x - e^{-x}, series-expanded near 0 to avoid cancellation.
double one_minus_x_minus_exp(double x) {
    if (std::abs(x) < 1e-4)
        return -0.5 * x * x * (1.0 - x / 3.0 + x * x / 12.0 - x * x * x / 60.0);
    return 1.0 - x - std::exp(-x);
}

} // namespace

double closed_form_log_deviation(const AnalyticModel& model, double t) {
    const double x = t / model.tau_c;
    return 0.25 * model.n_spins * model.tau_c * model.tau_c * model.sigma2 *
           one_minus_x_minus_exp(x);
}

double closed_form(const AnalyticModel& model, double t) {
    model.validate();
    return 0.5 + 0.5 * std::exp(closed_form_log_deviation(model, t));
}

double closed_form_with_relaxation(const AnalyticModel& model, double t) {
    model.validate();
    double e = closed_form_log_deviation(model, t);
    if (model.t1rho) e -= t / *model.t1rho;
    return 0.5 + 0.5 * std::exp(e);
}

double short_time_rate(const AnalyticModel& model) {
    return std::sqrt(0.125 * model.n_spins * model.sigma2);
}

double long_time_rate(const AnalyticModel& model) {
    return 0.25 * model.n_spins * model.sigma2 * model.tau_c;
}

PolarizationCurve solve_master(const AnalyticModel& model,
                               const std::function<double(double)>& gamma,
                               const std::vector<double>& grid) {
    model.validate();
    if (grid.empty()) throw ValidationError("solve_master: empty time grid");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw ValidationError("solve_master: grid must be sorted");
    if (std::abs(gamma(0.0)) > 1e-12 * std::max(1.0, model.sigma2 * model.tau_c))
        throw NumericalError("solve_master: gamma(0) must vanish");

    const double quarter_n = 0.25 * model.n_spins;
    const double relax = model.t1rho ? 1.0 / *model.t1rho : 0.0;
    const double drive = model.n_bath - 0.5; // source term for n_B != 1/2

    // Work in the deviation u = <n> - 1/2; the equation is linear and
    // non-stiff on the time scales where the curve still moves.
    auto rhs = [&](const double& u, double& dudt, double t) {
        const double g = gamma(t);
        if (g < -1e-12 * std::max(1.0, model.sigma2 * model.tau_c))
            throw NumericalError("solve_master: gamma(t) negative at t = " + std::to_string(t));
        dudt = -quarter_n * g * (u - drive) - relax * u;
    };

    namespace ode = boost::numeric::odeint;
    using stepper_t = ode::runge_kutta_dopri5<double>;
    auto stepper = ode::make_dense_output(1e-14, 1e-8, stepper_t());

    PolarizationCurve curve;
    curve.times = grid;
    curve.n_mean.resize(grid.size());
    curve.provenance = CurveProvenance::analytic;

    double u = 0.5; // <n>(0) = 1
    double t = grid.front();
    std::size_t gi = 0;
    if (grid.front() == 0.0) {
        curve.n_mean[0] = 1.0;
        gi = 1;
    } else {
        t = 0.0;
    }
    if (gi >= grid.size()) return curve;

    const double t_end = grid.back();
    double dt0 = std::min(model.tau_c * 0.01, (t_end - t) * 0.1);
    if (dt0 <= 0) dt0 = 1e-6;
    stepper.initialize(u, t, dt0);
    while (stepper.current_time() < t_end && gi < grid.size()) {
        stepper.do_step(rhs);
        while (gi < grid.size() && grid[gi] <= stepper.current_time()) {
            double ui;
            stepper.calc_state(grid[gi], ui);
            curve.n_mean[gi] = 0.5 + ui;
            ++gi;
        }
    }
    // Grid points beyond the last accepted step (end-of-interval rounding).
    while (gi < grid.size()) {
        double ui;
        stepper.calc_state(std::min(grid[gi], stepper.current_time()), ui);
        curve.n_mean[gi] = 0.5 + ui;
        ++gi;
    }
    return curve;
}

double transfer_efficiency(const AnalyticModel& model) {
    model.validate();
    if (!model.t1rho) throw ValidationError("transfer_efficiency: model has no T1rho");
    const double tp_inv = long_time_rate(model);
    return tp_inv / (tp_inv + 1.0 / *model.t1rho);
}

double scaling_rate(double rho, double z0, double diffusion, const ScalingReference& ref) {
    if (rho <= 0 || z0 <= 0 || diffusion <= 0)
        throw ValidationError("scaling_rate: rho, z0, D must be > 0");
    const double base = long_time_rate(ref.model);
    return base * (rho / ref.rho_ref) * (ref.z0_ref / z0) * (ref.d_ref / diffusion);
}

double macroscopic_polarization(double alpha, double n_spins, double repetition_time,
                                double t1n, const MacroscopicGeometry& geom) {
    if (alpha < 0 || alpha > 1) throw ValidationError("macroscopic_polarization: alpha in [0,1]");
    if (repetition_time <= 0) throw ValidationError("macroscopic_polarization: t_rep > 0");
    if (t1n < 0) throw ValidationError("macroscopic_polarization: T1n >= 0");
    if (n_spins <= 0) return 0.0;
    // Per cycle one NV deposits (1/2) alpha / N onto each of the N nuclei in
    // its detection volume. Diffusion spreads that over the column of nuclei
    // the NV feeds (rho * thickness / areal density); the steady state
    // balances injection against T1n decay.
    const double gain_per_addressed_nucleus = 0.5 * alpha / n_spins;
    const double injected_per_cycle = gain_per_addressed_nucleus * n_spins;
    const double nuclei_fed_per_nv =
        geom.proton_density * geom.oil_thickness / geom.nv_areal_density;
    return injected_per_cycle * (t1n / repetition_time) / nuclei_fed_per_nv;
}

double thermal_polarization(double b_tesla, double temperature_k) {
    const double hbar = 1.054571817e-34;
    const double kb = 1.380649e-23;
    const double gamma_n_si = constants().gamma_n * 1e6; // rad/s/T
    return std::tanh(gamma_n_si * hbar * b_tesla / (2.0 * kb * temperature_k));
}

std::string provenance_name(CurveProvenance p) {
    switch (p) {
        case CurveProvenance::gaussian_sim: return "gaussian-sim";
        case CurveProvenance::measured: return "measured";
        default: return "analytic";
    }
}

CurveProvenance provenance_from_name(const std::string& s) {
    if (s == "gaussian-sim") return CurveProvenance::gaussian_sim;
    if (s == "measured") return CurveProvenance::measured;
    if (s == "analytic") return CurveProvenance::analytic;
    throw ValidationError("unknown curve provenance: " + s);
}

} // namespace nvdnp
