#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nvdnp/analytic.hpp"
#include "nvdnp/bath.hpp"
#include "nvdnp/config.hpp"

namespace nvdnp {

// Single-particle rotation generated by the arrowhead Hamiltonian
//   h = Delta e0 e0^+  +  sum_i ( g_i e0 e_i^+ + g_i^* e_i e0^+ )
// in the frame rotating at omega_N (the common bath frequency drops out of
// every observable). The only non-trivial action lives in span{e0, u} with
// u_i = g_i^*/G, so exp(-i h dt) reduces to a 2x2 block: cost O(N) to apply
// to a vector, O(N^2) to conjugate a dense correlation matrix.
struct ArrowheadRotation {
    double g_norm = 0.0;                  // G = ||g||_2
    std::complex<double> u00{1, 0}, u01{0, 0}, u10{0, 0}, u11{1, 0}; // 2x2 block of exp(-iB dt)

    // B = [[Delta, G], [G, 0]] in the orthonormal basis (e0, u).
    static ArrowheadRotation make(double g_norm, double delta, double dt);
};

// Dense one-particle correlation matrix C_ij = <b_i^+ b_j>, mode 0 = NV.
// The contract surface: exact for arbitrary states, O(N^2)-O(N^3) per step.
class CorrelationMatrix {
public:
    // NV bright dressed state (one Holstein-Primakoff excitation), thermal
    // spin-1/2 bath: C = diag(1, 1/2, ..., 1/2).
    static CorrelationMatrix init_state(Eigen::Index n_nuclei, double bath_population = 0.5);

    Eigen::Index n_nuclei() const { return c_.rows() - 1; }

    // Closed-form arrowhead rotation; throws when ||g|| dt >= 0.1 (couplings
    // are only piecewise constant, so large steps are unresolved).
    void step(std::span<const std::complex<double>> couplings, double omega_rabi,
              double omega_n, double dt);

    // Full exponential via Hermitian eigendecomposition; supports per-nucleus
    // detunings (A_z fluctuations). Oracle path, O(N^3).
    void step_dense(std::span<const std::complex<double>> couplings, double omega_rabi,
                    double omega_n, std::span<const double> bath_detunings, double dt);

    // Reservoir exchange: zero row/column of each swapped nucleus, restore the
    // thermal diagonal. Indices are nucleus indices (0-based; mode i+1).
    void reset_modes(std::span<const std::uint32_t> nucleus_indices);

    // NV rotating-frame relaxation toward 1/2: C00 decays with exp(-dt/T1rho),
    // NV-bath coherences with exp(-dt/(2 T1rho)).
    void apply_t1rho(double dt, double t1rho);

    double population() const { return c_(0, 0).real(); } // <n> = 1/2 + (C00 - 1/2)
    double trace() const { return c_.trace().real(); }
    double bath_gain() const;
    double hermiticity_drift() const;
    Eigen::VectorXd occupations() const { return c_.diagonal().real(); }

    const Eigen::MatrixXcd& matrix() const { return c_; }
    Eigen::MatrixXcd& matrix() { return c_; }

    void resymmetrize() { c_ = 0.5 * (c_ + c_.adjoint()).eval(); }

private:
    explicit CorrelationMatrix(Eigen::MatrixXcd c) : c_(std::move(c)) {}
    double bath_population_ = 0.5;
    Eigen::MatrixXcd c_;
};

// Fast path: for the canonical initial state the correlation matrix stays
//   C(t) = n_B I + (1 - n_B) |k><k| restricted as  C = n_B I_bath-extended +
// rank-one excitation, because steps are number-conserving, resets drop the
// excitation amplitude of the swapped mode, and the T1rho channel scales the
// NV amplitude. Evolving the (N+1)-amplitude vector k reproduces the matrix
// dynamics exactly (tested to 1e-12) at O(N) per step.
class ExcitationAmplitudes {
public:
    static ExcitationAmplitudes init_state(Eigen::Index n_nuclei, double bath_population = 0.5);

    Eigen::Index n_nuclei() const { return k_.size() - 1; }

    void step(std::span<const std::complex<double>> couplings, double omega_rabi,
              double omega_n, double dt);
    void reset_modes(std::span<const std::uint32_t> nucleus_indices);
    void apply_t1rho(double dt, double t1rho);

    double population() const { return bath_n_ + (1.0 - bath_n_) * std::norm(k_[0]); }
    double excitation_norm2() const { return k_.squaredNorm(); }
    double discarded_norm2() const { return discarded_; }
    double bath_gain() const {
        return (1.0 - bath_n_) * (k_.squaredNorm() - std::norm(k_[0]));
    }
    double max_bath_amplitude2() const;

    const Eigen::VectorXcd& amplitudes() const { return k_; }

    // The correlation matrix this state represents (small-N cross checks).
    CorrelationMatrix to_matrix() const;

private:
    ExcitationAmplitudes(Eigen::VectorXcd k, double nb) : k_(std::move(k)), bath_n_(nb) {}
    Eigen::VectorXcd k_;
    double bath_n_ = 0.5;
    double discarded_ = 0.0; // excitation weight carried away by swapped nuclei
};

struct SimDiagnostics {
    std::string engine;
    double max_step_norm_drift = 0.0;   // closed-system bookkeeping per step
    double max_hermiticity_drift = 0.0; // matrix engine
    double max_occupation_excess = 0.0; // above 1 or below 0, whichever worse
    std::int64_t swap_count = 0;
    double mean_discarded_excitation = 0.0;
};

struct SimOutcome {
    PolarizationCurve curve; // ensemble <n>(t) with stderr
    double bath_gain = 0.0;  // mean final sum_i (C_ii - n_B)
    SimDiagnostics diagnostics;
};

struct RunOptions {
    unsigned threads = 1;
    std::optional<int> n_traj;              // override cfg.n_traj
    std::optional<std::string> dump_dir;    // write per-trajectory coupling dumps
    std::optional<std::string> replay_dir;  // consume dumps instead of generating
};

// Ensemble average of the step/reset/relax loop over independent coupling
// trajectories. Deterministic for fixed (cfg, seed) and any thread count.
SimOutcome run(const ScenarioConfig& cfg, const RunOptions& opts = {});

} // namespace nvdnp
