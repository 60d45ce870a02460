#include "nvdnp/gaussian_sim.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "nvdnp/errors.hpp"
#include "nvdnp/parallel.hpp"

namespace nvdnp {

using cplx = std::complex<double>;

ArrowheadRotation ArrowheadRotation::make(double g_norm, double delta, double dt) {
    ArrowheadRotation r;
    r.g_norm = g_norm;
    const double half_d = 0.5 * delta;
    const double rabi = std::sqrt(g_norm * g_norm + half_d * half_d);
    if (rabi == 0.0) return r; // identity
    const double c = std::cos(rabi * dt), s = std::sin(rabi * dt);
    const cplx phase = std::polar(1.0, -half_d * dt);
    const double nz = half_d / rabi, nx = g_norm / rabi;
    r.u00 = phase * cplx(c, -s * nz);
    r.u11 = phase * cplx(c, s * nz);
    r.u01 = phase * cplx(0.0, -s * nx);
    r.u10 = r.u01;
    return r;
}

namespace {

double coupling_norm(std::span<const cplx> g) {
    double s = 0;
    for (const cplx& v : g) s += std::norm(v);
    return std::sqrt(s);
}

void check_step_size(double g_norm, double dt) {
    if (g_norm * dt >= 0.1) {
        std::ostringstream os;
        os << "step: ||g|| dt = " << g_norm * dt
           << " >= 0.1; couplings are piecewise-constant per step, reduce dt below "
           << 0.1 / g_norm;
        throw NumericalError(os.str());
    }
}

} // namespace

// ---------------------------------------------------------------------------
// CorrelationMatrix
// ---------------------------------------------------------------------------

CorrelationMatrix CorrelationMatrix::init_state(Eigen::Index n_nuclei, double bath_population) {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n_nuclei + 1, n_nuclei + 1);
    c(0, 0) = 1.0;
    for (Eigen::Index i = 1; i <= n_nuclei; ++i) c(i, i) = bath_population;
    CorrelationMatrix m(std::move(c));
    m.bath_population_ = bath_population;
    return m;
}

void CorrelationMatrix::step(std::span<const cplx> couplings, double omega_rabi,
                             double omega_n, double dt) {
    if (static_cast<Eigen::Index>(couplings.size()) != n_nuclei())
        throw ValidationError("step: coupling count does not match bath size");
    const double g_norm = coupling_norm(couplings);
    check_step_size(g_norm, dt);
    const double delta = omega_rabi - omega_n;
    const Eigen::Index n = c_.rows();

    if (g_norm == 0.0) {
        if (delta != 0.0) {
            // Only the NV picks up the detuning phase.
            const cplx ph = std::polar(1.0, delta * dt);
            c_.row(0).tail(n - 1) *= ph;
            c_.col(0).tail(n - 1) *= std::conj(ph);
        }
        resymmetrize();
        return;
    }

    const ArrowheadRotation rot = ArrowheadRotation::make(g_norm, delta, dt);
    // The state evolves with V = conj(U); its invariant basis vector is
    // w = conj(u), w_i = g_i / G.
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(n, 2);
    w(0, 0) = 1.0;
    for (Eigen::Index i = 0; i < n - 1; ++i) w(i + 1, 1) = couplings[i] / g_norm;
    Eigen::Matrix2cd m;
    m << std::conj(rot.u00) - 1.0, std::conj(rot.u01), std::conj(rot.u10),
        std::conj(rot.u11) - 1.0;

    const Eigen::MatrixXcd y = c_ * w;                       // (N+1) x 2
    const Eigen::Matrix2cd inner = w.adjoint() * y;          // W^+ C W
    const Eigen::MatrixXcd t1 = w * (m * y.adjoint());       // W M W^+ C
    c_.noalias() += t1;
    c_.noalias() += t1.adjoint();
    c_.noalias() += w * (m * inner * m.adjoint()) * w.adjoint();
    resymmetrize();
}

void CorrelationMatrix::step_dense(std::span<const cplx> couplings, double omega_rabi,
                                   double omega_n, std::span<const double> bath_detunings,
                                   double dt) {
    if (static_cast<Eigen::Index>(couplings.size()) != n_nuclei())
        throw ValidationError("step_dense: coupling count does not match bath size");
    const double g_norm = coupling_norm(couplings);
    check_step_size(g_norm, dt);
    const Eigen::Index n = c_.rows();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    h(0, 0) = omega_rabi - omega_n;
    for (Eigen::Index i = 0; i < n - 1; ++i) {
        h(0, i + 1) = couplings[i];
        h(i + 1, 0) = std::conj(couplings[i]);
        if (!bath_detunings.empty()) h(i + 1, i + 1) = bath_detunings[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXcd phases =
        (cplx(0, -dt) * es.eigenvalues().cast<cplx>()).array().exp();
    const Eigen::MatrixXcd u =
        es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    const Eigen::MatrixXcd v = u.conjugate();
    c_ = v * c_ * v.adjoint();
    resymmetrize();
}

void CorrelationMatrix::reset_modes(std::span<const std::uint32_t> nucleus_indices) {
    for (std::uint32_t idx : nucleus_indices) {
        const Eigen::Index j = static_cast<Eigen::Index>(idx) + 1;
        if (j < 1 || j >= c_.rows()) throw ValidationError("reset_modes: index out of range");
        c_.row(j).setZero();
        c_.col(j).setZero();
        c_(j, j) = bath_population_;
    }
}

void CorrelationMatrix::apply_t1rho(double dt, double t1rho) {
    if (t1rho <= 0) throw ValidationError("apply_t1rho: T1rho must be > 0");
    const double lam = std::exp(-0.5 * dt / t1rho);
    const Eigen::Index n = c_.rows();
    c_(0, 0) = 0.5 + (c_(0, 0) - 0.5) * lam * lam;
    c_.row(0).tail(n - 1) *= lam;
    c_.col(0).tail(n - 1) *= lam;
}

double CorrelationMatrix::bath_gain() const {
    double s = 0;
    for (Eigen::Index i = 1; i < c_.rows(); ++i) s += c_(i, i).real() - bath_population_;
    return s;
}

double CorrelationMatrix::hermiticity_drift() const {
    return (c_ - c_.adjoint()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// ExcitationAmplitudes
// ---------------------------------------------------------------------------

ExcitationAmplitudes ExcitationAmplitudes::init_state(Eigen::Index n_nuclei,
                                                      double bath_population) {
    Eigen::VectorXcd k = Eigen::VectorXcd::Zero(n_nuclei + 1);
    k[0] = 1.0;
    return ExcitationAmplitudes(std::move(k), bath_population);
}

void ExcitationAmplitudes::step(std::span<const cplx> couplings, double omega_rabi,
                                double omega_n, double dt) {
    if (static_cast<Eigen::Index>(couplings.size()) != n_nuclei())
        throw ValidationError("step: coupling count does not match bath size");
    const double g_norm = coupling_norm(couplings);
    check_step_size(g_norm, dt);
    const double delta = omega_rabi - omega_n;

    if (g_norm == 0.0) {
        if (delta != 0.0) k_[0] *= std::polar(1.0, delta * dt);
        return;
    }
    const ArrowheadRotation rot = ArrowheadRotation::make(g_norm, delta, dt);
    // w_i = g_i/G; beta = <w, k_bath>.
    cplx beta{0, 0};
    for (Eigen::Index i = 0; i < n_nuclei(); ++i)
        beta += std::conj(couplings[i]) * k_[i + 1];
    beta /= g_norm;

    const cplx k0 = k_[0];
    k_[0] = std::conj(rot.u00) * k0 + std::conj(rot.u01) * beta;
    const cplx coef = std::conj(rot.u10) * k0 + (std::conj(rot.u11) - 1.0) * beta;
    for (Eigen::Index i = 0; i < n_nuclei(); ++i)
        k_[i + 1] += coef * (couplings[i] / g_norm);
}

void ExcitationAmplitudes::reset_modes(std::span<const std::uint32_t> nucleus_indices) {
    for (std::uint32_t idx : nucleus_indices) {
        const Eigen::Index j = static_cast<Eigen::Index>(idx) + 1;
        if (j < 1 || j >= k_.size()) throw ValidationError("reset_modes: index out of range");
        discarded_ += std::norm(k_[j]);
        k_[j] = 0.0;
    }
}

void ExcitationAmplitudes::apply_t1rho(double dt, double t1rho) {
    if (t1rho <= 0) throw ValidationError("apply_t1rho: T1rho must be > 0");
    if (bath_n_ != 0.5)
        throw ValidationError(
            "ExcitationAmplitudes: the T1rho channel requires a thermal bath (n_B = 1/2); "
            "use the matrix engine");
    const double lam = std::exp(-0.5 * dt / t1rho);
    discarded_ += (1.0 - lam * lam) * std::norm(k_[0]);
    k_[0] *= lam;
}

double ExcitationAmplitudes::max_bath_amplitude2() const {
    double m = 0;
    for (Eigen::Index i = 1; i < k_.size(); ++i) m = std::max(m, std::norm(k_[i]));
    return m;
}

CorrelationMatrix ExcitationAmplitudes::to_matrix() const {
    CorrelationMatrix m = CorrelationMatrix::init_state(n_nuclei(), bath_n_);
    m.matrix() = bath_n_ * Eigen::MatrixXcd::Identity(k_.size(), k_.size()) +
                 (1.0 - bath_n_) * (k_ * k_.adjoint());
    return m;
}

// ---------------------------------------------------------------------------
// run()
// ---------------------------------------------------------------------------

namespace {

struct TrajResult {
    std::vector<double> population;
    double bath_gain = 0.0;
    double max_norm_drift = 0.0;
    double max_herm_drift = 0.0;
    double max_occ_excess = 0.0;
    double discarded = 0.0;
    std::int64_t swaps = 0;
};

enum class EngineChoice { amplitude, matrix };

EngineChoice pick_engine(const ScenarioConfig& cfg) {
    const bool needs_matrix =
        cfg.detuning_fluctuations || (cfg.t1rho && cfg.bath_mean_population != 0.5);
    switch (cfg.engine) {
        case Engine::amplitude:
            if (needs_matrix)
                throw ValidationError(
                    "engine=amplitude cannot represent this run (per-nucleus detunings or "
                    "T1rho with a non-thermal bath); use engine=matrix");
            return EngineChoice::amplitude;
        case Engine::matrix:
            return EngineChoice::matrix;
        default:
            return needs_matrix ? EngineChoice::matrix : EngineChoice::amplitude;
    }
}

std::string traj_dump_path(const std::string& dir, std::uint64_t index) {
    std::ostringstream os;
    os << dir << "/traj_" << index << ".nvtraj";
    return os.str();
}

} // namespace

SimOutcome run(const ScenarioConfig& cfg, const RunOptions& opts) {
    const EngineChoice engine = pick_engine(cfg);
    const std::int64_t n = cfg.n_spins();
    const std::int64_t steps = cfg.n_steps();
    const int n_traj = opts.n_traj ? *opts.n_traj : cfg.n_traj;
    if (n_traj < 1) throw ValidationError("run: n_traj must be >= 1");
    if (opts.replay_dir && cfg.detuning_fluctuations)
        throw ValidationError("run: trajectory dumps carry couplings only; "
                              "detuning_fluctuations requires live generation");
    if (engine == EngineChoice::matrix && n > 4096)
        throw ValidationError("engine=matrix is quadratic in memory; N > 4096 unsupported "
                              "(use the amplitude engine)");

    if (opts.dump_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*opts.dump_dir, ec);
        if (ec) throw IoError("cannot create dump directory " + *opts.dump_dir);
    }

    std::vector<TrajResult> results(n_traj);

    parallel_for(static_cast<std::size_t>(n_traj), opts.threads, [&](std::size_t tr) {
        TrajResult res;
        res.population.resize(steps + 1);

        std::optional<CouplingTrajectory> replay;
        if (opts.replay_dir) {
            replay = load_trajectory(traj_dump_path(*opts.replay_dir, tr));
            if (static_cast<std::int64_t>(replay->n_nuclei()) != n)
                throw ValidationError("replay: nucleus count mismatch against config");
            if (static_cast<std::int64_t>(replay->g.size()) != steps + 1)
                throw ValidationError("replay: frame count mismatch against config");
        }

        std::optional<BathState> bath;
        const DipolarField field(cfg.nv_axis_tilt_deg);
        if (!replay) bath.emplace(init_bath(cfg, tr));

        std::optional<CouplingTrajectory> dump;
        if (opts.dump_dir && !replay) {
            dump.emplace();
            dump->dt = cfg.dt;
            dump->config_hash = cfg.content_hash();
        }

        ExcitationAmplitudes amp = ExcitationAmplitudes::init_state(n, cfg.bath_mean_population);
        CorrelationMatrix mat = engine == EngineChoice::matrix
                                    ? CorrelationMatrix::init_state(n, cfg.bath_mean_population)
                                    : CorrelationMatrix::init_state(0);
        const bool use_matrix = engine == EngineChoice::matrix;

        std::vector<cplx> g(n);
        std::vector<double> detunings;
        res.population[0] = 1.0;

        for (std::int64_t k = 0; k < steps; ++k) {
            const std::vector<std::uint32_t>* swaps = nullptr;
            if (replay) {
                g = replay->g[k];
                swaps = &replay->swaps[k];
            } else {
                sample_couplings(*bath, field, cfg.z0, g);
                if (cfg.detuning_fluctuations) {
                    detunings.resize(n);
                    for (std::int64_t i = 0; i < n; ++i) {
                        const HyperfineVector a =
                            field.hyperfine(bath->x[i], bath->y[i], bath->z[i] + cfg.z0);
                        detunings[i] = 0.5 * a.az;
                    }
                }
                if (dump) {
                    dump->times.push_back(k * cfg.dt);
                    dump->g.push_back(g);
                }
                step_diffusion(*bath, cfg.dt, cfg.diffusion);
                swaps = &bath->swap_events;
                if (dump) dump->swaps.push_back(*swaps);
            }

            const double norm_before =
                use_matrix ? mat.trace() : amp.excitation_norm2() + amp.discarded_norm2();
            if (use_matrix) {
                if (cfg.detuning_fluctuations)
                    mat.step_dense(g, cfg.rabi_or_resonant(), cfg.omega_n(), detunings, cfg.dt);
                else
                    mat.step(g, cfg.rabi_or_resonant(), cfg.omega_n(), cfg.dt);
            } else {
                amp.step(g, cfg.rabi_or_resonant(), cfg.omega_n(), cfg.dt);
            }
            const double norm_after =
                use_matrix ? mat.trace() : amp.excitation_norm2() + amp.discarded_norm2();
            res.max_norm_drift = std::max(res.max_norm_drift,
                                          std::abs(norm_after - norm_before));

            if (use_matrix) {
                mat.reset_modes(*swaps);
                if (cfg.t1rho) mat.apply_t1rho(cfg.dt, *cfg.t1rho);
                res.population[k + 1] = mat.population();
                res.max_herm_drift = std::max(res.max_herm_drift, mat.hermiticity_drift());
                const auto occ = mat.occupations();
                res.max_occ_excess = std::max(
                    res.max_occ_excess, std::max(occ.maxCoeff() - 1.0, -occ.minCoeff()));
            } else {
                amp.reset_modes(*swaps);
                if (cfg.t1rho) amp.apply_t1rho(cfg.dt, *cfg.t1rho);
                res.population[k + 1] = amp.population();
                res.max_occ_excess =
                    std::max(res.max_occ_excess, amp.population() - 1.0);
            }
            res.swaps += static_cast<std::int64_t>(swaps->size());

            if (res.max_norm_drift > 1e-8 * std::max(1.0, static_cast<double>(n))) {
                std::ostringstream os;
                os << "run: conservation drift " << res.max_norm_drift << " at step " << k
                   << " exceeds threshold; engine=" << (use_matrix ? "matrix" : "amplitude")
                   << ", N=" << n << ", dt=" << cfg.dt;
                throw NumericalError(os.str());
            }
        }
        if (replay) {
            // Final frame exists in the dump for completeness; nothing to apply.
        } else if (dump) {
            dump->times.push_back(steps * cfg.dt);
            std::vector<cplx> gl(n);
            sample_couplings(*bath, field, cfg.z0, gl);
            dump->g.push_back(std::move(gl));
            dump->swaps.emplace_back();
            dump_trajectory(*dump, traj_dump_path(*opts.dump_dir, tr));
        }

        res.bath_gain = use_matrix ? mat.bath_gain() : amp.bath_gain();
        res.discarded = use_matrix ? 0.0 : amp.discarded_norm2();
        results[tr] = std::move(res);
    });

    SimOutcome out;
    out.diagnostics.engine =
        engine == EngineChoice::matrix ? "matrix" : "amplitude";
    out.curve.provenance = CurveProvenance::gaussian_sim;
    out.curve.times.resize(steps + 1);
    for (std::int64_t k = 0; k <= steps; ++k) out.curve.times[k] = k * cfg.dt;
    out.curve.n_mean.assign(steps + 1, 0.0);
    out.curve.stderr_.assign(steps + 1, 0.0);

    for (const TrajResult& r : results)
        for (std::int64_t k = 0; k <= steps; ++k) out.curve.n_mean[k] += r.population[k];
    for (auto& v : out.curve.n_mean) v /= n_traj;
    if (n_traj > 1) {
        for (const TrajResult& r : results)
            for (std::int64_t k = 0; k <= steps; ++k) {
                const double d = r.population[k] - out.curve.n_mean[k];
                out.curve.stderr_[k] += d * d;
            }
        for (auto& v : out.curve.stderr_)
            v = std::sqrt(v / (static_cast<double>(n_traj) * (n_traj - 1.0)));
    }

    for (const TrajResult& r : results) {
        out.bath_gain += r.bath_gain / n_traj;
        out.diagnostics.max_step_norm_drift =
            std::max(out.diagnostics.max_step_norm_drift, r.max_norm_drift);
        out.diagnostics.max_hermiticity_drift =
            std::max(out.diagnostics.max_hermiticity_drift, r.max_herm_drift);
        out.diagnostics.max_occupation_excess =
            std::max(out.diagnostics.max_occupation_excess, r.max_occ_excess);
        out.diagnostics.swap_count += r.swaps;
        out.diagnostics.mean_discarded_excitation += r.discarded / n_traj;
    }
    return out;
}

} // namespace nvdnp
