#include "nvdnp/bath.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nvdnp/errors.hpp"
#include "nvdnp/rng.hpp"

namespace nvdnp {

BathState init_bath(const ScenarioConfig& cfg, std::uint64_t traj_index) {
    BathState s;
    s.box_length = cfg.box_length;
    s.rng = make_stream(cfg.seed, StreamPurpose::bath_init, traj_index);
    const std::size_t n = static_cast<std::size_t>(cfg.n_spins());
    s.x.resize(n);
    s.y.resize(n);
    s.z.resize(n);
    const double half = 0.5 * cfg.box_length;
    std::uniform_real_distribution<double> lat(-half, half);
    std::uniform_real_distribution<double> vert(0.0, cfg.box_length);
    for (std::size_t i = 0; i < n; ++i) {
        s.x[i] = lat(s.rng);
        s.y[i] = lat(s.rng);
        s.z[i] = vert(s.rng);
    }
    // Hand the stepping stream over; a separate purpose keeps init and
    // diffusion draws disjoint even for a zero-step run.
    s.rng = make_stream(cfg.seed, StreamPurpose::diffusion, traj_index);
    return s;
}

namespace {

// Fold a lateral coordinate into [-half, half); reports whether it crossed.
inline bool wrap_lateral(double& v, double half) {
    if (v >= -half && v <= half) return false;
    const double l = 2.0 * half;
    v = v - l * std::floor((v + half) / l);
    return true;
}

// Fold the vertical coordinate into [0, L]: reflect at 0 (no swap), mirror at
// L (swap). Loops for pathological step sizes.
inline bool fold_vertical(double& v, double l) {
    bool swapped = false;
    while (v < 0.0 || v > l) {
        if (v < 0.0) {
            v = -v;
        } else {
            v = 2.0 * l - v;
            swapped = true;
        }
    }
    return swapped;
}

} // namespace

void step_diffusion(BathState& state, double dt, double diffusion) {
    if (dt <= 0) throw ValidationError("step_diffusion: dt must be > 0");
    state.swap_events.clear();
    if (diffusion == 0.0) return;
    const double sd = std::sqrt(2.0 * diffusion * dt);
    const double half = 0.5 * state.box_length;
    std::normal_distribution<double> step(0.0, sd);
    const std::size_t n = state.size();
    for (std::size_t i = 0; i < n; ++i) {
        state.x[i] += step(state.rng);
        state.y[i] += step(state.rng);
        state.z[i] += step(state.rng);
        bool swapped = wrap_lateral(state.x[i], half);
        swapped = wrap_lateral(state.y[i], half) || swapped;
        swapped = fold_vertical(state.z[i], state.box_length) || swapped;
        if (swapped) state.swap_events.push_back(static_cast<std::uint32_t>(i));
    }
}

void sample_couplings(const BathState& state, const DipolarField& field, double z0,
                      std::vector<std::complex<double>>& out) {
    const std::size_t n = state.size();
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = field.coupling(state.x[i], state.y[i], state.z[i] + z0);
}

void sample_transverse(const BathState& state, const DipolarField& field, double z0,
                       std::vector<double>& ax, std::vector<double>& ay) {
    const std::size_t n = state.size();
    ax.resize(n);
    ay.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        field.transverse(state.x[i], state.y[i], state.z[i] + z0, ax[i], ay[i]);
}

CouplingTrajectory generate_trajectory(const ScenarioConfig& cfg, std::uint64_t traj_index) {
    const std::int64_t steps = cfg.n_steps();
    const std::int64_t n = cfg.n_spins();
    const double mb = static_cast<double>(steps + 1) * static_cast<double>(n) * 16.0 / 1e6;
    if (mb > cfg.traj_memory_cap_mb) {
        std::ostringstream os;
        os << "generate_trajectory: " << n << " nuclei x " << (steps + 1)
           << " frames (N*t_max/dt = " << n * steps << " samples, ~" << mb
           << " MB) exceeds traj_memory_cap_mb = " << cfg.traj_memory_cap_mb;
        throw ValidationError(os.str());
    }

    CouplingTrajectory traj;
    traj.dt = cfg.dt;
    traj.config_hash = cfg.content_hash();
    traj.times.reserve(steps + 1);
    traj.g.reserve(steps + 1);
    traj.swaps.reserve(steps + 1);

    BathState state = init_bath(cfg, traj_index);
    const DipolarField field(cfg.nv_axis_tilt_deg);
    std::vector<std::complex<double>> g;
    for (std::int64_t k = 0; k <= steps; ++k) {
        traj.times.push_back(k * cfg.dt);
        sample_couplings(state, field, cfg.z0, g);
        traj.g.push_back(g);
        if (k < steps) {
            step_diffusion(state, cfg.dt, cfg.diffusion);
            traj.swaps.emplace_back(state.swap_events);
        } else {
            traj.swaps.emplace_back();
        }
    }
    return traj;
}

namespace {
constexpr char traj_magic[4] = {'N', 'V', 'T', 'J'};
}

void dump_trajectory(const CouplingTrajectory& traj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open trajectory file for writing: " + path);
    const std::uint32_t version = 1;
    const std::uint64_t n = traj.n_nuclei();
    const std::uint64_t frames = traj.g.size();
    out.write(traj_magic, 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&traj.config_hash), 8);
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&frames), 8);
    out.write(reinterpret_cast<const char*>(&traj.dt), 8);
    for (std::uint64_t k = 0; k < frames; ++k) {
        out.write(reinterpret_cast<const char*>(&traj.times[k]), 8);
        out.write(reinterpret_cast<const char*>(traj.g[k].data()),
                  static_cast<std::streamsize>(n * sizeof(std::complex<double>)));
        const std::uint32_t ns = static_cast<std::uint32_t>(traj.swaps[k].size());
        out.write(reinterpret_cast<const char*>(&ns), 4);
        out.write(reinterpret_cast<const char*>(traj.swaps[k].data()),
                  static_cast<std::streamsize>(ns * 4));
    }
    if (!out) throw IoError("short write on trajectory file: " + path);
}

CouplingTrajectory load_trajectory(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trajectory file: " + path);
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t n = 0, frames = 0;
    CouplingTrajectory traj;
    in.read(magic, 4);
    if (!in || std::memcmp(magic, traj_magic, 4) != 0)
        throw IoError("not a trajectory file: " + path);
    in.read(reinterpret_cast<char*>(&version), 4);
    if (version != 1) throw IoError("unsupported trajectory file version");
    in.read(reinterpret_cast<char*>(&traj.config_hash), 8);
    in.read(reinterpret_cast<char*>(&n), 8);
    in.read(reinterpret_cast<char*>(&frames), 8);
    in.read(reinterpret_cast<char*>(&traj.dt), 8);
    traj.times.resize(frames);
    traj.g.resize(frames);
    traj.swaps.resize(frames);
    for (std::uint64_t k = 0; k < frames; ++k) {
        in.read(reinterpret_cast<char*>(&traj.times[k]), 8);
        traj.g[k].resize(n);
        in.read(reinterpret_cast<char*>(traj.g[k].data()),
                static_cast<std::streamsize>(n * sizeof(std::complex<double>)));
        std::uint32_t ns = 0;
        in.read(reinterpret_cast<char*>(&ns), 4);
        traj.swaps[k].resize(ns);
        in.read(reinterpret_cast<char*>(traj.swaps[k].data()),
                static_cast<std::streamsize>(ns * 4));
    }
    if (!in) throw IoError("truncated trajectory file: " + path);
    return traj;
}

} // namespace nvdnp
