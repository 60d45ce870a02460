#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nvdnp/config.hpp"
#include "nvdnp/dipolar.hpp"

namespace nvdnp {

// N independently diffusing nuclei in the box [-L/2,L/2]^2 x [0,L] above the
// diamond surface (z = 0); the NV sits at (0,0,-z0). Lateral faces are
// periodic images, the top face mirrors; both reset the particle's identity
// (reservoir exchange, recorded in swap_events). The bottom face reflects
// without a swap: the solid is impenetrable and no reservoir lives there.
// Reflected/wrapped uniform stays uniform, so the equilibrium density is flat.
struct BathState {
    std::vector<double> x, y, z;       // nm, lab frame
    std::vector<std::uint32_t> swap_events; // indices replaced in the last step
    std::mt19937_64 rng;
    double box_length = 0.0;

    std::size_t size() const { return x.size(); }
};

BathState init_bath(const ScenarioConfig& cfg, std::uint64_t traj_index);

// One Euler-Maruyama step: independent Gaussian increments of variance 2 D dt
// per coordinate, then boundary handling. Exact in law for free diffusion at
// any dt; only the swap detection is grid-resolution limited.
void step_diffusion(BathState& state, double dt, double diffusion);

// g_i = coupling(x_i - NV position). Cannot hit the singularity floor for
// z0 > hard_floor with the box above the surface.
void sample_couplings(const BathState& state, const DipolarField& field, double z0,
                      std::vector<std::complex<double>>& out);

// Transverse hyperfine pair per nucleus (statistics estimators).
void sample_transverse(const BathState& state, const DipolarField& field, double z0,
                       std::vector<double>& ax, std::vector<double>& ay);

struct CouplingTrajectory {
    double dt = 0.0;
    std::vector<double> times;                              // us, grid {0, dt, ...}
    std::vector<std::vector<std::complex<double>>> g;       // per step: N couplings
    std::vector<std::vector<std::uint32_t>> swaps;          // swaps applied after step k
    std::uint64_t config_hash = 0;

    std::size_t n_nuclei() const { return g.empty() ? 0 : g.front().size(); }
};

// Full in-memory series on {0, dt, ..., t_max}; bit-reproducible given
// (cfg.seed, traj_index). Throws when the frame count would exceed the
// configured memory cap.
CouplingTrajectory generate_trajectory(const ScenarioConfig& cfg, std::uint64_t traj_index);

// Columnar binary dump (header with config hash, then frames); replay must be
// bit-identical to live generation.
void dump_trajectory(const CouplingTrajectory& traj, const std::string& path);
CouplingTrajectory load_trajectory(const std::string& path);

} // namespace nvdnp
