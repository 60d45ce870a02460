#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nvdnp/constants.hpp"

namespace nvdnp {

enum class Engine { automatic, amplitude, matrix };

// All physical and numerical parameters of one run. Immutable after
// validation; safe to share across workers.
struct ScenarioConfig {
    int schema_version = 1;

    double z0 = 3.2;            // NV depth below the surface, nm
    double diffusion = 0.46;    // nm^2/us
    double density = 50.0;      // protons per nm^3
    double b_field = 0.066;     // tesla
    std::optional<double> rabi; // rad/us; default = resonance (gamma_n * B)
    double box_length = 20.0;   // nm
    std::optional<std::int64_t> nucleus_count; // default round(density * L^3)
    std::optional<double> t1rho;               // us; absent = no relaxation
    double dt = 0.02;           // us
    double t_max = 40.0;        // us
    int n_traj = 200;
    std::uint64_t seed = 1;

    double nv_axis_tilt_deg = 0.0;    // NV axis polar angle from surface normal
    double bath_mean_population = 0.5;
    bool detuning_fluctuations = false; // per-nucleus A_z/2 diagonal shifts (dense path)
    Engine engine = Engine::automatic;

    // Statistics-estimation knobs (defaults documented in the schema).
    std::optional<double> est_t_max;  // us; default t_max
    int est_walkers_per_traj = 64;
    std::int64_t est_moment_samples = 2'000'000;
    double traj_memory_cap_mb = 2048.0;

    std::vector<std::string> warnings; // attached during validation

    double omega_n() const { return larmor_frequency(b_field); }
    double rabi_or_resonant() const { return rabi ? *rabi : omega_n(); }
    double drive_detuning() const { return rabi_or_resonant() - omega_n(); }
    std::int64_t n_spins() const;
    double estimate_t_max() const { return est_t_max ? *est_t_max : t_max; }
    std::int64_t n_steps() const;

    // Throws ValidationError on any invariant violation; appends warnings
    // (e.g. Hartmann-Hahn detuning above 1%) instead of failing where the
    // configuration is legal but suspicious.
    void validate();

    std::string to_json(int indent = 2) const;
    std::uint64_t content_hash() const;

    static ScenarioConfig from_json_text(const std::string& text);
    static ScenarioConfig load(const std::string& path);
};

} // namespace nvdnp
