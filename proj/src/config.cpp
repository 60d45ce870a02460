#include "nvdnp/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nvdnp/errors.hpp"

namespace nvdnp {

using json = nlohmann::ordered_json;

std::int64_t ScenarioConfig::n_spins() const {
    if (nucleus_count) return *nucleus_count;
    return static_cast<std::int64_t>(std::llround(density * box_length * box_length * box_length));
}

std::int64_t ScenarioConfig::n_steps() const {
    return static_cast<std::int64_t>(std::llround(t_max / dt));
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

template <typename T>
std::string two_values(const char* field, T a, T b) {
    std::ostringstream os;
    os << field << ": conflicting values " << a << " vs " << b;
    return os.str();
}

} // namespace

void ScenarioConfig::validate() {
    require(schema_version == 1, "schema_version: unsupported (expected 1)");
    require(z0 > 0, "z0_nm: must be > 0");
    require(diffusion >= 0, "diffusion_nm2_per_us: must be >= 0");
    require(density > 0, "density_per_nm3: must be > 0");
    require(b_field >= 0, "magnetic_field_T: must be >= 0");
    require(box_length > 0, "box_length_nm: must be > 0");
    require(dt > 0, "dt_us: must be > 0");
    require(t_max >= dt, "t_max_us: must be >= dt_us");
    require(n_traj >= 1, "n_traj: must be >= 1");
    require(est_walkers_per_traj >= 1, "est_walkers_per_traj: must be >= 1");
    require(est_moment_samples >= 1000, "est_moment_samples: must be >= 1000");
    require(bath_mean_population >= 0 && bath_mean_population <= 1,
            "bath_mean_population: must lie in [0, 1]");
    if (t1rho) require(*t1rho > 0, "t1rho_us: must be > 0");
    if (est_t_max) require(*est_t_max >= dt, "est_t_max_us: must be >= dt_us");

    const double n_from_density = density * box_length * box_length * box_length;
    if (nucleus_count) {
        require(*nucleus_count >= 0, "nucleus_count: must be >= 0");
        if (std::abs(static_cast<double>(*nucleus_count) - n_from_density) > 1.0)
            throw ValidationError(two_values("nucleus_count vs density*box^3",
                                             static_cast<double>(*nucleus_count),
                                             n_from_density));
    }

    // Hartmann-Hahn condition: Omega should match the nuclear Larmor frequency.
    const double wn = omega_n();
    if (rabi && wn > 0 && std::abs(*rabi - wn) > 0.01 * wn) {
        std::ostringstream os;
        os << "drive detuned from Hartmann-Hahn condition: |Omega - gamma_n*B| = "
           << std::abs(*rabi - wn) << " rad/us exceeds 1% of omega_N = " << wn;
        warnings.push_back(os.str());
    }
}

namespace {

Engine engine_from_string(const std::string& s) {
    if (s == "auto") return Engine::automatic;
    if (s == "amplitude") return Engine::amplitude;
    if (s == "matrix") return Engine::matrix;
    throw ValidationError("engine: expected one of auto|amplitude|matrix, got '" + s + "'");
}

std::string engine_to_string(Engine e) {
    switch (e) {
        case Engine::amplitude: return "amplitude";
        case Engine::matrix: return "matrix";
        default: return "auto";
    }
}

} // namespace

std::string ScenarioConfig::to_json(int indent) const {
    json j;
    j["schema_version"] = schema_version;
    j["z0_nm"] = z0;
    j["diffusion_nm2_per_us"] = diffusion;
    j["density_per_nm3"] = density;
    j["magnetic_field_T"] = b_field;
    if (rabi) j["rabi_rad_per_us"] = *rabi;
    j["box_length_nm"] = box_length;
    if (nucleus_count) j["nucleus_count"] = *nucleus_count;
    if (t1rho) j["t1rho_us"] = *t1rho;
    j["dt_us"] = dt;
    j["t_max_us"] = t_max;
    j["n_traj"] = n_traj;
    j["seed"] = seed;
    j["nv_axis_tilt_deg"] = nv_axis_tilt_deg;
    j["bath_mean_population"] = bath_mean_population;
    j["detuning_fluctuations"] = detuning_fluctuations;
    j["engine"] = engine_to_string(engine);
    if (est_t_max) j["est_t_max_us"] = *est_t_max;
    j["est_walkers_per_traj"] = est_walkers_per_traj;
    j["est_moment_samples"] = est_moment_samples;
    j["traj_memory_cap_mb"] = traj_memory_cap_mb;
    return j.dump(indent);
}

std::uint64_t ScenarioConfig::content_hash() const {
    // FNV-1a over the canonical dump; stable across runs of the same build.
    const std::string s = to_json(-1);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("config parse failure: ") + e.what());
    }
    ScenarioConfig cfg;
    try {
        cfg.schema_version = j.value("schema_version", 1);
        if (j.contains("z0_nm")) cfg.z0 = j.at("z0_nm").get<double>();
        if (j.contains("diffusion_nm2_per_us"))
            cfg.diffusion = j.at("diffusion_nm2_per_us").get<double>();
        if (j.contains("density_per_nm3")) cfg.density = j.at("density_per_nm3").get<double>();
        const bool has_t = j.contains("magnetic_field_T");
        const bool has_g = j.contains("magnetic_field_gauss");
        if (has_t && has_g)
            throw ValidationError("magnetic_field_T and magnetic_field_gauss are exclusive");
        if (has_t) cfg.b_field = j.at("magnetic_field_T").get<double>();
        if (has_g) cfg.b_field = gauss_to_tesla(j.at("magnetic_field_gauss").get<double>());
        if (j.contains("rabi_rad_per_us")) cfg.rabi = j.at("rabi_rad_per_us").get<double>();
        if (j.contains("box_length_nm")) cfg.box_length = j.at("box_length_nm").get<double>();
        if (j.contains("nucleus_count"))
            cfg.nucleus_count = j.at("nucleus_count").get<std::int64_t>();
        if (j.contains("t1rho_us")) cfg.t1rho = j.at("t1rho_us").get<double>();
        if (j.contains("dt_us")) cfg.dt = j.at("dt_us").get<double>();
        if (j.contains("t_max_us")) cfg.t_max = j.at("t_max_us").get<double>();
        if (j.contains("n_traj")) cfg.n_traj = j.at("n_traj").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("nv_axis_tilt_deg"))
            cfg.nv_axis_tilt_deg = j.at("nv_axis_tilt_deg").get<double>();
        if (j.contains("bath_mean_population"))
            cfg.bath_mean_population = j.at("bath_mean_population").get<double>();
        if (j.contains("detuning_fluctuations"))
            cfg.detuning_fluctuations = j.at("detuning_fluctuations").get<bool>();
        if (j.contains("engine")) cfg.engine = engine_from_string(j.at("engine").get<std::string>());
        if (j.contains("est_t_max_us")) cfg.est_t_max = j.at("est_t_max_us").get<double>();
        if (j.contains("est_walkers_per_traj"))
            cfg.est_walkers_per_traj = j.at("est_walkers_per_traj").get<int>();
        if (j.contains("est_moment_samples"))
            cfg.est_moment_samples = j.at("est_moment_samples").get<std::int64_t>();
        if (j.contains("traj_memory_cap_mb"))
            cfg.traj_memory_cap_mb = j.at("traj_memory_cap_mb").get<double>();
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("config field error: ") + e.what());
    }

    // Environment override is restricted to the RNG seed by design.
    if (const char* env = std::getenv("NVDNP_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw ValidationError("NVDNP_SEED: not an unsigned integer");
        cfg.seed = v;
    }

    cfg.validate();
    return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

} // namespace nvdnp
