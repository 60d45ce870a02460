#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nvdnp/config.hpp"

namespace nvdnp {

struct CommandOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;   // overrides file and environment
    std::optional<int> n_traj;           // overrides cfg.n_traj
    unsigned threads = 1;
};

// estimate: correlation/moments pipeline -> estimate.json
void cmd_estimate(const CommandOptions& opt);

// predict: closed form (+ T1rho variant) from a prior estimate -> CSV curves
void cmd_predict(const CommandOptions& opt, const std::string& estimate_path);

struct SimulateOptions {
    std::optional<std::string> dump_traj_dir;
    std::optional<std::string> replay_traj_dir;
};
void cmd_simulate(const CommandOptions& opt, const SimulateOptions& sim = {});

struct CompareOptions {
    std::vector<std::string> curve_paths; // first file is the reference
    std::optional<std::string> measured_path;
    std::optional<double> t1rho_us;       // enables alpha from the tail fit
    double tail_fraction = 0.4;
    std::string out_dir = ".";
};
void cmd_compare(const CompareOptions& opt);

struct SweepOptions {
    std::string parameter; // rho | z0 | D | B | T1rho
    std::vector<double> values;
};
void cmd_sweep(const CommandOptions& opt, const SweepOptions& sweep);

ScenarioConfig load_config_with_overrides(const CommandOptions& opt);

} // namespace nvdnp
