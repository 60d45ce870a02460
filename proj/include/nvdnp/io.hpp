#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nvdnp/analytic.hpp"
#include "nvdnp/statistics.hpp"

namespace nvdnp {

// Common curve format shared by predict/simulate/compare:
// optional '# key = value' header lines, then
//   t_us,n_mean,stderr,provenance
void write_curve_csv(const std::string& path, const PolarizationCurve& curve,
                     const std::map<std::string, std::string>& annotations = {});
PolarizationCurve read_curve_csv(const std::string& path);

// Measured data: t_us, normalized population, error (3 columns, header row).
PolarizationCurve read_measured_csv(const std::string& path);

// Estimate report: JSON, units in key names, every number with stderr.
std::string estimate_to_json(const ScenarioConfig& cfg, const CorrelationEstimate& est);
CorrelationEstimate estimate_from_json(const std::string& text);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

std::uint64_t fnv1a_file(const std::string& path);

// Every command writes one of these next to its outputs; output files are
// listed with content hashes so reruns can be compared byte for byte.
struct RunManifest {
    std::string command;
    std::string code_version;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> seed_streams;
    unsigned threads = 1;
    std::map<std::string, double> timings_ms;
    std::vector<std::pair<std::string, std::uint64_t>> outputs; // path, fnv64

    void add_output(const std::string& path);
    std::string to_json() const;
    void write(const std::string& path) const;
};

} // namespace nvdnp
