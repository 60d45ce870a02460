#include "nvdnp/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nvdnp/errors.hpp"
#include "nvdnp/version.hpp"

namespace nvdnp {

using json = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << std::setprecision(17);
    return out;
}

} // namespace

void write_text_file(const std::string& path, const std::string& content) {
    auto out = open_out(path);
    out << content;
    if (!out) throw IoError("short write: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_curve_csv(const std::string& path, const PolarizationCurve& curve,
                     const std::map<std::string, std::string>& annotations) {
    auto out = open_out(path);
    for (const auto& [k, v] : annotations) out << "# " << k << " = " << v << "\n";
    out << "t_us,n_mean,stderr,provenance\n";
    const std::string prov = provenance_name(curve.provenance);
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
        const double se = i < curve.stderr_.size() ? curve.stderr_[i] : 0.0;
        out << curve.times[i] << ',' << curve.n_mean[i] << ',' << se << ',' << prov << "\n";
    }
    if (!out) throw IoError("short write: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

PolarizationCurve read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open curve file: " + path);
    PolarizationCurve curve;
    std::string line;
    bool header_seen = false;
    int t_col = 0, n_col = 1, se_col = 2, prov_col = 3;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv_line(line);
        if (!header_seen) {
            header_seen = true;
            bool named = false;
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (fields[i] == "t_us") { t_col = static_cast<int>(i); named = true; }
                if (fields[i] == "n_mean") n_col = static_cast<int>(i);
                if (fields[i] == "stderr") se_col = static_cast<int>(i);
                if (fields[i] == "provenance") prov_col = static_cast<int>(i);
            }
            if (named) continue; // header row consumed
        }
        if (static_cast<int>(fields.size()) <= n_col)
            throw IoError("curve file " + path + ": malformed row '" + line + "'");
        try {
            curve.times.push_back(std::stod(fields[t_col]));
            curve.n_mean.push_back(std::stod(fields[n_col]));
            if (static_cast<int>(fields.size()) > se_col && !fields[se_col].empty())
                curve.stderr_.push_back(std::stod(fields[se_col]));
            if (static_cast<int>(fields.size()) > prov_col && !fields[prov_col].empty())
                curve.provenance = provenance_from_name(fields[prov_col]);
        } catch (const std::invalid_argument&) {
            throw IoError("curve file " + path + ": non-numeric row '" + line + "'");
        }
    }
    if (curve.times.empty()) throw IoError("curve file " + path + ": no data rows");
    return curve;
}

PolarizationCurve read_measured_csv(const std::string& path) {
    PolarizationCurve curve = read_curve_csv(path);
    curve.provenance = CurveProvenance::measured;
    return curve;
}

namespace {

json value_with_se(double v, double se, const char* unit) {
    json j;
    j["value"] = v;
    j["stderr"] = se;
    j["unit"] = unit;
    return j;
}

} // namespace

std::string estimate_to_json(const ScenarioConfig& cfg, const CorrelationEstimate& est) {
    json j;
    j["report"] = "correlation-estimate";
    j["schema_version"] = 1;
    j["config_hash"] = cfg.content_hash();
    j["n_spins"] = cfg.n_spins();
    j["omega_n_rad_per_us"] = cfg.omega_n();
    j["sigma2"] = value_with_se(est.sigma2, est.sigma2_se, "rad^2/us^2");
    j["sigma2_trajectory_c0"] = value_with_se(est.sigma2_c0, est.sigma2_c0_se, "rad^2/us^2");
    j["tau_c"] = value_with_se(est.tau_c, est.tau_c_se, "us");
    j["gamma_plateau"] = value_with_se(est.gamma_plateau, est.gamma_plateau_se, "rad^2/us");
    j["chi"] = est.chi;
    j["regime"] = est.regime_label;
    j["plateau_detected"] = est.plateau_detected;
    j["plateau_spread"] = est.plateau_spread;
    j["exp_fit_tau_us"] = est.exp_fit_tau;
    j["exp_fit_residual"] = est.exp_fit_residual;
    j["mean_a"] = value_with_se(est.moments.mean_a, est.moments.mean_a_se, "rad/us");
    j["third_cumulant"] =
        value_with_se(est.moments.third_cumulant, est.moments.third_cumulant_se, "rad^3/us^3");
    j["mean_g_re_rad_per_us"] = est.moments.mean_g.real();
    j["mean_g_im_rad_per_us"] = est.moments.mean_g.imag();
    j["moment_samples"] = est.moments.n_samples;
    j["dt_est_us"] = est.dt_est;
    j["n_traj"] = est.n_traj;
    j["walkers_per_traj"] = est.walkers_per_traj;
    j["mean_swaps_per_walker"] = est.mean_swaps_per_walker;
    j["lag_times_us"] = est.lag_times;
    j["corr_rad2_per_us2"] = est.corr;
    j["corr_stderr"] = est.corr_se;
    j["gamma_rad2_per_us"] = est.gamma;
    j["gamma_stderr"] = est.gamma_se;
    return j.dump(2);
}

CorrelationEstimate estimate_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw IoError(std::string("estimate report parse failure: ") + e.what());
    }
    if (j.value("report", "") != std::string("correlation-estimate"))
        throw IoError("not a correlation-estimate report");
    CorrelationEstimate est;
    auto vs = [&](const char* key, double& v, double& se) {
        v = j.at(key).at("value").get<double>();
        se = j.at(key).at("stderr").get<double>();
    };
    vs("sigma2", est.sigma2, est.sigma2_se);
    vs("sigma2_trajectory_c0", est.sigma2_c0, est.sigma2_c0_se);
    vs("tau_c", est.tau_c, est.tau_c_se);
    vs("gamma_plateau", est.gamma_plateau, est.gamma_plateau_se);
    est.chi = j.at("chi").get<double>();
    est.regime_label = j.at("regime").get<std::string>();
    est.plateau_detected = j.at("plateau_detected").get<bool>();
    est.plateau_spread = j.at("plateau_spread").get<double>();
    est.exp_fit_tau = j.at("exp_fit_tau_us").get<double>();
    est.exp_fit_residual = j.at("exp_fit_residual").get<double>();
    vs("mean_a", est.moments.mean_a, est.moments.mean_a_se);
    vs("third_cumulant", est.moments.third_cumulant, est.moments.third_cumulant_se);
    est.moments.mean_g = {j.at("mean_g_re_rad_per_us").get<double>(),
                          j.at("mean_g_im_rad_per_us").get<double>()};
    est.moments.n_samples = j.at("moment_samples").get<std::int64_t>();
    est.moments.sigma2 = est.sigma2;
    est.moments.sigma2_se = est.sigma2_se;
    est.dt_est = j.at("dt_est_us").get<double>();
    est.n_traj = j.at("n_traj").get<int>();
    est.walkers_per_traj = j.at("walkers_per_traj").get<int>();
    est.mean_swaps_per_walker = j.at("mean_swaps_per_walker").get<double>();
    est.lag_times = j.at("lag_times_us").get<std::vector<double>>();
    est.corr = j.at("corr_rad2_per_us2").get<std::vector<double>>();
    est.corr_se = j.at("corr_stderr").get<std::vector<double>>();
    est.gamma = j.at("gamma_rad2_per_us").get<std::vector<double>>();
    est.gamma_se = j.at("gamma_stderr").get<std::vector<double>>();
    return est;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return h;
}

void RunManifest::add_output(const std::string& path) {
    outputs.emplace_back(path, fnv1a_file(path));
}

std::string RunManifest::to_json() const {
    json j;
    j["manifest"] = "nvdnp-run";
    j["command"] = command;
    j["code_version"] = code_version.empty() ? std::string(version_string) : code_version;
    std::ostringstream hex;
    hex << std::hex << config_hash;
    j["config_hash"] = hex.str();
    j["seed"] = seed;
    j["seed_streams"] = seed_streams;
    j["threads"] = threads;
    j["timings_ms"] = timings_ms;
    json outs = json::array();
    for (const auto& [p, h] : outputs) {
        std::ostringstream oh;
        oh << std::hex << h;
        outs.push_back({{"path", p}, {"fnv64", oh.str()}});
    }
    j["outputs"] = outs;
    return j.dump(2);
}

void RunManifest::write(const std::string& path) const {
    write_text_file(path, to_json());
}

} // namespace nvdnp
