#include "nvdnp/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <tuple>

#include <fftw3.h>

#include "nvdnp/bath.hpp"
#include "nvdnp/dipolar.hpp"
#include "nvdnp/parallel.hpp"
#include "nvdnp/rng.hpp"

namespace nvdnp {

namespace {

struct BatchMoments {
    double sum1 = 0, sum2 = 0, sum3 = 0; // per-component accumulators (pooled)
    double sum_ax = 0, sum_ay = 0;
    std::int64_t n = 0; // samples per component
};

// se over batch means, scaled to the grand mean.
double batch_se(const std::vector<double>& batch_means) {
    const std::size_t b = batch_means.size();
    if (b < 2) return 0.0;
    const double mean = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) / b;
    double s = 0;
    for (double v : batch_means) s += (v - mean) * (v - mean);
    return std::sqrt(s / (b * (b - 1.0)));
}

} // namespace

MomentsEstimate estimate_moments(const ScenarioConfig& cfg, std::int64_t n_samples,
                                 unsigned threads) {
    if (n_samples < 1000) throw ValidationError("estimate_moments: n_samples must be >= 1000");
    const int n_batches = 64;
    const std::int64_t per_batch = (n_samples + n_batches - 1) / n_batches;
    std::vector<BatchMoments> batches(n_batches);
    const DipolarField field(cfg.nv_axis_tilt_deg);
    const double half = 0.5 * cfg.box_length;

    parallel_for(n_batches, threads, [&](std::size_t b) {
        auto rng = make_stream(cfg.seed, StreamPurpose::moments, b);
        std::uniform_real_distribution<double> lat(-half, half);
        std::uniform_real_distribution<double> vert(0.0, cfg.box_length);
        BatchMoments acc;
        for (std::int64_t i = 0; i < per_batch; ++i) {
            const double x = lat(rng), y = lat(rng), z = vert(rng);
            double ax, ay;
            field.transverse(x, y, z + cfg.z0, ax, ay);
            acc.sum1 += ax + ay;
            acc.sum2 += ax * ax + ay * ay;
            acc.sum3 += ax * ax * ax + ay * ay * ay;
            acc.sum_ax += ax;
            acc.sum_ay += ay;
            acc.n += 2;
        }
        batches[b] = acc;
    });

    std::vector<double> bm_mean(n_batches), bm_var(n_batches), bm_c3(n_batches);
    double s1 = 0, s2 = 0, s3 = 0, sax = 0, say = 0;
    std::int64_t n_tot = 0;
    for (int b = 0; b < n_batches; ++b) {
        const auto& a = batches[b];
        const double m = a.sum1 / a.n;
        const double m2 = a.sum2 / a.n;
        const double m3 = a.sum3 / a.n;
        bm_mean[b] = m;
        bm_var[b] = m2 - m * m;
        bm_c3[b] = m3 - 3 * m * m2 + 2 * m * m * m; // central third moment
        s1 += a.sum1;
        s2 += a.sum2;
        s3 += a.sum3;
        sax += a.sum_ax;
        say += a.sum_ay;
        n_tot += a.n;
    }

    MomentsEstimate est;
    est.n_samples = n_tot / 2;
    est.mean_a = s1 / n_tot;
    est.sigma2 = s2 / n_tot - est.mean_a * est.mean_a;
    est.third_cumulant = s3 / n_tot - 3 * est.mean_a * (s2 / n_tot) +
                         2 * est.mean_a * est.mean_a * est.mean_a;
    est.mean_a_se = batch_se(bm_mean);
    est.sigma2_se = batch_se(bm_var);
    est.third_cumulant_se = batch_se(bm_c3);
    est.mean_ax = 2.0 * sax / n_tot;
    est.mean_ay = 2.0 * say / n_tot;
    est.mean_g = {0.25 * est.mean_ax, 0.25 * est.mean_ay};
    return est;
}

// ---------------------------------------------------------------------------
// Autocorrelation machinery
// ---------------------------------------------------------------------------

namespace {

std::mutex fftw_mutex; // plan creation/destruction is not thread-safe

class AutocorrFft {
public:
    explicit AutocorrFft(std::size_t n) : n_(n) {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        in_ = fftw_alloc_real(n);
        spec_ = fftw_alloc_complex(n / 2 + 1);
        fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, spec_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_, in_, FFTW_ESTIMATE);
    }
    ~AutocorrFft() {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(in_);
        fftw_free(spec_);
    }
    AutocorrFft(const AutocorrFft&) = delete;
    AutocorrFft& operator=(const AutocorrFft&) = delete;

    // Adds sum_t x[t] x[t+l] for l < n_lags onto acc (raw, unnormalized).
    void accumulate(const std::vector<double>& series, std::size_t n_lags, double* acc) {
        const std::size_t t = series.size();
        std::copy(series.begin(), series.end(), in_);
        std::fill(in_ + t, in_ + n_, 0.0);
        fftw_execute(fwd_);
        const std::size_t half = n_ / 2 + 1;
        for (std::size_t i = 0; i < half; ++i) {
            spec_[i][0] = spec_[i][0] * spec_[i][0] + spec_[i][1] * spec_[i][1];
            spec_[i][1] = 0.0;
        }
        fftw_execute(inv_);
        const double norm = 1.0 / static_cast<double>(n_);
        for (std::size_t l = 0; l < n_lags; ++l) acc[l] += in_[l] * norm;
    }

private:
    std::size_t n_;
    double* in_;
    fftw_complex* spec_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct TrajAccum {
    std::vector<double> raw_corr;
    double mean_sum = 0.0;
    std::int64_t mean_count = 0;
    std::int64_t swap_count = 0;
};

// Block means over the last 20% of the window: (mean, min, max).
std::tuple<double, double, double> plateau_window(const std::vector<double>& g) {
    const std::size_t n = g.size();
    const std::size_t w0 = static_cast<std::size_t>(0.8 * static_cast<double>(n));
    const std::size_t span = n - w0;
    const std::size_t nb = 4;
    double mn = 0, mx = 0, total = 0;
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t lo = w0 + b * span / nb;
        const std::size_t hi = w0 + (b + 1) * span / nb;
        double m = 0;
        for (std::size_t l = lo; l < hi; ++l) m += g[l];
        m /= static_cast<double>(hi - lo);
        if (b == 0) mn = mx = m;
        mn = std::min(mn, m);
        mx = std::max(mx, m);
        total += m;
    }
    return {total / nb, mn, mx};
}

} // namespace

namespace detail {

CorrelationEstimate reduce_correlation(const SeriesGenerator& gen, int n_traj, int walkers,
                                       std::size_t n_lags, std::size_t n_samples, double dt_est,
                                       unsigned threads) {
    if (n_traj < 2) throw ValidationError("reduce_correlation: n_traj must be >= 2");
    const std::size_t fft_n = next_pow2(2 * n_samples);
    std::vector<TrajAccum> per_traj(n_traj);

    parallel_for(static_cast<std::size_t>(n_traj), threads, [&](std::size_t tr) {
        std::vector<std::vector<double>> ax(walkers), ay(walkers);
        for (int w = 0; w < walkers; ++w) {
            ax[w].assign(n_samples, 0.0);
            ay[w].assign(n_samples, 0.0);
        }
        TrajAccum acc;
        acc.raw_corr.assign(n_lags, 0.0);
        gen(static_cast<int>(tr), ax, ay, acc.swap_count);
        for (int w = 0; w < walkers; ++w)
            for (std::size_t s = 0; s < n_samples; ++s) acc.mean_sum += ax[w][s] + ay[w][s];
        acc.mean_count = static_cast<std::int64_t>(n_samples) * walkers * 2;
        AutocorrFft fft(fft_n);
        for (int w = 0; w < walkers; ++w) {
            fft.accumulate(ax[w], n_lags, acc.raw_corr.data());
            fft.accumulate(ay[w], n_lags, acc.raw_corr.data());
        }
        per_traj[tr] = std::move(acc);
    });

    const double pairs_per_lag_base = 2.0 * walkers;
    std::vector<std::vector<double>> corr_i(n_traj);
    for (int tr = 0; tr < n_traj; ++tr) {
        const auto& a = per_traj[tr];
        const double mean = a.mean_sum / static_cast<double>(a.mean_count);
        corr_i[tr].resize(n_lags);
        for (std::size_t l = 0; l < n_lags; ++l) {
            const double pairs = pairs_per_lag_base * static_cast<double>(n_samples - l);
            corr_i[tr][l] = a.raw_corr[l] / pairs - mean * mean;
        }
    }

    auto integrate = [&](const std::vector<double>& c) {
        std::vector<double> g(c.size(), 0.0);
        for (std::size_t l = 1; l < c.size(); ++l)
            g[l] = g[l - 1] + 0.5 * (c[l - 1] + c[l]) * dt_est;
        return g;
    };

    CorrelationEstimate est;
    est.dt_est = dt_est;
    est.n_traj = n_traj;
    est.walkers_per_traj = walkers;
    est.lag_times.resize(n_lags);
    for (std::size_t l = 0; l < n_lags; ++l) est.lag_times[l] = static_cast<double>(l) * dt_est;

    est.corr.assign(n_lags, 0.0);
    for (int tr = 0; tr < n_traj; ++tr)
        for (std::size_t l = 0; l < n_lags; ++l) est.corr[l] += corr_i[tr][l];
    for (auto& v : est.corr) v /= n_traj;

    est.corr_se.assign(n_lags, 0.0);
    for (int tr = 0; tr < n_traj; ++tr)
        for (std::size_t l = 0; l < n_lags; ++l) {
            const double d = corr_i[tr][l] - est.corr[l];
            est.corr_se[l] += d * d;
        }
    for (auto& v : est.corr_se)
        v = std::sqrt(v / (static_cast<double>(n_traj) * (n_traj - 1.0)));

    est.gamma = integrate(est.corr);
    std::vector<std::vector<double>> gamma_i(n_traj);
    for (int tr = 0; tr < n_traj; ++tr) gamma_i[tr] = integrate(corr_i[tr]);
    est.gamma_se.assign(n_lags, 0.0);
    for (int tr = 0; tr < n_traj; ++tr)
        for (std::size_t l = 0; l < n_lags; ++l) {
            const double d = gamma_i[tr][l] - est.gamma[l];
            est.gamma_se[l] += d * d;
        }
    for (auto& v : est.gamma_se)
        v = std::sqrt(v / (static_cast<double>(n_traj) * (n_traj - 1.0)));

    std::int64_t swaps = 0;
    for (const auto& a : per_traj) swaps += a.swap_count;
    est.mean_swaps_per_walker =
        static_cast<double>(swaps) / (static_cast<double>(n_traj) * walkers);

    auto [plateau, pmin, pmax] = plateau_window(est.gamma);
    est.gamma_plateau = plateau;
    est.plateau_spread = plateau != 0.0 ? (pmax - pmin) / std::abs(plateau) : 1.0;
    est.plateau_detected = est.plateau_spread < 0.02 && plateau > 0.0;

    est.sigma2_c0 = est.corr[0];
    est.sigma2_c0_se = est.corr_se[0];
    est.tau_c = est.sigma2_c0 > 0 ? est.gamma_plateau / est.sigma2_c0 : 0.0;

    // Delete-one jackknife for the plateau/C(0) ratio.
    {
        std::vector<double> plat_i(n_traj), c0_i(n_traj), tau_jk(n_traj);
        for (int tr = 0; tr < n_traj; ++tr) {
            plat_i[tr] = std::get<0>(plateau_window(gamma_i[tr]));
            c0_i[tr] = corr_i[tr][0];
        }
        const double plat_sum = std::accumulate(plat_i.begin(), plat_i.end(), 0.0);
        const double c0_sum = std::accumulate(c0_i.begin(), c0_i.end(), 0.0);
        double jk_mean = 0;
        for (int tr = 0; tr < n_traj; ++tr) {
            const double p = (plat_sum - plat_i[tr]) / (n_traj - 1.0);
            const double c = (c0_sum - c0_i[tr]) / (n_traj - 1.0);
            tau_jk[tr] = c > 0 ? p / c : 0.0;
            jk_mean += tau_jk[tr];
        }
        jk_mean /= n_traj;
        double s = 0;
        for (double v : tau_jk) s += (v - jk_mean) * (v - jk_mean);
        est.tau_c_se = std::sqrt(s * (n_traj - 1.0) / n_traj);
        est.gamma_plateau_se = batch_se(plat_i);
    }

    // Exponential-kernel diagnostic: golden-section fit of
    // C(0) tau (1 - exp(-t/tau)) against the measured gamma.
    {
        auto resid = [&](double tau) {
            double s = 0;
            for (std::size_t l = 0; l < n_lags; ++l) {
                const double m =
                    est.sigma2_c0 * tau * (1.0 - std::exp(-est.lag_times[l] / tau));
                s += (m - est.gamma[l]) * (m - est.gamma[l]);
            }
            return std::sqrt(s / static_cast<double>(n_lags));
        };
        double lo = dt_est, hi = est.lag_times.back();
        const double gr = 0.6180339887498949;
        double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
        double fa = resid(a), fb = resid(b);
        for (int it = 0; it < 80; ++it) {
            if (fa < fb) {
                hi = b; b = a; fb = fa;
                a = hi - gr * (hi - lo); fa = resid(a);
            } else {
                lo = a; a = b; fa = fb;
                b = lo + gr * (hi - lo); fb = resid(b);
            }
        }
        est.exp_fit_tau = 0.5 * (lo + hi);
        const double gend = std::abs(est.gamma.back());
        est.exp_fit_residual = gend > 0 ? resid(est.exp_fit_tau) / gend : 1.0;
    }
    return est;
}

} // namespace detail

CorrelationEstimate estimate_correlation(const ScenarioConfig& cfg, int n_traj,
                                         unsigned threads) {
    // Lag grid: up to 1024 points across the estimation window; walkers run
    // for twice the window so every lag keeps at least n_lags pairs.
    const double window = cfg.estimate_t_max();
    const std::size_t max_lags = 1024;
    const double dt_est = std::max(cfg.dt, window / static_cast<double>(max_lags - 1));
    const std::size_t n_lags = static_cast<std::size_t>(std::floor(window / dt_est)) + 1;
    if (n_lags < 32)
        throw ValidationError("estimate_correlation: est_t_max_us spans fewer than 32 "
                              "samples of dt_us; widen the window or refine dt");
    const std::size_t n_samples = 2 * n_lags - 1;
    const int walkers = cfg.est_walkers_per_traj;
    const DipolarField field(cfg.nv_axis_tilt_deg);

    auto gen = [&](int tr, std::vector<std::vector<double>>& ax,
                   std::vector<std::vector<double>>& ay, std::int64_t& swap_count) {
        ScenarioConfig wcfg = cfg;
        wcfg.nucleus_count = walkers;
        BathState bath = init_bath(wcfg, static_cast<std::uint64_t>(tr));
        bath.rng = make_stream(cfg.seed, StreamPurpose::correlation, static_cast<std::uint64_t>(tr));
        std::vector<double> vx, vy;
        for (std::size_t s = 0; s < n_samples; ++s) {
            sample_transverse(bath, field, cfg.z0, vx, vy);
            for (int w = 0; w < walkers; ++w) {
                ax[w][s] = vx[w];
                ay[w][s] = vy[w];
            }
            if (s + 1 < n_samples) {
                step_diffusion(bath, dt_est, cfg.diffusion);
                swap_count += static_cast<std::int64_t>(bath.swap_events.size());
            }
        }
    };

    CorrelationEstimate est =
        detail::reduce_correlation(gen, n_traj, walkers, n_lags, n_samples, dt_est, threads);

    const MomentsEstimate mom = estimate_moments(cfg, cfg.est_moment_samples, threads);
    est.moments = mom;
    est.sigma2 = mom.sigma2;
    est.sigma2_se = mom.sigma2_se;
    est.chi = regime_chi(cfg, est);
    est.regime_label = regime_label(est.chi);

    if (!est.plateau_detected) {
        std::ostringstream os;
        os << "estimate_correlation: gamma(t) has not plateaued within t_max = " << window
           << " us (last-20% spread " << est.plateau_spread * 100
           << "% exceeds 2%); increase est_t_max_us";
        throw InconclusiveEstimateError(os.str(), est);
    }
    return est;
}

double validity_horizon(const ScenarioConfig& cfg, const CorrelationEstimate& est) {
    const double n = static_cast<double>(cfg.n_spins());
    const double c3 = std::abs(est.moments.third_cumulant);
    const double g2 = std::norm(est.moments.mean_g);
    const double inf = std::numeric_limits<double>::infinity();
    const double h1 = c3 > 0 ? 1.0 / (n * c3 * est.tau_c * est.tau_c) : inf;
    const double h2 = g2 > 0 ? 1.0 / (n * g2 * est.tau_c) : inf;
    return std::min(h1, h2);
}

// ---------------------------------------------------------------------------

double sigma2_quadrature(double z0, double box_length, double tilt_deg,
                         unsigned points_per_axis) {
    // Gauss-Legendre nodes via Newton iteration on P_n; the integrand is
    // smooth over the box (r >= z0), so this converges fast.
    const unsigned n = points_per_axis;
    std::vector<double> node(n), weight(n);
    for (unsigned i = 0; i < n; ++i) {
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (unsigned k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) {
                p0 = 1.0;
                p1 = x;
                for (unsigned k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double d = n * (x * p1 - p0) / (x * x - 1.0);
                node[i] = x;
                weight[i] = 2.0 / ((1.0 - x * x) * d * d);
                break;
            }
        }
    }

    const DipolarField field(tilt_deg);
    const double l = box_length, half = 0.5 * l, vol = l * l * l;
    double sum1 = 0.0, sum2 = 0.0;
    for (unsigned i = 0; i < n; ++i) {
        const double x = half * node[i];
        for (unsigned j = 0; j < n; ++j) {
            const double y = half * node[j];
            for (unsigned k = 0; k < n; ++k) {
                const double z = 0.5 * l * (node[k] + 1.0);
                double ax, ay;
                field.transverse(x, y, z + z0, ax, ay);
                const double w = weight[i] * weight[j] * weight[k];
                sum1 += w * ax;
                sum2 += w * ax * ax;
            }
        }
    }
    const double jac = half * half * (0.5 * l);
    const double mean = sum1 * jac / vol;
    return sum2 * jac / vol - mean * mean;
}

} // namespace nvdnp
