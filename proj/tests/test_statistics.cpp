#include <doctest.h>

#include <cmath>

#include "nvdnp/statistics.hpp"
#include "oracles.hpp"

using namespace nvdnp;

namespace {

ScenarioConfig oil_cfg() {
    ScenarioConfig cfg;
    cfg.z0 = 3.2;
    cfg.diffusion = 0.46;
    cfg.density = 50.0;
    cfg.box_length = 20.0;
    cfg.dt = 0.05;
    cfg.t_max = 40.0;
    cfg.seed = 2024;
    return cfg;
}

} // namespace

TEST_CASE("moments: Monte-Carlo sigma^2 agrees with quadrature within 3 stderr") {
    ScenarioConfig cfg = oil_cfg();
    auto mom = estimate_moments(cfg, 2'000'000, 2);
    const double quad = sigma2_quadrature(cfg.z0, cfg.box_length);
    CHECK(std::abs(mom.sigma2 - quad) < 3.0 * mom.sigma2_se);
    CHECK(mom.sigma2_se / mom.sigma2 < 0.05);
    // symmetric box: mean and third cumulant vanish
    CHECK(std::abs(mom.mean_a) < 4.0 * mom.mean_a_se + 1e-12);
    CHECK(std::abs(mom.third_cumulant) < 4.0 * mom.third_cumulant_se + 1e-15);
    CHECK(std::abs(mom.mean_g) < 3.0 * mom.mean_a_se + 1e-12);
}

TEST_CASE("moments: box shrunk to a point has vanishing variance") {
    ScenarioConfig cfg = oil_cfg();
    cfg.box_length = 1e-4;
    cfg.density = 1e12; // keep N positive, irrelevant here
    auto mom = estimate_moments(cfg, 10'000);
    CHECK(mom.sigma2 < 1e-12);
}

TEST_CASE("sigma^2 scaling with depth (quadrature oracle)") {
    // Geometrically similar boxes (L scaled with z0): doubling z0 divides
    // sigma^2 by 2^6; at fixed large box the near-field integral gives 2^3.
    const double s_small = sigma2_quadrature(2.0, 40.0);
    const double s_large_scaled = sigma2_quadrature(4.0, 80.0);
    CHECK(s_small / s_large_scaled == doctest::Approx(64.0).epsilon(0.02));
    const double s_large_fixed = sigma2_quadrature(4.0, 40.0);
    CHECK(s_small / s_large_fixed == doctest::Approx(8.0).epsilon(0.15));
}

TEST_CASE("correlation reduction recovers a synthetic exponential process") {
    // Ornstein-Uhlenbeck with sigma2 = 4, tau = 2: the estimator pipeline is
    // exercised end to end with a known answer, independent of the bath.
    const double sigma2 = 4.0, tau = 2.0, dt = 0.05;
    const std::size_t n_lags = 801; // 40 us window = 20 tau
    const std::size_t n_samples = 2 * n_lags - 1;
    const int walkers = 16, n_traj = 48;
    auto gen = [&](int tr, std::vector<std::vector<double>>& ax,
                   std::vector<std::vector<double>>& ay, std::int64_t&) {
        for (int w = 0; w < walkers; ++w) {
            auto s = oracle::ou_series(sigma2, tau, dt, n_samples,
                                       1000 + 977 * static_cast<std::uint64_t>(tr) + w);
            ax[w] = std::move(s.ax);
            ay[w] = std::move(s.ay);
        }
    };
    auto est = detail::reduce_correlation(gen, n_traj, walkers, n_lags, n_samples, dt, 2);
    CHECK(est.plateau_detected);
    CHECK(std::abs(est.sigma2_c0 - sigma2) / sigma2 < 0.05);
    CHECK(std::abs(est.tau_c - tau) / tau < 0.10);
    CHECK(std::abs(est.tau_c - tau) < 4.0 * est.tau_c_se);
    // gamma plateau = sigma2 tau
    CHECK(std::abs(est.gamma_plateau - sigma2 * tau) / (sigma2 * tau) < 0.10);
    // the kernel is exactly exponential: the diagnostic fit must be clean
    CHECK(est.exp_fit_residual < 0.05);
    CHECK(std::abs(est.exp_fit_tau - tau) / tau < 0.15);
}

TEST_CASE("estimate_correlation: deterministic across thread counts") {
    ScenarioConfig cfg = oil_cfg();
    cfg.z0 = 2.0;
    cfg.box_length = 10.0;
    cfg.density = 5.0;
    cfg.diffusion = 0.5;
    cfg.est_t_max = 25.0;
    cfg.est_walkers_per_traj = 16;
    cfg.est_moment_samples = 50'000;
    auto a = estimate_correlation(cfg, 16, 1);
    auto b = estimate_correlation(cfg, 16, 2);
    CHECK(a.tau_c == b.tau_c); // bit-identical
    CHECK(a.sigma2 == b.sigma2);
    CHECK(a.gamma == b.gamma);
}

TEST_CASE("estimate_correlation: tau_c halves when D doubles") {
    ScenarioConfig cfg = oil_cfg();
    cfg.z0 = 2.0;
    cfg.box_length = 10.0;
    cfg.density = 5.0;
    cfg.est_walkers_per_traj = 48;
    cfg.est_moment_samples = 50'000;

    cfg.diffusion = 0.5;
    cfg.est_t_max = 25.0;
    auto slow = estimate_correlation(cfg, 48, 2);
    cfg.diffusion = 1.0;
    cfg.est_t_max = 12.5;
    cfg.seed = 77;
    auto fast = estimate_correlation(cfg, 48, 2);
    CHECK(slow.tau_c / fast.tau_c == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("estimate_correlation: frozen bath never plateaus") {
    ScenarioConfig cfg = oil_cfg();
    cfg.diffusion = 0.0;
    cfg.est_t_max = 5.0;
    cfg.est_walkers_per_traj = 8;
    cfg.est_moment_samples = 10'000;
    try {
        (void)estimate_correlation(cfg, 4, 1);
        FAIL("expected inconclusive-estimate error");
    } catch (const InconclusiveEstimateError& e) {
        CHECK(!e.partial.gamma.empty()); // partial curve attached
        CHECK(!e.partial.plateau_detected);
        CHECK(e.partial.gamma.back() > 0);
    }
}

TEST_CASE("regime classification") {
    CorrelationEstimate est;
    est.tau_c = 10.0;
    ScenarioConfig cfg = oil_cfg(); // 0.066 T
    const double chi = regime_chi(cfg, est);
    CHECK(chi == doctest::Approx(176.6).epsilon(0.01)); // 2 pi 2.81 MHz * 10 us
    CHECK(regime_label(chi) == "resonant-transfer regime");
    CHECK(regime_label(0.0) == "motional-suppression regime");
    est.tau_c = 0.0;
    CHECK(regime_chi(cfg, est) == 0.0);
}

TEST_CASE("validity horizon") {
    ScenarioConfig cfg = oil_cfg();
    cfg.nucleus_count = 10000;
    cfg.density = 10000.0 / std::pow(cfg.box_length, 3);
    CorrelationEstimate est;
    est.tau_c = 1.0;

    est.moments.third_cumulant = 0.0;
    est.moments.mean_g = {0.0, 0.0};
    CHECK(std::isinf(validity_horizon(cfg, est)));

    // N <xi^3> tau^2 = 0.1 per us -> horizon 10 us
    est.moments.third_cumulant = 0.1 / 10000.0;
    CHECK(validity_horizon(cfg, est) == doctest::Approx(10.0).epsilon(1e-12));

    // the mean-coupling branch can only shorten it
    est.moments.mean_g = {1e-3, 0.0};
    const double h2 = 1.0 / (10000.0 * 1e-6 * 1.0);
    CHECK(validity_horizon(cfg, est) == doctest::Approx(std::min(10.0, h2)).epsilon(1e-12));
}
