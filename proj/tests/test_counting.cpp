#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ppcs/counting.hpp"

using namespace ppcs;

namespace {

LossBudget default_budget() { return LossBudget{}; }

DetectorParams det_signal() { return DetectorParams{}; }

DetectorParams det_idler() {
  DetectorParams d;
  d.efficiency = 0.05;
  return d;
}

// internal rate for the calibrated source at a given on-chip power (mW)
double rate_at(double p_mw) {
  double p_eff = p_mw / std::sqrt(1.0 + p_mw * p_mw);
  double ref = 1.0 / std::sqrt(2.0);
  return 5e6 * (p_eff / ref) * (p_eff / ref);
}

}  // namespace

TEST_CASE("combined loss budget is 68 dB") {
  REQUIRE(default_budget().combined_db(det_signal(), det_idler()) ==
          Catch::Approx(68.0).margin(0.05));
}

TEST_CASE("singles rates include darks") {
  auto [s1, s2] = singles_rates(1e6, default_budget(), det_signal(), det_idler());
  REQUIRE(s1 == Catch::Approx(1e6 * std::pow(10.0, -2.4) * 0.10 + 300.0));
  REQUIRE(s2 == Catch::Approx(1e6 * std::pow(10.0, -2.1) * 0.05 + 300.0));
  REQUIRE_THROWS_AS(singles_rates(-1.0, default_budget(), det_signal(), det_idler()),
                    DomainError);
}

TEST_CASE("correlation window fraction limits") {
  // wide window captures the whole peak
  REQUIRE(correlation_fraction_in_window(50e-9, 30e-12, 50e-12, 50e-12) ==
          Catch::Approx(1.0).margin(1e-6));
  // no jitter reduces to the Laplace CDF
  double tau = 30e-12, w = 60e-12;
  REQUIRE(correlation_fraction_in_window(w, tau, 0.0, 0.0) ==
          Catch::Approx(1.0 - std::exp(-w / tau)).margin(1e-9));
  // pure Gaussian case
  REQUIRE(correlation_fraction_in_window(1e-12, 0.0, 1e-9, 0.0) <
          correlation_fraction_in_window(3e-9, 0.0, 1e-9, 0.0));
}

TEST_CASE("coincidence rate lands near the 68 dB prediction") {
  auto res = analytic_coincidences(5e6, default_budget(), det_signal(), det_idler(),
                                   CoincidenceConfig{});
  REQUIRE(res.true_rate_hz > 0.6);
  REQUIRE(res.true_rate_hz < 1.0);
}

TEST_CASE("dark counts alone give zero CAR") {
  auto res = analytic_coincidences(0.0, default_budget(), det_signal(), det_idler(),
                                   CoincidenceConfig{});
  REQUIRE(res.true_rate_hz == 0.0);
  REQUIRE(res.car == 0.0);
  REQUIRE(res.singles_rate_1_hz == Catch::Approx(300.0));
}

TEST_CASE("analytic CAR reproduces the calibrated working point") {
  auto res = analytic_coincidences(rate_at(0.3), default_budget(), det_signal(),
                                   det_idler(), CoincidenceConfig{});
  REQUIRE(res.car >= 44.0);
  REQUIRE(res.car <= 56.0);
  REQUIRE(res.car == Catch::Approx(51.67).margin(0.2));
  REQUIRE(res.car_sigma > 0.0);
}

TEST_CASE("CAR does not increase with power past the working point") {
  double last = std::numeric_limits<double>::infinity();
  for (double p : {0.3, 0.5, 0.75, 1.0, 1.5, 2.0}) {
    auto res = analytic_coincidences(rate_at(p), default_budget(), det_signal(),
                                     det_idler(), CoincidenceConfig{});
    REQUIRE(res.car <= last + 1e-9);
    last = res.car;
  }
}

TEST_CASE("simulation is deterministic in the seed") {
  CoincidenceConfig cfg;
  cfg.acquisition_s = 200.0;
  auto a = simulate_coincidences(rate_at(0.3), default_budget(), det_signal(),
                                 det_idler(), cfg);
  auto b = simulate_coincidences(rate_at(0.3), default_budget(), det_signal(),
                                 det_idler(), cfg);
  REQUIRE(a.histogram == b.histogram);
  cfg.seed = 999;
  auto c = simulate_coincidences(rate_at(0.3), default_budget(), det_signal(),
                                 det_idler(), cfg);
  REQUIRE(a.histogram != c.histogram);
}

TEST_CASE("monte carlo agrees with the analytic estimator") {
  CoincidenceConfig cfg;
  for (double p : {0.1, 0.3, 1.0}) {
    auto an = analytic_coincidences(rate_at(p), default_budget(), det_signal(),
                                    det_idler(), cfg);
    auto mc = simulate_coincidences(rate_at(p), default_budget(), det_signal(),
                                    det_idler(), cfg);
    auto est = car_from_histogram(mc.histogram, mc.bin_centers_s, cfg);
    double sigma = std::hypot(an.car_sigma, est.car_sigma);
    REQUIRE(std::abs(est.car - an.car) <= 3.0 * sigma);
  }
}

TEST_CASE("dark-only histogram is flat") {
  CoincidenceConfig cfg;
  cfg.acquisition_s = 500.0;
  DetectorParams d1 = det_signal(), d2 = det_idler();
  d1.dark_rate_hz = 2e4;
  d2.dark_rate_hz = 2e4;
  auto mc = simulate_coincidences(0.0, default_budget(), d1, d2, cfg);
  double mean = 0.0;
  for (auto c : mc.histogram) mean += static_cast<double>(c);
  mean /= static_cast<double>(mc.histogram.size());
  REQUIRE(mean > 20.0);  // enough statistics for the chi-square to mean much
  double chi2 = 0.0;
  for (auto c : mc.histogram) {
    double d = static_cast<double>(c) - mean;
    chi2 += d * d / mean;
  }
  double reduced = chi2 / static_cast<double>(mc.histogram.size() - 1);
  REQUIRE(reduced > 0.7);
  REQUIRE(reduced < 1.3);
  auto est = car_from_histogram(mc.histogram, mc.bin_centers_s, cfg);
  REQUIRE(std::abs(est.car) < 0.2);
}

TEST_CASE("histogram estimator recovers a synthetic CAR of 50") {
  CoincidenceConfig cfg;
  std::size_t n = cfg.n_bins();
  std::vector<double> centers(n);
  std::vector<std::uint64_t> hist(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    centers[i] = -cfg.histogram_span_s + (static_cast<double>(i) + 0.5) * cfg.bin_width_s;
    hist[i] = 40;  // flat accidental floor
  }
  // peak: 50x the per-window background on top of it
  std::size_t n_peak = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(centers[i]) <= cfg.window_s) ++n_peak;
  std::uint64_t extra = 50 * 40 * n_peak / n_peak;  // 50 * bg per peak bin
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(centers[i]) <= cfg.window_s) hist[i] += extra;
  auto est = car_from_histogram(hist, centers, cfg);
  REQUIRE(est.car == Catch::Approx(50.0).margin(0.01));
  REQUIRE(est.car_raw == Catch::Approx(51.0).margin(0.01));
}

TEST_CASE("histogram estimator needs off-peak bins") {
  CoincidenceConfig cfg;
  cfg.window_s = 3.2e-9;
  cfg.histogram_span_s = 4e-9;  // almost everything inside the guard region
  std::size_t n = cfg.n_bins();
  std::vector<double> centers(n);
  std::vector<std::uint64_t> hist(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    centers[i] = -cfg.histogram_span_s + (static_cast<double>(i) + 0.5) * cfg.bin_width_s;
  REQUIRE_THROWS_AS(car_from_histogram(hist, centers, cfg), DomainError);
}

TEST_CASE("overflow guard rejects runaway acquisitions") {
  CoincidenceConfig cfg;
  cfg.acquisition_s = 1e9;
  REQUIRE_THROWS_AS(simulate_coincidences(rate_at(1.0), default_budget(),
                                          det_signal(), det_idler(), cfg),
                    OverflowGuardError);
}

TEST_CASE("config validation") {
  CoincidenceConfig cfg;
  cfg.bin_width_s = 0.0;
  REQUIRE_THROWS_AS(cfg.validate(), DomainError);
  cfg = CoincidenceConfig{};
  cfg.window_s = 1e-14;
  REQUIRE_THROWS_AS(cfg.validate(), DomainError);
  cfg = CoincidenceConfig{};
  cfg.histogram_span_s = cfg.window_s / 2.0;
  REQUIRE_THROWS_AS(cfg.validate(), DomainError);
}
