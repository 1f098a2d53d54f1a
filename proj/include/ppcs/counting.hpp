#pragma once

// Detector and coincidence statistics: singles rates, analytic true and
// accidental coincidence rates, Monte Carlo event-stream simulation,
// histogramming, and CAR with Poisson-propagated uncertainty.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "ppcs/spectral.hpp"

namespace ppcs {

class OverflowGuardError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct DetectorParams {
  double efficiency = 0.10;
  double dark_rate_hz = 300.0;
  double jitter_sigma_s = 50e-12;
  double dead_time_s = 0.0;

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0))
      throw DomainError("efficiency must be in [0, 1]");
    if (dark_rate_hz < 0.0) throw DomainError("dark rate must be >= 0");
  }
};

struct LossBudget {
  // Path losses from the generation ring to each detector, excluding the
  // detector efficiency.
  double signal_path_db = 24.0;
  double idler_path_db = 21.0;

  double arm_transmission(int arm, const DetectorParams& det) const {
    double path = arm == 0 ? signal_path_db : idler_path_db;
    return linear_power_from_db(-path) * det.efficiency;
  }

  double combined_db(const DetectorParams& d1, const DetectorParams& d2) const {
    return signal_path_db + idler_path_db - 10.0 * std::log10(d1.efficiency) -
           10.0 * std::log10(d2.efficiency);
  }
};

struct CoincidenceConfig {
  double bin_width_s = 100e-12;
  double window_s = 3.2e-9;  // acceptance half-width around zero delay
  double acquisition_s = 3000.0;
  double histogram_span_s = 20e-9;  // histogram covers +/- span
  std::uint64_t seed = 12345;
  double pair_correlation_tau_s = 30e-12;  // ring photon lifetime
  // Uncorrelated single-photon background per arm (residual pump), photons/s
  // before path loss is NOT applied here: these are rates at the detectors.
  double background_rate_hz_arm1 = 0.0;
  double background_rate_hz_arm2 = 0.0;

  void validate() const {
    if (!(bin_width_s > 0.0)) throw DomainError("bin width must be > 0");
    if (!(window_s >= bin_width_s / 2.0))
      throw DomainError("window must be at least half a bin");
    if (!(acquisition_s > 0.0)) throw DomainError("acquisition must be > 0");
    if (!(histogram_span_s >= window_s)) throw DomainError("span must cover window");
  }

  std::size_t n_bins() const {
    return static_cast<std::size_t>(std::ceil(2.0 * histogram_span_s / bin_width_s));
  }
};

struct CoincidenceResult {
  std::vector<double> bin_centers_s;
  std::vector<std::uint64_t> histogram;
  double singles_rate_1_hz = 0.0;
  double singles_rate_2_hz = 0.0;
  double true_rate_hz = 0.0;
  double accidental_rate_hz = 0.0;
  double car = 0.0;
  double car_sigma = 0.0;
  double car_raw = 0.0;  // peak/background without background subtraction
  bool car_is_infinite = false;
};

// ---------------------------------------------------------------------------
// Singles

// S_i = pair_rate * T_i * eta_i + dark_i + background_i * eta-included rate.
inline std::pair<double, double> singles_rates(double pair_rate_hz,
                                               const LossBudget& budget,
                                               const DetectorParams& det1,
                                               const DetectorParams& det2,
                                               double background_1_hz = 0.0,
                                               double background_2_hz = 0.0) {
  det1.validate();
  det2.validate();
  if (pair_rate_hz < 0.0) throw DomainError("pair rate must be >= 0");
  double s1 = pair_rate_hz * budget.arm_transmission(0, det1) + det1.dark_rate_hz +
              background_1_hz;
  double s2 = pair_rate_hz * budget.arm_transmission(1, det2) + det2.dark_rate_hz +
              background_2_hz;
  return {s1, s2};
}

// ---------------------------------------------------------------------------
// Correlation peak shape

// Fraction of the correlation peak inside +/-window. The pair delay is a
// back-to-back exponential (Laplace, scale tau) convolved with the combined
// Gaussian jitter of the two detectors.
inline double correlation_fraction_in_window(double window_s, double tau_s,
                                             double sigma1_s, double sigma2_s) {
  double sigma = std::sqrt(sigma1_s * sigma1_s + sigma2_s * sigma2_s);
  if (tau_s <= 0.0 && sigma <= 0.0) return 1.0;
  if (sigma <= 0.0) return 1.0 - std::exp(-window_s / tau_s);
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  if (tau_s <= 0.0) return phi(window_s / sigma) - phi(-window_s / sigma);
  // numerically integrate Laplace density against the Gaussian window CDF
  double span = 12.0 * tau_s + 2.0 * window_s;
  const int n = 4000;  // Simpson, even count
  double h = 2.0 * span / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    double y = -span + i * h;
    double lap = std::exp(-std::abs(y) / tau_s) / (2.0 * tau_s);
    double g = phi((window_s - y) / sigma) - phi((-window_s - y) / sigma);
    double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * lap * g;
  }
  return std::min(1.0, sum * h / 3.0);
}

// ---------------------------------------------------------------------------
// Analytic coincidences

inline CoincidenceResult analytic_coincidences(double pair_rate_hz,
                                               const LossBudget& budget,
                                               const DetectorParams& det1,
                                               const DetectorParams& det2,
                                               const CoincidenceConfig& cfg) {
  cfg.validate();
  auto [s1, s2] = singles_rates(pair_rate_hz, budget, det1, det2,
                                cfg.background_rate_hz_arm1,
                                cfg.background_rate_hz_arm2);
  double frac = correlation_fraction_in_window(
      cfg.window_s, cfg.pair_correlation_tau_s, det1.jitter_sigma_s,
      det2.jitter_sigma_s);
  CoincidenceResult res;
  res.singles_rate_1_hz = s1;
  res.singles_rate_2_hz = s2;
  res.true_rate_hz = pair_rate_hz * budget.arm_transmission(0, det1) *
                     budget.arm_transmission(1, det2) * frac;
  res.accidental_rate_hz = s1 * s2 * 2.0 * cfg.window_s;
  if (res.accidental_rate_hz <= 0.0) {
    res.car_is_infinite = res.true_rate_hz > 0.0;
    res.car = res.car_is_infinite ? std::numeric_limits<double>::infinity() : 0.0;
    res.car_raw = res.car;
    return res;
  }
  res.car = res.true_rate_hz / res.accidental_rate_hz;
  res.car_raw = (res.true_rate_hz + res.accidental_rate_hz) / res.accidental_rate_hz;
  // expected-count uncertainty over the configured acquisition
  double n_true = res.true_rate_hz * cfg.acquisition_s;
  double n_acc = res.accidental_rate_hz * cfg.acquisition_s;
  if (n_true > 0.0 && n_acc > 0.0)
    res.car_sigma = res.car * std::sqrt(1.0 / n_true + 1.0 / n_acc);
  return res;
}

// ---------------------------------------------------------------------------
// Histogram estimator

struct CarEstimate {
  double car = 0.0;
  double car_sigma = 0.0;
  double car_raw = 0.0;
  double peak_counts = 0.0;
  double background_per_window = 0.0;
  bool car_is_infinite = false;
};

inline CarEstimate car_from_histogram(const std::vector<std::uint64_t>& histogram,
                                      const std::vector<double>& bin_centers_s,
                                      const CoincidenceConfig& cfg) {
  if (histogram.size() != bin_centers_s.size())
    throw ShapeError("histogram/bin size mismatch");
  double guard = 2.0 * cfg.window_s;
  std::uint64_t peak = 0;
  std::size_t n_peak_bins = 0;
  std::uint64_t bg = 0;
  std::size_t n_bg_bins = 0;
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    double t = std::abs(bin_centers_s[i]);
    if (t <= cfg.window_s) {
      peak += histogram[i];
      ++n_peak_bins;
    } else if (t > guard) {
      bg += histogram[i];
      ++n_bg_bins;
    }
  }
  if (n_bg_bins < 10) throw DomainError("need at least 10 off-peak bins");
  CarEstimate est;
  est.peak_counts = static_cast<double>(peak);
  double bg_per_bin = static_cast<double>(bg) / static_cast<double>(n_bg_bins);
  est.background_per_window = bg_per_bin * static_cast<double>(n_peak_bins);
  if (est.background_per_window <= 0.0) {
    est.car_is_infinite = est.peak_counts > 0.0;
    est.car = est.car_is_infinite ? std::numeric_limits<double>::infinity() : 0.0;
    est.car_raw = est.car;
    return est;
  }
  est.car = (est.peak_counts - est.background_per_window) / est.background_per_window;
  est.car_raw = est.peak_counts / est.background_per_window;
  double n_peak = std::max(est.peak_counts, 1.0);
  double n_bg = std::max(static_cast<double>(bg), 1.0);
  est.car_sigma = (est.car + 1.0) * std::sqrt(1.0 / n_peak + 1.0 / n_bg);
  return est;
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 step
  std::uint64_t z = seed + salt * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Homogeneous Poisson pair emission, per-arm thinning, exponential release
// delays, Gaussian jitter, dark counts and uncorrelated background photons.
// Acquisition is partitioned into segments with derived seeds; the merged
// stream is deterministic for a fixed cfg.seed.
inline CoincidenceResult simulate_coincidences(double pair_rate_hz,
                                               const LossBudget& budget,
                                               const DetectorParams& det1,
                                               const DetectorParams& det2,
                                               const CoincidenceConfig& cfg) {
  cfg.validate();
  det1.validate();
  det2.validate();
  double p1 = budget.arm_transmission(0, det1);
  double p2 = budget.arm_transmission(1, det2);

  auto [s1, s2] = singles_rates(pair_rate_hz, budget, det1, det2,
                                cfg.background_rate_hz_arm1,
                                cfg.background_rate_hz_arm2);
  double expected = (s1 + s2) * cfg.acquisition_s;
  if (expected > 1e9)
    throw OverflowGuardError(
        "expected detection count exceeds 1e9; shorten the acquisition");

  std::vector<double> arm1, arm2;
  arm1.reserve(static_cast<std::size_t>(s1 * cfg.acquisition_s * 1.1) + 64);
  arm2.reserve(static_cast<std::size_t>(s2 * cfg.acquisition_s * 1.1) + 64);

  const int n_segments = 64;
  double seg_len = cfg.acquisition_s / n_segments;
  for (int seg = 0; seg < n_segments; ++seg) {
    std::mt19937_64 rng(detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(seg)));
    double t0 = seg * seg_len;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::exponential_distribution<double> release(1.0 / cfg.pair_correlation_tau_s);
    std::normal_distribution<double> jit1(0.0, det1.jitter_sigma_s);
    std::normal_distribution<double> jit2(0.0, det2.jitter_sigma_s);

    auto poisson_count = [&](double rate) -> std::size_t {
      if (rate <= 0.0) return 0;
      std::poisson_distribution<long long> pd(rate * seg_len);
      return static_cast<std::size_t>(std::max<long long>(0, pd(rng)));
    };

    // Poisson thinning: emitted pairs split into three independent streams
    // (only arm 1 fires, only arm 2 fires, both fire), so the emission
    // stream itself never has to be materialized.
    std::size_t n_only1 = poisson_count(pair_rate_hz * p1 * (1.0 - p2));
    for (std::size_t i = 0; i < n_only1; ++i)
      arm1.push_back(t0 + uni(rng) * seg_len + release(rng) + jit1(rng));
    std::size_t n_only2 = poisson_count(pair_rate_hz * p2 * (1.0 - p1));
    for (std::size_t i = 0; i < n_only2; ++i)
      arm2.push_back(t0 + uni(rng) * seg_len + release(rng) + jit2(rng));
    std::size_t n_both = poisson_count(pair_rate_hz * p1 * p2);
    for (std::size_t i = 0; i < n_both; ++i) {
      double t = t0 + uni(rng) * seg_len;
      arm1.push_back(t + release(rng) + jit1(rng));
      arm2.push_back(t + release(rng) + jit2(rng));
    }
    std::size_t n_d1 = poisson_count(det1.dark_rate_hz);
    for (std::size_t i = 0; i < n_d1; ++i) arm1.push_back(t0 + uni(rng) * seg_len);
    std::size_t n_d2 = poisson_count(det2.dark_rate_hz);
    for (std::size_t i = 0; i < n_d2; ++i) arm2.push_back(t0 + uni(rng) * seg_len);
    std::size_t n_b1 = poisson_count(cfg.background_rate_hz_arm1);
    for (std::size_t i = 0; i < n_b1; ++i)
      arm1.push_back(t0 + uni(rng) * seg_len + jit1(rng));
    std::size_t n_b2 = poisson_count(cfg.background_rate_hz_arm2);
    for (std::size_t i = 0; i < n_b2; ++i)
      arm2.push_back(t0 + uni(rng) * seg_len + jit2(rng));
  }
  std::sort(arm1.begin(), arm1.end());
  std::sort(arm2.begin(), arm2.end());

  // pairwise delays t2 - t1 within +/- span, two-pointer sweep
  CoincidenceResult res;
  std::size_t n_bins = cfg.n_bins();
  res.histogram.assign(n_bins, 0);
  res.bin_centers_s.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i)
    res.bin_centers_s[i] =
        -cfg.histogram_span_s + (static_cast<double>(i) + 0.5) * cfg.bin_width_s;

  std::size_t lo = 0;
  for (double t1 : arm1) {
    while (lo < arm2.size() && arm2[lo] < t1 - cfg.histogram_span_s) ++lo;
    for (std::size_t j = lo; j < arm2.size(); ++j) {
      double d = arm2[j] - t1;
      if (d >= cfg.histogram_span_s) break;
      auto bin = static_cast<std::size_t>((d + cfg.histogram_span_s) / cfg.bin_width_s);
      if (bin < n_bins) ++res.histogram[bin];
    }
  }

  res.singles_rate_1_hz = static_cast<double>(arm1.size()) / cfg.acquisition_s;
  res.singles_rate_2_hz = static_cast<double>(arm2.size()) / cfg.acquisition_s;
  CarEstimate est = car_from_histogram(res.histogram, res.bin_centers_s, cfg);
  res.car = est.car;
  res.car_sigma = est.car_sigma;
  res.car_raw = est.car_raw;
  res.car_is_infinite = est.car_is_infinite;
  res.true_rate_hz = (est.peak_counts - est.background_per_window) / cfg.acquisition_s;
  res.accidental_rate_hz = est.background_per_window / cfg.acquisition_s;
  return res;
}

}  // namespace ppcs
