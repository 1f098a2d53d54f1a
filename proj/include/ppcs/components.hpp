#pragma once

// Optical element models: all-pass and add-drop ring resonators, the
// corrugated-waveguide DBR (transfer-matrix method plus a coupled-mode
// closed form used as an independent cross-check), grating couplers,
// taps/attenuators, the stray-light path and resistive heaters.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "ppcs/optim.hpp"
#include "ppcs/spectral.hpp"

namespace ppcs {

class CalibrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Heaters

struct HeaterState {
  double current_a = 0.0;
  double shift_coefficient_hz_per_w = 2.0e12;
  double resistance_ohm = 500.0;

  // Red shift for positive heating; zero current leaves the comb untouched.
  double frequency_shift_hz() const {
    return -shift_coefficient_hz_per_w * current_a * current_a * resistance_ohm;
  }
};

// ---------------------------------------------------------------------------
// Rings

enum class CouplingRegime { critical, over_coupled, under_coupled, explicit_coeffs };

struct RingParams {
  double radius_m = 15e-6;
  double group_index = 4.1;
  double loaded_q = 4e4;
  CouplingRegime coupling_regime = CouplingRegime::over_coupled;
  double resonance_offset_hz = 0.0;
  double drop_insertion_loss_db = 1.5;
  // Nominal wavelength at which one comb line sits before offset and heating.
  double anchor_wavelength_m = 1525e-9;
  // Used only when coupling_regime == explicit_coeffs.
  double explicit_t1 = 0.0;
  double explicit_t2 = 0.0;
  double explicit_a = 0.0;

  double fsr_hz() const {
    return kSpeedOfLight / (group_index * 2.0 * std::numbers::pi * radius_m);
  }

  double resonance_hz(const HeaterState& heater) const {
    return wavelength_to_frequency(anchor_wavelength_m) + resonance_offset_hz +
           heater.frequency_shift_hz();
  }

  void validate() const {
    if (!(radius_m > 0.0)) throw DomainError("ring radius must be positive");
    if (!(group_index > 1.0 && group_index < 6.0))
      throw DomainError("group index out of range (1, 6)");
    if (!(loaded_q > 10.0)) throw DomainError("loaded Q must exceed 10");
  }
};

struct RingCoupling {
  double t1 = 1.0;
  double t2 = 1.0;  // 1 for all-pass
  double a = 1.0;
};

namespace detail {

// Round-trip amplitude product x = t1*t2*a from the loaded-Q finesse,
// F = pi*sqrt(x)/(1-x).
inline double round_trip_product(const RingParams& p) {
  double f0 = wavelength_to_frequency(p.anchor_wavelength_m);
  double fwhm = f0 / p.loaded_q;
  double finesse = p.fsr_hz() / fwhm;
  if (!(finesse > 1.0)) throw CalibrationError("loaded Q too low for ring FSR");
  // F*(1-y^2) = pi*y with y = sqrt(x)
  double c = std::numbers::pi / finesse;
  double y = (-c + std::sqrt(c * c + 4.0)) / 2.0;
  return y * y;
}

// Split exponent for t = x^s, a = x^(1-s) in the all-pass solve.
inline constexpr double kOverCoupledSplit = 0.95;
inline constexpr double kUnderCoupledSplit = 0.05;

}  // namespace detail

// All-pass (single-bus) coupling solve. Optional forced round-trip loss `a`.
inline RingCoupling solve_coupling_all_pass(const RingParams& p,
                                            std::optional<double> forced_a = {}) {
  p.validate();
  if (p.coupling_regime == CouplingRegime::explicit_coeffs)
    return {p.explicit_t1, 1.0, p.explicit_a};
  double x = detail::round_trip_product(p);
  if (forced_a) {
    double a = *forced_a;
    if (!(a > 0.0 && a <= 1.0)) throw DomainError("round-trip amplitude out of (0,1]");
    double t = x / a;
    if (t >= 1.0) throw CalibrationError("requested Q unreachable with given loss");
    if (p.coupling_regime == CouplingRegime::critical && std::abs(t - a) > 1e-6)
      throw CalibrationError("critical coupling requires matched loss (t == a)");
    return {t, 1.0, a};
  }
  switch (p.coupling_regime) {
    case CouplingRegime::critical: {
      double t = std::sqrt(x);
      return {t, 1.0, t};
    }
    case CouplingRegime::over_coupled:
      return {std::pow(x, detail::kOverCoupledSplit), 1.0,
              std::pow(x, 1.0 - detail::kOverCoupledSplit)};
    case CouplingRegime::under_coupled:
      return {std::pow(x, detail::kUnderCoupledSplit), 1.0,
              std::pow(x, 1.0 - detail::kUnderCoupledSplit)};
    default:
      throw CalibrationError("unsupported regime");
  }
}

// Add-drop coupling solve: symmetric couplers constrained by the loaded Q
// and the drop-port insertion loss.
inline RingCoupling solve_coupling_add_drop(const RingParams& p) {
  p.validate();
  if (p.coupling_regime == CouplingRegime::explicit_coeffs)
    return {p.explicit_t1, p.explicit_t2, p.explicit_a};
  double x = detail::round_trip_product(p);
  double d = linear_power_from_db(-p.drop_insertion_loss_db);
  // Drop-port peak power: (1-u)^2 * (x/u) / (1-x)^2 = d, with u = t^2, a = x/u.
  auto g = [&](double u) {
    return (1.0 - u) * (1.0 - u) * (x / u) - d * (1.0 - x) * (1.0 - x);
  };
  double lo = x, hi = 1.0 - 1e-12;
  if (g(lo) < 0.0 || g(hi) > 0.0)
    throw CalibrationError("drop insertion loss unreachable for this Q");
  double u = bisect_root(g, lo, hi);
  double t = std::sqrt(u);
  double a = x / u;
  if (p.coupling_regime == CouplingRegime::over_coupled) {
    // coupling loss must dominate intrinsic loss
    if (!((1.0 - u) > (1.0 - a * a)))
      throw CalibrationError("over-coupled regime unreachable for this Q/IL");
  }
  return {t, t, a};
}

inline std::complex<double> ring_all_pass_at(const RingParams& p,
                                             const RingCoupling& c,
                                             const HeaterState& heater, double f_hz) {
  double phi =
      2.0 * std::numbers::pi * (f_hz - p.resonance_hz(heater)) / p.fsr_hz();
  std::complex<double> e = std::polar(1.0, phi);
  return (c.t1 - c.a * e) / (1.0 - c.t1 * c.a * e);
}

struct AddDropResponse {
  std::complex<double> through;
  std::complex<double> drop;
};

inline AddDropResponse ring_add_drop_at(const RingParams& p, const RingCoupling& c,
                                        const HeaterState& heater, double f_hz) {
  double phi =
      2.0 * std::numbers::pi * (f_hz - p.resonance_hz(heater)) / p.fsr_hz();
  std::complex<double> e = std::polar(1.0, phi);
  std::complex<double> den = 1.0 - c.t1 * c.t2 * c.a * e;
  std::complex<double> through = (c.t1 - c.t2 * c.a * e) / den;
  double k1 = std::sqrt(1.0 - c.t1 * c.t1);
  double k2 = std::sqrt(1.0 - c.t2 * c.t2);
  // half round trip: field loss sqrt(a), phase phi/2
  std::complex<double> drop =
      -k1 * k2 * std::sqrt(c.a) * std::polar(1.0, phi / 2.0) / den;
  return {through, drop};
}

inline ComplexSpectrum ring_all_pass(const RingParams& p, const HeaterState& heater,
                                     const FrequencyGrid& grid) {
  RingCoupling c = solve_coupling_all_pass(p);
  std::vector<std::complex<double>> v(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i)
    v[i] = ring_all_pass_at(p, c, heater, grid.at(i));
  return ComplexSpectrum(grid, std::move(v));
}

inline std::pair<ComplexSpectrum, ComplexSpectrum> ring_add_drop(
    const RingParams& p, const HeaterState& heater, const FrequencyGrid& grid) {
  RingCoupling c = solve_coupling_add_drop(p);
  std::vector<std::complex<double>> th(grid.n_points), dr(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    auto r = ring_add_drop_at(p, c, heater, grid.at(i));
    th[i] = r.through;
    dr[i] = r.drop;
  }
  return {ComplexSpectrum(grid, std::move(th)), ComplexSpectrum(grid, std::move(dr))};
}

// ---------------------------------------------------------------------------
// DBR

struct DbrParams {
  double period_m = 320e-9;
  std::size_t n_periods = 8000;
  double n_eff = 2.4;
  double delta_n = 0.0;
  double bend_gap_m = 320e-9;  // one unperturbed period between the two halves
  double insertion_loss_db = 3.0;
  // Shifts the modeled stop band without touching n_eff (fabrication offset).
  double center_offset_m = -11e-9;

  double design_center_wavelength_m() const { return 2.0 * n_eff * period_m; }
  double effective_center_wavelength_m() const {
    return design_center_wavelength_m() + center_offset_m;
  }
  double length_m() const { return static_cast<double>(n_periods) * period_m; }
  double kappa_per_m() const { return 2.0 * delta_n / design_center_wavelength_m(); }

  void validate() const {
    if (n_periods < 1) throw DomainError("DBR needs at least one period");
    if (delta_n < 0.0) throw DomainError("DBR index contrast must be >= 0");
  }
};

// Coupled-mode closed form for the center-of-band power transmission,
// sech^2(kappa * L). Independent oracle for the TMM path.
inline double dbr_center_transmission_cmt(const DbrParams& p) {
  p.validate();
  double kl = p.kappa_per_m() * p.length_m();
  double s = 1.0 / std::cosh(kl);
  return s * s;
}

namespace detail {

using Mat2 = std::array<std::complex<double>, 4>;  // row-major 2x2

inline Mat2 mat_mul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

inline double mat_norm(const Mat2& m) {
  double n = 0.0;
  for (const auto& v : m) n = std::max(n, std::abs(v));
  return n;
}

// m^n by binary exponentiation; entries rescaled when they grow large, the
// accumulated scale is returned in log_scale (natural log).
inline Mat2 mat_pow(Mat2 m, std::size_t n, double& log_scale) {
  Mat2 r = {1.0, 0.0, 0.0, 1.0};
  log_scale = 0.0;
  double base_log = 0.0;
  while (n > 0) {
    if (n & 1) {
      r = mat_mul(r, m);
      log_scale += base_log;
      double nr = mat_norm(r);
      if (nr > 1e120) {
        for (auto& v : r) v /= nr;
        log_scale += std::log(nr);
      }
    }
    n >>= 1;
    if (n > 0) {
      m = mat_mul(m, m);
      base_log *= 2.0;
      double nm = mat_norm(m);
      if (nm > 1e120) {
        for (auto& v : m) v /= nm;
        base_log += std::log(nm);
      }
    }
  }
  return r;
}

inline Mat2 interface(double na, double nb) {
  double r = (na - nb) / (na + nb);
  double t = 2.0 * na / (na + nb);
  return {std::complex<double>(1.0 / t, 0.0), std::complex<double>(r / t, 0.0),
          std::complex<double>(r / t, 0.0), std::complex<double>(1.0 / t, 0.0)};
}

inline Mat2 propagation(double n, double d_m, double f_hz) {
  double delta = 2.0 * std::numbers::pi * n * d_m * f_hz / kSpeedOfLight;
  return {std::polar(1.0, -delta), 0.0, 0.0, std::polar(1.0, delta)};
}

}  // namespace detail

struct DbrPointResponse {
  std::complex<double> transmit;
  std::complex<double> reflect;
};

// Transfer-matrix evaluation of the corrugated-waveguide grating at one
// frequency. Unit cell: two half-period slabs at n_eff +/- delta_n/2 with
// Fresnel interfaces; a plain-waveguide bend gap splits the grating in two.
inline DbrPointResponse dbr_response_tmm_at(const DbrParams& p, double f_hz,
                                            bool apply_insertion_loss = true) {
  using namespace detail;
  p.validate();
  if (p.delta_n == 0.0) {
    double ilamp =
        apply_insertion_loss ? amplitude_from_db(-p.insertion_loss_db) : 1.0;
    return {std::complex<double>(ilamp, 0.0), 0.0};
  }
  // Fabrication offset: the stop band is translated in wavelength by
  // center_offset without changing the design formula.
  double lambda = kSpeedOfLight / f_hz;
  double f_model = kSpeedOfLight / (lambda - p.center_offset_m);

  double n1 = p.n_eff + p.delta_n / 2.0;
  double n2 = p.n_eff - p.delta_n / 2.0;
  double half = p.period_m / 2.0;

  Mat2 cell = mat_mul(
      mat_mul(propagation(n1, half, f_model), interface(n1, n2)),
      mat_mul(propagation(n2, half, f_model), interface(n2, n1)));

  std::size_t n_first = p.n_periods / 2;
  std::size_t n_second = p.n_periods - n_first;
  double ls1 = 0.0, ls2 = 0.0;
  Mat2 m = mat_mul(interface(p.n_eff, n1), mat_pow(cell, n_first, ls1));
  if (p.bend_gap_m > 0.0 && n_second > 0 && n_first > 0) {
    Mat2 gap = mat_mul(mat_mul(interface(n1, p.n_eff),
                               propagation(p.n_eff, p.bend_gap_m, f_model)),
                       interface(p.n_eff, n1));
    m = mat_mul(m, gap);
  }
  m = mat_mul(m, mat_pow(cell, n_second, ls2));
  m = mat_mul(m, interface(n1, p.n_eff));

  double log_scale = ls1 + ls2;
  // t = 1 / (scale * M00); the scale re-enters here so extreme gratings
  // underflow gracefully to zero transmission instead of overflowing.
  std::complex<double> m00 = m[0];
  std::complex<double> t;
  double log_abs_t = -log_scale - std::log(std::abs(m00));
  if (log_abs_t < -600.0) {
    t = 0.0;
  } else {
    t = std::exp(log_abs_t) * std::polar(1.0, -std::arg(m00));
  }
  std::complex<double> r = m[2] / m00;
  double ilamp = apply_insertion_loss ? amplitude_from_db(-p.insertion_loss_db) : 1.0;
  return {t * ilamp, r};
}

inline std::pair<ComplexSpectrum, ComplexSpectrum> dbr_response_tmm(
    const DbrParams& p, const FrequencyGrid& grid, bool apply_insertion_loss = true) {
  std::vector<std::complex<double>> t(grid.n_points), r(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    auto resp = dbr_response_tmm_at(p, grid.at(i), apply_insertion_loss);
    t[i] = resp.transmit;
    r[i] = resp.reflect;
  }
  return {ComplexSpectrum(grid, std::move(t)), ComplexSpectrum(grid, std::move(r))};
}

// Peak extinction (dB) at the effective band center.
inline double dbr_center_extinction_db(const DbrParams& p) {
  double f = wavelength_to_frequency(p.effective_center_wavelength_m());
  auto resp = dbr_response_tmm_at(p, f, /*apply_insertion_loss=*/false);
  double tp = std::norm(resp.transmit);
  return tp > 0.0 ? -10.0 * std::log10(tp) : -kDbFloor;
}

// Solves delta_n such that an N-period grating reaches the given center
// extinction. Anchor for all other period counts.
inline double calibrate_dbr_delta_n(DbrParams p, std::size_t anchor_periods,
                                    double target_extinction_db) {
  p.n_periods = anchor_periods;
  auto g = [&](double dn) {
    p.delta_n = dn;
    return dbr_center_extinction_db(p) - target_extinction_db;
  };
  return bisect_root(g, 1e-6, 0.1, 1e-12);
}

// ---------------------------------------------------------------------------
// Grating coupler

struct GratingCouplerParams {
  double center_wavelength_m = 1525e-9;
  double peak_insertion_loss_db = 5.0;
  double bandwidth_1db_m = 30e-9;

  void validate() const {
    if (peak_insertion_loss_db < 0.0) throw DomainError("negative insertion loss");
    if (!(bandwidth_1db_m > 0.0)) throw DomainError("coupler bandwidth must be > 0");
  }
};

// Gaussian in dB: a parabola of insertion loss vs wavelength, 1 dB down at
// the 1-dB bandwidth offset.
inline std::complex<double> grating_coupler_at(const GratingCouplerParams& p,
                                               double f_hz) {
  double lambda = kSpeedOfLight / f_hz;
  double d = (lambda - p.center_wavelength_m) / p.bandwidth_1db_m;
  double il_db = p.peak_insertion_loss_db + d * d;
  return amplitude_from_db(-il_db);
}

inline ComplexSpectrum grating_coupler(const GratingCouplerParams& p,
                                       const FrequencyGrid& grid) {
  p.validate();
  std::vector<std::complex<double>> v(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i)
    v[i] = grating_coupler_at(p, grid.at(i));
  return ComplexSpectrum(grid, std::move(v));
}

// ---------------------------------------------------------------------------
// Flat elements

inline ComplexSpectrum tap_through(double tap_fraction, const FrequencyGrid& grid) {
  if (!(tap_fraction >= 0.0 && tap_fraction < 1.0))
    throw DomainError("tap fraction must be in [0, 1)");
  return ComplexSpectrum::uniform(grid, std::sqrt(1.0 - tap_fraction));
}

inline ComplexSpectrum attenuator(double loss_db, const FrequencyGrid& grid) {
  if (loss_db < 0.0) throw DomainError("attenuator loss must be >= 0 dB");
  return ComplexSpectrum::uniform(grid, amplitude_from_db(-loss_db));
}

// ---------------------------------------------------------------------------
// Stray light

enum class StrayCombineMode { incoherent_power, coherent_amplitude };

struct StrayPathParams {
  double floor_db = -65.0;  // relative to the reference spectrum
  StrayCombineMode combine_mode = StrayCombineMode::incoherent_power;
  double coherent_phase = 0.0;
  bool enabled = true;

  void validate() const {
    if (enabled && !(floor_db < 0.0)) throw DomainError("stray floor must be < 0 dB");
  }
};

inline std::complex<double> apply_stray_path_at(std::complex<double> main,
                                                const StrayPathParams& stray,
                                                std::complex<double> reference) {
  if (!stray.enabled) return main;
  double s = linear_power_from_db(stray.floor_db);
  if (stray.combine_mode == StrayCombineMode::coherent_amplitude) {
    return main + std::sqrt(s) * std::polar(1.0, stray.coherent_phase) * reference;
  }
  double p = std::norm(main) + s * std::norm(reference);
  double mag = std::sqrt(p);
  double am = std::abs(main);
  return am > 0.0 ? main * (mag / am) : std::complex<double>(mag, 0.0);
}

inline ComplexSpectrum apply_stray_path(const ComplexSpectrum& main,
                                        const StrayPathParams& stray,
                                        const ComplexSpectrum& reference) {
  stray.validate();
  if (!(main.grid() == reference.grid()))
    throw ShapeError("stray path: grid mismatch");
  std::vector<std::complex<double>> v(main.size());
  for (std::size_t i = 0; i < main.size(); ++i)
    v[i] = apply_stray_path_at(main[i], stray, reference[i]);
  return ComplexSpectrum(main.grid(), std::move(v));
}

}  // namespace ppcs
