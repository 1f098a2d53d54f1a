#pragma once

// Spontaneous four-wave mixing: resonance-triplet selection, internal pair
// generation rate with two-photon-absorption saturation, emitted line shapes
// and propagation of pair flux and residual pump to output ports.

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "ppcs/circuit.hpp"
#include "ppcs/components.hpp"
#include "ppcs/spectral.hpp"

namespace ppcs {

class AlignmentError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ResonanceTriplet {
  int m = 1;
  double f_pump_hz = 0.0;
  double f_signal_hz = 0.0;
  double f_idler_hz = 0.0;
};

struct SfwmParams {
  // pairs/s per W^2, at the reference ring geometry below.
  double rate_scale = 5e6;
  double reference_q = 4e4;
  double reference_radius_m = 15e-6;
  double reference_power_w = 1e-3;  // rate_scale is the rate at this power
  double p_sat_w = 1e-3;
  int n_triplets = 5;

  void validate() const {
    if (!(rate_scale > 0.0)) throw DomainError("rate_scale must be positive");
    if (!(p_sat_w > 0.0)) throw DomainError("p_sat must be positive");
  }
};

// Two-photon-absorption saturation: effective pump P / sqrt(1 + (P/P_sat)^2).
// Quadratic pair rate at small P, saturation onset near P_sat.
inline double effective_pump_power(double p_w, double p_sat_w) {
  double r = p_w / p_sat_w;
  return p_w / std::sqrt(1.0 + r * r);
}

// Internal generation rate inside the ring: Q^3/R^2 scaling, quadratic in the
// effective pump power.
inline double internal_pair_rate(const SfwmParams& s, const RingParams& ring,
                                 double p_on_chip_w) {
  s.validate();
  if (p_on_chip_w < 0.0) throw DomainError("pump power must be >= 0");
  double q_ratio = ring.loaded_q / s.reference_q;
  double r_ratio = ring.radius_m / s.reference_radius_m;
  double p_eff = effective_pump_power(p_on_chip_w, s.p_sat_w);
  double p_ref = effective_pump_power(s.reference_power_w, s.p_sat_w);
  return s.rate_scale * (q_ratio * q_ratio * q_ratio) / (r_ratio * r_ratio) *
         (p_eff / p_ref) * (p_eff / p_ref);
}

struct PairFlux {
  ResonanceTriplet triplet;
  double internal_rate_hz = 0.0;
  double linewidth_hz = 0.0;  // loaded linewidth of the generation ring
};

// Pump must already sit on a ring resonance (within a quarter linewidth);
// signal/idler lines are then exact mirror pairs about the pump frequency.
inline std::vector<ResonanceTriplet> enumerate_triplets(const RingParams& ring,
                                                        const HeaterState& heater,
                                                        double pump_wavelength_m,
                                                        int n) {
  double f_p = wavelength_to_frequency(pump_wavelength_m);
  double fsr = ring.fsr_hz();
  double f_res = ring.resonance_hz(heater);
  double detune = std::remainder(f_p - f_res, fsr);
  double fwhm = f_p / ring.loaded_q;
  if (std::abs(detune) > fwhm / 4.0)
    throw AlignmentError(
        "pump is off the generation-ring resonance comb; run auto_tune on the "
        "generation ring first");
  std::vector<ResonanceTriplet> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int m = 1; m <= n; ++m) {
    double d = static_cast<double>(m) * fsr;
    out.push_back({m, f_p, f_p + d, f_p - d});
  }
  return out;
}

inline std::vector<PairFlux> pair_fluxes(const SfwmParams& s, const RingParams& ring,
                                         const HeaterState& heater,
                                         double pump_wavelength_m, double p_on_chip_w) {
  auto triplets = enumerate_triplets(ring, heater, pump_wavelength_m, s.n_triplets);
  double rate = internal_pair_rate(s, ring, p_on_chip_w);
  double fwhm = wavelength_to_frequency(pump_wavelength_m) / ring.loaded_q;
  std::vector<PairFlux> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) out.push_back({t, rate, fwhm});
  return out;
}

struct LineAtPort {
  int m = 0;
  bool is_signal = true;
  double frequency_hz = 0.0;
  double photon_rate_hz = 0.0;  // after path transmission
  double power_w = 0.0;
};

struct PortFlux {
  std::string port;
  std::vector<LineAtPort> lines;
  double residual_pump_w = 0.0;
  double residual_pump_photon_rate_hz = 0.0;
};

// Generated light starts on the bus after the generation ring: its path skips
// everything up to and including the generation ring.
inline PortFlux port_fluxes_one(const Scenario& sc, const std::vector<PairFlux>& fluxes,
                                const std::string& port) {
  auto chain = resolve_path(sc.netlist, port);
  // index of the first step after the generation ring on this path (photons
  // are born inside it); input coupler losses do not apply to them.
  std::size_t start = 0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (sc.netlist.component(chain[i].component).kind == ComponentKind::ring_all_pass) {
      start = i + 1;
      break;
    }
  }
  auto transmission_from = [&](std::size_t first, double f, bool with_stray) {
    std::complex<double> acc = 1.0;
    std::complex<double> env = 1.0;
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const Component& c = sc.netlist.component(chain[i].component);
      std::complex<double> r = c.response_at(chain[i].output_port, f,
                                             sc.heater_for(c.name));
      std::complex<double> e = c.envelope_at(chain[i].output_port, f);
      env *= e;
      if (i >= first) acc *= r;
      if (with_stray) {
        for (const auto& si : sc.netlist.strays)
          if (si.after_component == c.name) acc = apply_stray_path_at(acc, si.stray, env);
      }
    }
    return std::norm(acc);
  };

  PortFlux out;
  out.port = port;
  for (const auto& pf : fluxes) {
    for (bool is_signal : {true, false}) {
      double f = is_signal ? pf.triplet.f_signal_hz : pf.triplet.f_idler_hz;
      double t = transmission_from(start, f, /*with_stray=*/false);
      LineAtPort line;
      line.m = pf.triplet.m;
      line.is_signal = is_signal;
      line.frequency_hz = f;
      line.photon_rate_hz = pf.internal_rate_hz * t;
      line.power_w = line.photon_rate_hz * kPlanck * f;
      out.lines.push_back(line);
    }
  }
  double f_p = sc.pump_frequency_hz();
  double t_pump = transmission_from(0, f_p, /*with_stray=*/true);
  out.residual_pump_w = sc.pump_power_w * t_pump;
  out.residual_pump_photon_rate_hz = out.residual_pump_w / (kPlanck * f_p);
  return out;
}

inline std::map<std::string, PortFlux> port_fluxes(const Scenario& sc,
                                                   const std::vector<PairFlux>& fluxes) {
  std::map<std::string, PortFlux> out;
  for (const auto& port : sc.netlist.external_port_names())
    out[port] = port_fluxes_one(sc, fluxes, port);
  return out;
}

// Lorentzian line density (per Hz), unit area.
inline double lorentzian_density(double f, double f0, double fwhm) {
  double hw = fwhm / 2.0;
  double d = f - f0;
  return (hw / std::numbers::pi) / (d * d + hw * hw);
}

struct EmittedSpectrumOptions {
  double pump_linewidth_hz = 1e9;
  double ase_background_w_per_hz = 0.0;
};

// Power spectral density (W/Hz) at a port, as dB re 1 W/Hz. Each line
// integrates to its photon rate times the photon energy.
inline PowerSpectrumDb emitted_spectrum(const PortFlux& flux, const FrequencyGrid& grid,
                                        double line_fwhm_hz, double pump_frequency_hz,
                                        const EmittedSpectrumOptions& opt = {}) {
  std::vector<double> psd(grid.n_points, opt.ase_background_w_per_hz);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    double f = grid.at(i);
    for (const auto& line : flux.lines)
      psd[i] += line.power_w * lorentzian_density(f, line.frequency_hz, line_fwhm_hz);
    if (flux.residual_pump_w > 0.0)
      psd[i] += flux.residual_pump_w *
                lorentzian_density(f, pump_frequency_hz, opt.pump_linewidth_hz);
  }
  PowerSpectrumDb out;
  out.grid = grid;
  out.values_db.resize(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i)
    out.values_db[i] = db_from_linear_power(psd[i]);
  return out;
}

}  // namespace ppcs
