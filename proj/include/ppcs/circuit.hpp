#pragma once

// Netlist composition of components into chips and links, port-resolved
// spectrum evaluation, heater auto-tuning and per-stage extinction reports.

#include <algorithm>
#include <cstdlib>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ppcs/components.hpp"
#include "ppcs/optim.hpp"
#include "ppcs/spectral.hpp"

namespace ppcs {

class NetlistError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class TuningError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ComponentKind {
  grating_coupler,
  ring_all_pass,
  ring_add_drop,
  dbr,
  tap,
  attenuator,
};

inline const char* to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::grating_coupler: return "grating_coupler";
    case ComponentKind::ring_all_pass: return "ring_allpass";
    case ComponentKind::ring_add_drop: return "ring_adddrop";
    case ComponentKind::dbr: return "dbr";
    case ComponentKind::tap: return "tap";
    case ComponentKind::attenuator: return "attenuator";
  }
  return "?";
}

struct Component {
  std::string name;
  ComponentKind kind = ComponentKind::attenuator;
  RingParams ring;
  DbrParams dbr;
  GratingCouplerParams coupler;
  double tap_fraction = 0.2;
  double loss_db = 0.0;

  bool has_heater() const {
    return kind == ComponentKind::ring_all_pass || kind == ComponentKind::ring_add_drop;
  }

  std::vector<std::string> output_ports() const {
    switch (kind) {
      case ComponentKind::ring_add_drop: return {"through", "drop"};
      case ComponentKind::tap: return {"out", "monitor"};
      default: return {"out"};
    }
  }

  // Port-to-port field response at a single frequency.
  std::complex<double> response_at(const std::string& port, double f_hz,
                                   const HeaterState& heater) const {
    switch (kind) {
      case ComponentKind::grating_coupler:
        return grating_coupler_at(coupler, f_hz);
      case ComponentKind::ring_all_pass:
        return ring_all_pass_at(ring, solve_coupling_all_pass(ring), heater, f_hz);
      case ComponentKind::ring_add_drop: {
        auto r = ring_add_drop_at(ring, solve_coupling_add_drop(ring), heater, f_hz);
        return port == "drop" ? r.drop : r.through;
      }
      case ComponentKind::dbr: {
        auto r = dbr_response_tmm_at(dbr, f_hz);
        return port == "reflect" ? r.reflect : r.transmit;
      }
      case ComponentKind::tap:
        return port == "monitor" ? std::sqrt(tap_fraction)
                                 : std::sqrt(1.0 - tap_fraction);
      case ComponentKind::attenuator:
        return amplitude_from_db(-loss_db);
    }
    return 1.0;
  }

  // Response with resonant/rejection features removed: the smooth insertion
  // envelope against which dips and the stray floor are referenced.
  std::complex<double> envelope_at(const std::string& port, double f_hz) const {
    switch (kind) {
      case ComponentKind::ring_all_pass:
        return 1.0;
      case ComponentKind::ring_add_drop:
        return port == "drop" ? amplitude_from_db(-ring.drop_insertion_loss_db) : 1.0;
      case ComponentKind::dbr:
        return amplitude_from_db(-dbr.insertion_loss_db);
      default:
        return response_at(port, f_hz, HeaterState{});
    }
  }
};

struct PortRef {
  std::string component;  // "@input" refers to the external input
  std::string port;
};

struct Netlist {
  std::vector<Component> components;
  struct Connection {
    std::string from_component, from_port;
    std::string to_component, to_port;
  };
  std::vector<Connection> connections;
  std::map<std::string, PortRef> external_outputs;
  std::string input_component;  // component whose "in" is driven externally

  struct StrayInsertion {
    std::string after_component;
    StrayPathParams stray;
  };
  std::vector<StrayInsertion> strays;

  const Component& component(const std::string& name) const {
    for (const auto& c : components)
      if (c.name == name) return c;
    throw NetlistError("unknown component: " + name);
  }

  Component& component(const std::string& name) {
    for (auto& c : components)
      if (c.name == name) return c;
    throw NetlistError("unknown component: " + name);
  }

  bool has_component(const std::string& name) const {
    for (const auto& c : components)
      if (c.name == name) return true;
    return false;
  }

  std::vector<std::string> external_port_names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : external_outputs) out.push_back(k);
    return out;
  }
};

struct Scenario {
  Netlist netlist;
  double pump_wavelength_m = 1524.345e-9;
  double pump_power_w = 0.5e-3;
  std::map<std::string, HeaterState> heater_settings;
  FrequencyGrid grid = FrequencyGrid::from_wavelength_span(1500e-9, 1550e-9, 20001);

  double pump_frequency_hz() const { return wavelength_to_frequency(pump_wavelength_m); }

  HeaterState heater_for(const std::string& component) const {
    auto it = heater_settings.find(component);
    return it != heater_settings.end() ? it->second : HeaterState{};
  }
};

struct PathStep {
  std::string component;
  std::string output_port;
};

// Ordered input->port chain. Throws on unknown or disconnected ports.
inline std::vector<PathStep> resolve_path(const Netlist& nl,
                                          const std::string& external_port) {
  auto it = nl.external_outputs.find(external_port);
  if (it == nl.external_outputs.end())
    throw NetlistError("unknown external port: " + external_port);
  PortRef cur = it->second;
  if (cur.component == "@input") return {};  // input wired straight to output
  std::vector<PathStep> chain;
  std::size_t guard = nl.components.size() + 2;
  while (true) {
    chain.push_back({cur.component, cur.port});
    if (cur.component == nl.input_component) break;
    bool found = false;
    for (const auto& c : nl.connections) {
      if (c.to_component == cur.component) {
        cur = {c.from_component, c.from_port};
        found = true;
        break;
      }
    }
    if (!found)
      throw NetlistError("port " + external_port + " not reachable from input");
    if (chain.size() > guard) throw NetlistError("cycle in netlist");
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

// Single-frequency path evaluation (exact frequency, no grid snapping).
inline std::complex<double> evaluate_port_at(const Scenario& sc,
                                             const std::string& external_port,
                                             double f_hz,
                                             bool with_stray = true) {
  auto chain = resolve_path(sc.netlist, external_port);
  std::complex<double> acc = 1.0;
  std::complex<double> env = 1.0;
  for (const auto& step : chain) {
    const Component& c = sc.netlist.component(step.component);
    acc *= c.response_at(step.output_port, f_hz, sc.heater_for(c.name));
    env *= c.envelope_at(step.output_port, f_hz);
    if (with_stray) {
      for (const auto& si : sc.netlist.strays) {
        if (si.after_component == c.name)
          acc = apply_stray_path_at(acc, si.stray, env);
      }
    }
  }
  return acc;
}

namespace detail {

inline unsigned worker_count() {
  if (const char* env = std::getenv("PPCS_THREADS")) {
    long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

// Deterministic parallel map over grid indices: disjoint chunks, identical
// per-point arithmetic regardless of the worker count.
template <typename F>
inline void parallel_over_grid(std::size_t n, F&& fn) {
  unsigned workers = worker_count();
  if (workers <= 1 || n < 256) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

struct PathResponse {
  std::string port;
  ComplexSpectrum spectrum;

  std::complex<double> at(double f_hz) const { return spectrum.at_frequency(f_hz); }
};

inline PathResponse evaluate_port(const Scenario& sc, const std::string& external_port,
                                  bool with_stray = true) {
  auto chain = resolve_path(sc.netlist, external_port);  // validates early
  (void)chain;
  const FrequencyGrid& g = sc.grid;
  std::vector<std::complex<double>> v(g.n_points);
  detail::parallel_over_grid(g.n_points, [&](std::size_t i) {
    v[i] = evaluate_port_at(sc, external_port, g.at(i), with_stray);
  });
  return {external_port, ComplexSpectrum(g, std::move(v))};
}

// ---------------------------------------------------------------------------
// Presets

enum class ChipPreset { chip_a, chip_b, two_chip_link };

struct PresetOptions {
  double pump_wavelength_m = 1524.345e-9;
  double dbr_delta_n = 0.00393858;   // anchored: N=2000 -> 22.5 dB
  double stray_floor_db = -65.0;
  double fiber_loss_db = 5.0;
  // Untuned ring combs sit one heater stroke blue of the pump so every
  // resonance is reachable by red shift.
  double ring_park_offset_m = -1.0e-9;
  // Demultiplexing filters (chip B role): narrower and with a wider FSR so
  // second-order signal/idler lines land half an FSR from the opposite comb.
  bool demux_filters = false;
  // Which resonance-triplet order the demux filters serve.
  int demux_order = 2;
};

namespace detail {

inline Netlist build_chip(const PresetOptions& opt, const std::string& prefix) {
  Netlist nl;
  double park_hz = -wavelength_to_frequency(opt.pump_wavelength_m) *
                   opt.ring_park_offset_m / opt.pump_wavelength_m;

  Component gc_in;
  gc_in.name = prefix + "gc_in";
  gc_in.kind = ComponentKind::grating_coupler;
  gc_in.coupler.center_wavelength_m = 1525e-9;

  Component gen;
  gen.name = prefix + "gen_ring";
  gen.kind = ComponentKind::ring_all_pass;
  gen.ring.radius_m = 15e-6;
  gen.ring.loaded_q = 4e4;
  gen.ring.coupling_regime = CouplingRegime::over_coupled;
  gen.ring.anchor_wavelength_m = opt.pump_wavelength_m;
  gen.ring.resonance_offset_hz = park_hz;

  Component tap;
  tap.name = prefix + "tap";
  tap.kind = ComponentKind::tap;
  tap.tap_fraction = 0.2;

  Component dbr;
  dbr.name = prefix + "dbr";
  dbr.kind = ComponentKind::dbr;
  dbr.dbr.delta_n = opt.dbr_delta_n;

  auto make_add_drop = [&](const std::string& name, double anchor_m) {
    Component ad;
    ad.name = name;
    ad.kind = ComponentKind::ring_add_drop;
    ad.ring.coupling_regime = CouplingRegime::over_coupled;
    ad.ring.anchor_wavelength_m = anchor_m;
    ad.ring.resonance_offset_hz =
        -wavelength_to_frequency(anchor_m) * opt.ring_park_offset_m / anchor_m;
    if (opt.demux_filters) {
      ad.ring.radius_m = 15e-6 / 2.667;
      ad.ring.loaded_q = 6e3;
    } else {
      ad.ring.radius_m = 15e-6 / 2.5;
      ad.ring.loaded_q = 4e3;
    }
    return ad;
  };
  // Demux filters park one heater stroke blue of the lines they will route;
  // pump-rejection filters park blue of the pump.
  double f_p = wavelength_to_frequency(opt.pump_wavelength_m);
  double line_step = static_cast<double>(opt.demux_order) * gen.ring.fsr_hz();
  double anchor1 = opt.demux_filters ? kSpeedOfLight / (f_p + line_step)
                                     : opt.pump_wavelength_m;
  double anchor2 = opt.demux_filters ? kSpeedOfLight / (f_p - line_step)
                                     : opt.pump_wavelength_m;
  Component ad1 = make_add_drop(prefix + "ad1", anchor1);
  Component ad2 = make_add_drop(prefix + "ad2", anchor2);

  Component gc_out;
  gc_out.name = prefix + "gc_out";
  gc_out.kind = ComponentKind::grating_coupler;
  gc_out.coupler.center_wavelength_m = 1525e-9;

  nl.components = {gc_in, gen, tap, dbr, ad1, ad2, gc_out};
  auto link = [&](const std::string& a, const std::string& ap, const std::string& b) {
    nl.connections.push_back({a, ap, b, "in"});
  };
  link(gc_in.name, "out", gen.name);
  link(gen.name, "out", tap.name);
  link(tap.name, "out", dbr.name);
  link(dbr.name, "out", ad1.name);
  link(ad1.name, "through", ad2.name);
  link(ad2.name, "through", gc_out.name);
  nl.input_component = gc_in.name;
  nl.external_outputs[prefix + "common_through"] = {gc_out.name, "out"};
  nl.external_outputs[prefix + "drop_1"] = {ad1.name, "drop"};
  nl.external_outputs[prefix + "drop_2"] = {ad2.name, "drop"};
  nl.external_outputs[prefix + "monitor"] = {tap.name, "monitor"};
  StrayPathParams stray;
  stray.floor_db = opt.stray_floor_db;
  nl.strays.push_back({gc_out.name, stray});
  return nl;
}

}  // namespace detail

inline Netlist chip_preset(ChipPreset kind, const PresetOptions& opt = {}) {
  switch (kind) {
    case ChipPreset::chip_a:
      return detail::build_chip(opt, "");
    case ChipPreset::chip_b: {
      PresetOptions o = opt;
      o.demux_filters = true;
      return detail::build_chip(o, "");
    }
    case ChipPreset::two_chip_link: {
      Netlist a = detail::build_chip(opt, "a_");
      PresetOptions ob = opt;
      ob.demux_filters = true;
      Netlist b = detail::build_chip(ob, "b_");
      Netlist out;
      out.components = a.components;
      Component fiber;
      fiber.name = "fiber";
      fiber.kind = ComponentKind::attenuator;
      fiber.loss_db = opt.fiber_loss_db;
      out.components.push_back(fiber);
      out.components.insert(out.components.end(), b.components.begin(),
                            b.components.end());
      out.connections = a.connections;
      out.connections.push_back({"a_gc_out", "out", "fiber", "in"});
      out.connections.push_back({"fiber", "out", "b_gc_in", "in"});
      out.connections.insert(out.connections.end(), b.connections.begin(),
                             b.connections.end());
      out.input_component = a.input_component;
      // exposed ports: chip B's
      for (const auto& [name, ref] : b.external_outputs) out.external_outputs[name] = ref;
      out.strays = a.strays;
      out.strays.insert(out.strays.end(), b.strays.begin(), b.strays.end());
      return out;
    }
  }
  throw NetlistError("unknown preset");
}

// ---------------------------------------------------------------------------
// Auto-tuning

enum class TuneObjective { minimize_through, maximize_drop };

inline constexpr double kHeaterCurrentMaxA = 0.030;

inline HeaterState auto_tune(const Scenario& sc, const std::string& component,
                             double target_wavelength_m, TuneObjective objective,
                             const std::string& observe_port) {
  const Component& comp = sc.netlist.component(component);
  if (!comp.has_heater()) throw TuningError(component + " has no heater");
  double f_target = wavelength_to_frequency(target_wavelength_m);
  HeaterState base = sc.heater_for(component);

  // Bracket one FSR of red shift so at most one resonance crosses the target.
  double fsr = comp.ring.fsr_hz();
  double i_fsr = std::sqrt(fsr / (base.shift_coefficient_hz_per_w * base.resistance_ohm));
  double i_hi = std::min(kHeaterCurrentMaxA, i_fsr);

  Scenario work = sc;
  auto objective_value = [&](double current) {
    HeaterState h = base;
    h.current_a = current;
    work.heater_settings[component] = h;
    double p = std::norm(evaluate_port_at(work, observe_port, f_target,
                                          /*with_stray=*/false));
    return objective == TuneObjective::minimize_through ? p : -p;
  };

  double initial = objective_value(base.current_a);
  auto res = golden_section_minimize(objective_value, 0.0, i_hi, i_hi * 1e-9);

  // The solved setting must reach at least half (in dB) of the depth the
  // component itself can provide; otherwise no resonance crossed the target.
  HeaterState solved = base;
  solved.current_a = res.x;
  double own_min;
  {
    double f_res;  // component response exactly on resonance
    RingParams rp = comp.ring;
    HeaterState h0;
    f_res = rp.resonance_hz(h0);
    if (comp.kind == ComponentKind::ring_all_pass) {
      own_min = std::norm(
          ring_all_pass_at(rp, solve_coupling_all_pass(rp), h0, f_res));
    } else {
      own_min = std::norm(
          ring_add_drop_at(rp, solve_coupling_add_drop(rp), h0, f_res).through);
    }
  }
  if (objective == TuneObjective::minimize_through) {
    // normalize by the path's insertion envelope so fixed losses do not mask
    // an unreachable resonance
    double env = 1.0;
    for (const auto& step : resolve_path(sc.netlist, observe_port)) {
      const Component& pc = sc.netlist.component(step.component);
      env *= std::norm(pc.envelope_at(step.output_port, f_target));
    }
    double best = std::min(res.value, initial) / std::max(env, 1e-300);
    double required = std::pow(own_min, 0.5);  // half the dip depth in dB
    if (best > required)
      throw TuningError("no resonance of " + component +
                        " reachable at target within current limit");
    if (initial <= res.value) {
      solved.current_a = base.current_a;  // already at (or past) optimum
    }
  } else {
    if (-res.value <= -initial) solved.current_a = base.current_a;
  }
  return solved;
}

// ---------------------------------------------------------------------------
// Extinction report

struct ExtinctionReport {
  // stage name -> pump-wavelength attenuation in dB, relative to that
  // component's insertion envelope
  std::vector<std::pair<std::string, double>> stages;
  double cumulative_db = 0.0;             // ideal path, sum of stages
  double cumulative_measured_db = 0.0;    // capped by the stray floor
  std::optional<double> stray_cap_db;     // -floor_db when a stray path is enabled
};

inline ExtinctionReport extinction_report(const Scenario& sc,
                                          const std::string& port = "") {
  std::string p = port;
  if (p.empty()) {
    // first external port ending in "common_through"
    for (const auto& name : sc.netlist.external_port_names())
      if (name.size() >= 14 &&
          name.compare(name.size() - 14, 14, "common_through") == 0) {
        p = name;
        break;
      }
    if (p.empty()) throw NetlistError("no through port to report on");
  }
  double f = sc.pump_frequency_hz();
  ExtinctionReport rep;
  double cum = 0.0;
  for (const auto& step : resolve_path(sc.netlist, p)) {
    const Component& c = sc.netlist.component(step.component);
    if (c.kind != ComponentKind::ring_all_pass &&
        c.kind != ComponentKind::ring_add_drop && c.kind != ComponentKind::dbr)
      continue;
    double resp = std::norm(c.response_at(step.output_port, f, sc.heater_for(c.name)));
    double env = std::norm(c.envelope_at(step.output_port, f));
    double stage = -10.0 * std::log10(std::max(resp / env, 1e-30));
    rep.stages.emplace_back(c.name, stage);
    cum += stage;
  }
  rep.cumulative_db = cum;
  rep.cumulative_measured_db = cum;
  for (const auto& si : sc.netlist.strays) {
    if (si.stray.enabled) {
      double cap = -si.stray.floor_db;
      rep.stray_cap_db = cap;
      rep.cumulative_measured_db = std::min(rep.cumulative_measured_db, cap);
      for (auto& [name, stage] : rep.stages) stage = std::min(stage, cap);
      break;
    }
  }
  return rep;
}

}  // namespace ppcs
