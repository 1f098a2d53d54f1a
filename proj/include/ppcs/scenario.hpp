#pragma once

// Scenario files: the line-oriented netlist format plus [pump], [grid],
// [heaters], [sfwm], [budget], [detectors] and [counting] sections.
// Presets emit this format; the CLI reads it back.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ppcs/circuit.hpp"
#include "ppcs/counting.hpp"
#include "ppcs/pairsource.hpp"

namespace ppcs {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Everything a run needs, in one file.
struct RunSetup {
  Scenario scenario;
  SfwmParams sfwm;
  LossBudget budget;
  DetectorParams detector_1;          // signal arm
  DetectorParams detector_2;          // idler arm
  CoincidenceConfig counting;
  EmittedSpectrumOptions emission;
  int demux_order = 2;

  RunSetup() { detector_2.efficiency = 0.05; }
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline bool split_kv(const std::string& tok, std::string& key, std::string& val) {
  auto eq = tok.find('=');
  if (eq == std::string::npos) return false;
  key = tok.substr(0, eq);
  val = tok.substr(eq + 1);
  return true;
}

inline double to_num(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + what + ": '" + s + "'");
  }
}

inline void split_port_ref(const std::string& s, std::string& comp, std::string& port) {
  auto dot = s.rfind('.');
  if (dot == std::string::npos)
    throw ConfigError("expected component.port, got '" + s + "'");
  comp = s.substr(0, dot);
  port = s.substr(dot + 1);
}

inline void apply_component_kv(Component& c, const std::string& key,
                               const std::string& val) {
  double v = (key == "regime") ? 0.0 : to_num(val, c.name + "." + key);
  if (key == "center_nm") c.coupler.center_wavelength_m = v * 1e-9;
  else if (key == "bw1db_nm") c.coupler.bandwidth_1db_m = v * 1e-9;
  else if (key == "radius_um") { c.ring.radius_m = v * 1e-6; }
  else if (key == "q") c.ring.loaded_q = v;
  else if (key == "ng") c.ring.group_index = v;
  else if (key == "anchor_nm") c.ring.anchor_wavelength_m = v * 1e-9;
  else if (key == "offset_ghz") c.ring.resonance_offset_hz = v * 1e9;
  else if (key == "drop_loss_db") c.ring.drop_insertion_loss_db = v;
  else if (key == "t1") { c.ring.explicit_t1 = v; }
  else if (key == "t2") { c.ring.explicit_t2 = v; }
  else if (key == "a") { c.ring.explicit_a = v; }
  else if (key == "regime") {
    if (val == "critical") c.ring.coupling_regime = CouplingRegime::critical;
    else if (val == "over") c.ring.coupling_regime = CouplingRegime::over_coupled;
    else if (val == "under") c.ring.coupling_regime = CouplingRegime::under_coupled;
    else if (val == "explicit") c.ring.coupling_regime = CouplingRegime::explicit_coeffs;
    else throw ConfigError("unknown coupling regime '" + val + "'");
  }
  else if (key == "period_nm") c.dbr.period_m = v * 1e-9;
  else if (key == "periods") c.dbr.n_periods = static_cast<std::size_t>(v);
  else if (key == "neff") c.dbr.n_eff = v;
  else if (key == "delta_n") c.dbr.delta_n = v;
  else if (key == "bend_gap_nm") c.dbr.bend_gap_m = v * 1e-9;
  else if (key == "center_offset_nm") c.dbr.center_offset_m = v * 1e-9;
  else if (key == "fraction") c.tap_fraction = v;
  else if (key == "loss_db") {
    if (c.kind == ComponentKind::grating_coupler) c.coupler.peak_insertion_loss_db = v;
    else if (c.kind == ComponentKind::dbr) c.dbr.insertion_loss_db = v;
    else c.loss_db = v;
  }
  else throw ConfigError("unknown key '" + key + "' for component " + c.name);
}

inline ComponentKind kind_from_string(const std::string& s) {
  if (s == "grating_coupler") return ComponentKind::grating_coupler;
  if (s == "ring_allpass") return ComponentKind::ring_all_pass;
  if (s == "ring_adddrop") return ComponentKind::ring_add_drop;
  if (s == "dbr") return ComponentKind::dbr;
  if (s == "tap") return ComponentKind::tap;
  if (s == "attenuator") return ComponentKind::attenuator;
  throw ConfigError("unknown component kind '" + s + "'");
}

}  // namespace detail

inline RunSetup parse_run_setup(const std::string& text) {
  using namespace detail;
  RunSetup rs;
  rs.scenario.netlist = Netlist{};
  std::string section;
  std::istringstream is(text);
  std::string raw;
  double grid_start_nm = 1500.0, grid_stop_nm = 1550.0;
  std::size_t grid_points = 20001;
  double heater_coeff = HeaterState{}.shift_coefficient_hz_per_w;
  double heater_r = HeaterState{}.resistance_ohm;
  std::vector<std::pair<std::string, double>> heater_currents;

  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    auto toks = split_ws(raw);
    if (toks.empty()) continue;
    const std::string& head = toks[0];
    if (head.size() >= 2 && head.front() == '[' && head.back() == ']') {
      section = head.substr(1, head.size() - 2);
      continue;
    }
    try {
      if (section.empty() || section == "netlist") {
        if (head == "component") {
          if (toks.size() < 3) throw ConfigError("component needs a name and kind");
          Component c;
          c.name = toks[1];
          c.kind = kind_from_string(toks[2]);
          for (std::size_t i = 3; i < toks.size(); ++i) {
            std::string k, v;
            if (!split_kv(toks[i], k, v))
              throw ConfigError("expected key=value, got '" + toks[i] + "'");
            apply_component_kv(c, k, v);
          }
          rs.scenario.netlist.components.push_back(c);
        } else if (head == "connect") {
          if (toks.size() != 3) throw ConfigError("connect needs two ports");
          Netlist::Connection cn;
          split_port_ref(toks[1], cn.from_component, cn.from_port);
          split_port_ref(toks[2], cn.to_component, cn.to_port);
          rs.scenario.netlist.connections.push_back(cn);
        } else if (head == "port") {
          if (toks.size() != 3) throw ConfigError("port needs a name and a target");
          PortRef ref;
          if (toks[2] == "@input") ref = {"@input", ""};
          else split_port_ref(toks[2], ref.component, ref.port);
          rs.scenario.netlist.external_outputs[toks[1]] = ref;
        } else if (head == "input") {
          if (toks.size() != 2) throw ConfigError("input needs a component");
          rs.scenario.netlist.input_component = toks[1];
        } else if (head == "stray") {
          Netlist::StrayInsertion si;
          for (std::size_t i = 1; i < toks.size(); ++i) {
            std::string k, v;
            if (!split_kv(toks[i], k, v))
              throw ConfigError("expected key=value in stray line");
            if (k == "after") si.after_component = v;
            else if (k == "floor_db") si.stray.floor_db = to_num(v, "stray.floor_db");
            else if (k == "enabled") si.stray.enabled = (v == "1" || v == "true");
            else if (k == "mode")
              si.stray.combine_mode = (v == "coherent")
                                          ? StrayCombineMode::coherent_amplitude
                                          : StrayCombineMode::incoherent_power;
            else throw ConfigError("unknown stray key '" + k + "'");
          }
          if (si.after_component.empty())
            throw ConfigError("stray line needs after=<component>");
          rs.scenario.netlist.strays.push_back(si);
        } else {
          throw ConfigError("unknown netlist directive '" + head + "'");
        }
        continue;
      }
      // section key = value
      std::string key = head, val;
      if (toks.size() >= 3 && toks[1] == "=") val = toks[2];
      else if (!split_kv(head, key, val))
        throw ConfigError("expected 'key = value' in [" + section + "]");
      const std::string ctx = section + "." + key;
      double v = (section == "heaters" || key == "regime") ? 0.0 : to_num(val, ctx);
      if (section == "pump") {
        if (key == "wavelength_nm") rs.scenario.pump_wavelength_m = v * 1e-9;
        else if (key == "power_mw") rs.scenario.pump_power_w = v * 1e-3;
        else throw ConfigError("unknown key " + ctx);
      } else if (section == "grid") {
        if (key == "start_nm") grid_start_nm = v;
        else if (key == "stop_nm") grid_stop_nm = v;
        else if (key == "points") grid_points = static_cast<std::size_t>(v);
        else throw ConfigError("unknown key " + ctx);
      } else if (section == "heaters") {
        if (key == "coefficient_hz_per_w") heater_coeff = to_num(val, ctx);
        else if (key == "resistance_ohm") heater_r = to_num(val, ctx);
        else heater_currents.emplace_back(key, to_num(val, ctx));
      } else if (section == "sfwm") {
        if (key == "rate_scale") rs.sfwm.rate_scale = v;
        else if (key == "p_sat_mw") rs.sfwm.p_sat_w = v * 1e-3;
        else if (key == "n_triplets") rs.sfwm.n_triplets = static_cast<int>(v);
        else if (key == "demux_order") rs.demux_order = static_cast<int>(v);
        else throw ConfigError("unknown key " + ctx);
      } else if (section == "budget") {
        if (key == "signal_path_db") rs.budget.signal_path_db = v;
        else if (key == "idler_path_db") rs.budget.idler_path_db = v;
        else throw ConfigError("unknown key " + ctx);
      } else if (section == "detectors") {
        if (key == "eff1") rs.detector_1.efficiency = v;
        else if (key == "eff2") rs.detector_2.efficiency = v;
        else if (key == "dark_hz") {
          rs.detector_1.dark_rate_hz = v;
          rs.detector_2.dark_rate_hz = v;
        } else if (key == "dark_hz_1") rs.detector_1.dark_rate_hz = v;
        else if (key == "dark_hz_2") rs.detector_2.dark_rate_hz = v;
        else if (key == "jitter_ps") {
          rs.detector_1.jitter_sigma_s = v * 1e-12;
          rs.detector_2.jitter_sigma_s = v * 1e-12;
        } else throw ConfigError("unknown key " + ctx);
      } else if (section == "counting") {
        if (key == "bin_ps") rs.counting.bin_width_s = v * 1e-12;
        else if (key == "window_ns") rs.counting.window_s = v * 1e-9;
        else if (key == "acquisition_s") rs.counting.acquisition_s = v;
        else if (key == "span_ns") rs.counting.histogram_span_s = v * 1e-9;
        else if (key == "seed") rs.counting.seed = static_cast<std::uint64_t>(v);
        else if (key == "tau_ps") rs.counting.pair_correlation_tau_s = v * 1e-12;
        else throw ConfigError("unknown key " + ctx);
      } else if (section == "emission") {
        if (key == "pump_linewidth_ghz") rs.emission.pump_linewidth_hz = v * 1e9;
        else if (key == "ase_w_per_hz") rs.emission.ase_background_w_per_hz = v;
        else throw ConfigError("unknown key " + ctx);
      } else {
        throw ConfigError("unknown section [" + section + "]");
      }
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  rs.scenario.grid = FrequencyGrid::from_wavelength_span(
      grid_start_nm * 1e-9, grid_stop_nm * 1e-9, grid_points);
  for (const auto& [name, ma] : heater_currents) {
    HeaterState h;
    h.current_a = ma * 1e-3;
    h.shift_coefficient_hz_per_w = heater_coeff;
    h.resistance_ohm = heater_r;
    rs.scenario.heater_settings[name] = h;
  }
  return rs;
}

// ---------------------------------------------------------------------------
// Emission

namespace detail {

inline std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline void emit_component(std::ostream& os, const Component& c) {
  os << "component " << c.name << " " << to_string(c.kind);
  switch (c.kind) {
    case ComponentKind::grating_coupler:
      os << " center_nm=" << fmt_num(c.coupler.center_wavelength_m * 1e9)
         << " loss_db=" << fmt_num(c.coupler.peak_insertion_loss_db)
         << " bw1db_nm=" << fmt_num(c.coupler.bandwidth_1db_m * 1e9);
      break;
    case ComponentKind::ring_all_pass:
    case ComponentKind::ring_add_drop: {
      const char* regime = "over";
      if (c.ring.coupling_regime == CouplingRegime::critical) regime = "critical";
      else if (c.ring.coupling_regime == CouplingRegime::under_coupled) regime = "under";
      else if (c.ring.coupling_regime == CouplingRegime::explicit_coeffs)
        regime = "explicit";
      os << " radius_um=" << fmt_num(c.ring.radius_m * 1e6)
         << " q=" << fmt_num(c.ring.loaded_q) << " ng=" << fmt_num(c.ring.group_index)
         << " regime=" << regime
         << " anchor_nm=" << fmt_num(c.ring.anchor_wavelength_m * 1e9)
         << " offset_ghz=" << fmt_num(c.ring.resonance_offset_hz * 1e-9);
      if (c.kind == ComponentKind::ring_add_drop)
        os << " drop_loss_db=" << fmt_num(c.ring.drop_insertion_loss_db);
      break;
    }
    case ComponentKind::dbr:
      os << " period_nm=" << fmt_num(c.dbr.period_m * 1e9)
         << " periods=" << c.dbr.n_periods << " neff=" << fmt_num(c.dbr.n_eff)
         << " delta_n=" << fmt_num(c.dbr.delta_n)
         << " bend_gap_nm=" << fmt_num(c.dbr.bend_gap_m * 1e9)
         << " loss_db=" << fmt_num(c.dbr.insertion_loss_db)
         << " center_offset_nm=" << fmt_num(c.dbr.center_offset_m * 1e9);
      break;
    case ComponentKind::tap:
      os << " fraction=" << fmt_num(c.tap_fraction);
      break;
    case ComponentKind::attenuator:
      os << " loss_db=" << fmt_num(c.loss_db);
      break;
  }
  os << "\n";
}

}  // namespace detail

inline std::string emit_run_setup(const RunSetup& rs) {
  std::ostringstream os;
  os << "# ppcs scenario\n";
  const Netlist& nl = rs.scenario.netlist;
  for (const auto& c : nl.components) detail::emit_component(os, c);
  for (const auto& cn : nl.connections)
    os << "connect " << cn.from_component << "." << cn.from_port << " "
       << cn.to_component << "." << cn.to_port << "\n";
  if (!nl.input_component.empty()) os << "input " << nl.input_component << "\n";
  for (const auto& [name, ref] : nl.external_outputs) {
    if (ref.component == "@input") os << "port " << name << " @input\n";
    else os << "port " << name << " " << ref.component << "." << ref.port << "\n";
  }
  for (const auto& si : nl.strays)
    os << "stray after=" << si.after_component
       << " floor_db=" << detail::fmt_num(si.stray.floor_db)
       << " enabled=" << (si.stray.enabled ? 1 : 0) << " mode="
       << (si.stray.combine_mode == StrayCombineMode::coherent_amplitude
               ? "coherent"
               : "incoherent")
       << "\n";
  os << "\n[pump]\n";
  os << "wavelength_nm = " << detail::fmt_num(rs.scenario.pump_wavelength_m * 1e9)
     << "\n";
  os << "power_mw = " << detail::fmt_num(rs.scenario.pump_power_w * 1e3) << "\n";
  os << "\n[grid]\n";
  os << "start_nm = "
     << detail::fmt_num(frequency_to_wavelength(rs.scenario.grid.stop_hz) * 1e9)
     << "\n";
  os << "stop_nm = "
     << detail::fmt_num(frequency_to_wavelength(rs.scenario.grid.start_hz) * 1e9)
     << "\n";
  os << "points = " << rs.scenario.grid.n_points << "\n";
  if (!rs.scenario.heater_settings.empty()) {
    os << "\n[heaters]\n";
    bool first = true;
    for (const auto& [name, h] : rs.scenario.heater_settings) {
      if (first) {
        os << "coefficient_hz_per_w = " << detail::fmt_num(h.shift_coefficient_hz_per_w)
           << "\n";
        os << "resistance_ohm = " << detail::fmt_num(h.resistance_ohm) << "\n";
        first = false;
      }
      os << name << " = " << detail::fmt_num(h.current_a * 1e3) << "\n";
    }
  }
  os << "\n[sfwm]\n";
  os << "rate_scale = " << detail::fmt_num(rs.sfwm.rate_scale) << "\n";
  os << "p_sat_mw = " << detail::fmt_num(rs.sfwm.p_sat_w * 1e3) << "\n";
  os << "n_triplets = " << rs.sfwm.n_triplets << "\n";
  os << "demux_order = " << rs.demux_order << "\n";
  os << "\n[budget]\n";
  os << "signal_path_db = " << detail::fmt_num(rs.budget.signal_path_db) << "\n";
  os << "idler_path_db = " << detail::fmt_num(rs.budget.idler_path_db) << "\n";
  os << "\n[detectors]\n";
  os << "eff1 = " << detail::fmt_num(rs.detector_1.efficiency) << "\n";
  os << "eff2 = " << detail::fmt_num(rs.detector_2.efficiency) << "\n";
  os << "dark_hz_1 = " << detail::fmt_num(rs.detector_1.dark_rate_hz) << "\n";
  os << "dark_hz_2 = " << detail::fmt_num(rs.detector_2.dark_rate_hz) << "\n";
  os << "jitter_ps = " << detail::fmt_num(rs.detector_1.jitter_sigma_s * 1e12) << "\n";
  os << "\n[counting]\n";
  os << "bin_ps = " << detail::fmt_num(rs.counting.bin_width_s * 1e12) << "\n";
  os << "window_ns = " << detail::fmt_num(rs.counting.window_s * 1e9) << "\n";
  os << "acquisition_s = " << detail::fmt_num(rs.counting.acquisition_s) << "\n";
  os << "span_ns = " << detail::fmt_num(rs.counting.histogram_span_s * 1e9) << "\n";
  os << "seed = " << rs.counting.seed << "\n";
  os << "tau_ps = " << detail::fmt_num(rs.counting.pair_correlation_tau_s * 1e12)
     << "\n";
  return os.str();
}

// Preset run setups, matching the two experiment layouts.
inline RunSetup preset_run_setup(ChipPreset kind) {
  RunSetup rs;
  PresetOptions opt;
  rs.scenario.netlist = chip_preset(kind, opt);
  rs.scenario.pump_wavelength_m = opt.pump_wavelength_m;
  rs.scenario.pump_power_w = 0.5e-3;
  return rs;
}

inline std::string find_through_port(const RunSetup& rs) {
  const std::string suffix = "common_through";
  for (const auto& name : rs.scenario.netlist.external_port_names())
    if (name.size() >= suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      return name;
  throw ConfigError("netlist has no common through port");
}

inline std::string find_drop_port(const RunSetup& rs, const std::string& component) {
  for (const auto& [name, ref] : rs.scenario.netlist.external_outputs)
    if (ref.component == component && ref.port == "drop") return name;
  return "";
}

inline const Component& generation_ring(const RunSetup& rs) {
  for (const auto& c : rs.scenario.netlist.components)
    if (c.kind == ComponentKind::ring_all_pass) return c;
  throw ConfigError("netlist has no generation ring");
}

// Solve every ring heater: the generation ring onto the pump, pump-rejection
// add-drops onto the pump, demultiplexing add-drops onto their own lines.
inline void tune_all_heaters(RunSetup& rs) {
  std::string through = find_through_port(rs);
  double pump_m = rs.scenario.pump_wavelength_m;
  for (const auto& c : rs.scenario.netlist.components) {
    if (!c.has_heater()) continue;
    double target = c.kind == ComponentKind::ring_all_pass
                        ? pump_m
                        : c.ring.anchor_wavelength_m;
    TuneObjective obj = TuneObjective::minimize_through;
    std::string observe = through;
    if (c.kind == ComponentKind::ring_add_drop &&
        std::abs(target - pump_m) > 0.05e-9) {
      std::string drop = find_drop_port(rs, c.name);
      if (!drop.empty()) {
        obj = TuneObjective::maximize_drop;
        observe = drop;
      }
    }
    rs.scenario.heater_settings[c.name] =
        auto_tune(rs.scenario, c.name, target, obj, observe);
  }
}

// ---------------------------------------------------------------------------
// Overrides ("--set key=value") and calibration parameter files.

inline void apply_override(RunSetup& rs, const std::string& key,
                           const std::string& val) {
  using detail::to_num;
  auto num = [&] { return to_num(val, key); };
  if (key == "pump.wavelength_nm") rs.scenario.pump_wavelength_m = num() * 1e-9;
  else if (key == "pump.power_mw") rs.scenario.pump_power_w = num() * 1e-3;
  else if (key == "sfwm.rate_scale") rs.sfwm.rate_scale = num();
  else if (key == "sfwm.p_sat_mw") rs.sfwm.p_sat_w = num() * 1e-3;
  else if (key == "sfwm.n_triplets") rs.sfwm.n_triplets = static_cast<int>(num());
  else if (key == "sfwm.demux_order") rs.demux_order = static_cast<int>(num());
  else if (key == "budget.signal_path_db") rs.budget.signal_path_db = num();
  else if (key == "budget.idler_path_db") rs.budget.idler_path_db = num();
  else if (key == "detectors.eff1") rs.detector_1.efficiency = num();
  else if (key == "detectors.eff2") rs.detector_2.efficiency = num();
  else if (key == "detectors.dark_hz") {
    rs.detector_1.dark_rate_hz = num();
    rs.detector_2.dark_rate_hz = num();
  } else if (key == "detectors.jitter_ps") {
    rs.detector_1.jitter_sigma_s = num() * 1e-12;
    rs.detector_2.jitter_sigma_s = num() * 1e-12;
  } else if (key == "counting.bin_ps") rs.counting.bin_width_s = num() * 1e-12;
  else if (key == "counting.window_ns") rs.counting.window_s = num() * 1e-9;
  else if (key == "counting.acquisition_s") rs.counting.acquisition_s = num();
  else if (key == "counting.seed")
    rs.counting.seed = static_cast<std::uint64_t>(num());
  else if (key == "dbr.delta_n") {
    for (auto& c : rs.scenario.netlist.components)
      if (c.kind == ComponentKind::dbr) c.dbr.delta_n = num();
  } else if (key == "stray.floor_db") {
    for (auto& si : rs.scenario.netlist.strays) si.stray.floor_db = num();
  } else if (key == "grid.points") {
    const auto& g = rs.scenario.grid;
    rs.scenario.grid =
        FrequencyGrid(g.start_hz, g.stop_hz, static_cast<std::size_t>(num()));
  } else {
    // component-level override: <component>.<field>
    auto dot = key.find('.');
    if (dot == std::string::npos) throw ConfigError("unknown override key " + key);
    std::string comp = key.substr(0, dot);
    std::string field = key.substr(dot + 1);
    bool applied = false;
    for (auto& c : rs.scenario.netlist.components) {
      if (c.name == comp) {
        detail::apply_component_kv(c, field, val);
        applied = true;
      }
    }
    if (!applied) throw ConfigError("unknown override key " + key);
  }
}

}  // namespace ppcs
