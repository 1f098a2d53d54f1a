#pragma once

// Calibration: solve model parameters from scalar anchors (DBR extinction at
// a reference period count, internal pair rate at a reference power, total
// loss budget, stray floor) and emit them as an override file.

#include <cmath>
#include <sstream>
#include <string>

#include "ppcs/components.hpp"
#include "ppcs/optim.hpp"
#include "ppcs/pairsource.hpp"
#include "ppcs/scenario.hpp"

namespace ppcs {

struct CalibrationTargets {
  double dbr_extinction_db = 22.5;
  std::size_t dbr_periods = 2000;
  double internal_rate_hz_at_ref = 5e6;
  double reference_power_w = 1e-3;
  double total_budget_db = 68.0;
  double path_split_db = 3.0;  // signal path loses this much more than idler
  double stray_floor_db = 65.0;
  double efficiency_1 = 0.10;
  double efficiency_2 = 0.05;
};

struct CalibrationResult {
  double dbr_delta_n = 0.0;
  double rate_scale = 0.0;
  double signal_path_db = 0.0;
  double idler_path_db = 0.0;
  double stray_floor_db = 0.0;
};

inline CalibrationTargets parse_calibration_targets(const std::string& text) {
  CalibrationTargets t;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    auto toks = detail::split_ws(raw);
    if (toks.empty()) continue;
    std::string tok = toks[0], key, val;
    if (toks.size() >= 3 && toks[1] == "=") {
      key = tok;
      val = toks[2];
    } else if (!detail::split_kv(tok, key, val)) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    double v = detail::to_num(val, key);
    if (key == "dbr_extinction_db") t.dbr_extinction_db = v;
    else if (key == "dbr_periods") t.dbr_periods = static_cast<std::size_t>(v);
    else if (key == "internal_rate_mhz") t.internal_rate_hz_at_ref = v * 1e6;
    else if (key == "reference_power_mw") t.reference_power_w = v * 1e-3;
    else if (key == "total_budget_db") t.total_budget_db = v;
    else if (key == "path_split_db") t.path_split_db = v;
    else if (key == "stray_floor_db") t.stray_floor_db = v;
    else if (key == "eff1") t.efficiency_1 = v;
    else if (key == "eff2") t.efficiency_2 = v;
    // solved keys from a previous run parse as no-ops, so calibration can be
    // rerun on its own output
    else if (key == "dbr.delta_n" || key == "sfwm.rate_scale" ||
             key == "budget.signal_path_db" || key == "budget.idler_path_db" ||
             key == "stray.floor_db") {}
    else throw ConfigError("line " + std::to_string(line_no) +
                           ": unknown calibration key '" + key + "'");
  }
  return t;
}

inline CalibrationResult run_calibration(const CalibrationTargets& t) {
  CalibrationResult r;
  DbrParams dbr;
  r.dbr_delta_n = calibrate_dbr_delta_n(dbr, t.dbr_periods, t.dbr_extinction_db);
  {
    dbr.delta_n = r.dbr_delta_n;
    dbr.n_periods = t.dbr_periods;
    double achieved = dbr_center_extinction_db(dbr);
    if (std::abs(achieved - t.dbr_extinction_db) > 0.1)
      throw CalibrationError("dbr extinction target unreachable: achieved " +
                             std::to_string(achieved) + " dB");
  }

  // rate_scale: bisect on the rate at the reference power
  SfwmParams s;
  RingParams ring;
  auto rate_err = [&](double scale) {
    s.rate_scale = scale;
    return internal_pair_rate(s, ring, t.reference_power_w) -
           t.internal_rate_hz_at_ref;
  };
  r.rate_scale = bisect_root(rate_err, 1.0, 1e12, 1e-6);
  if (std::abs(rate_err(r.rate_scale)) > 1e-3 * t.internal_rate_hz_at_ref)
    throw CalibrationError("rate_scale target unreachable");

  // budget: split the remaining loss after detector efficiencies, keeping the
  // configured signal/idler asymmetry
  double eta_db = -10.0 * std::log10(t.efficiency_1) +
                  -10.0 * std::log10(t.efficiency_2);
  double paths = t.total_budget_db - eta_db;
  if (paths <= 0.0)
    throw CalibrationError("budget target below detector efficiency losses");
  r.signal_path_db = (paths + t.path_split_db) / 2.0;
  r.idler_path_db = (paths - t.path_split_db) / 2.0;
  r.stray_floor_db = -std::abs(t.stray_floor_db);
  return r;
}

inline std::string emit_calibration(const CalibrationTargets& t,
                                    const CalibrationResult& r) {
  std::ostringstream os;
  os << "# ppcs calibration\n";
  os << "# targets\n";
  os << "dbr_extinction_db = " << detail::fmt_num(t.dbr_extinction_db) << "\n";
  os << "dbr_periods = " << t.dbr_periods << "\n";
  os << "internal_rate_mhz = " << detail::fmt_num(t.internal_rate_hz_at_ref * 1e-6)
     << "\n";
  os << "reference_power_mw = " << detail::fmt_num(t.reference_power_w * 1e3) << "\n";
  os << "total_budget_db = " << detail::fmt_num(t.total_budget_db) << "\n";
  os << "path_split_db = " << detail::fmt_num(t.path_split_db) << "\n";
  os << "stray_floor_db = " << detail::fmt_num(t.stray_floor_db) << "\n";
  os << "eff1 = " << detail::fmt_num(t.efficiency_1) << "\n";
  os << "eff2 = " << detail::fmt_num(t.efficiency_2) << "\n";
  os << "# solved parameters (override keys)\n";
  os << "dbr.delta_n = " << detail::fmt_num(r.dbr_delta_n) << "\n";
  os << "sfwm.rate_scale = " << detail::fmt_num(r.rate_scale) << "\n";
  os << "budget.signal_path_db = " << detail::fmt_num(r.signal_path_db) << "\n";
  os << "budget.idler_path_db = " << detail::fmt_num(r.idler_path_db) << "\n";
  os << "stray.floor_db = " << detail::fmt_num(r.stray_floor_db) << "\n";
  return os.str();
}

// Apply a calibration parameter file's override keys to a run setup.
inline void apply_calibration_file(RunSetup& rs, const std::string& text) {
  std::istringstream is(text);
  std::string raw;
  while (std::getline(is, raw)) {
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    auto toks = detail::split_ws(raw);
    if (toks.empty()) continue;
    std::string tok = toks[0], key, val;
    if (toks.size() >= 3 && toks[1] == "=") {
      key = tok;
      val = toks[2];
    } else if (!detail::split_kv(tok, key, val)) {
      continue;
    }
    if (key.find('.') == std::string::npos) continue;  // target line, not override
    apply_override(rs, key, val);
  }
}

}  // namespace ppcs
