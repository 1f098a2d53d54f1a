// ppcs command-line front end: scenario loading, spectrum and power sweeps,
// coincidence histograms, tuning, calibration and preset emission.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ppcs/calib.hpp"
#include "ppcs/circuit.hpp"
#include "ppcs/counting.hpp"
#include "ppcs/io.hpp"
#include "ppcs/pairsource.hpp"
#include "ppcs/scenario.hpp"

namespace fs = std::filesystem;
using namespace ppcs;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPhysics = 3;
constexpr int kExitOverflow = 4;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct CommonOpts {
  std::string scenario_path;
  std::string params_path;
  std::vector<std::string> sets;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

RunSetup load_setup(const CommonOpts& o) {
  if (o.scenario_path.empty()) throw ConfigError("--scenario is required");
  RunSetup rs = parse_run_setup(read_file(o.scenario_path));
  if (!o.params_path.empty()) apply_calibration_file(rs, read_file(o.params_path));
  for (const auto& s : o.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_override(rs, s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed_given) rs.counting.seed = o.seed;
  return rs;
}

OutputMetadata make_metadata(const CommonOpts& o, const RunSetup& rs,
                             const std::string& command, bool with_seed) {
  OutputMetadata meta;
  meta.scenario_hash = fnv1a_hash(emit_run_setup(rs));
  meta.has_seed = with_seed;
  meta.seed = rs.counting.seed;
  meta.config.emplace_back("command", command);
  meta.config.emplace_back("scenario", o.scenario_path);
  for (const auto& s : o.sets) meta.config.emplace_back("override", s);
  meta.config.emplace_back("pump_wavelength_nm",
                           detail::fmt_num(rs.scenario.pump_wavelength_m * 1e9));
  meta.config.emplace_back("pump_power_mw",
                           detail::fmt_num(rs.scenario.pump_power_w * 1e3));
  meta.config.emplace_back("budget_db",
                           detail::fmt_num(rs.budget.signal_path_db) + "/" +
                               detail::fmt_num(rs.budget.idler_path_db));
  return meta;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir);
}

double port_power_db_at(const RunSetup& rs, const std::string& port, double f_hz,
                        bool with_stray) {
  return db_from_linear_power(
      std::norm(evaluate_port_at(rs.scenario, port, f_hz, with_stray)));
}

// ---------------------------------------------------------------------------
// Commands

int cmd_spectrum(const CommonOpts& o, std::vector<std::string> ports) {
  RunSetup rs = load_setup(o);
  ensure_out_dir(o.out_dir);
  auto valid = rs.scenario.netlist.external_port_names();
  if (ports.empty()) ports = valid;
  for (const auto& p : ports) {
    if (std::find(valid.begin(), valid.end(), p) == valid.end()) {
      std::ostringstream os;
      os << "unknown port '" << p << "'; valid ports:";
      for (const auto& v : valid) os << " " << v;
      throw ConfigError(os.str());
    }
  }
  OutputMetadata meta = make_metadata(o, rs, "spectrum", false);
  for (const auto& port : ports) {
    PathResponse r = evaluate_port(rs.scenario, port);
    CsvTable table;
    table.columns = {"wavelength_nm", "transmission_db"};
    const auto& g = rs.scenario.grid;
    for (std::size_t k = 0; k < g.n_points; ++k) {
      std::size_t i = g.n_points - 1 - k;  // ascending wavelength
      double lam_nm = frequency_to_wavelength(g.at(i)) * 1e9;
      double db = db_from_linear_power(std::norm(r.spectrum.values()[i]));
      table.rows.push_back({lam_nm, db});
    }
    std::string base = (fs::path(o.out_dir) / ("spectrum_" + port)).string();
    write_csv(base + ".csv", meta, table);
    SvgSeries s;
    s.label = port;
    for (const auto& row : table.rows) {
      s.x.push_back(row[0]);
      s.y.push_back(row[1]);
    }
    SvgPlotOptions po;
    po.title = "Transmission: " + port;
    po.x_label = "wavelength (nm)";
    po.y_label = "transmission (dB)";
    po.vertical_markers = {rs.scenario.pump_wavelength_m * 1e9};
    write_svg_plot(base + ".svg", po, {s});
    std::cout << "wrote " << base << ".csv\n";
  }
  return kExitOk;
}

int cmd_power_sweep(const CommonOpts& o, std::vector<double> powers_mw) {
  RunSetup rs = load_setup(o);
  ensure_out_dir(o.out_dir);
  if (powers_mw.empty())
    powers_mw = {0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0};
  for (std::size_t i = 0; i < powers_mw.size(); ++i) {
    if (!(powers_mw[i] > 0.0)) throw ConfigError("powers must be positive");
    if (i > 0 && powers_mw[i] <= powers_mw[i - 1])
      throw ConfigError("powers must be ascending");
  }
  const Component& gen = generation_ring(rs);
  CsvTable table;
  table.columns = {"power_mw",          "internal_rate_hz", "signal_port_rate_hz",
                   "idler_port_rate_hz", "coincidence_rate_hz", "car_analytic"};
  for (double p_mw : powers_mw) {
    double rate = internal_pair_rate(rs.sfwm, gen.ring, p_mw * 1e-3);
    double sig = rate * linear_power_from_db(-rs.budget.signal_path_db);
    double idl = rate * linear_power_from_db(-rs.budget.idler_path_db);
    auto res = analytic_coincidences(rate, rs.budget, rs.detector_1, rs.detector_2,
                                     rs.counting);
    table.rows.push_back({p_mw, rate, sig, idl, res.true_rate_hz, res.car});
  }
  OutputMetadata meta = make_metadata(o, rs, "power-sweep", false);
  std::string base = (fs::path(o.out_dir) / "power_sweep").string();
  write_csv(base + ".csv", meta, table);

  SvgSeries internal, coinc, guide;
  internal.label = "internal pair rate (Hz)";
  coinc.label = "coincidence rate (Hz)";
  coinc.color = "#d62728";
  guide.label = "slope 2 guide";
  guide.color = "#777777";
  guide.dashed = true;
  double p0 = table.rows.front()[0], r0 = table.rows.front()[1];
  for (const auto& row : table.rows) {
    internal.x.push_back(row[0]);
    internal.y.push_back(row[1]);
    coinc.x.push_back(row[0]);
    coinc.y.push_back(row[4]);
    guide.x.push_back(row[0]);
    guide.y.push_back(r0 * (row[0] / p0) * (row[0] / p0));
  }
  SvgPlotOptions po;
  po.title = "Pair rate vs pump power";
  po.x_label = "pump power (mW)";
  po.y_label = "rate (Hz)";
  po.log_x = po.log_y = true;
  write_svg_plot(base + ".svg", po, {internal, coinc, guide});
  std::cout << "wrote " << base << ".csv\n";
  return kExitOk;
}

int cmd_coincidence(const CommonOpts& o) {
  RunSetup rs = load_setup(o);
  ensure_out_dir(o.out_dir);
  const Component& gen = generation_ring(rs);
  double rate = 0.0;
  if (rs.scenario.pump_power_w > 0.0) {
    // alignment check: the pump must sit on the generation-ring comb
    enumerate_triplets(gen.ring, rs.scenario.heater_for(gen.name),
                       rs.scenario.pump_wavelength_m, 1);
    rate = internal_pair_rate(rs.sfwm, gen.ring, rs.scenario.pump_power_w);
  }
  auto analytic = analytic_coincidences(rate, rs.budget, rs.detector_1,
                                        rs.detector_2, rs.counting);
  auto mc = simulate_coincidences(rate, rs.budget, rs.detector_1, rs.detector_2,
                                  rs.counting);
  auto est = car_from_histogram(mc.histogram, mc.bin_centers_s, rs.counting);

  OutputMetadata meta = make_metadata(o, rs, "coincidence", true);
  meta.config.emplace_back("car_analytic", detail::fmt_num(analytic.car));
  meta.config.emplace_back("car_analytic_sigma", detail::fmt_num(analytic.car_sigma));
  meta.config.emplace_back("car_histogram", detail::fmt_num(est.car));
  meta.config.emplace_back("car_histogram_sigma", detail::fmt_num(est.car_sigma));
  meta.config.emplace_back("singles_1_hz", detail::fmt_num(mc.singles_rate_1_hz));
  meta.config.emplace_back("singles_2_hz", detail::fmt_num(mc.singles_rate_2_hz));

  CsvTable table;
  table.columns = {"delay_s", "counts"};
  for (std::size_t i = 0; i < mc.histogram.size(); ++i)
    table.rows.push_back(
        {mc.bin_centers_s[i], static_cast<double>(mc.histogram[i])});
  std::string base = (fs::path(o.out_dir) / "coincidence_histogram").string();
  write_csv(base + ".csv", meta, table);

  SvgSeries s;
  s.label = "counts per bin";
  for (const auto& row : table.rows) {
    s.x.push_back(row[0] * 1e9);
    s.y.push_back(row[1]);
  }
  SvgPlotOptions po;
  po.title = "Coincidence histogram";
  po.x_label = "delay (ns)";
  po.y_label = "counts";
  po.vertical_markers = {0.0};
  write_svg_plot(base + ".svg", po, {s});

  std::printf("CAR (analytic):  %.3f +/- %.3f\n", analytic.car, analytic.car_sigma);
  std::printf("CAR (histogram): %.3f +/- %.3f\n", est.car, est.car_sigma);
  std::printf("singles: %.1f Hz / %.1f Hz\n", mc.singles_rate_1_hz,
              mc.singles_rate_2_hz);
  std::cout << "wrote " << base << ".csv\n";
  return kExitOk;
}

int cmd_tune(const CommonOpts& o, const std::string& component, double target_nm,
             const std::string& objective_name, std::string observe) {
  RunSetup rs = load_setup(o);
  ensure_out_dir(o.out_dir);
  if (!rs.scenario.netlist.has_component(component))
    throw ConfigError("unknown component '" + component + "'");
  TuneObjective obj = TuneObjective::minimize_through;
  if (objective_name == "maximize-drop") obj = TuneObjective::maximize_drop;
  else if (objective_name != "minimize-through")
    throw ConfigError("objective must be minimize-through or maximize-drop");
  if (observe.empty()) {
    if (obj == TuneObjective::maximize_drop) observe = find_drop_port(rs, component);
    if (observe.empty()) observe = find_through_port(rs);
  }
  double target_m = target_nm * 1e-9;
  double f_target = wavelength_to_frequency(target_m);
  double before_db = port_power_db_at(rs, observe, f_target, false);
  HeaterState solved = auto_tune(rs.scenario, component, target_m, obj, observe);
  rs.scenario.heater_settings[component] = solved;
  double after_db = port_power_db_at(rs, observe, f_target, false);

  std::printf("%s: heater %.4f mA\n", component.c_str(), solved.current_a * 1e3);
  std::printf("%s at %.4f nm: %.2f dB -> %.2f dB\n", observe.c_str(), target_nm,
              before_db, after_db);
  std::string stem = fs::path(o.scenario_path).stem().string();
  std::string out = (fs::path(o.out_dir) / (stem + "_tuned.txt")).string();
  write_text_file(out, emit_run_setup(rs));
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

int cmd_calibrate(const CommonOpts& o, const std::string& targets_path) {
  ensure_out_dir(o.out_dir);
  CalibrationTargets targets;
  if (!targets_path.empty())
    targets = parse_calibration_targets(read_file(targets_path));
  CalibrationResult r = run_calibration(targets);
  std::string out = (fs::path(o.out_dir) / "calibration.txt").string();
  write_text_file(out, emit_calibration(targets, r));
  std::printf("dbr.delta_n = %.9g\n", r.dbr_delta_n);
  std::printf("sfwm.rate_scale = %.9g\n", r.rate_scale);
  std::printf("budget = %.4f / %.4f dB\n", r.signal_path_db, r.idler_path_db);
  std::printf("stray floor = %.2f dB\n", r.stray_floor_db);
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

int cmd_presets(const CommonOpts& o) {
  ensure_out_dir(o.out_dir);
  struct Entry {
    ChipPreset kind;
    const char* file;
  };
  const Entry entries[] = {{ChipPreset::chip_a, "chip_a.txt"},
                           {ChipPreset::chip_b, "chip_b.txt"},
                           {ChipPreset::two_chip_link, "two_chip_link.txt"}};
  for (const auto& e : entries) {
    RunSetup rs = preset_run_setup(e.kind);
    tune_all_heaters(rs);
    std::string out = (fs::path(o.out_dir) / e.file).string();
    write_text_file(out, emit_run_setup(rs));
    std::cout << "wrote " << out << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ppcs: photonic pair-source chain simulator"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  CommonOpts o;
  std::vector<std::string> ports;
  std::string powers_arg, component, objective = "minimize-through", observe;
  std::string targets_path;
  double target_nm = 0.0;

  auto add_common = [&](CLI::App* sub, bool needs_scenario) {
    if (needs_scenario)
      sub->add_option("--scenario", o.scenario_path, "scenario file");
    sub->add_option("--params", o.params_path, "calibration parameter file");
    sub->add_option("--set", o.sets, "override key=value (repeatable)");
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--seed", o.seed, "random seed")
        ->each([&](const std::string&) { o.seed_given = true; });
  };

  auto* sp = app.add_subcommand("spectrum", "port transmission spectra");
  add_common(sp, true);
  sp->add_option("--port", ports, "external port (repeatable; default all)");

  auto* pw = app.add_subcommand("power-sweep", "pair rate and CAR vs pump power");
  add_common(pw, true);
  pw->add_option("--powers", powers_arg, "comma-separated pump powers in mW");

  auto* co = app.add_subcommand("coincidence", "coincidence histogram and CAR");
  add_common(co, true);

  auto* tu = app.add_subcommand("tune", "solve one heater for a target");
  add_common(tu, true);
  tu->add_option("--component", component, "component to tune")->required();
  tu->add_option("--target-nm", target_nm, "target wavelength in nm")->required();
  tu->add_option("--objective", objective, "minimize-through | maximize-drop");
  tu->add_option("--observe", observe, "port to observe (default automatic)");

  auto* ca = app.add_subcommand("calibrate", "solve parameters from anchors");
  add_common(ca, false);
  ca->add_option("--targets", targets_path, "targets file (defaults built in)");

  auto* pr = app.add_subcommand("presets", "write the built-in scenarios");
  add_common(pr, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sp->parsed()) return cmd_spectrum(o, ports);
    if (pw->parsed()) {
      std::vector<double> powers;
      if (!powers_arg.empty()) {
        std::istringstream is(powers_arg);
        std::string tok;
        while (std::getline(is, tok, ','))
          powers.push_back(detail::to_num(tok, "--powers"));
      }
      return cmd_power_sweep(o, powers);
    }
    if (co->parsed()) return cmd_coincidence(o);
    if (tu->parsed()) return cmd_tune(o, component, target_nm, objective, observe);
    if (ca->parsed()) return cmd_calibrate(o, targets_path);
    if (pr->parsed()) return cmd_presets(o);
  } catch (const OverflowGuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOverflow;
  } catch (const TuningError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPhysics;
  } catch (const AlignmentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPhysics;
  } catch (const CalibrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPhysics;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPhysics;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
