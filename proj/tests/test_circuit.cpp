#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>

#include "ppcs/circuit.hpp"
#include "ppcs/scenario.hpp"

using namespace ppcs;

namespace {

Netlist loopback_netlist() {
  Netlist nl;
  Component in, out;
  in.name = "gc_in";
  in.kind = ComponentKind::grating_coupler;
  out.name = "gc_out";
  out.kind = ComponentKind::grating_coupler;
  nl.components = {in, out};
  nl.connections.push_back({"gc_in", "out", "gc_out", "in"});
  nl.input_component = "gc_in";
  nl.external_outputs["loop"] = {"gc_out", "out"};
  return nl;
}

RunSetup tuned_chip_a() {
  RunSetup rs = preset_run_setup(ChipPreset::chip_a);
  tune_all_heaters(rs);
  return rs;
}

double port_db(const Scenario& sc, const std::string& port, double f,
               bool with_stray = true) {
  return db_from_linear_power(std::norm(evaluate_port_at(sc, port, f, with_stray)));
}

}  // namespace

TEST_CASE("loopback is the coupler envelope") {
  Scenario sc;
  sc.netlist = loopback_netlist();
  double f_c = wavelength_to_frequency(1525e-9);
  REQUIRE(port_db(sc, "loop", f_c) == Catch::Approx(-10.0).margin(1e-9));
  // 1 dB per coupler extra at the band edge
  double f_e = wavelength_to_frequency(1555e-9);
  REQUIRE(port_db(sc, "loop", f_e) == Catch::Approx(-12.0).margin(1e-9));
}

TEST_CASE("unknown ports and broken chains are reported") {
  Scenario sc;
  sc.netlist = loopback_netlist();
  REQUIRE_THROWS_AS(evaluate_port_at(sc, "nope", 2e14), NetlistError);
  sc.netlist.connections.clear();
  REQUIRE_THROWS_AS(evaluate_port_at(sc, "loop", 2e14), NetlistError);
}

TEST_CASE("external port list is stable") {
  RunSetup rs = preset_run_setup(ChipPreset::chip_a);
  auto names = rs.scenario.netlist.external_port_names();
  REQUIRE(names == std::vector<std::string>{"common_through", "drop_1", "drop_2",
                                            "monitor"});
}

TEST_CASE("chip A tuning lands near the measured heater current") {
  RunSetup rs = tuned_chip_a();
  // all three rings solve to the same current for identical geometry
  for (const char* name : {"gen_ring", "ad1", "ad2"}) {
    double ma = rs.scenario.heater_settings.at(name).current_a * 1e3;
    REQUIRE(ma == Catch::Approx(11.3587).margin(0.05));
  }
}

TEST_CASE("composite pump rejection report") {
  RunSetup rs = tuned_chip_a();
  auto rep = extinction_report(rs.scenario);
  REQUIRE(rep.stages.size() == 4);
  std::map<std::string, double> st(rep.stages.begin(), rep.stages.end());
  REQUIRE(st.at("gen_ring") == Catch::Approx(0.92).margin(0.05));
  REQUIRE(st.at("dbr") == Catch::Approx(64.54).margin(0.2));
  REQUIRE(st.at("ad1") == Catch::Approx(16.0).margin(0.2));
  REQUIRE(st.at("ad2") == Catch::Approx(16.0).margin(0.2));
  REQUIRE(rep.cumulative_db >= 95.0);
  REQUIRE(rep.cumulative_db <= 100.0);
  REQUIRE(rep.stray_cap_db.has_value());
  REQUIRE(*rep.stray_cap_db == Catch::Approx(65.0));
  REQUIRE(rep.cumulative_measured_db == Catch::Approx(65.0));
}

TEST_CASE("untuned add-drop rings are transparent at the pump") {
  RunSetup rs = preset_run_setup(ChipPreset::chip_a);
  // tune only the generation ring
  rs.scenario.heater_settings["gen_ring"] = auto_tune(
      rs.scenario, "gen_ring", rs.scenario.pump_wavelength_m,
      TuneObjective::minimize_through, "common_through");
  auto rep = extinction_report(rs.scenario);
  std::map<std::string, double> st(rep.stages.begin(), rep.stages.end());
  REQUIRE(st.at("ad1") < 0.3);
  REQUIRE(st.at("ad2") < 0.3);
}

TEST_CASE("tuning an add-drop onto the pump deepens the through port") {
  RunSetup rs = preset_run_setup(ChipPreset::chip_a);
  double f_p = rs.scenario.pump_frequency_hz();
  double before = port_db(rs.scenario, "common_through", f_p, false);
  rs.scenario.heater_settings["ad1"] = auto_tune(
      rs.scenario, "ad1", rs.scenario.pump_wavelength_m,
      TuneObjective::minimize_through, "common_through");
  double after = port_db(rs.scenario, "common_through", f_p, false);
  // this filter's own extinction is 16 dB; most of it must be realized
  REQUIRE(before - after >= 12.0);
}

TEST_CASE("tuning to the current resonance solves to zero current") {
  RunSetup rs = preset_run_setup(ChipPreset::chip_a);
  for (auto& c : rs.scenario.netlist.components)
    if (c.has_heater()) c.ring.resonance_offset_hz = 0.0;
  auto h = auto_tune(rs.scenario, "gen_ring", rs.scenario.pump_wavelength_m,
                     TuneObjective::minimize_through, "common_through");
  REQUIRE(h.current_a * 1e3 < 0.5);
}

TEST_CASE("unreachable targets raise a tuning error") {
  RunSetup rs = preset_run_setup(ChipPreset::chip_a);
  REQUIRE_THROWS_AS(auto_tune(rs.scenario, "ad1", 1535e-9,
                              TuneObjective::minimize_through, "common_through"),
                    TuningError);
  REQUIRE_THROWS_AS(auto_tune(rs.scenario, "dbr", 1525e-9,
                              TuneObjective::minimize_through, "common_through"),
                    TuningError);
}

TEST_CASE("increasing heater current shifts the resonance red") {
  RunSetup rs = preset_run_setup(ChipPreset::chip_a);
  const auto& gen = rs.scenario.netlist.component("gen_ring");
  std::vector<double> minima_nm;
  for (double ma : {5.0, 8.0, 11.0}) {
    HeaterState h;
    h.current_a = ma * 1e-3;
    double f_res = gen.ring.resonance_hz(h);
    minima_nm.push_back(frequency_to_wavelength(f_res) * 1e9);
    // the transfer function dips exactly there
    auto c = solve_coupling_all_pass(gen.ring);
    double dip = std::norm(ring_all_pass_at(gen.ring, c, h, f_res));
    double off = std::norm(ring_all_pass_at(gen.ring, c, h, f_res + 1e10));
    REQUIRE(dip < off);
  }
  REQUIRE(minima_nm[0] < minima_nm[1]);
  REQUIRE(minima_nm[1] < minima_nm[2]);
}

TEST_CASE("stray floor limits the measured notch, not the ideal one") {
  RunSetup rs = tuned_chip_a();
  double f_p = rs.scenario.pump_frequency_hz();
  double ideal = port_db(rs.scenario, "common_through", f_p, false);
  double measured = port_db(rs.scenario, "common_through", f_p, true);
  REQUIRE(ideal < -105.0);
  REQUIRE(measured > ideal + 25.0);
  // the measured level sits at envelope minus the floor
  double envelope_db = 0.0;
  for (const auto& step : resolve_path(rs.scenario.netlist, "common_through")) {
    const auto& c = rs.scenario.netlist.component(step.component);
    envelope_db += db_from_linear_power(std::norm(c.envelope_at(step.output_port, f_p)));
  }
  REQUIRE(measured == Catch::Approx(envelope_db - 65.0).margin(0.1));
}

TEST_CASE("worker count does not change the evaluated spectrum") {
  RunSetup rs = tuned_chip_a();
  rs.scenario.grid = FrequencyGrid::from_wavelength_span(1515e-9, 1535e-9, 2001);
  setenv("PPCS_THREADS", "1", 1);
  auto a = evaluate_port(rs.scenario, "common_through");
  setenv("PPCS_THREADS", "3", 1);
  auto b = evaluate_port(rs.scenario, "common_through");
  unsetenv("PPCS_THREADS");
  for (std::size_t i = 0; i < a.spectrum.size(); ++i)
    REQUIRE(a.spectrum[i] == b.spectrum[i]);
}

TEST_CASE("demultiplexing chip routes signal and idler to separate drops") {
  RunSetup rs = preset_run_setup(ChipPreset::chip_b);
  tune_all_heaters(rs);
  const auto& gen = generation_ring(rs);
  double f_p = rs.scenario.pump_frequency_hz();
  double step = 2.0 * gen.ring.fsr_hz();
  double f_sig = f_p + step;
  double f_idl = f_p - step;

  double sig_at_1 = port_db(rs.scenario, "drop_1", f_sig, false);
  double sig_at_2 = port_db(rs.scenario, "drop_2", f_sig, false);
  double idl_at_1 = port_db(rs.scenario, "drop_1", f_idl, false);
  double idl_at_2 = port_db(rs.scenario, "drop_2", f_idl, false);
  REQUIRE(sig_at_2 - sig_at_1 < -30.0);
  REQUIRE(idl_at_1 - idl_at_2 < -30.0);

  // the common through port is depleted at both routed lines
  double th_sig = port_db(rs.scenario, "common_through", f_sig, false);
  double th_idl = port_db(rs.scenario, "common_through", f_idl, false);
  REQUIRE(sig_at_1 - th_sig > 10.0);
  REQUIRE(idl_at_2 - th_idl > 10.0);
}
