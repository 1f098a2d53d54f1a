#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  if (const char* p = std::getenv("PPCS_CLI")) return p;
  return "./ppcs";
}

int run(const std::string& args) {
  std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct Workspace {
  fs::path dir;
  Workspace() : dir("cli_tmp") {
    fs::remove_all(dir);
    fs::create_directories(dir);
    REQUIRE(run("presets --out " + dir.string()) == 0);
  }
  std::string scenario() const { return (dir / "chip_a.txt").string(); }
};

std::vector<std::vector<double>> csv_rows(const std::string& text,
                                          std::string* header = nullptr) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of("0123456789+-.eE,") != std::string::npos) {
      if (header) *header = line;
      continue;
    }
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("presets write three runnable scenarios") {
  Workspace ws;
  for (const char* f : {"chip_a.txt", "chip_b.txt", "two_chip_link.txt"})
    REQUIRE(fs::exists(ws.dir / f));
}

TEST_CASE("spectrum writes csv and svg with the fixed schema") {
  Workspace ws;
  auto out = ws.dir / "spec";
  REQUIRE(run("spectrum --scenario " + ws.scenario() +
              " --port common_through --out " + out.string()) == 0);
  std::string header;
  auto rows = csv_rows(slurp(out / "spectrum_common_through.csv"), &header);
  REQUIRE(header == "wavelength_nm,transmission_db");
  REQUIRE(rows.size() == 20001);
  // wavelength ascending
  REQUIRE(rows.front()[0] < rows.back()[0]);
  REQUIRE(fs::exists(out / "spectrum_common_through.svg"));
}

TEST_CASE("one-point grid gives a single-row csv") {
  Workspace ws;
  auto out = ws.dir / "one";
  REQUIRE(run("spectrum --scenario " + ws.scenario() +
              " --port monitor --set grid.points=1 --out " + out.string()) == 0);
  auto rows = csv_rows(slurp(out / "spectrum_monitor.csv"));
  REQUIRE(rows.size() == 1);
}

TEST_CASE("unknown port exits with a config error") {
  Workspace ws;
  REQUIRE(run("spectrum --scenario " + ws.scenario() + " --port bogus --out " +
              (ws.dir / "x").string()) == 2);
}

TEST_CASE("missing scenario exits with a config error") {
  REQUIRE(run("spectrum --scenario /nonexistent/file.txt") == 2);
}

TEST_CASE("power sweep schema and calibrated values") {
  Workspace ws;
  auto out = ws.dir / "sweep";
  REQUIRE(run("power-sweep --scenario " + ws.scenario() + " --out " +
              out.string()) == 0);
  std::string header;
  auto rows = csv_rows(slurp(out / "power_sweep.csv"), &header);
  REQUIRE(header ==
          "power_mw,internal_rate_hz,signal_port_rate_hz,idler_port_rate_hz,"
          "coincidence_rate_hz,car_analytic");
  REQUIRE(rows.size() >= 8);
  // coincidence column proportional to combined signal+idler rates within 1%
  double ref = rows[0][4] / (rows[0][2] + rows[0][3]);
  for (const auto& r : rows) {
    double ratio = r[4] / (r[2] + r[3]);
    REQUIRE(ratio == Catch::Approx(ref).epsilon(0.01));
  }
  // CAR at 0.3 mW in the reproduction window
  bool found = false;
  for (const auto& r : rows)
    if (std::abs(r[0] - 0.3) < 1e-9) {
      REQUIRE(r[5] >= 44.0);
      REQUIRE(r[5] <= 56.0);
      found = true;
    }
  REQUIRE(found);
  REQUIRE(run("power-sweep --scenario " + ws.scenario() +
              " --powers 0.3,0.2 --out " + (ws.dir / "bad").string()) == 2);
}

TEST_CASE("coincidence runs are byte-identical for a fixed seed") {
  Workspace ws;
  auto a = ws.dir / "coinc_a";
  auto b = ws.dir / "coinc_b";
  std::string base = "coincidence --scenario " + ws.scenario() +
                     " --set pump.power_mw=0.3 --set counting.acquisition_s=600";
  REQUIRE(run(base + " --out " + a.string()) == 0);
  REQUIRE(run(base + " --out " + b.string()) == 0);
  REQUIRE(slurp(a / "coincidence_histogram.csv") ==
          slurp(b / "coincidence_histogram.csv"));
  auto c = ws.dir / "coinc_c";
  REQUIRE(run(base + " --seed 777 --out " + c.string()) == 0);
  REQUIRE(slurp(a / "coincidence_histogram.csv") !=
          slurp(c / "coincidence_histogram.csv"));
}

TEST_CASE("zero pump power gives a flat histogram") {
  Workspace ws;
  auto out = ws.dir / "dark";
  REQUIRE(run("coincidence --scenario " + ws.scenario() +
              " --set pump.power_mw=0 --out " + out.string()) == 0);
  std::string text = slurp(out / "coincidence_histogram.csv");
  auto pos = text.find("# car_histogram ");
  REQUIRE(pos != std::string::npos);
  double car = std::stod(text.substr(pos + 16));
  REQUIRE(std::abs(car) < 1.0);
}

TEST_CASE("overflow guard maps to exit code 4") {
  Workspace ws;
  REQUIRE(run("coincidence --scenario " + ws.scenario() +
              " --set counting.acquisition_s=1e9 --out " +
              (ws.dir / "of").string()) == 4);
}

TEST_CASE("tune writes an updated scenario and reports the depth") {
  Workspace ws;
  auto out = ws.dir / "tuned";
  REQUIRE(run("tune --scenario " + ws.scenario() +
              " --component ad1 --target-nm 1524.345 --out " + out.string()) == 0);
  REQUIRE(fs::exists(out / "chip_a_tuned.txt"));
  // unreachable target: physics error
  REQUIRE(run("tune --scenario " + ws.scenario() +
              " --component ad1 --target-nm 1535 --out " + out.string()) == 3);
}

TEST_CASE("emitted scenarios shift monotonically under a heater sweep") {
  Workspace ws;
  // Fig 3c style: park the ring at three currents, find the dip each time
  std::vector<double> dip_nm;
  for (const char* ma : {"5", "8", "11"}) {
    auto out = ws.dir / (std::string("sweep_") + ma);
    std::string scen = ws.scenario();
    // rewrite the gen_ring heater current via a scenario copy
    std::string text = slurp(scen);
    auto pos = text.find("gen_ring = ");
    REQUIRE(pos != std::string::npos);
    auto eol = text.find('\n', pos);
    text = text.substr(0, pos) + "gen_ring = " + ma + text.substr(eol);
    auto mod = ws.dir / (std::string("mod_") + ma + ".txt");
    std::ofstream(mod) << text;
    REQUIRE(run("spectrum --scenario " + mod.string() +
                " --port monitor --out " + out.string()) == 0);
    auto rows = csv_rows(slurp(out / "spectrum_monitor.csv"));
    // search only around the parked resonance; the band edges are darker still
    double best_nm = 0.0, best_db = 1e9;
    for (const auto& r : rows)
      if (r[0] > 1521.0 && r[0] < 1526.0 && r[1] < best_db) {
        best_db = r[1];
        best_nm = r[0];
      }
    dip_nm.push_back(best_nm);
  }
  REQUIRE(dip_nm[0] < dip_nm[1]);
  REQUIRE(dip_nm[1] < dip_nm[2]);
}

TEST_CASE("calibrate emits a parameter file and is idempotent") {
  Workspace ws;
  auto out1 = ws.dir / "cal1";
  auto out2 = ws.dir / "cal2";
  REQUIRE(run("calibrate --out " + out1.string()) == 0);
  REQUIRE(fs::exists(out1 / "calibration.txt"));
  REQUIRE(run("calibrate --targets " + (out1 / "calibration.txt").string() +
              " --out " + out2.string()) == 0);
  REQUIRE(slurp(out1 / "calibration.txt") == slurp(out2 / "calibration.txt"));
}

TEST_CASE("calibration parameters feed other commands") {
  Workspace ws;
  auto cal = ws.dir / "cal";
  REQUIRE(run("calibrate --out " + cal.string()) == 0);
  auto out = ws.dir / "with_params";
  REQUIRE(run("power-sweep --scenario " + ws.scenario() + " --params " +
              (cal / "calibration.txt").string() + " --out " + out.string()) == 0);
  auto rows = csv_rows(slurp(out / "power_sweep.csv"));
  REQUIRE(!rows.empty());
}
