#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "rfmag/config.hpp"
#include "rfmag/errors.hpp"

using namespace rfmag;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& yaml) {
  try {
    load_config_string(yaml);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rfmag_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RFMAG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string profile(const std::string& name) { return std::string(RFMAG_PROFILE_DIR) + "/" + name; }

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("rfmag_test_" + name);
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Config, MinimalConfigGetsDefaults) {
  const SimConfig c = load_config_string("ensemble:\n  n_atoms_per_cell: 3.6e11\n");
  EXPECT_DOUBLE_EQ(c.experiment.ensemble.n_atoms_per_cell, 3.6e11);
  EXPECT_DOUBLE_EQ(c.experiment.constants.spin_f, 4.0);
  EXPECT_DOUBLE_EQ(c.experiment.constants.gamma_gyro, 2.2e10);
  EXPECT_DOUBLE_EQ(c.experiment.probe2.eta_detection, 0.8);
  EXPECT_DOUBLE_EQ(c.experiment.probe1.xi_squared, 1.0 / 6.3);
  EXPECT_EQ(c.protocol, ProtocolKind::pn);
  EXPECT_FALSE(c.sweep.has_value());
  EXPECT_FALSE(c.detection_bandwidth.has_value());
}

TEST(Config, NegativeT2Rejected) {
  const std::string msg = config_error("ensemble:\n  t2_dark: -1 ms\n");
  EXPECT_NE(msg.find("t2_dark"), std::string::npos) << msg;
}

TEST(Config, UnknownKeyNamedWithLine) {
  const std::string msg = config_error("protocol: pn\nensemble:\n  T3: 5\n");
  EXPECT_NE(msg.find("T3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Config, ParseErrorHasLine) {
  const std::string msg = config_error("protocol: pn\nensemble: [1, 2\n");
  EXPECT_NE(msg.find("line"), std::string::npos) << msg;
}

TEST(Config, LoadFromFileNamesPath) {
  const auto p = write_file("bad.yaml", "bogus: 1\n");
  try {
    load_config(p);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(p.string()), std::string::npos);
  }
  EXPECT_THROW(load_config("/nonexistent/rfmag.yaml"), ConfigError);
}

TEST(Config, UnitSuffixes) {
  EXPECT_DOUBLE_EQ(parse_quantity("0.92 G", Dimension::field), 0.92e-4);
  EXPECT_DOUBLE_EQ(parse_quantity("36 fT", Dimension::field), 36e-15);
  EXPECT_DOUBLE_EQ(parse_quantity("15 ms", Dimension::time), 15e-3);
  EXPECT_DOUBLE_EQ(parse_quantity("1 kHz", Dimension::frequency), 1e3);
  EXPECT_DOUBLE_EQ(parse_quantity("0.43 ms^-1", Dimension::rate), 430.0);
  EXPECT_DOUBLE_EQ(parse_quantity("0.43 1/ms", Dimension::rate), 430.0);
  EXPECT_DOUBLE_EQ(parse_quantity("2.5", Dimension::time), 2.5);
  EXPECT_THROW(parse_quantity("3 parsecs", Dimension::time), ConfigError);
  EXPECT_THROW(parse_quantity("15 ms", Dimension::field), ConfigError);
  const SimConfig c = load_config_string("b_dc: 0.92 G\nrf:\n  amplitude: 36 fT\n  duration: 15 ms\n");
  EXPECT_DOUBLE_EQ(c.experiment.b_dc, 0.92e-4);
  EXPECT_DOUBLE_EQ(c.experiment.rf.duration, 15e-3);
}

TEST(Config, SweepGrids) {
  const SimConfig c = load_config_string(
      "protocol: entangled\nsweep:\n  variable: delay\n  grid: {start: 1 ms, stop: 4 ms, count: 4}\n");
  ASSERT_TRUE(c.sweep.has_value());
  ASSERT_EQ(c.sweep->values.size(), 4u);
  EXPECT_NEAR(c.sweep->values[3], 4e-3, 1e-15);
  const SimConfig l = load_config_string(
      "sweep:\n  variable: rf.bandwidth\n  grid: {start: 100 Hz, stop: 10 kHz, count: 3, spacing: log}\n");
  EXPECT_NEAR(l.sweep->values[1], 1e3, 1e-9);
  EXPECT_NE(config_error("sweep:\n  variable: delay\n  values: []\n"), "");
  EXPECT_NE(config_error("sweep:\n  variable: nonsense\n  values: [1]\n"), "");
}

TEST(Config, HashStableAndSensitive) {
  const SimConfig a = load_config(profile("entangled_reference.yaml"));
  SimConfig b = load_config(profile("entangled_reference.yaml"));
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.master_seed = 99;
  b.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  set_field(b, "delay", 2e-3);
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, FieldAccess) {
  SimConfig c;
  set_field(c, "rf.bandwidth", 2000.0);
  EXPECT_DOUBLE_EQ(c.experiment.rf.duration, 0.88 / 2000.0);
  set_field(c, "probe2.mode_gamma", 800.0);
  EXPECT_DOUBLE_EQ(get_field(c, "probe2.mode_gamma"), 800.0);
  EXPECT_THROW(set_field(c, "probe3.duration", 1.0), ConfigError);
  EXPECT_FALSE(numeric_field_paths().empty());
  for (auto k : {ProtocolKind::pn, ProtocolKind::entangled, ProtocolKind::unentangled, ProtocolKind::calibration}) {
    EXPECT_EQ(parse_protocol(to_string(k)), k);
  }
}

TEST(Config, AllProfilesLoad) {
  for (const auto& e : fs::directory_iterator(RFMAG_PROFILE_DIR)) {
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
  }
}

TEST(Cli, ExitCodes) {
  const auto out = scratch("exit");
  EXPECT_EQ(run_cli("pn-limit --config " + profile("pn_reference.yaml") + " --out " + out.string()), 0);
  EXPECT_EQ(run_cli("pn-limit --config /nonexistent.yaml --out " + out.string()), 2);
  EXPECT_EQ(run_cli("simulate"), 2);
  EXPECT_EQ(run_cli("frobnicate --config x"), 2);
  const auto bad = write_file("t3.yaml", "ensemble:\n  T3: 1\n");
  EXPECT_EQ(run_cli("simulate --config " + bad.string() + " --out " + out.string()), 2);
  // An output "directory" that is a regular file fails at run time.
  const auto blocker = write_file("blocker", "x");
  EXPECT_EQ(run_cli("simulate --config " + profile("pn_reference.yaml") + " --shots 10 --out " + blocker.string()), 3);
}

TEST(Cli, SimulateIsByteReproducible) {
  const auto a = scratch("repro_a"), b = scratch("repro_b");
  const std::string base = "simulate --config " + profile("pn_reference.yaml") + " --seed 1 --shots 200 --out ";
  ASSERT_EQ(run_cli(base + a.string()), 0);
  ASSERT_EQ(run_cli(base + b.string()), 0);
  for (const char* f : {"shots.csv", "shots_reference.csv", "summary.json", "schema.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_EQ(slurp(a / "shots.csv").rfind("shot_id,pulse_id,S2c,S2s\n", 0), 0u);
  const auto c = scratch("repro_c");
  ASSERT_EQ(run_cli("simulate --config " + profile("pn_reference.yaml") + " --seed 2 --shots 200 --out " + c.string()), 0);
  EXPECT_NE(slurp(a / "shots.csv"), slurp(c / "shots.csv"));
}

TEST(Cli, SummaryContents) {
  const auto out = scratch("summary");
  ASSERT_EQ(run_cli("simulate --config " + profile("entangled_reference.yaml") + " --shots 400 --out " + out.string()), 0);
  const auto s = nlohmann::json::parse(slurp(out / "summary.json"));
  for (const char* k : {"config_hash", "master_seed", "n_shots", "units", "sigma_epr", "noise_pn_units"}) {
    EXPECT_TRUE(s.contains(k)) << k;
  }
  const auto& q = s["pulses"]["probe2"]["S2c"];
  for (const char* k : {"mean", "variance", "mean_stderr", "variance_stderr"}) EXPECT_TRUE(q.contains(k)) << k;
  EXPECT_EQ(s["n_shots"], 400);
  EXPECT_EQ(s["master_seed"], 7);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["config_hash"], s["config_hash"]);
  EXPECT_FALSE(m["outputs"].empty());
  EXPECT_TRUE(fs::exists(out / "schema.json"));

  const auto cal = scratch("summary_cal");
  ASSERT_EQ(run_cli("simulate --config " + profile("calibration.yaml") + " --shots 400 --out " + cal.string()), 0);
  const auto sc = nlohmann::json::parse(slurp(cal / "summary.json"));
  ASSERT_TRUE(sc.contains("calibration"));
  EXPECT_TRUE(sc["calibration"].contains("kappa_squared"));
}

TEST(Cli, SweepRejectsEmptyGridAtLoad) {
  const auto p = write_file("empty_sweep.yaml", "protocol: entangled\nsweep:\n  variable: delay\n  values: []\n");
  EXPECT_EQ(run_cli("sweep --config " + p.string() + " --out " + scratch("sweep_empty").string()), 2);
}
