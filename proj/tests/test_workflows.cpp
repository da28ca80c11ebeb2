#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "thermo/oracle.hpp"
#include "thermo/workflows.hpp"

using namespace thermo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "thermo_test_workflows" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig small_config(std::size_t n, const std::string& dir) {
  RunConfig c;
  c.model.n_sites = n;
  c.model.blockade_radius = 1.14;
  c.model.detuning = 2.9;
  c.dbeta_half = 0.05;
  c.m_lptn = 32;
  c.m_tto = 32;
  c.k0 = 64;
  c.temperatures = {0.1, 0.5};
  c.measures = {"energy", "purity", "negativity"};
  c.output_dir = scratch(dir);
  c.threads = 1;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const nlohmann::json doc = {{"model", {{"n_sites", 7}, {"blockade_radius", 1.142}, {"detuning", 2.9}}},
                              {"evolution", {{"dbeta_half", 0.025}, {"m_lptn", 40}, {"temperatures", {0.5, 0.1}}}},
                              {"conversion", {{"m_tto", 30}, {"k0", 20}}},
                              {"measures", {{"list", {"purity", "eof"}}, {"k_keep", 5}}},
                              {"seed", 11}};
  const RunConfig c = RunConfig::from_json(doc);
  CHECK(c.model.n_sites == 7);
  CHECK(c.m_lptn == 40);
  CHECK(c.k0 == 20);
  CHECK(c.seed == 11);
  const auto b = c.betas();
  REQUIRE(b.size() == 2);
  CHECK(b[0] == doctest::Approx(2.0));
  CHECK(b[1] == doctest::Approx(10.0));
  const RunConfig again = RunConfig::from_json(c.to_json());
  CHECK(again.to_json() == c.to_json());

  CHECK_THROWS_AS(RunConfig::from_json({{"typo", 1}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"model", {{"n_sites", "five"}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"evolution", {{"temperatures", {-1.0}}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"measures", {{"list", {"fidelity"}}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"conversion", {{"k0", 0}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"model", {{"blockade_radius", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("thread pool and helpers") {
  std::vector<int> out(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < 100; ++i) CHECK(out[i] == static_cast<int>(i * i));
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
  CHECK(within_tolerance(1.0005, 1.0, 1e-3));
  CHECK_FALSE(within_tolerance(1.002, 1.0, 1e-3));
  CHECK(within_tolerance(0.00005, 0.0, 1e-3));
  CHECK(std::isnan(threshold_temperature({{0.1, 0.99}, {0.2, 0.95}}, 0.9)));
  CHECK(threshold_temperature({{0.1, 0.99}, {0.2, 0.85}, {0.3, 0.7}}, 0.9) == 0.2);
}

TEST_CASE("gibbs command writes snapshots and a manifest") {
  RunConfig c = small_config(5, "gibbs");
  c.include_infinite_temperature = true;
  const auto manifest = cmd_gibbs(c);
  REQUIRE(manifest["snapshots"].size() == 3);
  for (const auto& s : manifest["snapshots"]) {
    CHECK(fs::exists(c.output_dir / s["tto_file"].get<std::string>()));
    CHECK(fs::exists(c.output_dir / s["lptn_file"].get<std::string>()));
  }
  CHECK(fs::exists(c.output_dir / "manifest.json"));
  CHECK(manifest["snapshots"][0]["beta"] == 0.0);
  const Tto hot = load_tto(c.output_dir / manifest["snapshots"][0]["tto_file"].get<std::string>());
  const ThermalSpectrum spec = spectrum(hot);
  for (double p : spec.probabilities) CHECK(std::abs(p - 1.0 / 32) < 1e-12);
}

TEST_CASE("measure command on pure and product snapshots") {
  RunConfig c = small_config(4, "measure");
  c.k0 = 1;
  c.temperatures = {0.05};
  c.include_infinite_temperature = true;
  cmd_gibbs(c);
  const auto rows = cmd_measure(c);
  REQUIRE(rows.size() == 6);
  CHECK(std::isinf(rows[0].temperature));
  // β = 0 with k0 = 1 keeps a single product state
  CHECK(std::abs(rows[2].value) < 1e-12);
  CHECK(rows[4].measure == "purity");
  CHECK(rows[4].value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fs::exists(c.output_dir / "measures.csv"));
  RunConfig missing = c;
  missing.snapshot_dir = scratch("empty");
  CHECK_THROWS_AS(cmd_measure(missing), IoError);
}

TEST_CASE("oracle comparison passes and fails as expected") {
  RunConfig c = small_config(6, "oracle");
  c.model.blockade_radius = 1.2;
  c.model.detuning = 1.0;
  c.dbeta_half = 0.0125;
  c.temperatures = {0.2, 0.5, 1.0};
  c.k0 = 64;
  const auto ok = cmd_oracle_compare(c, 1e-3);
  CHECK(ok.passed);
  CHECK(ok.report["rows"].size() == 9);
  for (const auto& row : ok.report["rows"]) CHECK(row.contains("norm_kept"));
  c.m_lptn = 1;
  c.output_dir = scratch("oracle_fail");
  const auto bad = cmd_oracle_compare(c, 1e-3);
  CHECK_FALSE(bad.passed);
  bool some_failed = false;
  for (const auto& row : bad.report["rows"]) some_failed = some_failed || !row["passed"].get<bool>();
  CHECK(some_failed);
  c.model.n_sites = 11;
  CHECK_THROWS_AS(cmd_oracle_compare(c, 1e-3), ConfigError);
}

TEST_CASE("scan covers the grid once and is reproducible across thread counts") {
  RunConfig c = small_config(5, "scan1");
  c.temperatures = {0.1, 0.3, 1.0};
  c.scan_blockade_radii = {1.0, 1.2};
  c.scan_detunings = {1.5, 3.0};
  c.measures = {"purity", "negativity", "eof"};
  c.k_keep = 4;
  c.optimizer.max_evaluations = 200;
  c.optimizer.restarts = 1;
  const auto summary = cmd_scan(c);
  CHECK(summary["points"].size() == 4);
  const auto rows = read_csv(c.output_dir / "scan.csv");
  std::set<std::tuple<double, double, double, std::string>> keys;
  for (const auto& r : rows) keys.insert({r.blockade_radius, r.detuning, r.temperature, r.measure});
  CHECK(keys.size() == rows.size());
  CHECK(rows.size() == 4 * 3 * 3);
  CHECK(fs::exists(c.output_dir / "thresholds.csv"));

  RunConfig d = c;
  d.output_dir = scratch("scan2");
  d.threads = 3;
  cmd_scan(d);
  CHECK(slurp(c.output_dir / "scan.csv") == slurp(d.output_dir / "scan.csv"));
}

TEST_CASE("collapse command") {
  const fs::path dir = scratch("collapse");
  std::vector<CsvRow> rows;
  for (std::size_t n : {7, 13}) {
    for (int k = 1; k <= 8; ++k) {
      const double x = 0.35 * k;
      CsvRow r;
      r.n_sites = n;
      r.temperature = x / n;
      r.measure = "eof";
      r.value = std::log(double(n)) / 12.0 + std::exp(-x);
      rows.push_back(r);
    }
  }
  rows.back().norm_kept = 0.5;  // dropped by the norm-loss filter
  write_csv(dir / "in.csv", rows);
  RunConfig c;
  c.output_dir = dir;
  c.collapse.inputs = {(dir / "in.csv").string()};
  const auto result = cmd_collapse(c);
  CHECK(result["residual"].get<double>() < 1e-12);
  CHECK(result["raw_spread"].get<double>() > 0.01);
  CHECK(fs::exists(dir / "collapsed.csv"));
  c.collapse.measure = "negativity";
  CHECK_THROWS_AS(cmd_collapse(c), ConfigError);
}

TEST_CASE("calibration protocol") {
  RunConfig c = small_config(5, "calibrate");
  c.temperatures = {0.1, 0.2, 0.4, 0.6, 1.0};
  c.calibration.m_lptn_candidates = {8, 16, 32};
  c.calibration.m_tto_candidates = {8, 16, 32};
  c.calibration.k0_candidates = {4, 8, 16, 32};
  c.calibration.min_threshold_temperature = 0.5;
  const auto report = cmd_calibrate(c);
  const auto& rec = report["recommendation"];
  CHECK(rec["k0"].get<std::size_t>() <= 32);
  if (!rec["threshold_temperature"].is_null()) CHECK(rec["threshold_temperature"].get<double>() > 0.4);
  CHECK(report["threshold_monotone_in_k0"].get<bool>());
  CHECK_FALSE(report["exhausted"].get<bool>());
  CHECK(fs::exists(c.output_dir / "calibration.json"));

  RunConfig single = small_config(5, "calibrate_single");
  const auto pass = cmd_calibrate(single);
  CHECK(pass["recommendation"]["m_lptn"] == single.m_lptn);
  CHECK(pass["recommendation"]["m_tto"] == single.m_tto);
  CHECK(pass["recommendation"]["k0"] == single.k0);
}

TEST_CASE("shipped configs parse") {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(THERMO_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    CHECK_NOTHROW(load_config(entry.path()));
    ++count;
  }
  CHECK(count >= 5);
}
