#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "thermo/io.hpp"

using namespace thermo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "thermo_test_io";
  fs::create_directories(dir);
  return dir / name;
}

Lptn sample_state() {
  RydbergParams p;
  p.n_sites = 5;
  p.blockade_radius = 1.14;
  p.detuning = 2.9;
  EvolutionConfig c;
  c.dbeta_half = 0.05;
  c.max_bond = 16;
  c.snapshot_betas = {1.0};
  return imaginary_time_evolve(infinite_temperature_state(5), p, c).back().state;
}

}  // namespace

TEST_CASE("LPTN round trip is bit exact") {
  const Lptn s = sample_state();
  const fs::path path = scratch("state.bin");
  save_lptn(path, s, {{"note", "x"}});
  nlohmann::json meta;
  const Lptn back = load_lptn(path, &meta);
  CHECK(meta.at("note") == "x");
  CHECK(back.beta == s.beta);
  CHECK(back.center == s.center);
  CHECK(back.log_scale == s.log_scale);
  CHECK(back.discarded == s.discarded);
  REQUIRE(back.n_sites() == s.n_sites());
  for (std::size_t i = 0; i < s.n_sites(); ++i) {
    CHECK(back.sites[i].shape() == s.sites[i].shape());
    CHECK(distance(back.sites[i], s.sites[i]) == 0.0);
  }
}

TEST_CASE("TTO round trip is bit exact") {
  const auto [t, report] = lptn_to_tto(pad_to_power_of_two(sample_state()), 8, 6);
  const fs::path path = scratch("tree.bin");
  save_tto(path, t, {{"report", report_to_json(report)}});
  nlohmann::json meta;
  const Tto back = load_tto(path, &meta);
  CHECK(meta.at("report").at("norm_kept").get<double>() == report.norm_kept);
  CHECK(back.padding.left == t.padding.left);
  CHECK(back.padding.right == t.padding.right);
  REQUIRE(back.layers.size() == t.layers.size());
  for (std::size_t l = 0; l < t.layers.size(); ++l)
    for (std::size_t j = 0; j < t.layers[l].size(); ++j) CHECK(distance(back.layers[l][j], t.layers[l][j]) == 0.0);
  CHECK(distance(back.root, t.root) == 0.0);
  CHECK_THROWS_AS(load_lptn(path), IoError);
}

TEST_CASE("corrupt containers are rejected") {
  CHECK_THROWS_AS(read_bundle(scratch("missing.bin")), IoError);
  {
    std::ofstream out(scratch("junk.bin"), std::ios::binary);
    out << "NOTMAGIC and more";
  }
  CHECK_THROWS_AS(read_bundle(scratch("junk.bin")), IoError);
  TensorBundle b;
  b.kind = "raw";
  b.tensors.push_back(DenseTensor({3, 3}));
  write_bundle(scratch("cut.bin"), b);
  fs::resize_file(scratch("cut.bin"), fs::file_size(scratch("cut.bin")) - 8);
  CHECK_THROWS_AS(read_bundle(scratch("cut.bin")), IoError);
}

TEST_CASE("CSV round trip preserves doubles exactly") {
  std::vector<CsvRow> rows(2);
  rows[0] = {13, 1.142, 2.9, 0.1 + 0.2, "eof", 1.0 / 3.0, 0.999999999, 10, 18446744073709551615ull, "tto"};
  rows[1] = {8, 1.2, 1.0, std::numeric_limits<double>::infinity(), "purity", 0.125, 1.0, 256, 0, "oracle"};
  const fs::path path = scratch("rows.csv");
  write_csv(path, rows);
  const auto back = read_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].temperature == rows[0].temperature);
  CHECK(back[0].value == rows[0].value);
  CHECK(back[0].seed == rows[0].seed);
  CHECK(std::isinf(back[1].temperature));
  CHECK(back[1].source == "oracle");
  CHECK(format_csv_row(back[0]) == format_csv_row(rows[0]));
  {
    std::ofstream out(scratch("bad.csv"));
    out << "a,b\n1,2\n";
  }
  CHECK_THROWS_AS(read_csv(scratch("bad.csv")), IoError);
  {
    std::ofstream out(scratch("short.csv"));
    out << kCsvHeader << "\n1,2,3\n";
  }
  CHECK_THROWS_AS(read_csv(scratch("short.csv")), IoError);
}

TEST_CASE("JSON helpers") {
  write_json(scratch("doc.json"), {{"a", 1}});
  CHECK(read_json(scratch("doc.json")).at("a") == 1);
  {
    std::ofstream out(scratch("broken.json"));
    out << "{";
  }
  CHECK_THROWS_AS(read_json(scratch("broken.json")), IoError);
}
