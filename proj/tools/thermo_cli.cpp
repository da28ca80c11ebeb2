// Command-line front end for the thermal tensor-network pipeline.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "thermo/io.hpp"
#include "thermo/workflows.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kIoError = 3;
constexpr int kOracleFailure = 4;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<double> tolerance;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->required();
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("--threads", o.threads, "worker threads (default: THERMO_THREADS or all cores)");
  cmd->add_option("--tolerance", o.tolerance, "relative tolerance for oracle-compare");
}

thermo::RunConfig resolve(const Options& o) {
  thermo::RunConfig c = thermo::load_config(o.config);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.tolerance) c.tolerance = *o.tolerance;
  c.validate();
  std::filesystem::create_directories(c.output_dir);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-temperature Rydberg chains with tree tensor operators"};
  app.require_subcommand(1);
  Options o;
  auto* gibbs = app.add_subcommand("gibbs", "evolve, convert and store snapshots");
  auto* measure = app.add_subcommand("measure", "measure stored snapshots into a CSV");
  auto* scan = app.add_subcommand("scan", "pipeline over a blockade radius x detuning grid");
  auto* collapse = app.add_subcommand("collapse", "finite-size scaling collapse of measure CSVs");
  auto* calibrate = app.add_subcommand("calibrate", "bond-dimension calibration protocol");
  auto* compare = app.add_subcommand("oracle-compare", "compare the pipeline with exact diagonalization");
  for (auto* cmd : {gibbs, measure, scan, collapse, calibrate, compare}) add_common(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    const thermo::RunConfig config = resolve(o);
    if (*gibbs) {
      const auto manifest = thermo::cmd_gibbs(config);
      for (const auto& s : manifest["snapshots"]) {
        std::cout << "T=" << s["temperature"] << " norm_kept=" << s["conversion"]["norm_kept"]
                  << " energy=" << s["tto_energy"] << '\n';
      }
    } else if (*measure) {
      const auto rows = thermo::cmd_measure(config);
      std::cout << thermo::kCsvHeader << '\n';
      for (const auto& r : rows) std::cout << thermo::format_csv_row(r) << '\n';
    } else if (*scan) {
      const auto summary = thermo::cmd_scan(config);
      std::cout << "scan points: " << summary["points"].size() << '\n';
    } else if (*collapse) {
      const auto result = thermo::cmd_collapse(config);
      std::cout << "residual=" << result["residual"] << " raw_spread=" << result["raw_spread"] << '\n';
    } else if (*calibrate) {
      const auto report = thermo::cmd_calibrate(config);
      std::cout << report["recommendation"].dump() << '\n';
    } else if (*compare) {
      const auto result = thermo::cmd_oracle_compare(config, config.tolerance);
      for (const auto& row : result.report["rows"]) {
        std::cout << (row["passed"].get<bool>() ? "ok   " : "FAIL ") << "T=" << row["temperature"] << ' '
                  << row["observable"].get<std::string>() << " tto=" << row["tto"] << " oracle=" << row["oracle"]
                  << " delta=" << row["delta"] << '\n';
      }
      if (!result.passed) return kOracleFailure;
    }
  } catch (const thermo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const thermo::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
