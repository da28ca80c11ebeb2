#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermo/io.hpp"
#include "thermo/lptn.hpp"
#include "thermo/measures.hpp"
#include "thermo/rydberg.hpp"
#include "thermo/tto.hpp"

namespace thermo {

inline constexpr const char* kVersion = "0.1.0";

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationConfig {
  std::vector<std::size_t> m_lptn_candidates;
  std::vector<std::size_t> m_tto_candidates;
  std::vector<std::size_t> k0_candidates;
  double energy_rtol = 1e-8;
  double norm_tol = 1e-4;
  double measure_tol = 1e-4;
  double norm_loss_precision = 0.01;
  /// Step 4 moves to the next k0 while the threshold lies below this.
  double min_threshold_temperature = 0.0;
};

struct CollapseConfig {
  std::vector<std::string> inputs;
  std::string measure = "eof";
  double c = 0.5;
  double z = 1.0;
  /// Rows whose 1 − norm_kept exceeds this are dropped.
  double max_norm_loss = 0.01;
};

struct RunConfig {
  RydbergParams model;
  double dbeta_half = 0.05;
  std::size_t m_lptn = 50;
  std::vector<double> temperatures;
  bool include_infinite_temperature = false;
  std::size_t m_tto = 50;
  std::size_t k0 = 100;
  std::vector<std::string> measures{"energy", "purity", "entropy", "negativity", "eof"};
  std::size_t k_keep = 10;
  NelderMeadConfig optimizer;
  std::filesystem::path output_dir = "out";
  std::filesystem::path snapshot_dir;  ///< empty: output_dir
  std::uint64_t seed = 0;
  std::size_t threads = 0;  ///< 0: THERMO_THREADS or the hardware count

  std::vector<double> scan_blockade_radii;
  std::vector<double> scan_detunings;
  std::vector<double> purity_cuts{0.5, 0.9};

  CollapseConfig collapse;
  CalibrationConfig calibration;
  double tolerance = 1e-3;

  /// Snapshot β values, ascending.
  std::vector<double> betas() const;
  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& doc);
};

/// Reads and validates a JSON config; ConfigError on bad content, IoError on a missing file.
RunConfig load_config(const std::filesystem::path& path);

std::size_t resolve_threads(std::size_t requested);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Exceptions are
/// rethrown after all workers stop (lowest index first).
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

struct PipelineSnapshot {
  double beta = 0.0;
  Lptn lptn;
  Tto tto;
  ConversionReport report;
  double lptn_energy = 0.0;
};

/// Imaginary-time evolution from β = 0 through every snapshot, then padding and conversion.
std::vector<PipelineSnapshot> run_pipeline(const RydbergParams& model, const RunConfig& config);

/// Temperature of a snapshot (infinity at β = 0).
double temperature_of(double beta);

/// CSV rows for the requested measures; snapshots must be sorted by ascending β.
/// E_F is swept in ascending T with warm starts.
std::vector<CsvRow> measure_snapshots(const std::vector<Tto>& ttos, const std::vector<ConversionReport>& reports,
                                      const RydbergParams& model, const RunConfig& config, std::uint64_t seed);

nlohmann::json cmd_gibbs(const RunConfig& config);
std::vector<CsvRow> cmd_measure(const RunConfig& config);
nlohmann::json cmd_scan(const RunConfig& config);
nlohmann::json cmd_collapse(const RunConfig& config);
nlohmann::json cmd_calibrate(const RunConfig& config);

struct OracleComparison {
  bool passed = true;
  nlohmann::json report;
};
OracleComparison cmd_oracle_compare(const RunConfig& config, double tolerance);

/// |value − reference| ≤ tol · max(|reference|, 0.1).
bool within_tolerance(double value, double reference, double tol);

/// First temperature (ascending) at which the value drops below `cut`, or NaN.
double threshold_temperature(const std::vector<std::pair<double, double>>& curve, double cut);

}  // namespace thermo
