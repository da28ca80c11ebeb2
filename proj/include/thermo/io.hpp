#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermo/lptn.hpp"
#include "thermo/tensor.hpp"
#include "thermo/tto.hpp"

namespace thermo {

/// Raised for unreadable, unwritable or malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary container: 8-byte magic "THERMTN1", u64 little-endian header
/// length, JSON header, then the tensors' complex doubles (little-endian,
/// real then imaginary) in header order.
struct TensorBundle {
  std::string kind;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<DenseTensor> tensors;
};

void write_bundle(const std::filesystem::path& path, const TensorBundle& bundle);
TensorBundle read_bundle(const std::filesystem::path& path);

void save_lptn(const std::filesystem::path& path, const Lptn& state,
               const nlohmann::json& extra = nlohmann::json::object());
Lptn load_lptn(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

nlohmann::json report_to_json(const ConversionReport& report);
void save_tto(const std::filesystem::path& path, const Tto& tto,
              const nlohmann::json& extra = nlohmann::json::object());
Tto load_tto(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

struct CsvRow {
  std::size_t n_sites = 0;
  double blockade_radius = 0.0;
  double detuning = 0.0;
  double temperature = 0.0;
  std::string measure;
  double value = 0.0;
  double norm_kept = 1.0;
  std::size_t k_used = 0;
  std::uint64_t seed = 0;
  std::string source = "tto";
};

inline constexpr const char* kCsvHeader = "N,blockade_radius,detuning,T,measure,value,norm_kept,k_used,seed,source";

std::string format_csv_row(const CsvRow& row);
void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace thermo
