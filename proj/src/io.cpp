#include "thermo/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace thermo {

static_assert(std::endian::native == std::endian::little, "the container format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'H', 'E', 'R', 'M', 'T', 'N', '1'};
constexpr int kFormatVersion = 1;

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

void write_bundle(const std::filesystem::path& path, const TensorBundle& bundle) {
  nlohmann::json header;
  header["kind"] = bundle.kind;
  header["version"] = kFormatVersion;
  header["metadata"] = bundle.metadata;
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : bundle.tensors) {
    header["tensors"].push_back({{"shape", t.shape()}, {"labels", t.labels()}});
  }
  const std::string text = header.dump();
  const std::uint64_t len = text.size();

  auto out = open_out(path, std::ios::binary);
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : bundle.tensors) {
    out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(cplx)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

TensorBundle read_bundle(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError(path.string() + ": not a tensor container");
  if (len > (std::uint64_t{1} << 32)) throw IoError(path.string() + ": implausible header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError(path.string() + ": truncated header");

  TensorBundle bundle;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("version").get<int>() != kFormatVersion) throw IoError(path.string() + ": unsupported version");
    bundle.kind = header.at("kind").get<std::string>();
    bundle.metadata = header.value("metadata", nlohmann::json::object());
    for (const auto& entry : header.at("tensors")) {
      DenseTensor t(entry.at("shape").get<Shape>());
      in.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(cplx)));
      if (!in) throw IoError(path.string() + ": truncated payload");
      if (entry.contains("labels")) {
        auto labels = entry.at("labels").get<std::vector<std::string>>();
        if (!labels.empty()) t.set_labels(std::move(labels));
      }
      bundle.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": malformed header: " + e.what());
  }
  return bundle;
}

void save_lptn(const std::filesystem::path& path, const Lptn& state, const nlohmann::json& extra) {
  TensorBundle b;
  b.kind = "lptn";
  b.metadata = extra;
  b.metadata["beta"] = state.beta;
  b.metadata["center"] = state.center;
  b.metadata["log_scale"] = state.log_scale;
  b.metadata["padding"] = {state.padding.left, state.padding.right};
  b.metadata["discarded"] = state.discarded;
  b.tensors = state.sites;
  write_bundle(path, b);
}

Lptn load_lptn(const std::filesystem::path& path, nlohmann::json* metadata) {
  TensorBundle b = read_bundle(path);
  if (b.kind != "lptn") throw IoError(path.string() + ": expected an lptn container, found " + b.kind);
  Lptn state;
  try {
    state.beta = b.metadata.at("beta").get<double>();
    state.center = b.metadata.at("center").get<int>();
    state.log_scale = b.metadata.value("log_scale", 0.0);
    const auto pad = b.metadata.at("padding").get<std::vector<std::size_t>>();
    state.padding = {pad.at(0), pad.at(1)};
    state.discarded = b.metadata.value("discarded", std::vector<double>{});
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": bad lptn metadata: " + e.what());
  }
  for (const auto& t : b.tensors) {
    if (t.rank() != 4) throw IoError(path.string() + ": lptn site tensors must have rank 4");
  }
  state.sites = std::move(b.tensors);
  if (metadata) *metadata = std::move(b.metadata);
  return state;
}

nlohmann::json report_to_json(const ConversionReport& report) {
  return {{"discarded_weights", report.discarded_weights},
          {"norm_kept", report.norm_kept},
          {"bond_extents", report.bond_extents},
          {"wall_seconds", report.wall_seconds}};
}

void save_tto(const std::filesystem::path& path, const Tto& tto, const nlohmann::json& extra) {
  TensorBundle b;
  b.kind = "tto";
  b.metadata = extra;
  b.metadata["beta"] = tto.beta;
  b.metadata["padding"] = {tto.padding.left, tto.padding.right};
  std::vector<std::size_t> sizes;
  for (const auto& layer : tto.layers) {
    sizes.push_back(layer.size());
    b.tensors.insert(b.tensors.end(), layer.begin(), layer.end());
  }
  b.metadata["layer_sizes"] = sizes;
  b.tensors.push_back(tto.root);
  write_bundle(path, b);
}

Tto load_tto(const std::filesystem::path& path, nlohmann::json* metadata) {
  TensorBundle b = read_bundle(path);
  if (b.kind != "tto") throw IoError(path.string() + ": expected a tto container, found " + b.kind);
  Tto tto;
  std::vector<std::size_t> sizes;
  try {
    tto.beta = b.metadata.at("beta").get<double>();
    const auto pad = b.metadata.at("padding").get<std::vector<std::size_t>>();
    tto.padding = {pad.at(0), pad.at(1)};
    sizes = b.metadata.at("layer_sizes").get<std::vector<std::size_t>>();
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": bad tto metadata: " + e.what());
  }
  std::size_t total = 1, expected = std::size_t{1} << sizes.size();
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    total += sizes[i];
    if (sizes[i] != expected) throw IoError(path.string() + ": layer sizes do not form a binary tree");
    expected /= 2;
  }
  if (total != b.tensors.size()) throw IoError(path.string() + ": tensor count does not match layer sizes");
  std::size_t k = 0;
  for (std::size_t s : sizes) {
    tto.layers.emplace_back(b.tensors.begin() + static_cast<std::ptrdiff_t>(k),
                            b.tensors.begin() + static_cast<std::ptrdiff_t>(k + s));
    k += s;
  }
  tto.root = std::move(b.tensors.back());
  if (tto.root.rank() != 3) throw IoError(path.string() + ": root must have rank 3");
  if (metadata) *metadata = std::move(b.metadata);
  return tto;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_csv_row(const CsvRow& r) {
  std::ostringstream os;
  os << r.n_sites << ',' << format_double(r.blockade_radius) << ',' << format_double(r.detuning) << ','
     << format_double(r.temperature) << ',' << r.measure << ',' << format_double(r.value) << ','
     << format_double(r.norm_kept) << ',' << r.k_used << ',' << r.seed << ',' << r.source;
  return os.str();
}

void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows) {
  auto out = open_out(path);
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << format_csv_row(r) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw IoError(path.string() + ": unexpected CSV header");
  std::vector<CsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 10 fields");
    try {
      CsvRow r;
      r.n_sites = std::stoull(f[0]);
      r.blockade_radius = std::stod(f[1]);
      r.detuning = std::stod(f[2]);
      r.temperature = std::stod(f[3]);
      r.measure = f[4];
      r.value = std::stod(f[5]);
      r.norm_kept = std::stod(f[6]);
      r.k_used = std::stoull(f[7]);
      r.seed = std::stoull(f[8]);
      r.source = f[9];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": unparsable field");
    }
  }
  return rows;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace thermo
