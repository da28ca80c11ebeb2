#include "thermo/workflows.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "thermo/oracle.hpp"

namespace thermo {

using nlohmann::json;

namespace {

const std::set<std::string> kMeasures{"energy", "purity", "entropy", "renyi2", "negativity", "eof"};

template <typename T>
void read_opt(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::vector<double> RunConfig::betas() const {
  std::vector<double> out;
  if (include_infinite_temperature) out.push_back(0.0);
  for (double t : temperatures) out.push_back(1.0 / t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void RunConfig::validate() const {
  try {
    model.validate();
    optimizer.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!finite_positive(dbeta_half)) throw ConfigError("evolution.dbeta_half must be positive");
  if (m_lptn < 1 || m_tto < 1 || k0 < 1 || k_keep < 1) {
    throw ConfigError("bond dimensions, k0 and k_keep must be >= 1");
  }
  for (double t : temperatures) {
    if (!finite_positive(t)) throw ConfigError("temperatures must be positive and finite");
  }
  for (const auto& m : measures) {
    if (!kMeasures.count(m)) throw ConfigError("unknown measure '" + m + "'");
  }
  for (double r : scan_blockade_radii) {
    if (!finite_positive(r)) throw ConfigError("scan.blockade_radii must be positive");
  }
  for (double d : scan_detunings) {
    if (!std::isfinite(d)) throw ConfigError("scan.detunings must be finite");
  }
  for (double g : purity_cuts) {
    if (!(g > 0.0 && g <= 1.0)) throw ConfigError("scan.purity_cuts must lie in (0, 1]");
  }
  if (!finite_positive(tolerance)) throw ConfigError("tolerance must be positive");
  if (!std::isfinite(collapse.c) || !std::isfinite(collapse.z)) throw ConfigError("collapse.c and z must be finite");
  if (!(collapse.max_norm_loss >= 0.0)) throw ConfigError("collapse.max_norm_loss must be >= 0");
  const auto& cal = calibration;
  for (const auto* list : {&cal.m_lptn_candidates, &cal.m_tto_candidates, &cal.k0_candidates}) {
    for (std::size_t v : *list) {
      if (v < 1) throw ConfigError("calibration candidates must be >= 1");
    }
  }
  if (!(cal.norm_loss_precision > 0.0 && cal.norm_loss_precision < 1.0)) {
    throw ConfigError("calibration.norm_loss_precision must lie in (0, 1)");
  }
}

json RunConfig::to_json() const {
  json doc;
  doc["model"] = {{"n_sites", model.n_sites},
                  {"blockade_radius", model.blockade_radius},
                  {"detuning", model.detuning},
                  {"interaction_range", model.interaction_range}};
  doc["evolution"] = {{"dbeta_half", dbeta_half},
                      {"m_lptn", m_lptn},
                      {"temperatures", temperatures},
                      {"include_infinite_temperature", include_infinite_temperature}};
  doc["conversion"] = {{"m_tto", m_tto}, {"k0", k0}};
  doc["measures"] = {{"list", measures},
                     {"k_keep", k_keep},
                     {"optimizer",
                      {{"alpha", optimizer.alpha},
                       {"tolerance", optimizer.tolerance},
                       {"max_evaluations", optimizer.max_evaluations},
                       {"restarts", optimizer.restarts}}}};
  doc["output_dir"] = output_dir.string();
  doc["snapshot_dir"] = snapshot_dir.string();
  doc["seed"] = seed;
  doc["threads"] = threads;
  doc["scan"] = {{"blockade_radii", scan_blockade_radii}, {"detunings", scan_detunings}, {"purity_cuts", purity_cuts}};
  doc["collapse"] = {{"inputs", collapse.inputs},
                     {"measure", collapse.measure},
                     {"c", collapse.c},
                     {"z", collapse.z},
                     {"max_norm_loss", collapse.max_norm_loss}};
  doc["calibration"] = {{"m_lptn_candidates", calibration.m_lptn_candidates},
                        {"m_tto_candidates", calibration.m_tto_candidates},
                        {"k0_candidates", calibration.k0_candidates},
                        {"energy_rtol", calibration.energy_rtol},
                        {"norm_tol", calibration.norm_tol},
                        {"measure_tol", calibration.measure_tol},
                        {"norm_loss_precision", calibration.norm_loss_precision},
                        {"min_threshold_temperature", calibration.min_threshold_temperature}};
  doc["tolerance"] = tolerance;
  return doc;
}

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig c;
  try {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(doc,
                   {"model", "evolution", "conversion", "measures", "output_dir", "snapshot_dir", "seed", "threads",
                    "scan", "collapse", "calibration", "tolerance"},
                   "config");
    if (doc.contains("model")) {
      const auto& m = doc.at("model");
      reject_unknown(m, {"n_sites", "blockade_radius", "detuning", "interaction_range"}, "model");
      read_opt(m, "n_sites", c.model.n_sites);
      read_opt(m, "blockade_radius", c.model.blockade_radius);
      read_opt(m, "detuning", c.model.detuning);
      read_opt(m, "interaction_range", c.model.interaction_range);
    }
    if (doc.contains("evolution")) {
      const auto& e = doc.at("evolution");
      reject_unknown(e, {"dbeta_half", "m_lptn", "temperatures", "include_infinite_temperature"}, "evolution");
      read_opt(e, "dbeta_half", c.dbeta_half);
      read_opt(e, "m_lptn", c.m_lptn);
      read_opt(e, "temperatures", c.temperatures);
      read_opt(e, "include_infinite_temperature", c.include_infinite_temperature);
    }
    if (doc.contains("conversion")) {
      const auto& v = doc.at("conversion");
      reject_unknown(v, {"m_tto", "k0"}, "conversion");
      read_opt(v, "m_tto", c.m_tto);
      read_opt(v, "k0", c.k0);
    }
    if (doc.contains("measures")) {
      const auto& m = doc.at("measures");
      reject_unknown(m, {"list", "k_keep", "optimizer"}, "measures");
      read_opt(m, "list", c.measures);
      read_opt(m, "k_keep", c.k_keep);
      if (m.contains("optimizer")) {
        const auto& o = m.at("optimizer");
        reject_unknown(o, {"alpha", "tolerance", "max_evaluations", "restarts"}, "measures.optimizer");
        read_opt(o, "alpha", c.optimizer.alpha);
        read_opt(o, "tolerance", c.optimizer.tolerance);
        read_opt(o, "max_evaluations", c.optimizer.max_evaluations);
        read_opt(o, "restarts", c.optimizer.restarts);
      }
    }
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
    if (doc.contains("snapshot_dir")) c.snapshot_dir = doc.at("snapshot_dir").get<std::string>();
    read_opt(doc, "seed", c.seed);
    read_opt(doc, "threads", c.threads);
    read_opt(doc, "tolerance", c.tolerance);
    if (doc.contains("scan")) {
      const auto& s = doc.at("scan");
      reject_unknown(s, {"blockade_radii", "detunings", "purity_cuts"}, "scan");
      read_opt(s, "blockade_radii", c.scan_blockade_radii);
      read_opt(s, "detunings", c.scan_detunings);
      read_opt(s, "purity_cuts", c.purity_cuts);
    }
    if (doc.contains("collapse")) {
      const auto& s = doc.at("collapse");
      reject_unknown(s, {"inputs", "measure", "c", "z", "max_norm_loss"}, "collapse");
      read_opt(s, "inputs", c.collapse.inputs);
      read_opt(s, "measure", c.collapse.measure);
      read_opt(s, "c", c.collapse.c);
      read_opt(s, "z", c.collapse.z);
      read_opt(s, "max_norm_loss", c.collapse.max_norm_loss);
    }
    if (doc.contains("calibration")) {
      const auto& s = doc.at("calibration");
      reject_unknown(s,
                     {"m_lptn_candidates", "m_tto_candidates", "k0_candidates", "energy_rtol", "norm_tol",
                      "measure_tol", "norm_loss_precision", "min_threshold_temperature"},
                     "calibration");
      auto& cal = c.calibration;
      read_opt(s, "m_lptn_candidates", cal.m_lptn_candidates);
      read_opt(s, "m_tto_candidates", cal.m_tto_candidates);
      read_opt(s, "k0_candidates", cal.k0_candidates);
      read_opt(s, "energy_rtol", cal.energy_rtol);
      read_opt(s, "norm_tol", cal.norm_tol);
      read_opt(s, "measure_tol", cal.measure_tol);
      read_opt(s, "norm_loss_precision", cal.norm_loss_precision);
      read_opt(s, "min_threshold_temperature", cal.min_threshold_temperature);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return RunConfig::from_json(doc);
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("THERMO_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double temperature_of(double beta) {
  return beta > 0.0 ? 1.0 / beta : std::numeric_limits<double>::infinity();
}

namespace {

std::vector<Snapshot> evolve(const RydbergParams& model, const RunConfig& config, std::size_t m_lptn) {
  EvolutionConfig ec;
  ec.dbeta_half = config.dbeta_half;
  ec.max_bond = m_lptn;
  ec.snapshot_betas = config.betas();
  if (ec.snapshot_betas.empty()) throw ConfigError("no snapshot temperatures configured");
  return imaginary_time_evolve(infinite_temperature_state(model.n_sites), model, ec);
}

}  // namespace

std::vector<PipelineSnapshot> run_pipeline(const RydbergParams& model, const RunConfig& config) {
  const Mpo h = build_mpo(model);
  std::vector<PipelineSnapshot> out;
  for (auto& snap : evolve(model, config, config.m_lptn)) {
    PipelineSnapshot p;
    p.beta = snap.beta;
    p.lptn_energy = expectation_mpo(snap.state, h);
    auto [tto, report] = lptn_to_tto(pad_to_power_of_two(snap.state), config.m_tto, config.k0);
    p.tto = std::move(tto);
    p.report = std::move(report);
    p.lptn = std::move(snap.state);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<CsvRow> measure_snapshots(const std::vector<Tto>& ttos, const std::vector<ConversionReport>& reports,
                                      const RydbergParams& model, const RunConfig& config, std::uint64_t seed) {
  const Mpo h = build_mpo(model);
  const std::size_t n = ttos.size();
  std::vector<std::vector<CsvRow>> table(n);
  auto base_row = [&](std::size_t i, const std::string& measure, double value, std::size_t k_used) {
    CsvRow r;
    r.n_sites = model.n_sites;
    r.blockade_radius = model.blockade_radius;
    r.detuning = model.detuning;
    r.temperature = temperature_of(ttos[i].beta);
    r.measure = measure;
    r.value = value;
    r.norm_kept = reports[i].norm_kept;
    r.k_used = k_used;
    r.seed = seed;
    return r;
  };
  std::vector<CsvRow> eof_rows(n);
  if (std::find(config.measures.begin(), config.measures.end(), "eof") != config.measures.end()) {
    // Ascending T is descending β; each point warm-starts from the previous optimum.
    std::optional<CMatrix> warm;
    for (std::size_t i = n; i-- > 0;) {
      NelderMeadConfig opt = config.optimizer;
      opt.seed = mix_seed(seed, i);
      const EofRoot root = eof_root(ttos[i], config.k_keep);
      const EofResult res = minimize_eof(root, opt, warm);
      warm = res.unitary;
      eof_rows[i] = base_row(i, "eof", res.value, root.kept());
      eof_rows[i].seed = opt.seed;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const ThermalSpectrum spec = spectrum(ttos[i]);
    for (const auto& m : config.measures) {
      if (m == "energy") table[i].push_back(base_row(i, m, tto_energy(ttos[i], h), spec.kept_states));
      if (m == "purity") table[i].push_back(base_row(i, m, purity(spec), spec.kept_states));
      if (m == "entropy") table[i].push_back(base_row(i, m, entropy(spec, 1.0), spec.kept_states));
      if (m == "renyi2") table[i].push_back(base_row(i, m, entropy(spec, 2.0), spec.kept_states));
      if (m == "negativity") table[i].push_back(base_row(i, m, negativity(ttos[i]), spec.kept_states));
      if (m == "eof") table[i].push_back(eof_rows[i]);
    }
  }
  std::vector<CsvRow> rows;
  for (auto& t : table) rows.insert(rows.end(), t.begin(), t.end());
  return rows;
}

namespace {

json model_json(const RydbergParams& m) {
  return {{"n_sites", m.n_sites},
          {"blockade_radius", m.blockade_radius},
          {"detuning", m.detuning},
          {"interaction_range", m.interaction_range}};
}

json report_summary(const ConversionReport& r) {
  double worst = 0.0;
  for (double w : r.discarded_weights) worst = std::max(worst, w);
  return {{"norm_kept", r.norm_kept},
          {"max_discarded_weight", worst},
          {"truncations", r.discarded_weights.size()},
          {"bond_extents", r.bond_extents},
          {"wall_seconds", r.wall_seconds}};
}

json temperature_json(double beta) {
  return beta > 0.0 ? json(1.0 / beta) : json("inf");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::filesystem::path snapshot_dir(const RunConfig& config) {
  return config.snapshot_dir.empty() ? config.output_dir : config.snapshot_dir;
}

}  // namespace

json cmd_gibbs(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const auto snaps = run_pipeline(config.model, config);
  const Mpo h = build_mpo(config.model);
  json manifest;
  manifest["command"] = "gibbs";
  manifest["version"] = kVersion;
  manifest["config"] = config.to_json();
  manifest["seed"] = config.seed;
  manifest["snapshots"] = json::array();
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const auto& s = snaps[i];
    const std::string lptn_file = "snapshot_" + std::to_string(i) + "_lptn.bin";
    const std::string tto_file = "snapshot_" + std::to_string(i) + "_tto.bin";
    const json extra = {{"model", model_json(config.model)}, {"report", report_to_json(s.report)}};
    save_lptn(config.output_dir / lptn_file, s.lptn, extra);
    save_tto(config.output_dir / tto_file, s.tto, extra);
    const TopSplit split = top_split(s.tto);
    double evolution_discarded = 0.0;
    for (double w : s.lptn.discarded) evolution_discarded += w;
    manifest["snapshots"].push_back({{"beta", s.beta},
                                     {"temperature", temperature_json(s.beta)},
                                     {"lptn_file", lptn_file},
                                     {"tto_file", tto_file},
                                     {"lptn_energy", s.lptn_energy},
                                     {"tto_energy", tto_energy(s.tto, h)},
                                     {"lptn_max_bond", s.lptn.max_bond()},
                                     {"evolution_discarded_weight", evolution_discarded},
                                     {"padding", {s.tto.padding.left, s.tto.padding.right}},
                                     {"top_split", {{split.left_first, split.left_last},
                                                    {split.right_first, split.right_last}}},
                                     {"conversion", report_summary(s.report)}});
  }
  manifest["timing"] = {{"total_seconds", seconds_since(start)}};
  write_json(config.output_dir / "manifest.json", manifest);
  return manifest;
}

std::vector<CsvRow> cmd_measure(const RunConfig& config) {
  const auto dir = snapshot_dir(config);
  const json manifest = read_json(dir / "manifest.json");
  RunConfig run = config;
  std::vector<Tto> ttos;
  std::vector<ConversionReport> reports;
  try {
    run.model = RunConfig::from_json(manifest.at("config")).model;
    for (const auto& entry : manifest.at("snapshots")) {
      json meta;
      ttos.push_back(load_tto(dir / entry.at("tto_file").get<std::string>(), &meta));
      ConversionReport r;
      r.norm_kept = meta.at("report").at("norm_kept").get<double>();
      reports.push_back(r);
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
  std::vector<std::size_t> order(ttos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ttos[a].beta < ttos[b].beta; });
  std::vector<Tto> sorted_ttos;
  std::vector<ConversionReport> sorted_reports;
  for (std::size_t i : order) {
    sorted_ttos.push_back(std::move(ttos[i]));
    sorted_reports.push_back(reports[i]);
  }
  const auto rows = measure_snapshots(sorted_ttos, sorted_reports, run.model, run, run.seed);
  write_csv(config.output_dir / "measures.csv", rows);
  return rows;
}

double threshold_temperature(const std::vector<std::pair<double, double>>& curve, double cut) {
  for (const auto& [t, v] : curve) {
    if (v < cut) return t;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

json cmd_scan(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> radii = config.scan_blockade_radii, detunings = config.scan_detunings;
  if (radii.empty()) radii.push_back(config.model.blockade_radius);
  if (detunings.empty()) detunings.push_back(config.model.detuning);
  struct Point {
    RydbergParams model;
    std::uint64_t seed = 0;
    std::vector<CsvRow> rows;
    std::vector<std::pair<double, double>> purity_curve;
    std::vector<double> norm_kept;
  };
  std::vector<Point> points;
  for (double r : radii) {
    for (double d : detunings) {
      Point p;
      p.model = config.model;
      p.model.blockade_radius = r;
      p.model.detuning = d;
      p.seed = mix_seed(config.seed, points.size());
      points.push_back(std::move(p));
    }
  }
  parallel_for(points.size(), resolve_threads(config.threads), [&](std::size_t i) {
    Point& p = points[i];
    const auto snaps = run_pipeline(p.model, config);
    std::vector<Tto> ttos;
    std::vector<ConversionReport> reports;
    for (const auto& s : snaps) {
      ttos.push_back(s.tto);
      reports.push_back(s.report);
      if (s.beta > 0.0) p.purity_curve.emplace_back(1.0 / s.beta, purity(spectrum(s.tto)));
    }
    std::sort(p.purity_curve.begin(), p.purity_curve.end());
    p.rows = measure_snapshots(ttos, reports, p.model, config, p.seed);
  });

  std::vector<CsvRow> rows;
  json summary;
  summary["command"] = "scan";
  summary["version"] = kVersion;
  summary["config"] = config.to_json();
  summary["points"] = json::array();
  std::ostringstream thresholds;
  thresholds << "blockade_radius,detuning,gamma_cut,threshold_T,determined\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    rows.insert(rows.end(), p.rows.begin(), p.rows.end());
    json entry = {{"index", i},
                  {"blockade_radius", p.model.blockade_radius},
                  {"detuning", p.model.detuning},
                  {"seed", p.seed},
                  {"thresholds", json::array()}};
    for (double cut : config.purity_cuts) {
      const double t = threshold_temperature(p.purity_curve, cut);
      const bool determined = std::isfinite(t);
      thresholds << format_double(p.model.blockade_radius) << ',' << format_double(p.model.detuning) << ','
                 << format_double(cut) << ',' << (determined ? format_double(t) : "") << ','
                 << (determined ? "true" : "undetermined") << '\n';
      entry["thresholds"].push_back(
          {{"gamma_cut", cut}, {"threshold_T", determined ? json(t) : json(nullptr)}, {"determined", determined}});
    }
    summary["points"].push_back(std::move(entry));
  }
  write_csv(config.output_dir / "scan.csv", rows);
  {
    std::ofstream out(config.output_dir / "thresholds.csv");
    out << thresholds.str();
    if (!out) throw IoError("cannot write thresholds.csv");
  }
  summary["timing"] = {{"total_seconds", seconds_since(start)}};
  write_json(config.output_dir / "scan_manifest.json", summary);
  return summary;
}

json cmd_collapse(const RunConfig& config) {
  const auto& cc = config.collapse;
  if (cc.inputs.empty()) throw ConfigError("collapse.inputs is empty");
  std::map<std::size_t, ScalingCurve> by_n;
  for (const auto& input : cc.inputs) {
    for (const auto& row : read_csv(input)) {
      if (row.measure != cc.measure || row.source != "tto") continue;
      if (!std::isfinite(row.temperature) || 1.0 - row.norm_kept > cc.max_norm_loss) continue;
      auto& curve = by_n[row.n_sites];
      curve.n_sites = row.n_sites;
      curve.measure = row.measure;
      curve.points.emplace_back(row.temperature, row.value);
    }
  }
  std::vector<ScalingCurve> curves;
  for (auto& [n, curve] : by_n) {
    std::sort(curve.points.begin(), curve.points.end());
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      if (curve.points[i].first == curve.points[i - 1].first) {
        throw ConfigError("collapse: duplicate temperature for N=" + std::to_string(n));
      }
    }
    curves.push_back(std::move(curve));
  }
  if (curves.empty()) throw ConfigError("collapse: no rows for measure '" + cc.measure + "'");
  CollapseResult scaled, raw;
  try {
    scaled = collapse(curves, cc.c, cc.z);
    raw = collapse(curves, 0.0, 0.0);
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  {
    std::ofstream out(config.output_dir / "collapsed.csv");
    if (!out) throw IoError("cannot write collapsed.csv");
    out << "N,measure,T,x,y\n";
    for (std::size_t k = 0; k < curves.size(); ++k) {
      for (std::size_t j = 0; j < curves[k].points.size(); ++j) {
        out << curves[k].n_sites << ',' << cc.measure << ',' << format_double(curves[k].points[j].first) << ','
            << format_double(scaled.transformed[k].points[j].first) << ','
            << format_double(scaled.transformed[k].points[j].second) << '\n';
      }
    }
  }
  json result = {{"command", "collapse"},
                 {"version", kVersion},
                 {"measure", cc.measure},
                 {"c", cc.c},
                 {"z", cc.z},
                 {"residual", scaled.residual},
                 {"raw_spread", raw.residual},
                 {"ratio", raw.residual > 0.0 ? json(scaled.residual / raw.residual) : json(nullptr)},
                 {"curves", json::array()}};
  for (const auto& c : curves) result["curves"].push_back({{"n_sites", c.n_sites}, {"points", c.points.size()}});
  write_json(config.output_dir / "collapse.json", result);
  return result;
}

namespace {

double max_relative_change(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), 1e-300));
  }
  return worst;
}

double max_abs_change(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::vector<std::size_t> sorted_or(std::vector<std::size_t> list, std::size_t fallback) {
  if (list.empty()) list.push_back(fallback);
  std::sort(list.begin(), list.end());
  list.erase(std::unique(list.begin(), list.end()), list.end());
  return list;
}

struct Conversion {
  std::vector<Tto> ttos;
  std::vector<double> norm_kept;
};

Conversion convert_all(const std::vector<Snapshot>& snaps, std::size_t m_tto, std::size_t k0) {
  Conversion c;
  for (const auto& s : snaps) {
    auto [tto, report] = lptn_to_tto(pad_to_power_of_two(s.state), m_tto, k0);
    c.ttos.push_back(std::move(tto));
    c.norm_kept.push_back(report.norm_kept);
  }
  return c;
}

// Snapshot indices are ascending β; the threshold scan runs over ascending T.
double norm_loss_threshold(const std::vector<Snapshot>& snaps, const std::vector<double>& norm_kept,
                           double precision) {
  for (std::size_t i = snaps.size(); i-- > 0;) {
    if (snaps[i].beta > 0.0 && 1.0 - norm_kept[i] > precision) return 1.0 / snaps[i].beta;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json cmd_calibrate(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cal = config.calibration;
  const auto m_lptn_list = sorted_or(cal.m_lptn_candidates, config.m_lptn);
  const auto m_tto_list = sorted_or(cal.m_tto_candidates, config.m_tto);
  const auto k0_list = sorted_or(cal.k0_candidates, config.k0);
  const Mpo h = build_mpo(config.model);
  json report;
  report["command"] = "calibrate";
  report["version"] = kVersion;
  report["config"] = config.to_json();

  // Step 1: LPTN bond dimension from energy convergence over the T grid.
  std::vector<Snapshot> chosen_snaps;
  std::vector<double> previous;
  std::size_t m_lptn = m_lptn_list.back();
  bool lptn_converged = false;
  json step1 = json::array();
  std::vector<std::vector<Snapshot>> runs;
  for (std::size_t idx = 0; idx < m_lptn_list.size(); ++idx) {
    runs.push_back(evolve(config.model, config, m_lptn_list[idx]));
    std::vector<double> energies;
    for (const auto& s : runs.back()) energies.push_back(expectation_mpo(s.state, h));
    json entry = {{"m_lptn", m_lptn_list[idx]}, {"energies", energies}};
    if (!previous.empty()) {
      const double change = max_relative_change(energies, previous);
      entry["max_relative_change"] = change;
      if (change < cal.energy_rtol && !lptn_converged) {
        lptn_converged = true;
        m_lptn = m_lptn_list[idx - 1];
        chosen_snaps = runs[idx - 1];
      }
    }
    step1.push_back(std::move(entry));
    previous = std::move(energies);
    if (lptn_converged) break;
  }
  if (!lptn_converged) chosen_snaps = runs.back();
  report["step1"] = {{"runs", step1}, {"m_lptn", m_lptn}, {"converged", lptn_converged}};

  // Steps 2–4 for every k0 candidate; the recommendation is the first whose
  // threshold clears the requested minimum.
  json per_k0 = json::array();
  json recommendation;
  std::vector<double> thresholds;
  for (std::size_t k0 : k0_list) {
    std::size_t m_tto = m_tto_list.back();
    bool tto_converged = false;
    std::vector<Conversion> convs;
    json step2 = json::array();
    for (std::size_t idx = 0; idx < m_tto_list.size(); ++idx) {
      convs.push_back(convert_all(chosen_snaps, m_tto_list[idx], k0));
      json entry = {{"m_tto", m_tto_list[idx]}, {"norm_kept", convs.back().norm_kept}};
      if (idx > 0) {
        const double change = max_abs_change(convs[idx].norm_kept, convs[idx - 1].norm_kept);
        entry["max_change"] = change;
        if (change < cal.norm_tol) {
          tto_converged = true;
          m_tto = m_tto_list[idx - 1];
        }
      }
      step2.push_back(std::move(entry));
      if (tto_converged) break;
    }
    const std::size_t chosen = tto_converged ? convs.size() - 2 : convs.size() - 1;
    const double threshold = norm_loss_threshold(chosen_snaps, convs[chosen].norm_kept, cal.norm_loss_precision);
    thresholds.push_back(std::isfinite(threshold) ? threshold : std::numeric_limits<double>::infinity());

    // Step 5: measures below the threshold compared against the next m_tto.
    json step5 = {{"tested", false}};
    if (chosen + 1 < convs.size()) {
      double worst = 0.0;
      for (std::size_t i = 0; i < chosen_snaps.size(); ++i) {
        const double t = temperature_of(chosen_snaps[i].beta);
        if (std::isfinite(threshold) && t >= threshold) continue;
        const Tto& a = convs[chosen].ttos[i];
        const Tto& b = convs[chosen + 1].ttos[i];
        worst = std::max({worst, std::abs(purity(spectrum(a)) - purity(spectrum(b))),
                          std::abs(negativity(a) - negativity(b))});
      }
      step5 = {{"tested", true}, {"max_change", worst}, {"converged", worst < cal.measure_tol}};
    }
    const bool acceptable = !std::isfinite(threshold) || threshold >= cal.min_threshold_temperature;
    per_k0.push_back({{"k0", k0},
                      {"step2", step2},
                      {"m_tto", m_tto},
                      {"m_tto_converged", tto_converged},
                      {"threshold_temperature", nullable(threshold)},
                      {"threshold_determined", std::isfinite(threshold)},
                      {"step5", step5},
                      {"acceptable", acceptable}});
    if (recommendation.is_null() && acceptable) {
      recommendation = {{"m_lptn", m_lptn}, {"m_tto", m_tto}, {"k0", k0}, {"threshold_temperature", nullable(threshold)},
                        {"measures_converged", step5.value("converged", false)}};
    }
  }
  report["per_k0"] = per_k0;
  bool monotone = true;
  for (std::size_t i = 1; i < thresholds.size(); ++i) monotone = monotone && thresholds[i] >= thresholds[i - 1];
  report["threshold_monotone_in_k0"] = monotone;
  report["exhausted"] = recommendation.is_null();
  if (recommendation.is_null()) {
    const auto& last = per_k0.back();
    recommendation = {{"m_lptn", m_lptn}, {"m_tto", last["m_tto"]}, {"k0", last["k0"]},
                      {"threshold_temperature", last["threshold_temperature"]}, {"measures_converged", false}};
  }
  report["recommendation"] = recommendation;
  report["timing"] = {{"total_seconds", seconds_since(start)}};
  write_json(config.output_dir / "calibration.json", report);
  return report;
}

bool within_tolerance(double value, double reference, double tol) {
  return std::abs(value - reference) <= tol * std::max(std::abs(reference), 0.1);
}

OracleComparison cmd_oracle_compare(const RunConfig& config, double tolerance) {
  if (config.model.n_sites > 10) throw ConfigError("oracle-compare supports at most 10 sites");
  if (config.model.n_sites < 2) throw ConfigError("oracle-compare needs at least 2 sites");
  const auto snaps = run_pipeline(config.model, config);
  const CMatrix h = build_dense(config.model);
  const Mpo mpo = build_mpo(config.model);
  OracleComparison out;
  json rows = json::array();
  std::vector<CsvRow> csv;
  for (const auto& s : snaps) {
    CMatrix rho;
    if (s.beta > 0.0) {
      rho = gibbs(h, 1.0 / s.beta).rho;
    } else {
      rho = CMatrix::Identity(h.rows(), h.cols()) / static_cast<double>(h.rows());
    }
    const TopSplit split = top_split(s.tto);
    const ThermalSpectrum spec = spectrum(s.tto);
    const std::vector<std::tuple<std::string, double, double>> obs{
        {"energy", tto_energy(s.tto, mpo), exact_energy(rho, h)},
        {"purity", purity(spec), exact_purity(rho)},
        {"negativity", negativity(s.tto), exact_negativity(rho, split.left_last)}};
    for (const auto& [name, value, ref] : obs) {
      const bool ok = within_tolerance(value, ref, tolerance);
      out.passed = out.passed && ok;
      rows.push_back({{"temperature", temperature_json(s.beta)},
                      {"observable", name},
                      {"tto", value},
                      {"oracle", ref},
                      {"delta", value - ref},
                      {"passed", ok},
                      {"norm_kept", s.report.norm_kept}});
      for (const bool oracle : {false, true}) {
        CsvRow r;
        r.n_sites = config.model.n_sites;
        r.blockade_radius = config.model.blockade_radius;
        r.detuning = config.model.detuning;
        r.temperature = temperature_of(s.beta);
        r.measure = name;
        r.value = oracle ? ref : value;
        r.norm_kept = oracle ? 1.0 : s.report.norm_kept;
        r.k_used = oracle ? static_cast<std::size_t>(h.rows()) : spec.kept_states;
        r.seed = config.seed;
        r.source = oracle ? "oracle" : "tto";
        csv.push_back(std::move(r));
      }
    }
  }
  out.report = {{"command", "oracle-compare"},
                {"version", kVersion},
                {"config", config.to_json()},
                {"tolerance", tolerance},
                {"passed", out.passed},
                {"rows", rows}};
  write_json(config.output_dir / "oracle_compare.json", out.report);
  write_csv(config.output_dir / "oracle_compare.csv", csv);
  return out;
}

}  // namespace thermo
