// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include "bumphunt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <omp.h>

namespace bumphunt {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kManifestTag = "# bumphunt manifest";
constexpr std::string_view kFitTag = "bumphunt_fit";
constexpr int kManifestVersion = 1;
constexpr int kFitVersion = 1;

std::string sanitize(std::string text) {
  for (char& c : text) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw std::invalid_argument("config key '" + std::string(key) + "': expected a boolean, got '" + std::string(text) +
                              "'");
}

int to_int(std::string_view key, std::string_view text) {
  try {
    return static_cast<int>(parse_integer(text));
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("config key '" + std::string(key) + "': expected an integer, got '" +
                                std::string(text) + "'");
  }
}

double to_real(std::string_view key, std::string_view text) {
  try {
    return parse_double(text);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("config key '" + std::string(key) + "': expected a number, got '" +
                                std::string(text) + "'");
  }
}

Range to_range(std::string_view key, std::string_view text) {
  const auto parts = split_whitespace(text);
  if (parts.size() != 2) {
    throw std::invalid_argument("config key '" + std::string(key) + "': expected 'lo hi', got '" + std::string(text) +
                                "'");
  }
  return {to_real(key, parts[0]), to_real(key, parts[1])};
}

std::string join_vector(const Eigen::VectorXd& v, char sep) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += sep;
    out += format_double(v(i));
  }
  return out;
}

CurveStatus status_from(const RobustFit& fit) {
  switch (fit.status) {
    case FitStatus::ok: return fit.converged ? CurveStatus::ok : CurveStatus::not_converged;
    case FitStatus::insufficient_data: return CurveStatus::insufficient_data;
    case FitStatus::degenerate: return CurveStatus::degenerate;
    case FitStatus::numerical_failure: return CurveStatus::numerical_failure;
  }
  return CurveStatus::numerical_failure;
}

void ensure_columns(const Table& table, std::initializer_list<std::string_view> names, std::string_view what) {
  for (auto name : names) {
    if (!table.has_column(name)) {
      throw std::invalid_argument(std::string(what) + ": missing column '" + std::string(name) + "'");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

void CatalogManifest::validate() const {
  if (version != kManifestVersion) throw std::invalid_argument("unsupported manifest version " + std::to_string(version));
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (e.source_id.empty()) throw std::invalid_argument("manifest: empty source_id");
    if (!seen.insert(e.source_id).second) throw std::invalid_argument("manifest: duplicate source_id " + e.source_id);
    if (!fs::exists(e.path)) throw std::invalid_argument("manifest: missing file " + e.path.string());
  }
}

CatalogManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::string first;
  std::getline(in, first);
  const auto tag = trim(first);
  if (tag.substr(0, kManifestTag.size()) != kManifestTag) {
    throw std::invalid_argument("manifest " + path.string() + ": missing '" + std::string(kManifestTag) + "' line");
  }
  CatalogManifest m;
  m.version = static_cast<int>(parse_integer(tag.substr(kManifestTag.size())));
  const Table t = read_table(in);
  ensure_columns(t, {"source_id", "field_id", "path"}, "manifest");
  const auto cs = t.column("source_id");
  const auto cf = t.column("field_id");
  const auto cp = t.column("path");
  const fs::path base = path.parent_path();
  for (const auto& row : t.rows) {
    fs::path p = row.at(cp);
    if (p.is_relative()) p = base / p;
    m.entries.push_back({row.at(cs), row.at(cf), p});
  }
  return m;
}

void write_manifest(const CatalogManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << kManifestTag << ' ' << manifest.version << '\n';
  Table t;
  t.header = {"source_id", "field_id", "path"};
  const fs::path base = path.parent_path();
  for (const auto& e : manifest.entries) {
    fs::path p = e.path;
    if (p.is_absolute() && !base.empty()) p = p.lexically_relative(fs::absolute(base));
    else if (!base.empty()) p = p.lexically_relative(base);
    t.rows.push_back({e.source_id, e.field_id, p.generic_string()});
  }
  write_table(t, out);
}

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
  basis.validate();
  prior.validate();
  if (!(em.tol > 0.0)) throw std::invalid_argument("em_tol must be positive");
  if (em.max_iter < 1) throw std::invalid_argument("em_max_iter must be at least 1");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must lie in (0, 1)");
  if (df < 0) throw std::invalid_argument("df must be non-negative (0 selects M - k_l)");
  if (!(probability_threshold > 0.0 && probability_threshold <= 1.0)) {
    throw std::invalid_argument("probability_threshold must lie in (0, 1]");
  }
  if (field_cluster_cutoff < 1) throw std::invalid_argument("field_cluster_cutoff must be at least 1");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
}

PipelineConfig pipeline_config_from(const KeyValues& kv) {
  PipelineConfig c;
  for (const auto& [key, value] : kv) {
    if (key.rfind("sim.", 0) == 0) continue;
    if (key == "interval_length") c.basis.interval_length = to_real(key, value);
    else if (key == "total_components") c.basis.total_components = to_int(key, value);
    else if (key == "trend_components") c.basis.trend_components = to_int(key, value);
    else if (key == "filter_name") c.basis.filter_name = value;
    else if (key == "cascade_depth") c.basis.cascade_depth = to_int(key, value);
    else if (key == "tau") c.prior.tau = to_real(key, value);
    else if (key == "nu") c.prior.nu = to_real(key, value);
    else if (key == "em_tol") c.em.tol = to_real(key, value);
    else if (key == "em_max_iter") c.em.max_iter = to_int(key, value);
    else if (key == "em_accelerate") c.em.accelerate = parse_bool(key, value);
    else if (key == "q") c.q = to_real(key, value);
    else if (key == "fdr_variant") c.variant = parse_fdr_variant(value);
    else if (key == "df") c.df = to_int(key, value);
    else if (key == "model_path") c.model_path = value;
    else if (key == "probability_threshold") c.probability_threshold = to_real(key, value);
    else if (key == "field_cluster_cutoff") c.field_cluster_cutoff = to_int(key, value);
    else if (key == "workers") c.workers = to_int(key, value);
    else if (key == "output_dir") c.output_dir = value;
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

SimulationConfig simulation_config_from(const KeyValues& kv) {
  SimulationConfig s;
  for (const auto& [full, value] : kv) {
    if (full.rfind("sim.", 0) != 0) continue;
    const std::string key = full.substr(4);
    if (key == "n_obs_min") s.n_obs_min = to_int(full, value);
    else if (key == "n_obs_max") s.n_obs_max = to_int(full, value);
    else if (key == "n_seasons") s.n_seasons = to_int(full, value);
    else if (key == "season_length") s.season_length = to_real(full, value);
    else if (key == "gap_fraction") s.gap_fraction = to_real(full, value);
    else if (key == "start_time") s.start_time = to_real(full, value);
    else if (key == "night_jitter") s.night_jitter = to_real(full, value);
    else if (key == "base_magnitude") s.base_magnitude = to_range(full, value);
    else if (key == "noise_sigma") s.noise_sigma = to_range(full, value);
    else if (key == "noise_nu") s.noise_nu = to_real(full, value);
    else if (key == "outlier_rate") s.outlier_rate = to_real(full, value);
    else if (key == "outlier_magnitude") s.outlier_magnitude = to_real(full, value);
    else if (key == "trend_knots") s.trend_knots = to_int(full, value);
    else if (key == "trend_amplitude") s.trend_amplitude = to_real(full, value);
    else if (key == "season_offset_sd") s.season_offset_sd = to_real(full, value);
    else if (key == "u0") s.u0 = to_range(full, value);
    else if (key == "t_e") s.t_e = to_range(full, value);
    else if (key == "period") s.period = to_range(full, value);
    else if (key == "amplitude") s.amplitude = to_range(full, value);
    else if (key == "second_harmonic_probability") s.second_harmonic_probability = to_real(full, value);
    else if (key == "n_fields") s.n_fields = to_int(full, value);
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_integer(value));
    else throw std::invalid_argument("unknown config key '" + full + "'");
  }
  s.validate();
  return s;
}

void write_config(const PipelineConfig& p, const SimulationConfig& s, std::ostream& out) {
  auto range = [](const Range& r) { return format_double(r.lo) + " " + format_double(r.hi); };
  out << "# bumphunt configuration: one 'key = value' per line, '#' starts a comment.\n\n"
      << "# Wavelet basis\n"
      << "interval_length = " << format_double(p.basis.interval_length) << "   # rescaled time axis and grid size\n"
      << "total_components = " << p.basis.total_components << "   # M, power of two\n"
      << "trend_components = " << p.basis.trend_components << "   # k_l, power of two below M\n"
      << "filter_name = " << p.basis.filter_name << "   # symmlet4 or haar\n"
      << "cascade_depth = " << p.basis.cascade_depth << "   # dyadic depth of the mother-function tables\n\n"
      << "# Robust fit\n"
      << "tau = " << format_double(p.prior.tau) << "   # ridge pseudo-observations\n"
      << "nu = " << format_double(p.prior.nu) << "   # t degrees of freedom\n"
      << "em_tol = " << format_double(p.em.tol) << "   # relative change in the log posterior\n"
      << "em_max_iter = " << p.em.max_iter << '\n'
      << "em_accelerate = " << (p.em.accelerate ? "true" : "false") << "   # exact sigma^2 maximization step\n\n"
      << "# Screening\n"
      << "q = " << format_double(p.q) << "   # FDR level\n"
      << "fdr_variant = " << to_string(p.variant) << "   # bh or by\n"
      << "df = " << p.df << "   # chi-square degrees of freedom, 0 for M - k_l\n\n"
      << "# Classification and post-filter\n"
      << "model_path = " << p.model_path.generic_string() << "   # model file for classify and pipeline\n"
      << "probability_threshold = " << format_double(p.probability_threshold) << '\n'
      << "field_cluster_cutoff = " << p.field_cluster_cutoff << "   # fields with this many events are dropped\n\n"
      << "# Execution\n"
      << "workers = " << p.workers << '\n'
      << "output_dir = " << p.output_dir.generic_string() << "\n\n"
      << "# Simulator (used by simulate and train)\n"
      << "sim.n_obs_min = " << s.n_obs_min << '\n'
      << "sim.n_obs_max = " << s.n_obs_max << '\n'
      << "sim.n_seasons = " << s.n_seasons << '\n'
      << "sim.season_length = " << format_double(s.season_length) << '\n'
      << "sim.gap_fraction = " << format_double(s.gap_fraction) << '\n'
      << "sim.start_time = " << format_double(s.start_time) << '\n'
      << "sim.night_jitter = " << format_double(s.night_jitter) << '\n'
      << "sim.base_magnitude = " << range(s.base_magnitude) << '\n'
      << "sim.noise_sigma = " << range(s.noise_sigma) << '\n'
      << "sim.noise_nu = " << format_double(s.noise_nu) << '\n'
      << "sim.outlier_rate = " << format_double(s.outlier_rate) << '\n'
      << "sim.outlier_magnitude = " << format_double(s.outlier_magnitude) << "   # multiples of the noise scale\n"
      << "sim.trend_knots = " << s.trend_knots << '\n'
      << "sim.trend_amplitude = " << format_double(s.trend_amplitude) << '\n'
      << "sim.season_offset_sd = " << format_double(s.season_offset_sd) << '\n'
      << "sim.u0 = " << range(s.u0) << '\n'
      << "sim.t_e = " << range(s.t_e) << '\n'
      << "sim.period = " << range(s.period) << '\n'
      << "sim.amplitude = " << range(s.amplitude) << '\n'
      << "sim.second_harmonic_probability = " << format_double(s.second_harmonic_probability) << '\n'
      << "sim.n_fields = " << s.n_fields << '\n'
      << "sim.seed = " << s.seed << '\n';
}

// ---------------------------------------------------------------------------
// Curve files

IngestResult ingest_curve(const fs::path& path, std::string source_id, std::string field_id) {
  IngestResult r;
  r.curve.source_id = std::move(source_id);
  r.curve.field_id = std::move(field_id);
  std::ifstream in(path);
  if (!in) {
    r.error = "ingest error: cannot open " + path.string();
    return r;
  }
  std::vector<std::pair<double, double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() < 2 || fields.size() > 3) {
      r.error = "ingest error: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) + " columns";
      return r;
    }
    double t = 0.0;
    double v = 0.0;
    try {
      t = parse_double(fields[0]);
      v = parse_double(fields[1]);
    } catch (const std::invalid_argument&) {
      r.error = "ingest error: unparseable line " + std::to_string(line_no);
      return r;
    }
    if (!std::isfinite(t) || !std::isfinite(v)) {
      ++r.rejected_rows;
      continue;
    }
    rows.emplace_back(t, v);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  r.curve.times.reserve(rows.size());
  r.curve.values.reserve(rows.size());
  for (const auto& [t, v] : rows) {
    r.curve.times.push_back(t);
    r.curve.values.push_back(-v);
  }
  if (rows.size() < 2) {
    r.error = "ingest error: fewer than 2 valid rows";
    return r;
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].first > rows[i - 1].first)) {
      r.error = "ingest error: duplicate time " + format_double(rows[i].first);
      return r;
    }
  }
  return r;
}

void write_curve(const LightCurve& curve, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write curve " + path.string());
  out << "# bumphunt curve " << curve.source_id << ' ' << curve.field_id << "\n# time\tmagnitude\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << format_double(curve.times[i]) << '\t' << format_double(-curve.values[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Fit records

std::string_view to_string(CurveStatus status) {
  switch (status) {
    case CurveStatus::ok: return "ok";
    case CurveStatus::ingest_error: return "ingest_error";
    case CurveStatus::insufficient_data: return "insufficient_data";
    case CurveStatus::degenerate: return "degenerate";
    case CurveStatus::numerical_failure: return "numerical_failure";
    case CurveStatus::not_converged: return "not_converged";
  }
  return "unknown";
}

CurveStatus parse_curve_status(std::string_view text) {
  for (auto s : {CurveStatus::ok, CurveStatus::ingest_error, CurveStatus::insufficient_data, CurveStatus::degenerate,
                 CurveStatus::numerical_failure, CurveStatus::not_converged}) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument("unknown curve status: " + std::string(text));
}

std::string fit_settings_key(const PipelineConfig& c) {
  std::ostringstream s;
  s << "L=" << format_double(c.basis.interval_length) << ";M=" << c.basis.total_components
    << ";kl=" << c.basis.trend_components << ";filter=" << c.basis.filter_name << ";tau=" << format_double(c.prior.tau)
    << ";nu=" << format_double(c.prior.nu) << ";tol=" << format_double(c.em.tol) << ";max_iter=" << c.em.max_iter
    << ";accel=" << (c.em.accelerate ? 1 : 0);
  return s.str();
}

void write_fit_record(const CurveFitRecord& r, std::string_view settings_key, std::ostream& out) {
  out << kFitTag << ' ' << kFitVersion << '\n'
      << "settings " << settings_key << '\n'
      << "source_id " << r.source_id << '\n'
      << "field_id " << r.field_id << '\n'
      << "n_obs " << r.n_obs << '\n'
      << "rejected_rows " << r.rejected_rows << '\n'
      << "status " << to_string(r.status) << '\n'
      << "message " << sanitize(r.message) << '\n'
      << "null_loglik " << format_double(r.null_loglik) << '\n'
      << "alt_loglik " << format_double(r.alt_loglik) << '\n'
      << "null_sigma2 " << format_double(r.null_sigma2) << '\n'
      << "alt_sigma2 " << format_double(r.alt_sigma2) << '\n'
      << "null_iterations " << r.null_iterations << '\n'
      << "alt_iterations " << r.alt_iterations << '\n'
      << "null_beta " << join_vector(r.null_beta, ' ') << '\n'
      << "alt_beta " << join_vector(r.alt_beta, ' ') << '\n'
      << "end\n";
}

std::optional<CurveFitRecord> read_fit_record(std::istream& in, std::string_view settings_key) {
  std::map<std::string, std::string, std::less<>> kv;
  std::string line;
  bool ended = false;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      if (line != std::string(kFitTag) + ' ' + std::to_string(kFitVersion)) return std::nullopt;
      first = false;
      continue;
    }
    if (line == "end") {
      ended = true;
      break;
    }
    const auto sp = line.find(' ');
    if (sp == std::string::npos) kv[line] = "";
    else kv[line.substr(0, sp)] = line.substr(sp + 1);
  }
  if (!ended || kv["settings"] != settings_key) return std::nullopt;
  try {
    CurveFitRecord r;
    r.source_id = kv.at("source_id");
    r.field_id = kv.at("field_id");
    r.n_obs = static_cast<std::size_t>(parse_integer(kv.at("n_obs")));
    r.rejected_rows = static_cast<std::size_t>(parse_integer(kv.at("rejected_rows")));
    r.status = parse_curve_status(kv.at("status"));
    r.message = kv.at("message");
    r.null_loglik = parse_double(kv.at("null_loglik"));
    r.alt_loglik = parse_double(kv.at("alt_loglik"));
    r.null_sigma2 = parse_double(kv.at("null_sigma2"));
    r.alt_sigma2 = parse_double(kv.at("alt_sigma2"));
    r.null_iterations = static_cast<int>(parse_integer(kv.at("null_iterations")));
    r.alt_iterations = static_cast<int>(parse_integer(kv.at("alt_iterations")));
    auto vec = [](const std::string& text) {
      const auto parts = split_whitespace(text);
      Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
      for (std::size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_double(parts[i]);
      return v;
    };
    r.null_beta = vec(kv.at("null_beta"));
    r.alt_beta = vec(kv.at("alt_beta"));
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

CurveFitRecord fit_curve(const LightCurve& curve, const WaveletBasis& basis, const PipelineConfig& config) {
  CurveFitRecord r;
  r.source_id = curve.source_id;
  r.field_id = curve.field_id;
  r.n_obs = curve.size();
  r.null_loglik = r.alt_loglik = r.null_sigma2 = r.alt_sigma2 = std::nan("");
  if (curve.size() < 2) {
    r.status = CurveStatus::insufficient_data;
    r.message = "fewer than 2 observations";
    return r;
  }
  DesignMatrix design;
  try {
    design = basis.evaluate(rescale_times(curve.times, basis.spec().interval_length));
  } catch (const std::invalid_argument& e) {
    r.status = CurveStatus::degenerate;
    r.message = e.what();
    return r;
  }
  const RobustFit null_fit = fit_null(curve, design, config.prior, config.em);
  r.null_loglik = null_fit.loglik;
  r.null_sigma2 = null_fit.sigma2;
  r.null_iterations = null_fit.iterations;
  r.null_beta = null_fit.beta;
  r.status = status_from(null_fit);
  if (r.status != CurveStatus::ok) {
    r.message = "null fit: " + std::string(to_string(r.status));
    return r;
  }
  const RobustFit alt_fit = fit_alternative(curve, design, config.prior, config.em);
  r.alt_loglik = alt_fit.loglik;
  r.alt_sigma2 = alt_fit.sigma2;
  r.alt_iterations = alt_fit.iterations;
  r.alt_beta = alt_fit.beta;
  r.status = status_from(alt_fit);
  if (r.status != CurveStatus::ok) r.message = "alternative fit: " + std::string(to_string(r.status));
  return r;
}

CurveFitRecord fit_curve(const CatalogEntry& entry, const WaveletBasis& basis, const PipelineConfig& config) {
  IngestResult in = ingest_curve(entry.path, entry.source_id, entry.field_id);
  CurveFitRecord r;
  if (in.ok()) {
    r = fit_curve(in.curve, basis, config);
  } else {
    r.source_id = entry.source_id;
    r.field_id = entry.field_id;
    r.n_obs = in.curve.size();
    r.status = CurveStatus::ingest_error;
    r.message = in.error;
    r.null_loglik = r.alt_loglik = r.null_sigma2 = r.alt_sigma2 = std::nan("");
  }
  r.rejected_rows = in.rejected_rows;
  return r;
}

fs::path FitStore::path_for(std::string_view source_id) const { return dir / (std::string(source_id) + ".fit"); }

std::optional<CurveFitRecord> FitStore::load(std::string_view source_id) const {
  std::ifstream in(path_for(source_id));
  if (!in) return std::nullopt;
  auto r = read_fit_record(in, settings_key);
  if (r && r->source_id != source_id) return std::nullopt;
  return r;
}

void FitStore::save(const CurveFitRecord& record) const {
  const fs::path target = path_for(record.source_id);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write fit record " + tmp.string());
    write_fit_record(record, settings_key, out);
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

namespace {

CurveFitRecord failure_record(const std::string& source_id, const std::string& field_id, const char* what) {
  CurveFitRecord r;
  r.source_id = source_id;
  r.field_id = field_id;
  r.status = CurveStatus::numerical_failure;
  r.message = what;
  r.null_loglik = r.alt_loglik = r.null_sigma2 = r.alt_sigma2 = std::nan("");
  return r;
}

CurveFitRecord process_entry(const CatalogEntry& entry, const WaveletBasis& basis, const PipelineConfig& config,
                             const FitStore* store) {
  if (store) {
    if (auto cached = store->load(entry.source_id); cached && cached->field_id == entry.field_id) return *cached;
  }
  CurveFitRecord r;
  try {
    r = fit_curve(entry, basis, config);
  } catch (const std::exception& e) {
    r = failure_record(entry.source_id, entry.field_id, e.what());
  }
  if (store) store->save(r);
  return r;
}

CurveFitRecord process_curve(const LightCurve& curve, const WaveletBasis& basis, const PipelineConfig& config) {
  try {
    return fit_curve(curve, basis, config);
  } catch (const std::exception& e) {
    return failure_record(curve.source_id, curve.field_id, e.what());
  }
}

}  // namespace

std::vector<CurveFitRecord> fit_catalog_serial(const std::vector<CatalogEntry>& entries, const WaveletBasis& basis,
                                               const PipelineConfig& config, const FitStore* store) {
  std::vector<CurveFitRecord> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(process_entry(e, basis, config, store));
  return out;
}

std::vector<CurveFitRecord> fit_catalog_parallel(const std::vector<CatalogEntry>& entries, const WaveletBasis& basis,
                                                 const PipelineConfig& config, int workers, const FitStore* store) {
  std::vector<CurveFitRecord> out(entries.size());
  const auto n = static_cast<std::int64_t>(entries.size());
  std::string io_error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = process_entry(entries[static_cast<std::size_t>(i)], basis, config, store);
    } catch (const std::exception& e) {
#pragma omp critical(bumphunt_io_error)
      if (io_error.empty()) io_error = e.what();
    }
  }
  if (!io_error.empty()) throw std::runtime_error(io_error);
  return out;
}

std::vector<CurveFitRecord> fit_curves_serial(const std::vector<LightCurve>& curves, const WaveletBasis& basis,
                                              const PipelineConfig& config) {
  std::vector<CurveFitRecord> out;
  out.reserve(curves.size());
  for (const auto& c : curves) out.push_back(process_curve(c, basis, config));
  return out;
}

std::vector<CurveFitRecord> fit_curves_parallel(const std::vector<LightCurve>& curves, const WaveletBasis& basis,
                                                const PipelineConfig& config, int workers) {
  std::vector<CurveFitRecord> out(curves.size());
  const auto n = static_cast<std::int64_t>(curves.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = process_curve(curves[static_cast<std::size_t>(i)], basis, config);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Screening

ScreeningOutcome screen_fits(std::vector<CurveFitRecord> fits, const PipelineConfig& config) {
  std::sort(fits.begin(), fits.end(),
            [](const CurveFitRecord& a, const CurveFitRecord& b) { return a.source_id < b.source_id; });
  ScreeningOutcome out;
  const int df = config.effective_df();
  out.records.resize(fits.size());
  out.flagged.assign(fits.size(), true);
  std::vector<double> pvalues;
  std::vector<std::size_t> batch;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    auto& rec = out.records[i];
    rec.source_id = f.source_id;
    rec.df = df;
    if (!f.usable() || !std::isfinite(f.alt_loglik) || !std::isfinite(f.null_loglik)) {
      rec.llr = rec.raw_llr = rec.pvalue = std::nan("");
      continue;
    }
    rec.raw_llr = 2.0 * (f.alt_loglik - f.null_loglik);
    rec.llr = std::max(0.0, rec.raw_llr);
    if (rec.raw_llr < 0.0) ++out.clamped;
    rec.pvalue = chi2_pvalue(rec.llr, df);
    out.flagged[i] = false;
    pvalues.push_back(rec.pvalue);
    batch.push_back(i);
  }
  const FdrSelection sel = fdr_select(pvalues, config.q, config.variant);
  for (std::size_t k = 0; k < batch.size(); ++k) out.records[batch[k]].selected = sel.selected[k];
  out.threshold = sel.threshold;
  out.fits = std::move(fits);
  return out;
}

Table screening_table(const ScreeningOutcome& o) {
  Table t;
  t.header = {"source_id", "field_id", "n_obs", "llr", "pvalue", "selected"};
  for (std::size_t i = 0; i < o.fits.size(); ++i) {
    const auto& f = o.fits[i];
    const auto& r = o.records[i];
    if (o.flagged[i]) {
      t.rows.push_back({f.source_id, f.field_id, std::to_string(f.n_obs), "NA", "NA", "0"});
    } else {
      t.rows.push_back({f.source_id, f.field_id, std::to_string(f.n_obs), format_double(r.llr),
                        format_double(r.pvalue), r.selected ? "1" : "0"});
    }
  }
  return t;
}

Table failure_table(const ScreeningOutcome& o) {
  Table t;
  t.header = {"source_id", "field_id", "status", "rejected_rows", "message"};
  for (std::size_t i = 0; i < o.fits.size(); ++i) {
    const auto& f = o.fits[i];
    if (!o.flagged[i] && f.rejected_rows == 0) continue;
    t.rows.push_back({f.source_id, f.field_id, std::string(to_string(f.status)), std::to_string(f.rejected_rows),
                      f.message.empty() ? "NA" : sanitize(f.message)});
  }
  return t;
}

ScreeningOutcome run_screening(const CatalogManifest& manifest, const PipelineConfig& config) {
  manifest.validate();
  config.validate();
  const WaveletBasis basis(config.basis);
  FitStore store{config.output_dir / "fits", fit_settings_key(config)};
  fs::create_directories(store.dir);
  auto fits = config.workers > 1 ? fit_catalog_parallel(manifest.entries, basis, config, config.workers, &store)
                                 : fit_catalog_serial(manifest.entries, basis, config, &store);
  return screen_fits(std::move(fits), config);
}

// ---------------------------------------------------------------------------
// Features and classification

EventFeatures features_from_record(const LightCurve& curve, const CurveFitRecord& record, const WaveletBasis& basis) {
  if (!record.usable()) throw std::invalid_argument("features_from_record: fit of " + record.source_id + " unusable");
  const DesignMatrix design = basis.evaluate(rescale_times(curve.times, basis.spec().interval_length));
  RobustFit fit;
  fit.beta = record.alt_beta;
  fit.sigma2 = record.alt_sigma2;
  fit.converged = true;
  return compute_features(fit, design);
}

Table append_features(const Table& screening, const WaveletBasis& basis, const CurveLookup& lookup, int workers) {
  ensure_columns(screening, {"source_id", "llr"}, "screening table");
  const auto cs = screening.column("source_id");
  const auto cl = screening.column("llr");
  Table t = screening;
  t.header.insert(t.header.end(), {"cusum", "dv", "degenerate"});
  const auto n = static_cast<std::int64_t>(t.rows.size());
  std::string error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
  for (std::int64_t i = 0; i < n; ++i) {
    auto& row = t.rows[static_cast<std::size_t>(i)];
    std::vector<std::string> extra{"NA", "NA", "NA"};
    try {
      if (row.at(cl) != "NA") {
        const auto found = lookup(row.at(cs));
        if (!found) throw std::runtime_error("no usable fit record for " + row.at(cs));
        const EventFeatures f = features_from_record(found->first, found->second, basis);
        extra = {format_double(f.cusum), format_double(f.dv), f.degenerate ? "1" : "0"};
      }
    } catch (const std::exception& e) {
#pragma omp critical(bumphunt_feature_error)
      if (error.empty()) error = e.what();
    }
    row.insert(row.end(), extra.begin(), extra.end());
  }
  if (!error.empty()) throw std::runtime_error(error);
  return t;
}

Table classify_table(const Table& features, const LogisticModel& model, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in (0, 1]");
  ensure_columns(features, {"selected", "cusum", "dv", "degenerate"}, "feature table");
  if (model.feature_names != std::vector<std::string>{"cusum", "dv"}) {
    throw std::invalid_argument("model features must be cusum, dv");
  }
  const auto csel = features.column("selected");
  const auto cc = features.column("cusum");
  const auto cd = features.column("dv");
  const auto cg = features.column("degenerate");
  Table t = features;
  t.header.insert(t.header.end(), {"prob_event", "class"});
  for (auto& row : t.rows) {
    const bool selected = row.at(csel) == "1";
    const bool usable = selected && row.at(cg) == "0";
    double p_event = 0.0;
    if (usable) {
      const double x[2] = {parse_double(row.at(cc)), parse_double(row.at(cd))};
      p_event = combine_probability(true, predict_prob(model, x)).p_event;
    }
    // A logistic probability is strictly below one, so a threshold of one admits nothing.
    const bool event = usable && threshold < 1.0 && p_event >= threshold;
    row.push_back(format_double(p_event));
    row.push_back(event ? "1" : "0");
  }
  return t;
}

Table candidate_rows(const Table& classified) {
  ensure_columns(classified, {"class"}, "classified table");
  const auto cc = classified.column("class");
  Table t;
  t.header = classified.header;
  for (const auto& row : classified.rows) {
    if (row.at(cc) == "1") t.rows.push_back(row);
  }
  return t;
}

FieldFilterResult field_cluster_filter(const Table& candidates, int cutoff) {
  if (cutoff < 1) throw std::invalid_argument("field_cluster_filter: cutoff must be at least 1");
  ensure_columns(candidates, {"field_id"}, "candidate table");
  const auto cf = candidates.column("field_id");
  std::map<std::string, std::size_t> counts;
  for (const auto& row : candidates.rows) ++counts[row.at(cf)];
  FieldFilterResult r;
  r.kept.header = candidates.header;
  for (const auto& row : candidates.rows) {
    if (counts[row.at(cf)] < static_cast<std::size_t>(cutoff)) r.kept.rows.push_back(row);
  }
  for (const auto& [field, count] : counts) {
    if (count >= static_cast<std::size_t>(cutoff)) r.removed_fields.emplace_back(field, count);
  }
  return r;
}

Table removed_fields_table(const FieldFilterResult& result) {
  Table t;
  t.header = {"field_id", "n_events"};
  for (const auto& [field, count] : result.removed_fields) t.rows.push_back({field, std::to_string(count)});
  return t;
}

CurveLookup store_lookup(const CatalogManifest& manifest, const FitStore& store) {
  auto index = std::make_shared<std::unordered_map<std::string, CatalogEntry>>();
  for (const auto& e : manifest.entries) index->emplace(e.source_id, e);
  return [index, store](const std::string& id) -> std::optional<std::pair<LightCurve, CurveFitRecord>> {
    const auto it = index->find(id);
    if (it == index->end()) return std::nullopt;
    auto record = store.load(id);
    if (!record || !record->usable()) return std::nullopt;
    IngestResult in = ingest_curve(it->second.path, it->second.source_id, it->second.field_id);
    if (!in.ok()) return std::nullopt;
    return std::make_pair(std::move(in.curve), std::move(*record));
  };
}

PipelineResult run_pipeline(const CatalogManifest& manifest, const PipelineConfig& config, const LogisticModel& model) {
  PipelineResult r;
  const ScreeningOutcome outcome = run_screening(manifest, config);
  r.screening = screening_table(outcome);
  r.failures = failure_table(outcome);
  const WaveletBasis basis(config.basis);
  const FitStore store{config.output_dir / "fits", fit_settings_key(config)};
  r.features = append_features(r.screening, basis, store_lookup(manifest, store), config.workers);
  r.classified = classify_table(r.features, model, config.probability_threshold);
  const FieldFilterResult filtered = field_cluster_filter(candidate_rows(r.classified), config.field_cluster_cutoff);
  r.candidates = filtered.kept;
  r.removed_fields = removed_fields_table(filtered);
  const fs::path& dir = config.output_dir;
  write_table(r.screening, dir / "screening.tsv");
  write_table(r.failures, dir / "failures.tsv");
  write_table(r.features, dir / "features.tsv");
  write_table(r.classified, dir / "classified.tsv");
  write_table(r.candidates, dir / "candidates.tsv");
  write_table(r.removed_fields, dir / "removed_fields.tsv");
  return r;
}

// ---------------------------------------------------------------------------
// Training

TrainingCorpus build_training_corpus(const SimulationConfig& simulation, const BatchCounts& counts,
                                     const PipelineConfig& config, int workers) {
  simulation.validate();
  config.validate();
  const WaveletBasis basis(config.basis);
  const int n = counts.total();
  std::vector<SimulatedCurve> sims(static_cast<std::size_t>(n));
  std::vector<CurveFitRecord> fits(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    sims[k] = simulate_one(simulation, counts, i);
    fits[k] = process_curve(sims[k].curve, basis, config);
  }
  // Source ids are zero-padded indices, so the screening sort keeps index order.
  const ScreeningOutcome screened = screen_fits(std::move(fits), config);

  std::vector<EventFeatures> features(static_cast<std::size_t>(n));
  std::vector<char> keep(static_cast<std::size_t>(n), 0);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!screened.records[k].selected) continue;
    features[k] = features_from_record(sims[k].curve, screened.fits[k], basis);
    keep[k] = !features[k].degenerate;
  }

  TrainingCorpus c;
  c.table.header = {"source_id", "class", "label", "cusum", "dv"};
  std::vector<std::size_t> rows;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k]) rows.push_back(k);
    else ++c.dropped;
  }
  c.features.resize(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t k = rows[i];
    const auto& truth = sims[k].truth;
    const int label = truth.cls == CurveClass::event ? 1 : 0;
    c.features(static_cast<Eigen::Index>(i), 0) = features[k].cusum;
    c.features(static_cast<Eigen::Index>(i), 1) = features[k].dv;
    c.labels.push_back(label);
    c.table.rows.push_back({truth.source_id, std::string(to_string(truth.cls)), std::to_string(label),
                            format_double(features[k].cusum), format_double(features[k].dv)});
  }
  return c;
}

TrainingCorpus read_training_table(const Table& table) {
  ensure_columns(table, {"label", "cusum", "dv"}, "training table");
  const auto cl = table.column("label");
  const auto cc = table.column("cusum");
  const auto cd = table.column("dv");
  TrainingCorpus c;
  c.table = table;
  c.features.resize(static_cast<Eigen::Index>(table.rows.size()), 2);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const auto label = parse_integer(row.at(cl));
    if (label != 0 && label != 1) throw std::invalid_argument("training table: label must be 0 or 1");
    c.labels.push_back(static_cast<int>(label));
    c.features(static_cast<Eigen::Index>(i), 0) = parse_double(row.at(cc));
    c.features(static_cast<Eigen::Index>(i), 1) = parse_double(row.at(cd));
  }
  if (!c.features.allFinite()) throw std::invalid_argument("training table: non-finite feature");
  return c;
}

// ---------------------------------------------------------------------------
// Simulation output

Table truth_table(const std::vector<SimulatedCurve>& curves) {
  Table t;
  t.header = {"source_id", "class", "u0", "t0", "tE", "period", "amplitude", "field_id", "sigma", "n_outliers"};
  for (const auto& c : curves) {
    const auto& tr = c.truth;
    t.rows.push_back({tr.source_id, std::string(to_string(tr.cls)), format_double(tr.u0), format_double(tr.t0),
                      format_double(tr.t_e), format_double(tr.period), format_double(tr.amplitude), tr.field_id,
                      format_double(tr.sigma),
                      std::to_string(tr.outlier_positions.size())});
  }
  return t;
}

void write_simulation(const std::vector<SimulatedCurve>& curves, const fs::path& dir) {
  fs::create_directories(dir / "curves");
  CatalogManifest m;
  for (const auto& c : curves) {
    const fs::path rel = fs::path("curves") / (c.curve.source_id + ".dat");
    write_curve(c.curve, dir / rel);
    m.entries.push_back({c.curve.source_id, c.curve.field_id, dir / rel});
  }
  write_manifest(m, dir / "manifest.tsv");
  write_table(truth_table(curves), dir / "truth.tsv");
}

}  // namespace bumphunt
