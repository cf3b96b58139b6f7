// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bumphunt/classifier.hpp"
#include "bumphunt/features.hpp"
#include "bumphunt/light_curve.hpp"
#include "bumphunt/robust_fit.hpp"
#include "bumphunt/screening.hpp"
#include "bumphunt/simulator.hpp"
#include "bumphunt/text_io.hpp"
#include "bumphunt/wavelet_basis.hpp"

namespace bumphunt {

// ---------------------------------------------------------------------------
// Catalog manifest

struct CatalogEntry {
  std::string source_id;
  std::string field_id;
  std::filesystem::path path;  // absolute, or relative to the working directory
};

struct CatalogManifest {
  int version = 1;
  std::vector<CatalogEntry> entries;

  /// Throws std::invalid_argument on duplicate source ids or missing files.
  void validate() const;
};

/// Text format: a "# bumphunt manifest 1" line, then a tab-delimited table with
/// header `source_id field_id path`. Relative paths resolve against the
/// manifest's directory.
CatalogManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const CatalogManifest& manifest, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Configuration

struct PipelineConfig {
  BasisSpec basis;
  PriorConfig prior;
  EmOptions em;
  double q = 1e-4;
  FdrVariant variant = FdrVariant::by;
  int df = 0;  // 0 selects M - k_l
  std::filesystem::path model_path;
  double probability_threshold = 0.5;
  int field_cluster_cutoff = 20;
  int workers = 1;
  std::filesystem::path output_dir = "bumphunt_out";

  int effective_df() const { return df > 0 ? df : screening_df(basis); }
  /// Throws std::invalid_argument when any field is out of range.
  void validate() const;
};

/// Applies recognized keys on top of the defaults; unknown keys outside the
/// `sim.` namespace are rejected.
PipelineConfig pipeline_config_from(const KeyValues& kv);
SimulationConfig simulation_config_from(const KeyValues& kv);
/// Commented key-value listing of every field, readable by the parsers above.
void write_config(const PipelineConfig& pipeline, const SimulationConfig& simulation, std::ostream& out);

// ---------------------------------------------------------------------------
// Curve files

struct IngestResult {
  LightCurve curve;
  std::size_t rejected_rows = 0;  // non-finite rows dropped
  std::string error;              // non-empty when the curve is flagged

  bool ok() const { return error.empty(); }
};

/// Parses `time value [error]` rows ('#' comments, whitespace or comma
/// delimited), drops non-finite rows, sorts by time and negates magnitudes.
IngestResult ingest_curve(const std::filesystem::path& path, std::string source_id = {}, std::string field_id = {});

/// Writes a curve in the input format, converting values back to magnitudes.
void write_curve(const LightCurve& curve, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Per-curve fits

enum class CurveStatus { ok, ingest_error, insufficient_data, degenerate, numerical_failure, not_converged };

std::string_view to_string(CurveStatus status);
CurveStatus parse_curve_status(std::string_view text);

/// Everything later stages need from the null and alternative fits of one curve.
struct CurveFitRecord {
  std::string source_id;
  std::string field_id;
  std::size_t n_obs = 0;
  std::size_t rejected_rows = 0;
  CurveStatus status = CurveStatus::ok;
  std::string message;
  double null_loglik = 0.0;
  double alt_loglik = 0.0;
  double null_sigma2 = 0.0;
  double alt_sigma2 = 0.0;
  int null_iterations = 0;
  int alt_iterations = 0;
  Eigen::VectorXd null_beta;
  Eigen::VectorXd alt_beta;

  bool usable() const { return status == CurveStatus::ok; }
};

/// Fingerprint of the settings a fit record depends on; records with another
/// fingerprint are refit on resume.
std::string fit_settings_key(const PipelineConfig& config);

void write_fit_record(const CurveFitRecord& record, std::string_view settings_key, std::ostream& out);
/// std::nullopt when the stream is malformed or written under other settings.
std::optional<CurveFitRecord> read_fit_record(std::istream& in, std::string_view settings_key);

CurveFitRecord fit_curve(const LightCurve& curve, const WaveletBasis& basis, const PipelineConfig& config);
CurveFitRecord fit_curve(const CatalogEntry& entry, const WaveletBasis& basis, const PipelineConfig& config);

/// Persisted fit records live in `<dir>/<source_id>.fit`.
struct FitStore {
  std::filesystem::path dir;
  std::string settings_key;

  std::filesystem::path path_for(std::string_view source_id) const;
  std::optional<CurveFitRecord> load(std::string_view source_id) const;
  void save(const CurveFitRecord& record) const;
};

/// Reference kernel: one curve after another.
std::vector<CurveFitRecord> fit_catalog_serial(const std::vector<CatalogEntry>& entries, const WaveletBasis& basis,
                                               const PipelineConfig& config, const FitStore* store = nullptr);

/// OpenMP kernel over curves with `workers` threads. Output is identical to
/// the serial kernel for any worker count.
std::vector<CurveFitRecord> fit_catalog_parallel(const std::vector<CatalogEntry>& entries, const WaveletBasis& basis,
                                                 const PipelineConfig& config, int workers,
                                                 const FitStore* store = nullptr);

/// In-memory variants for simulated curves (no ingestion, no store).
std::vector<CurveFitRecord> fit_curves_serial(const std::vector<LightCurve>& curves, const WaveletBasis& basis,
                                              const PipelineConfig& config);
std::vector<CurveFitRecord> fit_curves_parallel(const std::vector<LightCurve>& curves, const WaveletBasis& basis,
                                                const PipelineConfig& config, int workers);

// ---------------------------------------------------------------------------
// Screening

struct ScreeningOutcome {
  std::vector<CurveFitRecord> fits;        // sorted by source id
  std::vector<ScreeningRecord> records;    // parallel to fits
  std::vector<bool> flagged;               // curve excluded from the FDR batch
  double threshold = 0.0;
  std::size_t clamped = 0;                 // negative raw statistics set to zero
};

/// LLR, p-values and the batch FDR selection over already-fitted curves.
ScreeningOutcome screen_fits(std::vector<CurveFitRecord> fits, const PipelineConfig& config);

/// Header: source_id field_id n_obs llr pvalue selected.
Table screening_table(const ScreeningOutcome& outcome);
/// Header: source_id status message, one row per flagged curve.
Table failure_table(const ScreeningOutcome& outcome);

/// Fits every curve of the manifest (reusing records under
/// `<output_dir>/fits` when present) and screens the batch.
ScreeningOutcome run_screening(const CatalogManifest& manifest, const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Features and classification

/// Features of one curve from its stored alternative coefficients.
EventFeatures features_from_record(const LightCurve& curve, const CurveFitRecord& record, const WaveletBasis& basis);

/// Appends `cusum dv degenerate` to a screening table. `lookup` returns the
/// curve and fit record of a source id (std::nullopt for flagged curves).
using CurveLookup = std::function<std::optional<std::pair<LightCurve, CurveFitRecord>>(const std::string&)>;
Table append_features(const Table& screening, const WaveletBasis& basis, const CurveLookup& lookup,
                      int workers = 1);

/// Appends `prob_event class`. Only selected, non-degenerate rows are scored;
/// the rest get p_event = 0 and class 0.
Table classify_table(const Table& features, const LogisticModel& model, double threshold);

/// Rows of a classified table with class 1.
Table candidate_rows(const Table& classified);

struct FieldFilterResult {
  Table kept;
  std::vector<std::pair<std::string, std::size_t>> removed_fields;  // field, event count
};

/// Drops every candidate of a field holding `cutoff` or more candidates.
FieldFilterResult field_cluster_filter(const Table& candidates, int cutoff);
Table removed_fields_table(const FieldFilterResult& result);

/// Screening, features, classification and the field post-filter; writes
/// screening.tsv, features.tsv, classified.tsv, candidates.tsv,
/// removed_fields.tsv and failures.tsv to the output directory.
struct PipelineResult {
  Table screening;
  Table features;
  Table classified;
  Table candidates;
  Table removed_fields;
  Table failures;
};
PipelineResult run_pipeline(const CatalogManifest& manifest, const PipelineConfig& config, const LogisticModel& model);

/// Lookup backed by a manifest and a fit store.
CurveLookup store_lookup(const CatalogManifest& manifest, const FitStore& store);

// ---------------------------------------------------------------------------
// Training

struct TrainingCorpus {
  Table table;                // source_id class label cusum dv
  Eigen::MatrixXd features;   // cusum, dv
  std::vector<int> labels;    // 1 for events
  std::size_t dropped = 0;    // not selected by screening, or degenerate features
};

/// Simulates `counts` curves, screens them as one batch at config.q and keeps
/// the selected, non-degenerate ones. Events are labeled 1, the rest 0.
TrainingCorpus build_training_corpus(const SimulationConfig& simulation, const BatchCounts& counts,
                                     const PipelineConfig& config, int workers = 1);

/// Reads a labeled feature table with columns `label cusum dv`.
TrainingCorpus read_training_table(const Table& table);

// ---------------------------------------------------------------------------
// Simulation output

/// Writes curves/<id>.dat, manifest.tsv and truth.tsv under `dir`.
void write_simulation(const std::vector<SimulatedCurve>& curves, const std::filesystem::path& dir);
Table truth_table(const std::vector<SimulatedCurve>& curves);

}  // namespace bumphunt
