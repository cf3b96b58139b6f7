// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "bumphunt/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bumphunt;

namespace {

struct CommonOptions {
  std::string config;
  std::string manifest;
  std::string out;
  int workers = 0;
  std::optional<std::uint64_t> seed;
};

struct Settings {
  PipelineConfig pipeline;
  SimulationConfig simulation;
};

Settings load_settings(const CommonOptions& o) {
  Settings s;
  if (!o.config.empty()) {
    const KeyValues kv = read_key_values(fs::path(o.config));
    s.pipeline = pipeline_config_from(kv);
    s.simulation = simulation_config_from(kv);
  }
  if (!o.out.empty()) s.pipeline.output_dir = o.out;
  if (o.workers > 0) s.pipeline.workers = o.workers;
  if (o.seed) s.simulation.seed = *o.seed;
  s.pipeline.validate();
  s.simulation.validate();
  return s;
}

CatalogManifest load_manifest(const CommonOptions& o) {
  if (o.manifest.empty()) throw std::invalid_argument("--manifest is required");
  return read_manifest(o.manifest);
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Key-value configuration file");
  cmd->add_option("--manifest", o.manifest, "Catalog manifest");
  cmd->add_option("--out", o.out, "Output directory (overrides output_dir)");
  cmd->add_option("--workers", o.workers, "Worker threads (overrides workers)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Random seed (overrides sim.seed)");
}

std::size_t count_value(const Table& t, std::string_view column, std::string_view value) {
  if (!t.has_column(column)) return 0;
  const auto c = t.column(column);
  std::size_t n = 0;
  for (const auto& row : t.rows) n += row.at(c) == value;
  return n;
}

LogisticModel load_model(const fs::path& path) {
  if (path.empty()) throw std::invalid_argument("no model: set model_path or pass --model");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  return read_model(in);
}

json cmd_simulate(const CommonOptions& o, const BatchCounts& counts) {
  const Settings s = load_settings(o);
  const auto curves = simulate_batch(s.simulation, counts);
  write_simulation(curves, s.pipeline.output_dir);
  return {{"curves", curves.size()},
          {"manifest", (s.pipeline.output_dir / "manifest.tsv").generic_string()},
          {"truth", (s.pipeline.output_dir / "truth.tsv").generic_string()}};
}

json cmd_fit(const CommonOptions& o) {
  const Settings s = load_settings(o);
  const CatalogManifest m = load_manifest(o);
  m.validate();
  const WaveletBasis basis(s.pipeline.basis);
  const FitStore store{s.pipeline.output_dir / "fits", fit_settings_key(s.pipeline)};
  fs::create_directories(store.dir);
  const auto fits = fit_catalog_parallel(m.entries, basis, s.pipeline, s.pipeline.workers, &store);
  Table t;
  t.header = {"source_id", "field_id", "n_obs",   "status",          "null_loglik",    "alt_loglik",
              "null_sigma2", "alt_sigma2", "null_iterations", "alt_iterations", "alt_beta"};
  std::size_t ok = 0;
  for (const auto& f : fits) {
    ok += f.usable();
    std::string beta;
    for (Eigen::Index i = 0; i < f.alt_beta.size(); ++i) beta += (i ? "," : "") + format_double(f.alt_beta(i));
    t.rows.push_back({f.source_id, f.field_id, std::to_string(f.n_obs), std::string(to_string(f.status)),
                      format_double(f.null_loglik), format_double(f.alt_loglik), format_double(f.null_sigma2),
                      format_double(f.alt_sigma2), std::to_string(f.null_iterations),
                      std::to_string(f.alt_iterations), beta.empty() ? "NA" : beta});
  }
  write_table(t, s.pipeline.output_dir / "fits.tsv");
  return {{"curves", fits.size()}, {"usable", ok}};
}

json cmd_screen(const CommonOptions& o) {
  const Settings s = load_settings(o);
  const ScreeningOutcome outcome = run_screening(load_manifest(o), s.pipeline);
  const Table t = screening_table(outcome);
  const Table failures = failure_table(outcome);
  write_table(t, s.pipeline.output_dir / "screening.tsv");
  write_table(failures, s.pipeline.output_dir / "failures.tsv");
  std::size_t flagged = 0;
  for (bool f : outcome.flagged) flagged += f;
  return {{"curves", t.rows.size()},
          {"selected", count_value(t, "selected", "1")},
          {"flagged", flagged},
          {"clamped", outcome.clamped},
          {"threshold", outcome.threshold}};
}

json cmd_features(const CommonOptions& o) {
  const Settings s = load_settings(o);
  const CatalogManifest m = load_manifest(o);
  const Table screening = read_table(s.pipeline.output_dir / "screening.tsv");
  const WaveletBasis basis(s.pipeline.basis);
  const FitStore store{s.pipeline.output_dir / "fits", fit_settings_key(s.pipeline)};
  const Table t = append_features(screening, basis, store_lookup(m, store), s.pipeline.workers);
  write_table(t, s.pipeline.output_dir / "features.tsv");
  return {{"curves", t.rows.size()}, {"degenerate", count_value(t, "degenerate", "1")}};
}

json cmd_train(const CommonOptions& o, const BatchCounts& counts, const std::string& table_path, int folds) {
  const Settings s = load_settings(o);
  const TrainingCorpus corpus = table_path.empty()
                                    ? build_training_corpus(s.simulation, counts, s.pipeline, s.pipeline.workers)
                                    : read_training_table(read_table(fs::path(table_path)));
  const fs::path& dir = s.pipeline.output_dir;
  fs::create_directories(dir);
  const CrossValidation cv = cross_validate(corpus.features, corpus.labels, folds, s.simulation.seed);
  LogisticModel model = fit_logistic_map(corpus.features, corpus.labels);
  model.cv_auc = cv.mean_auc;
  if (table_path.empty()) write_table(corpus.table, dir / "training.tsv");
  Table cv_table;
  cv_table.header = {"fold", "auc"};
  for (std::size_t k = 0; k < cv.folds.size(); ++k) cv_table.rows.push_back({std::to_string(k), format_double(cv.folds[k].auc)});
  write_table(cv_table, dir / "cv.tsv");
  const fs::path model_path = dir / "model.txt";
  std::ofstream out(model_path);
  write_model(model, out);
  if (!out) throw std::runtime_error("cannot write " + model_path.string());
  return {{"rows", corpus.labels.size()},
          {"positives", model.n_pos},
          {"negatives", model.n_neg},
          {"dropped", corpus.dropped},
          {"cv_auc", cv.mean_auc},
          {"model", model_path.generic_string()}};
}

json write_classification(const Table& features, const LogisticModel& model, const PipelineConfig& config) {
  const Table classified = classify_table(features, model, config.probability_threshold);
  const FieldFilterResult filtered = field_cluster_filter(candidate_rows(classified), config.field_cluster_cutoff);
  const fs::path& dir = config.output_dir;
  write_table(classified, dir / "classified.tsv");
  write_table(filtered.kept, dir / "candidates.tsv");
  write_table(removed_fields_table(filtered), dir / "removed_fields.tsv");
  return {{"events", count_value(classified, "class", "1")},
          {"candidates", filtered.kept.rows.size()},
          {"removed_fields", filtered.removed_fields.size()}};
}

json cmd_classify(const CommonOptions& o, const std::string& model_path) {
  Settings s = load_settings(o);
  if (!model_path.empty()) s.pipeline.model_path = model_path;
  const LogisticModel model = load_model(s.pipeline.model_path);
  return write_classification(read_table(s.pipeline.output_dir / "features.tsv"), model, s.pipeline);
}

json cmd_pipeline(const CommonOptions& o, const std::string& model_path) {
  Settings s = load_settings(o);
  if (!model_path.empty()) s.pipeline.model_path = model_path;
  const LogisticModel model = load_model(s.pipeline.model_path);
  const PipelineResult r = run_pipeline(load_manifest(o), s.pipeline, model);
  return {{"curves", r.screening.rows.size()},
          {"selected", count_value(r.screening, "selected", "1")},
          {"flagged", r.failures.rows.size()},
          {"events", count_value(r.classified, "class", "1")},
          {"candidates", r.candidates.rows.size()},
          {"removed_fields", r.removed_fields.rows.size()}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bumphunt: detection of isolated events in light curves"};
  app.require_subcommand(1);

  CommonOptions common;
  BatchCounts sim_counts{900, 50, 50};
  BatchCounts train_counts{0, 1000, 1000};
  std::string model_path;
  std::string table_path;
  int folds = 10;

  auto* simulate = app.add_subcommand("simulate", "Write simulated curves, a manifest and a truth table");
  add_common(simulate, common);
  simulate->add_option("--null", sim_counts.null_curves, "Null curves")->check(CLI::NonNegativeNumber);
  simulate->add_option("--events", sim_counts.event_curves, "Microlensing events")->check(CLI::NonNegativeNumber);
  simulate->add_option("--periodic", sim_counts.periodic_curves, "Periodic variables")->check(CLI::NonNegativeNumber);

  auto* fit = app.add_subcommand("fit", "Fit null and alternative models; write fit records and fits.tsv");
  add_common(fit, common);
  auto* screen = app.add_subcommand("screen", "Likelihood-ratio screening with FDR selection");
  add_common(screen, common);
  auto* features = app.add_subcommand("features", "Append cusum, dv and degenerate to screening.tsv");
  add_common(features, common);

  auto* train = app.add_subcommand("train", "Fit the logistic event classifier");
  add_common(train, common);
  train->add_option("--table", table_path, "Labeled feature table (label cusum dv); simulates a corpus if absent");
  train->add_option("--null", train_counts.null_curves, "Simulated null curves")->check(CLI::NonNegativeNumber);
  train->add_option("--events", train_counts.event_curves, "Simulated events")->check(CLI::NonNegativeNumber);
  train->add_option("--periodic", train_counts.periodic_curves, "Simulated periodic curves")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 100));

  auto* classify = app.add_subcommand("classify", "Score features.tsv and apply the field post-filter");
  add_common(classify, common);
  classify->add_option("--model", model_path, "Model file (overrides model_path)");

  auto* pipeline = app.add_subcommand("pipeline", "Screen, featurize, classify and post-filter a manifest");
  add_common(pipeline, common);
  pipeline->add_option("--model", model_path, "Model file (overrides model_path)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"status", "error"}, {"type", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  const CLI::App* cmd = app.get_subcommands().front();
  try {
    json summary;
    if (cmd == simulate) summary = cmd_simulate(common, sim_counts);
    else if (cmd == fit) summary = cmd_fit(common);
    else if (cmd == screen) summary = cmd_screen(common);
    else if (cmd == features) summary = cmd_features(common);
    else if (cmd == train) summary = cmd_train(common, train_counts, table_path, folds);
    else if (cmd == classify) summary = cmd_classify(common, model_path);
    else summary = cmd_pipeline(common, model_path);
    summary["status"] = "ok";
    summary["command"] = cmd->get_name();
    std::cout << summary.dump() << '\n';
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << json{{"status", "error"}, {"command", cmd->get_name()}, {"type", "invalid_input"}, {"message", e.what()}}
                     .dump()
              << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << json{{"status", "error"}, {"command", cmd->get_name()}, {"type", "runtime"}, {"message", e.what()}}
                     .dump()
              << '\n';
    return 1;
  }
}
