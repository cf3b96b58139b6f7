// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bumphunt {

/// Logistic regression on standardized (CUSUM, DV) with independent Cauchy
/// priors on the coefficients.
struct LogisticModel {
  std::vector<std::string> feature_names{"cusum", "dv"};
  Eigen::VectorXd coefficients;  // intercept, then one per feature
  Eigen::VectorXd centers;
  Eigen::VectorXd scales;
  Eigen::VectorXd prior_scales;  // intercept first
  int n_pos = 0;
  int n_neg = 0;
  double cv_auc = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;

  Eigen::Index n_features() const { return centers.size(); }
  double linear_predictor(std::span<const double> row) const;
};

struct ClassProbability {
  double p_variable = 0.0;
  double p_event_given_variable = 0.0;
  double p_event = 0.0;
};

struct Standardization {
  Eigen::MatrixXd standardized;
  Eigen::VectorXd centers;
  Eigen::VectorXd scales;  // twice the population standard deviation
};

/// Centers each column and scales it to standard deviation 0.5. Throws
/// std::invalid_argument naming the column when its variance is zero.
Standardization standardize_features(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                     std::span<const std::string> names = {});

/// Cauchy(0, 10) on the intercept and Cauchy(0, 2.5) on each standardized feature.
Eigen::VectorXd default_prior_scales(Eigen::Index n_features);

/// Penalized log-likelihood maximized by fit_logistic_map, on standardized features.
double logistic_log_posterior(const Eigen::Ref<const Eigen::MatrixXd>& standardized, std::span<const int> labels,
                              const Eigen::Ref<const Eigen::VectorXd>& coefficients,
                              const Eigen::Ref<const Eigen::VectorXd>& prior_scales);

/// Damped Newton from zero to gradient norm <= 1e-8. Throws std::invalid_argument
/// when a class is missing and std::runtime_error after 1000 iterations.
LogisticModel fit_logistic_map(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels,
                               const Eigen::VectorXd& prior_scales = {});

double predict_prob(const LogisticModel& model, std::span<const double> row);

ClassProbability combine_probability(bool selected, double p_event_given_variable);

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;  // scores at which each point is reached
  double auc = 0.0;
};

/// Threshold sweep over the unique scores (descending), trapezoid AUC.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

struct CrossValidation {
  std::vector<RocCurve> folds;
  std::vector<int> fold_of;  // fold index of each row
  double mean_auc = 0.0;
};

/// Stratified k-fold cross-validation, deterministic given `seed`.
CrossValidation cross_validate(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels, int k,
                               std::uint64_t seed);

/// Versioned key-value text format; values use shortest round-trip decimal.
void write_model(const LogisticModel& model, std::ostream& out);
LogisticModel read_model(std::istream& in);

}  // namespace bumphunt
