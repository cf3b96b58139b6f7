// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#pragma once

#include <limits>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bumphunt/light_curve.hpp"
#include "bumphunt/wavelet_basis.hpp"

namespace bumphunt {

/// Ridge prior N(0, sigma^2 / tau) on every coefficient except the constant,
/// Student-t residuals with fixed degrees of freedom, and p(sigma^2) ~ 1/sigma^2.
struct PriorConfig {
  double tau = 0.01;
  double nu = 5.0;

  void validate() const;
};

struct EmOptions {
  double tol = 1e-8;  // relative change in the log posterior
  int max_iter = 500;
  /// Replace the sigma^2 M-step with an exact maximization of the observed
  /// log posterior over sigma^2 (ECME). Same fixed point, fewer iterations.
  bool accelerate = false;
  bool record_trace = false;
};

enum class FitStatus {
  ok,
  insufficient_data,  // fewer than two observations per column
  degenerate,         // constant series or zero scale
  numerical_failure,  // non-finite input or failed factorization
};

std::string_view to_string(FitStatus status);

struct RobustFit {
  Eigen::VectorXd beta;
  double sigma2 = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd weights;  // E[1/w | residual] at the final iterate
  double loglik = std::numeric_limits<double>::quiet_NaN();  // unpenalized t log-likelihood
  double log_posterior = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  FitStatus status = FitStatus::ok;
  std::vector<double> trace;  // log posterior at the start and after each iteration

  bool usable() const { return status == FitStatus::ok && converged; }
};

/// weight_i = (nu + 1) / (nu + r_i^2 / sigma2).
Eigen::VectorXd e_step(const Eigen::Ref<const Eigen::VectorXd>& residuals, double sigma2, double nu);

struct MStepResult {
  Eigen::VectorXd beta;
  double sigma2;
};

/// Solves (X'WX + tau D) beta = X'Wy with D = diag(0, 1, ..., 1) by Cholesky,
/// then sigma2 = (sum w r^2 + tau |beta_{1:}|^2) / (n + p + 2) where p is the
/// number of penalized columns. Throws std::runtime_error on non-finite input
/// or a failed factorization.
MStepResult m_step(const Eigen::Ref<const Eigen::MatrixXd>& design,
                   const Eigen::Ref<const Eigen::VectorXd>& y,
                   const Eigen::Ref<const Eigen::VectorXd>& weights, double tau);

/// Sum of location-scale Student-t log densities.
double t_log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& residuals, double sigma2, double nu);

/// Log posterior density of (beta, sigma2) given residuals y - X beta.
double log_posterior(const Eigen::Ref<const Eigen::VectorXd>& residuals,
                     const Eigen::Ref<const Eigen::VectorXd>& beta, double sigma2,
                     const PriorConfig& prior);

/// MAP fit of y on the given design columns.
RobustFit fit_em(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::MatrixXd>& design,
                 const PriorConfig& prior, const EmOptions& options = {});

RobustFit fit_em(const LightCurve& curve, const Eigen::Ref<const Eigen::MatrixXd>& design,
                 const PriorConfig& prior, const EmOptions& options = {});

/// Trend-only model: the constant and the k_l trend columns.
RobustFit fit_null(const LightCurve& curve, const DesignMatrix& design, const PriorConfig& prior,
                   const EmOptions& options = {});

/// Full model: all 1 + M columns.
RobustFit fit_alternative(const LightCurve& curve, const DesignMatrix& design, const PriorConfig& prior,
                          const EmOptions& options = {});

}  // namespace bumphunt
