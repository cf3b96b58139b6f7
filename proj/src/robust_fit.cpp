// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include "bumphunt/robust_fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bumphunt {
namespace {

constexpr double kMadScale = 1.4826;

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double penalty_norm2(const Eigen::Ref<const Eigen::VectorXd>& beta) {
  return beta.size() > 1 ? beta.tail(beta.size() - 1).squaredNorm() : 0.0;
}

// Reusable buffers for the weighted normal equations of one design.
class NormalEquations {
 public:
  NormalEquations(const Eigen::Ref<const Eigen::MatrixXd>& design, double tau)
      : design_(design), tau_(tau), scaled_(design.rows(), design.cols()),
        gram_(design.cols(), design.cols()), rhs_(design.cols()) {}

  // Returns false when the penalized Gram matrix is not positive definite.
  bool solve(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& weights,
             Eigen::VectorXd& beta) {
    scaled_.noalias() = weights.cwiseSqrt().asDiagonal() * design_;
    gram_.setZero();
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(scaled_.transpose());
    const Eigen::Index p = gram_.cols();
    for (Eigen::Index j = 1; j < p; ++j) gram_(j, j) += tau_;
    rhs_.noalias() = design_.transpose() * weights.cwiseProduct(y);
    llt_.compute(gram_);
    if (llt_.info() != Eigen::Success) return false;
    beta = llt_.solve(rhs_);
    // One refinement step with the residual taken from the design itself.
    correction_.noalias() = design_.transpose() * weights.cwiseProduct(y - design_ * beta);
    correction_.tail(p - 1) -= tau_ * beta.tail(p - 1);
    beta += llt_.solve(correction_);
    return beta.allFinite();
  }

 private:
  Eigen::Ref<const Eigen::MatrixXd> design_;
  double tau_;
  Eigen::MatrixXd scaled_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd correction_;
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt_;
};

double sigma2_update(const Eigen::Ref<const Eigen::VectorXd>& residuals,
                     const Eigen::Ref<const Eigen::VectorXd>& weights,
                     const Eigen::Ref<const Eigen::VectorXd>& beta, double tau) {
  const auto n = static_cast<double>(residuals.size());
  const auto penalized = static_cast<double>(beta.size() - 1);
  const double rss = (weights.array() * residuals.array().square()).sum();
  return (rss + tau * penalty_norm2(beta)) / (n + penalized + 2.0);
}

// Maximizes the observed log posterior over s = log sigma^2 for fixed beta.
// The derivative in s is strictly decreasing, so the root is unique.
double sigma2_maximize(const Eigen::Ref<const Eigen::VectorXd>& residuals,
                       const Eigen::Ref<const Eigen::VectorXd>& beta, const PriorConfig& prior, double start) {
  const double nu = prior.nu;
  const auto n = static_cast<double>(residuals.size());
  const auto penalized = static_cast<double>(beta.size() - 1);
  const double shrink = prior.tau * penalty_norm2(beta);
  const Eigen::ArrayXd r2 = residuals.array().square();

  auto slope = [&](double s, double* curvature) {
    const double scale = std::exp(s);
    const Eigen::ArrayXd denom = nu * scale + r2;
    double g = -0.5 * (n + penalized + 2.0) + 0.5 * (nu + 1.0) * (r2 / denom).sum() + 0.5 * shrink / scale;
    if (curvature) {
      *curvature = -0.5 * (nu + 1.0) * (nu * scale * r2 / denom.square()).sum() - 0.5 * shrink / scale;
    }
    return g;
  };

  double s = std::log(start);
  double lo = s;
  double hi = s;
  if (slope(s, nullptr) > 0.0) {
    for (int i = 0; i < 200 && slope(hi, nullptr) > 0.0; ++i) hi += 2.0;
  } else {
    for (int i = 0; i < 200 && slope(lo, nullptr) < 0.0; ++i) lo -= 2.0;
  }
  for (int i = 0; i < 100; ++i) {
    double curvature = 0.0;
    const double g = slope(s, &curvature);
    if (g > 0.0) lo = s; else hi = s;
    double next = curvature < 0.0 ? s - g / curvature : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-14 * std::max(1.0, std::abs(s))) {
      s = next;
      break;
    }
    s = next;
  }
  return std::exp(s);
}

bool converged_relative(double previous, double current, double tol) {
  return std::abs(current - previous) <= tol * std::max(1.0, std::abs(current));
}

}  // namespace

void PriorConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("prior tau must be positive");
  if (!(nu > 2.0)) throw std::invalid_argument("prior nu must exceed 2");
}

std::string_view to_string(FitStatus status) {
  switch (status) {
    case FitStatus::ok: return "ok";
    case FitStatus::insufficient_data: return "insufficient_data";
    case FitStatus::degenerate: return "degenerate";
    case FitStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

Eigen::VectorXd e_step(const Eigen::Ref<const Eigen::VectorXd>& residuals, double sigma2, double nu) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("e_step: sigma2 must be positive");
  return ((nu + 1.0) / (nu + residuals.array().square() / sigma2)).matrix();
}

MStepResult m_step(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& y,
                   const Eigen::Ref<const Eigen::VectorXd>& weights, double tau) {
  if (design.rows() != y.size() || weights.size() != y.size()) {
    throw std::invalid_argument("m_step: dimension mismatch");
  }
  if (!all_finite(design) || !y.allFinite() || !weights.allFinite()) {
    throw std::runtime_error("m_step: non-finite input");
  }
  NormalEquations normal(design, tau);
  MStepResult out;
  if (!normal.solve(y, weights, out.beta)) throw std::runtime_error("m_step: Cholesky factorization failed");
  const Eigen::VectorXd residuals = y - design * out.beta;
  out.sigma2 = sigma2_update(residuals, weights, out.beta, tau);
  return out;
}

double t_log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& residuals, double sigma2, double nu) {
  const auto n = static_cast<double>(residuals.size());
  const double constant = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                          0.5 * std::log(nu * M_PI) - 0.5 * std::log(sigma2);
  const double tail = (residuals.array().square() / (nu * sigma2)).log1p().sum();
  return n * constant - 0.5 * (nu + 1.0) * tail;
}

double log_posterior(const Eigen::Ref<const Eigen::VectorXd>& residuals, const Eigen::Ref<const Eigen::VectorXd>& beta,
                     double sigma2, const PriorConfig& prior) {
  const auto penalized = static_cast<double>(beta.size() - 1);
  return t_log_likelihood(residuals, sigma2, prior.nu) -
         0.5 * penalized * std::log(2.0 * M_PI * sigma2 / prior.tau) -
         0.5 * prior.tau * penalty_norm2(beta) / sigma2 - std::log(sigma2);
}

RobustFit fit_em(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::MatrixXd>& design,
                 const PriorConfig& prior, const EmOptions& options) {
  prior.validate();
  if (design.rows() != y.size()) throw std::invalid_argument("fit_em: design rows do not match the curve");

  RobustFit fit;
  const Eigen::Index n = y.size();
  const Eigen::Index p = design.cols();
  if (!y.allFinite() || !all_finite(design)) {
    fit.status = FitStatus::numerical_failure;
    return fit;
  }
  if (n < 2 * p) {
    fit.status = FitStatus::insufficient_data;
    return fit;
  }
  if (y.maxCoeff() == y.minCoeff()) {
    fit.status = FitStatus::degenerate;
    return fit;
  }

  NormalEquations normal(design, prior.tau);
  Eigen::VectorXd weights = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd beta(p);
  if (!normal.solve(y, weights, beta)) {
    fit.status = FitStatus::numerical_failure;
    return fit;
  }
  Eigen::VectorXd residuals = y - design * beta;

  std::vector<double> abs_res(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) abs_res[static_cast<std::size_t>(i)] = std::abs(residuals(i));
  const double mad = kMadScale * median_of(std::move(abs_res));
  double sigma2 = mad * mad;
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) sigma2 = sigma2_update(residuals, weights, beta, prior.tau);
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    fit.status = FitStatus::degenerate;
    return fit;
  }

  double current = log_posterior(residuals, beta, sigma2, prior);
  if (options.record_trace) fit.trace.push_back(current);

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    weights = e_step(residuals, sigma2, prior.nu);
    if (!normal.solve(y, weights, beta)) {
      fit.status = FitStatus::numerical_failure;
      fit.iterations = iter;
      return fit;
    }
    residuals.noalias() = y - design * beta;
    sigma2 = options.accelerate ? sigma2_maximize(residuals, beta, prior, sigma2)
                                : sigma2_update(residuals, weights, beta, prior.tau);
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
      fit.status = FitStatus::degenerate;
      fit.iterations = iter;
      return fit;
    }
    const double next = log_posterior(residuals, beta, sigma2, prior);
    if (options.record_trace) fit.trace.push_back(next);
    fit.iterations = iter;
    const bool done = converged_relative(current, next, options.tol);
    current = next;
    if (done) {
      fit.converged = true;
      break;
    }
  }

  fit.beta = std::move(beta);
  fit.sigma2 = sigma2;
  fit.weights = e_step(residuals, sigma2, prior.nu);
  fit.loglik = t_log_likelihood(residuals, sigma2, prior.nu);
  fit.log_posterior = current;
  return fit;
}

RobustFit fit_em(const LightCurve& curve, const Eigen::Ref<const Eigen::MatrixXd>& design,
                 const PriorConfig& prior, const EmOptions& options) {
  const Eigen::Map<const Eigen::VectorXd> y(curve.values.data(), static_cast<Eigen::Index>(curve.values.size()));
  return fit_em(y, design, prior, options);
}

RobustFit fit_null(const LightCurve& curve, const DesignMatrix& design, const PriorConfig& prior,
                   const EmOptions& options) {
  return fit_em(curve, design.values.leftCols(design.null_columns()), prior, options);
}

RobustFit fit_alternative(const LightCurve& curve, const DesignMatrix& design, const PriorConfig& prior,
                          const EmOptions& options) {
  return fit_em(curve, design.values, prior, options);
}

}  // namespace bumphunt
