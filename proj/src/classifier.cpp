// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#include "bumphunt/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bumphunt/text_io.hpp"

namespace bumphunt {
namespace {

constexpr double kGradientTolerance = 1e-8;
constexpr int kMaxNewtonIterations = 1000;

double log1p_exp(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double inv_logit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

Eigen::MatrixXd with_intercept(const Eigen::Ref<const Eigen::MatrixXd>& standardized) {
  Eigen::MatrixXd x(standardized.rows(), standardized.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(standardized.cols()) = standardized;
  return x;
}

void check_labels(std::span<const int> labels, Eigen::Index rows, int* n_pos, int* n_neg) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) throw std::invalid_argument("labels and features differ in length");
  int pos = 0;
  int neg = 0;
  for (int y : labels) {
    if (y == 1) ++pos;
    else if (y == 0) ++neg;
    else throw std::invalid_argument("labels must be 0 or 1");
  }
  if (pos == 0 || neg == 0) throw std::invalid_argument("both classes must be present to fit the classifier");
  *n_pos = pos;
  *n_neg = neg;
}

std::string join(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += format_double(v(i));
  }
  return s;
}

Eigen::VectorXd parse_vector(const std::string& text) {
  const auto parts = split_whitespace(text);
  Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_double(parts[i]);
  return v;
}

}  // namespace

double LogisticModel::linear_predictor(std::span<const double> row) const {
  if (static_cast<Eigen::Index>(row.size()) != n_features()) {
    throw std::invalid_argument("feature row has the wrong number of columns");
  }
  double eta = coefficients(0);
  for (Eigen::Index j = 0; j < n_features(); ++j) {
    eta += coefficients(j + 1) * ((row[static_cast<std::size_t>(j)] - centers(j)) / scales(j));
  }
  return eta;
}

Standardization standardize_features(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                     std::span<const std::string> names) {
  if (features.rows() < 2) throw std::invalid_argument("standardize_features needs at least two rows");
  if (!features.allFinite()) throw std::invalid_argument("standardize_features: non-finite entry");
  Standardization s;
  const auto n = static_cast<double>(features.rows());
  s.centers = features.colwise().sum().transpose() / n;
  s.scales.resize(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double var = (features.col(j).array() - s.centers(j)).square().sum() / n;
    if (!(var > 0.0)) {
      const std::string name = static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                                           : "column " + std::to_string(j);
      throw std::invalid_argument("feature '" + name + "' has zero variance");
    }
    s.scales(j) = 2.0 * std::sqrt(var);
  }
  s.standardized = (features.rowwise() - s.centers.transpose()).array().rowwise() / s.scales.transpose().array();
  return s;
}

Eigen::VectorXd default_prior_scales(Eigen::Index n_features) {
  Eigen::VectorXd s = Eigen::VectorXd::Constant(n_features + 1, 2.5);
  s(0) = 10.0;
  return s;
}

double logistic_log_posterior(const Eigen::Ref<const Eigen::MatrixXd>& standardized, std::span<const int> labels,
                              const Eigen::Ref<const Eigen::VectorXd>& coefficients,
                              const Eigen::Ref<const Eigen::VectorXd>& prior_scales) {
  const Eigen::VectorXd eta =
      (standardized * coefficients.tail(standardized.cols())).array() + coefficients(0);
  double value = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    value += labels[static_cast<std::size_t>(i)] * eta(i) - log1p_exp(eta(i));
  }
  for (Eigen::Index j = 0; j < coefficients.size(); ++j) {
    const double r = coefficients(j) / prior_scales(j);
    value -= std::log1p(r * r);
  }
  return value;
}

LogisticModel fit_logistic_map(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels,
                               const Eigen::VectorXd& prior_scales) {
  LogisticModel model;
  check_labels(labels, features.rows(), &model.n_pos, &model.n_neg);
  const Standardization st = standardize_features(features, model.feature_names);
  model.centers = st.centers;
  model.scales = st.scales;
  model.prior_scales = prior_scales.size() ? prior_scales : default_prior_scales(features.cols());
  if (model.prior_scales.size() != features.cols() + 1 || !(model.prior_scales.array() > 0.0).all()) {
    throw std::invalid_argument("prior scales must be positive, one per coefficient");
  }
  if (static_cast<Eigen::Index>(model.feature_names.size()) != features.cols()) {
    model.feature_names.clear();
    for (Eigen::Index j = 0; j < features.cols(); ++j) model.feature_names.push_back("x" + std::to_string(j));
  }

  const Eigen::MatrixXd x = with_intercept(st.standardized);
  const Eigen::Index p = x.cols();
  const Eigen::ArrayXd s2 = model.prior_scales.array().square();
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = labels[static_cast<std::size_t>(i)];

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double objective = logistic_log_posterior(st.standardized, labels, beta, model.prior_scales);
  double grad_norm = 0.0;

  for (int iter = 0; iter < kMaxNewtonIterations; ++iter) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd prob(eta.size());
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      prob(i) = inv_logit(eta(i));
      w(i) = prob(i) * (1.0 - prob(i));
    }
    const Eigen::ArrayXd b2 = beta.array().square();
    const Eigen::VectorXd gradient = x.transpose() * (y - prob) - (2.0 * beta.array() / (s2 + b2)).matrix();
    grad_norm = gradient.norm();
    if (grad_norm <= kGradientTolerance) {
      model.coefficients = beta;
      model.iterations = iter;
      return model;
    }

    // Negative Hessian; the Cauchy term is not concave beyond its scale, in
    // which case its curvature is replaced by the positive 2 / (s^2 + b^2).
    const Eigen::MatrixXd data_curvature = x.transpose() * w.asDiagonal() * x;
    Eigen::MatrixXd curvature = data_curvature;
    curvature.diagonal().array() += (2.0 * (s2 - b2) / (s2 + b2).square());
    Eigen::LLT<Eigen::MatrixXd> llt(curvature);
    if (llt.info() != Eigen::Success) {
      curvature = data_curvature;
      curvature.diagonal().array() += 2.0 / (s2 + b2);
      llt.compute(curvature);
      if (llt.info() != Eigen::Success) throw std::runtime_error("fit_logistic_map: curvature not positive definite");
    }
    const Eigen::VectorXd step = llt.solve(gradient);

    double t = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double next = logistic_log_posterior(st.standardized, labels, candidate, model.prior_scales);
    // Predicted gain below the rounding level of the objective: plain Newton.
    if (gradient.dot(step) <= 1e-12 * (1.0 + std::abs(objective))) {
      beta = candidate;
      objective = next;
      continue;
    }
    for (int halving = 0; halving < 60 && !(next >= objective); ++halving) {
      t *= 0.5;
      candidate = beta + t * step;
      next = logistic_log_posterior(st.standardized, labels, candidate, model.prior_scales);
    }
    if (!(next >= objective)) break;  // no ascent possible at machine precision
    beta = candidate;
    objective = next;
  }

  // The last accepted iterate may still satisfy the tolerance.
  const Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd prob(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) prob(i) = inv_logit(eta(i));
  const Eigen::VectorXd gradient =
      x.transpose() * (y - prob) - (2.0 * beta.array() / (s2 + beta.array().square())).matrix();
  if (gradient.norm() <= kGradientTolerance) {
    model.coefficients = beta;
    model.iterations = kMaxNewtonIterations;
    return model;
  }
  std::ostringstream msg;
  msg << "fit_logistic_map did not converge: gradient norm " << gradient.norm() << ", objective " << objective
      << ", coefficients [" << join(beta) << "]";
  throw std::runtime_error(msg.str());
}

double predict_prob(const LogisticModel& model, std::span<const double> row) {
  return inv_logit(model.linear_predictor(row));
}

ClassProbability combine_probability(bool selected, double p_event_given_variable) {
  ClassProbability c;
  c.p_variable = selected ? 1.0 : 0.0;
  c.p_event_given_variable = p_event_given_variable;
  c.p_event = c.p_variable * p_event_given_variable;
  return c;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_curve: length mismatch");
  std::size_t pos = 0;
  for (int y : labels) pos += y == 1 ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc_curve needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] == 1) ++tp; else ++fp;
      ++i;
    }
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
    roc.thresholds.push_back(s);
  }
  for (std::size_t k = 1; k < roc.fpr.size(); ++k) {
    roc.auc += (roc.fpr[k] - roc.fpr[k - 1]) * 0.5 * (roc.tpr[k] + roc.tpr[k - 1]);
  }
  return roc;
}

CrossValidation cross_validate(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels, int k,
                               std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("cross_validate: k must be at least 2");
  int n_pos = 0;
  int n_neg = 0;
  check_labels(labels, features.rows(), &n_pos, &n_neg);

  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? positives : negatives).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(positives.begin(), positives.end(), rng);
  std::shuffle(negatives.begin(), negatives.end(), rng);

  CrossValidation cv;
  cv.fold_of.assign(labels.size(), 0);
  for (std::size_t i = 0; i < positives.size(); ++i) cv.fold_of[positives[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < negatives.size(); ++i) cv.fold_of[negatives[i]] = static_cast<int>(i % static_cast<std::size_t>(k));

  double auc_sum = 0.0;
  for (int fold = 0; fold < k; ++fold) {
    std::vector<Eigen::Index> train_rows;
    std::vector<Eigen::Index> test_rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      (cv.fold_of[i] == fold ? test_rows : train_rows).push_back(static_cast<Eigen::Index>(i));
    }
    std::vector<int> train_labels;
    std::vector<int> test_labels;
    for (auto r : train_rows) train_labels.push_back(labels[static_cast<std::size_t>(r)]);
    for (auto r : test_rows) test_labels.push_back(labels[static_cast<std::size_t>(r)]);
    const bool has_both = std::count(test_labels.begin(), test_labels.end(), 1) > 0 &&
                          std::count(test_labels.begin(), test_labels.end(), 0) > 0;
    if (!has_both) throw std::runtime_error("cross_validate: fold " + std::to_string(fold) + " is missing a class");

    const Eigen::MatrixXd train = features(train_rows, Eigen::all);
    const LogisticModel model = fit_logistic_map(train, train_labels);
    std::vector<double> scores;
    scores.reserve(test_rows.size());
    std::vector<double> row(static_cast<std::size_t>(features.cols()));
    for (auto r : test_rows) {
      for (Eigen::Index j = 0; j < features.cols(); ++j) row[static_cast<std::size_t>(j)] = features(r, j);
      scores.push_back(predict_prob(model, row));
    }
    cv.folds.push_back(roc_curve(scores, test_labels));
    auc_sum += cv.folds.back().auc;
  }
  cv.mean_auc = auc_sum / k;
  return cv;
}

void write_model(const LogisticModel& model, std::ostream& out) {
  out << "bumphunt_logistic_model 1\n";
  out << "features";
  for (const auto& f : model.feature_names) out << ' ' << f;
  out << '\n';
  out << "standardization center_mean_scale_two_sd\n";
  out << "coefficients " << join(model.coefficients) << '\n';
  out << "centers " << join(model.centers) << '\n';
  out << "scales " << join(model.scales) << '\n';
  out << "prior_scales " << join(model.prior_scales) << '\n';
  out << "prior_family cauchy\n";
  out << "n_pos " << model.n_pos << '\n';
  out << "n_neg " << model.n_neg << '\n';
  out << "cv_auc " << format_double(model.cv_auc) << '\n';
  out << "iterations " << model.iterations << '\n';
}

LogisticModel read_model(std::istream& in) {
  const KeyValues kv = read_key_values(in);
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error(std::string("model file is missing '") + key + "'");
    return it->second;
  };
  if (get("bumphunt_logistic_model") != "1") throw std::runtime_error("unsupported model file version");
  LogisticModel m;
  m.feature_names = split_whitespace(get("features"));
  m.coefficients = parse_vector(get("coefficients"));
  m.centers = parse_vector(get("centers"));
  m.scales = parse_vector(get("scales"));
  m.prior_scales = parse_vector(get("prior_scales"));
  m.n_pos = static_cast<int>(parse_integer(get("n_pos")));
  m.n_neg = static_cast<int>(parse_integer(get("n_neg")));
  m.cv_auc = parse_double(get("cv_auc"));
  m.iterations = static_cast<int>(parse_integer(get("iterations")));
  const auto p = static_cast<Eigen::Index>(m.feature_names.size());
  if (m.centers.size() != p || m.scales.size() != p || m.coefficients.size() != p + 1 ||
      m.prior_scales.size() != p + 1) {
    throw std::runtime_error("model file vectors have inconsistent lengths");
  }
  if (!(m.scales.array() > 0.0).all()) throw std::runtime_error("model file scales must be positive");
  return m;
}

}  // namespace bumphunt
