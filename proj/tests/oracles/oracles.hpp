// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

// Reference implementations used by the tests. None of these call into the
// library; they are deliberately slow and straightforward.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Scaling-function values at integers 0..L-1 by power iteration on the
// refinement matrix A[k][m] = sqrt(2) h[2k - m].
inline std::vector<double> integer_point_values(const std::vector<double>& h) {
  const int n = static_cast<int>(h.size());
  std::vector<long double> v(static_cast<std::size_t>(n), 1.0L / n);
  for (int it = 0; it < 400; ++it) {
    std::vector<long double> next(static_cast<std::size_t>(n), 0.0L);
    for (int k = 0; k < n; ++k) {
      for (int m = 0; m < n; ++m) {
        const int j = 2 * k - m;
        if (j >= 0 && j < n) next[static_cast<std::size_t>(k)] += std::sqrt(2.0L) * h[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(m)];
      }
    }
    long double sum = 0.0L;
    for (long double x : next) sum += x;
    for (auto& x : next) x /= sum;
    v = next;
  }
  return {v.begin(), v.end()};
}

// One level of the periodized forward transform, written as explicit sums.
inline void dwt_step(const std::vector<double>& x, const std::vector<double>& h, std::vector<double>& approx,
                     std::vector<double>& detail) {
  const int n = static_cast<int>(x.size());
  const int len = static_cast<int>(h.size());
  approx.assign(static_cast<std::size_t>(n / 2), 0.0);
  detail.assign(static_cast<std::size_t>(n / 2), 0.0);
  for (int k = 0; k < n / 2; ++k) {
    for (int l = 0; l < len; ++l) {
      const double g = ((l % 2) ? -1.0 : 1.0) * h[static_cast<std::size_t>(len - 1 - l)];
      const double xv = x[static_cast<std::size_t>((2 * k + l) % n)];
      approx[static_cast<std::size_t>(k)] += h[static_cast<std::size_t>(l)] * xv;
      detail[static_cast<std::size_t>(k)] += g * xv;
    }
  }
}

// Full periodized DWT down to `coarsest` level: returns the scaling block at
// that level followed by detail blocks from coarse to fine.
inline std::vector<double> dwt(const std::vector<double>& x, const std::vector<double>& h, int coarsest) {
  std::vector<std::vector<double>> details;
  std::vector<double> a = x;
  while (static_cast<int>(a.size()) > (1 << coarsest)) {
    std::vector<double> na, nd;
    dwt_step(a, h, na, nd);
    details.push_back(nd);
    a = na;
  }
  std::vector<double> out = a;
  for (auto it = details.rbegin(); it != details.rend(); ++it) out.insert(out.end(), it->begin(), it->end());
  return out;
}

// Regularized upper incomplete gamma Q(a, x): series for x < a + 1, Lentz
// continued fraction otherwise.
inline long double gamma_q(long double a, long double x) {
  if (x <= 0) return 1.0L;
  const long double lead = std::exp(a * std::log(x) - x - std::lgamma(a));
  if (x < a + 1) {
    long double term = 1.0L / a, sum = term;
    for (int n = 1; n < 100000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-21L) break;
    }
    return 1.0L - sum * lead;
  }
  const long double tiny = 1e-300L;
  long double b = x + 1 - a, c = 1 / tiny, d = 1 / b, f = d;
  for (int i = 1; i < 100000; ++i) {
    const long double an = -i * (i - a);
    b += 2;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1 / d;
    const long double delta = d * c;
    f *= delta;
    if (std::fabs(delta - 1) < 1e-21L) break;
  }
  return lead * f;
}

inline double chi2_upper(double x, int df) { return static_cast<double>(gamma_q(df / 2.0L, x / 2.0L)); }

// Student-t location-scale log density.
inline long double t_log_density(long double r, long double sigma2, long double nu) {
  return std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5L * std::log(nu * 3.14159265358979323846264338327950288L * sigma2) -
         (nu + 1) / 2 * std::log1p(r * r / (nu * sigma2));
}

// Gaussian elimination with partial pivoting in long double.
inline Eigen::VectorXd dense_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.rows();
  std::vector<std::vector<long double>> m(static_cast<std::size_t>(n), std::vector<long double>(static_cast<std::size_t>(n + 1)));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m[i][j] = a(i, j);
    m[i][n] = b(i);
  }
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::fabs(m[r][c]) > std::fabs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const long double f = m[r][c] / m[c][c];
      for (Eigen::Index j = c; j <= n; ++j) m[r][j] -= f * m[c][j];
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    long double s = m[i][n];
    for (Eigen::Index j = i + 1; j < n; ++j) s -= m[i][j] * x(j);
    x(i) = static_cast<double>(s / m[i][i]);
  }
  return x;
}

// BFGS maximizer with backtracking line search. Stops when the gradient
// infinity norm falls below `gtol`.
struct Maximum {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

inline Maximum bfgs_maximize(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& f,
                             Eigen::VectorXd x, double gtol = 1e-10, int max_iter = 20000) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  double fx = f(x, g);
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  Maximum out;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() < gtol) break;
    Eigen::VectorXd dir = h * g;
    if (dir.dot(g) <= 0) {
      h.setIdentity();
      dir = g;
    }
    double step = 1.0;
    Eigen::VectorXd xn(n), gn(n);
    double fn = 0.0;
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls) {
      xn = x + step * dir;
      fn = f(xn, gn);
      if (std::isfinite(fn) && fn >= fx + 1e-4 * step * dir.dot(g)) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = g - gn;  // gradient of -f
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      const Eigen::VectorXd hy = h * y;
      h += ((sy + y.dot(hy)) / (sy * sy)) * (s * s.transpose()) - (hy * s.transpose() + s * hy.transpose()) / sy;
    }
    x = xn;
    fx = fn;
    g = gn;
  }
  out.x = x;
  out.value = fx;
  out.grad_norm = g.lpNorm<Eigen::Infinity>();
  return out;
}

// Newton iterations with a central-difference Hessian of the analytic
// gradient and step halving; used to polish a BFGS result.
inline Maximum newton_polish(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& f,
                             Eigen::VectorXd x, double gtol, int max_iter = 30) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n), gp(n), gm(n);
  double fx = f(x, g);
  Maximum out;
  for (int it = 0; it < max_iter && g.lpNorm<Eigen::Infinity>() >= gtol; ++it) {
    Eigen::MatrixXd hess(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-5 * std::max(1.0, std::fabs(x(j)));
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      f(xp, gp);
      f(xm, gm);
      hess.col(j) = (gp - gm) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    const Eigen::VectorXd step = dense_solve(-hess, g);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd gn(n);
      const Eigen::VectorXd xn = x + t * step;
      const double fn = f(xn, gn);
      if (std::isfinite(fn) && fn >= fx - 1e-12 * std::fabs(fx)) {
        x = xn;
        fx = fn;
        g = gn;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    out.iterations = it + 1;
  }
  out.x = x;
  out.value = fx;
  out.grad_norm = g.lpNorm<Eigen::Infinity>();
  return out;
}

// Penalized t-regression objective in (beta, log sigma2) with gradient:
// t log-likelihood, N(0, sigma2 / tau) on beta[1:], and 1/sigma2 on sigma2.
inline double em_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tau, double nu,
                           const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
  const Eigen::Index p = x.cols();
  const Eigen::VectorXd beta = theta.head(p);
  const double s = theta(p);
  const double sigma2 = std::exp(s);
  const Eigen::VectorXd r = y - x * beta;
  const double lead = static_cast<double>(t_log_density(0.0L, sigma2, nu));
  double value = 0.0;
  Eigen::VectorXd v(r.size());
  double gs = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    value += lead - 0.5 * (nu + 1.0) * std::log1p(r(i) * r(i) / (nu * sigma2));
    const double denom = nu * sigma2 + r(i) * r(i);
    v(i) = (nu + 1.0) * r(i) / denom;
    gs += -0.5 + 0.5 * (nu + 1.0) * r(i) * r(i) / denom;
  }
  Eigen::VectorXd gb = x.transpose() * v;
  double pen = 0.0;
  for (Eigen::Index j = 1; j < p; ++j) pen += beta(j) * beta(j);
  const double m = static_cast<double>(p - 1);
  value += -0.5 * m * std::log(2.0 * M_PI * sigma2 / tau) - 0.5 * tau * pen / sigma2 - s;
  for (Eigen::Index j = 1; j < p; ++j) gb(j) -= tau * beta(j) / sigma2;
  gs += -0.5 * m + 0.5 * tau * pen / sigma2 - 1.0;
  grad.resize(p + 1);
  grad.head(p) = gb;
  grad(p) = gs;
  return value;
}

// MAP of the penalized t regression, started from the ridge least-squares fit.
inline Maximum em_map(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double tau, double nu) {
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd a = x.transpose() * x;
  for (Eigen::Index j = 1; j < p; ++j) a(j, j) += tau;
  Eigen::VectorXd theta(p + 1);
  theta.head(p) = dense_solve(a, x.transpose() * y);
  theta(p) = std::log((y - x * theta.head(p)).squaredNorm() / static_cast<double>(y.size()));
  const auto f = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) { return em_objective(x, y, tau, nu, t, g); };
  const Maximum coarse = bfgs_maximize(f, theta, 1e-3, 3000);
  return newton_polish(f, coarse.x, 1e-10);
}

// Logistic log-likelihood plus independent Cauchy(0, s_j) log priors (up to constants).
inline double logistic_objective(const Eigen::MatrixXd& z, const std::vector<int>& labels, const Eigen::VectorXd& scales,
                                 const Eigen::VectorXd& b, Eigen::VectorXd& grad) {
  grad = Eigen::VectorXd::Zero(b.size());
  double value = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double eta = b(0);
    for (Eigen::Index j = 0; j < z.cols(); ++j) eta += b(j + 1) * z(i, j);
    const double lse = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
    value += labels[static_cast<std::size_t>(i)] * eta - lse;
    const double resid = labels[static_cast<std::size_t>(i)] - 1.0 / (1.0 + std::exp(-eta));
    grad(0) += resid;
    for (Eigen::Index j = 0; j < z.cols(); ++j) grad(j + 1) += resid * z(i, j);
  }
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const double s2 = scales(j) * scales(j);
    value -= std::log1p(b(j) * b(j) / s2);
    grad(j) -= 2.0 * b(j) / (s2 + b(j) * b(j));
  }
  return value;
}

// Column means and 2 * population SD.
inline void standardize(const Eigen::MatrixXd& f, Eigen::MatrixXd& z, Eigen::VectorXd& centers, Eigen::VectorXd& scales) {
  const Eigen::Index n = f.rows();
  centers.resize(f.cols());
  scales.resize(f.cols());
  z.resize(n, f.cols());
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    long double s = 0, ss = 0;
    for (Eigen::Index i = 0; i < n; ++i) s += f(i, j);
    const long double mean = s / n;
    for (Eigen::Index i = 0; i < n; ++i) ss += (f(i, j) - mean) * (f(i, j) - mean);
    centers(j) = static_cast<double>(mean);
    scales(j) = static_cast<double>(2.0L * std::sqrt(ss / n));
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = (f(i, j) - centers(j)) / scales(j);
  }
}

// Step-up selection by ranks: p_i qualifies when p_i <= rank(p_i) q / (m c),
// rank counting every p_j <= p_i. Everything at or below the largest
// qualifying p is selected.
inline std::vector<bool> fdr_brute(const std::vector<double>& p, double q, bool by) {
  const std::size_t m = p.size();
  double c = 1.0;
  if (by) {
    c = 0.0;
    for (std::size_t j = 1; j <= m; ++j) c += 1.0 / static_cast<double>(j);
  }
  double cut = -1.0;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t rank = 0;
    for (std::size_t j = 0; j < m; ++j) rank += p[j] <= p[i];
    if (p[i] <= static_cast<double>(rank) * q / (static_cast<double>(m) * c)) cut = std::max(cut, p[i]);
  }
  std::vector<bool> sel(m);
  for (std::size_t i = 0; i < m; ++i) sel[i] = p[i] <= cut;
  return sel;
}

// log(1 + (max S - min S) / sqrt(n)), each partial sum recomputed from scratch.
inline double cusum_brute(const std::vector<double>& z) {
  const std::size_t n = z.size();
  long double hi = 0, lo = 0;
  for (std::size_t t = 1; t <= n; ++t) {
    long double s = 0;
    for (std::size_t u = 0; u < t; ++u) s += static_cast<long double>(z[u]) * z[u] - 1;
    hi = std::max(hi, s);
    lo = std::min(lo, s);
  }
  return static_cast<double>(std::log1p((hi - lo) / std::sqrt(static_cast<long double>(n))));
}

inline double median_brute(std::vector<double> z) {
  std::sort(z.begin(), z.end());
  const std::size_t n = z.size();
  return n % 2 ? z[n / 2] : 0.5 * (z[n / 2 - 1] + z[n / 2]);
}

inline double dv_brute(const std::vector<double>& z, double med) {
  long double above = 0, below = 0;
  int na = 0, nb = 0;
  for (double v : z) {
    if (v > med) {
      above += static_cast<long double>(v) * v;
      ++na;
    } else if (v < med) {
      below += static_cast<long double>(v) * v;
      ++nb;
    }
  }
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(above / na - below / nb);
}

// Mann-Whitney AUC by pair counting, ties worth one half.
inline double auc_pairs(const std::vector<double>& score, const std::vector<int>& label) {
  long double wins = 0;
  long double pairs = 0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (!label[i]) continue;
    for (std::size_t j = 0; j < score.size(); ++j) {
      if (label[j]) continue;
      pairs += 1;
      wins += score[i] > score[j] ? 1.0L : (score[i] == score[j] ? 0.5L : 0.0L);
    }
  }
  return static_cast<double>(wins / pairs);
}

// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
inline double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - p[i]);
    d = std::max(d, p[i] - static_cast<double>(i) / n);
  }
  return d;
}

// Point-lens magnification written out directly in long double.
inline double paczynski(long double t, long double u0, long double t0, long double te) {
  const long double x = (t - t0) / te;
  const long double u = std::sqrt(u0 * u0 + x * x);
  return static_cast<double>((u * u + 2) / (u * std::sqrt(u * u + 4)));
}

}  // namespace oracle
