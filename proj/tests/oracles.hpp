// Reference computations used by the tests. Each one is written from first
// principles and shares no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// E[z_i^T-weighted bilinear form] by summing over every binary configuration.
inline double enumerate_bilinear(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& pi,
                                 const Eigen::VectorXd& pj, bool same) {
  const int K = static_cast<int>(pi.size());
  auto prob = [](const Eigen::VectorXd& p, unsigned mask) {
    double q = 1.0;
    for (int k = 0; k < p.size(); ++k) q *= (mask >> k & 1u) ? p[k] : 1.0 - p[k];
    return q;
  };
  auto form = [&](unsigned a, unsigned b) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < K; ++l) {
        if ((a >> k & 1u) && (b >> l & 1u)) s += lambda(k, l);
      }
    }
    return s;
  };
  double total = 0.0;
  const unsigned n = 1u << K;
  if (same) {
    for (unsigned a = 0; a < n; ++a) total += prob(pi, a) * form(a, a);
  } else {
    for (unsigned a = 0; a < n; ++a) {
      for (unsigned b = 0; b < n; ++b) total += prob(pi, a) * prob(pj, b) * form(a, b);
    }
  }
  return total;
}

// Box-constrained dual QP max m^T a - 1/2 |G^T a|^2, 0 <= a <= box, with G
// rows y_m x_m, solved by accelerated projected gradient with restarts.
// dual is the accurate lower bound on the optimum; primal at w(a) lags it.
struct QpResult {
  Eigen::VectorXd duals;
  Eigen::VectorXd weights;
  double primal = 0.0;
  double dual = 0.0;
};

inline double svm_primal(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<double>& margins,
                         const std::vector<double>& boxes, const Eigen::VectorXd& w) {
  double v = 0.5 * w.squaredNorm();
  for (int m = 0; m < x.rows(); ++m) v += boxes[m] * std::max(0.0, margins[m] - y[m] * x.row(m).dot(w));
  return v;
}

inline QpResult projected_gradient_qp(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                      const std::vector<double>& margins, const std::vector<double>& boxes,
                                      int max_iter = 400000) {
  const int M = static_cast<int>(x.rows());
  Eigen::MatrixXd g = x;
  for (int m = 0; m < M; ++m) g.row(m) *= y[m];
  const Eigen::MatrixXd q = g * g.transpose();
  const double lip = std::max(q.eigenvalues().real().maxCoeff(), 1e-12);
  Eigen::VectorXd mvec = Eigen::Map<const Eigen::VectorXd>(margins.data(), M);
  Eigen::VectorXd hi = Eigen::Map<const Eigen::VectorXd>(boxes.data(), M);
  auto project = [&](Eigen::VectorXd v) { return v.cwiseMax(0.0).cwiseMin(hi); };
  auto dual = [&](const Eigen::VectorXd& a) { return mvec.dot(a) - 0.5 * a.dot(q * a); };

  Eigen::VectorXd a = Eigen::VectorXd::Zero(M), prev = a, z = a;
  double t = 1.0;
  QpResult best;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd next = project(z + (mvec - q * z) / lip);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (dual(next) < dual(a)) {  // restart momentum
      t = 1.0;
      z = a;
      continue;
    }
    z = next + ((t - 1.0) / tn) * (next - a);
    prev = a;
    a = next;
    t = tn;
    if (it % 1000 == 999) {
      const Eigen::VectorXd w = g.transpose() * a;
      if (svm_primal(x, y, margins, boxes, w) - dual(a) < 1e-12) break;
    }
  }
  best.duals = a;
  best.weights = g.transpose() * a;
  best.primal = svm_primal(x, y, margins, boxes, best.weights);
  best.dual = dual(a);
  return best;
}

// Normal-Gamma posterior by absorbing one observation at a time
// (rate-form scatter S, so E[tau] = nu / S).
struct NormalGamma {
  double mu, n, nu, s;
};

inline NormalGamma sequential_normal_gamma(const std::vector<double>& values, NormalGamma prior) {
  NormalGamma p = prior;
  for (double x : values) {
    const double d = x - p.mu;
    p.s += p.n * d * d / (p.n + 1.0);
    p.mu = (p.n * p.mu + x) / (p.n + 1.0);
    p.n += 1.0;
    p.nu += 1.0;
  }
  return p;
}

// Monte-Carlo mean and standard error of log(1 - prod_{j<k} nu_j) with
// nu_j ~ Beta(a_j, b_j).
inline std::pair<double, double> mc_log_tail(const std::vector<std::pair<double, double>>& gamma, int k, int draws,
                                             unsigned seed) {
  std::mt19937_64 gen(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (int d = 0; d < draws; ++d) {
    double prod = 1.0;
    for (int j = 0; j < k; ++j) {
      std::gamma_distribution<double> ga(gamma[j].first, 1.0), gb(gamma[j].second, 1.0);
      const double u = ga(gen), v = gb(gen);
      prod *= u / (u + v);
    }
    const double v = std::log1p(-prod);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / draws;
  const double var = (sum_sq / draws - mean * mean) * draws / (draws - 1.0);
  return {mean, std::sqrt(std::max(var, 0.0) / draws)};
}

// P(score+ > score-) + 1/2 P(tie) by counting every pair.
inline double pair_count_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (std::size_t b = 0; b < s.size(); ++b) {
      if (y[a] != 1 || y[b] != -1) continue;
      den += 1.0;
      num += s[a] > s[b] ? 1.0 : (s[a] == s[b] ? 0.5 : 0.0);
    }
  }
  return num / den;
}

}  // namespace oracle
