#include "medlfrm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "medlfrm/random.hpp"

namespace medlfrm {

void SvmProblem::validate() const {
  const auto m = labels.size();
  if (m == 0) throw std::invalid_argument("svm: problem has no examples");
  if (features.cols() == 0) throw std::invalid_argument("svm: zero-dimension features");
  if (static_cast<std::size_t>(features.rows()) != m || margins.size() != m || boxes.size() != m) {
    throw std::invalid_argument("svm: features, labels, margins and boxes differ in length");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] != 1 && labels[i] != -1) throw std::invalid_argument("svm: labels must be +1 or -1");
    if (!std::isfinite(margins[i])) throw std::invalid_argument("svm: margins must be finite");
    if (!(boxes[i] > 0.0) || !std::isfinite(boxes[i])) {
      throw std::invalid_argument("svm: boxes must be positive and finite");
    }
  }
  if (!(tol > 0.0)) throw std::invalid_argument("svm: tol must be positive");
  if (max_sweeps < 1) throw std::invalid_argument("svm: max_sweeps must be >= 1");
}

Eigen::VectorXd recover_weights(const SvmProblem& prob, const Eigen::VectorXd& duals) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(prob.features.cols());
  for (Eigen::Index m = 0; m < prob.features.rows(); ++m) {
    if (duals[m] != 0.0) w.noalias() += (duals[m] * prob.labels[m]) * prob.features.row(m).transpose();
  }
  return w;
}

double primal_objective(const SvmProblem& prob, const Eigen::VectorXd& weights) {
  if (weights.size() != prob.features.cols()) {
    throw std::invalid_argument("svm: weight dimension mismatch");
  }
  double loss = 0.0;
  for (Eigen::Index m = 0; m < prob.features.rows(); ++m) {
    const double slack = prob.margins[m] - prob.labels[m] * prob.features.row(m).dot(weights);
    if (slack > 0.0) loss += prob.boxes[m] * slack;
  }
  return 0.5 * weights.squaredNorm() + loss;
}

double dual_objective(const SvmProblem& prob, const Eigen::VectorXd& duals) {
  double linear = 0.0;
  for (Eigen::Index m = 0; m < duals.size(); ++m) linear += prob.margins[m] * duals[m];
  return linear - 0.5 * recover_weights(prob, duals).squaredNorm();
}

SvmSolution solve(const SvmProblem& prob, const std::optional<Eigen::VectorXd>& warm) {
  prob.validate();
  const auto M = static_cast<Eigen::Index>(prob.size());

  SvmSolution sol;
  sol.duals = Eigen::VectorXd::Zero(M);
  if (warm) {
    if (warm->size() != M) throw std::invalid_argument("svm: warm start has the wrong length");
    for (Eigen::Index m = 0; m < M; ++m) {
      if (!((*warm)[m] >= 0.0 && (*warm)[m] <= prob.boxes[m])) {
        throw std::invalid_argument("svm: warm start outside its box");
      }
    }
    sol.duals = *warm;
  }
  Eigen::VectorXd& alpha = sol.duals;
  Eigen::VectorXd w = recover_weights(prob, alpha);

  Eigen::VectorXd sq_norm(M);
  for (Eigen::Index m = 0; m < M; ++m) sq_norm[m] = prob.features.row(m).squaredNorm();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(M));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(prob.seed);

  const Eigen::Map<const Eigen::VectorXd> margins(prob.margins.data(), M);
  auto projected = [&](Eigen::Index m, double grad) {
    if (alpha[m] <= 0.0) return std::max(grad, 0.0);
    if (alpha[m] >= prob.boxes[m]) return std::min(grad, 0.0);
    return grad;
  };
  // Exact test at the current point; the in-sweep maximum is only a trigger.
  auto converged_here = [&] {
    double max_pg = 0.0;
    for (Eigen::Index m = 0; m < M; ++m) {
      const double grad = prob.margins[m] - prob.labels[m] * prob.features.row(m).dot(w);
      max_pg = std::max(max_pg, std::abs(projected(m, grad)));
    }
    sol.max_violation = max_pg;
    if (max_pg > prob.tol) return false;
    const double primal = primal_objective(prob, w);
    const double dual = margins.dot(alpha) - 0.5 * w.squaredNorm();
    return primal - dual <= prob.tol * (1.0 + std::abs(primal));
  };

  if (warm && converged_here()) {
    sol.converged = true;
  }
  for (int sweep = 1; !sol.converged && sweep <= prob.max_sweeps; ++sweep) {
    rng.shuffle(order);
    double max_pg = 0.0;
    for (auto m : order) {
      const double y = prob.labels[m];
      const double box = prob.boxes[m];
      const double grad = prob.margins[m] - y * prob.features.row(m).dot(w);
      const double pg = projected(m, grad);
      max_pg = std::max(max_pg, std::abs(pg));
      if (pg == 0.0) continue;
      double next;
      if (sq_norm[m] > 0.0) {
        next = std::clamp(alpha[m] + grad / sq_norm[m], 0.0, box);
      } else {
        next = grad > 0.0 ? box : 0.0;
      }
      const double delta = next - alpha[m];
      if (delta != 0.0) {
        w.noalias() += (delta * y) * prob.features.row(m).transpose();
        alpha[m] = next;
      }
    }
    sol.iterations = sweep;
    sol.max_violation = max_pg;
    if (max_pg <= prob.tol && converged_here()) sol.converged = true;
  }

  sol.weights = recover_weights(prob, alpha);
  sol.primal_obj = primal_objective(prob, sol.weights);
  sol.dual_obj = margins.dot(alpha) - 0.5 * sol.weights.squaredNorm();
  return sol;
}

}  // namespace medlfrm
