#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace medlfrm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Linear SVM with per-example margins and slack costs:
//
//   min_w  1/2 |w|^2 + sum_m box_m * max(0, margin_m - y_m <w, x_m>)
//
// whose dual is
//
//   max_w  sum_m margin_m w_m - 1/2 |sum_m w_m y_m x_m|^2,  0 <= w_m <= box_m.
struct SvmProblem {
  RowMatrix features;           // M x P, one example per row
  std::vector<int> labels;      // +1 / -1
  std::vector<double> margins;  // finite
  std::vector<double> boxes;    // > 0
  double tol = 1e-4;
  int max_sweeps = 1000;
  std::uint64_t seed = 0;       // coordinate order per sweep

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(features.cols()); }
  // Throws std::invalid_argument when the invariants above do not hold.
  void validate() const;
};

struct SvmSolution {
  Eigen::VectorXd weights;
  Eigen::VectorXd duals;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  int iterations = 0;            // sweeps
  double max_violation = 0.0;    // largest |projected gradient| in the last sweep
  bool converged = false;
};

// Dual coordinate ascent with exact 1-D steps. Stops when every projected
// gradient is within tol and primal - dual <= tol * (1 + |primal|);
// otherwise returns the last iterate with converged = false.
SvmSolution solve(const SvmProblem& prob, const std::optional<Eigen::VectorXd>& warm = std::nullopt);

double primal_objective(const SvmProblem& prob, const Eigen::VectorXd& weights);
double dual_objective(const SvmProblem& prob, const Eigen::VectorXd& duals);

// sum_m duals_m y_m x_m.
Eigen::VectorXd recover_weights(const SvmProblem& prob, const Eigen::VectorXd& duals);

}  // namespace medlfrm
