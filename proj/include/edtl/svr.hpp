#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "edtl/matrix.hpp"

namespace edtl {

struct SVRHyperParams {
  double C = 1.0;
  double epsilon = 0.1;
  double gamma = 0.0;  // <= 0 means "choose by median heuristic at fit time"
};

// Kernel expansion f(z) = sum_i beta_i K(z, z_i) + bias with the Gaussian
// kernel exp(-||z - z_i||^2 / (2 gamma^2)). Only points with beta != 0 are
// stored.
struct SVRModel {
  Matrix support_points;          // n_sv x dim
  std::vector<double> dual_coefs; // beta_i = alpha_i - alpha_i*
  double bias = 0.0;
  double gamma = 1.0;
  SVRHyperParams hyper;
  bool converged = true;

  friend bool operator==(const SVRModel&, const SVRModel&) = default;
};

double rbf_kernel(std::span<const double> z, std::span<const double> z2, double gamma);

// Median pairwise distance / sqrt(2), so the median pair has kernel e^-1.
// All points identical -> 1.
double median_gamma(const Matrix& Z);

// Epsilon-insensitive SVR fitted by two-variable SMO with maximal-KKT-
// violation working-set selection on the standard dual (box [0, C], equality
// sum(alpha - alpha*) = 0). max_passes == 0 means 10 * N pair updates.
// If the tolerance is not reached within max_passes the returned model has
// converged == false. Optional outputs: the dual objective (maximization
// form) after every pair update, and the full beta vector over Z's rows.
SVRModel fit_svr(const Matrix& Z, std::span<const double> y, SVRHyperParams hp,
                 double tol = 1e-3, std::size_t max_passes = 0,
                 std::vector<double>* objective_trace = nullptr,
                 std::vector<double>* beta_out = nullptr);

double predict_svr(const SVRModel& model, std::span<const double> z);

// Maximization-form dual objective of a coefficient vector over (Z, y):
// -1/2 b'Kb - eps*||b||_1 + y'b.
double svr_dual_objective(const Matrix& Z, std::span<const double> y, double gamma,
                          double epsilon, std::span<const double> beta);

// Worst per-point KKT violation of a fitted model over its training set;
// 0 for an exactly optimal, feasible solution.
double svr_max_kkt_violation(const Matrix& Z, std::span<const double> y,
                             const SVRHyperParams& hp, const SVRModel& model,
                             std::span<const double> beta);

}  // namespace edtl
