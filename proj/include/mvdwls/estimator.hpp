#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "mvdwls/linreg.hpp"

namespace mvdwls {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using linreg::Dataset;
using linreg::FitResult;

struct SolverConfig {
  /// Admissible exponents. Roots closer than `boundary_margin` to an end are flagged.
  double m_min = -8.0;
  double m_max = 8.0;
  double epsilon = 1e-6;
  int max_outer_iters = 200;
  std::uint64_t optimizer_seed = 0;
  /// Differential evolution population; 0 means 15 * p.
  int population = 0;
  int generations = 200;
  /// Smallest admissible x'k for a unit-norm direction k.
  double w_floor = 1e-6;
  /// Below this optimal |r_s| the pipeline falls back to OLS.
  double min_abs_rs = 0.05;

  double root_scan_step = 0.25;
  double root_tolerance = 1e-8;
  double boundary_margin = 0.01;

  /// Throws InvalidArgument when the configuration is unusable.
  void validate() const;
  int population_for(Eigen::Index p) const;
};

/// Direction over the regressors and the positive variance driver w = scale * Xk.
/// `k` has unit Euclidean norm; `scale` makes min(w) == 1.
class CombinationWeights {
 public:
  /// Normalizes `raw = Xk` to min 1. Throws AssumptionOneViolated when all
  /// entries coincide and NonPositiveWeight when any is not positive.
  CombinationWeights(VectorXd k, const VectorXd& raw, double rs_abs);

  const VectorXd& k() const noexcept { return k_; }
  double scale() const noexcept { return scale_; }
  double rs_abs() const noexcept { return rs_abs_; }
  const VectorXd& w() const noexcept { return w_; }

  /// k rescaled so that X * scaled_k() == w.
  VectorXd scaled_k() const { return k_ * scale_; }
  /// k_j / k_0, the ratio reported for two-regressor problems.
  double ratio(Eigen::Index j, Eigen::Index i = 0) const { return k_(j) / k_(i); }

 private:
  VectorXd k_;
  double scale_;
  double rs_abs_;
  VectorXd w_;
};

/// sigma_i^2 = sigma2 * w_i^m.
struct VarianceModel {
  CombinationWeights combo;
  double m = 0.0;
  double sigma2 = 0.0;

  VectorXd variances() const;
};

enum class Method : std::uint8_t { Univariate, Multivariate };

struct MvdFit {
  Method method = Method::Multivariate;
  /// Empty when the pipeline fell back to OLS.
  std::optional<VarianceModel> model;
  FitResult fit;
  double loglik = 0.0;
  int iterations = 0;
  std::vector<double> m_trace;
  bool homoscedastic_fallback = false;
  bool boundary_solution = false;
  /// Univariate baseline only: 1-based design column driving the weights,
  /// and columns passed over because they were not strictly positive.
  Eigen::Index selected_column = 0;
  std::vector<Eigen::Index> rejected_columns;

  double m() const { return model ? model->m : 0.0; }
};

struct ObjectiveValue {
  double value = 0.0;
  bool feasible = false;
};

struct MSolution {
  double m = 0.0;
  std::vector<double> trace;
  bool boundary = false;
};

/// x* = Xk over the regressor block (no intercept column).
VectorXd combine(const MatrixXd& regressors, const VectorXd& k);

/// |spearman(Xk, abs_resid)|, or 0 flagged infeasible when Xk is constant or
/// some entry fails w_floor after the better sign choice.
ObjectiveValue combination_objective(const MatrixXd& regressors, const VectorXd& abs_resid, const VectorXd& k,
                                     double w_floor = 1e-6);

/// Maximizes the combination objective over directions: differential
/// evolution followed by a Nelder-Mead polish. For p == 1 the direction is
/// fixed at (+-1).
CombinationWeights optimize_combination(const MatrixXd& regressors, const VectorXd& abs_resid,
                                        const SolverConfig& cfg);

/// Gaussian log-likelihood with variances sigma2 * w_i^m.
double log_likelihood(const Dataset& data, const VectorXd& w, const VectorXd& beta, double sigma2, double m);

/// d l / d m at fixed beta and sigma2.
double log_likelihood_dm(const Dataset& data, const VectorXd& w, const VectorXd& beta, double sigma2, double m);

/// w_i^{-m}; throws WeightOverflow with the offending index.
VectorXd power_weights(const VectorXd& w, double m);

VectorXd profile_beta(const Dataset& data, const VectorXd& w, double m);
double profile_sigma2(const Dataset& data, const VectorXd& w, double m, const VectorXd& beta);
/// l(m, beta(m), sigma2(m)).
double profile_loglik(const Dataset& data, const VectorXd& w, double m);

/// sum(r^2 ln w / w^m) / sum(r^2 / w^m) - mean(ln w) with r = y - X beta(m).
/// Zero exactly where the profile log-likelihood is stationary in m.
double m_score(const Dataset& data, const VectorXd& w, double m);

/// Fixed-point iteration on the likelihood equation for m, starting from 0.
MSolution solve_m(const Dataset& data, const VectorXd& w, const SolverConfig& cfg);

/// Average per-observation Fisher information for m: mean((ln w)^2) / 2.
double fisher_info(const VectorXd& w);

/// Multivariate-dependent WLS: OLS residuals, optimal combination, profile
/// MLE of m, final weighted fit at w^{-m}.
MvdFit mvd_wls_fit(const Dataset& data, const SolverConfig& cfg);

/// Univariate baseline: weights x_j^{-m} for the regressor most rank-correlated
/// with |e|, m chosen on the grid 0, 0.05, ..., 6 by profile likelihood.
MvdFit uvd_wls_fit(const Dataset& data, const SolverConfig& cfg);

}  // namespace mvdwls
