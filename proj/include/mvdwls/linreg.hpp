#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mvdwls/error.hpp"

namespace mvdwls::linreg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Response vector plus design matrix. Column 0 of `X` is the intercept and
/// columns 1..p are regressors; `names` labels all p+1 columns.
class Dataset {
 public:
  /// Validates shape, finiteness and the intercept column. Throws Error.
  Dataset(VectorXd y, MatrixXd X, std::vector<std::string> names);

  /// Prepends the intercept column to a regressor block.
  static Dataset from_regressors(VectorXd y, const MatrixXd& regressors,
                                 std::vector<std::string> regressor_names = {},
                                 std::string response_name = "y");

  const VectorXd& y() const noexcept { return y_; }
  const MatrixXd& X() const noexcept { return X_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& response_name() const noexcept { return response_name_; }

  Eigen::Index n() const noexcept { return X_.rows(); }
  /// Number of non-intercept regressors.
  Eigen::Index p() const noexcept { return X_.cols() - 1; }

  /// The n×p regressor block (intercept excluded).
  MatrixXd regressors() const { return X_.rightCols(p()); }

  /// Keeps the intercept plus the listed regressor columns (1-based design indices).
  Dataset select_columns(const std::vector<Eigen::Index>& design_columns) const;
  Dataset select_rows(const std::vector<Eigen::Index>& rows) const;

  void set_response_name(std::string name) { response_name_ = std::move(name); }

 private:
  VectorXd y_;
  MatrixXd X_;
  std::vector<std::string> names_;
  std::string response_name_ = "y";
};

struct FitResult {
  VectorXd beta;
  VectorXd fitted;
  VectorXd residuals;
  VectorXd weights;
  double sigma2 = 0.0;  // weighted SSE / df_resid; 0 for a saturated fit
  Eigen::Index df_resid = 0;
};

struct TestResult {
  double statistic = 0.0;
  int df = 1;
  double p_value = 1.0;
  bool reject_at_05 = false;
  /// Set when the statistic is infinite by construction (e.g. |r_s| == 1).
  bool exact = false;
};

/// Reciprocal condition threshold below which a design is treated as singular.
inline constexpr double kSingularRcond = 1e-12;

FitResult ols_fit(const Dataset& data);

/// Minimizes (y - Xb)' diag(weights) (y - Xb) via a column-pivoted QR of the
/// row-scaled design.
FitResult wls_fit(const Dataset& data, const VectorXd& weights);

/// Auxiliary regression of squared OLS residuals on the regressors, their
/// squares and pairwise products. Aliased auxiliary terms are dropped.
TestResult white_test(const Dataset& data, const FitResult& fit);

/// Variance inflation factors, one per regressor. Perfectly collinear
/// columns report +infinity.
VectorXd vif(const Dataset& data);

/// Gaussian AIC of an OLS fit: n ln(SSE/n) + 2(p+1).
double aic(const FitResult& fit);

/// Backward elimination by AIC; ties go to the lowest column index.
Dataset stepwise_select(const Dataset& data);

}  // namespace mvdwls::linreg
