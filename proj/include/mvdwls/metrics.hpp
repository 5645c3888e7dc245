#pragma once

#include <Eigen/Dense>

#include "mvdwls/linreg.hpp"

namespace mvdwls::metrics {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct MetricsReport {
  VectorXd bias_abs;
  VectorXd mse;
  double mae_y = 0.0;
  double sse = 0.0;
  double rse = 0.0;
  Eigen::Index R = 0;
  Eigen::Index n = 0;
};

/// Mean absolute deviation of each coefficient column from its true value.
/// `estimates` is R x (p+1), one replication per row.
VectorXd abs_bias(const MatrixXd& estimates, const VectorXd& truth);

/// Mean squared deviation of each coefficient column from its true value.
VectorXd mse(const MatrixXd& estimates, const VectorXd& truth);

/// Mean absolute prediction error over all R x n cells.
double mae(const MatrixXd& pred, const MatrixXd& actual);

double sse(const VectorXd& pred, const VectorXd& actual);

/// Residual standard error sqrt(sum (y - yhat)^2 / df_resid).
double rse(const linreg::FitResult& fit);

}  // namespace mvdwls::metrics
