#include "mvdwls/metrics.hpp"

#include <cmath>

namespace mvdwls::metrics {

namespace {

void check_estimates(const MatrixXd& estimates, const VectorXd& truth) {
  if (estimates.rows() < 1) throw Error(ErrorCode::TooFewObservations, "need at least one replication");
  if (estimates.cols() != truth.size()) {
    throw Error(ErrorCode::DimensionMismatch, "estimate width differs from coefficient count");
  }
}

}  // namespace

VectorXd abs_bias(const MatrixXd& estimates, const VectorXd& truth) {
  check_estimates(estimates, truth);
  return (estimates.rowwise() - truth.transpose()).cwiseAbs().colwise().mean().transpose();
}

VectorXd mse(const MatrixXd& estimates, const VectorXd& truth) {
  check_estimates(estimates, truth);
  return (estimates.rowwise() - truth.transpose()).array().square().colwise().mean().transpose();
}

double mae(const MatrixXd& pred, const MatrixXd& actual) {
  if (pred.rows() != actual.rows() || pred.cols() != actual.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "prediction and actual shapes differ");
  }
  if (pred.size() == 0) throw Error(ErrorCode::TooFewObservations, "empty prediction matrix");
  return (pred - actual).cwiseAbs().mean();
}

double sse(const VectorXd& pred, const VectorXd& actual) {
  if (pred.size() != actual.size()) throw Error(ErrorCode::DimensionMismatch, "vector lengths differ");
  return (pred - actual).squaredNorm();
}

double rse(const linreg::FitResult& fit) {
  if (fit.df_resid < 1) throw Error(ErrorCode::ZeroDegreesOfFreedom, "no residual degrees of freedom");
  return std::sqrt(fit.residuals.squaredNorm() / static_cast<double>(fit.df_resid));
}

}  // namespace mvdwls::metrics
