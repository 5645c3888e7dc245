#include "mvdwls/linreg.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>

namespace mvdwls::linreg {

namespace {

void require_finite(const MatrixXd& m, const char* what) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j))) {
        throw Error(ErrorCode::NonFiniteInput, std::string(what) + " has a non-finite entry", i);
      }
    }
  }
}

struct QrSolve {
  VectorXd beta;
  double rcond = 0.0;
};

// Least squares on a column-equilibrated copy of `A`, so the condition
// estimate does not depend on the units of each column.
QrSolve equilibrated_lstsq(const MatrixXd& A, const VectorXd& b) {
  VectorXd col_norm = A.colwise().norm().transpose();
  MatrixXd scaled = A;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    if (col_norm(j) == 0.0) return {VectorXd::Zero(A.cols()), 0.0};
    scaled.col(j) /= col_norm(j);
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(scaled);
  const auto diag = qr.matrixQR().diagonal().cwiseAbs();
  const double rcond = diag.size() == 0 ? 1.0 : diag.minCoeff() / diag.maxCoeff();
  if (!(rcond >= kSingularRcond)) return {VectorXd::Zero(A.cols()), rcond};
  VectorXd beta = qr.solve(b);
  return {beta.cwiseQuotient(col_norm), rcond};
}

double rcond_of(const MatrixXd& A) { return equilibrated_lstsq(A, VectorXd::Zero(A.rows())).rcond; }

double centered_ss(const VectorXd& v) { return (v.array() - v.mean()).square().sum(); }

}  // namespace

Dataset::Dataset(VectorXd y, MatrixXd X, std::vector<std::string> names)
    : y_(std::move(y)), X_(std::move(X)), names_(std::move(names)) {
  if (X_.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "design needs an intercept column");
  if (y_.size() != X_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "response length differs from design rows");
  }
  if (X_.rows() < X_.cols()) {
    throw Error(ErrorCode::DegenerateSample, "fewer observations than coefficients");
  }
  require_finite(y_, "response");
  require_finite(X_, "design");
  for (Eigen::Index i = 0; i < X_.rows(); ++i) {
    if (X_(i, 0) != 1.0) throw Error(ErrorCode::InvalidArgument, "design column 0 must be all ones", i);
  }
  if (names_.empty()) {
    names_.emplace_back("(Intercept)");
    for (Eigen::Index j = 1; j < X_.cols(); ++j) names_.push_back("x" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names_.size()) != X_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "column names do not match design width");
  }
}

Dataset Dataset::from_regressors(VectorXd y, const MatrixXd& regressors,
                                 std::vector<std::string> regressor_names,
                                 std::string response_name) {
  MatrixXd X(regressors.rows(), regressors.cols() + 1);
  X.col(0).setOnes();
  X.rightCols(regressors.cols()) = regressors;
  std::vector<std::string> names;
  if (!regressor_names.empty()) {
    names.emplace_back("(Intercept)");
    names.insert(names.end(), regressor_names.begin(), regressor_names.end());
  }
  Dataset d(std::move(y), std::move(X), std::move(names));
  d.response_name_ = std::move(response_name);
  return d;
}

Dataset Dataset::select_columns(const std::vector<Eigen::Index>& design_columns) const {
  MatrixXd X(n(), static_cast<Eigen::Index>(design_columns.size()) + 1);
  std::vector<std::string> names{names_.front()};
  X.col(0).setOnes();
  for (std::size_t c = 0; c < design_columns.size(); ++c) {
    const auto j = design_columns[c];
    if (j < 1 || j > p()) throw Error(ErrorCode::DimensionMismatch, "column index out of range", j);
    X.col(static_cast<Eigen::Index>(c) + 1) = X_.col(j);
    names.push_back(names_[static_cast<std::size_t>(j)]);
  }
  Dataset d(y_, std::move(X), std::move(names));
  d.response_name_ = response_name_;
  return d;
}

Dataset Dataset::select_rows(const std::vector<Eigen::Index>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  VectorXd y(m);
  MatrixXd X(m, X_.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = rows[static_cast<std::size_t>(r)];
    if (i < 0 || i >= n()) throw Error(ErrorCode::DimensionMismatch, "row index out of range", i);
    y(r) = y_(i);
    X.row(r) = X_.row(i);
  }
  Dataset d(std::move(y), std::move(X), names_);
  d.response_name_ = response_name_;
  return d;
}

FitResult ols_fit(const Dataset& data) { return wls_fit(data, VectorXd::Ones(data.n())); }

FitResult wls_fit(const Dataset& data, const VectorXd& weights) {
  const auto n = data.n();
  if (weights.size() != n) throw Error(ErrorCode::DimensionMismatch, "weight vector length differs from n");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(weights(i)) || weights(i) <= 0.0) {
      throw Error(ErrorCode::NonPositiveWeight, "weights must be finite and positive", i);
    }
  }
  if (n < data.X().cols()) throw Error(ErrorCode::DegenerateSample, "fewer observations than coefficients");

  const VectorXd sw = weights.cwiseSqrt();
  const MatrixXd A = sw.asDiagonal() * data.X();
  const VectorXd b = sw.cwiseProduct(data.y());
  auto solved = equilibrated_lstsq(A, b);
  if (!(solved.rcond >= kSingularRcond)) {
    throw Error(ErrorCode::SingularDesign,
                "design is rank deficient (reciprocal condition " + std::to_string(solved.rcond) + ")");
  }

  FitResult fit;
  fit.beta = std::move(solved.beta);
  fit.fitted = data.X() * fit.beta;
  fit.residuals = data.y() - fit.fitted;
  fit.weights = weights;
  fit.df_resid = n - data.X().cols();
  const double wsse = (weights.array() * fit.residuals.array().square()).sum();
  fit.sigma2 = fit.df_resid > 0 ? wsse / static_cast<double>(fit.df_resid) : 0.0;
  return fit;
}

TestResult white_test(const Dataset& data, const FitResult& fit) {
  const auto n = data.n();
  const auto p = data.p();
  if (fit.residuals.size() != n) throw Error(ErrorCode::DimensionMismatch, "fit does not belong to data");
  const VectorXd e2 = fit.residuals.array().square();

  std::vector<VectorXd> candidates;
  for (Eigen::Index j = 1; j <= p; ++j) candidates.emplace_back(data.X().col(j));
  for (Eigen::Index j = 1; j <= p; ++j) candidates.emplace_back(data.X().col(j).array().square());
  for (Eigen::Index j = 1; j <= p; ++j) {
    for (Eigen::Index k = j + 1; k <= p; ++k) {
      candidates.emplace_back(data.X().col(j).cwiseProduct(data.X().col(k)));
    }
  }

  // Greedy: keep a term only if it does not alias the ones already kept.
  MatrixXd aux = MatrixXd::Ones(n, 1);
  for (const auto& c : candidates) {
    if (aux.cols() + 1 >= n) break;
    MatrixXd trial(n, aux.cols() + 1);
    trial << aux, c;
    if (rcond_of(trial) >= kSingularRcond) aux = std::move(trial);
  }
  const auto df = aux.cols() - 1;
  if (df < 1) throw Error(ErrorCode::SingularDesign, "no usable auxiliary regressors");

  TestResult out;
  out.df = static_cast<int>(df);
  const double sst = centered_ss(e2);
  const double mean = e2.mean();
  double r2 = 0.0;
  if (sst > 1e-20 * static_cast<double>(n) * mean * mean) {
    const auto solved = equilibrated_lstsq(aux, e2);
    const double ssr = (e2 - aux * solved.beta).squaredNorm();
    r2 = std::clamp(1.0 - ssr / sst, 0.0, 1.0);
  }
  out.statistic = static_cast<double>(n) * r2;
  boost::math::chi_squared_distribution<double> chi2(static_cast<double>(df));
  out.p_value = out.statistic <= 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(chi2, out.statistic));
  out.reject_at_05 = out.p_value < 0.05;
  return out;
}

VectorXd vif(const Dataset& data) {
  const auto n = data.n();
  const auto p = data.p();
  VectorXd out(p);
  for (Eigen::Index j = 1; j <= p; ++j) {
    const VectorXd target = data.X().col(j);
    MatrixXd others(n, p);
    others.col(0).setOnes();
    for (Eigen::Index k = 1, c = 1; k <= p; ++k) {
      if (k != j) others.col(c++) = data.X().col(k);
    }
    const double sst = centered_ss(target);
    double r2 = 1.0;
    if (sst > 0.0) {
      // Rank-revealing solve: collinearity among the other columns must not
      // abort the computation for column j.
      Eigen::ColPivHouseholderQR<MatrixXd> qr(others);
      qr.setThreshold(1e-12);
      const VectorXd coef = qr.solve(target);
      r2 = 1.0 - (target - others * coef).squaredNorm() / sst;
    }
    const double tolerance = 1.0 - r2;
    out(j - 1) = tolerance <= 1e-12 ? std::numeric_limits<double>::infinity() : 1.0 / tolerance;
  }
  return out;
}

double aic(const FitResult& fit) {
  const auto n = static_cast<double>(fit.residuals.size());
  const double sse = fit.residuals.squaredNorm();
  return n * std::log(sse / n) + 2.0 * static_cast<double>(fit.beta.size());
}

Dataset stepwise_select(const Dataset& data) {
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 1; j <= data.p(); ++j) active.push_back(j);
  double current = aic(ols_fit(data));

  while (!active.empty()) {
    double best = current;
    std::size_t drop = active.size();
    for (std::size_t c = 0; c < active.size(); ++c) {
      auto trial = active;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(c));
      const double value = aic(ols_fit(data.select_columns(trial)));
      if (value < best) {
        best = value;
        drop = c;
      }
    }
    if (drop == active.size()) break;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
    current = best;
  }
  return data.select_columns(active);
}

}  // namespace mvdwls::linreg
