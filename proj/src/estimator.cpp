#include "mvdwls/estimator.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "mvdwls/optim.hpp"
#include "mvdwls/rankcorr.hpp"

namespace mvdwls {

namespace {

void require_positive(const VectorXd& w) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w(i)) || w(i) <= 0.0) {
      throw Error(ErrorCode::NonPositiveWeight, "variance driver must be finite and positive", i);
    }
  }
}

void require_length(const Dataset& data, const VectorXd& w) {
  if (w.size() != data.n()) throw Error(ErrorCode::DimensionMismatch, "weight vector length differs from n");
}

bool all_equal(const VectorXd& w) { return w.size() == 0 || w.maxCoeff() == w.minCoeff(); }

// Residuals at the level of floating-point noise relative to the response.
bool residuals_vanish(const VectorXd& r, const VectorXd& y) {
  const double scale = std::max(y.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  return r.cwiseAbs().maxCoeff() <= 1e-11 * scale;
}

// w^{-m} divided by its largest entry. Only ratios matter for beta(m) and the
// score, and this form cannot overflow.
VectorXd relative_power_weights(const VectorXd& log_w, double m) {
  const VectorXd expo = -m * log_w;
  return (expo.array() - expo.maxCoeff()).exp();
}

VectorXd residuals_at(const Dataset& data, const VectorXd& log_w, double m) {
  return linreg::wls_fit(data, relative_power_weights(log_w, m)).residuals;
}

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace

void SolverConfig::validate() const {
  auto bad = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(m_min < m_max)) bad("m interval must have a nonempty interior");
  if (!(epsilon > 0.0)) bad("epsilon must be positive");
  if (max_outer_iters < 1) bad("max_outer_iters must be at least 1");
  if (population < 0 || generations < 0) bad("population and generations must be nonnegative");
  if (!(w_floor > 0.0)) bad("w_floor must be positive");
  if (!(root_scan_step > 0.0) || !(root_tolerance > 0.0)) bad("root scan settings must be positive");
  if (min_abs_rs < 0.0 || min_abs_rs > 1.0) bad("min_abs_rs must lie in [0, 1]");
}

int SolverConfig::population_for(Eigen::Index p) const {
  return population > 0 ? population : std::max(4, static_cast<int>(15 * p));
}

CombinationWeights::CombinationWeights(VectorXd k, const VectorXd& raw, double rs_abs)
    : k_(std::move(k)), scale_(1.0), rs_abs_(rs_abs) {
  require_positive(raw);
  if (all_equal(raw)) {
    throw Error(ErrorCode::AssumptionOneViolated, "combined variance driver is constant");
  }
  const double lo = raw.minCoeff();
  scale_ = 1.0 / lo;
  w_ = raw / lo;
}

VectorXd VarianceModel::variances() const { return sigma2 * combo.w().array().pow(m).matrix(); }

VectorXd combine(const MatrixXd& regressors, const VectorXd& k) {
  if (regressors.cols() != k.size()) {
    throw Error(ErrorCode::DimensionMismatch, "direction length differs from regressor count");
  }
  return regressors * k;
}

namespace {

ObjectiveValue objective_with_ranks(const MatrixXd& regressors, const rankcorr::RankVector& resid_ranks,
                                    const VectorXd& k, double w_floor) {
  const double norm = k.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) return {};
  VectorXd x = combine(regressors, k / norm);
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  const bool positive = lo > w_floor;
  const bool negative = hi < -w_floor;
  if ((!positive && !negative) || lo == hi) return {};
  // rank the positive orientation so k and -k score identically
  if (negative) x = -x;
  const double r = rankcorr::spearman_from_ranks(rankcorr::ranks(x), resid_ranks);
  return {std::abs(r), true};
}

rankcorr::RankVector residual_ranks(const VectorXd& abs_resid) {
  auto rv = rankcorr::ranks(abs_resid);
  if (rv.ranks.maxCoeff() == rv.ranks.minCoeff()) {
    throw Error(ErrorCode::ZeroRankVariance, "absolute residuals are all equal");
  }
  return rv;
}

}  // namespace

ObjectiveValue combination_objective(const MatrixXd& regressors, const VectorXd& abs_resid, const VectorXd& k,
                                     double w_floor) {
  if (abs_resid.size() != regressors.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "residual length differs from regressor rows");
  }
  if (regressors.cols() != k.size()) {
    throw Error(ErrorCode::DimensionMismatch, "direction length differs from regressor count");
  }
  return objective_with_ranks(regressors, residual_ranks(abs_resid), k, w_floor);
}

CombinationWeights optimize_combination(const MatrixXd& regressors, const VectorXd& abs_resid,
                                        const SolverConfig& cfg) {
  cfg.validate();
  const auto p = regressors.cols();
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "need at least one regressor");
  if (abs_resid.size() != regressors.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "residual length differs from regressor rows");
  }
  const auto resid_ranks = residual_ranks(abs_resid);
  auto objective = [&](const VectorXd& k) {
    return objective_with_ranks(regressors, resid_ranks, k, cfg.w_floor).value;
  };

  VectorXd k;
  if (p == 1) {
    k = VectorXd::Ones(1);
    if (!objective_with_ranks(regressors, resid_ranks, k, cfg.w_floor).feasible) {
      throw Error(ErrorCode::NoFeasibleDirection, "the single regressor changes sign or is constant");
    }
  } else {
    optim::DeConfig de;
    de.population = cfg.population_for(p);
    de.generations = cfg.generations;
    de.seed = cfg.optimizer_seed;
    auto global = optim::differential_evolution(objective, static_cast<int>(p), de);
    if (!(global.value > 0.0)) {
      throw Error(ErrorCode::NoFeasibleDirection, "no direction keeps every x'k above w_floor");
    }
    global.x /= global.x.norm();
    const auto polished = optim::nelder_mead(objective, global.x);
    k = polished.value > global.value ? VectorXd(polished.x / polished.x.norm()) : global.x;
  }

  VectorXd raw = combine(regressors, k);
  if ((raw.array() > 0.0).count() < (raw.array() < 0.0).count()) {
    k = -k;
    raw = -raw;
  }
  if (!(raw.minCoeff() > cfg.w_floor)) {
    throw Error(ErrorCode::NoFeasibleDirection, "optimal direction violates w_floor");
  }
  const double rs = std::abs(rankcorr::spearman_from_ranks(rankcorr::ranks(raw), resid_ranks));
  return CombinationWeights(std::move(k), raw, rs);
}

double log_likelihood(const Dataset& data, const VectorXd& w, const VectorXd& beta, double sigma2, double m) {
  require_length(data, w);
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw Error(ErrorCode::NonPositiveVariance, "sigma2 must be finite and positive");
  }
  require_positive(w);
  const double n = static_cast<double>(data.n());
  const VectorXd r = data.y() - data.X() * beta;
  const VectorXd log_w = w.array().log();
  const double weighted = (r.array().square() * (-m * log_w.array()).exp()).sum();
  return -0.5 * n * kLog2Pi - 0.5 * n * std::log(sigma2) - 0.5 * m * log_w.sum() - weighted / (2.0 * sigma2);
}

double log_likelihood_dm(const Dataset& data, const VectorXd& w, const VectorXd& beta, double sigma2, double m) {
  require_length(data, w);
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::NonPositiveVariance, "sigma2 must be positive");
  require_positive(w);
  const VectorXd r = data.y() - data.X() * beta;
  const VectorXd log_w = w.array().log();
  const double weighted = (r.array().square() * log_w.array() * (-m * log_w.array()).exp()).sum();
  return -0.5 * log_w.sum() + weighted / (2.0 * sigma2);
}

VectorXd power_weights(const VectorXd& w, double m) {
  require_positive(w);
  VectorXd out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    out(i) = std::pow(w(i), -m);
    if (!std::isfinite(out(i)) || out(i) <= 0.0) {
      throw Error(ErrorCode::WeightOverflow, "w^-m is not representable", i);
    }
  }
  return out;
}

VectorXd profile_beta(const Dataset& data, const VectorXd& w, double m) {
  require_length(data, w);
  return linreg::wls_fit(data, power_weights(w, m)).beta;
}

double profile_sigma2(const Dataset& data, const VectorXd& w, double m, const VectorXd& beta) {
  require_length(data, w);
  const VectorXd omega = power_weights(w, m);
  const VectorXd r = data.y() - data.X() * beta;
  return (r.array().square() * omega.array()).sum() / static_cast<double>(data.n());
}

double profile_loglik(const Dataset& data, const VectorXd& w, double m) {
  const VectorXd beta = profile_beta(data, w, m);
  const double sigma2 = profile_sigma2(data, w, m, beta);
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::ZeroResiduals, "profile variance is zero at an exact fit");
  return log_likelihood(data, w, beta, sigma2, m);
}

double m_score(const Dataset& data, const VectorXd& w, double m) {
  require_length(data, w);
  require_positive(w);
  if (all_equal(w)) throw Error(ErrorCode::AllWeightsEqual, "the score is identically zero for equal weights");
  const VectorXd log_w = w.array().log();
  const VectorXd r = residuals_at(data, log_w, m);
  if (residuals_vanish(r, data.y())) {
    throw Error(ErrorCode::ZeroResiduals, "the likelihood equation is 0/0 at an exact fit");
  }
  const VectorXd mass = r.array().square() * relative_power_weights(log_w, m).array();
  return mass.dot(log_w) / mass.sum() - log_w.mean();
}

MSolution solve_m(const Dataset& data, const VectorXd& w, const SolverConfig& cfg) {
  cfg.validate();
  require_length(data, w);
  require_positive(w);
  if (all_equal(w)) throw Error(ErrorCode::AllWeightsEqual, "m is not identifiable when all w_i are equal");

  const VectorXd log_w = w.array().log();
  const double mean_log_w = log_w.mean();
  const int steps = static_cast<int>(std::ceil((cfg.m_max - cfg.m_min) / cfg.root_scan_step - 1e-9));
  auto grid_point = [&](int i) { return i == steps ? cfg.m_max : cfg.m_min + i * cfg.root_scan_step; };

  MSolution out;
  double m = 0.0;
  out.trace.push_back(m);
  for (int iter = 0; iter < cfg.max_outer_iters; ++iter) {
    const VectorXd r = residuals_at(data, log_w, m);
    if (residuals_vanish(r, data.y())) {
      throw Error(ErrorCode::ZeroResiduals, "the likelihood equation is 0/0 at an exact fit");
    }
    const VectorXd r2 = r.array().square();
    // With residuals held fixed this is strictly decreasing in mu.
    auto score = [&](double mu) {
      const VectorXd mass = r2.array() * relative_power_weights(log_w, mu).array();
      return mass.dot(log_w) / mass.sum() - mean_log_w;
    };

    std::vector<double> roots;
    double a = grid_point(0);
    double fa = score(a);
    if (fa == 0.0) roots.push_back(a);
    for (int i = 1; i <= steps; ++i) {
      const double b = grid_point(i);
      const double fb = score(b);
      if (fb == 0.0) {
        roots.push_back(b);
      } else if (fa != 0.0 && std::signbit(fa) != std::signbit(fb)) {
        std::uintmax_t max_iter = 200;
        auto tol = [&](double lo, double hi) { return std::abs(hi - lo) <= cfg.root_tolerance; };
        const auto bracket = boost::math::tools::toms748_solve(score, a, b, fa, fb, tol, max_iter);
        roots.push_back(0.5 * (bracket.first + bracket.second));
      }
      a = b;
      fa = fb;
    }
    if (roots.empty()) {
      throw Error(ErrorCode::NoRootInInterval,
                  "likelihood equation has no root in [" + std::to_string(cfg.m_min) + ", " +
                      std::to_string(cfg.m_max) + "]");
    }
    double next = roots.front();
    if (roots.size() > 1) {
      double best = -std::numeric_limits<double>::infinity();
      for (double root : roots) {
        const double ll = profile_loglik(data, w, root);
        if (ll > best) {
          best = ll;
          next = root;
        }
      }
    }
    out.trace.push_back(next);
    const bool converged = std::abs(next - m) < cfg.epsilon;
    m = next;
    if (converged) {
      out.m = m;
      out.boundary = (m - cfg.m_min) < cfg.boundary_margin || (cfg.m_max - m) < cfg.boundary_margin;
      return out;
    }
  }
  throw Error(ErrorCode::MaxIterationsExceeded,
              "m iterates did not settle within " + std::to_string(cfg.max_outer_iters) + " iterations");
}

double fisher_info(const VectorXd& w) {
  require_positive(w);
  if (w.size() == 0) throw Error(ErrorCode::TooFewObservations, "empty weight vector");
  return 0.5 * w.array().log().square().mean();
}

namespace {

MvdFit ols_fallback(const Dataset& data, FitResult ols) {
  MvdFit out;
  out.method = Method::Multivariate;
  out.homoscedastic_fallback = true;
  const double sigma2 = ols.residuals.squaredNorm() / static_cast<double>(data.n());
  out.loglik = log_likelihood(data, VectorXd::Ones(data.n()), ols.beta, sigma2, 0.0);
  out.fit = std::move(ols);
  out.m_trace = {0.0};
  return out;
}

FitResult checked_ols(const Dataset& data) {
  if (data.p() < 1) throw Error(ErrorCode::InvalidArgument, "weighting needs at least one regressor");
  auto ols = linreg::ols_fit(data);
  if (residuals_vanish(ols.residuals, data.y())) {
    throw Error(ErrorCode::ZeroResiduals,
                "OLS residuals are all zero; the data are an exact fit and heteroscedasticity is undefined");
  }
  return ols;
}

}  // namespace

MvdFit mvd_wls_fit(const Dataset& data, const SolverConfig& cfg) {
  cfg.validate();
  auto ols = checked_ols(data);
  const VectorXd abs_resid = ols.residuals.cwiseAbs();

  std::optional<CombinationWeights> combo;
  try {
    combo.emplace(optimize_combination(data.regressors(), abs_resid, cfg));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoFeasibleDirection) throw;
  }
  if (!combo || combo->rs_abs() < cfg.min_abs_rs) return ols_fallback(data, std::move(ols));

  const auto solution = solve_m(data, combo->w(), cfg);
  MvdFit out;
  out.method = Method::Multivariate;
  out.fit = linreg::wls_fit(data, power_weights(combo->w(), solution.m));
  const double sigma2 = profile_sigma2(data, combo->w(), solution.m, out.fit.beta);
  out.loglik = log_likelihood(data, combo->w(), out.fit.beta, sigma2, solution.m);
  out.iterations = static_cast<int>(solution.trace.size()) - 1;
  out.m_trace = solution.trace;
  out.boundary_solution = solution.boundary;
  out.model = VarianceModel{std::move(*combo), solution.m, sigma2};
  return out;
}

MvdFit uvd_wls_fit(const Dataset& data, const SolverConfig& cfg) {
  cfg.validate();
  auto ols = checked_ols(data);
  const VectorXd abs_resid = ols.residuals.cwiseAbs();
  const auto resid_ranks = residual_ranks(abs_resid);

  const auto p = data.p();
  std::vector<double> score(static_cast<std::size_t>(p), -1.0);
  for (Eigen::Index j = 1; j <= p; ++j) {
    try {
      const auto xr = rankcorr::ranks(data.X().col(j));
      score[static_cast<std::size_t>(j - 1)] = std::abs(rankcorr::spearman_from_ranks(xr, resid_ranks));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroRankVariance) throw;
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{1});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return score[static_cast<std::size_t>(a - 1)] > score[static_cast<std::size_t>(b - 1)];
  });

  MvdFit out;
  out.method = Method::Univariate;
  for (const auto j : order) {
    if (score[static_cast<std::size_t>(j - 1)] < 0.0) break;
    if (data.X().col(j).minCoeff() > 0.0) {
      out.selected_column = j;
      break;
    }
    out.rejected_columns.push_back(j);
  }
  if (out.selected_column == 0) {
    throw Error(ErrorCode::NonPositiveRegressor, "no candidate regressor is strictly positive",
                out.rejected_columns.empty() ? Error::kNoIndex : out.rejected_columns.front());
  }

  const auto j = out.selected_column;
  VectorXd k = VectorXd::Zero(p);
  k(j - 1) = 1.0;
  CombinationWeights combo(std::move(k), data.X().col(j), score[static_cast<std::size_t>(j - 1)]);

  constexpr int kGridSteps = 120;  // 0, 0.05, ..., 6
  double best_m = 0.0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGridSteps; ++i) {
    const double m = 0.05 * i;
    const double ll = profile_loglik(data, combo.w(), m);
    if (ll > best_ll) {
      best_ll = ll;
      best_m = m;
    }
  }

  out.fit = linreg::wls_fit(data, power_weights(combo.w(), best_m));
  const double sigma2 = profile_sigma2(data, combo.w(), best_m, out.fit.beta);
  out.loglik = log_likelihood(data, combo.w(), out.fit.beta, sigma2, best_m);
  out.m_trace = {best_m};
  out.boundary_solution = best_m >= 0.05 * kGridSteps;
  out.model = VarianceModel{std::move(combo), best_m, sigma2};
  return out;
}

}  // namespace mvdwls
