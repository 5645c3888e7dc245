#include <gtest/gtest.h>

#include <functional>
#include <limits>

#include "mvdwls/linreg.hpp"
#include "test_support.hpp"

namespace {

using namespace mvdwls;
using namespace mvdwls::linreg;
using testsupport::normal;
using testsupport::stream;
using testsupport::uniform;

// Minimizes f over a 2-d box by repeated zooming grids.
Eigen::Vector2d grid_minimize(const std::function<double(double, double)>& f, Eigen::Vector2d centre, double half) {
  constexpr int kSteps = 200;
  for (int round = 0; round < 8; ++round) {
    Eigen::Vector2d best = centre;
    double best_val = f(centre(0), centre(1));
    const double h = 2.0 * half / kSteps;
    for (int i = 0; i <= kSteps; ++i) {
      for (int j = 0; j <= kSteps; ++j) {
        const double a = centre(0) - half + i * h;
        const double b = centre(1) - half + j * h;
        const double v = f(a, b);
        if (v < best_val) {
          best_val = v;
          best = {a, b};
        }
      }
    }
    centre = best;
    half = 2.0 * h;
  }
  return centre;
}

Dataset random_data(std::uint64_t seed, Eigen::Index n, Eigen::Index p, double noise = 1.0) {
  auto g = stream(seed);
  MatrixXd regs(n, p);
  for (Eigen::Index j = 0; j < p; ++j) regs.col(j) = uniform(g, n, -2.0, 5.0);
  VectorXd beta = VectorXd::LinSpaced(p + 1, 1.0, 2.0 + static_cast<double>(p));
  MatrixXd X(n, p + 1);
  X << VectorXd::Ones(n), regs;
  VectorXd y = X * beta + normal(g, n, noise);
  return Dataset::from_regressors(y, regs);
}

void expect_error(const std::function<void()>& f, ErrorCode code) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(Dataset, RejectsBadInput) {
  MatrixXd X(3, 2);
  X << 1, 1, 1, 2, 0.5, 3;
  expect_error([&] { Dataset(VectorXd::Ones(3), X, {}); }, ErrorCode::InvalidArgument);
  MatrixXd regs(3, 1);
  regs << 1, 2, std::numeric_limits<double>::quiet_NaN();
  expect_error([&] { Dataset::from_regressors(VectorXd::Ones(3), regs); }, ErrorCode::NonFiniteInput);
  expect_error([&] { Dataset::from_regressors(VectorXd::Ones(2), MatrixXd::Ones(3, 1)); },
               ErrorCode::DimensionMismatch);
}

TEST(OlsFit, ExactLinearData) {
  auto g = stream(11);
  MatrixXd regs(20, 2);
  regs << uniform(g, 20, 5, 15), uniform(g, 20, 0, 3);
  VectorXd y = (10.0 + 15.0 * regs.col(0).array() + 5.0 * regs.col(1).array()).matrix();
  const auto fit = ols_fit(Dataset::from_regressors(y, regs));
  EXPECT_NEAR(fit.beta(0), 10.0, 1e-10);
  EXPECT_NEAR(fit.beta(1), 15.0, 1e-11);
  EXPECT_NEAR(fit.beta(2), 5.0, 1e-11);
  EXPECT_LT(fit.residuals.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(fit.df_resid, 17);
  EXPECT_TRUE((fit.weights.array() == 1.0).all());
}

TEST(OlsFit, DuplicateColumnIsSingular) {
  MatrixXd regs(4, 2);
  regs << 1, 1, 2, 2, 3, 3, 5, 5;
  const auto data = Dataset::from_regressors(VectorXd::LinSpaced(4, 0, 3), regs);
  expect_error([&] { ols_fit(data); }, ErrorCode::SingularDesign);
}

TEST(OlsFit, TooFewRows) {
  MatrixXd regs(2, 2);
  regs << 1, 2, 3, 5;
  expect_error([&] { ols_fit(Dataset::from_regressors(VectorXd::Ones(2), regs)); }, ErrorCode::DegenerateSample);
}

TEST(OlsFit, ThreePointsAgainstGridOracle) {
  MatrixXd regs(3, 1);
  regs << 1, 2, 3;
  const VectorXd y = (VectorXd(3) << 1, 2, 4).finished();
  const auto fit = ols_fit(Dataset::from_regressors(y, regs));
  const auto sse = [&](double b0, double b1) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += std::pow(y(i) - b0 - b1 * regs(i, 0), 2);
    return s;
  };
  const auto oracle = grid_minimize(sse, {0.0, 0.0}, 10.0);
  EXPECT_NEAR(fit.beta(0), oracle(0), 1e-7);
  EXPECT_NEAR(fit.beta(1), oracle(1), 1e-7);
  // hand-solved normal equations: slope 3/2, intercept -2/3
  EXPECT_NEAR(fit.beta(1), 1.5, 1e-13);
  EXPECT_NEAR(fit.beta(0), -2.0 / 3.0, 1e-13);
  EXPECT_NEAR(fit.sigma2, sse(fit.beta(0), fit.beta(1)) / 1.0, 1e-13);
}

TEST(WlsFit, UnitWeightsEqualOls) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto data = random_data(seed, 40, 3);
    const auto ols = ols_fit(data);
    const auto wls = wls_fit(data, VectorXd::Ones(40));
    EXPECT_LE((ols.beta - wls.beta).cwiseAbs().maxCoeff(), 1e-12 * ols.beta.cwiseAbs().maxCoeff());
  }
}

TEST(WlsFit, SaturatedTwoPoints) {
  MatrixXd regs(2, 1);
  regs << 0, 1;
  const auto data = Dataset::from_regressors((VectorXd(2) << 1, 3).finished(), regs);
  for (double w : {0.1, 1.0, 7.0}) {
    const auto fit = wls_fit(data, (VectorXd(2) << w, 2.0).finished());
    EXPECT_NEAR(fit.beta(0), 1.0, 1e-13);
    EXPECT_NEAR(fit.beta(1), 2.0, 1e-13);
    EXPECT_EQ(fit.df_resid, 0);
  }
}

TEST(WlsFit, FourPointsAgainstWeightedGridOracle) {
  MatrixXd regs(4, 1);
  regs << 0, 1, 2, 3;
  const VectorXd y = (VectorXd(4) << 1.0, 2.5, 2.9, 5.2).finished();
  const VectorXd w = (VectorXd(4) << 1, 2, 3, 4).finished();
  const auto fit = wls_fit(Dataset::from_regressors(y, regs), w);
  const auto wsse = [&](double b0, double b1) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += w(i) * std::pow(y(i) - b0 - b1 * regs(i, 0), 2);
    return s;
  };
  const auto oracle = grid_minimize(wsse, {0.0, 0.0}, 10.0);
  EXPECT_NEAR(fit.beta(0), oracle(0), 1e-7);
  EXPECT_NEAR(fit.beta(1), oracle(1), 1e-7);
  EXPECT_NEAR(fit.sigma2, wsse(fit.beta(0), fit.beta(1)) / 2.0, 1e-12);
}

TEST(WlsFit, RejectsNonPositiveWeight) {
  const auto data = random_data(3, 10, 1);
  VectorXd w = VectorXd::Ones(10);
  w(4) = 0.0;
  try {
    wls_fit(data, w);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveWeight);
    EXPECT_EQ(e.index(), 4);
  }
}

TEST(WlsFit, ResidualOrthogonalityAndScaleInvariance) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto data = random_data(seed, 30, 3, 2.0);
    auto g = stream(seed, 1);
    const VectorXd w = uniform(g, 30, 0.1, 10.0);
    const auto fit = wls_fit(data, w);
    const VectorXd lhs = data.X().transpose() * w.asDiagonal() * fit.residuals;
    const VectorXd rhs = data.X().transpose() * w.asDiagonal() * data.y();
    EXPECT_LE(lhs.cwiseAbs().maxCoeff(), 1e-8 * rhs.cwiseAbs().maxCoeff());
    EXPECT_LE((fit.fitted + fit.residuals - data.y()).cwiseAbs().maxCoeff(), 1e-10 * data.y().cwiseAbs().maxCoeff());
    for (double c : {1e-3, 1.0, 1e3}) {
      const auto scaled = wls_fit(data, c * w);
      EXPECT_LE((scaled.beta - fit.beta).cwiseAbs().maxCoeff(), 1e-10 * fit.beta.cwiseAbs().maxCoeff());
    }
  }
}

TEST(WlsFit, TinyNoiseRecoversBeta) {
  auto g = stream(99);
  MatrixXd regs(50, 2);
  regs << uniform(g, 50, 5, 15), uniform(g, 50, 0, 4);
  const Eigen::Vector3d beta(10, 15, 5);
  MatrixXd X(50, 3);
  X << VectorXd::Ones(50), regs;
  const VectorXd y = X * beta + normal(g, 50, 1e-8);
  const auto fit = wls_fit(Dataset::from_regressors(y, regs), uniform(g, 50, 0.5, 2.0));
  EXPECT_LE((fit.beta - beta).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(WlsFit, AnyDuplicateColumnIsSingular) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = random_data(seed, 25, 3);
    for (Eigen::Index dup = 0; dup <= 3; ++dup) {
      MatrixXd regs(25, 4);
      regs << data.regressors(), data.X().col(dup);
      expect_error([&] { ols_fit(Dataset::from_regressors(data.y(), regs)); }, ErrorCode::SingularDesign);
    }
  }
}

TEST(WhiteTest, SizeUnderHomoscedasticity) {
  int rejections = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto g = stream(seed);
    MatrixXd regs(500, 2);
    regs << uniform(g, 500, 0, 10), uniform(g, 500, -3, 3);
    const VectorXd y = (1.0 + 2.0 * regs.col(0).array() - regs.col(1).array()).matrix() + normal(g, 500);
    const auto data = Dataset::from_regressors(y, regs);
    const auto t = white_test(data, ols_fit(data));
    EXPECT_EQ(t.df, 5);
    rejections += t.reject_at_05;
  }
  const double rate = rejections / 1000.0;
  EXPECT_GE(rate, 0.03);
  EXPECT_LE(rate, 0.07);
}

TEST(WhiteTest, PowerUnderVarianceProportionalToSquare) {
  int rejections = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto g = stream(seed, 7);
    MatrixXd regs(500, 2);
    regs << uniform(g, 500, 1, 10), uniform(g, 500, -3, 3);
    const VectorXd e = normal(g, 500).cwiseProduct(regs.col(0));
    const VectorXd y = (1.0 + 2.0 * regs.col(0).array() - regs.col(1).array()).matrix() + e;
    const auto data = Dataset::from_regressors(y, regs);
    rejections += white_test(data, ols_fit(data)).reject_at_05;
  }
  EXPECT_GE(rejections, 950);
}

TEST(WhiteTest, ConstantSquaredResiduals) {
  // Residuals +-1 in balanced pairs leave nothing for the auxiliary fit to explain.
  MatrixXd regs(12, 1);
  VectorXd y(12);
  for (int i = 0; i < 6; ++i) {
    regs(2 * i, 0) = regs(2 * i + 1, 0) = i + 1.0;
    y(2 * i) = 3.0 + 2.0 * (i + 1.0) + 1.0;
    y(2 * i + 1) = 3.0 + 2.0 * (i + 1.0) - 1.0;
  }
  const auto data = Dataset::from_regressors(y, regs);
  const auto fit = ols_fit(data);
  ASSERT_LT((fit.residuals.array().square() - 1.0).abs().maxCoeff(), 1e-12);
  const auto t = white_test(data, fit);
  EXPECT_EQ(t.statistic, 0.0);
  EXPECT_EQ(t.p_value, 1.0);
  EXPECT_FALSE(t.reject_at_05);
}

TEST(WhiteTest, DropsAliasedTerms) {
  // A binary regressor equals its own square.
  auto g = stream(5);
  MatrixXd regs(60, 2);
  regs.col(0) = uniform(g, 60, 0, 1).unaryExpr([](double u) { return u < 0.5 ? 0.0 : 1.0; });
  regs.col(1) = uniform(g, 60, 0, 5);
  const VectorXd y = regs.col(1) + normal(g, 60);
  const auto data = Dataset::from_regressors(y, regs);
  const auto t = white_test(data, ols_fit(data));
  EXPECT_EQ(t.df, 4);
  EXPECT_GE(t.p_value, 0.0);
  EXPECT_LE(t.p_value, 1.0);
}

TEST(Vif, OrthogonalColumns) {
  MatrixXd regs(8, 3);
  regs << 1, 1, 1, -1, 1, 1, 1, -1, 1, -1, -1, 1, 1, 1, -1, -1, 1, -1, 1, -1, -1, -1, -1, -1;
  const auto v = vif(Dataset::from_regressors(VectorXd::LinSpaced(8, 0, 7), regs));
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(v(j), 1.0, 1e-12);
}

TEST(Vif, PerfectCollinearityIsInfinite) {
  auto g = stream(8);
  MatrixXd regs(20, 3);
  regs.col(0) = uniform(g, 20, 0, 1);
  regs.col(1) = regs.col(0);
  regs.col(2) = uniform(g, 20, 0, 1);
  const auto v = vif(Dataset::from_regressors(normal(g, 20), regs));
  EXPECT_TRUE(std::isinf(v(0)));
  EXPECT_TRUE(std::isinf(v(1)));
  EXPECT_TRUE(std::isfinite(v(2)));
}

TEST(Vif, MatchesInverseCorrelationOracle) {
  auto g = stream(17);
  Eigen::Matrix3d corr = Eigen::Matrix3d::Constant(0.9);
  corr.diagonal().setOnes();
  const Eigen::Matrix3d chol = corr.llt().matrixL();
  MatrixXd z(300, 3);
  for (int j = 0; j < 3; ++j) z.col(j) = normal(g, 300);
  const MatrixXd regs = z * chol.transpose();
  const auto v = vif(Dataset::from_regressors(normal(g, 300), regs));

  // sample correlation matrix, then the diagonal of its inverse
  const MatrixXd centred = regs.rowwise() - regs.colwise().mean();
  const MatrixXd cov = centred.transpose() * centred;
  const VectorXd sd = cov.diagonal().cwiseSqrt();
  const MatrixXd r = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  const MatrixXd rinv = r.fullPivLu().inverse();
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(v(j), rinv(j, j), 1e-6 * rinv(j, j));
  EXPECT_GT(v.minCoeff(), 5.0);
}

TEST(Stepwise, KeepsStrongRegressors) {
  auto g = stream(4);
  MatrixXd regs(100, 3);
  for (int j = 0; j < 3; ++j) regs.col(j) = uniform(g, 100, 0, 10);
  const VectorXd y = (1.0 + 3.0 * regs.col(0).array() - 2.0 * regs.col(1).array() + regs.col(2).array()).matrix() +
                     normal(g, 100);
  const auto data = Dataset::from_regressors(y, regs, {"a", "b", "c"});
  const auto kept = stepwise_select(data);
  EXPECT_EQ(kept.p(), 3);
  EXPECT_EQ(kept.names(), data.names());
}

TEST(Stepwise, DropsPureNoiseColumn) {
  int dropped = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto g = stream(seed, 3);
    MatrixXd regs(200, 3);
    for (int j = 0; j < 3; ++j) regs.col(j) = uniform(g, 200, 0, 10);
    const VectorXd y = (2.0 + 4.0 * regs.col(0).array() + 3.0 * regs.col(1).array()).matrix() + normal(g, 200);
    const auto kept = stepwise_select(Dataset::from_regressors(y, regs, {"x1", "x2", "noise"}));
    const auto& names = kept.names();
    dropped += std::find(names.begin(), names.end(), "noise") == names.end();
  }
  EXPECT_GE(dropped, 180) << "noise column dropped in " << dropped << " of 200 samples";
}

TEST(Stepwise, SingleRegressorNeverThrows) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto g = stream(seed, 9);
    MatrixXd regs(30, 1);
    regs.col(0) = uniform(g, 30, 0, 1);
    const VectorXd y = seed % 2 ? VectorXd(normal(g, 30)) : VectorXd(5.0 * regs.col(0) + normal(g, 30, 0.1));
    const auto kept = stepwise_select(Dataset::from_regressors(y, regs));
    EXPECT_LE(kept.p(), 1);
    if (seed % 2 == 0) EXPECT_EQ(kept.p(), 1);
  }
}

TEST(Stepwise, DeterministicAicDecrease) {
  const auto data = random_data(21, 60, 5, 3.0);
  const auto a = stepwise_select(data);
  const auto b = stepwise_select(data);
  EXPECT_EQ(a.names(), b.names());
  EXPECT_LE(aic(ols_fit(a)), aic(ols_fit(data)));
}

}  // namespace
