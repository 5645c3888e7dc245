#pragma once

#include <Eigen/Dense>

#include "mvdwls/linreg.hpp"

namespace mvdwls::rankcorr {

using Eigen::VectorXd;

/// Average ranks in [1, n]; the smallest value gets rank 1.
struct RankVector {
  VectorXd ranks;
  bool has_ties = false;
};

RankVector ranks(const VectorXd& v);

/// Spearman's rank correlation. Tie-free inputs use 1 - 6 sum(d^2) / (n(n^2-1));
/// otherwise the Pearson correlation of the average ranks.
double spearman(const VectorXd& a, const VectorXd& b);

/// Same statistic from precomputed ranks.
double spearman_from_ranks(const RankVector& a, const RankVector& b);

/// Two-sided test of r_s = 0 via t = r sqrt((n-2)/(1-r^2)) on n-2 degrees of
/// freedom. |r_s| == 1 yields p = 0 with `exact` set.
linreg::TestResult spearman_pvalue(double r_s, int n);

}  // namespace mvdwls::rankcorr
