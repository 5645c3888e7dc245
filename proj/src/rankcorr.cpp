#include "mvdwls/rankcorr.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace mvdwls::rankcorr {

RankVector ranks(const VectorXd& v) {
  const auto n = v.size();
  if (n < 2) throw Error(ErrorCode::TooFewObservations, "ranking needs at least two values");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(v(i))) throw Error(ErrorCode::NonFiniteInput, "cannot rank a non-finite value", i);
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v(a) < v(b); });

  RankVector out{VectorXd(n), false};
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && v(order[j]) == v(order[i])) ++j;
    // positions i..j-1 (0-based) share the average of ranks i+1..j
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    if (j - i > 1) out.has_ties = true;
    for (std::size_t k = i; k < j; ++k) out.ranks(order[k]) = avg;
    i = j;
  }
  return out;
}

double spearman_from_ranks(const RankVector& a, const RankVector& b) {
  const auto n = a.ranks.size();
  if (b.ranks.size() != n) throw Error(ErrorCode::DimensionMismatch, "rank vectors differ in length");
  if (n < 3) throw Error(ErrorCode::TooFewObservations, "Spearman correlation needs n >= 3");
  const double nd = static_cast<double>(n);

  if (!a.has_ties && !b.has_ties) {
    const double d2 = (a.ranks - b.ranks).squaredNorm();
    return 1.0 - 6.0 * d2 / (nd * (nd * nd - 1.0));
  }
  const double mean = 0.5 * (nd + 1.0);
  const auto ca = a.ranks.array() - mean;
  const auto cb = b.ranks.array() - mean;
  const double saa = ca.square().sum();
  const double sbb = cb.square().sum();
  if (saa == 0.0 || sbb == 0.0) {
    throw Error(ErrorCode::ZeroRankVariance, "a constant vector has no rank correlation");
  }
  const double r = (ca * cb).sum() / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

double spearman(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "vectors differ in length");
  if (a.size() < 3) throw Error(ErrorCode::TooFewObservations, "Spearman correlation needs n >= 3");
  return spearman_from_ranks(ranks(a), ranks(b));
}

linreg::TestResult spearman_pvalue(double r_s, int n) {
  if (n < 4) throw Error(ErrorCode::TooFewObservations, "Spearman test needs n >= 4");
  if (!std::isfinite(r_s) || std::abs(r_s) > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "correlation must lie in [-1, 1]");
  }
  linreg::TestResult out;
  out.df = n - 2;
  if (std::abs(r_s) == 1.0) {
    out.statistic = std::copysign(std::numeric_limits<double>::infinity(), r_s);
    out.p_value = 0.0;
    out.reject_at_05 = true;
    out.exact = true;
    return out;
  }
  const double dof = static_cast<double>(n - 2);
  out.statistic = r_s * std::sqrt(dof / ((1.0 - r_s) * (1.0 + r_s)));
  boost::math::students_t_distribution<double> t(dof);
  out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(t, std::abs(out.statistic))));
  out.reject_at_05 = out.p_value < 0.05;
  return out;
}

}  // namespace mvdwls::rankcorr
