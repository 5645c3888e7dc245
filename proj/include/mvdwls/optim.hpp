#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace mvdwls::optim {

using Eigen::VectorXd;
using Objective = std::function<double(const VectorXd&)>;

struct DeConfig {
  int population = 30;
  int generations = 200;
  double differential_weight = 0.7;
  double crossover_rate = 0.9;
  double init_lower = -1.0;
  double init_upper = 1.0;
  std::uint64_t seed = 0;
};

struct OptimumPoint {
  VectorXd x;
  double value = 0.0;
  long evaluations = 0;
};

/// DE/rand/1/bin maximizer. Trials replace their target on ties so the
/// population can drift across flat plateaus. The incumbent is compared by
/// value, then lexicographically on x, so the result does not depend on
/// evaluation order.
OptimumPoint differential_evolution(const Objective& f, int dim, const DeConfig& cfg);

struct NelderMeadConfig {
  double initial_step = 0.05;
  int max_evaluations = 400;
  double x_tolerance = 1e-9;
};

/// Nelder-Mead maximizer started from `start`; returns `start` unless a
/// strictly better point is found.
OptimumPoint nelder_mead(const Objective& f, const VectorXd& start, const NelderMeadConfig& cfg = {});

/// True when `a` should replace `b` as incumbent.
bool better(double value_a, const VectorXd& a, double value_b, const VectorXd& b);

}  // namespace mvdwls::optim
