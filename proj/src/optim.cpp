#include "mvdwls/optim.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "mvdwls/error.hpp"
#include "mvdwls/rng.hpp"

namespace mvdwls::optim {

bool better(double value_a, const VectorXd& a, double value_b, const VectorXd& b) {
  if (value_a != value_b) return value_a > value_b;
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

OptimumPoint differential_evolution(const Objective& f, int dim, const DeConfig& cfg) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  const int np = std::max(cfg.population, 4);
  rng::Stream stream(cfg.seed, 0, rng::Purpose::Optimizer);
  auto pick = [&](int bound) {
    return std::min(bound - 1, static_cast<int>(stream.uniform01() * bound));
  };

  std::vector<VectorXd> pop(static_cast<std::size_t>(np), VectorXd(dim));
  std::vector<double> fit(static_cast<std::size_t>(np));
  OptimumPoint best;
  for (int i = 0; i < np; ++i) {
    auto& x = pop[static_cast<std::size_t>(i)];
    for (int d = 0; d < dim; ++d) {
      x(d) = cfg.init_lower + (cfg.init_upper - cfg.init_lower) * stream.uniform01();
    }
    fit[static_cast<std::size_t>(i)] = f(x);
    ++best.evaluations;
    if (i == 0 || better(fit[static_cast<std::size_t>(i)], x, best.value, best.x)) {
      best.x = x;
      best.value = fit[static_cast<std::size_t>(i)];
    }
  }

  std::vector<VectorXd> trials(static_cast<std::size_t>(np), VectorXd(dim));
  for (int g = 0; g < cfg.generations; ++g) {
    for (int i = 0; i < np; ++i) {
      int a, b, c;
      do { a = pick(np); } while (a == i);
      do { b = pick(np); } while (b == i || b == a);
      do { c = pick(np); } while (c == i || c == a || c == b);
      const int forced = pick(dim);
      const auto& target = pop[static_cast<std::size_t>(i)];
      auto& trial = trials[static_cast<std::size_t>(i)];
      for (int d = 0; d < dim; ++d) {
        if (d == forced || stream.uniform01() < cfg.crossover_rate) {
          trial(d) = pop[static_cast<std::size_t>(a)](d) +
                     cfg.differential_weight *
                         (pop[static_cast<std::size_t>(b)](d) - pop[static_cast<std::size_t>(c)](d));
        } else {
          trial(d) = target(d);
        }
      }
    }
    for (int i = 0; i < np; ++i) {
      const auto& trial = trials[static_cast<std::size_t>(i)];
      const double value = f(trial);
      ++best.evaluations;
      if (value >= fit[static_cast<std::size_t>(i)]) {
        pop[static_cast<std::size_t>(i)] = trial;
        fit[static_cast<std::size_t>(i)] = value;
      }
      if (better(value, trial, best.value, best.x)) {
        best.x = trial;
        best.value = value;
      }
    }
  }
  return best;
}

OptimumPoint nelder_mead(const Objective& f, const VectorXd& start, const NelderMeadConfig& cfg) {
  const auto dim = start.size();
  std::vector<VectorXd> simplex{start};
  for (Eigen::Index d = 0; d < dim; ++d) {
    VectorXd v = start;
    v(d) += (v(d) != 0.0 ? cfg.initial_step * std::abs(v(d)) : cfg.initial_step);
    simplex.push_back(v);
  }
  std::vector<double> values;
  OptimumPoint out{start, f(start), 1};
  for (const auto& v : simplex) values.push_back(&v == &simplex.front() ? out.value : f(v));
  out.evaluations += dim;

  std::vector<std::size_t> order(simplex.size());
  auto eval = [&](const VectorXd& x) {
    ++out.evaluations;
    return f(x);
  };
  while (out.evaluations < cfg.max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] > values[b]; });
    const auto best = order.front();
    const auto worst = order.back();
    const auto second = order[order.size() - 2];

    double spread = 0.0;
    for (const auto& v : simplex) spread = std::max(spread, (v - simplex[best]).cwiseAbs().maxCoeff());
    if (spread < cfg.x_tolerance) break;

    VectorXd centroid = VectorXd::Zero(dim);
    for (std::size_t k = 0; k < simplex.size(); ++k) {
      if (k != worst) centroid += simplex[k];
    }
    centroid /= static_cast<double>(dim);

    const VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double fr = eval(reflected);
    if (fr > values[best]) {
      const VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = eval(expanded);
      if (fe > fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
    } else if (fr > values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
    } else {
      const VectorXd contracted = centroid + 0.5 * (simplex[worst] - centroid);
      const double fc = eval(contracted);
      if (fc > values[worst]) {
        simplex[worst] = contracted;
        values[worst] = fc;
      } else {
        for (std::size_t k = 0; k < simplex.size(); ++k) {
          if (k == best) continue;
          simplex[k] = simplex[best] + 0.5 * (simplex[k] - simplex[best]);
          values[k] = eval(simplex[k]);
        }
      }
    }
  }
  for (std::size_t k = 0; k < simplex.size(); ++k) {
    if (values[k] > out.value) {
      out.value = values[k];
      out.x = simplex[k];
    }
  }
  return out;
}

}  // namespace mvdwls::optim
