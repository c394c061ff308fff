#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace stlad::detail {

/// Objective returns f(x) and writes the gradient; +inf marks an infeasible point.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

struct MinimizeResult {
  std::vector<double> x;
  double value;
  std::size_t evaluations;
};

/// Projected limited-memory BFGS on the box [lower, upper] with Armijo backtracking.
MinimizeResult minimize_box(const Objective& f, std::vector<double> x0, const std::vector<double>& lower,
                            const std::vector<double>& upper, std::size_t max_iterations);

}  // namespace stlad::detail
