#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stlad/stl.hpp"

namespace stlad {

/// Arithmetic-geometric mean robustness. Positive values imply the trace
/// satisfies the formula, negative values imply it violates it.
struct Robustness {
  double value;

  bool satisfied() const noexcept { return value > 0.0; }
};

/// [v]+ = max(0, v)
inline double clipped_pos(double v) { return v > 0.0 ? v : 0.0; }
/// [v]- = min(0, v)
inline double clipped_neg(double v) { return v < 0.0 ? v : 0.0; }

/// Conjunction rule: geometric mean of (1 + v) minus one when every value is
/// strictly positive, otherwise the mean of the negative parts. Always uses
/// the same rule over its window.
double agm_conjunction(std::span<const double> values);

/// Dual of agm_conjunction: -agm_conjunction(-values).
double agm_disjunction(std::span<const double> values);

Robustness agm_robustness(const Formula& formula, const Trace& trace, std::size_t step = 0);

/// Robustness at every step t for which the formula's horizon fits in the
/// trace; the result has trace.length() - horizon_steps(formula) entries.
std::vector<double> agm_signal(const Formula& formula, const Trace& trace);

}  // namespace stlad
