#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stlad/trace.hpp"

namespace stlad {

/// Closed real interval used to bound a signal expression's range.
struct ValueRange {
  double lo;
  double hi;
};

/// Expression tree over named trace channels, evaluated at one time step.
class SignalExpr {
 public:
  enum class Kind { Channel, Const, Negate, Sum, Difference, Scale, Norm, ClampScale };

  static SignalExpr channel(std::string name);
  static SignalExpr constant(double value);
  static SignalExpr negate(SignalExpr operand);
  static SignalExpr sum(SignalExpr lhs, SignalExpr rhs);
  static SignalExpr difference(SignalExpr lhs, SignalExpr rhs);
  static SignalExpr scale(double factor, SignalExpr operand);
  static SignalExpr norm(std::vector<SignalExpr> components);
  /// Affine map of [lower, upper] onto [-1, 1], clamped outside.
  static SignalExpr clamp_scale(double lower, double upper, SignalExpr operand);

  Kind kind() const;
  const std::string& name() const;
  /// Const value or Scale factor.
  double value() const;
  double lower() const;
  double upper() const;
  std::span<const SignalExpr> children() const;

  bool operator==(const SignalExpr& other) const;

  struct Node;

 private:
  explicit SignalExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

double eval_signal(const SignalExpr& expr, const Trace& trace, std::size_t step);

/// Sound (possibly loose) enclosure of every value the expression can take.
ValueRange signal_range(const SignalExpr& expr);

/// Time interval [lo, hi] in seconds.
class Interval {
 public:
  Interval(double lo, double hi);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  struct Steps {
    std::size_t first;
    std::size_t last;
    std::size_t count() const noexcept { return last - first + 1; }
  };
  /// Inclusive step range {ceil(lo/dt), ..., floor(hi/dt)}.
  Steps steps(double dt) const;

  bool operator==(const Interval& other) const = default;

 private:
  double lo_;
  double hi_;
};

class Formula {
 public:
  enum class Kind { True, Predicate, Not, And, Or, Always, Eventually, Until };

  static Formula truth();
  /// h(s) - u <= 0, with u in [-1, 1].
  static Formula predicate(SignalExpr h, double threshold);
  static Formula negation(Formula operand);
  static Formula conjunction(std::vector<Formula> operands);
  static Formula disjunction(std::vector<Formula> operands);
  static Formula always(Interval interval, Formula operand);
  static Formula eventually(Interval interval, Formula operand);
  static Formula until(Interval interval, Formula lhs, Formula rhs);

  Kind kind() const;
  const SignalExpr& signal() const;
  double threshold() const;
  const Interval& interval() const;
  /// Operands in order; for Until this is {lhs, rhs}.
  std::span<const Formula> children() const;

  bool operator==(const Formula& other) const;

  struct Node;

 private:
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Formula parse_formula(std::string_view text);
Formula load_formula(const std::filesystem::path& path);

std::string to_string(const SignalExpr& expr);
std::string to_string(const Formula& formula);

/// One message per predicate whose signal is not provably inside [-1, 1].
std::vector<std::string> range_warnings(const Formula& formula);

/// Number of steps past t the formula inspects.
std::size_t horizon_steps(const Formula& formula, double dt);

/// Throws HorizonError unless t + horizon fits inside the trace.
void check_horizon(const Formula& formula, const Trace& trace, std::size_t step);

/// Boolean satisfaction at step t.
bool bool_sat(const Formula& formula, const Trace& trace, std::size_t step = 0);

}  // namespace stlad
