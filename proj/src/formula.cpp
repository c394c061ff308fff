#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "numfmt.hpp"
#include "stlad/error.hpp"
#include "stlad/stl.hpp"

namespace stlad {

namespace {
// Absorbs representation error in lo/dt and hi/dt (e.g. 0.3 / 0.1).
constexpr double kStepSlack = 1e-9;
}  // namespace

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::InvalidArgument, "interval bounds must be finite");
  if (lo < 0.0) throw Error(ErrorCode::InvalidArgument, "interval lower bound must be >= 0");
  if (hi < lo) throw Error(ErrorCode::InvalidArgument, "interval upper bound is below its lower bound");
}

Interval::Steps Interval::steps(double dt) const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error(ErrorCode::InvalidArgument, "sampling period must be positive and finite");
  double first = std::ceil(lo_ / dt - kStepSlack);
  double last = std::floor(hi_ / dt + kStepSlack);
  if (first > last) {
    throw Error(ErrorCode::Horizon, "interval [" + detail::format_number(lo_) + ", " +
                                        detail::format_number(hi_) +
                                        "] contains no sample at dt=" + detail::format_number(dt));
  }
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

struct Formula::Node {
  Kind kind;
  std::optional<SignalExpr> signal;
  double threshold = 0.0;
  std::optional<Interval> interval;
  std::vector<Formula> children;
};

Formula Formula::truth() {
  return Formula(std::make_shared<const Node>(Node{Kind::True, std::nullopt, 0.0, std::nullopt, {}}));
}

Formula Formula::predicate(SignalExpr h, double threshold) {
  if (!(threshold >= -1.0 && threshold <= 1.0))
    throw Error(ErrorCode::InvalidArgument,
                "predicate threshold " + detail::format_number(threshold) + " is outside [-1, 1]");
  return Formula(std::make_shared<const Node>(
      Node{Kind::Predicate, std::move(h), threshold, std::nullopt, {}}));
}

Formula Formula::negation(Formula operand) {
  return Formula(std::make_shared<const Node>(
      Node{Kind::Not, std::nullopt, 0.0, std::nullopt, {std::move(operand)}}));
}

Formula Formula::conjunction(std::vector<Formula> operands) {
  if (operands.size() < 2) throw Error(ErrorCode::InvalidArgument, "conjunction needs at least two operands");
  return Formula(std::make_shared<const Node>(
      Node{Kind::And, std::nullopt, 0.0, std::nullopt, std::move(operands)}));
}

Formula Formula::disjunction(std::vector<Formula> operands) {
  if (operands.size() < 2) throw Error(ErrorCode::InvalidArgument, "disjunction needs at least two operands");
  return Formula(std::make_shared<const Node>(
      Node{Kind::Or, std::nullopt, 0.0, std::nullopt, std::move(operands)}));
}

Formula Formula::always(Interval interval, Formula operand) {
  return Formula(std::make_shared<const Node>(
      Node{Kind::Always, std::nullopt, 0.0, interval, {std::move(operand)}}));
}

Formula Formula::eventually(Interval interval, Formula operand) {
  return Formula(std::make_shared<const Node>(
      Node{Kind::Eventually, std::nullopt, 0.0, interval, {std::move(operand)}}));
}

Formula Formula::until(Interval interval, Formula lhs, Formula rhs) {
  return Formula(std::make_shared<const Node>(
      Node{Kind::Until, std::nullopt, 0.0, interval, {std::move(lhs), std::move(rhs)}}));
}

Formula::Kind Formula::kind() const { return node_->kind; }

const SignalExpr& Formula::signal() const {
  if (!node_->signal) throw Error(ErrorCode::InvalidArgument, "formula is not a predicate");
  return *node_->signal;
}

double Formula::threshold() const { return node_->threshold; }

const Interval& Formula::interval() const {
  if (!node_->interval) throw Error(ErrorCode::InvalidArgument, "formula has no interval");
  return *node_->interval;
}

std::span<const Formula> Formula::children() const { return node_->children; }

bool Formula::operator==(const Formula& other) const {
  if (node_ == other.node_) return true;
  const Node& l = *node_;
  const Node& r = *other.node_;
  return l.kind == r.kind && l.signal == r.signal && l.threshold == r.threshold &&
         l.interval == r.interval && l.children == r.children;
}

namespace {

std::string interval_text(const Interval& i) {
  return "[" + detail::format_number(i.lo()) + ", " + detail::format_number(i.hi()) + "]";
}

std::string join(std::span<const Formula> fs, const char* sep) {
  std::string s = "(";
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (i) s += sep;
    s += to_string(fs[i]);
  }
  return s + ")";
}

void collect_warnings(const Formula& f, std::vector<std::string>& out) {
  if (f.kind() == Formula::Kind::Predicate) {
    auto r = signal_range(f.signal());
    if (!(r.lo >= -1.0 && r.hi <= 1.0)) {
      out.push_back("signal `" + to_string(f.signal()) +
                    "` is not provably inside [-1, 1]; wrap it in clamp(expr, lo, hi)");
    }
  }
  for (const auto& c : f.children()) collect_warnings(c, out);
}

}  // namespace

std::string to_string(const Formula& f) {
  auto kids = f.children();
  switch (f.kind()) {
    case Formula::Kind::True: return "true";
    case Formula::Kind::Predicate:
      return to_string(f.signal()) + " <= " + detail::format_number(f.threshold());
    case Formula::Kind::Not: return "!(" + to_string(kids[0]) + ")";
    case Formula::Kind::And: return join(kids, " & ");
    case Formula::Kind::Or: return join(kids, " | ");
    case Formula::Kind::Always: return "alw" + interval_text(f.interval()) + " (" + to_string(kids[0]) + ")";
    case Formula::Kind::Eventually:
      return "ev" + interval_text(f.interval()) + " (" + to_string(kids[0]) + ")";
    case Formula::Kind::Until:
      return "((" + to_string(kids[0]) + ") until" + interval_text(f.interval()) + " (" +
             to_string(kids[1]) + "))";
  }
  return {};
}

std::vector<std::string> range_warnings(const Formula& formula) {
  std::vector<std::string> out;
  collect_warnings(formula, out);
  return out;
}

std::size_t horizon_steps(const Formula& f, double dt) {
  auto kids = f.children();
  switch (f.kind()) {
    case Formula::Kind::True:
    case Formula::Kind::Predicate: return 0;
    case Formula::Kind::Not: return horizon_steps(kids[0], dt);
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::size_t h = 0;
      for (const auto& c : kids) h = std::max(h, horizon_steps(c, dt));
      return h;
    }
    case Formula::Kind::Always:
    case Formula::Kind::Eventually: return f.interval().steps(dt).last + horizon_steps(kids[0], dt);
    case Formula::Kind::Until:
      return f.interval().steps(dt).last +
             std::max(horizon_steps(kids[0], dt), horizon_steps(kids[1], dt));
  }
  return 0;
}

void check_horizon(const Formula& formula, const Trace& trace, std::size_t step) {
  std::size_t need = step + horizon_steps(formula, trace.dt()) + 1;
  if (need > trace.length()) throw HorizonError(need, trace.length());
}

Formula load_formula(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open formula file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_formula(ss.str());
}

}  // namespace stlad
