#include <algorithm>
#include <cmath>
#include <limits>

#include "numfmt.hpp"
#include "stlad/error.hpp"
#include "stlad/stl.hpp"

namespace stlad {

struct SignalExpr::Node {
  Kind kind;
  std::string name;
  double a = 0.0;
  double b = 0.0;
  std::vector<SignalExpr> children;
};

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be finite");
}

}  // namespace

SignalExpr SignalExpr::channel(std::string name) {
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "channel name must not be empty");
  return SignalExpr(std::make_shared<const Node>(Node{Kind::Channel, std::move(name), 0, 0, {}}));
}

SignalExpr SignalExpr::constant(double value) {
  require_finite(value, "constant");
  return SignalExpr(std::make_shared<const Node>(Node{Kind::Const, {}, value, 0, {}}));
}

SignalExpr SignalExpr::negate(SignalExpr operand) {
  return SignalExpr(std::make_shared<const Node>(Node{Kind::Negate, {}, 0, 0, {std::move(operand)}}));
}

SignalExpr SignalExpr::sum(SignalExpr lhs, SignalExpr rhs) {
  return SignalExpr(
      std::make_shared<const Node>(Node{Kind::Sum, {}, 0, 0, {std::move(lhs), std::move(rhs)}}));
}

SignalExpr SignalExpr::difference(SignalExpr lhs, SignalExpr rhs) {
  return SignalExpr(std::make_shared<const Node>(
      Node{Kind::Difference, {}, 0, 0, {std::move(lhs), std::move(rhs)}}));
}

SignalExpr SignalExpr::scale(double factor, SignalExpr operand) {
  require_finite(factor, "scale factor");
  return SignalExpr(
      std::make_shared<const Node>(Node{Kind::Scale, {}, factor, 0, {std::move(operand)}}));
}

SignalExpr SignalExpr::norm(std::vector<SignalExpr> components) {
  if (components.empty()) throw Error(ErrorCode::InvalidArgument, "norm needs at least one component");
  return SignalExpr(std::make_shared<const Node>(Node{Kind::Norm, {}, 0, 0, std::move(components)}));
}

SignalExpr SignalExpr::clamp_scale(double lower, double upper, SignalExpr operand) {
  require_finite(lower, "clamp lower bound");
  require_finite(upper, "clamp upper bound");
  if (!(upper > lower)) throw Error(ErrorCode::InvalidArgument, "clamp needs lower < upper");
  return SignalExpr(std::make_shared<const Node>(
      Node{Kind::ClampScale, {}, lower, upper, {std::move(operand)}}));
}

SignalExpr::Kind SignalExpr::kind() const { return node_->kind; }
const std::string& SignalExpr::name() const { return node_->name; }
double SignalExpr::value() const { return node_->a; }
double SignalExpr::lower() const { return node_->a; }
double SignalExpr::upper() const { return node_->b; }
std::span<const SignalExpr> SignalExpr::children() const { return node_->children; }

bool SignalExpr::operator==(const SignalExpr& other) const {
  if (node_ == other.node_) return true;
  const Node& l = *node_;
  const Node& r = *other.node_;
  return l.kind == r.kind && l.name == r.name && l.a == r.a && l.b == r.b &&
         l.children == r.children;
}

double eval_signal(const SignalExpr& expr, const Trace& trace, std::size_t step) {
  if (step >= trace.length()) {
    throw Error(ErrorCode::InvalidArgument, "step " + std::to_string(step) +
                                                " is outside a trace of length " +
                                                std::to_string(trace.length()));
  }
  auto kids = expr.children();
  switch (expr.kind()) {
    case SignalExpr::Kind::Channel: return trace.channel(expr.name())[step];
    case SignalExpr::Kind::Const: return expr.value();
    case SignalExpr::Kind::Negate: return -eval_signal(kids[0], trace, step);
    case SignalExpr::Kind::Sum:
      return eval_signal(kids[0], trace, step) + eval_signal(kids[1], trace, step);
    case SignalExpr::Kind::Difference:
      return eval_signal(kids[0], trace, step) - eval_signal(kids[1], trace, step);
    case SignalExpr::Kind::Scale: return expr.value() * eval_signal(kids[0], trace, step);
    case SignalExpr::Kind::Norm: {
      double acc = 0.0;
      for (const auto& c : kids) {
        double v = eval_signal(c, trace, step);
        acc += v * v;
      }
      return std::sqrt(acc);
    }
    case SignalExpr::Kind::ClampScale: {
      double v = eval_signal(kids[0], trace, step);
      double mapped = 2.0 * (v - expr.lower()) / (expr.upper() - expr.lower()) - 1.0;
      return std::clamp(mapped, -1.0, 1.0);
    }
  }
  return 0.0;
}

ValueRange signal_range(const SignalExpr& expr) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto kids = expr.children();
  switch (expr.kind()) {
    case SignalExpr::Kind::Channel: return {-inf, inf};
    case SignalExpr::Kind::Const: return {expr.value(), expr.value()};
    case SignalExpr::Kind::Negate: {
      auto r = signal_range(kids[0]);
      return {-r.hi, -r.lo};
    }
    case SignalExpr::Kind::Sum: {
      auto a = signal_range(kids[0]);
      auto b = signal_range(kids[1]);
      return {a.lo + b.lo, a.hi + b.hi};
    }
    case SignalExpr::Kind::Difference: {
      auto a = signal_range(kids[0]);
      auto b = signal_range(kids[1]);
      return {a.lo - b.hi, a.hi - b.lo};
    }
    case SignalExpr::Kind::Scale: {
      auto r = signal_range(kids[0]);
      double f = expr.value();
      if (f == 0.0) return {0.0, 0.0};
      return f > 0 ? ValueRange{f * r.lo, f * r.hi} : ValueRange{f * r.hi, f * r.lo};
    }
    case SignalExpr::Kind::Norm: {
      double hi2 = 0.0;
      for (const auto& c : kids) {
        auto r = signal_range(c);
        double m = std::max(std::abs(r.lo), std::abs(r.hi));
        hi2 += m * m;
      }
      return {0.0, std::sqrt(hi2)};
    }
    case SignalExpr::Kind::ClampScale: return {-1.0, 1.0};
  }
  return {-inf, inf};
}

std::string to_string(const SignalExpr& expr) {
  using detail::format_number;
  auto kids = expr.children();
  switch (expr.kind()) {
    case SignalExpr::Kind::Channel: return expr.name();
    case SignalExpr::Kind::Const: return format_number(expr.value());
    case SignalExpr::Kind::Negate: return "-(" + to_string(kids[0]) + ")";
    case SignalExpr::Kind::Sum: return "(" + to_string(kids[0]) + " + " + to_string(kids[1]) + ")";
    case SignalExpr::Kind::Difference:
      return "(" + to_string(kids[0]) + " - " + to_string(kids[1]) + ")";
    case SignalExpr::Kind::Scale:
      return "(" + format_number(expr.value()) + " * " + to_string(kids[0]) + ")";
    case SignalExpr::Kind::Norm: {
      std::string s = "norm(";
      for (std::size_t i = 0; i < kids.size(); ++i) {
        if (i) s += ", ";
        s += to_string(kids[i]);
      }
      return s + ")";
    }
    case SignalExpr::Kind::ClampScale:
      return "clamp(" + to_string(kids[0]) + ", " + format_number(expr.lower()) + ", " +
             format_number(expr.upper()) + ")";
  }
  return {};
}

}  // namespace stlad
