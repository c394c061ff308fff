#include <cmath>

#include "stlad/agm.hpp"
#include "stlad/error.hpp"

namespace stlad {

double agm_conjunction(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "robustness aggregate over an empty set");
  const double m = static_cast<double>(values.size());
  bool all_positive = true;
  for (double v : values) all_positive = all_positive && v > 0.0;
  if (all_positive) {
    double log_sum = 0.0;
    for (double v : values) log_sum += std::log1p(v);
    return std::expm1(log_sum / m);
  }
  double neg_sum = 0.0;
  for (double v : values) neg_sum += clipped_neg(v);
  return neg_sum / m;
}

double agm_disjunction(std::span<const double> values) {
  std::vector<double> negated(values.begin(), values.end());
  for (double& v : negated) v = -v;
  return -agm_conjunction(negated);
}

namespace {

// Running conjunction over a growing window: used for the Until prefix.
class PrefixConjunction {
 public:
  void push(double v) {
    ++count_;
    if (v > 0.0) {
      log_sum_ += std::log1p(v);
    } else {
      all_positive_ = false;
      neg_sum_ += v;
    }
  }
  bool empty() const { return count_ == 0; }
  double value() const {
    const double m = static_cast<double>(count_);
    return all_positive_ ? std::expm1(log_sum_ / m) : neg_sum_ / m;
  }

 private:
  std::size_t count_ = 0;
  bool all_positive_ = true;
  double log_sum_ = 0.0;
  double neg_sum_ = 0.0;
};

std::vector<double> robustness_signal(const Formula& f, const Trace& tr) {
  const std::size_t horizon = horizon_steps(f, tr.dt());
  const std::size_t n = tr.length() - horizon;
  std::vector<double> out(n);
  auto kids = f.children();
  switch (f.kind()) {
    case Formula::Kind::True:
      for (auto& v : out) v = 1.0;
      break;
    case Formula::Kind::Predicate:
      // Satisfaction is h - u <= 0, so the margin is u - h.
      for (std::size_t t = 0; t < n; ++t) out[t] = 0.5 * (f.threshold() - eval_signal(f.signal(), tr, t));
      break;
    case Formula::Kind::Not: {
      auto c = robustness_signal(kids[0], tr);
      for (std::size_t t = 0; t < n; ++t) out[t] = -c[t];
      break;
    }
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<std::vector<double>> cs;
      for (const auto& c : kids) cs.push_back(robustness_signal(c, tr));
      std::vector<double> at(cs.size());
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < cs.size(); ++i) at[i] = cs[i][t];
        out[t] = f.kind() == Formula::Kind::And ? agm_conjunction(at) : agm_disjunction(at);
      }
      break;
    }
    case Formula::Kind::Always:
    case Formula::Kind::Eventually: {
      auto c = robustness_signal(kids[0], tr);
      auto s = f.interval().steps(tr.dt());
      for (std::size_t t = 0; t < n; ++t) {
        std::span<const double> window(c.data() + t + s.first, s.count());
        out[t] = f.kind() == Formula::Kind::Always ? agm_conjunction(window) : agm_disjunction(window);
      }
      break;
    }
    case Formula::Kind::Until: {
      auto lhs = robustness_signal(kids[0], tr);
      auto rhs = robustness_signal(kids[1], tr);
      auto s = f.interval().steps(tr.dt());
      std::vector<double> candidates(s.count());
      for (std::size_t t = 0; t < n; ++t) {
        PrefixConjunction prefix;
        for (std::size_t k = 0; k < s.first; ++k) prefix.push(lhs[t + k]);
        for (std::size_t k = s.first; k <= s.last; ++k) {
          double here = rhs[t + k];
          if (prefix.empty()) {
            candidates[k - s.first] = here;
          } else {
            const double pair[2] = {here, prefix.value()};
            candidates[k - s.first] = agm_conjunction(pair);
          }
          prefix.push(lhs[t + k]);
        }
        out[t] = agm_disjunction(candidates);
      }
      break;
    }
  }
  return out;
}

}  // namespace

std::vector<double> agm_signal(const Formula& formula, const Trace& trace) {
  check_horizon(formula, trace, 0);
  return robustness_signal(formula, trace);
}

Robustness agm_robustness(const Formula& formula, const Trace& trace, std::size_t step) {
  check_horizon(formula, trace, step);
  return {robustness_signal(formula, trace)[step]};
}

}  // namespace stlad
