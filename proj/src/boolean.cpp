#include "stlad/stl.hpp"

namespace stlad {
namespace {

bool sat(const Formula& f, const Trace& tr, std::size_t t) {
  auto kids = f.children();
  switch (f.kind()) {
    case Formula::Kind::True: return true;
    case Formula::Kind::Predicate: return eval_signal(f.signal(), tr, t) - f.threshold() <= 0.0;
    case Formula::Kind::Not: return !sat(kids[0], tr, t);
    case Formula::Kind::And:
      for (const auto& c : kids)
        if (!sat(c, tr, t)) return false;
      return true;
    case Formula::Kind::Or:
      for (const auto& c : kids)
        if (sat(c, tr, t)) return true;
      return false;
    case Formula::Kind::Always: {
      auto s = f.interval().steps(tr.dt());
      for (std::size_t k = s.first; k <= s.last; ++k)
        if (!sat(kids[0], tr, t + k)) return false;
      return true;
    }
    case Formula::Kind::Eventually: {
      auto s = f.interval().steps(tr.dt());
      for (std::size_t k = s.first; k <= s.last; ++k)
        if (sat(kids[0], tr, t + k)) return true;
      return false;
    }
    case Formula::Kind::Until: {
      auto s = f.interval().steps(tr.dt());
      for (std::size_t k = s.first; k <= s.last; ++k) {
        if (!sat(kids[1], tr, t + k)) continue;
        bool prefix = true;
        for (std::size_t j = 0; j < k && prefix; ++j) prefix = sat(kids[0], tr, t + j);
        if (prefix) return true;
      }
      return false;
    }
  }
  return false;
}

}  // namespace

bool bool_sat(const Formula& formula, const Trace& trace, std::size_t step) {
  check_horizon(formula, trace, step);
  return sat(formula, trace, step);
}

}  // namespace stlad
