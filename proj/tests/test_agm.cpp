#include <doctest.h>

#include <cmath>
#include <vector>

#include "gen.hpp"
#include "stlad/agm.hpp"
#include "stlad/error.hpp"

using namespace stlad;

namespace {

// Straight transcription of the recursive definitions with explicit products,
// independent of the library's bottom-up evaluation.
double conj(const std::vector<double>& v) {
  bool pos = true;
  for (double x : v) pos = pos && x > 0;
  if (pos) {
    double p = 1;
    for (double x : v) p *= 1 + x;
    return std::pow(p, 1.0 / static_cast<double>(v.size())) - 1;
  }
  double s = 0;
  for (double x : v) s += std::min(0.0, x);
  return s / static_cast<double>(v.size());
}

double disj(std::vector<double> v) {
  for (double& x : v) x = -x;
  return -conj(v);
}

double naive(const Formula& f, const Trace& tr, std::size_t t) {
  auto kids = f.children();
  switch (f.kind()) {
    case Formula::Kind::True: return 1;
    case Formula::Kind::Predicate: return 0.5 * (f.threshold() - eval_signal(f.signal(), tr, t));
    case Formula::Kind::Not: return -naive(kids[0], tr, t);
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<double> v;
      for (const auto& c : kids) v.push_back(naive(c, tr, t));
      return f.kind() == Formula::Kind::And ? conj(v) : disj(v);
    }
    case Formula::Kind::Always:
    case Formula::Kind::Eventually: {
      auto s = f.interval().steps(tr.dt());
      std::vector<double> v;
      for (std::size_t k = s.first; k <= s.last; ++k) v.push_back(naive(kids[0], tr, t + k));
      return f.kind() == Formula::Kind::Always ? conj(v) : disj(v);
    }
    case Formula::Kind::Until: {
      auto s = f.interval().steps(tr.dt());
      std::vector<double> cand;
      for (std::size_t k = s.first; k <= s.last; ++k) {
        double rhs = naive(kids[1], tr, t + k);
        if (k == 0) {
          cand.push_back(rhs);
          continue;
        }
        std::vector<double> prefix;
        for (std::size_t j = 0; j < k; ++j) prefix.push_back(naive(kids[0], tr, t + j));
        cand.push_back(conj({rhs, conj(prefix)}));
      }
      return disj(cand);
    }
  }
  return 0;
}

Trace one_channel(std::vector<double> v) {
  Trace::ChannelMap ch;
  ch["x"] = std::move(v);
  return Trace(std::move(ch), 1.0);
}

}  // namespace

TEST_CASE("hand vectors") {
  CHECK(agm_robustness(Formula::truth(), one_channel({0})).value == 1.0);
  // h = 0.3, u = 0.5: satisfied with margin 0.2.
  auto p = parse_formula("x <= 0.5");
  CHECK(agm_robustness(p, one_channel({0.3})).value == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(std::abs(agm_robustness(p, one_channel({0.3})).value - 0.1) <= 1e-12);

  const double pos[] = {0.2, 0.2};
  CHECK(std::abs(agm_conjunction(pos) - 0.2) <= 1e-12);
  const double mixed[] = {-0.4, 0.6};
  CHECK(std::abs(agm_conjunction(mixed) - -0.2) <= 1e-12);
  const double window[] = {0.2, -0.1, 0.3};
  CHECK(std::abs(agm_conjunction(window) - -0.1 / 3) <= 1e-12);

  // Same values reached through formulas. x <= 0 has robustness -x / 2.
  auto tr = one_channel({-0.4, 0.2, -0.6});
  CHECK(std::abs(agm_robustness(parse_formula("alw[0,2] (x <= 0)"), tr).value - -0.1 / 3) <= 1e-12);
  auto both = parse_formula("x <= 0 & 0.5 * x <= 0.2");
  // children: 0.2 and 0.5 * (0.2 - (-0.2)) = 0.2
  CHECK(std::abs(agm_robustness(both, tr).value - 0.2) <= 1e-12);
}

TEST_CASE("clipped parts") {
  CHECK(clipped_pos(-2) == 0);
  CHECK(clipped_pos(3) == 3);
  CHECK(clipped_neg(-2) == -2);
  CHECK(clipped_neg(3) == 0);
}

TEST_CASE("zero children take the arithmetic branch") {
  const double zeros[] = {0, 0, 0};
  CHECK(agm_conjunction(zeros) == 0.0);
  const double one_zero[] = {0.5, 0.0};
  CHECK(agm_conjunction(one_zero) == 0.0);
  CHECK(agm_disjunction(one_zero) == doctest::Approx(0.25).epsilon(1e-15));  // mean of the positive parts
  CHECK_THROWS_AS(agm_conjunction(std::span<const double>{}), Error);
}

TEST_CASE("eventually and until on a small trace") {
  auto tr = one_channel({0.4, -0.2, 0.6});
  // x <= 0 gives (-0.2, 0.1, -0.3). Eventually: -conj(0.2, -0.1, 0.3).
  CHECK(std::abs(agm_robustness(parse_formula("ev[0,2] (x <= 0)"), tr).value - 0.1 / 3) <= 1e-12);

  Trace::ChannelMap ch;
  ch["a"] = {-0.2, -0.4, 0.0};
  ch["b"] = {0.6, 0.2, -0.8};
  Trace two(ch, 1.0);
  // a <= 0: (0.1, 0.2, 0); b <= 0: (-0.3, -0.1, 0.4)
  // k=1: conj(-0.1, 0.1) = -0.05
  // k=2: conj(0.4, conj(0.1, 0.2)) = sqrt(1.4 * sqrt(1.1 * 1.2)) - 1
  const double k2 = std::sqrt(1.4 * std::sqrt(1.1 * 1.2)) - 1;
  const double expect = -conj({0.05, -k2});
  CHECK(expect > 0);
  CHECK(std::abs(agm_robustness(parse_formula("a <= 0 until[1,2] b <= 0"), two).value - expect) <= 1e-12);
}

TEST_CASE("matches the recursive definition") {
  Rng rng(101);
  for (int i = 0; i < 3000; ++i) {
    auto f = gen::formula(rng, 4);
    auto tr = gen::trace_for(rng, f, 3);
    auto sig = agm_signal(f, tr);
    REQUIRE(sig.size() == 4);
    for (std::size_t t = 0; t < sig.size(); ++t) {
      INFO(to_string(f));
      REQUIRE(std::abs(sig[t] - naive(f, tr, t)) <= 1e-12);
      REQUIRE(agm_robustness(f, tr, t).value == sig[t]);
    }
  }
}

TEST_CASE("soundness against boolean semantics") {
  Rng rng(7);
  int decided = 0;
  for (int i = 0; i < 20000; ++i) {
    auto f = gen::formula(rng, 4);
    auto tr = gen::trace_for(rng, f);
    double eta = agm_robustness(f, tr).value;
    if (std::abs(eta) <= 1e-9) continue;
    ++decided;
    INFO(to_string(f));
    REQUIRE((eta > 0) == bool_sat(f, tr));
  }
  CHECK(decided >= 10000);
}

TEST_CASE("bounded with clamped predicates") {
  Rng rng(9);
  gen::Options opt;
  opt.clamped = true;
  for (int i = 0; i < 3000; ++i) {
    auto f = gen::formula(rng, 4, opt);
    auto tr = gen::trace_for(rng, f);
    double eta = agm_robustness(f, tr).value;
    REQUIRE(eta >= -1.0);
    REQUIRE(eta <= 1.0);
  }
}

TEST_CASE("negation antisymmetry and conjunction order") {
  Rng rng(13);
  for (int i = 0; i < 2000; ++i) {
    auto f = gen::formula(rng, 3);
    auto g = gen::formula(rng, 3);
    auto h = gen::formula(rng, 3);
    auto abc = Formula::conjunction({f, g, h});
    auto cab = Formula::conjunction({h, f, g});
    auto tr = gen::trace_for(rng, abc);
    REQUIRE(agm_robustness(Formula::negation(f), tr).value == -agm_robustness(f, tr).value);
    REQUIRE(std::abs(agm_robustness(abc, tr).value - agm_robustness(cab, tr).value) <= 1e-15);
  }
}

TEST_CASE("small perturbations move robustness proportionally") {
  auto f = parse_formula("alw[0,2] (clamp(x, -1, 1) <= 0.5) & ev[0,2] (clamp(y, 0, 2) <= 0)");
  Trace::ChannelMap ch;
  ch["x"] = {0.1, 0.2, -0.3};
  ch["y"] = {0.4, 0.2, 0.9};
  Trace tr(ch, 1.0);
  const double base = agm_robustness(f, tr).value;
  for (double eps : {1e-6, 1e-7, -1e-6}) {
    for (const char* name : {"x", "y"}) {
      for (std::size_t k = 0; k < 3; ++k) {
        auto moved = tr.with_value(name, k, tr.channel(name)[k] + eps);
        CHECK(std::abs(agm_robustness(f, moved).value - base) <= 2 * std::abs(eps));
      }
    }
  }
}

TEST_CASE("horizon and empty windows are errors") {
  auto f = parse_formula("alw[0,3] (x <= 0)");
  CHECK_THROWS_AS(agm_robustness(f, one_channel({0, 0, 0})), HorizonError);
  try {
    agm_robustness(parse_formula("ev[0.2,0.4] (x <= 0)"), one_channel({0, 0, 0}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Horizon);
  }
}
