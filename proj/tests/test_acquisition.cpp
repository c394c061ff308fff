#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "stlad/acquisition.hpp"
#include "stlad/agm.hpp"
#include "stlad/error.hpp"
#include "stlad/rng.hpp"

using namespace stlad;

namespace {

// v = sin(3 x0) cos(2 x1) over one step; fails with a crash where x0 > fail_above.
class Wave final : public BlackBox {
 public:
  double fail_above = 1e9;
  std::size_t calls = 0;
  std::size_t length = 1;

  Trace evaluate(std::span<const double> x) override {
    ++calls;
    if (x[0] > fail_above) throw Error(ErrorCode::BlackBoxCrash, "simulated crash");
    const double v = std::sin(3 * x[0]) * std::cos(2 * (x.size() > 1 ? x[1] : 0.0));
    Trace::ChannelMap ch;
    ch["v"] = std::vector<double>(length, v);
    return Trace(std::move(ch), 0.1);
  }
  std::string describe() const override { return "wave"; }
};

const Formula& wave_formula() {
  static const Formula f = parse_formula("clamp(v, -1, 1) <= 0.2");
  return f;
}

Domain square() { return Domain::box(std::vector<double>{0, 0}, std::vector<double>{2, 1}); }

CampaignConfig small(Strategy s = Strategy::Mepe, std::size_t budget = 15) {
  CampaignConfig c;
  c.strategy = s;
  c.budget = budget;
  c.n_init = 10;
  c.pool_size = 256;
  c.seed = 42;
  c.fit_restarts = 2;
  return c;
}

Surrogate line_model(std::vector<double> xs) {
  TrainingSet t;
  t.X.resize((Eigen::Index)xs.size(), 1);
  t.y.resize((Eigen::Index)xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    t.X((Eigen::Index)i, 0) = xs[i];
    t.y[(Eigen::Index)i] = std::sin(5 * xs[i]) / 2;
  }
  return Surrogate::condition(t, Kernel::matern52(0.3, 0.2, 1), Normalization::identity(1));
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out((Eigen::Index)v.size());
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("alpha update examples") {
  // squared residual equal to the CV error
  CHECK(update_alpha(0.5, 0.0, 0.25) == 0.495);
  CHECK(update_alpha(0.3, 0.3, 0.1) == 0.0);
  CHECK(update_alpha(1.0, 0.0, 0.5) == 0.99);
  CHECK(update_alpha(1.0, 0.0, 0.1) == 0.99);
  CHECK(update_alpha(0.2, 0.1, 0.0) == 0.99);
  CHECK(update_alpha(0.2, 0.2, 0.0) == 0.0);
  // ratio 0.5 * 0.01 / 0.02 = 0.25
  CHECK(update_alpha(0.1, 0.0, 0.02) == doctest::Approx(0.99 * 0.25).epsilon(1e-15));
  // Unsquared residual: negative residuals give no exploitation weight.
  CHECK(update_alpha(0.5, 0.0, 0.25, AlphaRule::Unsquared) == 0.99);
  CHECK(update_alpha(0.0, 0.5, 0.25, AlphaRule::Unsquared) == 0.0);
  CHECK(update_alpha(0.1, 0.0, 0.25, AlphaRule::Unsquared) == doctest::Approx(0.99 * 0.2).epsilon(1e-15));
  CHECK_THROWS_AS(update_alpha(NAN, 0.0, 0.25), Error);
  CHECK(alpha_rule_from_string(to_string(AlphaRule::Unsquared)) == AlphaRule::Unsquared);
}

TEST_CASE("alpha stays in range for arbitrary inputs") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double y = rng.uniform(-1, 1), yh = rng.uniform(-2, 2), e = rng.below(10) ? rng.uniform(0, 1) : 0.0;
    for (auto rule : {AlphaRule::SquaredResidual, AlphaRule::Unsquared}) {
      const double a = update_alpha(y, yh, e, rule);
      REQUIRE(a >= 0.0);
      REQUIRE(a <= 0.99);
    }
  }
}

TEST_CASE("nearest-neighbour CV error") {
  AcquisitionState s(line_model({0, 1, 0.25, 0.875, 0.125, 0.75}), vec({1, 2, 3, 4, 5, 6}), 0.5);
  // 0.5 is 0.25 from points 2 and 5; the lower index wins.
  const double mid[] = {0.5};
  CHECK(s.cv_error_at(mid) == 3);
  AcquisitionState r(line_model({0, 1, 0.75, 0.875, 0.125, 0.25}), vec({1, 2, 3, 4, 5, 6}), 0.5);
  CHECK(r.cv_error_at(mid) == 3);
  for (int i = 0; i < 6; ++i) {
    const double x[] = {s.surrogate().data().X(i, 0)};
    CHECK(s.cv_error_at(x) == i + 1);
  }
  AcquisitionState two(line_model({0, 1}), vec({0.7, 0.2}), 0.5);
  const double a[] = {0.4}, b[] = {0.6};
  CHECK(two.cv_error_at(a) == 0.7);
  CHECK(two.cv_error_at(b) == 0.2);
}

TEST_CASE("expected prediction error") {
  auto model = line_model({0, 0.3, 0.55, 1});
  Rng rng(2);
  AcquisitionState zero(model, vec({0.04, 0.04, 0.04, 0.04}), 0.0);
  AcquisitionState half(model, vec({0.04, 0.04, 0.04, 0.04}), 0.5);
  AcquisitionState cap(model, vec({0.04, 0.01, 0.02, 0.03}), 0.99);
  Eigen::MatrixXd X(50, 1);
  for (int i = 0; i < 50; ++i) {
    const double x[] = {rng.uniform(-0.2, 1.2)};
    X(i, 0) = x[0];
    const double s2 = model.predict(x).variance;
    CHECK(zero.epe(x) == s2);
    CHECK(half.epe(x) == doctest::Approx(0.5 * 0.04 + 0.5 * s2).epsilon(1e-15));
  }
  auto many = cap.epe_many(X);
  for (int i = 0; i < 50; ++i) {
    const double x[] = {X(i, 0)};
    CHECK(many[i] == doctest::Approx(cap.epe(x)).epsilon(1e-14));
  }
  // At a training point s2 is (almost) zero.
  const double at[] = {0.3};
  CHECK(cap.epe(at) == doctest::Approx(0.99 * 0.01).epsilon(1e-6));
  CHECK(0.5 * 0.04 + 0.5 * 0.01 == doctest::Approx(0.025).epsilon(1e-15));
  // default CV errors are the closed-form LOO residuals
  AcquisitionState loo(model, 0.3);
  CHECK(loo.cv_errors() == model.loo_residuals());
  CHECK_THROWS_AS(loo.set_alpha(1.0), Error);
  CHECK_THROWS_AS(AcquisitionState(model, vec({0.1}), 0.5), Error);
}

TEST_CASE("mepe: alpha range, pool maximum and no repeats") {
  Wave bb;
  auto cfg = small(Strategy::Mepe, 25);
  std::size_t seen = 0;
  auto rec = run_campaign(wave_formula(), square(), bb, cfg,
                          [&](const AcquisitionState& st, const DesignMatrix& pool, const std::vector<bool>& excluded,
                              std::size_t chosen) {
                            ++seen;
                            REQUIRE(!excluded[chosen]);
                            const double a = st.alpha();
                            REQUIRE(a >= 0.0);
                            REQUIRE(a <= 0.99);
                            // recompute point by point through epe()
                            double best = -1;
                            std::size_t arg = 0;
                            for (std::size_t p = 0; p < pool.size(); ++p) {
                              if (excluded[p]) continue;
                              const double v = st.epe(pool.row(p));
                              if (v > best) best = v, arg = p;
                            }
                            REQUIRE(st.epe(pool.row(chosen)) >= best - 1e-12 * std::abs(best));
                            (void)arg;
                          });
  CHECK(seen == 25);
  REQUIRE(rec.history.size() == 35);
  std::set<std::vector<double>> pts;
  for (const auto& h : rec.history) {
    CHECK(pts.insert(h.x).second);
    CHECK(square().contains(h.x));
    if (h.iteration == 0) {
      CHECK(std::isnan(h.alpha));
    } else {
      CHECK(h.alpha >= 0.0);
      CHECK(h.alpha <= 0.99);
      CHECK(h.epe >= 0.0);
    }
  }
  CHECK(rec.history[10].alpha == 0.5);
  CHECK(rec.surrogate->data().size() == 35);
  CHECK(bb.calls == 35);
}

TEST_CASE("mepe: alpha follows the previous residual") {
  Wave bb;
  auto rec = run_campaign(wave_formula(), square(), bb, small(Strategy::Mepe, 6));
  // Recompute alpha for step i from step i-1's recorded prediction; the CV
  // error is bracketed by what alpha can be given the cap.
  for (std::size_t i = 11; i < rec.history.size(); ++i) {
    const auto& prev = rec.history[i - 1];
    const double r2 = (*prev.y - prev.predicted) * (*prev.y - prev.predicted);
    if (r2 == 0) CHECK(rec.history[i].alpha == 0.0);
    else CHECK(rec.history[i].alpha > 0.0);
  }
}

TEST_CASE("campaigns are deterministic and replayable") {
  for (auto s : {Strategy::Mepe, Strategy::Ud, Strategy::Random}) {
    Wave b1, b2;
    auto r1 = run_campaign(wave_formula(), square(), b1, small(s, 12));
    auto r2 = run_campaign(wave_formula(), square(), b2, small(s, 12));
    REQUIRE(r1.history.size() == r2.history.size());
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
      CHECK(r1.history[i].x == r2.history[i].x);
      CHECK(*r1.history[i].y == *r2.history[i].y);
      CHECK(std::isnan(r1.history[i].alpha) == std::isnan(r2.history[i].alpha));
      if (!std::isnan(r1.history[i].alpha)) CHECK(r1.history[i].alpha == r2.history[i].alpha);
    }
    CHECK(r1.surrogate->kernel() == r2.surrogate->kernel());
    Wave b3;
    for (const auto& h : r1.history) CHECK(agm_robustness(wave_formula(), b3.evaluate(h.x)).value == *h.y);
    auto other = small(s, 12);
    other.seed = 43;
    Wave b4;
    if (s != Strategy::Ud) CHECK(run_campaign(wave_formula(), square(), b4, other).points() != r1.points());
  }
}

TEST_CASE("snapshots equal shorter campaigns") {
  Wave b1, b2;
  auto cfg = small(Strategy::Mepe, 12);
  cfg.snapshots = {0, 5, 12};
  auto longer = run_campaign(wave_formula(), square(), b1, cfg);
  auto shorter = run_campaign(wave_formula(), square(), b2, small(Strategy::Mepe, 5));
  REQUIRE(longer.snapshots.size() == 3);
  CHECK(longer.snapshots.at(5).kernel() == shorter.surrogate->kernel());
  CHECK(longer.snapshots.at(5).data().X == shorter.surrogate->data().X);
  CHECK(longer.snapshots.at(12).kernel() == longer.surrogate->kernel());
  CHECK(longer.snapshots.at(0).data().size() == 10);
}

TEST_CASE("budget semantics") {
  Wave bb;
  auto zero = run_campaign(wave_formula(), square(), bb, small(Strategy::Mepe, 0));
  CHECK(zero.history.size() == 10);
  CHECK(zero.surrogate->data().size() == 10);
  auto ud = run_campaign(wave_formula(), square(), bb, small(Strategy::Ud, 13));
  CHECK(ud.history.size() == 13);
  auto D = uniform_design(square(), 13);
  for (std::size_t i = 0; i < 13; ++i) {
    CHECK(ud.history[i].x == D.row(i));
    CHECK(ud.history[i].iteration == i + 1);
  }
  auto rnd = run_campaign(wave_formula(), square(), bb, small(Strategy::Random, 9));
  CHECK(rnd.history.size() == 9);
  CHECK(rnd.surrogate->data().size() == 9);
  CHECK_THROWS_AS(run_campaign(wave_formula(), square(), bb, small(Strategy::Ud, 0)), Error);
  auto bad = small();
  bad.n_init = 1;
  CHECK_THROWS_AS(run_campaign(wave_formula(), square(), bb, bad), Error);
  bad = small(Strategy::Mepe, 300);
  CHECK_THROWS_AS(run_campaign(wave_formula(), square(), bb, bad), Error);
}

TEST_CASE("failed evaluations are recorded and skipped") {
  Wave bb;
  bb.fail_above = 1.5;
  auto rec = run_campaign(wave_formula(), square(), bb, small(Strategy::Mepe, 20));
  CHECK(rec.history.size() == 30);
  CHECK(rec.failures() > 0);
  std::size_t ok = 0;
  for (const auto& h : rec.history) {
    if (h.x[0] > 1.5) {
      CHECK_FALSE(h.y.has_value());
      CHECK(h.error.find("simulated crash") != std::string::npos);
    } else {
      CHECK(h.y.has_value());
      ++ok;
    }
  }
  CHECK(rec.surrogate->data().size() == ok);

  Wave dead;
  dead.fail_above = -1;
  try {
    run_campaign(wave_formula(), square(), dead, small(Strategy::Ud, 5));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BlackBoxCrash);
  }
}

TEST_CASE("monitor errors are not treated as black-box failures") {
  Wave bb;
  auto long_formula = parse_formula("alw[0,1] (clamp(v, -1, 1) <= 0.2)");
  CHECK_THROWS_AS(run_campaign(long_formula, square(), bb, small(Strategy::Ud, 5)), HorizonError);
  bb.length = 11;
  CHECK_NOTHROW(run_campaign(long_formula, square(), bb, small(Strategy::Ud, 5)));
  // unclamped signal scaled past the unit range
  auto wide = parse_formula("4 * v <= 0");
  CHECK_THROWS_AS(run_campaign(wide, square(), bb, small(Strategy::Ud, 5)), Error);
}

TEST_CASE("campaign record serialization") {
  Wave bb;
  bb.fail_above = 1.8;
  auto cfg = small(Strategy::Mepe, 8);
  cfg.snapshots = {4};
  auto rec = run_campaign(wave_formula(), square(), bb, cfg);
  auto back = CampaignRecord::from_json(nlohmann::json::parse(rec.to_json().dump()));
  REQUIRE(back.history.size() == rec.history.size());
  auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
  for (std::size_t i = 0; i < rec.history.size(); ++i) {
    const auto &a = back.history[i], &b = rec.history[i];
    CHECK(a.iteration == b.iteration);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(same(a.alpha, b.alpha));
    CHECK(same(a.epe, b.epe));
    CHECK(same(a.predicted, b.predicted));
    CHECK(a.wallclock_ms == b.wallclock_ms);
    CHECK(a.error == b.error);
  }
  CHECK(back.config.to_json() == rec.config.to_json());
  CHECK(back.formula_text == rec.formula_text);
  CHECK(back.surrogate->kernel() == rec.surrogate->kernel());
  CHECK(back.snapshots.at(4).data().X == rec.snapshots.at(4).data().X);
  CHECK(back.to_json() == rec.to_json());

  auto csv = rec.history_csv();
  CHECK(csv.rfind("iteration,x0,x1,y,alpha,epe,wallclock_ms\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == rec.history.size() + 1);
  CHECK_THROWS_AS(CampaignConfig::from_json(nlohmann::json::parse(R"({"strategy": "bayes"})")), Error);
}
