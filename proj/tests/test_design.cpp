#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "stlad/design.hpp"
#include "stlad/error.hpp"
#include "stlad/rng.hpp"
#include "oracles.hpp"

using namespace stlad;
using namespace ref;

namespace {

Domain unit_box(std::size_t d) {
  std::vector<double> lo(d, 0.0), hi(d, 1.0);
  return Domain::box(lo, hi);
}

Eigen::MatrixXd random_unit(Rng& rng, std::size_t n, std::size_t d) {
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.uniform();
  return X;
}

}  // namespace

TEST_CASE("discrepancy by hand") {
  Eigen::MatrixXd one(1, 1);
  one << 0.5;
  CHECK(centered_l2_discrepancy(one) == doctest::Approx(1.0 / 12).epsilon(1e-14));
  Eigen::MatrixXd two(2, 1);
  two << 0.25, 0.75;
  CHECK(centered_l2_discrepancy(two) == doctest::Approx(1.0 / 48).epsilon(1e-14));
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    auto X = random_unit(rng, 1 + rng.below(40), 1 + rng.below(4));
    CHECK(centered_l2_discrepancy(X) == doctest::Approx(cl2(X)).epsilon(1e-12));
  }
}

TEST_CASE("glp: one-dimensional design is the centered strata") {
  auto D = glp_unit_design(5, 1);
  REQUIRE(D.size() == 5);
  const double expect[] = {0.1, 0.3, 0.5, 0.7, 0.9};
  for (int i = 0; i < 5; ++i) CHECK(D.points(i, 0) == doctest::Approx(expect[i]).epsilon(1e-15));
  CHECK(D.provenance == Provenance::Glp);
}

TEST_CASE("glp: generator is the brute-force discrepancy minimum") {
  for (std::size_t n : {5, 7, 12, 13, 25, 26, 50, 64, 100}) {
    double best = 1e300;
    std::size_t best_h = 0;
    // Exact ties (h and its inverse mod N) go to the larger h.
    for (std::size_t h = n - 1; h > 1; --h) {
      if (std::gcd(h, n) != 1) continue;
      const double s = cl2(lattice(n, h));
      if (s < best - 1e-12) best = s, best_h = h;
    }
    INFO("N = ", n);
    auto g = glp_generator(n, 2);
    REQUIRE(g.size() == 2);
    CHECK(g[0] == 1);
    CHECK(g[1] == best_h);
    auto D = glp_unit_design(n, 2);
    CHECK(centered_l2_discrepancy(D.points) == doctest::Approx(best).epsilon(1e-12));
  }
  // N = 5: 2 * 3 = 1 mod 5, so both give the same points transposed.
  CHECK(cl2(lattice(5, 2)) == doctest::Approx(cl2(lattice(5, 3))).epsilon(1e-14));
  CHECK(glp_generator(5, 2)[1] == 3);
  CHECK(glp_generator(25, 2)[1] == 16);
  CHECK(glp_generator(26, 2)[1] == 19);
}

TEST_CASE("glp: staggering differs between N = 25 and N = 26") {
  CHECK(glp_generator(25, 2) != glp_generator(26, 2));
}

TEST_CASE("glp: latin property") {
  for (std::size_t n : {7, 10, 25, 26, 50, 101}) {
    for (std::size_t d = 1; d <= 4; ++d) {
      auto D = glp_unit_design(n, d);
      for (std::size_t j = 0; j < d; ++j) {
        std::set<long> strata;
        for (std::size_t i = 0; i < n; ++i) strata.insert(std::lround(D.points(i, j) * n - 0.5));
        CHECK(strata.size() == n);
        CHECK(*strata.begin() == 0);
        CHECK(*strata.rbegin() == (long)n - 1);
      }
      // the generator entries are distinct and coprime to N
      auto g = glp_generator(n, d);
      std::set<std::size_t> uniq(g.begin(), g.end());
      CHECK(uniq.size() == d);
      for (auto h : g) CHECK(std::gcd(h, n) == 1);
    }
  }
}

TEST_CASE("glp: beats random designs") {
  Rng rng(2718);
  for (std::size_t n : {25, 26, 50, 100}) {
    std::vector<double> rand;
    for (int r = 0; r < 200; ++r) rand.push_back(centered_l2_discrepancy(random_unit(rng, n, 2)));
    std::sort(rand.begin(), rand.end());
    const double p5 = rand[9];
    INFO("N = ", n);
    CHECK(centered_l2_discrepancy(glp_unit_design(n, 2).points) < p5);
  }
  double mean = 0;
  for (int r = 0; r < 100; ++r) mean += centered_l2_discrepancy(random_unit(rng, 50, 2)) / 100;
  CHECK(centered_l2_discrepancy(glp_unit_design(50, 2).points) < mean);
}

TEST_CASE("glp: errors and determinism") {
  CHECK_THROWS_AS(glp_unit_design(1, 2), Error);
  try {
    glp_unit_design(4, 3);  // only 1 and 3 are coprime to 4
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
  auto a = glp_unit_design(37, 3), b = glp_unit_design(37, 3);
  CHECK(a.points == b.points);
}

TEST_CASE("inverse rosenblatt examples") {
  auto d = Domain({{"x", "", UniformCdf{2, 4}}});
  const double half[] = {0.5};
  CHECK(d.inverse_rosenblatt(half)[0] == 3.0);

  const double u[] = {0.25, 0.5};
  auto x = triangle().inverse_rosenblatt(u);
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(0.25).epsilon(1e-14));

  auto t = Domain({{"m", "", TriangularCdf{0, 0.5, 1}}});
  const double q[] = {0.125}, mid[] = {0.5}, hi[] = {0.875};
  CHECK(t.inverse_rosenblatt(q)[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(t.inverse_rosenblatt(mid)[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(t.inverse_rosenblatt(hi)[0] == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("inverse rosenblatt is monotone and lands inside the domain") {
  Rng rng(6);
  auto tri = triangle();
  auto trap = Domain({{"a", "", RampCdf{-1, 2, 0.5, 2.0}}, {"b", "", LinearCutCdf{{0, 0.5}, {3, 0}}}});
  for (const Domain* dom : {&tri, &trap}) {
    for (int i = 0; i < 500; ++i) {
      double u[2] = {rng.uniform(), rng.uniform()};
      auto x = dom->inverse_rosenblatt(u);
      REQUIRE(dom->contains(x));
      double v[2] = {u[0], std::min(0.999999, u[1] + 0.01)};
      REQUIRE(dom->inverse_rosenblatt(v)[1] >= x[1]);
      double w[2] = {std::min(0.999999, u[0] + 0.01), u[1]};
      REQUIRE(dom->inverse_rosenblatt(w)[0] >= x[0]);
    }
  }
}

TEST_CASE("pushforward is uniform over box and triangle") {
  // Fibonacci lattice: 10946 points with generator (1, 6765).
  const std::size_t gen[] = {1, 6765};
  auto unit = lattice_points(10946, gen);
  auto box = map_to_domain(unit_box(2), unit);
  auto tri = map_to_domain(triangle(), unit);
  CHECK(chi_square_p(box.points, false) > 0.01);
  CHECK(chi_square_p(tri.points, true) > 0.01);
  for (std::size_t i = 0; i < tri.size(); i += 97) CHECK(triangle().contains(tri.row(i)));
}

TEST_CASE("candidate pool") {
  auto dom = Domain::box(std::vector<double>{0, -1}, std::vector<double>{2, 1});
  auto one = candidate_pool(dom, 1, 5);
  CHECK(one.points(0, 0) == 1.0);
  CHECK(one.points(0, 1) == 0.0);
  auto a = candidate_pool(dom, 512, 1), b = candidate_pool(dom, 512, 1), c = candidate_pool(dom, 512, 2);
  CHECK(a.points == b.points);
  CHECK(a.points != c.points);
  CHECK(a.provenance == Provenance::CandidatePool);
  for (std::size_t j = 0; j < 2; ++j) {
    std::set<long> strata;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(dom.contains(a.row(i)));
      strata.insert(std::lround((a.points(i, j) - (j ? -1 : 0)) / 2 * 512 - 0.5));
    }
    CHECK(strata.size() == 512);
  }
}

TEST_CASE("uniform design") {
  auto dom = Domain::box(std::vector<double>{-3, 10}, std::vector<double>{3, 20});
  auto D = uniform_design(dom, 10);
  CHECK(D.size() == 10);
  for (std::size_t i = 0; i < D.size(); ++i) CHECK(dom.contains(D.row(i)));
  CHECK(uniform_design(dom, 10).points == D.points);

  auto ud = centered_l2_discrepancy(uniform_design(unit_box(2), 40).points);
  std::vector<double> rand;
  for (std::uint64_t s = 0; s < 30; ++s) rand.push_back(centered_l2_discrepancy(random_design(unit_box(2), 40, s).points));
  std::nth_element(rand.begin(), rand.begin() + 15, rand.end());
  CHECK(ud < rand[15]);
}

TEST_CASE("grid design") {
  const std::size_t res[] = {2, 2};
  auto G = grid_design(unit_box(2), res);
  REQUIRE(G.size() == 4);
  std::set<std::pair<double, double>> corners;
  for (std::size_t i = 0; i < 4; ++i) corners.insert({G.points(i, 0), G.points(i, 1)});
  CHECK(corners == std::set<std::pair<double, double>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
}

TEST_CASE("domain documents") {
  auto j = nlohmann::json::parse(R"({"dimensions": [{"name": "mass", "unit": "g", "dist": "uniform", "lo": 20, "hi": 70}]})");
  auto d = Domain::from_json(j);
  CHECK(d.dim() == 1);
  CHECK(d.names() == std::vector<std::string>{"mass"});
  CHECK(Domain::from_json(d.to_json()).to_json() == d.to_json());
  auto t = triangle();
  CHECK(Domain::from_json(t.to_json()).to_json() == t.to_json());
  auto code = [](const char* text) {
    try {
      Domain::from_json(nlohmann::json::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code(R"({"dimensions": [{"dist": "gamma", "lo": 0, "hi": 1}]})") == ErrorCode::Config);
  CHECK(code(R"({"dimensions": [], "constraints": ["x + y < 1"]})") == ErrorCode::Config);
  CHECK(code(R"({"dimensions": [{"dist": "uniform", "lo": 0}]})") == ErrorCode::Config);
}
