// Independent reference implementations shared by the unit tests and the
// acceptance run.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "stlad/design.hpp"
#include "stlad/gp.hpp"
#include "stlad/rng.hpp"

namespace ref {

using namespace stlad;

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Kernel written out again from its closed form.
inline long double k_oracle(const Kernel& k, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  long double r2 = 0;
  if (k.type == KernelType::SquaredExponential) {
    for (Eigen::Index i = 0; i < a.size(); ++i) r2 += (long double)(a[i] - b[i]) * (a[i] - b[i]);
    return k.variance * std::exp(-r2 / (2.0L * k.lengthscales[0]));
  }
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    long double s = (long double)(a[i] - b[i]) / k.lengthscales[i];
    r2 += s * s;
  }
  long double r = std::sqrt(r2), s5 = std::sqrt(5.0L);
  return k.variance * (1 + s5 * r + 5.0L / 3 * r2) * std::exp(-s5 * r);
}

inline Eigen::VectorXd normalized(const Normalization& n, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = (x[i] - n.lower[i]) / (n.upper[i] - n.lower[i]);
  return out;
}

// mean = k*' K^-1 y, var = k** - k*' K^-1 k* with an explicit inverse.
inline Prediction oracle(const Surrogate& s, const Eigen::VectorXd& x) {
  const auto& d = s.data();
  const auto& k = s.kernel();
  const auto n = static_cast<Eigen::Index>(d.size());
  MatL K(n, n);
  VecL ks(n), y(n);
  const Eigen::VectorXd xs = normalized(s.normalization(), x);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = normalized(s.normalization(), d.X.row(i).transpose());
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = k_oracle(k, xi, normalized(s.normalization(), d.X.row(j).transpose()));
    K(i, i) += (long double)s.jitter() * k.variance;
    ks[i] = k_oracle(k, xi, xs);
    y[i] = d.y[i];
  }
  MatL Kinv = K.inverse();
  long double mean = ks.dot(Kinv * y);
  long double var = k_oracle(k, xs, xs) - ks.dot(Kinv * ks);
  return {(double)mean, (double)std::max(0.0L, var)};
}

struct Problem {
  TrainingSet data;
  Normalization norm;
  Kernel kernel;
};

inline Problem random_problem(Rng& rng, std::size_t n_max, std::size_t d_max) {
  const auto d = 1 + rng.below(d_max);
  const auto n = 2 + rng.below(n_max - 1);
  Problem p;
  p.norm.lower.resize(d);
  p.norm.upper.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    p.norm.lower[j] = rng.uniform(-5, 5);
    p.norm.upper[j] = p.norm.lower[j] + rng.uniform(0.1, 50);
  }
  p.data.X.resize(n, d);
  p.data.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) p.data.X(i, j) = rng.uniform(p.norm.lower[j], p.norm.upper[j]);
    p.data.y[i] = rng.uniform(-1, 1);
  }
  const double spacing = std::pow(static_cast<double>(n), -1.0 / static_cast<double>(d));
  if (rng.below(2)) {
    const double l = spacing * rng.uniform(0.2, 2);
    p.kernel = Kernel::squared_exponential(rng.uniform(0.05, 2), l * l);
  } else {
    std::vector<double> ls(d);
    for (auto& l : ls) l = spacing * rng.uniform(0.2, 2);
    p.kernel = Kernel::matern52(rng.uniform(0.05, 2), ls);
  }
  return p;
}

// Condition number of K + 1e-8 sigma^2 I. Near 1e8 the posterior mean moves
// by more than 1e-8 under last-bit changes of the kernel entries, so
// equivalence is only meaningful below that.
inline double gram_condition(const Problem& p) {
  const auto n = static_cast<Eigen::Index>(p.data.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      K(i, j) = (double)k_oracle(p.kernel, normalized(p.norm, p.data.X.row(i).transpose()),
                                 normalized(p.norm, p.data.X.row(j).transpose()));
  K.diagonal().array() += 1e-8 * p.kernel.variance;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
}

inline Problem well_posed_problem(Rng& rng, std::size_t n_max, std::size_t d_max) {
  for (;;) {
    auto p = random_problem(rng, n_max, d_max);
    if (gram_condition(p) <= 1e6) return p;
  }
}

// Drop point i, condition with the same kernel and jitter, predict at it.
inline double naive_loo(const Surrogate& s, Eigen::Index i) {
  const auto& d = s.data();
  TrainingSet rest;
  const auto n = d.X.rows();
  rest.X.resize(n - 1, d.X.cols());
  rest.y.resize(n - 1);
  for (Eigen::Index r = 0, w = 0; r < n; ++r) {
    if (r == i) continue;
    rest.X.row(w) = d.X.row(r);
    rest.y[w++] = d.y[r];
  }
  auto m = Surrogate::condition(rest, s.kernel(), s.normalization(), s.jitter());
  std::vector<double> x(d.X.cols());
  for (Eigen::Index j = 0; j < d.X.cols(); ++j) x[j] = d.X(i, j);
  const double r = d.y[i] - m.predict(x).mean;
  return r * r;
}

// Hickernell's centered L2 discrepancy, squared.
inline double cl2(const Eigen::MatrixXd& X) {
  const double n = static_cast<double>(X.rows());
  double a = 0, b = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double p = 1;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      double z = std::abs(X(i, j) - 0.5);
      p *= 1 + z / 2 - z * z / 2;
    }
    a += p;
    for (Eigen::Index k = 0; k < X.rows(); ++k) {
      double q = 1;
      for (Eigen::Index j = 0; j < X.cols(); ++j)
        q *= 1 + std::abs(X(i, j) - 0.5) / 2 + std::abs(X(k, j) - 0.5) / 2 - std::abs(X(i, j) - X(k, j)) / 2;
      b += q;
    }
  }
  return std::pow(13.0 / 12.0, (double)X.cols()) - 2 * a / n + b / (n * n);
}

inline Eigen::MatrixXd lattice(std::size_t n, std::size_t h) {
  Eigen::MatrixXd X(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = (i % n + 0.5) / n;
    X(i, 1) = ((i * h) % n + 0.5) / n;
  }
  return X;
}

// {x1 in [0, 1], x2 in [0, x1]}: x1 has density 2 x1, x2 | x1 is uniform.
inline Domain triangle() {
  return Domain({{"x1", "", RampCdf{0, 1, 0, 1}}, {"x2", "", LinearCutCdf{{0, 0}, {0, 1}}}});
}

// Pearson statistic over a 5 x 5 grid on [0,1]^2; expected counts from cell
// areas inside the region (cells with zero area are skipped).
inline double chi_square_p(const Eigen::MatrixXd& X, bool tri) {
  double counts[5][5] = {};
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int a = std::min(4, (int)(X(i, 0) * 5)), b = std::min(4, (int)(X(i, 1) * 5));
    counts[a][b] += 1;
  }
  const double n = (double)X.rows();
  double stat = 0;
  int cells = 0;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) {
      double share = tri ? (b < a ? 0.08 : b == a ? 0.04 : 0.0) : 0.04;
      if (share == 0) {
        if (counts[a][b] != 0) return 0.0;  // points outside the region
        continue;
      }
      double e = share * n;
      stat += (counts[a][b] - e) * (counts[a][b] - e) / e;
      ++cells;
    }
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace ref
