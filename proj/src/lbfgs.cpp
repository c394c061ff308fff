#include "lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace stlad::detail {
namespace {

constexpr std::size_t kMemory = 6;
constexpr double kArmijo = 1e-4;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void project(std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

// Gradient with components that push against an active bound zeroed.
std::vector<double> projected_gradient(const std::vector<double>& x, const std::vector<double>& g,
                                       const std::vector<double>& lo, const std::vector<double>& hi) {
  std::vector<double> pg = g;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if ((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)) pg[i] = 0.0;
  }
  return pg;
}

}  // namespace

MinimizeResult minimize_box(const Objective& f, std::vector<double> x, const std::vector<double>& lower,
                            const std::vector<double>& upper, std::size_t max_iterations) {
  const std::size_t n = x.size();
  project(x, lower, upper);
  std::vector<double> g(n);
  double fx = f(x, g);
  std::size_t evals = 1;
  if (!std::isfinite(fx)) return {x, fx, evals};

  std::deque<std::vector<double>> S, Y;
  std::vector<double> xn(n), gn(n), d(n);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    auto pg = projected_gradient(x, g, lower, upper);
    double pg_norm = std::sqrt(dot(pg, pg));
    if (pg_norm < 1e-6) break;

    // Two-loop recursion on the projected gradient.
    d = pg;
    std::vector<double> alphas(S.size());
    for (std::size_t i = S.size(); i-- > 0;) {
      alphas[i] = dot(S[i], d) / dot(Y[i], S[i]);
      for (std::size_t k = 0; k < n; ++k) d[k] -= alphas[i] * Y[i][k];
    }
    double gamma = S.empty() ? 1.0 / std::max(1.0, pg_norm) : dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
    for (double& v : d) v *= gamma;
    for (std::size_t i = 0; i < S.size(); ++i) {
      double beta = dot(Y[i], d) / dot(Y[i], S[i]);
      for (std::size_t k = 0; k < n; ++k) d[k] += S[i][k] * (alphas[i] - beta);
    }
    for (double& v : d) v = -v;
    if (dot(d, pg) >= 0.0) {
      S.clear();
      Y.clear();
      for (std::size_t k = 0; k < n; ++k) d[k] = -pg[k] / std::max(1.0, pg_norm);
    }

    double step = 1.0;
    double fn = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      for (std::size_t k = 0; k < n; ++k) xn[k] = x[k] + step * d[k];
      project(xn, lower, upper);
      fn = f(xn, gn);
      ++evals;
      double decrease = 0.0;
      for (std::size_t k = 0; k < n; ++k) decrease += g[k] * (xn[k] - x[k]);
      if (std::isfinite(fn) && fn <= fx + kArmijo * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> s(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = xn[k] - x[k];
      y[k] = gn[k] - g[k];
    }
    double sy = dot(s, y);
    if (sy > 1e-12) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      if (S.size() > kMemory) {
        S.pop_front();
        Y.pop_front();
      }
    }
    double change = fx - fn;
    x = xn;
    g = gn;
    fx = fn;
    if (change < 1e-10 * (1.0 + std::abs(fx))) break;
  }
  return {x, fx, evals};
}

}  // namespace stlad::detail
