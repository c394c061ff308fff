#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

#include "stlad/design.hpp"
#include "stlad/error.hpp"
#include "stlad/rng.hpp"

namespace stlad {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Glp: return "glp";
    case Provenance::Random: return "random";
    case Provenance::CandidatePool: return "candidate-pool";
    case Provenance::Grid: return "grid";
  }
  return "unknown";
}

std::vector<double> DesignMatrix::row(std::size_t i) const {
  std::vector<double> r(dim());
  for (std::size_t c = 0; c < dim(); ++c) r[c] = points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  return r;
}

double centered_l2_discrepancy(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "discrepancy of an empty design");
  double single = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      double z = std::abs(X(i, j) - 0.5);
      p *= 1.0 + 0.5 * z - 0.5 * z * z;
    }
    single += p;
  }
  double pair = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) {
      double p = 1.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        double zi = std::abs(X(i, j) - 0.5), zk = std::abs(X(k, j) - 0.5);
        p *= 1.0 + 0.5 * zi + 0.5 * zk - 0.5 * std::abs(X(i, j) - X(k, j));
      }
      pair += p;
    }
  const double nn = static_cast<double>(n);
  return std::pow(13.0 / 12.0, static_cast<double>(d)) - 2.0 / nn * single + pair / (nn * nn);
}

namespace {

// Search for the generating vector. All lattice coordinates take values in
// {(k + 0.5) / N}, so the per-coordinate discrepancy factors are tabulated once
// and a candidate column is scored by permuting indices.
std::vector<std::size_t> search_generator(std::size_t n, std::size_t d) {
  std::vector<std::size_t> coprime;
  for (std::size_t h = 1; h < n; ++h)
    if (std::gcd(h, n) == 1) coprime.push_back(h);
  if (coprime.size() < d)
    throw Error(ErrorCode::InvalidArgument, "only " + std::to_string(coprime.size()) + " integers below " +
                                                std::to_string(n) + " are coprime to it; a " +
                                                std::to_string(d) + "-dimensional lattice needs " +
                                                std::to_string(d) + " (choose a different N)");
  std::vector<std::size_t> gen{1};
  if (d == 1) return gen;

  const double nn = static_cast<double>(n);
  std::vector<double> single_factor(n);
  std::vector<double> pair_factor(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    double xa = (static_cast<double>(a) + 0.5) / nn, za = std::abs(xa - 0.5);
    single_factor[a] = 1.0 + 0.5 * za - 0.5 * za * za;
    for (std::size_t b = 0; b < n; ++b) {
      double xb = (static_cast<double>(b) + 0.5) / nn, zb = std::abs(xb - 0.5);
      pair_factor[a * n + b] = 1.0 + 0.5 * za + 0.5 * zb - 0.5 * std::abs(xa - xb);
    }
  }
  // Running products over the coordinates chosen so far (first is h = 1).
  std::vector<double> single = single_factor;
  std::vector<double> pair = pair_factor;
  std::vector<std::size_t> idx(n);

  for (std::size_t j = 1; j < d; ++j) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_h = 0;
    // Scan downwards so exact ties go to the larger generator.
    for (auto it = coprime.rbegin(); it != coprime.rend(); ++it) {
      const std::size_t h = *it;
      if (std::find(gen.begin(), gen.end(), h) != gen.end()) continue;
      for (std::size_t i = 0; i < n; ++i) idx[i] = (i * h) % n;
      double s = 0.0, p = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += single[i] * single_factor[idx[i]];
        const double* row = &pair[i * n];
        const double* frow = &pair_factor[idx[i] * n];
        for (std::size_t k = 0; k < n; ++k) p += row[k] * frow[idx[k]];
      }
      double score = -2.0 / nn * s + p / (nn * nn);
      // In 2-D, h and its inverse mod N give the same points with the axes
      // swapped; their scores differ only by round-off.
      if (best_h == 0 || score < best - 1e-12 * std::abs(best)) {
        best = score;
        best_h = h;
      }
    }
    gen.push_back(best_h);
    for (std::size_t i = 0; i < n; ++i) idx[i] = (i * best_h) % n;
    for (std::size_t i = 0; i < n; ++i) {
      single[i] *= single_factor[idx[i]];
      for (std::size_t k = 0; k < n; ++k) pair[i * n + k] *= pair_factor[idx[i] * n + idx[k]];
    }
  }
  return gen;
}

}  // namespace

std::vector<std::size_t> glp_generator(std::size_t n, std::size_t d) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "a lattice design needs N >= 2");
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "a lattice design needs d >= 1");
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> cache;
  {
    std::lock_guard lock(mu);
    auto it = cache.find({n, d});
    if (it != cache.end()) return it->second;
  }
  auto gen = search_generator(n, d);
  std::lock_guard lock(mu);
  cache.emplace(std::pair{n, d}, gen);
  return gen;
}

DesignMatrix lattice_points(std::size_t n, std::span<const std::size_t> generator) {
  DesignMatrix out{Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(generator.size())),
                   Provenance::Glp};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < generator.size(); ++j)
      out.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (static_cast<double>((i * generator[j]) % n) + 0.5) / static_cast<double>(n);
  return out;
}

DesignMatrix glp_unit_design(std::size_t n, std::size_t d) { return lattice_points(n, glp_generator(n, d)); }

DesignMatrix map_to_domain(const Domain& dom, const DesignMatrix& unit) {
  if (unit.dim() != dom.dim()) throw Error(ErrorCode::InvalidArgument, "design and domain differ in dimension");
  DesignMatrix out{Eigen::MatrixXd(unit.points.rows(), unit.points.cols()), unit.provenance};
  for (std::size_t i = 0; i < unit.size(); ++i) {
    auto x = dom.inverse_rosenblatt(unit.row(i));
    for (std::size_t j = 0; j < x.size(); ++j)
      out.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[j];
  }
  return out;
}

DesignMatrix uniform_design(const Domain& dom, std::size_t n) {
  return map_to_domain(dom, glp_unit_design(n, dom.dim()));
}

DesignMatrix candidate_pool(const Domain& dom, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "candidate pool needs at least one point");
  const std::size_t d = dom.dim();
  Rng rng(seed);
  DesignMatrix unit{Eigen::MatrixXd(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d)),
                    Provenance::CandidatePool};
  std::vector<std::size_t> perm(m);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = m; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i = 0; i < m; ++i)
      unit.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (static_cast<double>(perm[i]) + 0.5) / static_cast<double>(m);
  }
  return map_to_domain(dom, unit);
}

DesignMatrix random_design(const Domain& dom, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  DesignMatrix unit{Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dom.dim())),
                    Provenance::Random};
  for (Eigen::Index i = 0; i < unit.points.rows(); ++i)
    for (Eigen::Index j = 0; j < unit.points.cols(); ++j) unit.points(i, j) = rng.uniform();
  return map_to_domain(dom, unit);
}

DesignMatrix grid_design(const Domain& dom, std::span<const std::size_t> resolution) {
  if (resolution.size() != dom.dim()) throw Error(ErrorCode::InvalidArgument, "one resolution per dimension required");
  std::size_t total = 1;
  for (std::size_t r : resolution) {
    if (r < 1) throw Error(ErrorCode::InvalidArgument, "grid resolution must be at least 1");
    total *= r;
  }
  const std::size_t d = dom.dim();
  DesignMatrix unit{Eigen::MatrixXd(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(d)), Provenance::Grid};
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t row = 0; row < total; ++row) {
    for (std::size_t j = 0; j < d; ++j) {
      double u = resolution[j] == 1 ? 0.5 : static_cast<double>(idx[j]) / static_cast<double>(resolution[j] - 1);
      unit.points(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = u;
    }
    // Last coordinate varies fastest.
    for (std::size_t j = d; j-- > 0;) {
      if (++idx[j] < resolution[j]) break;
      idx[j] = 0;
    }
  }
  return map_to_domain(dom, unit);
}

}  // namespace stlad
