#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "stlad/gp.hpp"

namespace stlad {

/// x ~ U[lo, hi]
struct UniformCdf {
  double lo, hi;
};

/// Triangular distribution on [lo, hi] with peak at mode.
struct TriangularCdf {
  double lo, mode, hi;
};

/// Density on [lo, hi] varying linearly from weight_lo to weight_hi. Paired
/// with a LinearCutCdf on the next dimension it gives the marginal of a
/// region that is uniform over a trapezoid or triangle.
struct RampCdf {
  double lo, hi, weight_lo, weight_hi;
};

/// Conditional uniform between affine functions of earlier coordinates:
/// lower = lo[0] + sum_i lo[i+1] * x_i, likewise for upper.
struct LinearCutCdf {
  std::vector<double> lo, hi;
};

using ConditionalCdf = std::variant<UniformCdf, TriangularCdf, RampCdf, LinearCutCdf>;

struct DomainDimension {
  std::string name;
  std::string unit;
  ConditionalCdf cdf;
};

/// Environment space described by a chain of conditional CDFs
/// F1, F2|1, ..., Fd|1..d-1.
class Domain {
 public:
  explicit Domain(std::vector<DomainDimension> dims);

  static Domain box(std::span<const double> lower, std::span<const double> upper);
  static Domain from_json(const nlohmann::json& j);
  static Domain load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::size_t dim() const { return dims_.size(); }
  const std::vector<DomainDimension>& dimensions() const { return dims_; }
  std::vector<std::string> names() const;

  /// Support [lo, hi] of coordinate j given the earlier coordinates.
  std::pair<double, double> support(std::size_t j, std::span<const double> prefix) const;
  bool contains(std::span<const double> x, double tol = 1e-9) const;

  /// Inverse Rosenblatt transform of a point in [0, 1]^d.
  std::vector<double> inverse_rosenblatt(std::span<const double> u) const;

  /// Axis-aligned bounding box, used for input normalization.
  Normalization bounds() const;

 private:
  std::vector<DomainDimension> dims_;
};

enum class Provenance { Glp, Random, CandidatePool, Grid };

const char* to_string(Provenance p);

/// N x d matrix of points, one per row.
struct DesignMatrix {
  Eigen::MatrixXd points;
  Provenance provenance;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
  std::vector<double> row(std::size_t i) const;
};

/// Centered L2 discrepancy (squared) of points in [0, 1]^d.
double centered_l2_discrepancy(const Eigen::MatrixXd& points);

/// Generating vector (1, h2, ..., hd) of distinct integers coprime to N
/// chosen to minimize centered L2 discrepancy.
std::vector<std::size_t> glp_generator(std::size_t n, std::size_t d);

/// Lattice points ((i * h_j mod N) + 0.5) / N for a given generating vector.
DesignMatrix lattice_points(std::size_t n, std::span<const std::size_t> generator);

DesignMatrix glp_unit_design(std::size_t n, std::size_t d);

DesignMatrix map_to_domain(const Domain& dom, const DesignMatrix& unit);

/// glp_unit_design mapped through the inverse Rosenblatt transform.
DesignMatrix uniform_design(const Domain& dom, std::size_t n);

/// Stratified candidate set: every coordinate visits each of M centered
/// strata once, with strata paired across coordinates by seeded permutations.
DesignMatrix candidate_pool(const Domain& dom, std::size_t m, std::uint64_t seed);

/// Independent uniform draws in the unit cube mapped into the domain.
DesignMatrix random_design(const Domain& dom, std::size_t n, std::uint64_t seed);

/// Regular grid in the unit cube (endpoints included) mapped into the domain.
DesignMatrix grid_design(const Domain& dom, std::span<const std::size_t> resolution);

}  // namespace stlad
