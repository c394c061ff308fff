#include <algorithm>
#include <cmath>
#include <fstream>

#include "stlad/design.hpp"
#include "stlad/error.hpp"

namespace stlad {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double affine(const std::vector<double>& coef, std::span<const double> prefix) {
  double v = coef[0];
  for (std::size_t i = 1; i < coef.size(); ++i) v += coef[i] * prefix[i - 1];
  return v;
}

// Range of an affine function over a box of earlier coordinates.
std::pair<double, double> affine_range(const std::vector<double>& coef, const Normalization& box) {
  double lo = coef[0], hi = coef[0];
  for (std::size_t i = 1; i < coef.size(); ++i) {
    double a = coef[i] * box.lower[i - 1], b = coef[i] * box.upper[i - 1];
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::Config, msg);
}

void validate_dimension(const DomainDimension& d, std::size_t j) {
  const std::string where = "dimension " + std::to_string(j) + " ('" + d.name + "'): ";
  std::visit(overloaded{
                 [&](const UniformCdf& c) {
                   require(std::isfinite(c.lo) && std::isfinite(c.hi) && c.lo < c.hi, where + "uniform needs lo < hi");
                 },
                 [&](const TriangularCdf& c) {
                   require(std::isfinite(c.lo) && std::isfinite(c.hi) && c.lo < c.hi && c.lo <= c.mode &&
                               c.mode <= c.hi,
                           where + "triangular needs lo <= mode <= hi and lo < hi");
                 },
                 [&](const RampCdf& c) {
                   require(std::isfinite(c.lo) && std::isfinite(c.hi) && c.lo < c.hi, where + "ramp needs lo < hi");
                   require(c.weight_lo >= 0.0 && c.weight_hi >= 0.0 && c.weight_lo + c.weight_hi > 0.0,
                           where + "ramp weights must be non-negative and not both zero");
                 },
                 [&](const LinearCutCdf& c) {
                   require(!c.lo.empty() && !c.hi.empty(), where + "linear_cut needs lo and hi coefficient lists");
                   require(c.lo.size() <= j + 1 && c.hi.size() <= j + 1,
                           where + "linear_cut may only depend on earlier coordinates");
                   for (double v : c.lo) require(std::isfinite(v), where + "non-finite coefficient");
                   for (double v : c.hi) require(std::isfinite(v), where + "non-finite coefficient");
                 },
             },
             d.cdf);
}

}  // namespace

Domain::Domain(std::vector<DomainDimension> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw Error(ErrorCode::Config, "domain needs at least one dimension");
  for (std::size_t j = 0; j < dims_.size(); ++j) validate_dimension(dims_[j], j);
}

Domain Domain::box(std::span<const double> lower, std::span<const double> upper) {
  if (lower.size() != upper.size()) throw Error(ErrorCode::InvalidArgument, "box bounds differ in dimension");
  std::vector<DomainDimension> dims;
  for (std::size_t i = 0; i < lower.size(); ++i)
    dims.push_back({"x" + std::to_string(i), "", UniformCdf{lower[i], upper[i]}});
  return Domain(std::move(dims));
}

std::vector<std::string> Domain::names() const {
  std::vector<std::string> out;
  for (const auto& d : dims_) out.push_back(d.name);
  return out;
}

std::pair<double, double> Domain::support(std::size_t j, std::span<const double> prefix) const {
  return std::visit(overloaded{
                        [](const UniformCdf& c) { return std::pair{c.lo, c.hi}; },
                        [](const TriangularCdf& c) { return std::pair{c.lo, c.hi}; },
                        [](const RampCdf& c) { return std::pair{c.lo, c.hi}; },
                        [&](const LinearCutCdf& c) { return std::pair{affine(c.lo, prefix), affine(c.hi, prefix)}; },
                    },
                    dims_.at(j).cdf);
}

bool Domain::contains(std::span<const double> x, double tol) const {
  if (x.size() != dim()) return false;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) return false;
    auto [lo, hi] = support(j, x.subspan(0, j));
    if (x[j] < lo - tol || x[j] > hi + tol) return false;
  }
  return true;
}

std::vector<double> Domain::inverse_rosenblatt(std::span<const double> u) const {
  if (u.size() != dim()) throw Error(ErrorCode::InvalidArgument, "unit point has the wrong dimension");
  std::vector<double> x(dim());
  for (std::size_t j = 0; j < dim(); ++j) {
    const double p = u[j];
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "unit coordinate outside [0, 1]");
    std::span<const double> prefix(x.data(), j);
    x[j] = std::visit(
        overloaded{
            [&](const UniformCdf& c) { return c.lo + p * (c.hi - c.lo); },
            [&](const TriangularCdf& c) {
              const double w = c.hi - c.lo;
              const double split = (c.mode - c.lo) / w;
              if (p <= split) return c.lo + std::sqrt(p * w * (c.mode - c.lo));
              return c.hi - std::sqrt((1.0 - p) * w * (c.hi - c.mode));
            },
            [&](const RampCdf& c) {
              // density a + b s on s in [0, 1]; solve (b/2) s^2 + a s = p (a + b/2)
              const double a = c.weight_lo, b = c.weight_hi - c.weight_lo;
              const double rhs = p * (a + 0.5 * b);
              const double den = a + std::sqrt(a * a + 2.0 * b * rhs);
              const double s = rhs == 0.0 ? 0.0 : std::clamp(2.0 * rhs / den, 0.0, 1.0);
              return c.lo + s * (c.hi - c.lo);
            },
            [&](const LinearCutCdf& c) {
              const double lo = affine(c.lo, prefix), hi = affine(c.hi, prefix);
              if (hi < lo - 1e-12)
                throw Error(ErrorCode::InvalidArgument,
                            "dimension '" + dims_[j].name + "' has an empty conditional support at this point");
              return lo + p * std::max(0.0, hi - lo);
            },
        },
        dims_[j].cdf);
  }
  return x;
}

Normalization Domain::bounds() const {
  Normalization box;
  for (std::size_t j = 0; j < dim(); ++j) {
    auto [lo, hi] = std::visit(overloaded{
                                   [](const UniformCdf& c) { return std::pair{c.lo, c.hi}; },
                                   [](const TriangularCdf& c) { return std::pair{c.lo, c.hi}; },
                                   [](const RampCdf& c) { return std::pair{c.lo, c.hi}; },
                                   [&](const LinearCutCdf& c) {
                                     return std::pair{affine_range(c.lo, box).first, affine_range(c.hi, box).second};
                                   },
                               },
                               dims_[j].cdf);
    box.lower.push_back(lo);
    box.upper.push_back(hi);
  }
  return box;
}

nlohmann::json Domain::to_json() const {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : dims_) {
    nlohmann::json j = {{"name", d.name}, {"unit", d.unit}};
    std::visit(overloaded{
                   [&](const UniformCdf& c) {
                     j["dist"] = "uniform";
                     j["lo"] = c.lo;
                     j["hi"] = c.hi;
                   },
                   [&](const TriangularCdf& c) {
                     j["dist"] = "triangular";
                     j["lo"] = c.lo;
                     j["mode"] = c.mode;
                     j["hi"] = c.hi;
                   },
                   [&](const RampCdf& c) {
                     j["dist"] = "ramp";
                     j["lo"] = c.lo;
                     j["hi"] = c.hi;
                     j["weight_lo"] = c.weight_lo;
                     j["weight_hi"] = c.weight_hi;
                   },
                   [&](const LinearCutCdf& c) {
                     j["dist"] = "linear_cut";
                     j["lo"] = c.lo;
                     j["hi"] = c.hi;
                   },
               },
               d.cdf);
    dims.push_back(j);
  }
  return {{"dimensions", dims}};
}

Domain Domain::from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("dimensions"))
      throw Error(ErrorCode::Config, "domain document needs a 'dimensions' list");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "dimensions" && it.key() != "name")
        throw Error(ErrorCode::Config, "unsupported domain key '" + it.key() +
                                           "'; only chains of conditional distributions are accepted");
    std::vector<DomainDimension> dims;
    for (const auto& d : j.at("dimensions")) {
      DomainDimension dim;
      dim.name = d.value("name", "x" + std::to_string(dims.size()));
      dim.unit = d.value("unit", "");
      const std::string dist = d.value("dist", "uniform");
      if (dist == "uniform") {
        dim.cdf = UniformCdf{d.at("lo").get<double>(), d.at("hi").get<double>()};
      } else if (dist == "triangular") {
        dim.cdf = TriangularCdf{d.at("lo").get<double>(), d.at("mode").get<double>(), d.at("hi").get<double>()};
      } else if (dist == "ramp") {
        dim.cdf = RampCdf{d.at("lo").get<double>(), d.at("hi").get<double>(), d.at("weight_lo").get<double>(),
                          d.at("weight_hi").get<double>()};
      } else if (dist == "linear_cut") {
        dim.cdf = LinearCutCdf{d.at("lo").get<std::vector<double>>(), d.at("hi").get<std::vector<double>>()};
      } else {
        throw Error(ErrorCode::Config, "unknown distribution '" + dist + "'");
      }
      dims.push_back(std::move(dim));
    }
    return Domain(std::move(dims));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("malformed domain document: ") + e.what());
  }
}

Domain Domain::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open domain file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, "domain file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace stlad
