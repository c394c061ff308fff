#include <cmath>

#include "stlad/error.hpp"
#include "stlad/gp.hpp"

namespace stlad {

namespace {
constexpr double kSqrt5 = 2.23606797749978969640;
}

const char* to_string(KernelType type) {
  return type == KernelType::SquaredExponential ? "squared_exponential" : "matern52";
}

KernelType kernel_type_from_string(const std::string& name) {
  if (name == "squared_exponential" || name == "se") return KernelType::SquaredExponential;
  if (name == "matern52" || name == "matern") return KernelType::Matern52;
  throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + name + "'");
}

Kernel Kernel::squared_exponential(double variance, double lengthscale) {
  if (!(variance > 0.0) || !(lengthscale > 0.0))
    throw Error(ErrorCode::InvalidArgument, "kernel variance and length-scale must be positive");
  return Kernel{KernelType::SquaredExponential, variance, {lengthscale}};
}

Kernel Kernel::matern52(double variance, std::vector<double> lengthscales) {
  if (!(variance > 0.0)) throw Error(ErrorCode::InvalidArgument, "kernel variance must be positive");
  if (lengthscales.empty()) throw Error(ErrorCode::InvalidArgument, "Matern kernel needs length-scales");
  for (double l : lengthscales)
    if (!(l > 0.0)) throw Error(ErrorCode::InvalidArgument, "length-scales must be positive");
  return Kernel{KernelType::Matern52, variance, std::move(lengthscales)};
}

Kernel Kernel::matern52(double variance, double lengthscale, std::size_t dim) {
  return matern52(variance, std::vector<double>(dim, lengthscale));
}

void Kernel::check_dim(std::size_t dim) const {
  if (type == KernelType::Matern52 && lengthscales.size() != dim)
    throw Error(ErrorCode::InvalidArgument, "kernel has " + std::to_string(lengthscales.size()) +
                                                " length-scales for " + std::to_string(dim) +
                                                "-dimensional inputs");
}

double Kernel::operator()(std::span<const double> x, std::span<const double> y) const {
  if (x.size() != y.size())
    throw Error(ErrorCode::InvalidArgument, "kernel inputs have different dimensions");
  if (type == KernelType::SquaredExponential) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - y[i]) * (x[i] - y[i]);
    return variance * std::exp(-r2 / (2.0 * lengthscales[0]));
  }
  check_dim(x.size());
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = (x[i] - y[i]) / lengthscales[i];
    r2 += s * s;
  }
  double r = std::sqrt(r2);
  return variance * (1.0 + kSqrt5 * r + 5.0 / 3.0 * r2) * std::exp(-kSqrt5 * r);
}

double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> y) { return k(x, y); }

std::vector<double> Kernel::log_params() const {
  std::vector<double> p{std::log(variance)};
  for (double l : lengthscales) p.push_back(std::log(l));
  return p;
}

Kernel Kernel::with_log_params(std::span<const double> p) const {
  if (p.size() != num_params()) throw Error(ErrorCode::InvalidArgument, "wrong number of kernel parameters");
  Kernel k = *this;
  k.variance = std::exp(p[0]);
  for (std::size_t i = 0; i < lengthscales.size(); ++i) k.lengthscales[i] = std::exp(p[i + 1]);
  return k;
}

nlohmann::json Kernel::to_json() const {
  return {{"type", to_string(type)}, {"variance", variance}, {"lengthscales", lengthscales}};
}

Kernel Kernel::from_json(const nlohmann::json& j) {
  auto type = kernel_type_from_string(j.at("type").get<std::string>());
  auto ls = j.at("lengthscales").get<std::vector<double>>();
  double var = j.at("variance").get<double>();
  if (type == KernelType::SquaredExponential) {
    if (ls.size() != 1) throw Error(ErrorCode::InvalidArgument, "squared exponential kernel takes one length-scale");
    return squared_exponential(var, ls[0]);
  }
  return matern52(var, std::move(ls));
}

Eigen::MatrixXd gram_matrix(const Kernel& k, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.cols() != B.cols()) throw Error(ErrorCode::InvalidArgument, "gram matrix inputs differ in dimension");
  k.check_dim(static_cast<std::size_t>(A.cols()));
  const Eigen::Index n = A.rows(), m = B.rows(), d = A.cols();
  Eigen::MatrixXd G(n, m);
  if (k.type == KernelType::SquaredExponential) {
    const double inv = 1.0 / (2.0 * k.lengthscales[0]);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i) {
        double r2 = (A.row(i) - B.row(j)).squaredNorm();
        G(i, j) = k.variance * std::exp(-r2 * inv);
      }
    return G;
  }
  Eigen::VectorXd inv_ls(d);
  for (Eigen::Index c = 0; c < d; ++c) inv_ls[c] = 1.0 / k.lengthscales[static_cast<std::size_t>(c)];
  Eigen::MatrixXd As = A * inv_ls.asDiagonal();
  Eigen::MatrixXd Bs = B * inv_ls.asDiagonal();
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      double r2 = (As.row(i) - Bs.row(j)).squaredNorm();
      double r = std::sqrt(r2);
      G(i, j) = k.variance * (1.0 + kSqrt5 * r + 5.0 / 3.0 * r2) * std::exp(-kSqrt5 * r);
    }
  return G;
}

}  // namespace stlad
