#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <json.hpp>

namespace stlad {

enum class KernelType { SquaredExponential, Matern52 };

const char* to_string(KernelType type);
KernelType kernel_type_from_string(const std::string& name);

/// Stationary covariance function. Squared exponential is isotropic with one
/// length-scale and uses (x - x')^2 / (2 l) in the exponent; Matern 5/2 has
/// one length-scale per input dimension.
struct Kernel {
  KernelType type = KernelType::Matern52;
  double variance = 1.0;
  std::vector<double> lengthscales{1.0};

  static Kernel squared_exponential(double variance, double lengthscale);
  static Kernel matern52(double variance, std::vector<double> lengthscales);
  /// Matern 5/2 with every length-scale equal.
  static Kernel matern52(double variance, double lengthscale, std::size_t dim);

  double operator()(std::span<const double> x, std::span<const double> y) const;

  /// log(variance) followed by log(length-scales).
  std::vector<double> log_params() const;
  Kernel with_log_params(std::span<const double> p) const;
  std::size_t num_params() const { return 1 + lengthscales.size(); }

  /// Throws unless the kernel can act on `dim`-dimensional inputs.
  void check_dim(std::size_t dim) const;

  nlohmann::json to_json() const;
  static Kernel from_json(const nlohmann::json& j);

  bool operator==(const Kernel&) const = default;
};

double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> y);

/// Affine map from domain coordinates onto [0, 1]^d applied before the
/// kernel sees any point.
struct Normalization {
  std::vector<double> lower;
  std::vector<double> upper;

  static Normalization identity(std::size_t dim);
  std::size_t dim() const { return lower.size(); }
  Eigen::VectorXd apply(std::span<const double> x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& X) const;
};

/// Training inputs (one row per point) and observed values.
struct TrainingSet {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
  /// Shapes agree, values finite, no two rows within `tol` (max-norm) after normalization.
  void validate(const Normalization& norm, double tol = 1e-12) const;
};

struct FitOptions {
  std::size_t restarts = 3;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 60;
};

struct Prediction {
  double mean;
  double variance;
};

/// Log marginal likelihood log N(y; 0, K + jitter) and its gradient with
/// respect to Kernel::log_params(). Inputs must already be normalized.
struct LikelihoodEval {
  double value;
  std::vector<double> gradient;
  double jitter;
};
LikelihoodEval log_marginal_likelihood(const Kernel& kernel, const Eigen::MatrixXd& Xn,
                                       const Eigen::VectorXd& y);

/// Zero-mean noise-free GP regression model with a cached Cholesky factor.
class Surrogate {
 public:
  /// Maximizes the marginal likelihood from `initial` plus restarts-1 random
  /// log-uniform starting points.
  static Surrogate fit(const TrainingSet& data, const Kernel& initial, const FitOptions& options,
                       const Normalization& norm);
  static Surrogate fit(const TrainingSet& data, const Kernel& initial, const FitOptions& options);

  /// Conditions on the data with fixed hyperparameters. A jitter of zero or
  /// less picks the smallest one that factorizes.
  static Surrogate condition(const TrainingSet& data, const Kernel& kernel, const Normalization& norm,
                             double jitter = 0.0);

  Prediction predict(std::span<const double> x) const;
  /// Row-wise prediction for many points at once.
  void predict_many(const Eigen::MatrixXd& X, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const;

  /// Squared leave-one-out residuals with hyperparameters held fixed.
  Eigen::VectorXd loo_residuals() const;

  const Kernel& kernel() const { return kernel_; }
  const TrainingSet& data() const { return data_; }
  const Normalization& normalization() const { return norm_; }
  /// Relative diagonal jitter: the Gram diagonal gets jitter * variance added.
  double jitter() const { return jitter_; }
  double log_likelihood() const { return log_likelihood_; }

  nlohmann::json to_json() const;
  static Surrogate from_json(const nlohmann::json& j);

 private:
  Surrogate() = default;

  Kernel kernel_;
  TrainingSet data_;
  Normalization norm_;
  Eigen::MatrixXd Xn_;
  double jitter_ = 0.0;
  double log_likelihood_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

/// Gram matrix over normalized rows.
Eigen::MatrixXd gram_matrix(const Kernel& k, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

}  // namespace stlad
