#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lbfgs.hpp"
#include "stlad/error.hpp"
#include "stlad/gp.hpp"
#include "stlad/rng.hpp"

namespace stlad {
namespace {

constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-4;
constexpr double kNegativeVarianceTolerance = 1e-8;

// Box for the log-parameters during optimization.
constexpr double kMinVariance = 1e-4, kMaxVariance = 1e2;
constexpr double kMinLengthscale = 1e-3, kMaxLengthscale = 1e2;
// Range the random restarts are drawn from.
constexpr double kInitLo = 1e-2, kInitHi = 1e1;

struct Factor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter;
  Eigen::MatrixXd K;  // includes jitter
};

bool try_factor(const Eigen::MatrixXd& G, double variance, double jitter, Factor& out) {
  out.K = G;
  out.K.diagonal().array() += jitter * variance;
  out.llt.compute(out.K);
  if (out.llt.info() != Eigen::Success) return false;
  // LLT does not always flag semi-definite input; reject non-positive pivots.
  const auto& L = out.llt.matrixLLT();
  for (Eigen::Index i = 0; i < L.rows(); ++i)
    if (!(L(i, i) > 0.0) || !std::isfinite(L(i, i))) return false;
  out.jitter = jitter;
  return true;
}

// Smallest jitter in {1e-8, 1e-7, ..., 1e-4} that factorizes.
bool factor_with_escalation(const Eigen::MatrixXd& G, double variance, Factor& out) {
  for (double j = kJitterStart; j <= kJitterMax * 1.0001; j *= 10.0)
    if (try_factor(G, variance, j, out)) return true;
  return false;
}

double log_likelihood_from(const Factor& f, const Eigen::VectorXd& y, Eigen::VectorXd& alpha) {
  alpha = f.llt.solve(y);
  const auto& L = f.llt.matrixLLT();
  double logdet_half = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) logdet_half += std::log(L(i, i));
  const double n = static_cast<double>(y.size());
  return -0.5 * y.dot(alpha) - logdet_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

std::vector<double> clamp_params(std::vector<double> p) {
  p[0] = std::clamp(p[0], std::log(kMinVariance), std::log(kMaxVariance));
  for (std::size_t i = 1; i < p.size(); ++i)
    p[i] = std::clamp(p[i], std::log(kMinLengthscale), std::log(kMaxLengthscale));
  return p;
}

}  // namespace

Normalization Normalization::identity(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

Eigen::VectorXd Normalization::apply(std::span<const double> x) const {
  if (x.size() != dim()) throw Error(ErrorCode::InvalidArgument, "point dimension does not match the model");
  Eigen::VectorXd out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    double w = upper[i] - lower[i];
    out[static_cast<Eigen::Index>(i)] = w > 0.0 ? (x[i] - lower[i]) / w : x[i] - lower[i];
  }
  return out;
}

Eigen::MatrixXd Normalization::apply_rows(const Eigen::MatrixXd& X) const {
  if (static_cast<std::size_t>(X.cols()) != dim())
    throw Error(ErrorCode::InvalidArgument, "point dimension does not match the model");
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    double w = upper[i] - lower[i];
    out.col(c) = (X.col(c).array() - lower[i]) / (w > 0.0 ? w : 1.0);
  }
  return out;
}

void TrainingSet::validate(const Normalization& norm, double tol) const {
  if (X.rows() != y.size()) throw Error(ErrorCode::InvalidArgument, "training inputs and targets differ in length");
  if (X.rows() == 0) throw Error(ErrorCode::InvalidArgument, "training set is empty");
  if (!X.allFinite() || !y.allFinite()) throw Error(ErrorCode::InvalidArgument, "training set has non-finite values");
  Eigen::MatrixXd Xn = norm.apply_rows(X);
  for (Eigen::Index i = 0; i < Xn.rows(); ++i)
    for (Eigen::Index j = i + 1; j < Xn.rows(); ++j)
      if ((Xn.row(i) - Xn.row(j)).cwiseAbs().maxCoeff() <= tol)
        throw Error(ErrorCode::InvalidArgument, "training points " + std::to_string(i) + " and " +
                                                    std::to_string(j) + " are duplicates");
}

LikelihoodEval log_marginal_likelihood(const Kernel& kernel, const Eigen::MatrixXd& Xn, const Eigen::VectorXd& y) {
  const Eigen::Index n = Xn.rows(), d = Xn.cols();
  Eigen::MatrixXd G = gram_matrix(kernel, Xn, Xn);
  Factor f;
  if (!factor_with_escalation(G, kernel.variance, f))
    return {-std::numeric_limits<double>::infinity(), std::vector<double>(kernel.num_params(), 0.0), 0.0};
  Eigen::VectorXd alpha;
  double ll = log_likelihood_from(f, y, alpha);

  // d ll / d p = 0.5 * tr((alpha alpha^T - K^-1) dK/dp)
  Eigen::MatrixXd W = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  W = alpha * alpha.transpose() - W;

  std::vector<double> grad(kernel.num_params(), 0.0);
  grad[0] = 0.5 * (W.array() * f.K.array()).sum();
  if (kernel.type == KernelType::SquaredExponential) {
    const double l = kernel.lengthscales[0];
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < j; ++i) {
        double r2 = (Xn.row(i) - Xn.row(j)).squaredNorm();
        acc += 2.0 * W(i, j) * G(i, j) * r2 / (2.0 * l);
      }
    grad[1] = 0.5 * acc;
  } else {
    constexpr double s5 = 2.23606797749978969640;
    std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
    std::vector<double> sq(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < j; ++i) {
        double r2 = 0.0;
        for (Eigen::Index c = 0; c < d; ++c) {
          double s = (Xn(i, c) - Xn(j, c)) / kernel.lengthscales[static_cast<std::size_t>(c)];
          sq[static_cast<std::size_t>(c)] = s * s;
          r2 += s * s;
        }
        double r = std::sqrt(r2);
        double common = 2.0 * W(i, j) * kernel.variance * (5.0 / 3.0) * (1.0 + s5 * r) * std::exp(-s5 * r);
        for (std::size_t c = 0; c < sq.size(); ++c) acc[c] += common * sq[c];
      }
    for (std::size_t c = 0; c < acc.size(); ++c) grad[c + 1] = 0.5 * acc[c];
  }
  return {ll, std::move(grad), f.jitter};
}

Surrogate Surrogate::condition(const TrainingSet& data, const Kernel& kernel, const Normalization& norm,
                               double jitter) {
  data.validate(norm);
  kernel.check_dim(data.dim());
  Surrogate s;
  s.kernel_ = kernel;
  s.data_ = data;
  s.norm_ = norm;
  s.Xn_ = norm.apply_rows(data.X);
  Eigen::MatrixXd G = gram_matrix(kernel, s.Xn_, s.Xn_);
  Factor f;
  bool ok = jitter > 0.0 ? try_factor(G, kernel.variance, jitter, f) : factor_with_escalation(G, kernel.variance, f);
  if (!ok)
    throw Error(ErrorCode::Numeric, "Gram matrix is not positive definite even with maximum jitter; "
                                    "check for near-duplicate or badly scaled inputs");
  s.jitter_ = f.jitter;
  s.log_likelihood_ = log_likelihood_from(f, data.y, s.alpha_);
  s.chol_ = std::move(f.llt);
  return s;
}

Surrogate Surrogate::fit(const TrainingSet& data, const Kernel& initial, const FitOptions& options) {
  return fit(data, initial, options, Normalization::identity(data.dim()));
}

Surrogate Surrogate::fit(const TrainingSet& data, const Kernel& initial, const FitOptions& options,
                         const Normalization& norm) {
  if (data.size() < 2) throw Error(ErrorCode::InvalidArgument, "fitting needs at least two training points");
  if (options.restarts < 1) throw Error(ErrorCode::InvalidArgument, "fitting needs at least one restart");
  data.validate(norm);
  initial.check_dim(data.dim());
  const Eigen::MatrixXd Xn = norm.apply_rows(data.X);

  const std::size_t np = initial.num_params();
  std::vector<double> lo(np, std::log(kMinLengthscale)), hi(np, std::log(kMaxLengthscale));
  lo[0] = std::log(kMinVariance);
  hi[0] = std::log(kMaxVariance);

  detail::Objective objective = [&](const std::vector<double>& p, std::vector<double>& grad) {
    auto ev = log_marginal_likelihood(initial.with_log_params(p), Xn, data.y);
    grad.resize(p.size());
    if (!std::isfinite(ev.value)) return std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i) grad[i] = -ev.gradient[i];
    return -ev.value;
  };

  Rng rng(options.seed);
  std::vector<double> best_p;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < options.restarts; ++r) {
    std::vector<double> start;
    if (r == 0) {
      start = clamp_params(initial.log_params());
    } else {
      start.resize(np);
      for (double& v : start) v = rng.uniform(std::log(kInitLo), std::log(kInitHi));
    }
    auto res = detail::minimize_box(objective, start, lo, hi, options.max_iterations);
    if (res.value < best) {
      best = res.value;
      best_p = res.x;
    }
  }
  if (best_p.empty())
    throw Error(ErrorCode::Numeric, "marginal likelihood could not be evaluated at any starting point");
  return condition(data, initial.with_log_params(best_p), norm);
}

Prediction Surrogate::predict(std::span<const double> x) const {
  Eigen::VectorXd xn = norm_.apply(x);
  Eigen::MatrixXd row = xn.transpose();
  Eigen::VectorXd ks = gram_matrix(kernel_, Xn_, row).col(0);
  double mean = ks.dot(alpha_);
  Eigen::VectorXd v = chol_.matrixL().solve(ks);
  double var = kernel_.variance - v.squaredNorm();
  if (var < 0.0) {
    if (var < -kNegativeVarianceTolerance * std::max(1.0, kernel_.variance))
      throw Error(ErrorCode::Numeric, "predictive variance is negative beyond round-off");
    var = 0.0;
  }
  return {mean, var};
}

void Surrogate::predict_many(const Eigen::MatrixXd& X, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const {
  Eigen::MatrixXd Xs = norm_.apply_rows(X);
  Eigen::MatrixXd Ks = gram_matrix(kernel_, Xn_, Xs);
  mean = Ks.transpose() * alpha_;
  chol_.matrixL().solveInPlace(Ks);
  variance = (kernel_.variance - Ks.colwise().squaredNorm().array()).matrix();
  const double tol = -kNegativeVarianceTolerance * std::max(1.0, kernel_.variance);
  for (Eigen::Index i = 0; i < variance.size(); ++i) {
    if (variance[i] < 0.0) {
      if (variance[i] < tol) throw Error(ErrorCode::Numeric, "predictive variance is negative beyond round-off");
      variance[i] = 0.0;
    }
  }
}

Eigen::VectorXd Surrogate::loo_residuals() const {
  const Eigen::Index n = Xn_.rows();
  Eigen::MatrixXd Kinv = chol_.solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double r = alpha_[i] / Kinv(i, i);
    out[i] = r * r;
  }
  return out;
}

nlohmann::json Surrogate::to_json() const {
  nlohmann::json X = nlohmann::json::array();
  for (Eigen::Index i = 0; i < data_.X.rows(); ++i) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < data_.X.cols(); ++c) row.push_back(data_.X(i, c));
    X.push_back(row);
  }
  std::vector<double> y(data_.y.data(), data_.y.data() + data_.y.size());
  return {{"kernel", kernel_.to_json()},
          {"jitter", jitter_},
          {"log_likelihood", log_likelihood_},
          {"normalization", {{"lower", norm_.lower}, {"upper", norm_.upper}}},
          {"X", X},
          {"y", y}};
}

Surrogate Surrogate::from_json(const nlohmann::json& j) {
  try {
    Kernel k = Kernel::from_json(j.at("kernel"));
    Normalization norm{j.at("normalization").at("lower").get<std::vector<double>>(),
                       j.at("normalization").at("upper").get<std::vector<double>>()};
    auto rows = j.at("X").get<std::vector<std::vector<double>>>();
    auto y = j.at("y").get<std::vector<double>>();
    TrainingSet ts;
    ts.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(norm.dim()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != norm.dim()) throw Error(ErrorCode::InvalidArgument, "surrogate row has wrong dimension");
      for (std::size_t c = 0; c < rows[i].size(); ++c)
        ts.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    ts.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    return condition(ts, k, norm, j.at("jitter").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed surrogate document: ") + e.what());
  }
}

}  // namespace stlad
