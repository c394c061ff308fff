#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "stlad/blackbox.hpp"
#include "stlad/design.hpp"
#include "stlad/gp.hpp"
#include "stlad/stl.hpp"

namespace stlad {

constexpr double kAlphaCap = 0.99;
constexpr double kAlphaStart = 0.5;

/// Residual form used by update_alpha.
enum class AlphaRule {
  SquaredResidual,  // 0.5 * (y - yhat)^2 / e2cv
  Unsquared,        // 0.5 * (y - yhat) / e2cv, clamped below at 0
};

const char* to_string(AlphaRule rule);
AlphaRule alpha_rule_from_string(const std::string& name);

/// Balance factor after observing the previous chosen point:
/// 0.99 * min(1, ratio), clamped to [0, 0.99]. A zero residual gives 0; a
/// zero CV error with a nonzero residual saturates to 0.99.
double update_alpha(double y_prev, double yhat_prev, double ecv_prev,
                    AlphaRule rule = AlphaRule::SquaredResidual);

/// Surrogate plus per-training-point squared LOO errors and the current alpha.
class AcquisitionState {
 public:
  /// CV errors from the surrogate's closed-form LOO residuals.
  AcquisitionState(Surrogate surrogate, double alpha);
  /// Explicit CV errors, one per training point.
  AcquisitionState(Surrogate surrogate, Eigen::VectorXd cv_errors, double alpha);

  const Surrogate& surrogate() const { return surrogate_; }
  const Eigen::VectorXd& cv_errors() const { return cv_errors_; }
  double alpha() const { return alpha_; }
  void set_alpha(double alpha);

  /// CV error of the training point nearest to x (normalized Euclidean
  /// distance, lowest index on ties).
  double cv_error_at(std::span<const double> x) const;
  /// alpha * e2cv(x) + (1 - alpha) * s2(x)
  double epe(std::span<const double> x) const;
  /// EPE for every row of X, same values as epe() row by row.
  Eigen::VectorXd epe_many(const Eigen::MatrixXd& X) const;
  /// Nearest training index for every row of X.
  std::vector<std::size_t> nearest_many(const Eigen::MatrixXd& X) const;

 private:
  Surrogate surrogate_;
  Eigen::VectorXd cv_errors_;
  double alpha_;
  Eigen::MatrixXd Xn_;
};

enum class Strategy { Mepe, Ud, Random };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

struct CampaignConfig {
  Strategy strategy = Strategy::Mepe;
  /// N: adaptive iterations for mepe, total points for ud and random.
  std::size_t budget = 0;
  std::size_t n_init = 50;
  std::size_t pool_size = 4096;
  std::uint64_t seed = 0;
  AlphaRule alpha_rule = AlphaRule::SquaredResidual;
  KernelType kernel = KernelType::Matern52;
  std::size_t fit_restarts = 5;
  /// Restarts for the refit after each adaptive step (the first one warm
  /// starts from the previous hyperparameters).
  std::size_t refit_restarts = 1;
  std::size_t max_iterations = 60;
  /// mepe only: also keep the surrogate after these many adaptive steps.
  std::vector<std::size_t> snapshots;

  void validate() const;
  nlohmann::json to_json() const;
  static CampaignConfig from_json(const nlohmann::json& j);
};

/// One black-box evaluation. Initial-design rows have iteration 0; alpha
/// and epe are NaN where they do not apply. A failed evaluation has no y.
struct IterationRecord {
  std::size_t iteration = 0;
  std::vector<double> x;
  std::optional<double> y;
  double alpha = 0.0;
  double epe = 0.0;
  double predicted = 0.0;
  double wallclock_ms = 0.0;
  std::string error;

  bool operator==(const IterationRecord&) const = default;
};

struct CampaignRecord {
  std::string formula_text;
  nlohmann::json domain;
  std::vector<std::string> names;
  CampaignConfig config;
  std::vector<IterationRecord> history;
  std::optional<Surrogate> surrogate;
  std::map<std::size_t, Surrogate> snapshots;

  std::size_t failures() const;
  /// Points in evaluation order.
  std::vector<std::vector<double>> points() const;

  nlohmann::json to_json() const;
  static CampaignRecord from_json(const nlohmann::json& j);
  /// iteration, x..., y, alpha, epe, wallclock_ms
  std::string history_csv() const;
};

/// Called before each mepe evaluation with the state used for the choice,
/// the pool, the excluded mask and the chosen pool index.
using CampaignObserver =
    std::function<void(const AcquisitionState&, const DesignMatrix&, const std::vector<bool>&, std::size_t)>;

CampaignRecord run_campaign(const Formula& formula, const Domain& dom, BlackBox& bb, const CampaignConfig& cfg,
                            const CampaignObserver& observer = {});

/// Initial hyperparameters for a d-dimensional normalized domain.
Kernel default_kernel(KernelType type, std::size_t dim);

}  // namespace stlad
