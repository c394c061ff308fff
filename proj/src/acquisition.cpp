#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "stlad/acquisition.hpp"
#include "stlad/agm.hpp"
#include "stlad/error.hpp"
#include "stlad/rng.hpp"

namespace stlad {

const char* to_string(AlphaRule rule) {
  return rule == AlphaRule::SquaredResidual ? "squared" : "unsquared";
}

AlphaRule alpha_rule_from_string(const std::string& name) {
  if (name == "squared") return AlphaRule::SquaredResidual;
  if (name == "unsquared") return AlphaRule::Unsquared;
  throw Error(ErrorCode::Config, "unknown alpha rule '" + name + "' (expected squared or unsquared)");
}

double update_alpha(double y_prev, double yhat_prev, double ecv_prev, AlphaRule rule) {
  const double r = y_prev - yhat_prev;
  const double num = rule == AlphaRule::SquaredResidual ? r * r : r;
  if (!std::isfinite(num) || !std::isfinite(ecv_prev))
    throw Error(ErrorCode::InvalidArgument, "alpha update needs finite inputs");
  if (num == 0.0) return 0.0;
  if (num < 0.0) return 0.0;
  if (ecv_prev <= 0.0) return kAlphaCap;
  const double a = kAlphaCap * std::min(1.0, 0.5 * num / ecv_prev);
  return std::clamp(a, 0.0, kAlphaCap);
}

AcquisitionState::AcquisitionState(Surrogate surrogate, double alpha)
    : AcquisitionState(surrogate, surrogate.loo_residuals(), alpha) {}

AcquisitionState::AcquisitionState(Surrogate surrogate, Eigen::VectorXd cv_errors, double alpha)
    : surrogate_(std::move(surrogate)), cv_errors_(std::move(cv_errors)), alpha_(0.0) {
  if (static_cast<std::size_t>(cv_errors_.size()) != surrogate_.data().size())
    throw Error(ErrorCode::InvalidArgument, "one CV error per training point required");
  if (surrogate_.data().size() == 0) throw Error(ErrorCode::InvalidArgument, "training set is empty");
  for (Eigen::Index i = 0; i < cv_errors_.size(); ++i)
    if (!(cv_errors_[i] >= 0.0) || !std::isfinite(cv_errors_[i]))
      throw Error(ErrorCode::InvalidArgument, "CV errors must be finite and non-negative");
  set_alpha(alpha);
  Xn_ = surrogate_.normalization().apply_rows(surrogate_.data().X);
}

void AcquisitionState::set_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= kAlphaCap))
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 0.99]");
  alpha_ = alpha;
}

namespace {

std::size_t nearest_row(const Eigen::MatrixXd& Xn, const double* xn, Eigen::Index d) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < Xn.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double t = Xn(i, j) - xn[j];
      s += t * t;
    }
    if (s < best_d) {
      best_d = s;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

}  // namespace

double AcquisitionState::cv_error_at(std::span<const double> x) const {
  Eigen::VectorXd xn = surrogate_.normalization().apply(x);
  return cv_errors_[static_cast<Eigen::Index>(nearest_row(Xn_, xn.data(), xn.size()))];
}

double AcquisitionState::epe(std::span<const double> x) const {
  const double s2 = surrogate_.predict(x).variance;
  return alpha_ * cv_error_at(x) + (1.0 - alpha_) * s2;
}

std::vector<std::size_t> AcquisitionState::nearest_many(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd Xs = surrogate_.normalization().apply_rows(X);
  std::vector<std::size_t> out(static_cast<std::size_t>(Xs.rows()));
  std::vector<double> row(static_cast<std::size_t>(Xs.cols()));
  for (Eigen::Index i = 0; i < Xs.rows(); ++i) {
    for (Eigen::Index j = 0; j < Xs.cols(); ++j) row[static_cast<std::size_t>(j)] = Xs(i, j);
    out[static_cast<std::size_t>(i)] = nearest_row(Xn_, row.data(), Xs.cols());
  }
  return out;
}

Eigen::VectorXd AcquisitionState::epe_many(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd mean, var;
  surrogate_.predict_many(X, mean, var);
  auto nn = nearest_many(X);
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out[i] = alpha_ * cv_errors_[static_cast<Eigen::Index>(nn[static_cast<std::size_t>(i)])] + (1.0 - alpha_) * var[i];
  return out;
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Mepe: return "mepe";
    case Strategy::Ud: return "ud";
    case Strategy::Random: return "random";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "mepe") return Strategy::Mepe;
  if (name == "ud") return Strategy::Ud;
  if (name == "random") return Strategy::Random;
  throw Error(ErrorCode::Config, "unknown strategy '" + name + "' (expected mepe, ud or random)");
}

void CampaignConfig::validate() const {
  if (strategy == Strategy::Mepe) {
    if (n_init < 2) throw Error(ErrorCode::Config, "n_init must be at least 2");
    if (pool_size < budget) throw Error(ErrorCode::Config, "pool_size must be at least the budget");
  } else if (budget < 1) {
    throw Error(ErrorCode::Config, std::string(to_string(strategy)) + " needs a budget of at least 1");
  }
  if (fit_restarts < 1 || refit_restarts < 1) throw Error(ErrorCode::Config, "restart counts must be at least 1");
  if (max_iterations < 1) throw Error(ErrorCode::Config, "max_iterations must be at least 1");
}

Kernel default_kernel(KernelType type, std::size_t dim) {
  if (type == KernelType::SquaredExponential) return Kernel::squared_exponential(0.25, 0.04);
  return Kernel::matern52(0.25, 0.2, dim);
}

namespace {

using Clock = std::chrono::steady_clock;

bool is_blackbox_failure(ErrorCode c) {
  return c == ErrorCode::BlackBoxCrash || c == ErrorCode::BlackBoxTimeout || c == ErrorCode::BlackBoxProtocol ||
         c == ErrorCode::BlackBoxRemote;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Runner {
  const Formula& formula;
  const Domain& dom;
  BlackBox& bb;
  const CampaignConfig& cfg;
  Normalization norm;
  CampaignRecord rec;
  std::vector<std::vector<double>> train_x;
  std::vector<double> train_y;
  ErrorCode last_failure = ErrorCode::BlackBoxCrash;
  std::string last_failure_msg;

  IterationRecord& evaluate(std::size_t iteration, std::vector<double> x) {
    IterationRecord r;
    r.iteration = iteration;
    r.alpha = kNaN;
    r.epe = kNaN;
    r.predicted = kNaN;
    auto t0 = Clock::now();
    try {
      Trace tr = bb.evaluate(x);
      r.wallclock_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      r.y = agm_robustness(formula, tr, 0).value;
      if (!(std::abs(*r.y) <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "robustness " + std::to_string(*r.y) +
                                                    " is outside [-1, 1]; wrap predicate signals in clamp()");
      train_x.push_back(x);
      train_y.push_back(*r.y);
    } catch (const Error& e) {
      if (!is_blackbox_failure(e.code())) throw;
      r.wallclock_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      r.error = std::string(to_string(e.code())) + ": " + e.what();
      last_failure = e.code();
      last_failure_msg = e.what();
    }
    r.x = std::move(x);
    rec.history.push_back(std::move(r));
    return rec.history.back();
  }

  TrainingSet training() const {
    TrainingSet ts;
    const auto d = static_cast<Eigen::Index>(dom.dim());
    ts.X.resize(static_cast<Eigen::Index>(train_x.size()), d);
    ts.y.resize(static_cast<Eigen::Index>(train_y.size()));
    for (std::size_t i = 0; i < train_x.size(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) ts.X(static_cast<Eigen::Index>(i), j) = train_x[i][static_cast<std::size_t>(j)];
      ts.y[static_cast<Eigen::Index>(i)] = train_y[i];
    }
    return ts;
  }

  Surrogate fit(const Kernel& start, std::size_t restarts, std::uint64_t seed) const {
    TrainingSet ts = training();
    if (ts.size() == 0)
      throw Error(last_failure, "every evaluation failed; last error: " + last_failure_msg);
    if (ts.size() == 1) return Surrogate::condition(ts, start, norm);
    FitOptions opt;
    opt.restarts = restarts;
    opt.seed = seed;
    opt.max_iterations = cfg.max_iterations;
    return Surrogate::fit(ts, start, opt, norm);
  }

  void evaluate_design(const DesignMatrix& D) {
    for (std::size_t i = 0; i < D.size(); ++i) evaluate(i + 1, D.row(i));
    rec.surrogate = fit(default_kernel(cfg.kernel, dom.dim()), cfg.fit_restarts, derive_seed(cfg.seed, "fit"));
  }

  void run_mepe(const CampaignObserver& observer) {
    DesignMatrix init = uniform_design(dom, cfg.n_init);
    for (std::size_t i = 0; i < init.size(); ++i) evaluate(0, init.row(i));
    Surrogate model =
        fit(default_kernel(cfg.kernel, dom.dim()), cfg.fit_restarts, derive_seed(cfg.seed, "fit"));

    DesignMatrix pool = candidate_pool(dom, cfg.pool_size, derive_seed(cfg.seed, "pool"));
    std::vector<bool> excluded(pool.size(), false);
    {
      // Pool points that coincide with an initial point are never chosen.
      Eigen::MatrixXd Pn = norm.apply_rows(pool.points);
      Eigen::MatrixXd In = norm.apply_rows(init.points);
      for (Eigen::Index p = 0; p < Pn.rows(); ++p)
        for (Eigen::Index q = 0; q < In.rows(); ++q)
          if ((Pn.row(p) - In.row(q)).cwiseAbs().maxCoeff() <= 1e-12) excluded[static_cast<std::size_t>(p)] = true;
    }

    set_snapshot(0, model);
    double alpha = kAlphaStart;
    bool have_prev = false;
    double y_prev = 0.0, yhat_prev = 0.0, ecv_prev = 0.0;

    for (std::size_t it = 1; it <= cfg.budget; ++it) {
      if (have_prev) alpha = update_alpha(y_prev, yhat_prev, ecv_prev, cfg.alpha_rule);
      AcquisitionState state(model, alpha);

      Eigen::VectorXd mean, var;
      model.predict_many(pool.points, mean, var);
      auto nn = state.nearest_many(pool.points);
      std::size_t best = pool.size();
      double best_v = -std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < pool.size(); ++p) {
        if (excluded[p]) continue;
        const auto ip = static_cast<Eigen::Index>(p);
        const double v = alpha * state.cv_errors()[static_cast<Eigen::Index>(nn[p])] + (1.0 - alpha) * var[ip];
        if (v > best_v) {
          best_v = v;
          best = p;
        }
      }
      if (best == pool.size()) throw Error(ErrorCode::InvalidArgument, "candidate pool exhausted");
      if (observer) observer(state, pool, excluded, best);
      excluded[best] = true;

      const auto ib = static_cast<Eigen::Index>(best);
      const double ecv = state.cv_errors()[static_cast<Eigen::Index>(nn[best])];
      IterationRecord& r = evaluate(it, pool.row(best));
      r.alpha = alpha;
      r.epe = best_v;
      r.predicted = mean[ib];
      if (r.y) {
        have_prev = true;
        y_prev = *r.y;
        yhat_prev = mean[ib];
        ecv_prev = ecv;
        model = fit(model.kernel(), cfg.refit_restarts, derive_seed(cfg.seed, it));
      } else {
        // alpha stays where it is after a failed evaluation
        have_prev = false;
      }
      set_snapshot(it, model);
    }
    rec.surrogate = model;
  }

  void set_snapshot(std::size_t it, const Surrogate& model) {
    if (std::find(cfg.snapshots.begin(), cfg.snapshots.end(), it) != cfg.snapshots.end())
      rec.snapshots.insert_or_assign(it, model);
  }
};

}  // namespace

CampaignRecord run_campaign(const Formula& formula, const Domain& dom, BlackBox& bb, const CampaignConfig& cfg,
                            const CampaignObserver& observer) {
  cfg.validate();
  Runner run{formula, dom, bb, cfg, dom.bounds(), {}, {}, {}, ErrorCode::BlackBoxCrash, {}};
  run.rec.formula_text = to_string(formula);
  run.rec.domain = dom.to_json();
  run.rec.names = dom.names();
  run.rec.config = cfg;
  switch (cfg.strategy) {
    case Strategy::Mepe: run.run_mepe(observer); break;
    case Strategy::Ud: run.evaluate_design(uniform_design(dom, cfg.budget)); break;
    case Strategy::Random: run.evaluate_design(random_design(dom, cfg.budget, derive_seed(cfg.seed, "random"))); break;
  }
  return std::move(run.rec);
}

}  // namespace stlad
