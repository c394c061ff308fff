#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stlad/acquisition.hpp"
#include "stlad/blackbox.hpp"
#include "stlad/design.hpp"
#include "stlad/gp.hpp"
#include "stlad/stl.hpp"

namespace stlad {

/// Ordering assertion over aggregated RMSE: stat(lhs) op factor * stat(rhs)
/// at each listed budget (every budget when empty).
struct BenchmarkCheck {
  std::string lhs;
  std::string op = "<=";  // "<" or "<="
  std::string rhs;
  double factor = 1.0;
  std::string stat = "median";  // median or mean
  std::vector<std::size_t> budgets;
};

struct FieldExport {
  std::string strategy = "mepe";
  std::size_t budget = 0;  // 0: largest configured budget
  std::vector<std::size_t> resolution;  // empty: 50 per dimension
};

struct BenchmarkConfig {
  std::string scenario;
  std::string formula_text;
  nlohmann::json domain;  // null: from the scenario
  std::string builtin;    // builtin black-box id, empty when external
  std::string command;    // external black-box command
  double timeout_s = 30.0;
  std::vector<Strategy> strategies{Strategy::Mepe, Strategy::Ud, Strategy::Random};
  std::vector<std::size_t> budgets;
  std::size_t n_init = 50;
  std::size_t test_points = 1000;
  std::size_t repetitions = 30;  // random
  std::size_t seeds = 10;        // mepe and ud
  std::uint64_t seed = 0;
  std::size_t pool_size = 4096;
  std::size_t fit_restarts = 5;
  std::size_t refit_restarts = 1;
  std::size_t max_iterations = 60;
  AlphaRule alpha_rule = AlphaRule::SquaredResidual;
  KernelType kernel = KernelType::Matern52;
  bool write_campaigns = true;
  std::optional<FieldExport> field;
  std::vector<BenchmarkCheck> checks;

  BenchmarkConfig();
  void validate() const;
  /// Relative file references ("formula_file", "domain_file") resolve
  /// against base_dir.
  static BenchmarkConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static BenchmarkConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  Formula formula() const;
  Domain make_domain() const;
  std::unique_ptr<BlackBox> make_blackbox() const;
  CampaignConfig campaign(Strategy s, std::size_t budget, std::uint64_t seed) const;
  /// Seed of the rep-th run of a strategy.
  std::uint64_t run_seed(std::size_t rep) const;
  std::size_t runs(Strategy s) const { return s == Strategy::Random ? repetitions : seeds; }
};

/// True robustness over a test grid; missing where the black-box failed.
struct GroundTruth {
  DesignMatrix grid;
  std::vector<std::optional<double>> values;

  static GroundTruth evaluate(const Formula& f, BlackBox& bb, DesignMatrix grid);
  std::size_t failures() const;
};

struct RmseResult {
  double rmse;
  std::size_t used;
  std::size_t dropped;
};

/// sqrt(mean((f - fhat)^2)) over the grid points with a known truth value.
RmseResult test_rmse(const Surrogate& s, const GroundTruth& truth);
RmseResult test_rmse(const Surrogate& s, const Formula& f, BlackBox& bb, const DesignMatrix& grid);

struct CellResult {
  Strategy strategy;
  std::size_t budget;
  std::vector<std::uint64_t> seeds;
  std::vector<double> rmse;
  double mean = 0.0, stddev = 0.0, median = 0.0, min = 0.0, max = 0.0;
  std::size_t failures = 0;
  double wallclock_ms = 0.0;
  std::vector<std::string> campaign_files;
};

struct CheckResult {
  BenchmarkCheck check;
  std::size_t budget;
  double lhs_value, rhs_value;
  bool passed;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::size_t truth_failures = 0;
  std::vector<CellResult> cells;
  std::vector<CheckResult> checks;

  bool checks_passed() const;
  const CellResult& cell(Strategy s, std::size_t budget) const;
  nlohmann::json to_json(bool include_timing = true) const;
  /// strategy, budget, runs, median, mean, std, min, max, failures
  std::string rmse_csv() const;
};

/// Runs every strategy x budget x seed cell. mepe runs once per seed up to
/// the largest budget and scores the surrogate it had after each smaller
/// budget (the loop never looks at the budget, so these are exactly the
/// shorter campaigns). Writes report.json, rmse.csv, field.csv and the
/// per-cell campaign files when out_dir is non-empty.
BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const std::filesystem::path& out_dir = {});

/// Campaign cut back to its first `budget` adaptive steps, using the
/// snapshot taken at that point.
CampaignRecord truncate_campaign(const CampaignRecord& rec, std::size_t budget);

/// CSV with one row per grid point: names..., mean, variance.
std::string export_field_csv(const Surrogate& s, const Domain& dom, std::span<const std::size_t> resolution);

}  // namespace stlad
