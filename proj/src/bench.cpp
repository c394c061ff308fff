#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "numfmt.hpp"
#include "stlad/agm.hpp"
#include "stlad/bench.hpp"
#include "stlad/error.hpp"
#include "stlad/rng.hpp"

namespace stlad {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + p.string());
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path q(p);
  return q.is_relative() && !base.empty() ? base / q : q;
}

std::vector<std::size_t> default_budgets() {
  std::vector<std::size_t> b;
  for (std::size_t n = 10; n <= 200; n += 10) b.push_back(n);
  return b;
}

double stat_of(const CellResult& c, const std::string& stat) { return stat == "mean" ? c.mean : c.median; }

}  // namespace

BenchmarkConfig::BenchmarkConfig() : budgets(default_budgets()) {}

void BenchmarkConfig::validate() const {
  if (formula_text.empty()) throw Error(ErrorCode::Config, "no formula: set scenario, formula or formula_file");
  if (domain.is_null()) throw Error(ErrorCode::Config, "no domain: set scenario, domain or domain_file");
  if (builtin.empty() && command.empty()) throw Error(ErrorCode::Config, "no black-box: set scenario or blackbox");
  if (strategies.empty()) throw Error(ErrorCode::Config, "strategies must not be empty");
  if (budgets.empty()) throw Error(ErrorCode::Config, "budgets must not be empty");
  for (std::size_t i = 1; i < budgets.size(); ++i)
    if (budgets[i] <= budgets[i - 1]) throw Error(ErrorCode::Config, "budgets must be strictly increasing");
  if (budgets.front() < 1) throw Error(ErrorCode::Config, "budgets must be at least 1");
  if (test_points < 1) throw Error(ErrorCode::Config, "test_points must be at least 1");
  if (repetitions < 1) throw Error(ErrorCode::Config, "repetitions must be at least 1");
  if (seeds < 1) throw Error(ErrorCode::Config, "seeds must be at least 1");
  if (!(timeout_s > 0.0)) throw Error(ErrorCode::Config, "timeout_s must be positive");
  for (Strategy s : strategies) campaign(s, budgets.back(), 0).validate();
  auto known = [&](const std::string& name) {
    Strategy s = strategy_from_string(name);
    return std::find(strategies.begin(), strategies.end(), s) != strategies.end();
  };
  for (const auto& c : checks) {
    if (!known(c.lhs) || !known(c.rhs)) throw Error(ErrorCode::Config, "check refers to a strategy that is not run");
    if (c.op != "<" && c.op != "<=") throw Error(ErrorCode::Config, "check op must be < or <=");
    if (c.stat != "median" && c.stat != "mean") throw Error(ErrorCode::Config, "check stat must be median or mean");
    for (auto b : c.budgets)
      if (std::find(budgets.begin(), budgets.end(), b) == budgets.end())
        throw Error(ErrorCode::Config, "check budget " + std::to_string(b) + " is not among the budgets");
  }
  if (field) {
    if (!known(field->strategy)) throw Error(ErrorCode::Config, "field strategy is not run");
    if (field->budget && std::find(budgets.begin(), budgets.end(), field->budget) == budgets.end())
      throw Error(ErrorCode::Config, "field budget is not among the budgets");
  }
}

BenchmarkConfig BenchmarkConfig::from_json(const json& j, const fs::path& base_dir) {
  static const std::set<std::string> keys = {
      "scenario", "formula", "formula_file", "domain", "domain_file", "blackbox", "strategies", "budgets",
      "n_init", "test_points", "repetitions", "seeds", "seed", "pool_size", "fit_restarts", "refit_restarts",
      "max_iterations", "alpha_rule", "kernel", "write_campaigns", "field", "checks"};
  if (!j.is_object()) throw Error(ErrorCode::Config, "benchmark config must be a JSON object");
  for (auto& [k, v] : j.items())
    if (!keys.count(k)) throw Error(ErrorCode::Config, "unknown benchmark config key '" + k + "'");
  BenchmarkConfig c;
  try {
    if (j.contains("scenario")) {
      Scenario sc = builtin_scenario(j.at("scenario").get<std::string>());
      c.scenario = sc.id;
      c.formula_text = sc.formula_text;
      c.domain = sc.domain.to_json();
      c.builtin = to_string(sc.blackbox);
    }
    if (j.contains("formula")) c.formula_text = j.at("formula").get<std::string>();
    if (j.contains("formula_file")) c.formula_text = read_file(resolve(base_dir, j.at("formula_file").get<std::string>()));
    if (j.contains("domain")) c.domain = Domain::from_json(j.at("domain")).to_json();
    if (j.contains("domain_file"))
      c.domain = Domain::load(resolve(base_dir, j.at("domain_file").get<std::string>())).to_json();
    if (j.contains("blackbox")) {
      const json& b = j.at("blackbox");
      if (b.is_string()) {
        c.builtin = to_string(builtin_kind_from_string(b.get<std::string>()));
        c.command.clear();
      } else if (b.is_object()) {
        for (auto& [k, v] : b.items())
          if (k != "command" && k != "timeout_s") throw Error(ErrorCode::Config, "unknown blackbox key '" + k + "'");
        c.command = b.at("command").get<std::string>();
        c.timeout_s = b.value("timeout_s", c.timeout_s);
        c.builtin.clear();
      } else {
        throw Error(ErrorCode::Config, "blackbox must be a builtin id or {\"command\": ...}");
      }
    }
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j.at("strategies")) c.strategies.push_back(strategy_from_string(s.get<std::string>()));
    }
    if (j.contains("budgets")) c.budgets = j.at("budgets").get<std::vector<std::size_t>>();
    c.n_init = j.value("n_init", c.n_init);
    c.test_points = j.value("test_points", c.test_points);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.seeds = j.value("seeds", c.seeds);
    c.seed = j.value("seed", c.seed);
    c.pool_size = j.value("pool_size", c.pool_size);
    c.fit_restarts = j.value("fit_restarts", c.fit_restarts);
    c.refit_restarts = j.value("refit_restarts", c.refit_restarts);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    if (j.contains("alpha_rule")) c.alpha_rule = alpha_rule_from_string(j.at("alpha_rule").get<std::string>());
    if (j.contains("kernel")) c.kernel = kernel_type_from_string(j.at("kernel").get<std::string>());
    c.write_campaigns = j.value("write_campaigns", c.write_campaigns);
    if (j.contains("field")) {
      const json& f = j.at("field");
      FieldExport fe;
      fe.strategy = f.value("strategy", fe.strategy);
      fe.budget = f.value("budget", fe.budget);
      if (f.contains("resolution")) fe.resolution = f.at("resolution").get<std::vector<std::size_t>>();
      c.field = fe;
    }
    if (j.contains("checks")) {
      for (const auto& e : j.at("checks")) {
        BenchmarkCheck ck;
        ck.lhs = e.at("lhs").get<std::string>();
        ck.rhs = e.at("rhs").get<std::string>();
        ck.op = e.value("op", ck.op);
        ck.factor = e.value("factor", ck.factor);
        ck.stat = e.value("stat", ck.stat);
        if (e.contains("budgets")) ck.budgets = e.at("budgets").get<std::vector<std::size_t>>();
        c.checks.push_back(std::move(ck));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("benchmark config: ") + e.what());
  }
  return c;
}

BenchmarkConfig BenchmarkConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

json BenchmarkConfig::to_json() const {
  json strategies_j = json::array();
  for (Strategy s : strategies) strategies_j.push_back(to_string(s));
  json j = {{"formula", formula_text},
            {"domain", domain},
            {"strategies", strategies_j},
            {"budgets", budgets},
            {"n_init", n_init},
            {"test_points", test_points},
            {"repetitions", repetitions},
            {"seeds", seeds},
            {"seed", seed},
            {"pool_size", pool_size},
            {"fit_restarts", fit_restarts},
            {"refit_restarts", refit_restarts},
            {"max_iterations", max_iterations},
            {"alpha_rule", to_string(alpha_rule)},
            {"kernel", to_string(kernel)},
            {"write_campaigns", write_campaigns}};
  if (!scenario.empty()) j["scenario"] = scenario;
  if (!builtin.empty())
    j["blackbox"] = builtin;
  else
    j["blackbox"] = {{"command", command}, {"timeout_s", timeout_s}};
  if (field) j["field"] = {{"strategy", field->strategy}, {"budget", field->budget}, {"resolution", field->resolution}};
  json cks = json::array();
  for (const auto& c : checks)
    cks.push_back({{"lhs", c.lhs}, {"op", c.op}, {"rhs", c.rhs}, {"factor", c.factor}, {"stat", c.stat},
                   {"budgets", c.budgets}});
  j["checks"] = cks;
  return j;
}

Formula BenchmarkConfig::formula() const { return parse_formula(formula_text); }

Domain BenchmarkConfig::make_domain() const { return Domain::from_json(domain); }

std::unique_ptr<BlackBox> BenchmarkConfig::make_blackbox() const {
  if (!builtin.empty()) return std::make_unique<BuiltinBlackBox>(builtin_kind_from_string(builtin));
  return std::make_unique<ExternalBlackBox>(
      command, std::chrono::milliseconds(static_cast<long long>(std::ceil(timeout_s * 1000.0))));
}

CampaignConfig BenchmarkConfig::campaign(Strategy s, std::size_t budget, std::uint64_t run_seed) const {
  CampaignConfig c;
  c.strategy = s;
  c.budget = budget;
  c.n_init = n_init;
  c.pool_size = pool_size;
  c.seed = run_seed;
  c.alpha_rule = alpha_rule;
  c.kernel = kernel;
  c.fit_restarts = fit_restarts;
  c.refit_restarts = refit_restarts;
  c.max_iterations = max_iterations;
  return c;
}

std::uint64_t BenchmarkConfig::run_seed(std::size_t rep) const { return derive_seed(seed, rep); }

GroundTruth GroundTruth::evaluate(const Formula& f, BlackBox& bb, DesignMatrix grid) {
  GroundTruth t;
  t.values.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      t.values.emplace_back(agm_robustness(f, bb.evaluate(grid.row(i)), 0).value);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::BlackBoxCrash:
        case ErrorCode::BlackBoxTimeout:
        case ErrorCode::BlackBoxProtocol:
        case ErrorCode::BlackBoxRemote: t.values.emplace_back(std::nullopt); break;
        default: throw;
      }
    }
  }
  t.grid = std::move(grid);
  return t;
}

std::size_t GroundTruth::failures() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::nullopt));
}

RmseResult test_rmse(const Surrogate& s, const GroundTruth& truth) {
  if (truth.values.size() != truth.grid.size()) throw Error(ErrorCode::InvalidArgument, "truth/grid size mismatch");
  Eigen::VectorXd mean, var;
  s.predict_many(truth.grid.points, mean, var);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    if (!truth.values[i]) continue;
    const double r = *truth.values[i] - mean[static_cast<Eigen::Index>(i)];
    sum += r * r;
    ++used;
  }
  if (used == 0) throw Error(ErrorCode::BlackBoxCrash, "no test point has a ground-truth value");
  return {std::sqrt(sum / static_cast<double>(used)), used, truth.values.size() - used};
}

RmseResult test_rmse(const Surrogate& s, const Formula& f, BlackBox& bb, const DesignMatrix& grid) {
  return test_rmse(s, GroundTruth::evaluate(f, bb, grid));
}

CampaignRecord truncate_campaign(const CampaignRecord& rec, std::size_t budget) {
  if (rec.config.strategy != Strategy::Mepe) throw Error(ErrorCode::InvalidArgument, "only mepe campaigns truncate");
  auto snap = rec.snapshots.find(budget);
  if (snap == rec.snapshots.end())
    throw Error(ErrorCode::InvalidArgument, "campaign has no snapshot at budget " + std::to_string(budget));
  CampaignRecord out;
  out.formula_text = rec.formula_text;
  out.domain = rec.domain;
  out.names = rec.names;
  out.config = rec.config;
  out.config.budget = budget;
  out.config.snapshots.clear();
  for (const auto& h : rec.history)
    if (h.iteration <= budget) out.history.push_back(h);
  out.surrogate = snap->second;
  return out;
}

bool BenchmarkReport::checks_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CellResult& BenchmarkReport::cell(Strategy s, std::size_t budget) const {
  for (const auto& c : cells)
    if (c.strategy == s && c.budget == budget) return c;
  throw Error(ErrorCode::InvalidArgument, std::string("no cell for ") + to_string(s) + " at " + std::to_string(budget));
}

json BenchmarkReport::to_json(bool include_timing) const {
  json cells_j = json::array();
  for (const auto& c : cells) {
    json e = {{"strategy", to_string(c.strategy)},
              {"budget", c.budget},
              {"seeds", c.seeds},
              {"rmse", c.rmse},
              {"mean", c.mean},
              {"std", c.stddev},
              {"median", c.median},
              {"min", c.min},
              {"max", c.max},
              {"failures", c.failures},
              {"campaigns", c.campaign_files}};
    if (include_timing) e["wallclock_ms"] = c.wallclock_ms;
    cells_j.push_back(std::move(e));
  }
  json checks_j = json::array();
  for (const auto& c : checks)
    checks_j.push_back({{"lhs", c.check.lhs},
                        {"op", c.check.op},
                        {"rhs", c.check.rhs},
                        {"factor", c.check.factor},
                        {"stat", c.check.stat},
                        {"budget", c.budget},
                        {"lhs_value", c.lhs_value},
                        {"rhs_value", c.rhs_value},
                        {"passed", c.passed}});
  return {{"config", config.to_json()},
          {"truth_failures", truth_failures},
          {"cells", cells_j},
          {"checks", checks_j},
          {"checks_passed", checks_passed()}};
}

std::string BenchmarkReport::rmse_csv() const {
  std::ostringstream os;
  os << "strategy,budget,runs,median,mean,std,min,max,failures\n";
  for (const auto& c : cells) {
    os << to_string(c.strategy) << ',' << c.budget << ',' << c.rmse.size() << ',' << detail::format_number(c.median)
       << ',' << detail::format_number(c.mean) << ',' << detail::format_number(c.stddev) << ','
       << detail::format_number(c.min) << ',' << detail::format_number(c.max) << ',' << c.failures << '\n';
  }
  return os.str();
}

namespace {

void summarize(CellResult& c) {
  std::vector<double> v = c.rmse;
  const double n = static_cast<double>(v.size());
  c.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - c.mean) * (x - c.mean);
  c.stddev = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  c.median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  c.min = v.front();
  c.max = v.back();
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const Formula formula = cfg.formula();
  const Domain dom = cfg.make_domain();
  auto bb = cfg.make_blackbox();
  const bool write = !out_dir.empty();
  if (write) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  }

  BenchmarkReport report;
  report.config = cfg;
  const GroundTruth truth = GroundTruth::evaluate(formula, *bb, uniform_design(dom, cfg.test_points));
  report.truth_failures = truth.failures();

  std::optional<Surrogate> field_model;
  const std::size_t field_budget = cfg.field && cfg.field->budget ? cfg.field->budget : cfg.budgets.back();
  const Strategy field_strategy =
      cfg.field ? strategy_from_string(cfg.field->strategy) : cfg.strategies.front();

  auto campaign_path = [&](Strategy s, std::size_t n, std::uint64_t sd) {
    return "campaign-" + std::string(to_string(s)) + "-" + std::to_string(n) + "-" + std::to_string(sd) + ".json";
  };

  for (Strategy s : cfg.strategies) {
    std::vector<CellResult> cells(cfg.budgets.size());
    for (std::size_t b = 0; b < cfg.budgets.size(); ++b) {
      cells[b].strategy = s;
      cells[b].budget = cfg.budgets[b];
    }
    for (std::size_t rep = 0; rep < cfg.runs(s); ++rep) {
      const std::uint64_t sd = cfg.run_seed(rep);
      auto score = [&](std::size_t b, const CampaignRecord& rec, double ms) {
        CellResult& c = cells[b];
        c.seeds.push_back(sd);
        c.rmse.push_back(test_rmse(*rec.surrogate, truth).rmse);
        c.failures += rec.failures();
        c.wallclock_ms += ms;
        if (s == field_strategy && c.budget == field_budget && !field_model) field_model = rec.surrogate;
        if (write && cfg.write_campaigns) {
          std::string name = campaign_path(s, c.budget, sd);
          write_file(out_dir / name, rec.to_json().dump(1) + "\n");
          c.campaign_files.push_back(name);
        }
      };
      try {
        if (s == Strategy::Mepe) {
          CampaignConfig cc = cfg.campaign(s, cfg.budgets.back(), sd);
          cc.snapshots = cfg.budgets;
          auto t0 = std::chrono::steady_clock::now();
          CampaignRecord full = run_campaign(formula, dom, *bb, cc);
          const double ms = elapsed_ms(t0);
          for (std::size_t b = 0; b < cfg.budgets.size(); ++b)
            score(b, truncate_campaign(full, cfg.budgets[b]), ms);
        } else {
          for (std::size_t b = 0; b < cfg.budgets.size(); ++b) {
            auto t0 = std::chrono::steady_clock::now();
            CampaignRecord rec = run_campaign(formula, dom, *bb, cfg.campaign(s, cfg.budgets[b], sd));
            score(b, rec, elapsed_ms(t0));
          }
        }
      } catch (const Error& e) {
        std::string where = cfg.scenario.empty() ? std::string() : "scenario " + cfg.scenario + ", ";
        throw Error(e.code(), where + to_string(s) + " seed " + std::to_string(sd) + ": " + e.what());
      }
    }
    for (auto& c : cells) {
      c.wallclock_ms /= static_cast<double>(c.rmse.size());
      summarize(c);
      report.cells.push_back(std::move(c));
    }
  }

  for (const auto& ck : cfg.checks) {
    std::vector<std::size_t> bs = ck.budgets.empty() ? cfg.budgets : ck.budgets;
    for (std::size_t b : bs) {
      const double l = stat_of(report.cell(strategy_from_string(ck.lhs), b), ck.stat);
      const double r = ck.factor * stat_of(report.cell(strategy_from_string(ck.rhs), b), ck.stat);
      report.checks.push_back({ck, b, l, r, ck.op == "<" ? l < r : l <= r});
    }
  }

  if (write) {
    write_file(out_dir / "report.json", report.to_json().dump(2) + "\n");
    write_file(out_dir / "rmse.csv", report.rmse_csv());
    if (field_model) {
      std::vector<std::size_t> res = cfg.field && !cfg.field->resolution.empty()
                                         ? cfg.field->resolution
                                         : std::vector<std::size_t>(dom.dim(), dom.dim() == 1 ? 200 : 50);
      write_file(out_dir / "field.csv", export_field_csv(*field_model, dom, res));
    }
  }
  return report;
}

std::string export_field_csv(const Surrogate& s, const Domain& dom, std::span<const std::size_t> resolution) {
  DesignMatrix g = grid_design(dom, resolution);
  std::ostringstream os;
  for (const auto& n : dom.names()) os << n << ',';
  os << "mean,variance\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.row(i);
    Prediction p = s.predict(x);
    for (double v : x) os << detail::format_number(v) << ',';
    os << detail::format_number(p.mean) << ',' << detail::format_number(p.variance) << '\n';
  }
  return os.str();
}

}  // namespace stlad
