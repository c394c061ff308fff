// stlad command-line tool. Uses only the public C API.
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stlad/stlad.h"

using nlohmann::json;

namespace {

// Exit codes shared by every verb.
constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;  // violated formula, failed benchmark check
constexpr int kExitError = 2;   // config, parse, I/O and other errors
constexpr int kExitBlackBox = 3;

struct Failure {
  stlad_status status;
  std::string message;
};

int exit_code_for(stlad_status s) {
  switch (s) {
    case STLAD_ERR_BLACKBOX_CRASH:
    case STLAD_ERR_BLACKBOX_TIMEOUT:
    case STLAD_ERR_BLACKBOX_PROTOCOL:
    case STLAD_ERR_BLACKBOX_REMOTE: return kExitBlackBox;
    default: return kExitError;
  }
}

void check(stlad_status s) {
  if (s == STLAD_OK) return;
  throw Failure{s, stlad_last_error()};
}

struct Deleter {
  void operator()(stlad_formula* p) const { stlad_formula_free(p); }
  void operator()(stlad_trace* p) const { stlad_trace_free(p); }
  void operator()(stlad_domain* p) const { stlad_domain_free(p); }
  void operator()(stlad_surrogate* p) const { stlad_surrogate_free(p); }
  void operator()(stlad_blackbox* p) const { stlad_blackbox_free(p); }
  void operator()(stlad_campaign* p) const { stlad_campaign_free(p); }
  void operator()(char* p) const { stlad_string_free(p); }
};
template <class T>
using Handle = std::unique_ptr<T, Deleter>;

std::string take(char* s) {
  Handle<char> h(s);
  return s ? std::string(s) : std::string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{STLAD_ERR_IO, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{STLAD_ERR_IO, "cannot write " + path};
  out << text;
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> x;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      x.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Failure{STLAD_ERR_INVALID_ARGUMENT, "bad number '" + item + "' in point"};
    }
  }
  return x;
}

std::vector<std::string> domain_names(const stlad_domain* d) {
  char* s = nullptr;
  check(stlad_domain_to_json(d, &s));
  json j = json::parse(take(s));
  std::vector<std::string> names;
  for (const auto& dim : j.at("dimensions")) names.push_back(dim.at("name").get<std::string>());
  return names;
}

std::string number(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Formula/domain/black-box selection shared by campaign-style verbs.
struct ProblemArgs {
  std::string scenario, formula_file, formula_text, domain_file, blackbox, command;
  double timeout_s = 30.0;

  void add(CLI::App* app) {
    app->add_option("--scenario", scenario, "Builtin scenario (reach-arc, pick-mass, slide-shifted)");
    app->add_option("--formula", formula_file, "Formula file");
    app->add_option("--formula-text", formula_text, "Formula given inline");
    app->add_option("--domain", domain_file, "Domain JSON file");
    app->add_option("--blackbox", blackbox, "Builtin black-box id");
    app->add_option("--command", command, "External simulator command (JSON lines on stdin/stdout)");
    app->add_option("--timeout", timeout_s, "Per-evaluation timeout for external simulators, seconds");
  }

  void load(Handle<stlad_formula>& f, Handle<stlad_domain>& d, Handle<stlad_blackbox>& b) const {
    if (!scenario.empty()) {
      stlad_formula* pf = nullptr;
      stlad_domain* pd = nullptr;
      stlad_blackbox* pb = nullptr;
      check(stlad_scenario_load(scenario.c_str(), &pf, &pd, &pb));
      f.reset(pf);
      d.reset(pd);
      b.reset(pb);
    }
    if (!formula_file.empty() || !formula_text.empty()) {
      stlad_formula* pf = nullptr;
      check(formula_file.empty() ? stlad_formula_parse(formula_text.c_str(), &pf)
                                 : stlad_formula_load(formula_file.c_str(), &pf));
      f.reset(pf);
    }
    if (!domain_file.empty()) {
      stlad_domain* pd = nullptr;
      check(stlad_domain_load(domain_file.c_str(), &pd));
      d.reset(pd);
    }
    if (!blackbox.empty() || !command.empty()) {
      stlad_blackbox* pb = nullptr;
      check(command.empty() ? stlad_blackbox_builtin(blackbox.c_str(), &pb)
                            : stlad_blackbox_external(command.c_str(), timeout_s, &pb));
      b.reset(pb);
    }
    if (!f) throw Failure{STLAD_ERR_CONFIG, "no formula: use --scenario, --formula or --formula-text"};
    if (!d) throw Failure{STLAD_ERR_CONFIG, "no domain: use --scenario or --domain"};
    if (!b) throw Failure{STLAD_ERR_CONFIG, "no black-box: use --scenario, --blackbox or --command"};
  }
};

int cmd_monitor(const std::string& formula_file, const std::string& formula_text, const std::string& trace_path,
                std::size_t step, bool as_json) {
  stlad_formula* pf = nullptr;
  if (formula_file.empty() == formula_text.empty())
    throw Failure{STLAD_ERR_CONFIG, "give exactly one of --formula or --formula-text"};
  check(formula_file.empty() ? stlad_formula_parse(formula_text.c_str(), &pf)
                             : stlad_formula_load(formula_file.c_str(), &pf));
  Handle<stlad_formula> f(pf);
  char* w = nullptr;
  check(stlad_formula_warnings(f.get(), &w));
  json warnings = json::parse(take(w));
  for (const auto& m : warnings) std::cerr << "warning: " << m.get<std::string>() << "\n";
  stlad_trace* pt = nullptr;
  check(stlad_trace_load(trace_path.c_str(), &pt));
  Handle<stlad_trace> t(pt);
  double rob = 0.0;
  int sat = 0;
  check(stlad_robustness(f.get(), t.get(), step, &rob));
  check(stlad_bool_sat(f.get(), t.get(), step, &sat));
  if (as_json) {
    std::cout << json{{"robustness", rob}, {"satisfied", sat != 0}, {"step", step}}.dump() << "\n";
  } else {
    std::cout << number(rob) << (sat ? " satisfied" : " violated") << "\n";
  }
  return sat ? kExitOk : kExitFailed;
}

int cmd_design(const std::string& scenario, const std::string& domain_file, const std::string& kind, std::size_t n,
               std::uint64_t seed, const std::string& out) {
  stlad_domain* pd = nullptr;
  if (!domain_file.empty())
    check(stlad_domain_load(domain_file.c_str(), &pd));
  else if (!scenario.empty())
    check(stlad_scenario_load(scenario.c_str(), nullptr, &pd, nullptr));
  else
    throw Failure{STLAD_ERR_CONFIG, "no domain: use --scenario or --domain"};
  Handle<stlad_domain> d(pd);
  const std::size_t dim = stlad_domain_dim(d.get());
  std::vector<double> pts(n * dim);
  std::vector<std::string> names = domain_names(d.get());
  if (kind == "uniform") {
    check(stlad_design_uniform(d.get(), n, pts.data()));
  } else if (kind == "glp") {
    check(stlad_design_glp_unit(n, dim, pts.data()));
    for (std::size_t j = 0; j < dim; ++j) names[j] = "u" + std::to_string(j + 1);
  } else if (kind == "random") {
    check(stlad_design_random(d.get(), n, seed, pts.data()));
  } else if (kind == "pool") {
    check(stlad_design_pool(d.get(), n, seed, pts.data()));
  } else {
    throw Failure{STLAD_ERR_CONFIG, "unknown design kind '" + kind + "'"};
  }
  std::ostringstream os;
  for (std::size_t j = 0; j < dim; ++j) os << (j ? "," : "") << names[j];
  os << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) os << (j ? "," : "") << number(pts[i * dim + j]);
    os << "\n";
  }
  write_output(out, os.str());
  return kExitOk;
}

int cmd_campaign(const ProblemArgs& problem, stlad_campaign_options opts, const std::string& strategy,
                 const std::string& alpha_rule, const std::string& kernel, const std::string& out,
                 const std::string& history) {
  Handle<stlad_formula> f;
  Handle<stlad_domain> d;
  Handle<stlad_blackbox> b;
  problem.load(f, d, b);
  opts.strategy = strategy.c_str();
  opts.alpha_rule = alpha_rule.c_str();
  opts.kernel = kernel.c_str();
  stlad_campaign* pc = nullptr;
  check(stlad_campaign_run(f.get(), d.get(), b.get(), &opts, &pc));
  Handle<stlad_campaign> c(pc);
  char* s = nullptr;
  check(stlad_campaign_to_json(c.get(), &s));
  write_output(out, take(s) + "\n");
  if (!history.empty()) {
    check(stlad_campaign_history_csv(c.get(), &s));
    write_output(history, take(s));
  }
  return kExitOk;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir, const std::string& scenario,
              const std::vector<std::size_t>& budgets, const std::vector<std::string>& strategies,
              const std::optional<std::uint64_t>& seed, const std::optional<std::size_t>& pool_size,
              const std::optional<std::size_t>& n_init) {
  json cfg = json::object();
  std::string base;
  if (!config_path.empty()) {
    try {
      cfg = json::parse(read_file(config_path));
    } catch (const json::exception& e) {
      throw Failure{STLAD_ERR_CONFIG, config_path + ": " + e.what()};
    }
    base = std::filesystem::path(config_path).parent_path().string();
  }
  if (!scenario.empty()) cfg["scenario"] = scenario;
  if (!budgets.empty()) cfg["budgets"] = budgets;
  if (!strategies.empty()) cfg["strategies"] = strategies;
  if (seed) cfg["seed"] = *seed;
  if (pool_size) cfg["pool_size"] = *pool_size;
  if (n_init) cfg["n_init"] = *n_init;
  char* report = nullptr;
  int passed = 1;
  check(stlad_bench_run(cfg.dump().c_str(), base.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(), &report,
                        &passed));
  json r = json::parse(take(report));
  std::cout << "strategy  budget  runs  median      mean        std\n";
  for (const auto& c : r.at("cells")) {
    char line[160];
    std::snprintf(line, sizeof line, "%-8s  %6zu  %4zu  %-10.6g  %-10.6g  %.4g\n",
                  c.at("strategy").get<std::string>().c_str(), c.at("budget").get<std::size_t>(),
                  c.at("rmse").size(), c.at("median").get<double>(), c.at("mean").get<double>(),
                  c.at("std").get<double>());
    std::cout << line;
  }
  for (const auto& c : r.at("checks")) {
    std::cout << (c.at("passed").get<bool>() ? "PASS" : "FAIL") << "  " << c.at("stat").get<std::string>() << "("
              << c.at("lhs").get<std::string>() << ") " << c.at("op").get<std::string>() << " "
              << c.at("factor").get<double>() << " * " << c.at("stat").get<std::string>() << "("
              << c.at("rhs").get<std::string>() << ") at N=" << c.at("budget").get<std::size_t>() << "\n";
  }
  if (!out_dir.empty()) std::cout << "wrote " << out_dir << "/report.json\n";
  return passed ? kExitOk : kExitFailed;
}

int cmd_field(const std::string& campaign_path, const std::vector<std::size_t>& resolution, const std::string& out) {
  stlad_campaign* pc = nullptr;
  check(stlad_campaign_from_json(read_file(campaign_path).c_str(), &pc));
  Handle<stlad_campaign> c(pc);
  json rec = json::parse(read_file(campaign_path));
  stlad_domain* pd = nullptr;
  check(stlad_domain_from_json(rec.at("domain").dump().c_str(), &pd));
  Handle<stlad_domain> d(pd);
  stlad_surrogate* ps = nullptr;
  check(stlad_campaign_surrogate(c.get(), &ps));
  Handle<stlad_surrogate> s(ps);
  std::vector<std::size_t> res = resolution;
  const std::size_t dim = stlad_domain_dim(d.get());
  if (res.empty()) res.assign(dim, dim == 1 ? 200 : 50);
  if (res.size() == 1 && dim > 1) res.assign(dim, res[0]);
  char* csv = nullptr;
  check(stlad_field_export_csv(s.get(), d.get(), res.data(), res.size(), &csv));
  write_output(out, take(csv));
  return kExitOk;
}

int cmd_protocol_check(const std::string& command, double timeout_s, const std::string& point) {
  std::vector<double> x = point.empty() ? std::vector<double>{} : parse_point(point);
  char* report = nullptr;
  stlad_status s = stlad_protocol_check(command.c_str(), timeout_s, x.data(), x.size(), &report);
  std::cout << take(report) << "\n";
  if (s != STLAD_OK) {
    std::cerr << "error: " << stlad_last_error() << "\n";
    return exit_code_for(s);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal temporal logic monitoring and adaptive experiment design"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(stlad_version()));

  // monitor
  auto* mon = app.add_subcommand("monitor", "AGM robustness of a trace (exit 0 satisfied, 1 violated, 2 error)");
  std::string mon_formula, mon_text, mon_trace;
  std::size_t mon_step = 0;
  bool mon_json = false;
  mon->add_option("--formula", mon_formula, "Formula file");
  mon->add_option("--formula-text", mon_text, "Formula given inline");
  mon->add_option("--trace", mon_trace, "Trace file (.csv or .jsonl)")->required();
  mon->add_option("--time,--step", mon_step, "Evaluation step index");
  mon->add_flag("--json", mon_json, "Print a JSON object");

  // design
  auto* des = app.add_subcommand("design", "Emit a design as CSV");
  std::string des_scenario, des_domain, des_kind = "uniform", des_out;
  std::size_t des_n = 0;
  std::uint64_t des_seed = 0;
  des->add_option("--scenario", des_scenario, "Take the domain from a builtin scenario");
  des->add_option("--domain", des_domain, "Domain JSON file");
  des->add_option("--kind", des_kind, "uniform (GLP mapped into the domain), glp (unit cube), random, pool")
      ->check(CLI::IsMember({"uniform", "glp", "random", "pool"}));
  des->add_option("-n,--size", des_n, "Number of points")->required();
  des->add_option("--seed", des_seed, "Seed for random and pool designs");
  des->add_option("-o,--out", des_out, "Output file (default stdout)");

  // campaign
  auto* cam = app.add_subcommand("campaign", "Run one strategy and write the campaign record");
  ProblemArgs cam_problem;
  cam_problem.add(cam);
  stlad_campaign_options cam_opts;
  stlad_campaign_options_init(&cam_opts);
  std::string cam_strategy = "mepe", cam_alpha = "squared", cam_kernel = "matern52", cam_out, cam_history;
  cam->add_option("--strategy", cam_strategy)->check(CLI::IsMember({"mepe", "ud", "random"}));
  cam->add_option("--budget", cam_opts.budget, "Adaptive steps (mepe) or total points (ud, random)")->required();
  cam->add_option("--n-init", cam_opts.n_init);
  cam->add_option("--pool-size", cam_opts.pool_size);
  cam->add_option("--seed", cam_opts.seed);
  cam->add_option("--alpha-rule", cam_alpha)->check(CLI::IsMember({"squared", "unsquared"}));
  cam->add_option("--kernel", cam_kernel)->check(CLI::IsMember({"matern52", "se"}));
  cam->add_option("--fit-restarts", cam_opts.fit_restarts);
  cam->add_option("--refit-restarts", cam_opts.refit_restarts);
  cam->add_option("-o,--out", cam_out, "Campaign record JSON (default stdout)");
  cam->add_option("--history", cam_history, "Per-iteration CSV");

  // bench
  auto* ben = app.add_subcommand("bench", "Strategy comparison (exit 1 when a configured check fails)");
  std::string ben_config, ben_out, ben_scenario;
  std::vector<std::size_t> ben_budgets;
  std::vector<std::string> ben_strategies;
  std::optional<std::uint64_t> ben_seed;
  std::optional<std::size_t> ben_pool, ben_ninit;
  ben->add_option("--config", ben_config, "Benchmark config JSON");
  ben->add_option("-o,--out", ben_out, "Output directory");
  ben->add_option("--scenario", ben_scenario);
  ben->add_option("--budget", ben_budgets, "Budgets (repeat or comma separated)")->delimiter(',');
  ben->add_option("--strategy", ben_strategies, "Strategies (repeat or comma separated)")->delimiter(',');
  ben->add_option("--seed", ben_seed, "Master seed");
  ben->add_option("--pool-size", ben_pool);
  ben->add_option("--n-init", ben_ninit);

  // field
  auto* fld = app.add_subcommand("field", "Export a campaign surrogate over a regular grid");
  std::string fld_campaign, fld_out;
  std::vector<std::size_t> fld_res;
  fld->add_option("--campaign", fld_campaign, "Campaign record JSON")->required();
  fld->add_option("--resolution", fld_res, "Points per dimension (comma separated)")->delimiter(',');
  fld->add_option("-o,--out", fld_out, "Output CSV (default stdout)");

  // protocol-check
  auto* pc = app.add_subcommand("protocol-check", "Validate an external simulator (exit 3 on protocol failure)");
  std::string pc_command, pc_point;
  double pc_timeout = 10.0;
  pc->add_option("--command", pc_command, "Simulator command")->required();
  pc->add_option("--timeout", pc_timeout, "Seconds per reply");
  pc->add_option("--x", pc_point, "Point to evaluate, comma separated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    if (*mon) return cmd_monitor(mon_formula, mon_text, mon_trace, mon_step, mon_json);
    if (*des) return cmd_design(des_scenario, des_domain, des_kind, des_n, des_seed, des_out);
    if (*cam) return cmd_campaign(cam_problem, cam_opts, cam_strategy, cam_alpha, cam_kernel, cam_out, cam_history);
    if (*ben)
      return cmd_bench(ben_config, ben_out, ben_scenario, ben_budgets, ben_strategies, ben_seed, ben_pool, ben_ninit);
    if (*fld) return cmd_field(fld_campaign, fld_res, fld_out);
    if (*pc) return cmd_protocol_check(pc_command, pc_timeout, pc_point);
  } catch (const Failure& f) {
    std::cerr << "error (" << stlad_status_name(f.status) << "): " << f.message << "\n";
    return exit_code_for(f.status);
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
