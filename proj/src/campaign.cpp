#include <cmath>
#include <limits>
#include <sstream>

#include "numfmt.hpp"
#include "stlad/acquisition.hpp"
#include "stlad/error.hpp"

namespace stlad {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::string csv_number(double v) { return std::isfinite(v) ? detail::format_number(v) : std::string(); }

}  // namespace

json CampaignConfig::to_json() const {
  return {{"strategy", stlad::to_string(strategy)},
          {"budget", budget},
          {"n_init", n_init},
          {"pool_size", pool_size},
          {"seed", seed},
          {"alpha_rule", stlad::to_string(alpha_rule)},
          {"kernel", stlad::to_string(kernel)},
          {"fit_restarts", fit_restarts},
          {"refit_restarts", refit_restarts},
          {"max_iterations", max_iterations},
          {"snapshots", snapshots}};
}

CampaignConfig CampaignConfig::from_json(const json& j) {
  try {
    CampaignConfig c;
    if (!j.is_object()) throw Error(ErrorCode::Config, "campaign config must be a JSON object");
    c.strategy = strategy_from_string(get_or<std::string>(j, "strategy", "mepe"));
    c.budget = get_or<std::size_t>(j, "budget", c.budget);
    c.n_init = get_or<std::size_t>(j, "n_init", c.n_init);
    c.pool_size = get_or<std::size_t>(j, "pool_size", c.pool_size);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.alpha_rule = alpha_rule_from_string(get_or<std::string>(j, "alpha_rule", "squared"));
    c.kernel = kernel_type_from_string(get_or<std::string>(j, "kernel", stlad::to_string(c.kernel)));
    c.fit_restarts = get_or<std::size_t>(j, "fit_restarts", c.fit_restarts);
    c.refit_restarts = get_or<std::size_t>(j, "refit_restarts", c.refit_restarts);
    c.max_iterations = get_or<std::size_t>(j, "max_iterations", c.max_iterations);
    c.snapshots = get_or<std::vector<std::size_t>>(j, "snapshots", {});
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("campaign config: ") + e.what());
  }
}

std::size_t CampaignRecord::failures() const {
  std::size_t n = 0;
  for (const auto& h : history)
    if (!h.y) ++n;
  return n;
}

std::vector<std::vector<double>> CampaignRecord::points() const {
  std::vector<std::vector<double>> out;
  out.reserve(history.size());
  for (const auto& h : history) out.push_back(h.x);
  return out;
}

json CampaignRecord::to_json() const {
  json hist = json::array();
  for (const auto& h : history) {
    json e = {{"iteration", h.iteration},
              {"x", h.x},
              {"y", h.y ? json(*h.y) : json(nullptr)},
              {"alpha", number_or_null(h.alpha)},
              {"epe", number_or_null(h.epe)},
              {"predicted", number_or_null(h.predicted)},
              {"wallclock_ms", h.wallclock_ms}};
    if (!h.error.empty()) e["error"] = h.error;
    hist.push_back(std::move(e));
  }
  json snaps = json::object();
  for (const auto& [n, s] : snapshots) snaps[std::to_string(n)] = s.to_json();
  return {{"formula", formula_text},
          {"domain", domain},
          {"config", config.to_json()},
          {"failures", failures()},
          {"history", hist},
          {"surrogate", surrogate ? surrogate->to_json() : json(nullptr)},
          {"snapshots", snaps}};
}

CampaignRecord CampaignRecord::from_json(const json& j) {
  try {
    CampaignRecord r;
    r.formula_text = j.at("formula").get<std::string>();
    r.domain = j.at("domain");
    r.names = Domain::from_json(r.domain).names();
    r.config = CampaignConfig::from_json(j.at("config"));
    for (const auto& e : j.at("history")) {
      IterationRecord h;
      h.iteration = e.at("iteration").get<std::size_t>();
      h.x = e.at("x").get<std::vector<double>>();
      if (!e.at("y").is_null()) h.y = e.at("y").get<double>();
      h.alpha = number_or_nan(e.at("alpha"));
      h.epe = number_or_nan(e.at("epe"));
      h.predicted = number_or_nan(e.value("predicted", json(nullptr)));
      h.wallclock_ms = e.at("wallclock_ms").get<double>();
      h.error = e.value("error", std::string());
      r.history.push_back(std::move(h));
    }
    if (!j.at("surrogate").is_null()) r.surrogate = Surrogate::from_json(j.at("surrogate"));
    if (j.contains("snapshots"))
      for (auto& [k, v] : j.at("snapshots").items()) r.snapshots.emplace(std::stoul(k), Surrogate::from_json(v));
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("campaign record: ") + e.what());
  }
}

std::string CampaignRecord::history_csv() const {
  std::ostringstream os;
  os << "iteration";
  for (const auto& n : names) os << ',' << n;
  os << ",y,alpha,epe,wallclock_ms\n";
  for (const auto& h : history) {
    os << h.iteration;
    for (double v : h.x) os << ',' << detail::format_number(v);
    os << ',' << (h.y ? detail::format_number(*h.y) : std::string());
    os << ',' << csv_number(h.alpha) << ',' << csv_number(h.epe) << ',' << csv_number(h.wallclock_ms) << '\n';
  }
  return os.str();
}

}  // namespace stlad
