#include <cstring>
#include <fstream>
#include <sstream>

#include "stlad/acquisition.hpp"
#include "stlad/agm.hpp"
#include "stlad/bench.hpp"
#include "stlad/blackbox.hpp"
#include "stlad/design.hpp"
#include "stlad/error.hpp"
#include "stlad/gp.hpp"
#include "stlad/stl.hpp"
#include "stlad/stlad.h"

using nlohmann::json;

struct stlad_formula {
  stlad::Formula f;
};
struct stlad_trace {
  stlad::Trace t;
};
struct stlad_domain {
  stlad::Domain d;
};
struct stlad_surrogate {
  stlad::Surrogate s;
};
struct stlad_blackbox {
  std::unique_ptr<stlad::BlackBox> bb;
};
struct stlad_campaign {
  stlad::CampaignRecord rec;
};

namespace {

thread_local std::string g_last_error;
thread_local std::size_t g_error_line = 0, g_error_column = 0;

stlad_status code_of(stlad::ErrorCode c) {
  using stlad::ErrorCode;
  switch (c) {
    case ErrorCode::InvalidArgument: return STLAD_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return STLAD_ERR_PARSE;
    case ErrorCode::Horizon: return STLAD_ERR_HORIZON;
    case ErrorCode::Io: return STLAD_ERR_IO;
    case ErrorCode::Numeric: return STLAD_ERR_NUMERIC;
    case ErrorCode::Config: return STLAD_ERR_CONFIG;
    case ErrorCode::BlackBoxCrash: return STLAD_ERR_BLACKBOX_CRASH;
    case ErrorCode::BlackBoxTimeout: return STLAD_ERR_BLACKBOX_TIMEOUT;
    case ErrorCode::BlackBoxProtocol: return STLAD_ERR_BLACKBOX_PROTOCOL;
    case ErrorCode::BlackBoxRemote: return STLAD_ERR_BLACKBOX_REMOTE;
  }
  return STLAD_ERR_INTERNAL;
}

stlad_status fail(stlad_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs fn, translating exceptions into status codes.
template <class Fn>
stlad_status guard(Fn&& fn) {
  g_last_error.clear();
  g_error_line = g_error_column = 0;
  try {
    fn();
    return STLAD_OK;
  } catch (const stlad::ParseError& e) {
    g_error_line = e.line();
    g_error_column = e.column();
    return fail(STLAD_ERR_PARSE, e.what());
  } catch (const stlad::Error& e) {
    return fail(code_of(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(STLAD_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(STLAD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(STLAD_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw stlad::Error(stlad::ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

void copy_rows(const stlad::DesignMatrix& D, double* out) {
  for (Eigen::Index i = 0; i < D.points.rows(); ++i)
    for (Eigen::Index j = 0; j < D.points.cols(); ++j) *out++ = D.points(i, j);
}

json trace_json(const stlad::Trace& t) {
  json ch = json::object();
  for (const auto& [k, v] : t.channels()) ch[k] = v;
  return {{"dt", t.dt()}, {"channels", ch}};
}

}  // namespace

extern "C" {

const char* stlad_version(void) { return "0.1.0"; }

const char* stlad_status_name(stlad_status status) {
  switch (status) {
    case STLAD_OK: return "ok";
    case STLAD_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case STLAD_ERR_PARSE: return "parse";
    case STLAD_ERR_HORIZON: return "horizon";
    case STLAD_ERR_IO: return "io";
    case STLAD_ERR_NUMERIC: return "numeric";
    case STLAD_ERR_CONFIG: return "config";
    case STLAD_ERR_BLACKBOX_CRASH: return "blackbox-crash";
    case STLAD_ERR_BLACKBOX_TIMEOUT: return "blackbox-timeout";
    case STLAD_ERR_BLACKBOX_PROTOCOL: return "blackbox-protocol";
    case STLAD_ERR_BLACKBOX_REMOTE: return "blackbox-remote";
    case STLAD_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* stlad_last_error(void) { return g_last_error.c_str(); }

void stlad_last_error_location(size_t* line, size_t* column) {
  if (line) *line = g_error_line;
  if (column) *column = g_error_column;
}

void stlad_string_free(char* s) { std::free(s); }

// Formulas

stlad_status stlad_formula_parse(const char* text, stlad_formula** out) {
  return guard([&] {
    require(text && out, "null argument");
    *out = new stlad_formula{stlad::parse_formula(text)};
  });
}

stlad_status stlad_formula_load(const char* path, stlad_formula** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new stlad_formula{stlad::load_formula(path)};
  });
}

stlad_status stlad_formula_to_string(const stlad_formula* f, char** out) {
  return guard([&] {
    require(f && out, "null argument");
    *out = dup_string(stlad::to_string(f->f));
  });
}

stlad_status stlad_formula_warnings(const stlad_formula* f, char** out_json) {
  return guard([&] {
    require(f && out_json, "null argument");
    *out_json = dup_string(json(stlad::range_warnings(f->f)).dump());
  });
}

stlad_status stlad_formula_horizon(const stlad_formula* f, double dt, size_t* steps) {
  return guard([&] {
    require(f && steps, "null argument");
    *steps = stlad::horizon_steps(f->f, dt);
  });
}

void stlad_formula_free(stlad_formula* f) { delete f; }

// Traces

stlad_status stlad_trace_load(const char* path, stlad_trace** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new stlad_trace{stlad::load_trace(path)};
  });
}

stlad_status stlad_trace_from_json(const char* text, stlad_trace** out) {
  return guard([&] {
    require(text && out, "null argument");
    json j = json::parse(text);
    stlad::Trace::ChannelMap ch;
    for (auto& [k, v] : j.at("channels").items()) ch.emplace(k, v.get<std::vector<double>>());
    *out = new stlad_trace{stlad::Trace(std::move(ch), j.at("dt").get<double>())};
  });
}

stlad_status stlad_trace_to_json(const stlad_trace* t, char** out) {
  return guard([&] {
    require(t && out, "null argument");
    *out = dup_string(trace_json(t->t).dump());
  });
}

size_t stlad_trace_length(const stlad_trace* t) { return t ? t->t.length() : 0; }
double stlad_trace_dt(const stlad_trace* t) { return t ? t->t.dt() : 0.0; }
void stlad_trace_free(stlad_trace* t) { delete t; }

// Monitoring

stlad_status stlad_robustness(const stlad_formula* f, const stlad_trace* t, size_t step, double* out) {
  return guard([&] {
    require(f && t && out, "null argument");
    *out = stlad::agm_robustness(f->f, t->t, step).value;
  });
}

stlad_status stlad_bool_sat(const stlad_formula* f, const stlad_trace* t, size_t step, int* out) {
  return guard([&] {
    require(f && t && out, "null argument");
    *out = stlad::bool_sat(f->f, t->t, step) ? 1 : 0;
  });
}

stlad_status stlad_robustness_signal(const stlad_formula* f, const stlad_trace* t, double* out, size_t capacity,
                                     size_t* count) {
  return guard([&] {
    require(f && t && count, "null argument");
    auto sig = stlad::agm_signal(f->f, t->t);
    *count = sig.size();
    if (out) {
      require(capacity >= sig.size(), "output buffer too small");
      std::copy(sig.begin(), sig.end(), out);
    }
  });
}

// Domains and designs

stlad_status stlad_domain_load(const char* path, stlad_domain** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = new stlad_domain{stlad::Domain::load(path)};
  });
}

stlad_status stlad_domain_from_json(const char* text, stlad_domain** out) {
  return guard([&] {
    require(text && out, "null argument");
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw stlad::Error(stlad::ErrorCode::Config, std::string("domain: ") + e.what());
    }
    *out = new stlad_domain{stlad::Domain::from_json(j)};
  });
}

stlad_status stlad_domain_to_json(const stlad_domain* d, char** out) {
  return guard([&] {
    require(d && out, "null argument");
    *out = dup_string(d->d.to_json().dump());
  });
}

size_t stlad_domain_dim(const stlad_domain* d) { return d ? d->d.dim() : 0; }

stlad_status stlad_domain_contains(const stlad_domain* d, const double* x, size_t dim, int* out) {
  return guard([&] {
    require(d && x && out, "null argument");
    require(dim == d->d.dim(), "dimension mismatch");
    *out = d->d.contains(std::span<const double>(x, dim)) ? 1 : 0;
  });
}

void stlad_domain_free(stlad_domain* d) { delete d; }

stlad_status stlad_design_uniform(const stlad_domain* d, size_t n, double* out) {
  return guard([&] {
    require(d && out, "null argument");
    copy_rows(stlad::uniform_design(d->d, n), out);
  });
}

stlad_status stlad_design_glp_unit(size_t n, size_t dim, double* out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    copy_rows(stlad::glp_unit_design(n, dim), out);
  });
}

stlad_status stlad_design_random(const stlad_domain* d, size_t n, uint64_t seed, double* out) {
  return guard([&] {
    require(d && out, "null argument");
    copy_rows(stlad::random_design(d->d, n, seed), out);
  });
}

stlad_status stlad_design_pool(const stlad_domain* d, size_t n, uint64_t seed, double* out) {
  return guard([&] {
    require(d && out, "null argument");
    copy_rows(stlad::candidate_pool(d->d, n, seed), out);
  });
}

stlad_status stlad_glp_generator(size_t n, size_t dim, size_t* out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    auto g = stlad::glp_generator(n, dim);
    std::copy(g.begin(), g.end(), out);
  });
}

stlad_status stlad_discrepancy(const double* points, size_t n, size_t dim, double* out) {
  return guard([&] {
    require(points && out, "null argument");
    Eigen::MatrixXd P(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < dim; ++j) P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points[i * dim + j];
    *out = stlad::centered_l2_discrepancy(P);
  });
}

stlad_status stlad_domain_map(const stlad_domain* d, const double* unit, size_t n, double* out) {
  return guard([&] {
    require(d && unit && out, "null argument");
    const size_t dim = d->d.dim();
    for (size_t i = 0; i < n; ++i) {
      auto x = d->d.inverse_rosenblatt(std::span<const double>(unit + i * dim, dim));
      std::copy(x.begin(), x.end(), out + i * dim);
    }
  });
}

// Black-boxes

stlad_status stlad_blackbox_builtin(const char* id, stlad_blackbox** out) {
  return guard([&] {
    require(id && out, "null argument");
    *out = new stlad_blackbox{std::make_unique<stlad::BuiltinBlackBox>(stlad::builtin_kind_from_string(id))};
  });
}

stlad_status stlad_blackbox_external(const char* command, double timeout_s, stlad_blackbox** out) {
  return guard([&] {
    require(command && out, "null argument");
    require(timeout_s > 0.0, "timeout must be positive");
    auto ms = std::chrono::milliseconds(static_cast<long long>(std::ceil(timeout_s * 1000.0)));
    *out = new stlad_blackbox{std::make_unique<stlad::ExternalBlackBox>(command, ms)};
  });
}

stlad_status stlad_blackbox_evaluate(stlad_blackbox* bb, const double* x, size_t dim, stlad_trace** out) {
  return guard([&] {
    require(bb && (x || dim == 0) && out, "null argument");
    *out = new stlad_trace{bb->bb->evaluate(std::span<const double>(x, dim))};
  });
}

stlad_status stlad_blackbox_describe(const stlad_blackbox* bb, char** out) {
  return guard([&] {
    require(bb && out, "null argument");
    *out = dup_string(bb->bb->describe());
  });
}

void stlad_blackbox_free(stlad_blackbox* bb) { delete bb; }

stlad_status stlad_protocol_check(const char* command, double timeout_s, const double* x, size_t dim,
                                  char** report_json) {
  json report = {{"command", command ? command : ""}, {"steps", json::array()}};
  stlad_status first = STLAD_OK;
  std::string first_msg;
  auto step = [&](const char* name, auto&& fn) {
    if (first != STLAD_OK) return;
    json entry = {{"step", name}};
    stlad_status s = guard([&] { fn(entry); });
    entry["ok"] = s == STLAD_OK;
    if (s != STLAD_OK) {
      entry["error"] = stlad_status_name(s);
      entry["message"] = g_last_error;
      first = s;
      first_msg = g_last_error;
    }
    report["steps"].push_back(std::move(entry));
  };
  std::unique_ptr<stlad::ExternalBlackBox> bb;
  step("spawn", [&](json&) {
    require(command != nullptr && timeout_s > 0.0, "command and a positive timeout are required");
    bb = std::make_unique<stlad::ExternalBlackBox>(
        command, std::chrono::milliseconds(static_cast<long long>(std::ceil(timeout_s * 1000.0))));
  });
  step("handshake", [&](json& e) {
    bb->start();
    e["handshake"] = bb->handshake();
  });
  if (dim > 0) {
    step("evaluate", [&](json& e) {
      require(x != nullptr, "null point");
      stlad::Trace t = bb->evaluate(std::span<const double>(x, dim));
      e["x"] = std::vector<double>(x, x + dim);
      e["dt"] = t.dt();
      e["length"] = t.length();
      json names = json::array();
      for (const auto& [k, v] : t.channels()) names.push_back(k);
      e["channels"] = names;
    });
    step("repeat", [&](json& e) {
      stlad::Trace a = bb->evaluate(std::span<const double>(x, dim));
      stlad::Trace b = bb->evaluate(std::span<const double>(x, dim));
      e["deterministic"] = a == b;
    });
  }
  report["ok"] = first == STLAD_OK;
  if (report_json) *report_json = dup_string(report.dump(2));
  g_last_error = first_msg;
  return first;
}

// Scenarios

stlad_status stlad_scenario_list(char** out_json) {
  return guard([&] {
    require(out_json != nullptr, "null argument");
    json arr = json::array();
    for (const auto& id : stlad::builtin_scenario_ids()) {
      auto sc = stlad::builtin_scenario(id);
      arr.push_back({{"id", id}, {"formula", sc.formula_text}, {"domain", sc.domain.to_json()}});
    }
    *out_json = dup_string(arr.dump(2));
  });
}

stlad_status stlad_scenario_load(const char* id, stlad_formula** formula, stlad_domain** domain,
                                 stlad_blackbox** blackbox) {
  return guard([&] {
    require(id != nullptr, "null argument");
    auto sc = stlad::builtin_scenario(id);
    auto f = std::make_unique<stlad_formula>(stlad_formula{stlad::parse_formula(sc.formula_text)});
    auto d = std::make_unique<stlad_domain>(stlad_domain{sc.domain});
    auto b = std::make_unique<stlad_blackbox>(stlad_blackbox{std::make_unique<stlad::BuiltinBlackBox>(sc.blackbox)});
    if (formula) *formula = f.release();
    if (domain) *domain = d.release();
    if (blackbox) *blackbox = b.release();
  });
}

// Campaigns

void stlad_campaign_options_init(stlad_campaign_options* opts) {
  if (!opts) return;
  stlad::CampaignConfig c;
  opts->strategy = "mepe";
  opts->budget = c.budget;
  opts->n_init = c.n_init;
  opts->pool_size = c.pool_size;
  opts->seed = c.seed;
  opts->alpha_rule = "squared";
  opts->kernel = "matern52";
  opts->fit_restarts = c.fit_restarts;
  opts->refit_restarts = c.refit_restarts;
  opts->max_iterations = c.max_iterations;
}

stlad_status stlad_campaign_run(const stlad_formula* f, const stlad_domain* d, stlad_blackbox* bb,
                                const stlad_campaign_options* opts, stlad_campaign** out) {
  return guard([&] {
    require(f && d && bb && opts && out, "null argument");
    stlad::CampaignConfig c;
    c.strategy = stlad::strategy_from_string(opts->strategy ? opts->strategy : "mepe");
    c.budget = opts->budget;
    c.n_init = opts->n_init;
    c.pool_size = opts->pool_size;
    c.seed = opts->seed;
    c.alpha_rule = stlad::alpha_rule_from_string(opts->alpha_rule ? opts->alpha_rule : "squared");
    c.kernel = stlad::kernel_type_from_string(opts->kernel ? opts->kernel : "matern52");
    c.fit_restarts = opts->fit_restarts;
    c.refit_restarts = opts->refit_restarts;
    c.max_iterations = opts->max_iterations;
    *out = new stlad_campaign{stlad::run_campaign(f->f, d->d, *bb->bb, c)};
  });
}

stlad_status stlad_campaign_to_json(const stlad_campaign* c, char** out) {
  return guard([&] {
    require(c && out, "null argument");
    *out = dup_string(c->rec.to_json().dump(1));
  });
}

stlad_status stlad_campaign_from_json(const char* text, stlad_campaign** out) {
  return guard([&] {
    require(text && out, "null argument");
    *out = new stlad_campaign{stlad::CampaignRecord::from_json(json::parse(text))};
  });
}

stlad_status stlad_campaign_history_csv(const stlad_campaign* c, char** out) {
  return guard([&] {
    require(c && out, "null argument");
    *out = dup_string(c->rec.history_csv());
  });
}

size_t stlad_campaign_evaluations(const stlad_campaign* c) { return c ? c->rec.history.size() : 0; }

stlad_status stlad_campaign_surrogate(const stlad_campaign* c, stlad_surrogate** out) {
  return guard([&] {
    require(c && out, "null argument");
    require(c->rec.surrogate.has_value(), "campaign has no surrogate");
    *out = new stlad_surrogate{*c->rec.surrogate};
  });
}

void stlad_campaign_free(stlad_campaign* c) { delete c; }

// Surrogates

stlad_status stlad_surrogate_predict(const stlad_surrogate* s, const double* x, size_t dim, double* mean,
                                     double* variance) {
  return guard([&] {
    require(s && x && mean && variance, "null argument");
    require(dim == s->s.data().dim(), "dimension mismatch");
    auto p = s->s.predict(std::span<const double>(x, dim));
    *mean = p.mean;
    *variance = p.variance;
  });
}

stlad_status stlad_surrogate_to_json(const stlad_surrogate* s, char** out) {
  return guard([&] {
    require(s && out, "null argument");
    *out = dup_string(s->s.to_json().dump());
  });
}

stlad_status stlad_surrogate_from_json(const char* text, stlad_surrogate** out) {
  return guard([&] {
    require(text && out, "null argument");
    *out = new stlad_surrogate{stlad::Surrogate::from_json(json::parse(text))};
  });
}

void stlad_surrogate_free(stlad_surrogate* s) { delete s; }

stlad_status stlad_field_export_csv(const stlad_surrogate* s, const stlad_domain* d, const size_t* resolution,
                                    size_t dim, char** out) {
  return guard([&] {
    require(s && d && resolution && out, "null argument");
    require(dim == d->d.dim(), "resolution needs one entry per dimension");
    *out = dup_string(stlad::export_field_csv(s->s, d->d, std::span<const size_t>(resolution, dim)));
  });
}

// Benchmark

stlad_status stlad_bench_run(const char* config_json, const char* base_dir, const char* out_dir, char** report_json,
                             int* checks_passed) {
  return guard([&] {
    require(config_json != nullptr, "null argument");
    json j;
    try {
      j = json::parse(config_json);
    } catch (const json::exception& e) {
      throw stlad::Error(stlad::ErrorCode::Config, std::string("benchmark config: ") + e.what());
    }
    auto cfg = stlad::BenchmarkConfig::from_json(j, base_dir ? base_dir : "");
    auto report = stlad::run_benchmark(cfg, out_dir ? out_dir : "");
    if (report_json) *report_json = dup_string(report.to_json().dump(2));
    if (checks_passed) *checks_passed = report.checks_passed() ? 1 : 0;
  });
}

}  // extern "C"
