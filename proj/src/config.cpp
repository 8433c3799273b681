#include "divcap/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace divcap {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::ConfigError, "config key '" + key + "': " + why);
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) bad(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}

double get_number(const json& obj, const std::string& where, const char* key, double fallback,
                  bool required = false) {
  const std::string name = where.empty() ? key : where + "." + key;
  if (!obj.contains(key)) {
    if (required) bad(name, "missing");
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number()) bad(name, "expected a number");
  return v.get<double>();
}

std::size_t get_count(const json& obj, const std::string& where, const char* key, std::size_t fallback) {
  const std::string name = where + "." + key;
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) bad(name, "expected a nonnegative integer");
  return static_cast<std::size_t>(v.get<long long>());
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) bad(where + "." + key, "expected true or false");
  return obj.at(key).get<bool>();
}

std::vector<double> get_numbers(const json& obj, const std::string& name) {
  if (!obj.is_array()) bad(name, "expected an array of numbers");
  std::vector<double> out;
  for (const json& v : obj) {
    if (!v.is_number()) bad(name, "expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::NonPositiveSigma:
    case ErrorCode::NonPositiveQ:
    case ErrorCode::BetaNotAboveOne:
    case ErrorCode::NonFiniteParameter:
    case ErrorCode::BadCoefficients:
    case ErrorCode::NotConcave:
    case ErrorCode::NotNondecreasing:
    case ErrorCode::NegativeAtZero:
      return true;
    default:
      return false;
  }
}

void revalidate(RunConfig& cfg) {
  cfg.params = validate_params(cfg.raw);
  cfg.cap = make_rate_cap(cfg.cap_spec.kind, cfg.cap_spec.coefficients);
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(root, "", {"mu", "sigma", "q", "beta", "cap", "numerics", "sim", "simulate", "sweep",
                       "verify", "output"});

  RunConfig cfg;
  cfg.raw.mu = get_number(root, "", "mu", 0.0, true);
  cfg.raw.sigma = get_number(root, "", "sigma", 0.0, true);
  cfg.raw.q = get_number(root, "", "q", 0.0, true);
  cfg.raw.beta = get_number(root, "", "beta", 0.0, true);

  if (!root.contains("cap")) bad("cap", "missing");
  const json& cap = root.at("cap");
  only_keys(cap, "cap", {"kind", "coefficients"});
  if (!cap.contains("kind") || !cap.at("kind").is_string()) bad("cap.kind", "expected a string");
  try {
    cfg.cap_spec.kind = parse_cap_kind(cap.at("kind").get<std::string>());
  } catch (const Error&) {
    bad("cap.kind", "expected one of constant, linear, affine, tabulated");
  }
  if (!cap.contains("coefficients")) bad("cap.coefficients", "missing");
  cfg.cap_spec.coefficients = get_numbers(cap.at("coefficients"), "cap.coefficients");

  if (root.contains("numerics")) {
    const json& n = root.at("numerics");
    only_keys(n, "numerics", {"x_max", "tol", "residual_tol", "grid_n", "far_field_tol"});
    cfg.numerics.x_max = get_number(n, "numerics", "x_max", cfg.numerics.x_max);
    cfg.numerics.tol = get_number(n, "numerics", "tol", cfg.numerics.tol);
    cfg.numerics.residual_tol = get_number(n, "numerics", "residual_tol", cfg.numerics.residual_tol);
    cfg.numerics.grid_n = get_count(n, "numerics", "grid_n", cfg.numerics.grid_n);
    cfg.numerics.far_field_tol = get_number(n, "numerics", "far_field_tol", cfg.numerics.far_field_tol);
  }

  if (root.contains("sim")) {
    const json& s = root.at("sim");
    only_keys(s, "sim", {"dt", "horizon", "n_paths", "seed", "antithetic", "bridge", "multilevel",
                         "truncation_tol", "threads"});
    cfg.sim.dt = get_number(s, "sim", "dt", cfg.sim.dt);
    cfg.sim.horizon = get_number(s, "sim", "horizon", cfg.sim.horizon);
    cfg.sim.n_paths = get_count(s, "sim", "n_paths", cfg.sim.n_paths);
    cfg.sim.seed = get_count(s, "sim", "seed", cfg.sim.seed);
    cfg.sim.antithetic = get_bool(s, "sim", "antithetic", cfg.sim.antithetic);
    cfg.sim.bridge = get_bool(s, "sim", "bridge", cfg.sim.bridge);
    cfg.sim.multilevel = get_bool(s, "sim", "multilevel", cfg.sim.multilevel);
    cfg.sim.truncation_tol = get_number(s, "sim", "truncation_tol", cfg.sim.truncation_tol);
    cfg.sim.threads = static_cast<int>(get_count(s, "sim", "threads", 0));
    if (!(cfg.sim.dt > 0.0)) bad("sim.dt", "must be > 0");
    if (cfg.sim.horizon < 0.0) bad("sim.horizon", "must be >= 0");
    if (cfg.sim.n_paths < 2) bad("sim.n_paths", "must be >= 2");
    if (!(cfg.sim.truncation_tol > 0.0)) bad("sim.truncation_tol", "must be > 0");
  }

  if (root.contains("simulate")) {
    const json& s = root.at("simulate");
    only_keys(s, "simulate", {"strategy", "b", "x0", "dump_paths"});
    if (s.contains("strategy")) {
      const json& v = s.at("strategy");
      if (!v.is_string()) bad("simulate.strategy", "expected \"reflected\" or \"refracted\"");
      const std::string k = v.get<std::string>();
      if (k == "reflected") cfg.simulate.strategy = Boundary::Reflect;
      else if (k == "refracted") cfg.simulate.strategy = Boundary::Absorb;
      else bad("simulate.strategy", "expected \"reflected\" or \"refracted\"");
    }
    if (s.contains("b")) {
      const json& v = s.at("b");
      if (v.is_string() && v.get<std::string>() == "optimal") cfg.simulate.b.reset();
      else if (v.is_number() && v.get<double>() >= 0.0) cfg.simulate.b = v.get<double>();
      else bad("simulate.b", "expected a barrier >= 0 or \"optimal\"");
    }
    cfg.simulate.x0 = get_number(s, "simulate", "x0", 0.0);
    if (cfg.simulate.x0 < 0.0) bad("simulate.x0", "must be >= 0");
    cfg.simulate.dump_paths = get_count(s, "simulate", "dump_paths", 0);
  }

  if (root.contains("sweep")) {
    const json& s = root.at("sweep");
    only_keys(s, "sweep", {"param", "values"});
    if (s.contains("param")) {
      if (!s.at("param").is_string()) bad("sweep.param", "expected a string");
      cfg.sweep.param = s.at("param").get<std::string>();
    }
    if (s.contains("values")) cfg.sweep.values = get_numbers(s.at("values"), "sweep.values");
  }

  if (root.contains("verify")) {
    const json& v = root.at("verify");
    only_keys(v, "verify", {"mc_points", "domination_paths"});
    if (v.contains("mc_points")) cfg.verify.mc_points = get_numbers(v.at("mc_points"), "verify.mc_points");
    cfg.verify.domination_paths = get_count(v, "verify", "domination_paths", cfg.verify.domination_paths);
  }

  if (root.contains("output")) {
    const json& o = root.at("output");
    only_keys(o, "output", {"grid_n", "grid_max"});
    cfg.output.grid_n = get_count(o, "output", "grid_n", cfg.output.grid_n);
    cfg.output.grid_max = get_number(o, "output", "grid_max", cfg.output.grid_max);
    if (cfg.output.grid_n < 2) bad("output.grid_n", "must be >= 2");
  }

  revalidate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

}  // namespace divcap
