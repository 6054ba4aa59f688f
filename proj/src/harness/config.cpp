#include <cstdio>
#include <fstream>
#include <sstream>

#include "credal/harness.hpp"

namespace credal::harness {
namespace {

json env(double mean, double std) { return {{"mean", mean}, {"std", std}}; }

json params_for(const std::string& e, bool paper) {
  if (e == "gating_curve")
    return {{"center_lo", -4.0}, {"center_hi", 4.0}, {"points", paper ? 161 : 81}, {"window_std", 1.0},
            {"shift", 1.0},      {"thresholds", {-1.0, 1.0}},       {"slope", 1.0}};
  if (e == "bounds_sweep")
    return {{"grid_envs", paper ? 15 : 4},
            {"random_envs", paper ? 5 : 2},
            {"labelers", paper ? 10 : 4},
            {"grid_lo", -3.0},
            {"grid_hi", 3.0},
            {"grid_std", 1.0},
            {"random_mean_lo", -3.0},
            {"random_mean_hi", 3.0},
            {"random_std_lo", 0.5},
            {"random_std_hi", 2.0},
            {"labeler_lo", -4.0},
            {"labeler_hi", 4.0},
            {"slope", 1.0},
            {"families", {"soft", "hard"}}};
  if (e == "diameter_ablation")
    return {{"environments", paper ? 500 : 60},
            {"mean_lo", -1.0},
            {"mean_hi", 1.0},
            {"std_lo", 0.5},
            {"std_hi", 2.0},
            {"thresholds", {-1.0, -0.5, 0.0, 0.5, 1.0}},
            {"kappas", {1.0, 2.0, 3.0}},
            {"n", 1000},
            {"families", {"threshold", "probit"}}};
  if (e == "noise_ablation")
    return {{"eps_max", {0.1, 0.25, 0.5}}, {"annotators", 5}, {"n", 1000}, {"env", env(0.0, 1.0)},
            {"base_threshold", 0.0}};
  if (e == "sample_complexity")
    return {{"environments", {env(0.0, 1.0), env(0.0, 2.0), env(2.0, 1.0)}},
            {"labeler", "threshold"},
            {"labeler_params", {-1.0, 1.0}},
            {"kappa", 1.0},
            {"n_list", paper ? json{10, 30, 100, 500, 1000, 2000, 5000, 10000, 20000, 100000}
                             : json{10, 30, 100, 500, 1000, 5000, 10000, 100000}}};
  if (e == "mechanism_complexity")
    return {{"methods", {"interval", "block"}},
            {"interval_env", env(2.0, 1.0)},
            {"block_env", env(0.0, 1.0)},
            {"n", 1000},
            {"n_y_list", paper ? json{2, 5, 12, 20, 30, 50, 80, 100, 200, 500, 1000} : json{2, 5, 12, 20, 50, 100}},
            {"pinned_mass", 0.2},
            {"rest_ratio", 0.5},
            {"block_initial", 0.2},
            {"block_log_growth", 0.1},
            {"block_max_mass", 0.95}};
  if (e == "minimax_demo")
    return {{"etas", {0.1, 0.5, 0.9}}, {"env", env(0.0, 1.0)}, {"grid_lo", -4.0}, {"grid_hi", 4.0},
            {"grid_points", 1000}};
  if (e == "dro_train")
    return {{"environments", {env(0.0, 1.0)}},
            {"thresholds", {-1.0, 1.0}},
            {"modes", {"greedy", "lse"}},
            {"taus", {0.01, 0.05, 0.1}},
            {"steps", 200},
            {"step_size", 0.1},
            {"smoothing", 0.05},
            {"sample_size", 0},
            {"oracle_lo", -4.0},
            {"oracle_hi", 4.0},
            {"oracle_points", 2001}};
  if (e == "certificate")
    return {{"annotations", ""},
            {"env", env(0.0, 1.0)},
            {"labeler", "threshold"},
            {"labeler_params", {-1.0, 1.0}},
            {"kappa", 1.0},
            {"noise", 0.0},
            {"kind", "hard"},
            {"n", 1000},
            {"regime", "auto"},
            {"eps_star", nullptr}};
  throw ConfigError("unknown experiment '" + e + "'");
}

int default_replications(const std::string& e, bool paper) {
  if (e == "diameter_ablation") return paper ? 100 : 10;
  if (e == "noise_ablation" || e == "sample_complexity" || e == "mechanism_complexity") return paper ? 2000 : 500;
  if (e == "dro_train") return paper ? 20 : 5;
  return 1;
}

double default_delta(const std::string& e) { return e == "sample_complexity" ? 0.005 : 0.05; }

bool same_kind(const json& base, const json& v) {
  if (base.is_null()) return v.is_null() || v.is_number();
  if (base.is_number_integer() || base.is_number_unsigned()) return v.is_number_integer() || v.is_number_unsigned();
  if (base.is_number()) return v.is_number();
  return base.type() == v.type();
}

// Overlays `doc` onto `base`, recording every key or type mismatch.
void overlay(json& base, const json& doc, const std::string& path, std::vector<std::string>& errors) {
  if (!doc.is_object()) {
    errors.push_back(path + ": expected an object");
    return;
  }
  for (const auto& [key, value] : doc.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) {
      errors.push_back(where + ": unknown key");
      continue;
    }
    json& slot = base[key];
    if (slot.is_object()) {
      overlay(slot, value, where, errors);
    } else if (slot.is_array()) {
      if (!value.is_array()) {
        errors.push_back(where + ": expected an array");
        continue;
      }
      if (!slot.empty()) {
        const json proto = slot.front();
        json out = json::array();
        for (std::size_t i = 0; i < value.size(); ++i) {
          const std::string at = where + "[" + std::to_string(i) + "]";
          if (proto.is_object()) {
            json item = proto;
            overlay(item, value[i], at, errors);
            out.push_back(item);
          } else if (!same_kind(proto, value[i])) {
            errors.push_back(at + ": expected " + std::string(proto.type_name()));
          } else {
            out.push_back(value[i]);
          }
        }
        slot = out;
      } else {
        slot = value;
      }
    } else if (!same_kind(slot, value)) {
      errors.push_back(where + ": expected " + std::string(slot.is_null() ? "number or null" : slot.type_name()) +
                       ", got " + value.type_name());
    } else {
      slot = value;
    }
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"gating_curve",         "bounds_sweep", "diameter_ablation",
                                              "noise_ablation",       "sample_complexity",
                                              "mechanism_complexity", "minimax_demo", "dro_train",
                                              "certificate"};
  return names;
}

json preset_document(const std::string& experiment, const std::string& preset) {
  if (preset != "paper" && preset != "desk") throw ConfigError("preset must be 'paper' or 'desk'");
  const bool paper = preset == "paper";
  const QuadratureConfig q;
  return {{"schema_version", kSchemaVersion},
          {"experiment", experiment},
          {"preset", preset},
          {"seed", 1},
          {"delta", default_delta(experiment)},
          {"replications", default_replications(experiment, paper)},
          {"quadrature",
           {{"method", to_string(q.method)},
            {"node_count", q.node_count},
            {"abs_tol", q.abs_tol},
            {"domain_halfwidth_sigmas", q.domain_halfwidth_sigmas},
            {"max_evals", q.max_evals}}},
          {"params", params_for(experiment, paper)}};
}

ExperimentConfig resolve_config(const std::string& experiment, const json& doc_in, const CliOverrides& cli) {
  const json doc = doc_in.is_null() ? json::object() : doc_in;
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  if (!doc_in.is_null()) {
    if (!doc.contains("schema_version")) throw ConfigError("schema_version: required field missing");
    if (doc["schema_version"] != kSchemaVersion)
      throw ConfigError("schema_version: unsupported version " + doc["schema_version"].dump() + " (expected " +
                        std::to_string(kSchemaVersion) + ")");
  }
  if (doc.contains("experiment") && doc["experiment"] != experiment)
    throw ConfigError("experiment: config is for " + doc["experiment"].dump() + ", not '" + experiment + "'");

  std::string preset = "desk";
  if (doc.contains("preset")) {
    if (!doc["preset"].is_string()) throw ConfigError("preset: expected a string");
    preset = doc["preset"].get<std::string>();
  }
  if (cli.preset) preset = *cli.preset;

  json resolved = preset_document(experiment, preset);
  std::vector<std::string> errors;
  json overlay_doc = doc;
  overlay_doc.erase("preset");
  overlay(resolved, overlay_doc, "", errors);
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  resolved["preset"] = preset;
  if (cli.seed) resolved["seed"] = *cli.seed;
  if (cli.delta) resolved["delta"] = *cli.delta;

  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.preset = preset;
  cfg.seed = resolved["seed"].get<std::uint64_t>();
  cfg.delta = resolved["delta"].get<double>();
  cfg.replications = resolved["replications"].get<int>();
  const auto& q = resolved["quadrature"];
  try {
    cfg.quad.method = quad_method_from_string(q["method"].get<std::string>());
    cfg.quad.node_count = q["node_count"].get<int>();
    cfg.quad.abs_tol = q["abs_tol"].get<double>();
    cfg.quad.domain_halfwidth_sigmas = q["domain_halfwidth_sigmas"].get<double>();
    cfg.quad.max_evals = q["max_evals"].get<long>();
    cfg.quad.validate();
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("quadrature: ") + ex.what());
  }
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta: must lie in (0, 1)");
  if (cfg.replications < 1) throw ConfigError("replications: must be at least 1");
  cfg.params = resolved["params"];
  return cfg;
}

json ExperimentConfig::to_json() const {
  return {{"schema_version", kSchemaVersion},
          {"experiment", experiment},
          {"preset", preset},
          {"seed", seed},
          {"delta", delta},
          {"replications", replications},
          {"quadrature",
           {{"method", to_string(quad.method)},
            {"node_count", quad.node_count},
            {"abs_tol", quad.abs_tol},
            {"domain_halfwidth_sigmas", quad.domain_halfwidth_sigmas},
            {"max_evals", quad.max_evals}}},
          {"params", params}};
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& ex) {
    throw ConfigError("config file " + path + " is not valid JSON: " + ex.what());
  }
}

}  // namespace credal::harness
