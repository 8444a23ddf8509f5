#include "isoquad/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "isoquad/experiment.hpp"

namespace isoquad {

using json = nlohmann::json;

namespace {

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Line number of a byte offset, for parse diagnostics.
int line_of(const std::string& text, size_t byte) {
  int line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

json parse_or_throw(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(line_of(text, e.byte)) +
                      ": " + e.what());
  }
}

[[noreturn]] void bad_field(const std::string& origin, const std::string& field,
                            const std::string& what) {
  throw ConfigError(origin + ": field '" + field + "' " + what);
}

const json& need(const json& obj, const std::string& origin, const std::string& field) {
  auto it = obj.find(field);
  if (it == obj.end()) bad_field(origin, field, "is required");
  return *it;
}

double get_double(const json& obj, const std::string& origin, const std::string& field,
                  double fallback) {
  auto it = obj.find(field);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) bad_field(origin, field, "must be a number");
  return it->get<double>();
}

long long get_int(const json& obj, const std::string& origin, const std::string& field,
                  long long fallback) {
  auto it = obj.find(field);
  if (it == obj.end()) return fallback;
  if (!it->is_number_integer()) bad_field(origin, field, "must be an integer");
  return it->get<long long>();
}

bool get_bool(const json& obj, const std::string& origin, const std::string& field,
              bool fallback) {
  auto it = obj.find(field);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) bad_field(origin, field, "must be a boolean");
  return it->get<bool>();
}

std::string get_string(const json& obj, const std::string& origin,
                       const std::string& field, const std::string& fallback) {
  auto it = obj.find(field);
  if (it == obj.end()) return fallback;
  if (!it->is_string()) bad_field(origin, field, "must be a string");
  return it->get<std::string>();
}

std::vector<double> get_flat_matrix(const json& node, const std::string& origin,
                                    const std::string& field, int p) {
  if (!node.is_array()) bad_field(origin, field, "must be an array of rows");
  if (static_cast<int>(node.size()) != p)
    bad_field(origin, field, "must have " + std::to_string(p) + " rows");
  std::vector<double> out;
  out.reserve(static_cast<size_t>(p) * p);
  for (const auto& row : node) {
    if (!row.is_array() || static_cast<int>(row.size()) != p)
      bad_field(origin, field, "rows must have " + std::to_string(p) + " entries");
    for (const auto& v : row) {
      if (!v.is_number()) bad_field(origin, field, "entries must be numbers");
      out.push_back(v.get<double>());
    }
  }
  return out;
}

json matrix_rows(const SymMatrix& a) {
  json rows = json::array();
  for (int i = 0; i < a.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < a.dim(); ++j) row.push_back(a(i, j));
    rows.push_back(row);
  }
  return rows;
}

json spec_to_json(const EnsembleSpec& spec) {
  json j;
  j["variant"] = variant_name(spec.variant);
  j["p"] = spec.p;
  j["m"] = spec.m;
  if (!spec.sigma0.empty()) j["sigma0"] = matrix_rows(spec.sigma0);
  if (!spec.beta.empty()) {
    json rows = json::array();
    for (int k = 0; k < spec.p; ++k) {
      json row = json::array();
      for (int col = 0; col < spec.p; ++col)
        row.push_back(spec.beta[static_cast<size_t>(k) * spec.p + col]);
      rows.push_back(row);
    }
    j["beta"] = rows;
  }
  if (!spec.omega.empty()) j["omega"] = spec.omega;
  if (spec.variant == Variant::student_t) j["nu"] = spec.nu;
  if (spec.arch_gain != 0.0) j["arch_gain"] = spec.arch_gain;
  return j;
}

EnsembleSpec spec_from_node(const json& node, const std::string& origin) {
  if (!node.is_object()) throw ConfigError(origin + ": ensemble must be an object");
  static const char* allowed[] = {"variant", "p",  "m",     "sigma0",
                                  "beta",    "omega", "nu", "arch_gain"};
  for (auto it = node.begin(); it != node.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) bad_field(origin, it.key(), "is not an ensemble field");
  }
  EnsembleSpec spec;
  std::string vname = get_string(node, origin, "variant", "");
  if (vname.empty()) bad_field(origin, "variant", "is required");
  try {
    spec.variant = variant_from_name(vname);
  } catch (const std::exception& e) {
    bad_field(origin, "variant", std::string("is invalid: ") + e.what());
  }
  spec.p = static_cast<int>(get_int(node, origin, "p", 0));
  if (spec.p <= 0) bad_field(origin, "p", "must be a positive integer");
  spec.m = get_double(node, origin, "m", 4.0);
  if (node.contains("sigma0"))
    spec.sigma0 = SymMatrix(spec.p, get_flat_matrix(node["sigma0"], origin, "sigma0", spec.p));
  if (node.contains("beta"))
    spec.beta = get_flat_matrix(node["beta"], origin, "beta", spec.p);
  if (node.contains("omega")) {
    const auto& om = node["omega"];
    if (!om.is_array()) bad_field(origin, "omega", "must be an array");
    for (const auto& v : om) {
      if (!v.is_number()) bad_field(origin, "omega", "entries must be numbers");
      spec.omega.push_back(v.get<double>());
    }
  }
  spec.nu = get_double(node, origin, "nu", 0.0);
  spec.arch_gain = get_double(node, origin, "arch_gain", 0.0);
  try {
    validate(spec);
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": ensemble: " + e.what());
  }
  return spec;
}

ConeSpec cone_from_node(const json& node, const std::string& origin, int p) {
  if (!node.is_object()) throw ConfigError(origin + ": cone must be an object");
  ConeSpec cone;
  const json& sn = need(node, origin, "S");
  if (!sn.is_array() || sn.empty()) bad_field(origin, "S", "must be a non-empty array");
  for (const auto& v : sn) {
    if (!v.is_number_integer()) bad_field(origin, "S", "entries must be integers");
    cone.S.push_back(static_cast<int>(v.get<long long>()) - 1);  // 1-based outside
  }
  cone.L = get_double(node, origin, "L", 1.0);
  std::string mode = get_string(node, origin, "mode", "l2_on_uS");
  try {
    cone.mode = norm_mode_from_name(mode);
    validate(cone, p);
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": cone: " + e.what());
  }
  return cone;
}

void apply_bound_params(BoundParams& q, const json& node, const std::string& origin) {
  if (!node.is_object()) throw ConfigError(origin + ": bound_params must be an object");
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string& k = it.key();
    if (k == "m") q.m = get_double(node, origin, k, q.m);
    else if (k == "m0") q.m0 = get_double(node, origin, k, q.m0);
    else if (k == "C_m") q.C_m = get_double(node, origin, k, q.C_m);
    else if (k == "Ctilde_m") q.Ctilde_m = get_double(node, origin, k, q.Ctilde_m);
    else if (k == "C") q.C = get_double(node, origin, k, q.C);
    else if (k == "sigma_X") q.sigma_X = get_double(node, origin, k, q.sigma_X);
    else if (k == "K_X") q.K_X = get_double(node, origin, k, q.K_X);
    else if (k == "kappa1") q.kappa1 = get_double(node, origin, k, q.kappa1);
    else if (k == "alpha") q.alpha = get_double(node, origin, k, q.alpha);
    else if (k == "eta") q.eta = get_double(node, origin, k, q.eta);
    else if (k == "c0_universal") q.c0_universal = get_double(node, origin, k, q.c0_universal);
    else if (k == "c0_poly") q.c0_poly = get_double(node, origin, k, q.c0_poly);
    else if (k == "M") q.M = get_double(node, origin, k, q.M);
    else if (k == "t") q.t = get_double(node, origin, k, q.t);
    else if (k == "n") q.n = get_int(node, origin, k, q.n);
    else if (k == "p") q.p = get_int(node, origin, k, q.p);
    else if (k == "L") q.L = get_double(node, origin, k, q.L);
    else if (k == "s") q.s = get_int(node, origin, k, q.s);
    else if (k == "eps") q.eps = get_double(node, origin, k, q.eps);
    else if (k == "Delta") q.Delta = get_double(node, origin, k, q.Delta);
    else if (k == "mu_m") q.mu_m = get_double(node, origin, k, q.mu_m);
    else if (k == "K") q.K = get_double(node, origin, k, q.K);
    else if (k == "delta_n") q.delta_n = get_double(node, origin, k, 0.0);
    else bad_field(origin, k, "is not a bound parameter");
  }
}

void apply_options(ExperimentOptions& o, const json& node, const std::string& origin) {
  if (!node.is_object()) throw ConfigError(origin + ": options must be an object");
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string& k = it.key();
    if (k == "n_grid") {
      if (!it->is_array()) bad_field(origin, k, "must be an array of integers");
      o.n_grid.clear();
      for (const auto& v : *it) {
        if (!v.is_number_integer() || v.get<long long>() <= 0)
          bad_field(origin, k, "entries must be positive integers");
        o.n_grid.push_back(static_cast<int>(v.get<long long>()));
      }
    }
    else if (k == "transfer_d") o.transfer_d = static_cast<int>(get_int(node, origin, k, o.transfer_d));
    else if (k == "transfer_directions") o.transfer_directions = static_cast<int>(get_int(node, origin, k, o.transfer_directions));
    else if (k == "transfer_shrink") o.transfer_shrink = get_double(node, origin, k, o.transfer_shrink);
    else if (k == "transfer_n") o.transfer_n = static_cast<int>(get_int(node, origin, k, o.transfer_n));
    else if (k == "oracle_budget") o.oracle_budget = static_cast<int>(get_int(node, origin, k, o.oracle_budget));
    else if (k == "directions") o.directions = static_cast<int>(get_int(node, origin, k, o.directions));
    else if (k == "moment_draws") o.moment_draws = static_cast<int>(get_int(node, origin, k, o.moment_draws));
    else if (k == "w_draws") o.w_draws = static_cast<int>(get_int(node, origin, k, o.w_draws));
    else if (k == "dev_directions") o.dev_directions = static_cast<int>(get_int(node, origin, k, o.dev_directions));
    else if (k == "lasso_noisy") o.lasso_noisy = static_cast<int>(get_int(node, origin, k, o.lasso_noisy));
    else if (k == "lasso_noiseless") o.lasso_noiseless = static_cast<int>(get_int(node, origin, k, o.lasso_noiseless));
    else if (k == "noise_sd") o.noise_sd = get_double(node, origin, k, o.noise_sd);
    else if (k == "lambda_rule") o.lambda_rule = get_double(node, origin, k, o.lambda_rule);
    else if (k == "noiseless_lambda") o.noiseless_lambda = get_double(node, origin, k, o.noiseless_lambda);
    else if (k == "u0_magnitude") o.u0_magnitude = get_double(node, origin, k, o.u0_magnitude);
    else if (k == "lasso_s") o.lasso_s = static_cast<int>(get_int(node, origin, k, o.lasso_s));
    else bad_field(origin, k, "is not an option");
  }
}

ExperimentConfig config_from_node(const json& node, const std::string& origin) {
  if (!node.is_object()) throw ConfigError(origin + ": experiment must be an object");
  static const char* allowed[] = {"name",       "checks", "ensemble", "n",
                                  "trials",     "seed",   "cone",     "bound_params",
                                  "bound_params_from_ensemble", "options"};
  for (auto it = node.begin(); it != node.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) bad_field(origin, it.key(), "is not an experiment field");
  }

  ExperimentConfig cfg;
  cfg.name = get_string(node, origin, "name", "");
  if (cfg.name.empty()) bad_field(origin, "name", "is required");
  const std::string where = origin + ": experiment '" + cfg.name + "'";

  const json& checks = need(node, where, "checks");
  if (!checks.is_array() || checks.empty())
    bad_field(where, "checks", "must be a non-empty array");
  auto known = known_checks();
  for (const auto& c : checks) {
    if (!c.is_string()) bad_field(where, "checks", "entries must be strings");
    std::string name = c.get<std::string>();
    bool ok = false;
    for (const auto& k : known) ok = ok || k == name;
    if (!ok) bad_field(where, "checks", "names unknown check '" + name + "'");
    cfg.checks.push_back(name);
  }

  cfg.ensemble = spec_from_node(need(node, where, "ensemble"), where);
  cfg.n = static_cast<int>(get_int(node, where, "n", cfg.n));
  if (cfg.n <= 0) bad_field(where, "n", "must be positive");
  cfg.trials = static_cast<int>(get_int(node, where, "trials", cfg.trials));
  if (cfg.trials <= 0) bad_field(where, "trials", "must be positive");

  const json& seed = need(node, where, "seed");
  if (!seed.is_number_integer() && !seed.is_number_unsigned())
    bad_field(where, "seed", "must be an integer");
  cfg.master_seed = seed.get<uint64_t>();
  cfg.seed_set = true;

  if (node.contains("cone")) cfg.cone = cone_from_node(node["cone"], where, cfg.ensemble.p);
  if (node.contains("options")) apply_options(cfg.options, node["options"], where);

  cfg.bound_params_from_ensemble =
      get_bool(node, where, "bound_params_from_ensemble", true);
  BoundParams& q = cfg.bound_params;
  q.n = cfg.n;
  q.p = cfg.ensemble.p;
  q.m = cfg.ensemble.m;
  if (!cfg.cone.S.empty()) {
    q.s = static_cast<long long>(cfg.cone.S.size());
    q.L = cfg.cone.L;
  }
  if (cfg.bound_params_from_ensemble) {
    EnsembleConstants ec = ensemble_constants(cfg.ensemble);
    if (ec.C_m) q.C_m = *ec.C_m;
    if (ec.Ctilde_m) q.Ctilde_m = *ec.Ctilde_m;
    if (ec.sigma_X) q.sigma_X = *ec.sigma_X;
    if (ec.K_X) q.K_X = *ec.K_X;
    if (ec.sub_gaussian_C) q.C = *ec.sub_gaussian_C;
    if (ec.mu_m) q.mu_m = *ec.mu_m;
  }
  if (node.contains("bound_params")) apply_bound_params(q, node["bound_params"], where);
  return cfg;
}

json params_to_json(const BoundParams& q) {
  json j;
  j["m"] = q.m;
  j["m0"] = q.m0;
  j["C_m"] = q.C_m;
  j["Ctilde_m"] = q.Ctilde_m;
  j["C"] = q.C;
  j["sigma_X"] = q.sigma_X;
  j["K_X"] = q.K_X;
  j["kappa1"] = q.kappa1;
  j["alpha"] = q.alpha;
  j["eta"] = q.eta;
  j["c0_universal"] = q.c0_universal;
  j["c0_poly"] = q.c0_poly;
  j["M"] = q.M;
  j["t"] = q.t;
  j["n"] = q.n;
  j["p"] = q.p;
  j["L"] = q.L;
  j["s"] = q.s;
  j["eps"] = q.eps;
  j["Delta"] = q.Delta;
  j["mu_m"] = q.mu_m;
  j["K"] = q.K;
  if (q.delta_n) j["delta_n"] = *q.delta_n;
  return j;
}

std::string csv_escape(const std::string& s) {
  bool quote = s.find_first_of(",\"\n") != std::string::npos;
  if (!quote) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

std::string constant_result_json(const ConstantResult& r, const ConeSpec& cone,
                                 uint64_t matrix_fingerprint) {
  json j;
  j["value"] = r.value;
  j["certificate"] = r.certificate;
  j["gap_estimate"] = r.gap_estimate;
  j["orthant_count"] = r.orthant_count;
  j["minimizer"] = r.minimizer;
  json cj;
  json s1 = json::array();
  for (int idx : cone.S) s1.push_back(idx + 1);
  cj["S"] = s1;
  cj["L"] = cone.L;
  cj["mode"] = norm_mode_name(cone.mode);
  j["cone"] = cj;
  j["matrix_fnv"] = hex64(matrix_fingerprint);
  return j.dump(2) + "\n";
}

std::string bound_report_json(const BoundReport& rep, const BoundParams& q) {
  json j;
  j["name"] = rep.name;
  j["value"] = rep.value;
  j["void"] = rep.void_flag;
  j["flags"] = rep.flags;
  json parts;
  for (const auto& kv : rep.parts) parts[kv.first] = kv.second;
  j["parts"] = parts;
  j["params"] = params_to_json(q);
  return j.dump(2) + "\n";
}

std::string oracle_record_json(const OracleInequalityRecord& rec) {
  json j;
  j["applicable"] = rec.applicable;
  if (!rec.reason.empty()) j["reason"] = rec.reason;
  j["lambda"] = rec.lambda;
  j["lambda0"] = rec.lambda0;
  j["L"] = rec.L;
  j["phi2"] = rec.phi2;
  j["lhs"] = rec.lhs;
  j["rhs"] = rec.rhs;
  j["vacuous"] = rec.vacuous;
  j["pass"] = rec.pass;
  return j.dump(2) + "\n";
}

std::string report_json(const ExperimentReport& rep) {
  json j;
  j["all_pass"] = rep.all_pass;
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json cj;
    cj["experiment"] = c.experiment;
    cj["check"] = c.check;
    cj["pass"] = c.pass;
    cj["notes"] = c.notes;
    json agg;
    for (const auto& kv : c.aggregates) agg[kv.first] = kv.second;
    cj["aggregates"] = agg;
    json rows = json::array();
    for (const auto& row : c.rows) {
      json rj;
      rj["trial"] = row.trial;
      for (const auto& kv : row.metrics) rj[kv.first] = kv.second;
      rows.push_back(rj);
    }
    cj["rows"] = rows;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  return j.dump(2) + "\n";
}

std::string report_csv(const ExperimentReport& rep) {
  std::string out;
  for (const auto& c : rep.checks) {
    out += "experiment,check,trial";
    if (!c.rows.empty())
      for (const auto& kv : c.rows.front().metrics) out += "," + csv_escape(kv.first);
    out += "\n";
    for (const auto& row : c.rows) {
      out += csv_escape(c.experiment) + "," + csv_escape(c.check) + "," +
             std::to_string(row.trial);
      for (const auto& kv : row.metrics) out += "," + format_double(kv.second);
      out += "\n";
    }
  }
  return out;
}

void write_design_with_sidecar(const std::string& prefix, const EnsembleSpec& spec,
                               int n, uint64_t seed, const DesignSample& sample) {
  write_design_csv(prefix + ".csv", sample.X, sample.n, sample.p);
  json j;
  j["ensemble"] = spec_to_json(spec);
  j["n"] = n;
  j["seed"] = seed;
  j["design_csv"] = prefix + ".csv";
  j["sigma_hat_sq"] = sample.sigma_hat_sq;
  j["gram_fnv"] = hex64(matrix_hash(sample.gram));
  write_text_file(prefix + ".json", j.dump(2) + "\n");
}

DesignSample regenerate_from_sidecar(const std::string& sidecar_path) {
  std::string text = read_text_file(sidecar_path);
  json j = parse_or_throw(text, sidecar_path);
  if (!j.is_object()) throw ConfigError(sidecar_path + ": sidecar must be an object");
  EnsembleSpec spec = spec_from_node(need(j, sidecar_path, "ensemble"), sidecar_path);
  long long n = get_int(j, sidecar_path, "n", 0);
  if (n <= 0) bad_field(sidecar_path, "n", "must be positive");
  const json& seed = need(j, sidecar_path, "seed");
  if (!seed.is_number_integer() && !seed.is_number_unsigned())
    bad_field(sidecar_path, "seed", "must be an integer");
  return sample(spec, static_cast<int>(n), seed.get<uint64_t>());
}

EnsembleSpec ensemble_spec_from_json(const std::string& text, const std::string& origin) {
  return spec_from_node(parse_or_throw(text, origin), origin);
}

EnsembleSpec ensemble_spec_from_file(const std::string& path) {
  return ensemble_spec_from_json(read_text_file(path), path);
}

std::vector<ExperimentConfig> experiment_configs_from_file(const std::string& path) {
  json j = parse_or_throw(read_text_file(path), path);
  std::vector<ExperimentConfig> out;
  if (j.is_object() && j.contains("experiments")) {
    const json& arr = j["experiments"];
    if (!arr.is_array() || arr.empty())
      bad_field(path, "experiments", "must be a non-empty array");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "experiments")
        bad_field(path, it.key(), "is not a suite field");
    for (const auto& node : arr) out.push_back(config_from_node(node, path));
  } else {
    out.push_back(config_from_node(j, path));
  }
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t k = i + 1; k < out.size(); ++k)
      if (out[i].name == out[k].name)
        throw ConfigError(path + ": duplicate experiment name '" + out[i].name + "'");
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw ConfigError("short write to " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace isoquad
