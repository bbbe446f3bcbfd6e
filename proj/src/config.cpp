#include "strb/config.hpp"

#include "strb/problem.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace strb {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + where + it.key() + "'");
}

template <typename T>
void get_if(const json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: key '" + where + key + "' has the wrong type");
  }
}

Mu parse_mu(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError("config: '" + where + "' must be an array of three numbers");
  try {
    return Mu(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  } catch (const json::exception&) {
    throw ConfigError("config: '" + where + "' must contain numbers");
  }
}

}  // namespace

RunConfig parse_config_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config: malformed JSON document");
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");

  reject_unknown(j, {"problem", "mode", "nx", "ny", "T", "n_t", "alpha", "bound_case", "tol",
                     "max_iters", "n_train", "n_test", "seed", "out_dir", "exact_eta", "mesh_dump",
                     "extrapolate_mu", "online", "sweep", "hf"},
                 "");

  RunConfig c;
  get_if(j, "problem", c.problem, "");
  get_if(j, "mode", c.mode, "");
  get_if(j, "nx", c.nx, "");
  get_if(j, "ny", c.ny, "");
  get_if(j, "T", c.T, "");
  get_if(j, "n_t", c.n_t, "");
  get_if(j, "alpha", c.alpha, "");
  if (j.contains("bound_case")) {
    std::string bc;
    get_if(j, "bound_case", bc, "");
    c.bound_case = bc;
  }
  get_if(j, "tol", c.tol, "");
  get_if(j, "max_iters", c.max_iters, "");
  get_if(j, "n_train", c.n_train, "");
  get_if(j, "n_test", c.n_test, "");
  get_if(j, "seed", c.seed, "");
  get_if(j, "out_dir", c.out_dir, "");
  get_if(j, "exact_eta", c.exact_eta, "");
  get_if(j, "mesh_dump", c.mesh_dump, "");
  get_if(j, "extrapolate_mu", c.extrapolate_mu, "");

  if (j.contains("online")) {
    const json& o = j.at("online");
    if (!o.is_object()) throw ConfigError("config: 'online' must be an object");
    reject_unknown(o, {"mu", "compare_hf"}, "online.");
    if (o.contains("mu")) {
      if (!o.at("mu").is_array()) throw ConfigError("config: 'online.mu' must be an array");
      for (const auto& e : o.at("mu")) c.online.mu.push_back(parse_mu(e, "online.mu[]"));
    }
    get_if(o, "compare_hf", c.online.compare_hf, "online.");
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (!s.is_object()) throw ConfigError("config: 'sweep' must be an object");
    reject_unknown(s, {"mu1_points", "alphas", "mu2", "mu3"}, "sweep.");
    get_if(s, "mu1_points", c.sweep.mu1_points, "sweep.");
    if (s.contains("alphas")) {
      c.sweep.alphas.clear();
      get_if(s, "alphas", c.sweep.alphas, "sweep.");
    }
    if (s.contains("mu2")) {
      double v = 0;
      get_if(s, "mu2", v, "sweep.");
      c.sweep.mu2 = v;
    }
    if (s.contains("mu3")) {
      double v = 0;
      get_if(s, "mu3", v, "sweep.");
      c.sweep.mu3 = v;
    }
  }
  if (j.contains("hf")) {
    const json& h = j.at("hf");
    if (!h.is_object()) throw ConfigError("config: 'hf' must be an object");
    reject_unknown(h, {"mu", "export_csv"}, "hf.");
    if (h.contains("mu")) c.hf.mu = parse_mu(h.at("mu"), "hf.mu");
    get_if(h, "export_csv", c.hf.export_csv, "hf.");
  }

  validate_config(c);
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_json(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["mode"] = c.mode;
  j["nx"] = c.nx;
  j["ny"] = c.ny;
  j["T"] = c.T;
  j["n_t"] = c.n_t;
  j["alpha"] = c.alpha;
  if (c.bound_case) j["bound_case"] = *c.bound_case;
  j["tol"] = c.tol;
  j["max_iters"] = c.max_iters;
  j["n_train"] = c.n_train;
  j["n_test"] = c.n_test;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["exact_eta"] = c.exact_eta;
  j["mesh_dump"] = c.mesh_dump;
  j["extrapolate_mu"] = c.extrapolate_mu;
  j["online"]["compare_hf"] = c.online.compare_hf;
  j["online"]["mu"] = json::array();
  for (const Mu& mu : c.online.mu) j["online"]["mu"].push_back({mu[0], mu[1], mu[2]});
  j["sweep"]["mu1_points"] = c.sweep.mu1_points;
  j["sweep"]["alphas"] = c.sweep.alphas;
  if (c.sweep.mu2) j["sweep"]["mu2"] = *c.sweep.mu2;
  if (c.sweep.mu3) j["sweep"]["mu3"] = *c.sweep.mu3;
  if (c.hf.mu) j["hf"]["mu"] = {(*c.hf.mu)[0], (*c.hf.mu)[1], (*c.hf.mu)[2]};
  j["hf"]["export_csv"] = c.hf.export_csv;
  return j.dump(2);
}

void validate_config(const RunConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  if (c.problem != "graetz_distributed" && c.problem != "graetz_boundary")
    fail("'problem' must be graetz_distributed or graetz_boundary, got '" + c.problem + "'");
  if (c.mode != "steady" && c.mode != "unsteady")
    fail("'mode' must be steady or unsteady, got '" + c.mode + "'");
  if (c.nx < 1 || c.ny < 1) fail("'nx' and 'ny' must be >= 1");
  if (!(c.T > 0.0)) fail("'T' must be positive");
  if (c.n_t < 1) fail("'n_t' must be >= 1");
  if (!(c.alpha > 0.0) || c.alpha > 1.0) fail("'alpha' must lie in (0, 1]");
  if (c.bound_case) bound_case_from_string(*c.bound_case);  // throws on bad value
  if (!(c.tol > 0.0)) fail("'tol' must be positive");
  if (c.max_iters < 1) fail("'max_iters' must be >= 1");
  if (c.n_train < 1) fail("'n_train' must be >= 1");
  if (c.n_test < 0) fail("'n_test' must be >= 0");
  if (c.out_dir.empty()) fail("'out_dir' must not be empty");
  if (c.sweep.mu1_points < 1) fail("'sweep.mu1_points' must be >= 1");
  if (c.sweep.alphas.empty()) fail("'sweep.alphas' must not be empty");
  for (double a : c.sweep.alphas)
    if (!(a > 0.0) || a > 1.0) fail("'sweep.alphas' entries must lie in (0, 1]");
}

}  // namespace strb
