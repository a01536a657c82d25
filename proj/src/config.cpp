#include "qtree/config.hpp"

#include <fstream>
#include <numbers>
#include <sstream>

#include "qtree/error.hpp"

namespace qtree {

namespace {

bool compatible(const json& def, const json& val) {
  if (def.is_number()) return val.is_number();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_string()) return val.is_string();
  if (def.is_array()) return val.is_array();
  if (def.is_object()) return val.is_object();
  return true;
}

const char* type_name(const json& def) {
  if (def.is_number()) return "a number";
  if (def.is_boolean()) return "a boolean";
  if (def.is_string()) return "a string";
  if (def.is_array()) return "an array";
  if (def.is_object()) return "an object";
  return "a value";
}

void merge_into(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ValidationError("config: '" + prefix + "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ValidationError("config: unknown key '" + key + "'");
    json& slot = base[it.key()];
    if (!compatible(slot, it.value())) {
      throw ValidationError("config: key '" + key + "' must be " + type_name(slot));
    }
    if (slot.is_object()) {
      merge_into(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

std::uint64_t as_u64(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  throw ValidationError("config: key '" + key + "' must be a nonnegative integer");
}

int as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ValidationError("config: key '" + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace

json default_config() {
  const double half_pi = std::numbers::pi / 2;
  return json{
      {"K", 2},
      {"L", 1.0},
      {"depth", 10},
      {"alpha", half_pi},
      {"vertex_bc", {{"type", "kirchhoff"}, {"alpha_v", half_pi}, {"beta_v", 0.0}}},
      {"disorder",
       {{"lambda", 0.0}, {"dist", "uniform"}, {"sigma", 0.5}, {"master_seed", 0}}},
      {"visit_budget", std::uint64_t{1} << 24},
      {"bands", {{"n_max", 3}}},
      {"fixed_point", {{"E_min", 0.2}, {"E_max", 7.7}, {"n_points", 200}, {"eta", 0.0}}},
      {"density",
       {{"E_min", 0.0},
        {"E_max", 10.0},
        {"n_points", 500},
        {"eta", 1e-3},
        {"location", "root"},
        {"target", json::array()},
        {"position", 0.0},
        {"extrapolate", false},
        {"ladder", {1e-1, 1e-2, 1e-3, 1e-4}},
        {"replica", 0}}},
      {"lyapunov",
       {{"lambdas", {0.0, 0.05, 0.1, 0.2}},
        {"etas", {1e-1, 1e-2, 1e-3}},
        {"E", 2.0},
        {"n", 10000},
        {"sampler", "pool"},
        {"pool_size", 10000},
        {"burn_in", 2000},
        {"batches", 100},
        {"thinning", 10}}},
      {"fluctuation",
       {{"lambdas", {0.05, 0.1}},
        {"E", 2.0},
        {"eta", 0.01},
        {"a", 0.25},
        {"n", 10000},
        {"sampler", "pool"},
        {"pool_size", 10000},
        {"burn_in", 2000},
        {"batches", 100},
        {"thinning", 10}}},
      {"stability",
       {{"lambdas", {0.2, 0.1, 0.05, 0.02}},
        {"etas", {1e-3}},
        {"E_min", 1.5},
        {"E_max", 2.5},
        {"eps", 0.1},
        {"n", 2000},
        {"n_energies", 20},
        {"burn_in", 4000}}},
      {"recursion",
       {{"E", 2.0},
        {"eta", 0.01},
        {"n", 1000},
        {"sampler", "direct"},
        {"pool_size", 10000},
        {"burn_in", 2000},
        {"batches", 100},
        {"thinning", 10}}},
  };
}

std::string section_name(const std::string& command) {
  std::string s = command;
  for (char& c : s) {
    if (c == '-') c = '_';
  }
  return s;
}

const json& RunConfig::section(const std::string& command) const {
  const std::string name = section_name(command);
  if (!doc.contains(name)) throw ValidationError("config: no section for command '" + command + "'");
  return doc.at(name);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' must have the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  // Rebuild the override as a nested object so it goes through the same
  // key and type checks as a config file.
  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ValidationError("override key '" + path + "' has an empty component");
    parts.push_back(part);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  merge_into(doc, patch, "");
}

RunConfig resolve_config(json doc) {
  RunConfig rc;
  rc.tree.K = as_int(doc.at("K"), "K");
  rc.tree.L = doc.at("L").get<double>();
  rc.tree.depth = as_int(doc.at("depth"), "depth");
  rc.tree.alpha = doc.at("alpha").get<double>();
  const json& bc = doc.at("vertex_bc");
  const std::string type = bc.at("type").get<std::string>();
  if (type == "kirchhoff") {
    rc.tree.vertex_bc = VertexBc::kirchhoff();
  } else if (type == "symmetric") {
    rc.tree.vertex_bc =
        VertexBc::symmetric(bc.at("alpha_v").get<double>(), bc.at("beta_v").get<double>());
  } else {
    throw ValidationError("config: vertex_bc.type must be 'kirchhoff' or 'symmetric'");
  }
  rc.tree.validate();

  const json& dis = doc.at("disorder");
  rc.disorder.lambda = dis.at("lambda").get<double>();
  rc.disorder.dist = omega_dist_from_string(dis.at("dist").get<std::string>());
  rc.disorder.sigma = dis.at("sigma").get<double>();
  rc.disorder.master_seed = as_u64(dis.at("master_seed"), "disorder.master_seed");
  rc.disorder.validate();

  rc.visit_budget = as_u64(doc.at("visit_budget"), "visit_budget");
  if (rc.visit_budget == 0) throw ValidationError("config: visit_budget must be positive");
  rc.doc = std::move(doc);
  return rc;
}

RunConfig load_config(const std::optional<std::string>& path,
                      const std::vector<std::string>& overrides) {
  json doc = default_config();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ValidationError("config: cannot open '" + *path + "'");
    json loaded = json::parse(in, nullptr, false);
    if (loaded.is_discarded()) throw ValidationError("config: '" + *path + "' is not valid JSON");
    if (loaded.is_object() && loaded.contains("manifest_version")) {
      if (!loaded.contains("config")) throw ValidationError("manifest has no 'config' member");
      loaded = loaded.at("config");
    }
    merge_into(doc, loaded, "");
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  return resolve_config(std::move(doc));
}

}  // namespace qtree
