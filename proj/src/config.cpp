#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "qcurv/scenario.hpp"

namespace qcurv {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& sec, const std::string& key,
                    const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: [" + sec + "] " + key + " = '" + v +
                      "' is not a number");
  }
}

}  // namespace

bool ConfigMap::has(const std::string& sec, const std::string& key) const {
  const auto it = data_.find(sec);
  return it != data_.end() && it->second.count(key) > 0;
}

const ConfigMap::Section* ConfigMap::section(const std::string& sec) const {
  const auto it = data_.find(sec);
  return it == data_.end() ? nullptr : &it->second;
}

std::string ConfigMap::get_str(const std::string& sec,
                               const std::string& key) const {
  const auto it = data_.find(sec);
  if (it != data_.end()) {
    const auto jt = it->second.find(key);
    if (jt != it->second.end()) return jt->second;
  }
  throw ConfigError("config: missing required key [" + sec + "] " + key);
}

std::string ConfigMap::get_str(const std::string& sec, const std::string& key,
                               const std::string& fallback) const {
  return has(sec, key) ? get_str(sec, key) : fallback;
}

double ConfigMap::get_num(const std::string& sec, const std::string& key) const {
  return parse_double(sec, key, get_str(sec, key));
}

double ConfigMap::get_num(const std::string& sec, const std::string& key,
                          double fallback) const {
  return has(sec, key) ? get_num(sec, key) : fallback;
}

long ConfigMap::get_int(const std::string& sec, const std::string& key,
                        long fallback) const {
  if (!has(sec, key)) return fallback;
  const double x = get_num(sec, key);
  const long v = static_cast<long>(x);
  if (static_cast<double>(v) != x)
    throw ConfigError("config: [" + sec + "] " + key + " must be an integer");
  return v;
}

bool ConfigMap::get_bool(const std::string& sec, const std::string& key,
                         bool fallback) const {
  if (!has(sec, key)) return fallback;
  std::string v = get_str(sec, key);
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: [" + sec + "] " + key + " must be a boolean");
}

std::vector<double> ConfigMap::get_list(const std::string& sec,
                                        const std::string& key) const {
  const std::string raw = get_str(sec, key);
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ConfigError("config: [" + sec + "] " + key + " has an empty entry");
    out.push_back(parse_double(sec, key, item));
  }
  if (out.empty())
    throw ConfigError("config: [" + sec + "] " + key + " is an empty list");
  return out;
}

std::vector<double> ConfigMap::get_list(const std::string& sec,
                                        const std::string& key,
                                        std::vector<double> fallback) const {
  return has(sec, key) ? get_list(sec, key) : std::move(fallback);
}

void ConfigMap::set(const std::string& sec, const std::string& key,
                    const std::string& value) {
  data_[sec][key] = value;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap cfg;
  std::string sec;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": malformed section header");
      sec = trim(line.substr(1, line.size() - 2));
      if (sec.empty())
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty section name");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    if (sec.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": key outside any [section]");
    if (cfg.has(sec, key))
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": duplicate key [" + sec + "] " + key);
    cfg.set(sec, key, val);
  }
  return cfg;
}

ConfigMap load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

using KeySet = std::set<std::pair<std::string, std::string>>;

void allow(KeySet& ks, const std::string& sec,
           std::initializer_list<const char*> keys) {
  for (const char* k : keys) ks.emplace(sec, k);
}

KeySet allowed_keys(const std::string& scenario) {
  KeySet ks;
  allow(ks, "scenario", {"name", "seed"});
  allow(ks, "params", {"n", "alpha"});
  allow(ks, "grid", {"m", "r_min", "r_max"});
  allow(ks, "output", {"report", "table", "profile"});
  const bool has_profile = scenario != "window-scan" && scenario != "remark62";
  if (has_profile)
    allow(ks, "profile", {"kind", "c0", "c1", "c2", "p", "samples"});
  if (scenario != "remark62" && scenario != "cross-validate")
    allow(ks, "solver", {"tol", "max_iter", "damping", "gaussian_eps",
                         "cutoff_eps", "cutoff_delta", "cutoff_p"});
  if (scenario == "solve") {
    allow(ks, "normalization", {"mode", "value"});
    allow(ks, "assert", {"converged", "lambda_vol_rel", "lambda_star_rel",
                         "verdict", "poho_rel"});
  } else if (scenario == "bol-scan") {
    allow(ks, "scan", {"alphas", "rho"});
    allow(ks, "assert", {"converged", "upper_cap_rel", "lower_cap_rel",
                         "strict_gap_rel", "poho_rel", "verdict"});
  } else if (scenario == "window-scan") {
    allow(ks, "scan", {"targets"});
    allow(ks, "continuation", {"eps", "delta", "p"});
    allow(ks, "solver", {"tol", "max_iter", "damping"});
    allow(ks, "assert",
          {"expect_feasible", "expect_infeasible", "poho_singular_max"});
  } else if (scenario == "lambda-rho-curve") {
    allow(ks, "scan", {"rho"});
    allow(ks, "assert", {"converged", "endpoints_rel", "upper_cap_rel"});
  } else if (scenario == "remark62") {
    allow(ks, "scan", {"case", "k", "r_max"});
    allow(ks, "assert", {"monotone_from", "growth_ratio_min", "interior_flat",
                         "max_curv_below", "all_ok"});
  } else if (scenario == "pohozaev-check") {
    allow(ks, "scan", {"alphas", "rho"});
    allow(ks, "assert", {"converged", "poho_rel"});
  } else if (scenario == "totalcurv-bound") {
    allow(ks, "scan", {"alphas", "rho"});
    allow(ks, "assert",
          {"max_below", "ratio_below", "sup_below", "min_converged"});
  } else if (scenario == "cross-validate") {
    allow(ks, "scan", {"alphas", "rho", "shoot_tol"});
    allow(ks, "assert", {"align_sup_max", "deviation_max"});
  } else {
    throw ConfigError("config: unknown scenario '" + scenario + "'");
  }
  return ks;
}

}  // namespace

void validate_config(const ConfigMap& cfg, const std::string& scenario) {
  const KeySet ks = allowed_keys(scenario);
  for (const auto& [sec, kv] : cfg.sections())
    for (const auto& [key, val] : kv)
      if (!ks.count({sec, key}))
        throw ConfigError("config: key [" + sec + "] " + key +
                          " is not accepted by scenario '" + scenario + "'");
}

}  // namespace qcurv
