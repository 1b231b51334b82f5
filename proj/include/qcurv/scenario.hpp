#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcurv/model.hpp"

namespace qcurv {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat INI-style configuration: [section] headers, key = value lines,
// '#' or ';' comments.  Values stay strings until typed access.
class ConfigMap {
 public:
  using Section = std::map<std::string, std::string>;

  bool has(const std::string& sec, const std::string& key) const;
  const Section* section(const std::string& sec) const;

  std::string get_str(const std::string& sec, const std::string& key) const;
  std::string get_str(const std::string& sec, const std::string& key,
                      const std::string& fallback) const;
  double get_num(const std::string& sec, const std::string& key) const;
  double get_num(const std::string& sec, const std::string& key,
                 double fallback) const;
  long get_int(const std::string& sec, const std::string& key,
               long fallback) const;
  bool get_bool(const std::string& sec, const std::string& key,
                bool fallback) const;
  std::vector<double> get_list(const std::string& sec,
                               const std::string& key) const;
  std::vector<double> get_list(const std::string& sec, const std::string& key,
                               std::vector<double> fallback) const;

  void set(const std::string& sec, const std::string& key,
           const std::string& value);
  const std::map<std::string, Section>& sections() const { return data_; }

 private:
  std::map<std::string, Section> data_;
};

ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config(const std::string& path);

// Reject any (section, key) pair the named scenario does not understand.
void validate_config(const ConfigMap& cfg, const std::string& scenario);

struct ScenarioOutcome {
  int exit_code = 0;         // 0 ok, 2 requested assertion failed
  int assertions_failed = 0;
  std::string report_path;
};

// Execute the scenario named in cfg, writing its report (and any tables or
// profiles) under out_dir.  strict stops at the first failed assertion.
// Throws ConfigError / std::runtime_error on config or I/O problems.
ScenarioOutcome run_scenario(const ConfigMap& cfg, const std::string& out_dir,
                             int threads, bool strict);

// CSV profile dump, header "r,u,density,Q"; the Q column absorbs any active
// Gaussian factor so density = Q * r^{n alpha} * e^{n u} always holds among
// the emitted columns.
void emit_profile(const RadialField& field, const RadialGrid& grid,
                  const QProfile& profile, const ModelParams& params,
                  const CutoffConfig& cutoffs, double gaussian_eps,
                  const std::string& path);

}  // namespace qcurv
