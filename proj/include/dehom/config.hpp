#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dehom/coarse.hpp"
#include "dehom/mutate.hpp"
#include "dehom/phasor.hpp"
#include "dehom/vae.hpp"

namespace dehom {

// Line-oriented `key = value` files, '#' comments. Parse errors carry the
// file name, the line number, and the offending key.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_text(const std::string& text, const std::string& name);

  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };

  const std::vector<Entry>& entries() const { return entries_; }
  const std::string& name() const { return name_; }
  const std::string& text() const { return text_; }

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, std::optional<double> fallback = {}) const;
  int get_int(const std::string& key, std::optional<int> fallback = {}) const;
  std::vector<const Entry*> all(const std::string& key) const;

  // Every key must belong to the allowed set; unknown keys raise ConfigError.
  void restrict_keys(const std::vector<std::string>& allowed) const;

  [[noreturn]] void fail(const Entry& entry, const std::string& message) const;

 private:
  std::string name_;
  std::string text_;
  std::vector<Entry> entries_;
};

// Documented keys: grid, supports, loads, v0, lmin, lmax, mode, p, mu_min,
// mu_max. Regions: left|right|top|bottom, `node X Y`, `rect X0 Y0 X1 Y1`.
CoarseProblem parse_problem(const ConfigFile& cfg);
CoarseProblem load_problem(const std::string& path);

struct PhasorFileConfig {
  PhasorConfig phasor;
  int s_i = 4;
  int s_f = 16;
};
PhasorFileConfig parse_phasor(const ConfigFile& cfg);
PhasorFileConfig load_phasor(const std::string& path);

struct RunFileConfig {
  std::string problem_path;
  PhasorFileConfig phasor;
  int n_c = 0;  // 0: smallest count explaining 99% variance
  VaeConfig vae;
  MutationConfig mutation;
  double jitter = 0.1;
  int generations = 15;
  std::uint64_t seed = 0;
  int workers = 2;
  int offspring = 0;  // 0: population size
  int surrogate_grid = 11;
  int surrogate_order = 5;
  int cell_resolution = 64;
  std::string objective = "u_max";  // second objective: u_max|compliance|sigma_max|blf
  bool stiffness_constraint = false;
  std::uint64_t config_hash = 0;
};
RunFileConfig parse_run(const ConfigFile& cfg);
RunFileConfig load_run(const std::string& path);

std::vector<ScheduleEntry> load_schedule_csv(const std::string& path);

}  // namespace dehom
