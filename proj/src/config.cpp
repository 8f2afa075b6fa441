#include "dehom/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dehom {
namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& name) {
  ConfigFile cfg;
  cfg.name_ = name;
  cfg.text_ = text;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": expected 'key = value', got '" +
                        t + "'");
    }
    Entry e;
    e.key = trim(t.substr(0, eq));
    e.value = trim(t.substr(eq + 1));
    e.line = lineno;
    if (e.key.empty())
      throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
    cfg.entries_.push_back(std::move(e));
  }
  return cfg;
}

bool ConfigFile::has(const std::string& key) const {
  for (const Entry& e : entries_)
    if (e.key == key) return true;
  return false;
}

std::string ConfigFile::get_string(const std::string& key) const {
  for (const Entry& e : entries_)
    if (e.key == key) return e.value;
  throw ConfigError(name_ + ": missing required key '" + key + "'");
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  for (const Entry& e : entries_)
    if (e.key == key) return e.value;
  return fallback;
}

double ConfigFile::get_double(const std::string& key, std::optional<double> fallback) const {
  for (const Entry& e : entries_) {
    if (e.key != key) continue;
    try {
      size_t used = 0;
      double v = std::stod(e.value, &used);
      if (used != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (...) {
      fail(e, "expected a number, got '" + e.value + "'");
    }
  }
  if (fallback) return *fallback;
  throw ConfigError(name_ + ": missing required key '" + key + "'");
}

int ConfigFile::get_int(const std::string& key, std::optional<int> fallback) const {
  for (const Entry& e : entries_) {
    if (e.key != key) continue;
    try {
      size_t used = 0;
      int v = std::stoi(e.value, &used);
      if (used != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (...) {
      fail(e, "expected an integer, got '" + e.value + "'");
    }
  }
  if (fallback) return *fallback;
  throw ConfigError(name_ + ": missing required key '" + key + "'");
}

std::vector<const ConfigFile::Entry*> ConfigFile::all(const std::string& key) const {
  std::vector<const Entry*> out;
  for (const Entry& e : entries_)
    if (e.key == key) out.push_back(&e);
  return out;
}

void ConfigFile::restrict_keys(const std::vector<std::string>& allowed) const {
  for (const Entry& e : entries_) {
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) {
      fail(e, "unknown key '" + e.key + "'");
    }
  }
}

void ConfigFile::fail(const Entry& entry, const std::string& message) const {
  throw ConfigError(name_ + ":" + std::to_string(entry.line) + ": key '" + entry.key + "': " +
                    message);
}

namespace {

NodeRegion parse_region(const ConfigFile& cfg, const ConfigFile::Entry& e,
                        const std::vector<std::string>& toks, int nx, int ny, size_t* used) {
  if (toks.empty()) cfg.fail(e, "missing region");
  const std::string& kind = toks[0];
  NodeRegion r;
  if (kind == "left") {
    r = {0, 0, 0, static_cast<double>(ny)};
    *used = 1;
  } else if (kind == "right") {
    r = {static_cast<double>(nx), 0, static_cast<double>(nx), static_cast<double>(ny)};
    *used = 1;
  } else if (kind == "bottom") {
    r = {0, 0, static_cast<double>(nx), 0};
    *used = 1;
  } else if (kind == "top") {
    r = {0, static_cast<double>(ny), static_cast<double>(nx), static_cast<double>(ny)};
    *used = 1;
  } else if (kind == "node") {
    if (toks.size() < 3) cfg.fail(e, "node region needs X Y");
    double x = std::stod(toks[1]), y = std::stod(toks[2]);
    r = {x, y, x, y};
    *used = 3;
  } else if (kind == "rect") {
    if (toks.size() < 5) cfg.fail(e, "rect region needs X0 Y0 X1 Y1");
    r = {std::stod(toks[1]), std::stod(toks[2]), std::stod(toks[3]), std::stod(toks[4])};
    *used = 5;
  } else {
    cfg.fail(e, "unknown region '" + kind + "' (want left|right|top|bottom|node|rect)");
  }
  return r;
}

}  // namespace

CoarseProblem parse_problem(const ConfigFile& cfg) {
  cfg.restrict_keys({"grid", "support", "load", "v0", "lmin", "lmax", "mode", "p", "mu_min",
                     "mu_max"});
  CoarseProblem p;
  {
    std::vector<std::string> toks = split_ws(cfg.get_string("grid"));
    if (toks.size() != 2) throw ConfigError(cfg.name() + ": key 'grid': expected 'NX NY'");
    p.nx = std::stoi(toks[0]);
    p.ny = std::stoi(toks[1]);
  }
  for (const ConfigFile::Entry* e : cfg.all("support")) {
    std::vector<std::string> toks = split_ws(e->value);
    size_t used = 0;
    Support s;
    s.region = parse_region(cfg, *e, toks, p.nx, p.ny, &used);
    std::string dofs = used < toks.size() ? toks[used] : "xy";
    s.fix_x = dofs.find('x') != std::string::npos;
    s.fix_y = dofs.find('y') != std::string::npos;
    if (!s.fix_x && !s.fix_y) cfg.fail(*e, "support dofs must include x and/or y");
    p.supports.push_back(s);
  }
  for (const ConfigFile::Entry* e : cfg.all("load")) {
    std::vector<std::string> toks = split_ws(e->value);
    size_t used = 0;
    Load l;
    l.region = parse_region(cfg, *e, toks, p.nx, p.ny, &used);
    if (toks.size() < used + 2) cfg.fail(*e, "load needs FX FY after the region");
    l.fx = std::stod(toks[used]);
    l.fy = std::stod(toks[used + 1]);
    p.loads.push_back(l);
  }
  p.v0 = cfg.get_double("v0", 0.5);
  p.l_min = cfg.get_double("lmin", 0.1);
  p.l_max = cfg.get_double("lmax", 1.0);
  std::string mode = cfg.get_string("mode", "free-widths");
  if (mode == "free-widths") p.mode = ParamMode::FreeWidths;
  else if (mode == "width-interp") p.mode = ParamMode::WidthInterp;
  else throw ConfigError(cfg.name() + ": key 'mode': unknown mode '" + mode + "'");
  p.p = cfg.get_double("p", 3.0);
  p.mu_min = cfg.get_double("mu_min", 0.3);
  p.mu_max = cfg.get_double("mu_max", 1.0);
  p.validate();
  return p;
}

CoarseProblem load_problem(const std::string& path) {
  return parse_problem(ConfigFile::parse_file(path));
}

PhasorFileConfig parse_phasor(const ConfigFile& cfg) {
  cfg.restrict_keys({"omega", "beta", "aspect", "align_iters", "sample_radius", "s_i", "s_f",
                     "rho_void"});
  PhasorFileConfig out;
  out.phasor.omega = cfg.get_double("omega", 1.0);
  out.phasor.beta = cfg.get_double("beta", 1.0);
  out.phasor.aspect = cfg.get_double("aspect", 2.0);
  out.phasor.align_iters = cfg.get_int("align_iters", 10);
  out.phasor.sample_radius = cfg.get_double("sample_radius", 3.0);
  out.phasor.rho_void = cfg.get_double("rho_void", 0.05);
  out.s_i = cfg.get_int("s_i", 4);
  out.s_f = cfg.get_int("s_f", 16);
  out.phasor.validate();
  return out;
}

PhasorFileConfig load_phasor(const std::string& path) {
  return parse_phasor(ConfigFile::parse_file(path));
}

RunFileConfig parse_run(const ConfigFile& cfg) {
  cfg.restrict_keys({"problem",        "omega",          "beta",          "aspect",
                     "align_iters",    "sample_radius",  "s_i",           "s_f",
                     "rho_void",       "n_c",            "vae_n_lat",     "vae_hidden1",
                     "vae_hidden2",    "vae_epochs",     "vae_lr",        "vae_beta",
                     "mutation_samples", "mutation_points", "mutation_radius", "mutation_p0",
                     "mutation_strength", "mutation_kernel_a", "jitter",  "generations",
                     "seed",           "workers",        "offspring",     "surrogate_grid",
                     "surrogate_order", "cell_resolution", "objective",   "stiffness_constraint"});
  RunFileConfig run;
  run.problem_path = cfg.get_string("problem");
  if (!std::filesystem::exists(run.problem_path)) {
    throw ConfigError(cfg.name() + ": key 'problem': referenced path does not exist: " +
                      run.problem_path);
  }
  run.phasor.phasor.omega = cfg.get_double("omega", 1.0);
  run.phasor.phasor.beta = cfg.get_double("beta", 1.0);
  run.phasor.phasor.aspect = cfg.get_double("aspect", 2.0);
  run.phasor.phasor.align_iters = cfg.get_int("align_iters", 10);
  run.phasor.phasor.sample_radius = cfg.get_double("sample_radius", 3.0);
  run.phasor.phasor.rho_void = cfg.get_double("rho_void", 0.05);
  run.phasor.s_i = cfg.get_int("s_i", 4);
  run.phasor.s_f = cfg.get_int("s_f", 16);
  run.phasor.phasor.validate();
  run.n_c = cfg.get_int("n_c", 0);
  run.vae.n_lat = cfg.get_int("vae_n_lat", 8);
  run.vae.hidden1 = cfg.get_int("vae_hidden1", 64);
  run.vae.hidden2 = cfg.get_int("vae_hidden2", 32);
  run.vae.epochs = cfg.get_int("vae_epochs", 400);
  run.vae.lr = cfg.get_double("vae_lr", 1e-3);
  run.vae.beta = cfg.get_double("vae_beta", 1e-3);
  run.mutation.n_samples = cfg.get_int("mutation_samples", 10);
  run.mutation.n_points = cfg.get_int("mutation_points", 10);
  run.mutation.r_m = cfg.get_double("mutation_radius", 20.0);
  run.mutation.p0 = cfg.get_double("mutation_p0", 2.0);
  run.mutation.strength = cfg.get_double("mutation_strength", 1.0);
  run.mutation.kernel_a = cfg.get_double("mutation_kernel_a", -0.5);
  run.mutation.validate();
  run.jitter = cfg.get_double("jitter", 0.1);
  run.generations = cfg.get_int("generations", 15);
  long long seed = static_cast<long long>(cfg.get_double("seed", 0));
  if (seed < 0) throw ConfigError(cfg.name() + ": key 'seed': must be >= 0");
  run.seed = static_cast<std::uint64_t>(seed);
  run.workers = cfg.get_int("workers", 2);
  if (run.workers < 1) throw ConfigError(cfg.name() + ": key 'workers': must be >= 1");
  run.offspring = cfg.get_int("offspring", 0);
  run.surrogate_grid = cfg.get_int("surrogate_grid", 11);
  run.surrogate_order = cfg.get_int("surrogate_order", 5);
  run.cell_resolution = cfg.get_int("cell_resolution", 64);
  run.objective = cfg.get_string("objective", "u_max");
  if (run.objective != "u_max" && run.objective != "compliance" && run.objective != "sigma_max" &&
      run.objective != "blf") {
    throw ConfigError(cfg.name() + ": key 'objective': unknown objective '" + run.objective + "'");
  }
  run.stiffness_constraint = cfg.get_int("stiffness_constraint", 0) != 0;
  run.config_hash = fnv1a(cfg.text());
  return run;
}

RunFileConfig load_run(const std::string& path) {
  return parse_run(ConfigFile::parse_file(path));
}

std::vector<ScheduleEntry> load_schedule_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open schedule csv: " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("v0,lmin", 0) != 0)
    throw IoError("schedule csv missing 'v0,lmin' header: " + path);
  std::vector<ScheduleEntry> out;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ScheduleEntry e;
    if (std::sscanf(line.c_str(), "%lf,%lf", &e.v0, &e.l_min) != 2)
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed schedule row '" + line + "'");
    out.push_back(e);
  }
  if (out.empty()) throw ConfigError("schedule csv has no entries: " + path);
  return out;
}

}  // namespace dehom
