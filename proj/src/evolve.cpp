#include "dehom/evolve.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "dehom/mutate.hpp"
#include "dehom/vae.hpp"

namespace fs = std::filesystem;

namespace dehom {

double PiecewiseLinear::operator()(double x) const {
  if (xs.empty()) return 0.0;
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  size_t i = static_cast<size_t>(it - xs.begin());
  double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

PiecewiseLinear PiecewiseLinear::fit(std::vector<std::pair<double, double>> points) {
  std::sort(points.begin(), points.end());
  PiecewiseLinear pl;
  for (const auto& [x, y] : points) {
    if (!pl.xs.empty() && x <= pl.xs.back() + 1e-12) {
      pl.ys.back() = std::max(pl.ys.back(), y);  // duplicate volume: keep the laxer bound
      continue;
    }
    pl.xs.push_back(x);
    pl.ys.push_back(y);
  }
  return pl;
}

double opt_objective(const RunFileConfig& cfg, const EvalResult& r) {
  auto need = [&](const std::optional<double>& v) {
    return v ? *v : 1e30;
  };
  if (cfg.objective == "compliance") return need(r.compliance);
  if (cfg.objective == "sigma_max") return need(r.sigma_max);
  if (cfg.objective == "blf") return r.blf ? -*r.blf : 1e30;
  return need(r.u_max);
}

std::vector<Individual> evaluate_batch(const EvolveContext& ctx,
                                       const std::vector<ReducedDesign>& zs, int first_id,
                                       std::vector<BinaryField>* fields) {
  const int n = static_cast<int>(zs.size());
  std::vector<Individual> out(n);
  fields->assign(n, BinaryField{});
  std::atomic<int> cursor{0};
  auto worker = [&]() {
    while (true) {
      int k = cursor.fetch_add(1);
      if (k >= n) break;
      Individual& ind = out[k];
      ind.z = zs[k];
      ind.id = first_id + k;
      ind.x = reconstruct(ctx.basis, zs[k]);
      EvalResult r;
      try {
        BinaryField field = dehomogenize(ind.x, ctx.mesh, ctx.cfg.phasor.phasor);
        r = evaluate(ctx.fine, field, ctx.metrics);
        (*fields)[k] = std::move(field);
      } catch (const std::exception& e) {
        r.feasible = false;
        r.notes = e.what();
      }
      ind.feasible = r.feasible;
      if (r.feasible) {
        ind.objectives = {r.vf, opt_objective(ctx.cfg, r)};
        ind.constraint_violation = 0.0;
        if (ctx.u_ref && r.u_max) {
          ind.constraint_violation = std::max(0.0, *r.u_max - (*ctx.u_ref)(r.vf));
          ind.feasible = ind.constraint_violation <= 0.0;
        }
      } else {
        ind.objectives = {1e30, 1e30};
        ind.constraint_violation = 1e30;
      }
    }
  };
  int workers = std::max(1, std::min(ctx.cfg.workers, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  return out;
}

namespace {

std::vector<std::array<double, 2>> feasible_front(const std::vector<Individual>& pop) {
  std::vector<std::array<double, 2>> pts;
  for (const Individual& ind : pop)
    if (ind.feasible && ind.constraint_violation <= 0.0) pts.push_back(ind.objectives);
  return pts;
}

std::string generation_dir(const std::string& out_dir, int gen) {
  return out_dir + "/gen_" + std::to_string(gen);
}

void write_population_csv(const EvolveContext& ctx, const RunState& state) {
  std::ostringstream out;
  const int zdim = ctx.basis.n_c * 3;
  out << "id";
  for (int i = 0; i < zdim; ++i) out << ",z" << i;
  out << ",g_vf,g_opt,violation,rank,crowding,feasible\n";
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const Individual& ind : state.population) {
    out << ind.id;
    Eigen::VectorXd flat = flatten_design(ind.z);
    for (int i = 0; i < zdim; ++i) out << ',' << num(flat[i]);
    out << ',' << num(ind.objectives[0]) << ',' << num(ind.objectives[1]) << ','
        << num(ind.constraint_violation) << ',' << ind.rank << ','
        << (std::isinf(ind.crowding) ? "inf" : num(ind.crowding)) << ','
        << (ind.feasible ? 1 : 0) << '\n';
  }
  atomic_write(generation_dir(ctx.out_dir, state.generation) + "/population.csv", out.str());
}

void write_hypervolume_csv(const EvolveContext& ctx, const RunState& state) {
  std::ostringstream out;
  out << "generation,hv\n";
  char buf[64];
  for (size_t g = 0; g < state.hypervolume_history.size(); ++g) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", g, state.hypervolume_history[g]);
    out << buf;
  }
  atomic_write(ctx.out_dir + "/hypervolume.csv", out.str());
}

}  // namespace

void atomic_write(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + tmp);
    f << content;
    if (!f.good()) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + tmp + " -> " + path + ": " + ec.message());
}

void persist_run_header(const EvolveContext& ctx, const RunState& state) {
  fs::create_directories(ctx.out_dir);
  ctx.surrogate.save_csv(ctx.out_dir + "/surrogate.csv");
  ctx.basis.save(ctx.out_dir + "/phi.csv", ctx.out_dir + "/mean.csv");
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "ref_x = %.17g\nref_y = %.17g\nseed = %llu\npopulation = %d\nconfig_hash = %llu\n",
                state.ref_point[0], state.ref_point[1],
                static_cast<unsigned long long>(ctx.cfg.seed),
                static_cast<int>(state.population.size()),
                static_cast<unsigned long long>(ctx.cfg.config_hash));
  atomic_write(ctx.out_dir + "/state.cfg", buf);
}

void persist_generation(const EvolveContext& ctx, const RunState& state,
                        const std::vector<BinaryField>& fields) {
  std::string dir = generation_dir(ctx.out_dir, state.generation);
  fs::create_directories(dir + "/fields");
  fs::create_directories(dir + "/binary");
  write_population_csv(ctx, state);
  char name[64];
  for (size_t k = 0; k < state.population.size(); ++k) {
    const Individual& ind = state.population[k];
    std::snprintf(name, sizeof(name), "/ind_%03d", ind.id);
    ind.x.save_csv(dir + "/fields" + name + ".csv");
    if (k < fields.size() && !fields[k].values.empty()) {
      fields[k].save_pgm(dir + "/binary" + name + ".pgm");
    }
  }
  write_hypervolume_csv(ctx, state);
}

RunState initialize_run(const EvolveContext& ctx, const std::vector<ReducedDesign>& initial) {
  if (initial.empty()) throw ConfigError("run: initial population is empty");
  RunState state;
  state.generation = 0;
  std::vector<BinaryField> fields;
  state.population = evaluate_batch(ctx, initial, 0, &fields);
  state.next_id = static_cast<int>(initial.size());

  double max0 = -std::numeric_limits<double>::infinity();
  double max1 = max0;
  bool any = false;
  for (const Individual& ind : state.population) {
    if (!ind.feasible) continue;
    max0 = std::max(max0, ind.objectives[0]);
    max1 = std::max(max1, ind.objectives[1]);
    any = true;
  }
  if (!any) throw NumericError("run: no feasible individual in the initial population");
  state.ref_point = {max0 + 0.1 * std::max(std::abs(max0), 1e-12),
                     max1 + 0.1 * std::max(std::abs(max1), 1e-12)};

  nondominated_sort(&state.population);
  state.hypervolume_history.push_back(hypervolume(feasible_front(state.population), state.ref_point));
  persist_run_header(ctx, state);
  persist_generation(ctx, state, fields);
  return state;
}

void advance_generation(const EvolveContext& ctx, RunState* state) {
  const int gen = state->generation + 1;
  const int n = static_cast<int>(state->population.size());
  const int n_off = ctx.offspring_count(n);

  std::vector<ReducedDesign> elite_z;
  elite_z.reserve(n);
  for (const Individual& ind : state->population) elite_z.push_back(ind.z);

  std::mt19937_64 rng_vae = make_rng(ctx.cfg.seed, RngPurpose::VaeInit, gen);
  VaeModel vae = train_vae(elite_z, ctx.cfg.vae, rng_vae);

  std::mt19937_64 rng_cross = make_rng(ctx.cfg.seed, RngPurpose::Crossover, gen);
  std::vector<ReducedDesign> offspring =
      crossover(vae, elite_z, n_off, ctx.cfg.jitter, rng_cross);

  // Deformation mutation on a random subset of the decoded offspring.
  std::mt19937_64 rng_mut = make_rng(ctx.cfg.seed, RngPurpose::Mutation, gen);
  int n_mut = std::min(ctx.cfg.mutation.n_samples, n_off);
  std::vector<int> order(n_off);
  for (int i = 0; i < n_off; ++i) order[i] = i;
  for (int i = 0; i < n_mut; ++i) {  // partial Fisher-Yates
    std::uniform_int_distribution<int> pick(i, n_off - 1);
    std::swap(order[i], order[pick(rng_mut)]);
  }
  for (int m = 0; m < n_mut; ++m) {
    int k = order[m];
    DesignField x = reconstruct(ctx.basis, offspring[k]);
    try {
      CoarseState cs = assemble_and_solve(ctx.problem, x, ctx.surrogate);
      WarpField warp;
      warp.nx = x.nx;
      warp.ny = x.ny;
      warp.ux.resize(x.count());
      warp.uy.resize(x.count());
      int nnx = x.nx + 1;
      for (int j = 0; j < x.ny; ++j) {
        for (int i = 0; i < x.nx; ++i) {
          int e = x.index(i, j);
          std::array<int, 4> nodes = {j * nnx + i, j * nnx + i + 1, (j + 1) * nnx + i + 1,
                                      (j + 1) * nnx + i};
          double ux = 0.0, uy = 0.0;
          for (int a : nodes) {
            ux += cs.u[2 * a];
            uy += cs.u[2 * a + 1];
          }
          warp.ux[e] = 0.25 * ux;
          warp.uy[e] = 0.25 * uy;
        }
      }
      DesignField mutated = mutate(x, warp, ctx.cfg.mutation, rng_mut);
      offspring[k] = project(ctx.basis, mutated);
    } catch (const NumericError&) {
      // Degenerate decode (e.g. void design): leave this child unmutated.
    }
  }

  std::vector<BinaryField> fields;
  std::vector<Individual> children = evaluate_batch(ctx, offspring, state->next_id, &fields);
  state->next_id += n_off;

  std::vector<Individual> pool = state->population;
  pool.insert(pool.end(), children.begin(), children.end());
  state->population = select(std::move(pool), n);
  state->generation = gen;
  state->hypervolume_history.push_back(
      hypervolume(feasible_front(state->population), state->ref_point));

  // Persist the surviving individuals' binary fields: re-map by id.
  std::vector<BinaryField> survivor_fields(state->population.size());
  for (size_t k = 0; k < state->population.size(); ++k) {
    int id = state->population[k].id;
    int child_index = id - (state->next_id - n_off);
    if (child_index >= 0 && child_index < n_off) survivor_fields[k] = std::move(fields[child_index]);
  }
  persist_generation(ctx, *state, survivor_fields);
}

RunState run(const EvolveContext& ctx, const std::vector<ReducedDesign>& initial, int generations) {
  RunState state = initialize_run(ctx, initial);
  for (int g = 0; g < generations; ++g) {
    try {
      advance_generation(ctx, &state);
    } catch (const std::exception& e) {
      throw NumericError("run: generation " + std::to_string(state.generation + 1) +
                         " failed after checkpoint gen_" + std::to_string(state.generation) + ": " +
                         e.what());
    }
  }
  return state;
}

RunState load_generation(const EvolveContext& ctx, const std::string& gen_dir) {
  fs::path dir(gen_dir);
  if (!fs::exists(dir / "population.csv"))
    throw IoError("resume: missing population.csv under " + gen_dir);
  std::string name = dir.filename().string();
  if (name.rfind("gen_", 0) != 0) throw ConfigError("resume: expected a gen_K directory, got " + gen_dir);
  RunState state;
  state.generation = std::stoi(name.substr(4));

  ConfigFile st = ConfigFile::parse_file((dir.parent_path() / "state.cfg").string());
  state.ref_point = {st.get_double("ref_x"), st.get_double("ref_y")};

  std::ifstream f(dir / "population.csv");
  std::string line;
  std::getline(f, line);  // header
  const int zdim = ctx.basis.n_c * 3;
  int max_id = -1;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    Individual ind;
    std::getline(ls, tok, ',');
    ind.id = std::stoi(tok);
    Eigen::VectorXd flat(zdim);
    for (int i = 0; i < zdim; ++i) {
      std::getline(ls, tok, ',');
      flat[i] = std::stod(tok);
    }
    ind.z = unflatten_design(flat, ctx.basis.n_c, ctx.basis.id);
    std::getline(ls, tok, ',');
    ind.objectives[0] = std::stod(tok);
    std::getline(ls, tok, ',');
    ind.objectives[1] = std::stod(tok);
    std::getline(ls, tok, ',');
    ind.constraint_violation = std::stod(tok);
    std::getline(ls, tok, ',');
    ind.rank = std::stoi(tok);
    std::getline(ls, tok, ',');
    ind.crowding = (tok == "inf") ? std::numeric_limits<double>::infinity() : std::stod(tok);
    std::getline(ls, tok, ',');
    ind.feasible = tok == "1";
    ind.x = reconstruct(ctx.basis, ind.z);
    max_id = std::max(max_id, ind.id);
    state.population.push_back(std::move(ind));
  }
  if (state.population.empty()) throw IoError("resume: empty population in " + gen_dir);
  state.next_id = max_id + 1;

  std::ifstream hv(dir.parent_path() / "hypervolume.csv");
  if (!hv) throw IoError("resume: missing hypervolume.csv next to " + gen_dir);
  std::getline(hv, line);
  while (std::getline(hv, line)) {
    if (line.empty()) continue;
    int g;
    double v;
    if (std::sscanf(line.c_str(), "%d,%lf", &g, &v) != 2) continue;
    if (g <= state.generation) {
      if (static_cast<int>(state.hypervolume_history.size()) <= g)
        state.hypervolume_history.resize(g + 1);
      state.hypervolume_history[g] = v;
    }
  }
  if (static_cast<int>(state.hypervolume_history.size()) != state.generation + 1)
    throw IoError("resume: hypervolume.csv does not cover gen_" + std::to_string(state.generation));
  return state;
}

}  // namespace dehom
