#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dehom/config.hpp"
#include "dehom/fine.hpp"
#include "dehom/nsga.hpp"
#include "dehom/pca.hpp"

namespace dehom {

// Monotone interpolant of (vf, u_max) over the initial population, used as
// the stiffness-constraint reference: designs may not displace more than the
// initial design of the same volume.
struct PiecewiseLinear {
  std::vector<double> xs;  // ascending
  std::vector<double> ys;
  double operator()(double x) const;
  static PiecewiseLinear fit(std::vector<std::pair<double, double>> points);
};

struct EvolveContext {
  RunFileConfig cfg;
  CoarseProblem problem;
  SurrogateModel surrogate;
  PcaBasis basis;
  MeshHierarchy mesh;
  FineProblem fine;
  std::set<Metric> metrics;
  std::optional<PiecewiseLinear> u_ref;
  std::string out_dir;

  int offspring_count(int population) const {
    return cfg.offspring > 0 ? cfg.offspring : population;
  }
};

struct RunState {
  int generation = 0;
  std::vector<Individual> population;
  std::vector<double> hypervolume_history;
  std::array<double, 2> ref_point = {0.0, 0.0};
  int next_id = 0;
};

// Second objective value per the configured metric (blf is negated so the
// pair stays a minimization problem).
double opt_objective(const RunFileConfig& cfg, const EvalResult& r);

// Decode, de-homogenize and evaluate a batch of reduced designs with the
// configured worker count; results keep input order. Binary fields are
// returned for persistence.
std::vector<Individual> evaluate_batch(const EvolveContext& ctx,
                                       const std::vector<ReducedDesign>& zs, int first_id,
                                       std::vector<BinaryField>* fields);

// Evaluates the initial population, freezes the hypervolume reference point
// at 1.1x the per-objective feasible maximum, persists gen_0.
RunState initialize_run(const EvolveContext& ctx, const std::vector<ReducedDesign>& initial);

// Advances the state one generation: VAE crossover in latent space,
// deformation mutation on decoded fields, evaluation, NSGA-II survival.
void advance_generation(const EvolveContext& ctx, RunState* state);

// Full loop: initialize (unless state resumed) and run `generations` steps.
RunState run(const EvolveContext& ctx, const std::vector<ReducedDesign>& initial, int generations);

// Persistence; layout under out_dir:
//   state.cfg, surrogate.csv, phi.csv, mean.csv, problem copy,
//   gen_k/population.csv, gen_k/fields/ind_*.csv, gen_k/binary/ind_*.pgm,
//   hypervolume.csv
void persist_generation(const EvolveContext& ctx, const RunState& state,
                        const std::vector<BinaryField>& fields);
void persist_run_header(const EvolveContext& ctx, const RunState& state);

// Rebuilds state from a persisted generation directory (e.g. out/gen_12).
RunState load_generation(const EvolveContext& ctx, const std::string& gen_dir);

// Atomic file write: temp file + rename.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace dehom
