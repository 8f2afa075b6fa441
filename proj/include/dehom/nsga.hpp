#pragma once

#include <array>
#include <limits>
#include <vector>

#include "dehom/design_field.hpp"
#include "dehom/pca.hpp"

namespace dehom {

// One candidate in the evolutionary loop. Objectives are minimized;
// constraint_violation = 0 means feasible. Rank and crowding are filled by
// nondominated_sort.
struct Individual {
  ReducedDesign z;
  DesignField x;
  std::array<double, 2> objectives = {0.0, 0.0};
  double constraint_violation = 0.0;
  bool feasible = true;
  int rank = 0;
  double crowding = 0.0;
  int id = 0;
};

// Constraint-dominance: feasible beats infeasible, lower violation beats
// higher; among feasible, standard Pareto dominance on the objectives.
bool dominates(const Individual& a, const Individual& b);

// Fast non-dominated sort (ranks from 1) plus per-front crowding distances
// (boundary points get +infinity).
void nondominated_sort(std::vector<Individual>* pop);

// NSGA-II elitist survivor selection: fill by ascending rank, break the
// final partial front by descending crowding, ties by original input order.
std::vector<Individual> select(std::vector<Individual> pool, int n);

// Exact hypervolume of a 2-objective minimization front against a reference
// point; points not strictly dominating the reference are clipped out.
double hypervolume(const std::vector<std::array<double, 2>>& front,
                   const std::array<double, 2>& ref);

}  // namespace dehom
