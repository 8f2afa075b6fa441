#include "dehom/nsga.hpp"

#include <algorithm>
#include <cmath>

namespace dehom {

bool dominates(const Individual& a, const Individual& b) {
  bool a_feas = a.constraint_violation <= 0.0;
  bool b_feas = b.constraint_violation <= 0.0;
  if (a_feas != b_feas) return a_feas;
  if (!a_feas) return a.constraint_violation < b.constraint_violation;
  bool no_worse = a.objectives[0] <= b.objectives[0] && a.objectives[1] <= b.objectives[1];
  bool better = a.objectives[0] < b.objectives[0] || a.objectives[1] < b.objectives[1];
  return no_worse && better;
}

namespace {

void crowding_for_front(std::vector<Individual>& pop, const std::vector<int>& front) {
  const double inf = std::numeric_limits<double>::infinity();
  for (int i : front) pop[i].crowding = 0.0;
  if (front.size() <= 2) {
    for (int i : front) pop[i].crowding = inf;
    return;
  }
  for (int m = 0; m < 2; ++m) {
    std::vector<int> order = front;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return pop[a].objectives[m] < pop[b].objectives[m];
    });
    double lo = pop[order.front()].objectives[m];
    double hi = pop[order.back()].objectives[m];
    pop[order.front()].crowding = inf;
    pop[order.back()].crowding = inf;
    double span = hi - lo;
    if (span <= 0.0) continue;
    for (size_t k = 1; k + 1 < order.size(); ++k) {
      if (std::isinf(pop[order[k]].crowding)) continue;
      pop[order[k]].crowding +=
          (pop[order[k + 1]].objectives[m] - pop[order[k - 1]].objectives[m]) / span;
    }
  }
}

}  // namespace

void nondominated_sort(std::vector<Individual>* pop) {
  const int n = static_cast<int>(pop->size());
  std::vector<std::vector<int>> dominated(n);
  std::vector<int> dom_count(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dominates((*pop)[i], (*pop)[j])) dominated[i].push_back(j);
      else if (dominates((*pop)[j], (*pop)[i])) ++dom_count[i];
    }
  }
  std::vector<int> current;
  for (int i = 0; i < n; ++i)
    if (dom_count[i] == 0) current.push_back(i);
  int rank = 1;
  while (!current.empty()) {
    for (int i : current) (*pop)[i].rank = rank;
    crowding_for_front(*pop, current);
    std::vector<int> next;
    for (int i : current) {
      for (int j : dominated[i]) {
        if (--dom_count[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
    ++rank;
  }
}

std::vector<Individual> select(std::vector<Individual> pool, int n) {
  if (static_cast<int>(pool.size()) < n)
    throw ConfigError("select: pool smaller than survivor count");
  nondominated_sort(&pool);
  std::vector<int> order(pool.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (pool[a].rank != pool[b].rank) return pool[a].rank < pool[b].rank;
    return pool[a].crowding > pool[b].crowding;
  });
  std::vector<Individual> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back(pool[order[k]]);
  return out;
}

double hypervolume(const std::vector<std::array<double, 2>>& front,
                   const std::array<double, 2>& ref) {
  std::vector<std::array<double, 2>> pts;
  for (const auto& p : front)
    if (p[0] < ref[0] && p[1] < ref[1]) pts.push_back(p);
  if (pts.empty()) return 0.0;
  std::sort(pts.begin(), pts.end());
  // Sweep ascending in f0 keeping only strict improvements in f1.
  double hv = 0.0;
  double best_f1 = std::numeric_limits<double>::infinity();
  std::vector<std::array<double, 2>> staircase;
  for (const auto& p : pts) {
    if (p[1] < best_f1) {
      staircase.push_back(p);
      best_f1 = p[1];
    }
  }
  for (size_t i = 0; i < staircase.size(); ++i) {
    double x1 = (i + 1 < staircase.size()) ? staircase[i + 1][0] : ref[0];
    hv += (x1 - staircase[i][0]) * (ref[1] - staircase[i][1]);
  }
  return hv;
}

}  // namespace dehom
