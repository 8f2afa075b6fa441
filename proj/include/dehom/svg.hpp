#pragma once

#include <array>
#include <string>
#include <vector>

namespace dehom {

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  bool feasible = true;
};

// Deterministic static charts: scatter for Pareto fronts (feasible points as
// circles, infeasible as crosses) and a polyline for hypervolume histories.
std::string pareto_svg(const std::vector<ScatterPoint>& points, const std::string& x_label,
                       const std::string& y_label);
std::string hypervolume_svg(const std::vector<double>& history);

}  // namespace dehom
