#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dehom/design_field.hpp"
#include "dehom/homogenize.hpp"

namespace dehom {

// Node region selector in coarse node coordinates (0..nx, 0..ny). Regions
// are inclusive boxes; the edge shorthands expand to degenerate boxes.
struct NodeRegion {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(double x, double y) const {
    const double eps = 1e-9;
    return x >= x0 - eps && x <= x1 + eps && y >= y0 - eps && y <= y1 + eps;
  }
};

struct Support {
  NodeRegion region;
  bool fix_x = true;
  bool fix_y = true;
};

struct Load {
  NodeRegion region;
  double fx = 0.0;  // total force, split evenly over the region's nodes
  double fy = 0.0;
};

enum class ParamMode {
  FreeWidths,   // element tensor C(mu1*rho, mu2*rho), three width/density channels
  WidthInterp,  // mu(rho) = mu_min + (mu_max - mu_min) rho^p, density channel only
};

// In WidthInterp mode the rho channel of fields passed to assemble_and_solve
// and compliance_sensitivities is the interpolation variable; optimize()
// returns the materialized physical field (mu1 = mu2 = mu(rho), rho = 1).

struct CoarseProblem {
  int nx = 0;
  int ny = 0;
  std::vector<Support> supports;
  std::vector<Load> loads;
  double v0 = 0.5;
  double l_min = 0.1;
  double l_max = 1.0;
  ParamMode mode = ParamMode::FreeWidths;
  double p = 3.0;       // width-interp exponent
  double mu_min = 0.3;  // width-interp end points
  double mu_max = 1.0;

  int node_count() const { return (nx + 1) * (ny + 1); }
  int node_index(int ix, int iy) const { return iy * (nx + 1) + ix; }
  void validate() const;

  std::vector<int> nodes_in(const NodeRegion& region) const;
  // Assembled global force vector (2 dofs per node).
  Eigen::VectorXd force_vector() const;
  std::vector<char> fixed_dofs() const;
};

struct CoarseState {
  Eigen::VectorXd u;        // nodal displacements
  double compliance = 0.0;  // U^T F
  std::vector<Eigen::Vector3d> strain;  // element centroid strain (Voigt)
  std::vector<Eigen::Vector3d> stress;  // element centroid stress (Voigt)
};

// Per-element sensitivities of compliance w.r.t. the geometric channels.
struct CoarseSensitivities {
  std::vector<double> d_mu1;
  std::vector<double> d_mu2;
  std::vector<double> d_rho;
};

ElasticityTensor element_tensor(const CoarseProblem& problem, const DesignField& x, int e,
                                const SurrogateModel& surrogate);

CoarseState assemble_and_solve(const CoarseProblem& problem, const DesignField& x,
                               const SurrogateModel& surrogate);

CoarseSensitivities compliance_sensitivities(const CoarseProblem& problem, const DesignField& x,
                                             const CoarseState& state,
                                             const SurrogateModel& surrogate);

// Align each element's angle with its principal stress direction, choosing
// the pi-shifted representative nearest the previous angle. Elements in a
// hydrostatic stress state keep their angle.
DesignField update_theta(const DesignField& x, const CoarseState& state);

struct OptimizeOptions {
  int iters = 60;
  double move = 0.1;
  double damping = 0.5;
  double filter_radius = 1.5;
  std::vector<double>* compliance_history = nullptr;  // optional per-iteration log
};

// Optimality-criteria compliance minimization under the volume cap, with
// principal-stress angle updates. Deterministic.
DesignField optimize(const CoarseProblem& problem, const SurrogateModel& surrogate,
                     const OptimizeOptions& options);

struct ScheduleEntry {
  double v0 = 0.5;
  double l_min = 0.1;
};

std::vector<DesignField> generate_initial_population(const CoarseProblem& problem,
                                                     const SurrogateModel& surrogate,
                                                     const std::vector<ScheduleEntry>& schedule,
                                                     const OptimizeOptions& options);

}  // namespace dehom
