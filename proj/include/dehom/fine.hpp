#pragma once

#include <Eigen/Dense>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dehom/coarse.hpp"
#include "dehom/phasor.hpp"

namespace dehom {

// Pixel-grid plane-stress evaluation of a BinaryField. Supports and loads
// are declared in coarse node coordinates and mapped to fine nodes by the
// coarse->fine factor implied by the field dimensions.
struct FineProblem {
  int nx = 0;  // fine pixels
  int ny = 0;
  std::vector<Support> supports;  // regions in coarse node coordinates
  std::vector<Load> loads;
  int coarse_nx = 0;  // coarse grid the regions refer to (0 = fine units)
  int coarse_ny = 0;
  double e_min = 1e-9;

  static FineProblem from_coarse(const CoarseProblem& coarse, int s_f);

  int node_count() const { return (nx + 1) * (ny + 1); }
  void validate() const;
  double scale_x() const { return coarse_nx > 0 ? static_cast<double>(nx) / coarse_nx : 1.0; }
  double scale_y() const { return coarse_ny > 0 ? static_cast<double>(ny) / coarse_ny : 1.0; }
  std::vector<int> nodes_in(const NodeRegion& region) const;
  Eigen::VectorXd force_vector() const;
  std::vector<char> fixed_dofs() const;
};

enum class Metric { Vf, Compliance, UMax, SigmaMax, Blf };

struct EvalResult {
  double vf = 0.0;
  std::optional<double> compliance;
  std::optional<double> u_max;
  std::optional<double> sigma_max;
  std::optional<double> blf;
  bool feasible = true;
  std::string notes;
};

struct StaticSolution {
  Eigen::VectorXd u;
  double compliance = 0.0;
  double u_max = 0.0;
  bool feasible = true;
  std::string notes;
};

double volume_fraction(const BinaryField& field);

// True when every loaded node connects to a supported node through solid
// pixels (4-connectivity); otherwise the evaluation is flagged infeasible.
bool loads_connected(const FineProblem& problem, const BinaryField& field);

StaticSolution solve_static(const FineProblem& problem, const BinaryField& field);

// Smoothed stress maximum: mean-based 8-norm of the per-solid-element von
// Mises stress at centroids; equals the uniform stress exactly in a uniform
// state. The raw element maximum is reported in EvalResult::notes.
double von_mises_max(const FineProblem& problem, const BinaryField& field,
                     const Eigen::VectorXd& displacements, double* raw_max = nullptr);

// First positive buckling load factor of K v = -lambda K_sigma v via power
// iteration on K^-1 K_sigma with a spectral shift; nullopt when the
// structure is stress free or no positive factor exists.
std::optional<double> buckling_blf(const FineProblem& problem, const BinaryField& field,
                                   const Eigen::VectorXd& displacements);

EvalResult evaluate(const FineProblem& problem, const BinaryField& field,
                    const std::set<Metric>& metrics);

// Per-result CSV row writer: id,vf,compliance,u_max,sigma_max,blf,feasible.
void save_results_csv(const std::vector<std::pair<std::string, EvalResult>>& results,
                      const std::string& path);

}  // namespace dehom
