#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dehom/design_field.hpp"

namespace dehom {

// Shared spatial principal basis: one orthonormal Phi (N_m x N_c) applied to
// each of the three channels (mu1, mu2, theta). The density channel is
// expected to be folded into the widths before fitting. Immutable after fit.
struct PcaBasis {
  int nx = 0;
  int ny = 0;
  int n_c = 0;
  Eigen::MatrixXd phi;                 // N_m x N_c, orthonormal columns
  Eigen::MatrixXd mean;                // N_m x 3 channel means
  std::vector<double> explained;       // per-component variance fractions
  ChannelBounds bounds;                // clamp box applied on reconstruction
  std::uint64_t id = 0;                // content hash, for ReducedDesign back-reference

  int element_count() const { return nx * ny; }
  double explained_total() const;

  void save(const std::string& phi_path, const std::string& mean_path) const;
  static PcaBasis load(const std::string& phi_path, const std::string& mean_path);
};

// Reduced design variables: one coefficient column per channel (N_c x 3).
struct ReducedDesign {
  Eigen::MatrixXd z;  // n_c x 3
  std::uint64_t basis_id = 0;

  void save_csv(const std::string& path) const;
  static ReducedDesign load_csv(const std::string& path);
};

PcaBasis fit_pca(const std::vector<DesignField>& population, int n_c);

// Smallest component count reaching the requested explained-variance share.
int components_for_explained(const std::vector<DesignField>& population, double share);

ReducedDesign project(const PcaBasis& basis, const DesignField& x);
DesignField reconstruct(const PcaBasis& basis, const ReducedDesign& z);

}  // namespace dehom
