#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dehom/common.hpp"

namespace dehom {

// Per-channel box bounds for a DesignField. Widths and density live in
// [lo, hi]; theta is unwrapped and may span several revolutions.
struct ChannelBounds {
  double mu_lo = 0.0;
  double mu_hi = 1.0;
  double theta_lo = -4.0 * kPi;
  double theta_hi = 4.0 * kPi;
  double rho_lo = 1e-3;
  double rho_hi = 1.0;
};

// Coarse-grid lattice descriptor: per macro element the two bar widths, the
// in-plane angle, and an optional macro density. Row-major storage,
// index = iy * nx + ix.
struct DesignField {
  int nx = 0;
  int ny = 0;
  std::vector<double> mu1;
  std::vector<double> mu2;
  std::vector<double> theta;
  std::vector<double> rho;
  ChannelBounds bounds;

  static DesignField uniform(int nx, int ny, double mu1, double mu2, double theta, double rho = 1.0);

  int count() const { return nx * ny; }
  int index(int ix, int iy) const { return iy * nx + ix; }

  // Effective bar widths mu_j * rho of element e.
  double w1(int e) const { return mu1[e] * rho[e]; }
  double w2(int e) const { return mu2[e] * rho[e]; }

  // Homogenized solid fraction: mean of w1 + w2 - w1*w2 over elements.
  double volume() const;

  // Collapse the density channel into the widths (mu <- mu*rho, rho <- 1)
  // and widen the mu bounds to [0, mu_hi]; the reduced representation the
  // evolutionary loop operates on.
  DesignField folded() const;

  void clamp_to_bounds();
  bool same_shape(const DesignField& other) const { return nx == other.nx && ny == other.ny; }

  std::uint64_t content_hash() const;

  void save_csv(const std::string& path) const;
  static DesignField load_csv(const std::string& path);
};

}  // namespace dehom
