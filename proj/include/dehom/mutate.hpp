#pragma once

#include <random>
#include <vector>

#include "dehom/design_field.hpp"

namespace dehom {

// Keys cubic convolution kernel; a in [-1, 0] controls smoothness and the
// kernel reproduces constants (partition of unity) for any a.
double keys_weight(double r, double a);

struct MutationConfig {
  int n_samples = 10;    // individuals mutated per generation
  int n_points = 10;     // perturbation centers per individual
  double r_m = 20.0;     // influence radius in coarse cells
  double p0 = 2.0;       // decay exponent
  double strength = 1.0; // displacement scale in coarse cells
  double kernel_a = -0.5;

  void validate() const;
};

// Coarse displacement field sampled at element centers.
struct WarpField {
  int nx = 0;
  int ny = 0;
  std::vector<double> ux;
  std::vector<double> uy;
};

// Radial deformation mutation: for each random center, warp the sampling
// grid by the attenuated displacement field and resample every channel with
// the Keys kernel. Pixels outside every perturbation radius are copied
// bit-exactly; theta is resampled on doubled-angle sin/cos channels.
DesignField mutate(const DesignField& x, const WarpField& u_field, const MutationConfig& cfg,
                   std::mt19937_64& rng);

}  // namespace dehom
