#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "dehom/design_field.hpp"

namespace dehom {

// Three-level grid hierarchy: the coarse design grid, the intermediate grid
// where phasor fields are synthesized, and the fine grid carrying the binary
// structure. Upsampling factors are per coarse element.
struct MeshHierarchy {
  int nx = 0;
  int ny = 0;
  int s_i = 4;
  int s_f = 16;

  MeshHierarchy() = default;
  MeshHierarchy(int nx_, int ny_, int si, int sf);

  int inter_nx() const { return nx * s_i; }
  int inter_ny() const { return ny * s_i; }
  int fine_nx() const { return nx * s_f; }
  int fine_ny() const { return ny * s_f; }
};

struct PhasorConfig {
  double omega = 1.0;        // stripe periods per coarse element
  double beta = 1.0;         // Gaussian decay per squared coarse element
  double aspect = 2.0;       // elliptical attenuation ratio along the wave direction
  int align_iters = 10;      // Gauss-Seidel phase alignment sweeps
  double sample_radius = 3.0;  // kernel cutoff in coarse elements
  double rho_void = 0.05;    // macro density at or below which pixels are void

  void validate() const;
  std::uint64_t content_hash() const;
};

// Orthogonal lamination directions and the relative bar widths they carry.
// n1 = (cos theta, sin theta) is the axis of the width-t1 bars; those bars
// are bands of the phase field oscillating along n2, and vice versa.
struct LaminationDirections {
  std::vector<Eigen::Vector2d> n1;
  std::vector<Eigen::Vector2d> n2;
  std::vector<double> t1;
  std::vector<double> t2;
};

LaminationDirections lamination_directions(const DesignField& x);

// One phasor kernel family: a Gabor-style emitter per coarse element.
struct KernelSet {
  int nx = 0;
  int ny = 0;
  std::vector<Eigen::Vector2d> center;  // coarse units
  std::vector<Eigen::Vector2d> dir;     // unit oscillation direction
  std::vector<double> phase;
};

KernelSet make_kernels(const DesignField& x, const std::vector<Eigen::Vector2d>& dirs);

// Neighbor phase-discrepancy objective; alignment sweeps never increase it.
double alignment_energy(const KernelSet& kernels, const PhasorConfig& cfg);

// Gauss-Seidel sweeps setting each phase to the weighted circular mean of
// its neighbors' predictions, sign-invariant in the direction field.
// Returns the energy before the first sweep and after each sweep.
std::vector<double> align_phases(KernelSet* kernels, const PhasorConfig& cfg);

// Complex wave field sampled at intermediate grid nodes.
struct ComplexField {
  int nx = 0;
  int ny = 0;
  std::vector<std::complex<double>> values;

  std::complex<double> at(int i, int j) const { return values[static_cast<size_t>(j) * nx + i]; }
};

ComplexField synthesize_field(const KernelSet& kernels, const MeshHierarchy& mesh,
                              const PhasorConfig& cfg);

// Both lamination families: kernels built, phases aligned, fields sampled.
std::pair<ComplexField, ComplexField> synthesize(const DesignField& x,
                                                 const LaminationDirections& dirs,
                                                 const MeshHierarchy& mesh,
                                                 const PhasorConfig& cfg);

// Sawtooth phase in [0,1): (Arg/2pi) mod 1. Zero-magnitude nodes demodulate
// to 0 and are counted.
struct PhaseField {
  int nx = 0;
  int ny = 0;
  std::vector<double> values;
  int flagged_nodes = 0;

  double at(int i, int j) const { return values[static_cast<size_t>(j) * nx + i]; }
};

PhaseField demodulate(const ComplexField& g);

// Fine binary structure.
struct BinaryField {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> values;  // 0 void, 1 solid
  std::uint64_t design_hash = 0;
  std::uint64_t config_hash = 0;

  std::uint8_t at(int i, int j) const { return values[static_cast<size_t>(j) * nx + i]; }
  void set(int i, int j, std::uint8_t v) { values[static_cast<size_t>(j) * nx + i] = v; }
  double solid_fraction() const;

  void save_pgm(const std::string& path) const;  // P5, solid=255; plus .meta sidecar
  static BinaryField load_pgm(const std::string& path);
};

// Bicubic upsampling of the phase fields to the fine grid, centered-band
// thresholding against the bar widths, Boolean union of the two families.
// The width-t1 bars come from phi2 (they oscillate across n1's orthogonal),
// the width-t2 bars from phi1.
BinaryField threshold_union(const PhaseField& phi1, const PhaseField& phi2,
                            const std::vector<double>& t1, const std::vector<double>& t2,
                            const MeshHierarchy& mesh);

// Full pipeline: directions -> synthesis -> demodulation -> thresholding,
// with void (rho <= rho_void) and fully-solid (width at 1) element forcing.
BinaryField dehomogenize(const DesignField& x, const MeshHierarchy& mesh, const PhasorConfig& cfg);

}  // namespace dehom
