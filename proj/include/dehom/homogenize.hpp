#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "dehom/elasticity.hpp"

namespace dehom {

// Effective plane-stress tensor of the square periodic cross-bar cell.
// mu1 is the relative width of the bar running along local axis 1 (so c11
// grows with mu1), mu2 the width of the bar along axis 2; both cross at the
// cell centroid. Energy-based unit-cell FEM with periodic boundary
// conditions; void gets an ersatz stiffness of 1e-9 * E.
//
// Base material E = 1, nu = 0.3. Partial pixel coverage is blended linearly
// so the tensor varies continuously with the widths.
ElasticityTensor homogenize_cell(double mu1, double mu2, int cell_resolution);

// Bivariate polynomial surrogate over (mu1, mu2) in [0,1]^2 in the shifted
// basis (2 mu1 - 1)^q (2 mu2 - 1)^r, one coefficient table per tensor
// component. Immutable after fitting; safe to share across threads.
class SurrogateModel {
 public:
  // coeffs[comp][q * (r_max+1) + r], comp order c11, c12, c22, c33.
  static constexpr int kComponents = 4;

  SurrogateModel() = default;
  SurrogateModel(int q_max, int r_max, std::vector<std::vector<double>> coeffs, double fit_residual);
  SurrogateModel(const SurrogateModel& other)
      : q_max_(other.q_max_),
        r_max_(other.r_max_),
        coeffs_(other.coeffs_),
        fit_residual_(other.fit_residual_),
        clamp_warnings_(other.clamp_warnings_.load()) {}
  SurrogateModel& operator=(const SurrogateModel& other) {
    q_max_ = other.q_max_;
    r_max_ = other.r_max_;
    coeffs_ = other.coeffs_;
    fit_residual_ = other.fit_residual_;
    clamp_warnings_ = other.clamp_warnings_.load();
    return *this;
  }

  int q_max() const { return q_max_; }
  int r_max() const { return r_max_; }
  double fit_residual() const { return fit_residual_; }
  const std::vector<std::vector<double>>& coeffs() const { return coeffs_; }
  std::uint64_t clamp_warnings() const { return clamp_warnings_.load(); }

  ElasticityTensor evaluate(double mu1, double mu2) const;
  // Analytic derivative of every component w.r.t. mu1 and mu2.
  void evaluate_grad(double mu1, double mu2, ElasticityTensor* d_mu1, ElasticityTensor* d_mu2) const;

  void save_csv(const std::string& path) const;
  static SurrogateModel load_csv(const std::string& path);

 private:
  int q_max_ = 0;
  int r_max_ = 0;
  std::vector<std::vector<double>> coeffs_;
  double fit_residual_ = 0.0;
  mutable std::atomic<std::uint64_t> clamp_warnings_{0};
};

struct CellSample {
  double mu1 = 0.0;
  double mu2 = 0.0;
  ElasticityTensor tensor;
};

// Least-squares fit on a full tensor grid of samples. Throws NumericError
// naming the first unresolvable basis term if the system is rank deficient.
SurrogateModel fit_surrogate(const std::vector<CellSample>& samples, int q_max, int r_max);

// Convenience: homogenize an n x n grid over [0,1]^2 and fit.
SurrogateModel build_surrogate(int grid_n, int order, int cell_resolution);

}  // namespace dehom
