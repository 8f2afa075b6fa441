#pragma once

#include <Eigen/Dense>

namespace dehom {

// Plane-stress stiffness in Voigt notation (xx, yy, xy). The cross-bar cell
// is orthotropic in its local frame, so only c11, c12, c22, c33 are nonzero
// there; rotation to the global frame fills the normal/shear couplings
// c13, c23 as well.
struct ElasticityTensor {
  double c11 = 0.0;
  double c12 = 0.0;
  double c22 = 0.0;
  double c33 = 0.0;
  double c13 = 0.0;
  double c23 = 0.0;

  Eigen::Matrix3d voigt() const {
    Eigen::Matrix3d m;
    m << c11, c12, c13, c12, c22, c23, c13, c23, c33;
    return m;
  }

  static ElasticityTensor from_voigt(const Eigen::Matrix3d& m) {
    return {m(0, 0), m(0, 1), m(1, 1), m(2, 2), m(0, 2), m(1, 2)};
  }

  // Base material: E = 1, nu = 0.3 plane stress.
  static ElasticityTensor isotropic(double e, double nu) {
    double f = e / (1.0 - nu * nu);
    return {f, nu * f, f, e / (2.0 * (1.0 + nu)), 0.0, 0.0};
  }
};

// Voigt rotation matrix T(theta); entries are quadratic in (sin, cos) and
// therefore pi-periodic in theta.
Eigen::Matrix3d rotation_matrix(double theta);

// T(theta)^T C T(theta): local composite frame -> global frame.
ElasticityTensor rotate_tensor(const ElasticityTensor& c, double theta);

}  // namespace dehom
