#include "dehom/elasticity.hpp"

#include <cmath>

namespace dehom {

Eigen::Matrix3d rotation_matrix(double theta) {
  double c = std::cos(theta);
  double s = std::sin(theta);
  Eigen::Matrix3d t;
  t << c * c, s * s, 2.0 * s * c,
       s * s, c * c, -2.0 * s * c,
       -s * c, s * c, c * c - s * s;
  return t;
}

ElasticityTensor rotate_tensor(const ElasticityTensor& c, double theta) {
  Eigen::Matrix3d t = rotation_matrix(theta);
  Eigen::Matrix3d r = t.transpose() * c.voigt() * t;
  // Symmetrize to keep round-off from accumulating over repeated rotations.
  r = 0.5 * (r + r.transpose()).eval();
  return ElasticityTensor::from_voigt(r);
}

}  // namespace dehom
