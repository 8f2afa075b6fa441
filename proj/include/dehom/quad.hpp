#pragma once

#include <Eigen/Dense>

#include "dehom/elasticity.hpp"

namespace dehom {

using Matrix8d = Eigen::Matrix<double, 8, 8>;

// Bilinear quadrilateral, plane stress, unit thickness, square element.
// Local node order is counter-clockwise from the lower-left corner:
//   0:(0,0) 1:(h,0) 2:(h,h) 3:(0,h), dofs (ux0, uy0, ux1, uy1, ...).
// In 2D the stiffness is independent of the element edge length h.

// ke = integral of B^T C B over the element (2x2 Gauss, exact here).
Matrix8d quad_stiffness(const ElasticityTensor& c);

// Strain-displacement matrix at the element centroid for edge length h.
Eigen::Matrix<double, 3, 8> quad_center_strain_matrix(double h);

// Geometric stiffness for a constant element stress state (Voigt sxx, syy, sxy).
Matrix8d quad_geometric_stiffness(double sxx, double syy, double sxy);

// Nodal displacements of the three unit macroscopic strain fields
// (exx=1), (eyy=1), (gxy=1) evaluated at the local corners; column k is
// the 8-vector for strain k. Scales linearly with h.
Eigen::Matrix<double, 8, 3> quad_unit_strain_displacements(double h);

}  // namespace dehom
