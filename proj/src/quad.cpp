#include "dehom/quad.hpp"

#include <array>
#include <cmath>

namespace dehom {
namespace {

struct GaussTables {
  // One 8x8 matrix per Voigt component pair: ke = sum c_ab * (Kab + Kba^T terms).
  Matrix8d k11, k22, k33, k12, k13, k23;
  Eigen::Matrix<double, 4, 4> mxx, myy, mxy;  // nodal gradient products for K_sigma

  GaussTables() {
    k11.setZero();
    k22.setZero();
    k33.setZero();
    k12.setZero();
    k13.setZero();
    k23.setZero();
    mxx.setZero();
    myy.setZero();
    mxy.setZero();
    const double g = 1.0 / std::sqrt(3.0);
    const std::array<double, 2> pts = {-g, g};
    // Unit element (h=1): jacobian = 1/2 I, det = 1/4, dN/dx = 2 dN/dxi.
    for (double xi : pts) {
      for (double eta : pts) {
        std::array<double, 4> dndx = {-(1 - eta) / 2.0, (1 - eta) / 2.0, (1 + eta) / 2.0, -(1 + eta) / 2.0};
        std::array<double, 4> dndy = {-(1 - xi) / 2.0, -(1 + xi) / 2.0, (1 + xi) / 2.0, (1 - xi) / 2.0};
        Eigen::Matrix<double, 1, 8> bxx = Eigen::Matrix<double, 1, 8>::Zero();
        Eigen::Matrix<double, 1, 8> byy = Eigen::Matrix<double, 1, 8>::Zero();
        Eigen::Matrix<double, 1, 8> bxy = Eigen::Matrix<double, 1, 8>::Zero();
        for (int n = 0; n < 4; ++n) {
          bxx(2 * n) = dndx[n];
          byy(2 * n + 1) = dndy[n];
          bxy(2 * n) = dndy[n];
          bxy(2 * n + 1) = dndx[n];
        }
        const double w = 0.25;  // det(J) * gauss weight
        k11 += w * bxx.transpose() * bxx;
        k22 += w * byy.transpose() * byy;
        k33 += w * bxy.transpose() * bxy;
        k12 += w * (bxx.transpose() * byy + byy.transpose() * bxx);
        k13 += w * (bxx.transpose() * bxy + bxy.transpose() * bxx);
        k23 += w * (byy.transpose() * bxy + bxy.transpose() * byy);
        for (int a = 0; a < 4; ++a) {
          for (int b = 0; b < 4; ++b) {
            mxx(a, b) += w * dndx[a] * dndx[b];
            myy(a, b) += w * dndy[a] * dndy[b];
            mxy(a, b) += w * dndx[a] * dndy[b];
          }
        }
      }
    }
  }
};

const GaussTables& tables() {
  static const GaussTables t;
  return t;
}

}  // namespace

Matrix8d quad_stiffness(const ElasticityTensor& c) {
  const GaussTables& t = tables();
  return c.c11 * t.k11 + c.c22 * t.k22 + c.c33 * t.k33 + c.c12 * t.k12 + c.c13 * t.k13 +
         c.c23 * t.k23;
}

Eigen::Matrix<double, 3, 8> quad_center_strain_matrix(double h) {
  Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
  const std::array<double, 4> dndx = {-0.5, 0.5, 0.5, -0.5};
  const std::array<double, 4> dndy = {-0.5, -0.5, 0.5, 0.5};
  for (int n = 0; n < 4; ++n) {
    b(0, 2 * n) = dndx[n] / h;
    b(1, 2 * n + 1) = dndy[n] / h;
    b(2, 2 * n) = dndy[n] / h;
    b(2, 2 * n + 1) = dndx[n] / h;
  }
  return b;
}

Matrix8d quad_geometric_stiffness(double sxx, double syy, double sxy) {
  const GaussTables& t = tables();
  Eigen::Matrix<double, 4, 4> m =
      sxx * t.mxx + syy * t.myy + sxy * (t.mxy + t.mxy.transpose());
  Matrix8d k = Matrix8d::Zero();
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      k(2 * a, 2 * b) = m(a, b);
      k(2 * a + 1, 2 * b + 1) = m(a, b);
    }
  }
  return k;
}

Eigen::Matrix<double, 8, 3> quad_unit_strain_displacements(double h) {
  Eigen::Matrix<double, 8, 3> u;
  const std::array<double, 4> cx = {0.0, h, h, 0.0};
  const std::array<double, 4> cy = {0.0, 0.0, h, h};
  for (int n = 0; n < 4; ++n) {
    u(2 * n, 0) = cx[n];
    u(2 * n + 1, 0) = 0.0;
    u(2 * n, 1) = 0.0;
    u(2 * n + 1, 1) = cy[n];
    u(2 * n, 2) = 0.5 * cy[n];
    u(2 * n + 1, 2) = 0.5 * cx[n];
  }
  return u;
}

}  // namespace dehom
