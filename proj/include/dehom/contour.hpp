#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dehom/phasor.hpp"

namespace dehom {

using Polyline = std::vector<Eigen::Vector2d>;

// Solid-void interface polylines in fine pixel units. Closed loops store the
// first point once; orientation is counter-clockwise around solid, so holes
// come out clockwise and shoelace areas are signed accordingly.
struct ContourSet {
  std::vector<Polyline> loops;
  std::vector<Polyline> open;
};

double polyline_length(const Polyline& p, bool closed);
double polygon_area(const Polyline& loop);  // signed shoelace area

// Marching squares at threshold c. Binary inputs are pre-smoothed with a
// 3x3 box average so the edge interpolation recovers sub-pixel placement;
// the grid is padded with a void ring so the domain boundary closes every
// contour. Saddle cells resolve by the cell-center average. Loops enclosing
// fewer than 4 pixels of area are discarded as specks.
ContourSet marching_squares(const std::vector<double>& field, int nx, int ny, double c);
ContourSet marching_squares(const BinaryField& field, double c);

// Equal arc-length resampling: N_ear = max(4, round(M * N_msa)) points at
// exact multiples of the uniform interval (closed loops drop the duplicate
// endpoint and use delta_s = L / N_ear).
Polyline resample_equal_arclength(const Polyline& poly, double m_factor, bool closed);

// Symmetric max-min vertex-to-polyline deviation (distances measured to
// segments) and the relative accuracy (1 - eps/L(original)) * 100.
struct Deviation {
  double eps_shape = 0.0;
  double eps_acc = 100.0;
};
Deviation deviation(const Polyline& original, const Polyline& resampled, bool closed);

// Minimal DXF R12 writer: HEADER with $ACADVER AC1009, one POLYLINE entity
// per contour (70=1 when closed) with VERTEX records and SEQEND, EOF at the
// end. Coordinates are point * scale with 9 decimal digits; output bytes are
// deterministic for fixed input.
void export_dxf(const ContourSet& contours, double scale, const std::string& path);
std::string dxf_document(const ContourSet& contours, double scale);

struct LoopReport {
  int loop_id = 0;
  int n_msa = 0;
  int n_ear = 0;
  double eps_shape = 0.0;
  double eps_acc = 100.0;
};

struct ResampleReport {
  std::vector<LoopReport> loops;
  double eps_shape = 0.0;  // worst over loops
  double eps_acc = 100.0;  // worst over loops
  double delta_s = 0.0;    // largest resampling interval
  void save_csv(const std::string& path) const;
};

struct ExtractResult {
  ContourSet contours;  // resampled
  ResampleReport report;
};

ExtractResult extract_geometry(const BinaryField& field, double c, double m_factor);

}  // namespace dehom
