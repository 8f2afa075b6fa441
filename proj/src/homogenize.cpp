#include "dehom/homogenize.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dehom/common.hpp"
#include "dehom/quad.hpp"

namespace dehom {
namespace {

constexpr double kEMin = 1e-9;
constexpr double kNu = 0.3;

// Fraction of [lo, hi] covered by the centered band of width w.
double band_coverage(double lo, double hi, double w) {
  double b0 = 0.5 - 0.5 * w;
  double b1 = 0.5 + 0.5 * w;
  double overlap = std::min(hi, b1) - std::max(lo, b0);
  return std::max(0.0, overlap) / (hi - lo);
}

}  // namespace

ElasticityTensor homogenize_cell(double mu1, double mu2, int cell_resolution) {
  if (!(mu1 >= 0.0 && mu1 <= 1.0) || !(mu2 >= 0.0 && mu2 <= 1.0)) {
    throw NumericError("homogenize_cell: bar widths must lie in [0,1], got (" +
                       std::to_string(mu1) + ", " + std::to_string(mu2) + ")");
  }
  if (cell_resolution < 16) {
    throw NumericError("homogenize_cell: cell_resolution must be >= 16, got " +
                       std::to_string(cell_resolution));
  }

  const int n = cell_resolution;
  const double h = 1.0 / n;
  const int ndof = 2 * n * n;  // periodic wrap: n x n unique nodes

  // Pixel material scale: union coverage of the two bars, blended linearly.
  // The mu1 bar runs along axis 1, so its width is measured along y.
  std::vector<double> scale(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    double cy = band_coverage(j * h, (j + 1) * h, mu1);
    for (int i = 0; i < n; ++i) {
      double cx = band_coverage(i * h, (i + 1) * h, mu2);
      double cov = cx + cy - cx * cy;
      scale[static_cast<size_t>(j) * n + i] = kEMin + cov * (1.0 - kEMin);
    }
  }

  const Matrix8d ke = quad_stiffness(ElasticityTensor::isotropic(1.0, kNu));
  const Eigen::Matrix<double, 8, 3> u0 = quad_unit_strain_displacements(h);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(n) * n * 64);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ndof, 3);
  std::vector<std::array<int, 8>> edofs(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      int i1 = (i + 1) % n;
      int j1 = (j + 1) % n;
      std::array<int, 4> nodes = {j * n + i, j * n + i1, j1 * n + i1, j1 * n + i};
      std::array<int, 8>& ed = edofs[static_cast<size_t>(j) * n + i];
      for (int k = 0; k < 4; ++k) {
        ed[2 * k] = 2 * nodes[k];
        ed[2 * k + 1] = 2 * nodes[k] + 1;
      }
      double s = scale[static_cast<size_t>(j) * n + i];
      Eigen::Matrix<double, 8, 3> fe = s * (ke * u0);
      for (int a = 0; a < 8; ++a) {
        for (int b = 0; b < 8; ++b) trips.emplace_back(ed[a], ed[b], s * ke(a, b));
        for (int k = 0; k < 3; ++k) rhs(ed[a], k) += fe(a, k);
      }
    }
  }

  Eigen::SparseMatrix<double> K(ndof, ndof);
  K.setFromTriplets(trips.begin(), trips.end());

  // Pin node 0 to remove the rigid translation null space.
  for (int c = 0; c < K.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) {
      if (it.row() < 2 || it.col() < 2) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
    }
  }
  rhs.row(0).setZero();
  rhs.row(1).setZero();

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
  if (solver.info() != Eigen::Success) {
    throw NumericError("homogenize_cell: periodic cell system factorization failed");
  }
  Eigen::MatrixXd chi = solver.solve(rhs);

  Eigen::Matrix3d ch = Eigen::Matrix3d::Zero();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::array<int, 8>& ed = edofs[static_cast<size_t>(j) * n + i];
      double s = scale[static_cast<size_t>(j) * n + i];
      Eigen::Matrix<double, 8, 3> du = u0;
      for (int a = 0; a < 8; ++a)
        for (int k = 0; k < 3; ++k) du(a, k) -= chi(ed[a], k);
      ch += s * (du.transpose() * ke * du);
    }
  }
  // |Y| = (n h)^2 = 1.
  ch = 0.5 * (ch + ch.transpose()).eval();
  return ElasticityTensor::from_voigt(ch);
}

SurrogateModel::SurrogateModel(int q_max, int r_max, std::vector<std::vector<double>> coeffs,
                               double fit_residual)
    : q_max_(q_max), r_max_(r_max), coeffs_(std::move(coeffs)), fit_residual_(fit_residual) {}

namespace {

void shifted_powers(double mu, int order, std::vector<double>* p) {
  double t = 2.0 * mu - 1.0;
  p->resize(order + 1);
  (*p)[0] = 1.0;
  for (int q = 1; q <= order; ++q) (*p)[q] = (*p)[q - 1] * t;
}

constexpr const char* kComponentNames[SurrogateModel::kComponents] = {"c11", "c12", "c22", "c33"};

}  // namespace

ElasticityTensor SurrogateModel::evaluate(double mu1, double mu2) const {
  if (mu1 < 0.0 || mu1 > 1.0 || mu2 < 0.0 || mu2 > 1.0) {
    clamp_warnings_.fetch_add(1, std::memory_order_relaxed);
    mu1 = std::clamp(mu1, 0.0, 1.0);
    mu2 = std::clamp(mu2, 0.0, 1.0);
  }
  std::vector<double> pq, pr;
  shifted_powers(mu1, q_max_, &pq);
  shifted_powers(mu2, r_max_, &pr);
  double v[kComponents] = {0, 0, 0, 0};
  for (int c = 0; c < kComponents; ++c) {
    const std::vector<double>& a = coeffs_[c];
    for (int q = 0; q <= q_max_; ++q)
      for (int r = 0; r <= r_max_; ++r) v[c] += a[static_cast<size_t>(q) * (r_max_ + 1) + r] * pq[q] * pr[r];
  }
  return {v[0], v[1], v[2], v[3], 0.0, 0.0};
}

void SurrogateModel::evaluate_grad(double mu1, double mu2, ElasticityTensor* d_mu1,
                                   ElasticityTensor* d_mu2) const {
  mu1 = std::clamp(mu1, 0.0, 1.0);
  mu2 = std::clamp(mu2, 0.0, 1.0);
  std::vector<double> pq, pr;
  shifted_powers(mu1, q_max_, &pq);
  shifted_powers(mu2, r_max_, &pr);
  double g1[kComponents] = {0, 0, 0, 0};
  double g2[kComponents] = {0, 0, 0, 0};
  for (int c = 0; c < kComponents; ++c) {
    const std::vector<double>& a = coeffs_[c];
    for (int q = 0; q <= q_max_; ++q) {
      for (int r = 0; r <= r_max_; ++r) {
        double alpha = a[static_cast<size_t>(q) * (r_max_ + 1) + r];
        if (q > 0) g1[c] += alpha * 2.0 * q * pq[q - 1] * pr[r];
        if (r > 0) g2[c] += alpha * 2.0 * r * pq[q] * pr[r - 1];
      }
    }
  }
  *d_mu1 = {g1[0], g1[1], g1[2], g1[3], 0.0, 0.0};
  *d_mu2 = {g2[0], g2[1], g2[2], g2[3], 0.0, 0.0};
}

SurrogateModel fit_surrogate(const std::vector<CellSample>& samples, int q_max, int r_max) {
  const int nb = (q_max + 1) * (r_max + 1);
  if (static_cast<int>(samples.size()) < nb) {
    throw NumericError("fit_surrogate: " + std::to_string(samples.size()) +
                       " samples cannot resolve " + std::to_string(nb) + " basis terms");
  }
  Eigen::MatrixXd vand(samples.size(), nb);
  std::vector<double> pq, pr;
  for (size_t s = 0; s < samples.size(); ++s) {
    shifted_powers(samples[s].mu1, q_max, &pq);
    shifted_powers(samples[s].mu2, r_max, &pr);
    for (int q = 0; q <= q_max; ++q)
      for (int r = 0; r <= r_max; ++r) vand(s, q * (r_max + 1) + r) = pq[q] * pr[r];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(vand);
  qr.setThreshold(1e-10);
  if (qr.rank() < nb) {
    // Name the first basis term outside the resolvable column span.
    Eigen::VectorXi perm = qr.colsPermutation().indices();
    int deficient = perm[qr.rank()];
    int q = deficient / (r_max + 1);
    int r = deficient % (r_max + 1);
    throw NumericError("fit_surrogate: sample grid cannot resolve basis term (q=" +
                       std::to_string(q) + ", r=" + std::to_string(r) + "); normal equations rank " +
                       std::to_string(qr.rank()) + " < " + std::to_string(nb));
  }

  std::vector<std::vector<double>> coeffs(SurrogateModel::kComponents);
  Eigen::MatrixXd targets(samples.size(), SurrogateModel::kComponents);
  for (size_t s = 0; s < samples.size(); ++s) {
    targets(s, 0) = samples[s].tensor.c11;
    targets(s, 1) = samples[s].tensor.c12;
    targets(s, 2) = samples[s].tensor.c22;
    targets(s, 3) = samples[s].tensor.c33;
  }
  Eigen::MatrixXd sol = qr.solve(targets);
  Eigen::MatrixXd resid = vand * sol - targets;
  double max_resid = resid.cwiseAbs().maxCoeff();
  for (int c = 0; c < SurrogateModel::kComponents; ++c) {
    coeffs[c].assign(sol.col(c).data(), sol.col(c).data() + nb);
  }
  return SurrogateModel(q_max, r_max, std::move(coeffs), max_resid);
}

SurrogateModel build_surrogate(int grid_n, int order, int cell_resolution) {
  if (grid_n < 2) throw NumericError("build_surrogate: grid must have at least 2 points per axis");
  std::vector<CellSample> samples;
  samples.reserve(static_cast<size_t>(grid_n) * grid_n);
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      double mu1 = static_cast<double>(i) / (grid_n - 1);
      double mu2 = static_cast<double>(j) / (grid_n - 1);
      samples.push_back({mu1, mu2, homogenize_cell(mu1, mu2, cell_resolution)});
    }
  }
  return fit_surrogate(samples, order, order);
}

void SurrogateModel::save_csv(const std::string& path) const {
  std::ostringstream out;
  out << "component,q,r,alpha\n";
  char buf[64];
  for (int c = 0; c < kComponents; ++c) {
    for (int q = 0; q <= q_max_; ++q) {
      for (int r = 0; r <= r_max_; ++r) {
        std::snprintf(buf, sizeof(buf), "%.17g", coeffs_[c][static_cast<size_t>(q) * (r_max_ + 1) + r]);
        out << kComponentNames[c] << ',' << q << ',' << r << ',' << buf << '\n';
      }
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << out.str();
  if (!f.good()) throw IoError("write failed: " + path);
}

static SurrogateModel load_csv_impl(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("component,q,r,alpha", 0) != 0) {
    throw IoError("surrogate csv missing header: " + path);
  }
  int q_max = -1, r_max = -1;
  struct Row {
    int comp, q, r;
    double alpha;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string comp, tok;
    Row row{};
    std::getline(ls, comp, ',');
    int ci = -1;
    for (int c = 0; c < SurrogateModel::kComponents; ++c)
      if (comp == kComponentNames[c]) ci = c;
    if (ci < 0) throw IoError("surrogate csv: unknown component '" + comp + "' in " + path);
    row.comp = ci;
    std::getline(ls, tok, ',');
    row.q = std::stoi(tok);
    std::getline(ls, tok, ',');
    row.r = std::stoi(tok);
    std::getline(ls, tok, ',');
    row.alpha = std::stod(tok);
    q_max = std::max(q_max, row.q);
    r_max = std::max(r_max, row.r);
    rows.push_back(row);
  }
  if (rows.empty()) throw IoError("surrogate csv has no coefficient rows: " + path);
  std::vector<std::vector<double>> coeffs(SurrogateModel::kComponents,
                                          std::vector<double>((q_max + 1) * (r_max + 1), 0.0));
  for (const Row& row : rows)
    coeffs[row.comp][static_cast<size_t>(row.q) * (r_max + 1) + row.r] = row.alpha;
  return SurrogateModel(q_max, r_max, std::move(coeffs), 0.0);
}

SurrogateModel SurrogateModel::load_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open surrogate csv: " + path);
  return load_csv_impl(f, path);
}

}  // namespace dehom
