#include "dehom/pca.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dehom {
namespace {

constexpr const char* kChannelNames[3] = {"mu1", "mu2", "theta"};

// Centered data matrix: every (field, channel) column is one observation of
// the shared spatial distribution.
Eigen::MatrixXd centered_columns(const std::vector<DesignField>& population, Eigen::MatrixXd* mean) {
  const DesignField& first = population.front();
  const int nm = first.count();
  const int n = static_cast<int>(population.size());
  Eigen::MatrixXd data(nm, 3 * n);
  for (int k = 0; k < n; ++k) {
    const DesignField& f = population[k];
    if (!f.same_shape(first)) throw ConfigError("fit_pca: population fields have mixed grids");
    for (int e = 0; e < nm; ++e) {
      data(e, 3 * k + 0) = f.mu1[e];
      data(e, 3 * k + 1) = f.mu2[e];
      data(e, 3 * k + 2) = f.theta[e];
    }
  }
  mean->resize(nm, 3);
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(nm);
    for (int k = 0; k < n; ++k) m += data.col(3 * k + c);
    mean->col(c) = m / n;
    for (int k = 0; k < n; ++k) data.col(3 * k + c) -= mean->col(c);
  }
  return data;
}

}  // namespace

double PcaBasis::explained_total() const {
  double s = 0.0;
  for (double e : explained) s += e;
  return s;
}

PcaBasis fit_pca(const std::vector<DesignField>& population, int n_c) {
  if (population.size() < 2) throw ConfigError("fit_pca: need at least 2 fields");
  const int nm = population.front().count();
  const int max_nc = std::min<int>(nm, static_cast<int>(population.size()) - 1);
  if (n_c < 1 || n_c > max_nc) {
    throw ConfigError("fit_pca: n_c=" + std::to_string(n_c) + " outside [1, " +
                      std::to_string(max_nc) + "]");
  }

  Eigen::MatrixXd mean;
  Eigen::MatrixXd data = centered_columns(population, &mean);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  double total = sv.squaredNorm();
  if (total < 1e-24) {
    std::string degenerate;
    for (int c = 0; c < 3; ++c) {
      double var = 0.0;
      for (int k = 0; k < static_cast<int>(population.size()); ++k)
        var += data.col(3 * k + c).squaredNorm();
      if (var < 1e-24) {
        if (!degenerate.empty()) degenerate += ", ";
        degenerate += kChannelNames[c];
      }
    }
    throw NumericError("fit_pca: population has zero variance; degenerate directions: " + degenerate);
  }

  PcaBasis basis;
  basis.nx = population.front().nx;
  basis.ny = population.front().ny;
  basis.n_c = n_c;
  basis.phi = svd.matrixU().leftCols(n_c);
  basis.mean = mean;
  basis.explained.resize(n_c);
  for (int i = 0; i < n_c; ++i) basis.explained[i] = sv[i] * sv[i] / total;
  basis.bounds = population.front().bounds;

  std::string blob(reinterpret_cast<const char*>(basis.phi.data()),
                   sizeof(double) * basis.phi.size());
  blob.append(reinterpret_cast<const char*>(basis.mean.data()), sizeof(double) * basis.mean.size());
  basis.id = fnv1a(blob);
  return basis;
}

int components_for_explained(const std::vector<DesignField>& population, double share) {
  if (population.size() < 2) throw ConfigError("components_for_explained: need at least 2 fields");
  Eigen::MatrixXd mean;
  Eigen::MatrixXd data = centered_columns(population, &mean);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(data);
  const Eigen::VectorXd& sv = svd.singularValues();
  double total = sv.squaredNorm();
  if (total < 1e-24) throw NumericError("components_for_explained: population has zero variance");
  const int max_nc = std::min<int>(population.front().count(), static_cast<int>(population.size()) - 1);
  double acc = 0.0;
  for (int i = 0; i < sv.size() && i < max_nc; ++i) {
    acc += sv[i] * sv[i] / total;
    if (acc >= share) return i + 1;
  }
  return max_nc;
}

ReducedDesign project(const PcaBasis& basis, const DesignField& x) {
  if (x.count() != basis.element_count())
    throw ConfigError("project: field shape does not match basis");
  Eigen::MatrixXd field(basis.element_count(), 3);
  for (int e = 0; e < x.count(); ++e) {
    field(e, 0) = x.mu1[e];
    field(e, 1) = x.mu2[e];
    field(e, 2) = x.theta[e];
  }
  ReducedDesign rd;
  rd.z = basis.phi.transpose() * (field - basis.mean);
  rd.basis_id = basis.id;
  return rd;
}

DesignField reconstruct(const PcaBasis& basis, const ReducedDesign& z) {
  if (z.z.rows() != basis.n_c || z.z.cols() != 3)
    throw ConfigError("reconstruct: coefficient shape does not match basis");
  Eigen::MatrixXd field = basis.mean + basis.phi * z.z;
  DesignField out = DesignField::uniform(basis.nx, basis.ny, 0, 0, 0, 1.0);
  out.bounds = basis.bounds;
  for (int e = 0; e < out.count(); ++e) {
    out.mu1[e] = field(e, 0);
    out.mu2[e] = field(e, 1);
    out.theta[e] = field(e, 2);
    out.rho[e] = 1.0;
  }
  out.clamp_to_bounds();
  return out;
}

void PcaBasis::save(const std::string& phi_path, const std::string& mean_path) const {
  {
    std::ostringstream out;
    out << "nx,ny,n_c,component,explained\n";
    char buf[96];
    // Column-major coefficient dump preceded by the shape/explained header rows.
    for (int c = 0; c < n_c; ++c) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%.17g\n", nx, ny, n_c, c, explained[c]);
      out << buf;
    }
    out << "component,element,value\n";
    for (int c = 0; c < n_c; ++c) {
      for (int e = 0; e < phi.rows(); ++e) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", c, e, phi(e, c));
        out << buf;
      }
    }
    std::ofstream f(phi_path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + phi_path);
    f << out.str();
    if (!f.good()) throw IoError("write failed: " + phi_path);
  }
  DesignField m = DesignField::uniform(nx, ny, 0, 0, 0, 1.0);
  for (int e = 0; e < m.count(); ++e) {
    m.mu1[e] = mean(e, 0);
    m.mu2[e] = mean(e, 1);
    m.theta[e] = mean(e, 2);
  }
  m.save_csv(mean_path);
}

PcaBasis PcaBasis::load(const std::string& phi_path, const std::string& mean_path) {
  std::ifstream f(phi_path, std::ios::binary);
  if (!f) throw IoError("cannot open basis csv: " + phi_path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("nx,ny,n_c,component,explained", 0) != 0)
    throw IoError("basis csv missing header: " + phi_path);
  PcaBasis basis;
  std::vector<double> explained;
  while (std::getline(f, line)) {
    if (line.rfind("component,element,value", 0) == 0) break;
    int nx, ny, nc, c;
    double ex;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%lf", &nx, &ny, &nc, &c, &ex) != 5)
      throw IoError("basis csv: malformed shape row '" + line + "'");
    basis.nx = nx;
    basis.ny = ny;
    basis.n_c = nc;
    explained.push_back(ex);
  }
  basis.explained = explained;
  basis.phi.resize(basis.element_count(), basis.n_c);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    int c, e;
    double v;
    if (std::sscanf(line.c_str(), "%d,%d,%lf", &c, &e, &v) != 3)
      throw IoError("basis csv: malformed coefficient row '" + line + "'");
    basis.phi(e, c) = v;
  }
  DesignField m = DesignField::load_csv(mean_path);
  if (m.nx != basis.nx || m.ny != basis.ny) throw IoError("basis mean grid mismatch: " + mean_path);
  basis.mean.resize(basis.element_count(), 3);
  for (int e = 0; e < m.count(); ++e) {
    basis.mean(e, 0) = m.mu1[e];
    basis.mean(e, 1) = m.mu2[e];
    basis.mean(e, 2) = m.theta[e];
  }
  std::string blob(reinterpret_cast<const char*>(basis.phi.data()),
                   sizeof(double) * basis.phi.size());
  blob.append(reinterpret_cast<const char*>(basis.mean.data()), sizeof(double) * basis.mean.size());
  basis.id = fnv1a(blob);
  return basis;
}

void ReducedDesign::save_csv(const std::string& path) const {
  std::ostringstream out;
  out << "k,channel,value\n";
  char buf[96];
  for (int k = 0; k < z.rows(); ++k) {
    for (int c = 0; c < z.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", k, c, z(k, c));
      out << buf;
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << out.str();
  if (!f.good()) throw IoError("write failed: " + path);
}

ReducedDesign ReducedDesign::load_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open reduced design csv: " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("k,channel,value", 0) != 0)
    throw IoError("reduced design csv missing header: " + path);
  std::vector<std::array<double, 3>> rows;
  int max_k = -1;
  struct Entry {
    int k, c;
    double v;
  };
  std::vector<Entry> entries;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    Entry en{};
    if (std::sscanf(line.c_str(), "%d,%d,%lf", &en.k, &en.c, &en.v) != 3)
      throw IoError("reduced design csv: malformed row '" + line + "'");
    entries.push_back(en);
    max_k = std::max(max_k, en.k);
  }
  ReducedDesign rd;
  rd.z = Eigen::MatrixXd::Zero(max_k + 1, 3);
  for (const Entry& en : entries) rd.z(en.k, en.c) = en.v;
  return rd;
}

}  // namespace dehom
