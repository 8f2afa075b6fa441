#include "dehom/fine.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dehom/quad.hpp"

namespace dehom {

FineProblem FineProblem::from_coarse(const CoarseProblem& coarse, int s_f) {
  FineProblem p;
  p.nx = coarse.nx * s_f;
  p.ny = coarse.ny * s_f;
  p.supports = coarse.supports;
  p.loads = coarse.loads;
  p.coarse_nx = coarse.nx;
  p.coarse_ny = coarse.ny;
  return p;
}

void FineProblem::validate() const {
  if (nx < 1 || ny < 1) throw ConfigError("fine problem: grid must be positive");
  if (supports.empty()) throw ConfigError("fine problem: at least one support required");
  if (loads.empty()) throw ConfigError("fine problem: at least one load required");
  if (!(e_min > 0.0 && e_min <= 1e-3)) throw ConfigError("fine problem: e_min must lie in (0, 1e-3]");
}

std::vector<int> FineProblem::nodes_in(const NodeRegion& region) const {
  std::vector<int> out;
  double sx = scale_x(), sy = scale_y();
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      if (region.contains(i / sx, j / sy)) out.push_back(j * (nx + 1) + i);
  return out;
}

Eigen::VectorXd FineProblem::force_vector() const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * node_count());
  for (const Load& l : loads) {
    std::vector<int> nodes = nodes_in(l.region);
    if (nodes.empty()) throw ConfigError("fine problem: load region selects no nodes");
    double fx = l.fx / nodes.size();
    double fy = l.fy / nodes.size();
    for (int n : nodes) {
      f[2 * n] += fx;
      f[2 * n + 1] += fy;
    }
  }
  return f;
}

std::vector<char> FineProblem::fixed_dofs() const {
  std::vector<char> fixed(2 * node_count(), 0);
  bool any = false;
  for (const Support& s : supports) {
    for (int n : nodes_in(s.region)) {
      if (s.fix_x) fixed[2 * n] = 1;
      if (s.fix_y) fixed[2 * n + 1] = 1;
      any = true;
    }
  }
  if (!any) throw ConfigError("fine problem: support regions select no nodes");
  return fixed;
}

double volume_fraction(const BinaryField& field) {
  if (field.values.empty()) throw ConfigError("volume_fraction: empty field");
  return field.solid_fraction();
}

namespace {

// Solid-pixel component labels, -1 for void.
std::vector<int> label_components(const BinaryField& field) {
  std::vector<int> label(field.values.size(), -1);
  int next = 0;
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(field.values.size()); ++start) {
    if (!field.values[start] || label[start] >= 0) continue;
    int id = next++;
    stack.push_back(start);
    label[start] = id;
    while (!stack.empty()) {
      int p = stack.back();
      stack.pop_back();
      int i = p % field.nx, j = p / field.nx;
      const std::array<std::pair<int, int>, 4> nbrs = {
          {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}};
      for (auto [ni, nj] : nbrs) {
        if (ni < 0 || ni >= field.nx || nj < 0 || nj >= field.ny) continue;
        int q = nj * field.nx + ni;
        if (field.values[q] && label[q] < 0) {
          label[q] = id;
          stack.push_back(q);
        }
      }
    }
  }
  return label;
}

// Components of solid pixels adjacent to a node.
void node_components(const FineProblem& p, const std::vector<int>& label, int node,
                     std::vector<int>* out) {
  int i = node % (p.nx + 1), j = node / (p.nx + 1);
  out->clear();
  for (int dj = -1; dj <= 0; ++dj) {
    for (int di = -1; di <= 0; ++di) {
      int pi = i + di, pj = j + dj;
      if (pi < 0 || pi >= p.nx || pj < 0 || pj >= p.ny) continue;
      int l = label[static_cast<size_t>(pj) * p.nx + pi];
      if (l >= 0) out->push_back(l);
    }
  }
}

}  // namespace

bool loads_connected(const FineProblem& problem, const BinaryField& field) {
  if (field.nx != problem.nx || field.ny != problem.ny)
    throw ConfigError("loads_connected: field does not match problem grid");
  std::vector<int> label = label_components(field);
  std::vector<char> grounded;
  int max_label = 0;
  for (int l : label) max_label = std::max(max_label, l + 1);
  grounded.assign(std::max(1, max_label), 0);
  std::vector<int> comps;
  for (const Support& s : problem.supports) {
    for (int n : problem.nodes_in(s.region)) {
      node_components(problem, label, n, &comps);
      for (int c : comps) grounded[c] = 1;
    }
  }
  for (const Load& l : problem.loads) {
    if (l.fx == 0.0 && l.fy == 0.0) continue;
    for (int n : problem.nodes_in(l.region)) {
      node_components(problem, label, n, &comps);
      bool ok = false;
      for (int c : comps) ok |= grounded[c];
      if (!ok) return false;
    }
  }
  return true;
}

StaticSolution solve_static(const FineProblem& problem, const BinaryField& field) {
  problem.validate();
  StaticSolution sol;
  if (!loads_connected(problem, field)) {
    sol.feasible = false;
    sol.notes = "load region not connected to supports through solid material";
    return sol;
  }
  const int nnx = problem.nx + 1;
  const int ndof = 2 * problem.node_count();
  const Matrix8d ke = quad_stiffness(ElasticityTensor::isotropic(1.0, 0.3));
  std::vector<char> fixed = problem.fixed_dofs();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(problem.nx) * problem.ny * 64);
  for (int j = 0; j < problem.ny; ++j) {
    for (int i = 0; i < problem.nx; ++i) {
      double s = field.at(i, j) ? 1.0 : problem.e_min;
      std::array<int, 4> nodes = {j * nnx + i, j * nnx + i + 1, (j + 1) * nnx + i + 1,
                                  (j + 1) * nnx + i};
      for (int a = 0; a < 8; ++a) {
        int ga = 2 * nodes[a / 2] + (a % 2);
        if (fixed[ga]) continue;
        for (int b = 0; b < 8; ++b) {
          int gb = 2 * nodes[b / 2] + (b % 2);
          if (fixed[gb]) continue;
          trips.emplace_back(ga, gb, s * ke(a, b));
        }
      }
    }
  }
  for (int d = 0; d < ndof; ++d)
    if (fixed[d]) trips.emplace_back(d, d, 1.0);
  Eigen::SparseMatrix<double> K(ndof, ndof);
  K.setFromTriplets(trips.begin(), trips.end());

  Eigen::VectorXd f = problem.force_vector();
  Eigen::VectorXd f_bc = f;
  for (int d = 0; d < ndof; ++d)
    if (fixed[d]) f_bc[d] = 0.0;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
  if (solver.info() != Eigen::Success) {
    sol.feasible = false;
    sol.notes = "stiffness factorization failed";
    return sol;
  }
  sol.u = solver.solve(f_bc);
  if (!sol.u.allFinite()) {
    sol.feasible = false;
    sol.notes = "non-finite static solution";
    sol.u.resize(0);
    return sol;
  }
  sol.compliance = sol.u.dot(f);
  sol.u_max = 0.0;
  for (int n = 0; n < problem.node_count(); ++n)
    sol.u_max = std::max(sol.u_max, std::hypot(sol.u[2 * n], sol.u[2 * n + 1]));
  return sol;
}

double von_mises_max(const FineProblem& problem, const BinaryField& field,
                     const Eigen::VectorXd& displacements, double* raw_max) {
  const int nnx = problem.nx + 1;
  const Eigen::Matrix<double, 3, 8> bc = quad_center_strain_matrix(1.0);
  const Eigen::Matrix3d c = ElasticityTensor::isotropic(1.0, 0.3).voigt();
  double sum_p = 0.0;
  double raw = 0.0;
  long solid = 0;
  for (int j = 0; j < problem.ny; ++j) {
    for (int i = 0; i < problem.nx; ++i) {
      if (!field.at(i, j)) continue;
      std::array<int, 4> nodes = {j * nnx + i, j * nnx + i + 1, (j + 1) * nnx + i + 1,
                                  (j + 1) * nnx + i};
      Eigen::Matrix<double, 8, 1> ue;
      for (int a = 0; a < 4; ++a) {
        ue[2 * a] = displacements[2 * nodes[a]];
        ue[2 * a + 1] = displacements[2 * nodes[a] + 1];
      }
      Eigen::Vector3d sig = c * (bc * ue);
      double vm = std::sqrt(sig[0] * sig[0] - sig[0] * sig[1] + sig[1] * sig[1] +
                            3.0 * sig[2] * sig[2]);
      raw = std::max(raw, vm);
      sum_p += std::pow(vm, 8.0);
      ++solid;
    }
  }
  if (raw_max) *raw_max = raw;
  if (solid == 0) return 0.0;
  return std::pow(sum_p / solid, 1.0 / 8.0);
}

std::optional<double> buckling_blf(const FineProblem& problem, const BinaryField& field,
                                   const Eigen::VectorXd& displacements) {
  const int nnx = problem.nx + 1;
  const int ndof = 2 * problem.node_count();
  const Matrix8d ke = quad_stiffness(ElasticityTensor::isotropic(1.0, 0.3));
  const Eigen::Matrix<double, 3, 8> bc = quad_center_strain_matrix(1.0);
  const Eigen::Matrix3d c = ElasticityTensor::isotropic(1.0, 0.3).voigt();
  std::vector<char> fixed = problem.fixed_dofs();

  std::vector<Eigen::Triplet<double>> kt, gt;
  kt.reserve(static_cast<size_t>(problem.nx) * problem.ny * 64);
  gt.reserve(kt.capacity());
  double stress_norm = 0.0;
  for (int j = 0; j < problem.ny; ++j) {
    for (int i = 0; i < problem.nx; ++i) {
      double s = field.at(i, j) ? 1.0 : problem.e_min;
      std::array<int, 4> nodes = {j * nnx + i, j * nnx + i + 1, (j + 1) * nnx + i + 1,
                                  (j + 1) * nnx + i};
      Eigen::Matrix<double, 8, 1> ue;
      for (int a = 0; a < 4; ++a) {
        ue[2 * a] = displacements[2 * nodes[a]];
        ue[2 * a + 1] = displacements[2 * nodes[a] + 1];
      }
      Eigen::Vector3d sig = s * (c * (bc * ue));
      stress_norm = std::max(stress_norm, sig.cwiseAbs().maxCoeff());
      Matrix8d kg = quad_geometric_stiffness(sig[0], sig[1], sig[2]);
      for (int a = 0; a < 8; ++a) {
        int ga = 2 * nodes[a / 2] + (a % 2);
        if (fixed[ga]) continue;
        for (int b = 0; b < 8; ++b) {
          int gb = 2 * nodes[b / 2] + (b % 2);
          if (fixed[gb]) continue;
          kt.emplace_back(ga, gb, s * ke(a, b));
          gt.emplace_back(ga, gb, kg(a, b));
        }
      }
    }
  }
  if (stress_norm <= 0.0) return std::nullopt;
  for (int d = 0; d < ndof; ++d)
    if (fixed[d]) kt.emplace_back(d, d, 1.0);

  Eigen::SparseMatrix<double> K(ndof, ndof), G(ndof, ndof);
  K.setFromTriplets(kt.begin(), kt.end());
  G.setFromTriplets(gt.begin(), gt.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
  if (solver.info() != Eigen::Success) return std::nullopt;

  // Power iteration on M = K^-1 (-G); the largest positive eigenvalue nu
  // gives the smallest positive load factor 1/nu. A spectral shift recovers
  // the positive end when a negative eigenvalue dominates.
  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return solver.solve(-(G * v)); };
  auto dominant = [&](double shift, double* out_nu, int max_iters) -> bool {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::VectorXd v(ndof);
    for (int d = 0; d < ndof; ++d) v[d] = fixed[d] ? 0.0 : unif(rng);
    v.normalize();
    double nu = 0.0;
    for (int it = 0; it < max_iters; ++it) {
      Eigen::VectorXd y = apply(v) + shift * v;
      double norm = y.norm();
      if (!(norm > 0.0) || !y.allFinite()) return false;
      nu = v.dot(y);
      v = y / norm;
      if (it >= 20) {
        Eigen::VectorXd r = apply(v) + shift * v - nu * v;
        if (r.norm() <= 1e-6 * std::abs(nu)) {
          *out_nu = nu;
          return true;
        }
      }
    }
    return false;
  };

  double nu1 = 0.0;
  if (!dominant(0.0, &nu1, 200)) return std::nullopt;
  if (nu1 > 0.0) return 1.0 / nu1;
  // Dominant eigenvalue is negative: shift spectrum right and retry.
  double shift = 1.25 * std::abs(nu1);
  double nu2 = 0.0;
  if (!dominant(shift, &nu2, 200)) return std::nullopt;
  double nu_max = nu2 - shift;
  if (nu_max <= 0.0) return std::nullopt;
  return 1.0 / nu_max;
}

EvalResult evaluate(const FineProblem& problem, const BinaryField& field,
                    const std::set<Metric>& metrics) {
  EvalResult r;
  try {
    if (metrics.count(Metric::Vf)) r.vf = volume_fraction(field);
    bool needs_static = metrics.count(Metric::Compliance) || metrics.count(Metric::UMax) ||
                        metrics.count(Metric::SigmaMax) || metrics.count(Metric::Blf);
    if (!needs_static) return r;
    StaticSolution sol = solve_static(problem, field);
    if (!sol.feasible) {
      r.feasible = false;
      r.notes = sol.notes;
      return r;
    }
    if (metrics.count(Metric::Compliance)) r.compliance = sol.compliance;
    if (metrics.count(Metric::UMax)) r.u_max = sol.u_max;
    if (metrics.count(Metric::SigmaMax)) {
      double raw = 0.0;
      r.sigma_max = von_mises_max(problem, field, sol.u, &raw);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "raw_vm_max=%.9g", raw);
      r.notes = r.notes.empty() ? buf : r.notes + ";" + buf;
    }
    if (metrics.count(Metric::Blf)) {
      std::optional<double> blf = buckling_blf(problem, field, sol.u);
      if (!blf) {
        r.feasible = false;
        r.notes = r.notes.empty() ? "no positive buckling factor" : r.notes + ";no positive buckling factor";
      } else {
        r.blf = blf;
      }
    }
  } catch (const std::exception& e) {
    r.feasible = false;
    r.notes = e.what();
  }
  return r;
}

void save_results_csv(const std::vector<std::pair<std::string, EvalResult>>& results,
                      const std::string& path) {
  std::ostringstream out;
  out << "id,vf,compliance,u_max,sigma_max,blf,feasible\n";
  char buf[64];
  auto opt = [&buf](const std::optional<double>& v) -> std::string {
    if (!v) return "";
    std::snprintf(buf, sizeof(buf), "%.9g", *v);
    return buf;
  };
  for (const auto& [id, r] : results) {
    std::snprintf(buf, sizeof(buf), "%.9g", r.vf);
    out << id << ',' << buf << ',' << opt(r.compliance) << ',' << opt(r.u_max) << ','
        << opt(r.sigma_max) << ',' << opt(r.blf) << ',' << (r.feasible ? 1 : 0) << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << out.str();
  if (!f.good()) throw IoError("write failed: " + path);
}

}  // namespace dehom
