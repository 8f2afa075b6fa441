#include "dehom/coarse.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>

#include "dehom/quad.hpp"

namespace dehom {

void CoarseProblem::validate() const {
  if (nx < 2 || ny < 2) throw ConfigError("coarse problem: grid must be at least 2x2");
  if (supports.empty()) throw ConfigError("coarse problem: at least one support required");
  if (loads.empty()) throw ConfigError("coarse problem: at least one load required");
  bool any_force = false;
  for (const Load& l : loads) any_force |= (l.fx != 0.0 || l.fy != 0.0);
  if (!any_force) throw ConfigError("coarse problem: all loads have zero force");
  if (!(v0 > 0.0 && v0 <= 1.0)) throw ConfigError("coarse problem: v0 must lie in (0,1]");
  if (!(l_min >= 0.0 && l_min <= l_max && l_max <= 1.0))
    throw ConfigError("coarse problem: need 0 <= lmin <= lmax <= 1");
  for (const Support& s : supports) {
    if (nodes_in(s.region).empty()) throw ConfigError("coarse problem: support region selects no nodes");
  }
  for (const Load& l : loads) {
    if (nodes_in(l.region).empty()) throw ConfigError("coarse problem: load region selects no nodes");
  }
}

std::vector<int> CoarseProblem::nodes_in(const NodeRegion& region) const {
  std::vector<int> out;
  for (int iy = 0; iy <= ny; ++iy)
    for (int ix = 0; ix <= nx; ++ix)
      if (region.contains(ix, iy)) out.push_back(node_index(ix, iy));
  return out;
}

Eigen::VectorXd CoarseProblem::force_vector() const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * node_count());
  for (const Load& l : loads) {
    std::vector<int> nodes = nodes_in(l.region);
    if (nodes.empty()) continue;
    double fx = l.fx / nodes.size();
    double fy = l.fy / nodes.size();
    for (int n : nodes) {
      f[2 * n] += fx;
      f[2 * n + 1] += fy;
    }
  }
  return f;
}

std::vector<char> CoarseProblem::fixed_dofs() const {
  std::vector<char> fixed(2 * node_count(), 0);
  for (const Support& s : supports) {
    for (int n : nodes_in(s.region)) {
      if (s.fix_x) fixed[2 * n] = 1;
      if (s.fix_y) fixed[2 * n + 1] = 1;
    }
  }
  return fixed;
}

namespace {

double width_interp(const CoarseProblem& p, double rho) {
  return p.mu_min + (p.mu_max - p.mu_min) * std::pow(rho, p.p);
}

double width_interp_deriv(const CoarseProblem& p, double rho) {
  return (p.mu_max - p.mu_min) * p.p * std::pow(std::max(rho, 1e-30), p.p - 1.0);
}

// Effective widths of element e under the problem's parameterization.
void effective_widths(const CoarseProblem& p, const DesignField& x, int e, double* a, double* b) {
  if (p.mode == ParamMode::FreeWidths) {
    *a = x.mu1[e] * x.rho[e];
    *b = x.mu2[e] * x.rho[e];
  } else {
    *a = *b = width_interp(p, x.rho[e]);
  }
}

double element_volume(const CoarseProblem& p, const DesignField& x, int e) {
  double a, b;
  effective_widths(p, x, e, &a, &b);
  return a + b - a * b;
}

double field_volume(const CoarseProblem& p, const DesignField& x) {
  double v = 0.0;
  for (int e = 0; e < x.count(); ++e) v += element_volume(p, x, e);
  return v / x.count();
}

}  // namespace

ElasticityTensor element_tensor(const CoarseProblem& problem, const DesignField& x, int e,
                                const SurrogateModel& surrogate) {
  double a, b;
  effective_widths(problem, x, e, &a, &b);
  return rotate_tensor(surrogate.evaluate(a, b), x.theta[e]);
}

CoarseState assemble_and_solve(const CoarseProblem& problem, const DesignField& x,
                               const SurrogateModel& surrogate) {
  if (!(x.nx == problem.nx && x.ny == problem.ny))
    throw ConfigError("assemble_and_solve: design field does not match problem grid");
  const int nnx = problem.nx + 1;
  const int ndof = 2 * problem.node_count();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(x.count()) * 64);
  std::vector<char> fixed = problem.fixed_dofs();
  for (int j = 0; j < problem.ny; ++j) {
    for (int i = 0; i < problem.nx; ++i) {
      int e = x.index(i, j);
      Matrix8d ke = quad_stiffness(element_tensor(problem, x, e, surrogate));
      std::array<int, 4> nodes = {j * nnx + i, j * nnx + i + 1, (j + 1) * nnx + i + 1,
                                  (j + 1) * nnx + i};
      for (int a = 0; a < 8; ++a) {
        int ga = 2 * nodes[a / 2] + (a % 2);
        for (int b = 0; b < 8; ++b) {
          int gb = 2 * nodes[b / 2] + (b % 2);
          if (fixed[ga] || fixed[gb]) continue;
          trips.emplace_back(ga, gb, ke(a, b));
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
  if (solver.info() != Eigen::Success)
    throw NumericError("coarse solve: stiffness factorization failed (insufficient constraints?)");
  CoarseState state;
  state.u = solver.solve(f_bc);
  if (!state.u.allFinite())
    throw NumericError("coarse solve: non-finite displacement solution (singular stiffness)");
  state.compliance = state.u.dot(f);

  const Eigen::Matrix<double, 3, 8> bc = quad_center_strain_matrix(1.0);
  state.strain.resize(x.count());
  state.stress.resize(x.count());
  for (int j = 0; j < problem.ny; ++j) {
    for (int i = 0; i < problem.nx; ++i) {
      int e = x.index(i, j);
      std::array<int, 4> nodes = {j * nnx + i, j * nnx + i + 1, (j + 1) * nnx + i + 1,
                                  (j + 1) * nnx + i};
      Eigen::Matrix<double, 8, 1> ue;
      for (int a = 0; a < 4; ++a) {
        ue[2 * a] = state.u[2 * nodes[a]];
        ue[2 * a + 1] = state.u[2 * nodes[a] + 1];
      }
      state.strain[e] = bc * ue;
      state.stress[e] = element_tensor(problem, x, e, surrogate).voigt() * state.strain[e];
    }
  }
  return state;
}

CoarseSensitivities compliance_sensitivities(const CoarseProblem& problem, const DesignField& x,
                                             const CoarseState& state,
                                             const SurrogateModel& surrogate) {
  const int nnx = problem.nx + 1;
  CoarseSensitivities s;
  s.d_mu1.assign(x.count(), 0.0);
  s.d_mu2.assign(x.count(), 0.0);
  s.d_rho.assign(x.count(), 0.0);
  for (int j = 0; j < problem.ny; ++j) {
    for (int i = 0; i < problem.nx; ++i) {
      int e = x.index(i, j);
      std::array<int, 4> nodes = {j * nnx + i, j * nnx + i + 1, (j + 1) * nnx + i + 1,
                                  (j + 1) * nnx + i};
      Eigen::Matrix<double, 8, 1> ue;
      for (int a = 0; a < 4; ++a) {
        ue[2 * a] = state.u[2 * nodes[a]];
        ue[2 * a + 1] = state.u[2 * nodes[a] + 1];
      }
      double wa, wb;
      effective_widths(problem, x, e, &wa, &wb);
      ElasticityTensor da, db;
      surrogate.evaluate_grad(wa, wb, &da, &db);
      Eigen::Matrix3d t = rotation_matrix(x.theta[e]);
      Eigen::Matrix3d ga = t.transpose() * da.voigt() * t;
      Eigen::Matrix3d gb = t.transpose() * db.voigt() * t;
      auto energy = [&ue](const Eigen::Matrix3d& dc) {
        return ue.dot(quad_stiffness(ElasticityTensor::from_voigt(dc)) * ue);
      };
      if (problem.mode == ParamMode::FreeWidths) {
        double ea = energy(ga);
        double eb = energy(gb);
        s.d_mu1[e] = -x.rho[e] * ea;
        s.d_mu2[e] = -x.rho[e] * eb;
        s.d_rho[e] = -(x.mu1[e] * ea + x.mu2[e] * eb);
      } else {
        double dmu = width_interp_deriv(problem, x.rho[e]);
        s.d_rho[e] = -dmu * (energy(ga) + energy(gb));
      }
    }
  }
  return s;
}

DesignField update_theta(const DesignField& x, const CoarseState& state) {
  DesignField out = x;
  for (int e = 0; e < x.count(); ++e) {
    const Eigen::Vector3d& sig = state.stress[e];
    double diff = sig[0] - sig[1];
    double shear = 2.0 * sig[2];
    double mag = std::abs(sig[0]) + std::abs(sig[1]) + std::abs(sig[2]);
    if (std::abs(diff) < 1e-12 * std::max(1.0, mag) && std::abs(shear) < 1e-12 * std::max(1.0, mag)) {
      continue;  // hydrostatic: direction undefined
    }
    double angle = 0.5 * std::atan2(shear, diff);  // direction of algebraically largest stress
    double s1 = 0.5 * (sig[0] + sig[1]) + 0.5 * std::hypot(diff, shear);
    double s2 = 0.5 * (sig[0] + sig[1]) - 0.5 * std::hypot(diff, shear);
    if (std::abs(s2) > std::abs(s1)) angle += 0.5 * kPi;  // stiff axis carries the larger |stress|
    // Nearest pi-shifted representative to the previous angle.
    double prev = x.theta[e];
    double k = std::round((prev - angle) / kPi);
    double cand = angle + k * kPi;
    out.theta[e] = std::clamp(cand, x.bounds.theta_lo, x.bounds.theta_hi);
  }
  return out;
}

namespace {

enum class ChannelKind { Mu1, Mu2, Rho };

struct Channel {
  ChannelKind kind;
  const std::vector<double>* dc;
  double lo, hi;
};

std::vector<double>& channel_values(DesignField& f, ChannelKind kind) {
  switch (kind) {
    case ChannelKind::Mu1: return f.mu1;
    case ChannelKind::Mu2: return f.mu2;
    default: return f.rho;
  }
}

// Linear cone filter of radius r on per-element sensitivities.
std::vector<double> filter_sensitivities(const DesignField& x, const std::vector<double>& dc,
                                         const std::vector<double>& weight_field, double radius) {
  int nx = x.nx, ny = x.ny;
  int reach = static_cast<int>(std::floor(radius));
  std::vector<double> out(dc.size(), 0.0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double acc = 0.0, wsum = 0.0;
      for (int dj = -reach; dj <= reach; ++dj) {
        for (int di = -reach; di <= reach; ++di) {
          int ii = i + di, jj = j + dj;
          if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue;
          double w = radius - std::hypot(di, dj);
          if (w <= 0.0) continue;
          int n = jj * nx + ii;
          acc += w * weight_field[n] * dc[n];
          wsum += w;
        }
      }
      int e = j * nx + i;
      out[e] = acc / (std::max(1e-3, weight_field[e]) * wsum);
    }
  }
  return out;
}

}  // namespace

DesignField optimize(const CoarseProblem& problem, const SurrogateModel& surrogate,
                     const OptimizeOptions& options) {
  problem.validate();
  if (options.iters < 1) throw ConfigError("optimize: iters must be >= 1");

  // Uniform start matching the volume target.
  double w0 = 1.0 - std::sqrt(std::max(0.0, 1.0 - problem.v0));
  DesignField x = DesignField::uniform(problem.nx, problem.ny, 0, 0, 0.0, 1.0);
  x.bounds.mu_lo = problem.l_min;
  x.bounds.mu_hi = problem.l_max;
  if (problem.mode == ParamMode::WidthInterp) x.bounds.rho_lo = 0.0;
  double mu0 = std::clamp(w0, problem.l_min, problem.l_max);
  double rho0;
  if (problem.mode == ParamMode::FreeWidths) {
    rho0 = std::clamp(w0 / mu0, x.bounds.rho_lo, x.bounds.rho_hi);
  } else {
    double t = std::clamp((w0 - problem.mu_min) / (problem.mu_max - problem.mu_min), 0.0, 1.0);
    rho0 = std::pow(t, 1.0 / problem.p);
    mu0 = problem.l_min;  // unused by the parameterization
  }
  std::fill(x.mu1.begin(), x.mu1.end(), mu0);
  std::fill(x.mu2.begin(), x.mu2.end(), mu0);
  std::fill(x.rho.begin(), x.rho.end(), rho0);

  for (int it = 0; it < options.iters; ++it) {
    CoarseState state = assemble_and_solve(problem, x, surrogate);
    if (options.compliance_history) options.compliance_history->push_back(state.compliance);
    CoarseSensitivities sens = compliance_sensitivities(problem, x, state, surrogate);

    std::vector<Channel> channels;
    std::vector<std::vector<double>> filtered;
    filtered.reserve(3);
    if (problem.mode == ParamMode::FreeWidths) {
      filtered.push_back(filter_sensitivities(x, sens.d_mu1, x.mu1, options.filter_radius));
      filtered.push_back(filter_sensitivities(x, sens.d_mu2, x.mu2, options.filter_radius));
      filtered.push_back(filter_sensitivities(x, sens.d_rho, x.rho, options.filter_radius));
      channels.push_back({ChannelKind::Mu1, &filtered[0], x.bounds.mu_lo, x.bounds.mu_hi});
      channels.push_back({ChannelKind::Mu2, &filtered[1], x.bounds.mu_lo, x.bounds.mu_hi});
      channels.push_back({ChannelKind::Rho, &filtered[2], x.bounds.rho_lo, x.bounds.rho_hi});
    } else {
      filtered.push_back(filter_sensitivities(x, sens.d_rho, x.rho, options.filter_radius));
      channels.push_back({ChannelKind::Rho, &filtered[0], x.bounds.rho_lo, x.bounds.rho_hi});
    }

    DesignField trial = x;
    auto apply = [&](double lambda) -> double {
      trial = x;
      for (const Channel& ch : channels) {
        const std::vector<double>& xv = channel_values(x, ch.kind);
        std::vector<double>& tv = channel_values(trial, ch.kind);
        const std::vector<double>& dc = *ch.dc;
        for (int e = 0; e < x.count(); ++e) {
          double dv;
          if (problem.mode == ParamMode::FreeWidths) {
            double wa = x.mu1[e] * x.rho[e], wb = x.mu2[e] * x.rho[e];
            if (ch.kind == ChannelKind::Mu1) dv = x.rho[e] * (1.0 - wb);
            else if (ch.kind == ChannelKind::Mu2) dv = x.rho[e] * (1.0 - wa);
            else dv = x.mu1[e] + x.mu2[e] - 2.0 * x.mu1[e] * x.mu2[e] * x.rho[e];
          } else {
            double m = width_interp(problem, x.rho[e]);
            dv = (2.0 - 2.0 * m) * width_interp_deriv(problem, x.rho[e]);
          }
          dv = std::max(dv, 1e-9);
          double b = std::max(0.0, -dc[e]) / (lambda * dv);
          double xn = xv[e] * std::pow(b, options.damping);
          xn = std::clamp(xn, xv[e] - options.move, xv[e] + options.move);
          tv[e] = std::clamp(xn, ch.lo, ch.hi);
        }
      }
      return field_volume(problem, trial);
    };

    double lo = 1e-9, hi = 1e9;
    double v_lo = apply(lo);
    if (v_lo <= problem.v0 + 1e-4) {
      // Constraint inactive (or move-limited from below): keep max material step.
    } else {
      double v_hi = apply(hi);
      if (v_hi > problem.v0 + 1e-4) {
        // Even the strongest multiplier cannot reach the target this
        // iteration (move limit); take it and let outer iterations progress.
      } else {
        bool ok = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
          double mid = 0.5 * (lo + hi);
          double v = apply(mid);
          if (std::abs(v - problem.v0) <= 1e-4) {
            ok = true;
            break;
          }
          if (v > problem.v0) lo = mid;
          else hi = mid;
        }
        if (!ok) {
          double v = apply(hi);
          if (std::abs(v - problem.v0) > 1e-4) {
            throw NumericError(
                "optimize: volume multiplier bisection failed after 60 halvings (V=" +
                std::to_string(v) + ", V0=" + std::to_string(problem.v0) + ", iter " +
                std::to_string(it) + ")");
          }
        }
      }
    }
    x = trial;
    x = update_theta(x, state);
  }
  double v_final = field_volume(problem, x);
  if (v_final > problem.v0 + 1e-4) {
    throw NumericError("optimize: final volume " + std::to_string(v_final) +
                       " exceeds target " + std::to_string(problem.v0));
  }
  if (problem.mode == ParamMode::WidthInterp) {
    // Materialize the interpolated widths so the returned field is in
    // physical form (w = mu * rho) like every other consumer expects.
    for (int e = 0; e < x.count(); ++e) {
      double m = width_interp(problem, x.rho[e]);
      x.mu1[e] = m;
      x.mu2[e] = m;
      x.rho[e] = 1.0;
    }
    x.bounds.mu_lo = problem.mu_min;
    x.bounds.mu_hi = problem.mu_max;
    x.bounds.rho_lo = 1.0;
  }
  return x;
}

std::vector<DesignField> generate_initial_population(const CoarseProblem& problem,
                                                     const SurrogateModel& surrogate,
                                                     const std::vector<ScheduleEntry>& schedule,
                                                     const OptimizeOptions& options) {
  if (schedule.empty()) throw ConfigError("generate_initial_population: schedule is empty");
  std::vector<DesignField> out;
  out.reserve(schedule.size());
  for (size_t k = 0; k < schedule.size(); ++k) {
    CoarseProblem p = problem;
    p.v0 = schedule[k].v0;
    p.l_min = schedule[k].l_min;
    try {
      out.push_back(optimize(p, surrogate, options));
    } catch (const std::exception& e) {
      throw NumericError("initial population entry " + std::to_string(k) + " (v0=" +
                         std::to_string(p.v0) + ", lmin=" + std::to_string(p.l_min) +
                         ") failed: " + e.what());
    }
  }
  return out;
}

}  // namespace dehom
