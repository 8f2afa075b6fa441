#include "dehom/phasor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dehom/mutate.hpp"

namespace dehom {

MeshHierarchy::MeshHierarchy(int nx_, int ny_, int si, int sf) : nx(nx_), ny(ny_), s_i(si), s_f(sf) {
  if (nx < 1 || ny < 1) throw ConfigError("mesh hierarchy: coarse grid must be positive");
  if (s_i < 2) throw ConfigError("mesh hierarchy: s_i must be >= 2");
  if (s_f < s_i) throw ConfigError("mesh hierarchy: s_f must be >= s_i");
  if (s_f % s_i != 0) throw ConfigError("mesh hierarchy: s_f must be a multiple of s_i");
}

void PhasorConfig::validate() const {
  if (!(omega > 0.0)) throw ConfigError("phasor config: omega must be positive");
  if (!(beta > 0.0)) throw ConfigError("phasor config: beta must be positive");
  if (!(aspect >= 1.0)) throw ConfigError("phasor config: aspect must be >= 1");
  if (align_iters < 0) throw ConfigError("phasor config: align_iters must be >= 0");
  if (!(sample_radius > 0.0)) throw ConfigError("phasor config: sample_radius must be positive");
}

std::uint64_t PhasorConfig::content_hash() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "omega=%.17g;beta=%.17g;aspect=%.17g;align=%d;radius=%.17g;rho_void=%.17g",
                omega, beta, aspect, align_iters, sample_radius, rho_void);
  return fnv1a(buf);
}

LaminationDirections lamination_directions(const DesignField& x) {
  LaminationDirections d;
  int n = x.count();
  d.n1.resize(n);
  d.n2.resize(n);
  d.t1.resize(n);
  d.t2.resize(n);
  for (int e = 0; e < n; ++e) {
    double c = std::cos(x.theta[e]);
    double s = std::sin(x.theta[e]);
    d.n1[e] = {c, s};
    d.n2[e] = {-s, c};
    d.t1[e] = x.w1(e);
    d.t2[e] = x.w2(e);
  }
  return d;
}

KernelSet make_kernels(const DesignField& x, const std::vector<Eigen::Vector2d>& dirs) {
  KernelSet k;
  k.nx = x.nx;
  k.ny = x.ny;
  int n = x.count();
  k.center.resize(n);
  k.dir = dirs;
  k.phase.assign(n, 0.0);
  for (int j = 0; j < x.ny; ++j)
    for (int i = 0; i < x.nx; ++i) k.center[x.index(i, j)] = {i + 0.5, j + 0.5};
  return k;
}

namespace {

// Symmetrized phase transport between two kernels; sign-invariant in the
// direction field (directions compared modulo pi via the dot-product sign).
struct PairTerm {
  double weight;
  double sign;
  double offset;
};

PairTerm pair_term(const KernelSet& k, int e, int f, const PhasorConfig& cfg) {
  Eigen::Vector2d d = k.center[e] - k.center[f];
  double s = (k.dir[e].dot(k.dir[f]) >= 0.0) ? 1.0 : -1.0;
  double offset = kPi * cfg.omega * (k.dir[e] + s * k.dir[f]).dot(d);
  double w = std::exp(-cfg.beta * d.squaredNorm());
  return {w, s, offset};
}

template <typename Fn>
void for_neighbors(const KernelSet& k, int e, double radius, Fn&& fn) {
  int ex = e % k.nx;
  int ey = e / k.nx;
  int r = static_cast<int>(std::ceil(radius));
  for (int j = std::max(0, ey - r); j <= std::min(k.ny - 1, ey + r); ++j) {
    for (int i = std::max(0, ex - r); i <= std::min(k.nx - 1, ex + r); ++i) {
      int f = j * k.nx + i;
      if (f == e) continue;
      if ((k.center[e] - k.center[f]).norm() > radius) continue;
      fn(f);
    }
  }
}

}  // namespace

double alignment_energy(const KernelSet& kernels, const PhasorConfig& cfg) {
  double energy = 0.0;
  int n = static_cast<int>(kernels.phase.size());
  for (int e = 0; e < n; ++e) {
    for_neighbors(kernels, e, cfg.sample_radius, [&](int f) {
      if (f <= e) return;  // each unordered pair once
      PairTerm t = pair_term(kernels, e, f, cfg);
      energy += t.weight * (1.0 - std::cos(kernels.phase[e] - t.sign * kernels.phase[f] - t.offset));
    });
  }
  return energy;
}

std::vector<double> align_phases(KernelSet* kernels, const PhasorConfig& cfg) {
  std::vector<double> history;
  history.push_back(alignment_energy(*kernels, cfg));
  int n = static_cast<int>(kernels->phase.size());
  for (int sweep = 0; sweep < cfg.align_iters; ++sweep) {
    for (int e = 0; e < n; ++e) {
      double re = 0.0, im = 0.0;
      for_neighbors(*kernels, e, cfg.sample_radius, [&](int f) {
        PairTerm t = pair_term(*kernels, e, f, cfg);
        double target = t.sign * kernels->phase[f] + t.offset;
        re += t.weight * std::cos(target);
        im += t.weight * std::sin(target);
      });
      if (re != 0.0 || im != 0.0) kernels->phase[e] = std::atan2(im, re);
    }
    history.push_back(alignment_energy(*kernels, cfg));
  }
  return history;
}

ComplexField synthesize_field(const KernelSet& kernels, const MeshHierarchy& mesh,
                              const PhasorConfig& cfg) {
  ComplexField g;
  g.nx = mesh.inter_nx();
  g.ny = mesh.inter_ny();
  g.values.resize(static_cast<size_t>(g.nx) * g.ny);
  const double r = cfg.sample_radius;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      Eigen::Vector2d p((i + 0.5) / mesh.s_i, (j + 0.5) / mesh.s_i);
      double wsum = 0.0;
      std::complex<double> acc(0.0, 0.0);
      int ex0 = std::max(0, static_cast<int>(std::floor(p.x() - r)));
      int ex1 = std::min(mesh.nx - 1, static_cast<int>(std::ceil(p.x() + r)));
      int ey0 = std::max(0, static_cast<int>(std::floor(p.y() - r)));
      int ey1 = std::min(mesh.ny - 1, static_cast<int>(std::ceil(p.y() + r)));
      for (int ey = ey0; ey <= ey1; ++ey) {
        for (int ex = ex0; ex <= ex1; ++ex) {
          int e = ey * mesh.nx + ex;
          Eigen::Vector2d d = p - kernels.center[e];
          if (d.norm() > r) continue;
          const Eigen::Vector2d& n = kernels.dir[e];
          double along = d.dot(n);
          double across = -d.x() * n.y() + d.y() * n.x();
          double delta = (along / cfg.aspect) * (along / cfg.aspect) + across * across;
          double w = std::exp(-cfg.beta * delta);
          double psi = 2.0 * kPi * cfg.omega * along + kernels.phase[e];
          acc += w * w * std::complex<double>(std::cos(psi), std::sin(psi));
          wsum += w;
        }
      }
      if (wsum == 0.0) {
        throw NumericError("synthesize: no kernel within sample_radius at intermediate node (" +
                           std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      g.values[static_cast<size_t>(j) * g.nx + i] = acc / wsum;
    }
  }
  return g;
}

std::pair<ComplexField, ComplexField> synthesize(const DesignField& x,
                                                 const LaminationDirections& dirs,
                                                 const MeshHierarchy& mesh,
                                                 const PhasorConfig& cfg) {
  if (mesh.nx != x.nx || mesh.ny != x.ny)
    throw ConfigError("synthesize: mesh hierarchy does not match design field");
  cfg.validate();
  KernelSet k1 = make_kernels(x, dirs.n1);
  KernelSet k2 = make_kernels(x, dirs.n2);
  align_phases(&k1, cfg);
  align_phases(&k2, cfg);
  return {synthesize_field(k1, mesh, cfg), synthesize_field(k2, mesh, cfg)};
}

PhaseField demodulate(const ComplexField& g) {
  PhaseField out;
  out.nx = g.nx;
  out.ny = g.ny;
  out.values.resize(g.values.size());
  for (size_t i = 0; i < g.values.size(); ++i) {
    double mag = std::abs(g.values[i]);
    if (mag < 1e-30) {
      out.values[i] = 0.0;
      ++out.flagged_nodes;
      continue;
    }
    double t = std::arg(g.values[i]) / (2.0 * kPi);
    t -= std::floor(t);
    if (t >= 1.0) t = 0.0;
    out.values[i] = t;
  }
  return out;
}

namespace {

// Keys bicubic sample of a wrapped phase field. Branch-shifts each tap onto
// the sheet nearest a local reference so interpolation never crosses the
// sawtooth discontinuity.
double sample_phase(const PhaseField& f, double u, double v, double a) {
  int i0 = static_cast<int>(std::floor(u));
  int j0 = static_cast<int>(std::floor(v));
  auto clamped = [&f](int i, int j) {
    i = std::clamp(i, 0, f.nx - 1);
    j = std::clamp(j, 0, f.ny - 1);
    return f.at(i, j);
  };
  double ref = clamped(static_cast<int>(std::lround(u)), static_cast<int>(std::lround(v)));
  double acc = 0.0;
  for (int m = -1; m <= 2; ++m) {
    double wx = keys_weight(u - (i0 + m), a);
    if (wx == 0.0) continue;
    for (int n = -1; n <= 2; ++n) {
      double wy = keys_weight(v - (j0 + n), a);
      if (wy == 0.0) continue;
      double val = clamped(i0 + m, j0 + n);
      val -= std::round(val - ref);  // nearest sheet
      acc += wx * wy * val;
    }
  }
  acc -= std::floor(acc);
  if (acc >= 1.0) acc = 0.0;
  return acc;
}

// Bilinear interpolation of a per-coarse-element scalar at a point given in
// coarse units, clamped at the boundary ring.
double sample_element_field(const std::vector<double>& t, int nx, int ny, double x, double y) {
  double u = x - 0.5;
  double v = y - 0.5;
  int i0 = static_cast<int>(std::floor(u));
  int j0 = static_cast<int>(std::floor(v));
  double fu = u - i0;
  double fv = v - j0;
  auto clamped = [&](int i, int j) {
    i = std::clamp(i, 0, nx - 1);
    j = std::clamp(j, 0, ny - 1);
    return t[static_cast<size_t>(j) * nx + i];
  };
  return (1 - fu) * (1 - fv) * clamped(i0, j0) + fu * (1 - fv) * clamped(i0 + 1, j0) +
         (1 - fu) * fv * clamped(i0, j0 + 1) + fu * fv * clamped(i0 + 1, j0 + 1);
}

bool band_solid(double phase, double width) {
  if (width <= 0.0) return false;
  return 2.0 * std::min(phase, 1.0 - phase) <= width;
}

}  // namespace

double BinaryField::solid_fraction() const {
  if (values.empty()) return 0.0;
  size_t solid = 0;
  for (std::uint8_t v : values) solid += v;
  return static_cast<double>(solid) / values.size();
}

BinaryField threshold_union(const PhaseField& phi1, const PhaseField& phi2,
                            const std::vector<double>& t1, const std::vector<double>& t2,
                            const MeshHierarchy& mesh) {
  for (double t : t1)
    if (t < 0.0 || t > 1.0) throw ConfigError("threshold_union: thickness outside [0,1]");
  for (double t : t2)
    if (t < 0.0 || t > 1.0) throw ConfigError("threshold_union: thickness outside [0,1]");
  BinaryField out;
  out.nx = mesh.fine_nx();
  out.ny = mesh.fine_ny();
  out.values.assign(static_cast<size_t>(out.nx) * out.ny, 0);
  const double a = -0.5;
  for (int j = 0; j < out.ny; ++j) {
    for (int i = 0; i < out.nx; ++i) {
      double px = (i + 0.5) / mesh.s_f;  // coarse units
      double py = (j + 0.5) / mesh.s_f;
      double u = px * mesh.s_i - 0.5;    // intermediate index coords
      double v = py * mesh.s_i - 0.5;
      double w1 = sample_element_field(t1, mesh.nx, mesh.ny, px, py);
      double w2 = sample_element_field(t2, mesh.nx, mesh.ny, px, py);
      // t1 bars run along n1: they are bands of the field oscillating along n2.
      bool solid = false;
      if (w1 > 0.0) solid = band_solid(sample_phase(phi2, u, v, a), w1);
      if (!solid && w2 > 0.0) solid = band_solid(sample_phase(phi1, u, v, a), w2);
      if (solid) out.set(i, j, 1);
    }
  }
  return out;
}

BinaryField dehomogenize(const DesignField& x, const MeshHierarchy& mesh, const PhasorConfig& cfg) {
  LaminationDirections dirs = lamination_directions(x);
  auto [g1, g2] = synthesize(x, dirs, mesh, cfg);
  PhaseField phi1 = demodulate(g1);
  PhaseField phi2 = demodulate(g2);
  BinaryField out = threshold_union(phi1, phi2, dirs.t1, dirs.t2, mesh);
  // Element-level overrides: macro void wins, fully solid cells fill.
  for (int j = 0; j < out.ny; ++j) {
    int ey = j / mesh.s_f;
    for (int i = 0; i < out.nx; ++i) {
      int ex = i / mesh.s_f;
      int e = x.index(ex, ey);
      if (x.rho[e] <= cfg.rho_void) {
        out.set(i, j, 0);
      } else if (x.w1(e) >= 1.0 - 1e-9 || x.w2(e) >= 1.0 - 1e-9) {
        out.set(i, j, 1);
      }
    }
  }
  out.design_hash = x.content_hash();
  out.config_hash = cfg.content_hash();
  return out;
}

void BinaryField::save_pgm(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "P5\n" << nx << " " << ny << "\n255\n";
  // Image rows run top to bottom; grid row 0 is the bottom.
  std::string row(static_cast<size_t>(nx), '\0');
  for (int j = ny - 1; j >= 0; --j) {
    for (int i = 0; i < nx; ++i) row[i] = at(i, j) ? static_cast<char>(255) : 0;
    f.write(row.data(), row.size());
  }
  if (!f.good()) throw IoError("write failed: " + path);
  std::ofstream meta(path + ".meta", std::ios::binary);
  if (!meta) throw IoError("cannot open for writing: " + path + ".meta");
  char buf[160];
  std::snprintf(buf, sizeof(buf), "nx=%d\nny=%d\ndesign_hash=%016llx\nconfig_hash=%016llx\n", nx, ny,
                static_cast<unsigned long long>(design_hash),
                static_cast<unsigned long long>(config_hash));
  meta << buf;
  if (!meta.good()) throw IoError("write failed: " + path + ".meta");
}

BinaryField BinaryField::load_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open pgm: " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255)
    throw IoError("unsupported pgm (want P5 maxval 255): " + path);
  f.get();  // single whitespace after header
  BinaryField out;
  out.nx = w;
  out.ny = h;
  out.values.assign(static_cast<size_t>(w) * h, 0);
  std::vector<char> row(w);
  for (int j = h - 1; j >= 0; --j) {
    f.read(row.data(), row.size());
    if (!f) throw IoError("truncated pgm: " + path);
    for (int i = 0; i < w; ++i)
      out.set(i, j, static_cast<unsigned char>(row[i]) >= 128 ? 1 : 0);
  }
  return out;
}

}  // namespace dehom
