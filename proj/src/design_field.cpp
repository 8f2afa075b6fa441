#include "dehom/design_field.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dehom {

DesignField DesignField::uniform(int nx, int ny, double mu1v, double mu2v, double thetav, double rhov) {
  // Optimization problems require at least 2x2 (validated by CoarseProblem);
  // a single-cell field is still a valid phasor emitter.
  if (nx < 1 || ny < 1) throw ConfigError("DesignField: grid dimensions must be positive");
  DesignField f;
  f.nx = nx;
  f.ny = ny;
  size_t n = static_cast<size_t>(nx) * ny;
  f.mu1.assign(n, mu1v);
  f.mu2.assign(n, mu2v);
  f.theta.assign(n, thetav);
  f.rho.assign(n, rhov);
  return f;
}

double DesignField::volume() const {
  double v = 0.0;
  for (int e = 0; e < count(); ++e) {
    double a = w1(e), b = w2(e);
    v += a + b - a * b;
  }
  return v / count();
}

DesignField DesignField::folded() const {
  DesignField f = *this;
  for (int e = 0; e < count(); ++e) {
    f.mu1[e] = w1(e);
    f.mu2[e] = w2(e);
    f.rho[e] = 1.0;
  }
  f.bounds.mu_lo = 0.0;
  f.bounds.rho_lo = 1.0;
  return f;
}

void DesignField::clamp_to_bounds() {
  for (int e = 0; e < count(); ++e) {
    mu1[e] = std::clamp(mu1[e], bounds.mu_lo, bounds.mu_hi);
    mu2[e] = std::clamp(mu2[e], bounds.mu_lo, bounds.mu_hi);
    theta[e] = std::clamp(theta[e], bounds.theta_lo, bounds.theta_hi);
    rho[e] = std::clamp(rho[e], bounds.rho_lo, bounds.rho_hi);
  }
}

std::uint64_t DesignField::content_hash() const {
  std::string blob;
  blob.reserve(static_cast<size_t>(count()) * 32 + 16);
  auto put = [&blob](double v) { blob.append(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put(nx);
  put(ny);
  for (int e = 0; e < count(); ++e) {
    put(mu1[e]);
    put(mu2[e]);
    put(theta[e]);
    put(rho[e]);
  }
  return fnv1a(blob);
}

void DesignField::save_csv(const std::string& path) const {
  std::ostringstream out;
  out << "ix,iy,mu1,mu2,theta,rho\n";
  char buf[160];
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      int e = index(ix, iy);
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g\n", ix, iy, mu1[e], mu2[e],
                    theta[e], rho[e]);
      out << buf;
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << out.str();
  if (!f.good()) throw IoError("write failed: " + path);
}

DesignField DesignField::load_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open design field csv: " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("ix,iy,mu1,mu2,theta,rho", 0) != 0) {
    throw IoError("design field csv missing header: " + path);
  }
  struct Row {
    int ix, iy;
    double v[4];
  };
  std::vector<Row> rows;
  int nx = 0, ny = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    Row r{};
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf", &r.ix, &r.iy, &r.v[0], &r.v[1], &r.v[2],
                    &r.v[3]) != 6) {
      throw IoError("design field csv: malformed row '" + line + "' in " + path);
    }
    nx = std::max(nx, r.ix + 1);
    ny = std::max(ny, r.iy + 1);
    rows.push_back(r);
  }
  if (static_cast<int>(rows.size()) != nx * ny) {
    throw IoError("design field csv: expected " + std::to_string(nx * ny) + " rows, got " +
                  std::to_string(rows.size()) + " in " + path);
  }
  DesignField out = DesignField::uniform(nx, ny, 0, 0, 0, 1);
  for (const Row& r : rows) {
    int e = out.index(r.ix, r.iy);
    out.mu1[e] = r.v[0];
    out.mu2[e] = r.v[1];
    out.theta[e] = r.v[2];
    out.rho[e] = r.v[3];
  }
  return out;
}

}  // namespace dehom
