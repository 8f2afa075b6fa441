#include "dehom/mutate.hpp"

#include <algorithm>
#include <cmath>

namespace dehom {

double keys_weight(double r, double a) {
  double t = std::abs(r);
  if (t < 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
  if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
  return 0.0;
}

void MutationConfig::validate() const {
  if (n_samples < 0 || n_points < 0) throw ConfigError("mutation config: counts must be >= 0");
  if (!(r_m > 0.0)) throw ConfigError("mutation config: r_m must be positive");
  if (!(p0 > 0.0)) throw ConfigError("mutation config: p0 must be positive");
  if (kernel_a < -1.0 || kernel_a > 0.0) throw ConfigError("mutation config: kernel_a must lie in [-1,0]");
}

namespace {

double keys_sample(const std::vector<double>& grid, int nx, int ny, double x, double y, double a) {
  int i0 = static_cast<int>(std::floor(x));
  int j0 = static_cast<int>(std::floor(y));
  double acc = 0.0;
  for (int m = -1; m <= 2; ++m) {
    double wx = keys_weight(x - (i0 + m), a);
    if (wx == 0.0) continue;
    int ic = std::clamp(i0 + m, 0, nx - 1);
    for (int n = -1; n <= 2; ++n) {
      double wy = keys_weight(y - (j0 + n), a);
      if (wy == 0.0) continue;
      int jc = std::clamp(j0 + n, 0, ny - 1);
      acc += wx * wy * grid[static_cast<size_t>(jc) * nx + ic];
    }
  }
  return acc;
}

}  // namespace

DesignField mutate(const DesignField& x, const WarpField& u_field, const MutationConfig& cfg,
                   std::mt19937_64& rng) {
  cfg.validate();
  if (u_field.nx != x.nx || u_field.ny != x.ny)
    throw ConfigError("mutate: displacement field does not match design grid");

  double umax = 0.0;
  for (int e = 0; e < x.count(); ++e) umax = std::max(umax, std::hypot(u_field.ux[e], u_field.uy[e]));
  if (cfg.strength == 0.0 || umax == 0.0 || cfg.n_points == 0) return x;

  std::vector<double> ux(x.count()), uy(x.count());
  for (int e = 0; e < x.count(); ++e) {
    ux[e] = u_field.ux[e] / umax * cfg.strength;
    uy[e] = u_field.uy[e] / umax * cfg.strength;
  }

  std::uniform_int_distribution<int> dist_x(0, x.nx - 1);
  std::uniform_int_distribution<int> dist_y(0, x.ny - 1);

  DesignField cur = x;
  for (int point = 0; point < cfg.n_points; ++point) {
    int i0 = dist_x(rng);
    int j0 = dist_y(rng);

    std::vector<double> sin2t(x.count()), cos2t(x.count());
    for (int e = 0; e < x.count(); ++e) {
      sin2t[e] = std::sin(2.0 * cur.theta[e]);
      cos2t[e] = std::cos(2.0 * cur.theta[e]);
    }
    DesignField next = cur;
    for (int j = 0; j < x.ny; ++j) {
      for (int i = 0; i < x.nx; ++i) {
        int e = cur.index(i, j);
        double d = std::hypot(static_cast<double>(i - i0), static_cast<double>(j - j0));
        if (d >= cfg.r_m) continue;  // alpha = 0: copy bit-exactly
        double alpha = std::pow(1.0 - d / cfg.r_m, cfg.p0);
        double sx = i - alpha * ux[e];
        double sy = j + alpha * uy[e];
        if (sx == static_cast<double>(i) && sy == static_cast<double>(j)) continue;
        next.mu1[e] = keys_sample(cur.mu1, x.nx, x.ny, sx, sy, cfg.kernel_a);
        next.mu2[e] = keys_sample(cur.mu2, x.nx, x.ny, sx, sy, cfg.kernel_a);
        next.rho[e] = keys_sample(cur.rho, x.nx, x.ny, sx, sy, cfg.kernel_a);
        double s = keys_sample(sin2t, x.nx, x.ny, sx, sy, cfg.kernel_a);
        double c = keys_sample(cos2t, x.nx, x.ny, sx, sy, cfg.kernel_a);
        if (s != 0.0 || c != 0.0) {
          double raw = 0.5 * std::atan2(s, c);
          double prev = cur.theta[e];
          next.theta[e] = raw + std::round((prev - raw) / kPi) * kPi;
        }
      }
    }
    next.clamp_to_bounds();
    cur = std::move(next);
  }
  return cur;
}

}  // namespace dehom
