#include "dehom/contour.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace dehom {

double polyline_length(const Polyline& p, bool closed) {
  double len = 0.0;
  for (size_t i = 0; i + 1 < p.size(); ++i) len += (p[i + 1] - p[i]).norm();
  if (closed && p.size() > 1) len += (p.front() - p.back()).norm();
  return len;
}

double polygon_area(const Polyline& loop) {
  double a = 0.0;
  for (size_t i = 0; i < loop.size(); ++i) {
    const Eigen::Vector2d& p = loop[i];
    const Eigen::Vector2d& q = loop[(i + 1) % loop.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

namespace {

bool is_binary_field(const std::vector<double>& f) {
  for (double v : f)
    if (std::abs(v) > 1e-12 && std::abs(v - 1.0) > 1e-12) return false;
  return true;
}

std::vector<double> box_smooth(const std::vector<double>& f, int nx, int ny) {
  std::vector<double> out(f.size());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double acc = 0.0;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          int ic = std::clamp(i + di, 0, nx - 1);
          int jc = std::clamp(j + dj, 0, ny - 1);
          acc += f[static_cast<size_t>(jc) * nx + ic];
        }
      }
      out[static_cast<size_t>(j) * nx + i] = acc / 9.0;
    }
  }
  return out;
}

// Cell-edge crossing graph. Each crossed edge carries the interpolated point
// and exactly one outgoing segment (solid kept on the left), so walking the
// out-edges recovers the loops.
struct Linker {
  std::unordered_map<std::int64_t, Eigen::Vector2d> points;
  std::unordered_map<std::int64_t, std::int64_t> next;
};

}  // namespace

ContourSet marching_squares(const std::vector<double>& field, int nx, int ny, double c) {
  if (nx < 2 || ny < 2) throw ConfigError("marching_squares: grid must be at least 2x2");
  std::vector<double> work = field;
  double pad_value;
  if (is_binary_field(work)) {
    work = box_smooth(work, nx, ny);
    pad_value = 0.0;
  } else {
    pad_value = std::min(*std::min_element(work.begin(), work.end()), c) - 1.0;
  }

  // Pad with a void ring; node (i,j) of the padded grid sits at
  // (i - 0.5, j - 0.5) in pixel units.
  const int w = nx + 2;
  const int h = ny + 2;
  std::vector<double> v(static_cast<size_t>(w) * h, pad_value);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      v[static_cast<size_t>(j + 1) * w + (i + 1)] = work[static_cast<size_t>(j) * nx + i];

  auto val = [&](int i, int j) { return v[static_cast<size_t>(j) * w + i]; };
  auto node_pos = [](int i, int j) { return Eigen::Vector2d(i - 0.5, j - 0.5); };
  // Edge ids: horizontal (i,j)-(i+1,j) -> 2*(j*w+i), vertical (i,j)-(i,j+1) -> +1.
  auto hedge = [&](int i, int j) { return 2 * (static_cast<std::int64_t>(j) * w + i); };
  auto vedge = [&](int i, int j) { return 2 * (static_cast<std::int64_t>(j) * w + i) + 1; };

  Linker link;
  auto crossing = [&](int ia, int ja, int ib, int jb) {
    double va = val(ia, ja), vb = val(ib, jb);
    double t = (c - va) / (vb - va);
    return node_pos(ia, ja) + t * (node_pos(ib, jb) - node_pos(ia, ja));
  };

  for (int j = 0; j + 1 < h; ++j) {
    for (int i = 0; i + 1 < w; ++i) {
      int code = (val(i, j) >= c ? 1 : 0) | (val(i + 1, j) >= c ? 2 : 0) |
                 (val(i + 1, j + 1) >= c ? 4 : 0) | (val(i, j + 1) >= c ? 8 : 0);
      if (code == 0 || code == 15) continue;
      std::int64_t b = hedge(i, j), t = hedge(i, j + 1), l = vedge(i, j), r = vedge(i + 1, j);
      auto put_point = [&](std::int64_t e, int ia, int ja, int ib, int jb) {
        if (!link.points.count(e)) link.points.emplace(e, crossing(ia, ja, ib, jb));
      };
      auto seg = [&](std::int64_t from, std::int64_t to) { link.next[from] = to; };
      auto pb = [&] { put_point(b, i, j, i + 1, j); };
      auto pt = [&] { put_point(t, i, j + 1, i + 1, j + 1); };
      auto pl = [&] { put_point(l, i, j, i, j + 1); };
      auto pr = [&] { put_point(r, i + 1, j, i + 1, j + 1); };
      switch (code) {
        case 1: pb(); pl(); seg(b, l); break;
        case 2: pr(); pb(); seg(r, b); break;
        case 3: pr(); pl(); seg(r, l); break;
        case 4: pt(); pr(); seg(t, r); break;
        case 5: {
          double center = 0.25 * (val(i, j) + val(i + 1, j) + val(i, j + 1) + val(i + 1, j + 1));
          pb(); pl(); pt(); pr();
          if (center >= c) { seg(b, r); seg(t, l); }
          else { seg(b, l); seg(t, r); }
          break;
        }
        case 6: pt(); pb(); seg(t, b); break;
        case 7: pt(); pl(); seg(t, l); break;
        case 8: pl(); pt(); seg(l, t); break;
        case 9: pb(); pt(); seg(b, t); break;
        case 10: {
          double center = 0.25 * (val(i, j) + val(i + 1, j) + val(i, j + 1) + val(i + 1, j + 1));
          pb(); pl(); pt(); pr();
          if (center >= c) { seg(l, b); seg(r, t); }
          else { seg(r, b); seg(l, t); }
          break;
        }
        case 11: pr(); pt(); seg(r, t); break;
        case 12: pl(); pr(); seg(l, r); break;
        case 13: pb(); pr(); seg(b, r); break;
        case 14: pl(); pb(); seg(l, b); break;
        default: break;
      }
    }
  }

  ContourSet out;
  std::unordered_map<std::int64_t, bool> visited;
  for (const auto& [start, unused] : link.next) {
    if (visited[start]) continue;
    Polyline loop;
    std::int64_t e = start;
    while (true) {
      visited[e] = true;
      const Eigen::Vector2d& p = link.points.at(e);
      if (loop.empty() || (loop.back() - p).norm() > 1e-12) loop.push_back(p);
      auto it = link.next.find(e);
      if (it == link.next.end()) break;  // cannot happen with the padded ring
      e = it->second;
      if (e == start) break;
    }
    while (loop.size() >= 2 && (loop.front() - loop.back()).norm() <= 1e-12) loop.pop_back();
    if (loop.size() < 3) continue;
    if (std::abs(polygon_area(loop)) < 4.0) continue;  // unmanufacturable speck
    out.loops.push_back(std::move(loop));
  }
  // Deterministic order: by first point, lexicographic.
  std::sort(out.loops.begin(), out.loops.end(), [](const Polyline& a, const Polyline& b) {
    if (a.front().y() != b.front().y()) return a.front().y() < b.front().y();
    if (a.front().x() != b.front().x()) return a.front().x() < b.front().x();
    return a.size() < b.size();
  });
  return out;
}

ContourSet marching_squares(const BinaryField& field, double c) {
  std::vector<double> f(field.values.size());
  for (size_t i = 0; i < f.size(); ++i) f[i] = field.values[i] ? 1.0 : 0.0;
  return marching_squares(f, field.nx, field.ny, c);
}

Polyline resample_equal_arclength(const Polyline& poly, double m_factor, bool closed) {
  if (poly.size() < 2) throw NumericError("resample: polyline needs at least 2 points");
  if (!(m_factor > 0.0)) throw ConfigError("resample: M must be positive");
  const int n_in = static_cast<int>(poly.size());
  const int n_seg = closed ? n_in : n_in - 1;
  std::vector<double> s(n_seg + 1, 0.0);
  for (int i = 0; i < n_seg; ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[(i + 1) % n_in];
    s[i + 1] = s[i] + (b - a).norm();
  }
  const double length = s.back();
  if (length <= 0.0) throw NumericError("resample: zero-length polyline");

  int n_out = std::max(4, static_cast<int>(std::lround(m_factor * n_in)));
  double ds = closed ? length / n_out : length / (n_out - 1);
  Polyline out;
  out.reserve(n_out);
  int seg = 0;
  for (int k = 0; k < n_out; ++k) {
    double d = std::min(k * ds, length);
    while (seg + 1 < n_seg && s[seg + 1] < d) ++seg;
    double span = s[seg + 1] - s[seg];
    double t = span > 0.0 ? (d - s[seg]) / span : 0.0;
    const Eigen::Vector2d& a = poly[seg];
    const Eigen::Vector2d& b = poly[(seg + 1) % n_in];
    out.push_back(a + t * (b - a));
  }
  return out;
}

namespace {

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  Eigen::Vector2d ab = b - a;
  double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double max_min_distance(const Polyline& pts, const Polyline& curve, bool curve_closed) {
  const int n_seg = curve_closed ? static_cast<int>(curve.size()) : static_cast<int>(curve.size()) - 1;
  double worst = 0.0;
  for (const Eigen::Vector2d& p : pts) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_seg; ++i) {
      best = std::min(best, point_segment_distance(p, curve[i], curve[(i + 1) % curve.size()]));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

Deviation deviation(const Polyline& original, const Polyline& resampled, bool closed) {
  if (original.empty() || resampled.empty()) throw NumericError("deviation: empty polyline");
  Deviation d;
  d.eps_shape = std::max(max_min_distance(resampled, original, closed),
                         max_min_distance(original, resampled, closed));
  double length = polyline_length(original, closed);
  d.eps_acc = length > 0.0 ? (1.0 - d.eps_shape / length) * 100.0 : 100.0;
  return d;
}

std::string dxf_document(const ContourSet& contours, double scale) {
  if (contours.loops.empty() && contours.open.empty())
    throw ConfigError("export_dxf: empty contour set");
  std::ostringstream out;
  auto tag = [&out](const char* code, const std::string& value) {
    out << code << "\n" << value << "\n";
  };
  char buf[48];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return std::string(buf);
  };
  tag("  0", "SECTION");
  tag("  2", "HEADER");
  tag("  9", "$ACADVER");
  tag("  1", "AC1009");
  tag("  0", "ENDSEC");
  tag("  0", "SECTION");
  tag("  2", "ENTITIES");
  auto polyline = [&](const Polyline& pl, bool closed) {
    tag("  0", "POLYLINE");
    tag("  8", "0");
    tag(" 66", "1");
    tag(" 70", closed ? "1" : "0");
    for (const Eigen::Vector2d& p : pl) {
      tag("  0", "VERTEX");
      tag("  8", "0");
      tag(" 10", num(p.x() * scale));
      tag(" 20", num(p.y() * scale));
    }
    tag("  0", "SEQEND");
  };
  for (const Polyline& loop : contours.loops) polyline(loop, true);
  for (const Polyline& chain : contours.open) polyline(chain, false);
  tag("  0", "ENDSEC");
  tag("  0", "EOF");
  return out.str();
}

void export_dxf(const ContourSet& contours, double scale, const std::string& path) {
  std::string doc = dxf_document(contours, scale);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << doc;
  if (!f.good()) throw IoError("write failed: " + path);
}

void ResampleReport::save_csv(const std::string& path) const {
  std::ostringstream out;
  out << "loop_id,n_msa,n_ear,eps_shape,eps_acc\n";
  char buf[128];
  for (const LoopReport& r : loops) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.9g,%.9g\n", r.loop_id, r.n_msa, r.n_ear, r.eps_shape,
                  r.eps_acc);
    out << buf;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << out.str();
  if (!f.good()) throw IoError("write failed: " + path);
}

ExtractResult extract_geometry(const BinaryField& field, double c, double m_factor) {
  ExtractResult res;
  ContourSet raw = marching_squares(field, c);
  res.report.eps_shape = 0.0;
  res.report.eps_acc = 100.0;
  int loop_id = 0;
  for (const Polyline& loop : raw.loops) {
    Polyline rs = resample_equal_arclength(loop, m_factor, /*closed=*/true);
    Deviation dev = deviation(loop, rs, /*closed=*/true);
    LoopReport lr;
    lr.loop_id = loop_id++;
    lr.n_msa = static_cast<int>(loop.size());
    lr.n_ear = static_cast<int>(rs.size());
    lr.eps_shape = dev.eps_shape;
    lr.eps_acc = dev.eps_acc;
    res.report.loops.push_back(lr);
    res.report.eps_shape = std::max(res.report.eps_shape, dev.eps_shape);
    res.report.eps_acc = std::min(res.report.eps_acc, dev.eps_acc);
    res.report.delta_s =
        std::max(res.report.delta_s, polyline_length(loop, true) / rs.size());
    res.contours.loops.push_back(std::move(rs));
  }
  return res;
}

}  // namespace dehom
