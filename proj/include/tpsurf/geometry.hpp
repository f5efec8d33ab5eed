#pragma once

#include "tpsurf/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace tpsurf::geom {

/// Closest distance between segments [p0,p1] and [q0,q1] in R^n.
inline double segment_segment_distance(const Vec& p0, const Vec& p1, const Vec& q0, const Vec& q1) {
  const Vec d1 = p1 - p0;
  const Vec d2 = q1 - q0;
  const Vec r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0;
  double t = 0;
  if (a <= 0 && e <= 0) return r.norm();
  if (a <= 0) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 0) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double den = a * e - b * b;
      s = den > 0 ? std::clamp((b * f - c * e) / den, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return (p0 + s * d1 - (q0 + t * d2)).norm();
}

/// Distance from p to triangle (a, b, c) in R^n (Ericson's region walk, which
/// only uses dot products and so works in any dimension).
inline double point_triangle_distance(const Vec& p, const Vec& a, const Vec& b, const Vec& c) {
  const Vec ab = b - a;
  const Vec ac = c - a;
  const Vec ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return ap.norm();
  const Vec bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return bp.norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double v = d1 / (d1 - d3);
    return (p - (a + v * ab)).norm();
  }
  const Vec cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return cp.norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double w = d2 / (d2 - d6);
    return (p - (a + w * ac)).norm();
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }
  const double den = 1.0 / (va + vb + vc);
  const double v = vb * den;
  const double w = vc * den;
  return (p - (a + v * ab + w * ac)).norm();
}

struct RayHit {
  bool hit = false;
  bool near_degenerate = false;  // grazing an edge, endpoint, or parallel
  double t = 0;
};

/// Segment p0->p1 against triangle (a,b,c) in R^3 (Moller-Trumbore). `tol` is
/// the relative margin below which a configuration is called degenerate.
inline RayHit segment_triangle(const Vec& p0, const Vec& p1, const Vec& a, const Vec& b, const Vec& c,
                               double tol = 1e-12) {
  RayHit out;
  const Eigen::Vector3d o = p0.head<3>();
  const Eigen::Vector3d dir = (p1 - p0).head<3>();
  const Eigen::Vector3d e1 = (b - a).head<3>();
  const Eigen::Vector3d e2 = (c - a).head<3>();
  const Eigen::Vector3d pv = dir.cross(e2);
  const double det = e1.dot(pv);
  const double scale = dir.norm() * e1.norm() * e2.norm();
  if (std::fabs(det) <= tol * scale) {
    // Parallel: only a problem when the segment lies in the triangle's plane
    // close to the triangle.
    const Eigen::Vector3d nrm = e1.cross(e2);
    const double off = std::fabs(nrm.dot(o - a.head<3>())) / std::max(nrm.norm(), 1e-300);
    const double size = std::max({e1.norm(), e2.norm(), dir.norm()});
    if (off <= tol * size * 1e3) out.near_degenerate = true;
    return out;
  }
  const double inv = 1.0 / det;
  const Eigen::Vector3d tv = o - a.head<3>();
  const double u = tv.dot(pv) * inv;
  const Eigen::Vector3d qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  const double t = e2.dot(qv) * inv;
  auto near = [&](double x) { return std::fabs(x) <= tol; };
  const bool inside = u >= 0 && v >= 0 && u + v <= 1 && t >= 0 && t <= 1;
  if (near(u) || near(v) || near(1 - u - v) || near(t) || near(1 - t)) {
    // Only flag when the point is actually close to the closed triangle and
    // segment; far misses stay clean.
    if (u >= -tol && v >= -tol && u + v <= 1 + tol && t >= -tol && t <= 1 + tol) {
      out.near_degenerate = true;
    }
  }
  out.hit = inside;
  out.t = t;
  return out;
}

/// Exact length of the part of segment [a,b] inside the closed ball B(x, r).
inline double segment_ball_length(const Vec& a, const Vec& b, const Vec& x, double r) {
  const Vec d = b - a;
  const Vec f = a - x;
  const double aa = d.squaredNorm();
  if (aa == 0) return 0.0;
  const double bb = 2.0 * f.dot(d);
  const double cc = f.squaredNorm() - r * r;
  const double disc = bb * bb - 4.0 * aa * cc;
  if (disc <= 0) return 0.0;
  const double sq = std::sqrt(disc);
  const double t0 = std::max(0.0, (-bb - sq) / (2.0 * aa));
  const double t1 = std::min(1.0, (-bb + sq) / (2.0 * aa));
  return t1 > t0 ? (t1 - t0) * std::sqrt(aa) : 0.0;
}

namespace detail {

// Signed area of disk(0, r) ∩ triangle(0, a, b) in the plane.
inline double disk_wedge_area(Eigen::Vector2d a, Eigen::Vector2d b, double r) {
  const Eigen::Vector2d d = b - a;
  const double aa = d.squaredNorm();
  std::array<double, 4> ts{0.0, 0.0, 0.0, 1.0};
  int count = 1;
  if (aa > 0) {
    const double bb = 2.0 * a.dot(d);
    const double cc = a.squaredNorm() - r * r;
    const double disc = bb * bb - 4.0 * aa * cc;
    if (disc > 0) {
      const double sq = std::sqrt(disc);
      const double t0 = (-bb - sq) / (2.0 * aa);
      const double t1 = (-bb + sq) / (2.0 * aa);
      if (t0 > 0 && t0 < 1) ts[count++] = t0;
      if (t1 > 0 && t1 < 1) ts[count++] = t1;
    }
  }
  ts[count++] = 1.0;
  double area = 0;
  for (int i = 0; i + 1 < count; ++i) {
    const Eigen::Vector2d p = a + ts[i] * d;
    const Eigen::Vector2d q = a + ts[i + 1] * d;
    const Eigen::Vector2d mid = 0.5 * (p + q);
    const double cross = p.x() * q.y() - p.y() * q.x();
    if (mid.squaredNorm() <= r * r) {
      area += 0.5 * cross;
    } else {
      area += 0.5 * r * r * std::atan2(cross, p.dot(q));
    }
  }
  return area;
}

}  // namespace detail

/// Exact area of the planar triangle (a,b,c) ∩ disk(center, r).
inline double triangle_disk_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                 const Eigen::Vector2d& c, const Eigen::Vector2d& center, double r) {
  if (r <= 0) return 0.0;
  const Eigen::Vector2d pa = a - center;
  const Eigen::Vector2d pb = b - center;
  const Eigen::Vector2d pc = c - center;
  const double s = detail::disk_wedge_area(pa, pb, r) + detail::disk_wedge_area(pb, pc, r) +
                   detail::disk_wedge_area(pc, pa, r);
  return std::fabs(s);
}

/// Exact area of triangle (a,b,c) in R^n clipped to the closed ball B(x, r):
/// the ball cuts the triangle's plane in a disk. Offsets from the plane below
/// `snap` times the triangle size are treated as zero so that probes lying on
/// the triangle stay exact at very small radii.
inline double triangle_ball_area(const Vec& a, const Vec& b, const Vec& c, const Vec& x, double r,
                                 double snap = 1e-12) {
  const Vec e1 = b - a;
  const Vec e2 = c - a;
  const double l1 = e1.norm();
  const Vec u = e1 / l1;
  Vec w = e2 - e2.dot(u) * u;
  const double lw = w.norm();
  if (lw == 0) return 0.0;
  w /= lw;
  const Vec rel = x - a;
  const double px = rel.dot(u);
  const double py = rel.dot(w);
  double off = (rel - px * u - py * w).norm();
  const double size = std::max(l1, e2.norm());
  if (off <= snap * size) off = 0.0;
  if (off >= r) return 0.0;
  const double rad = std::sqrt((r - off) * (r + off));
  return triangle_disk_area({0.0, 0.0}, {l1, 0.0}, {e2.dot(u), e2.dot(w)}, {px, py}, rad);
}

/// Distance between two triangles in R^n when they do not intersect; in R^3
/// intersection is detected and reported as 0.
inline double triangle_triangle_distance(const std::array<Vec, 3>& t1, const std::array<Vec, 3>& t2) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    best = std::min(best, point_triangle_distance(t1[i], t2[0], t2[1], t2[2]));
    best = std::min(best, point_triangle_distance(t2[i], t1[0], t1[1], t1[2]));
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      best = std::min(best, segment_segment_distance(t1[i], t1[(i + 1) % 3], t2[j], t2[(j + 1) % 3]));
    }
  }
  if (t1[0].size() == 3) {
    for (int i = 0; i < 3; ++i) {
      if (segment_triangle(t1[i], t1[(i + 1) % 3], t2[0], t2[1], t2[2], 0.0).hit) return 0.0;
      if (segment_triangle(t2[i], t2[(i + 1) % 3], t1[0], t1[1], t1[2], 0.0).hit) return 0.0;
    }
  }
  return best;
}

}  // namespace tpsurf::geom
