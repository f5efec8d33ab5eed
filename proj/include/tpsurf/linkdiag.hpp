#pragma once

#include "tpsurf/complex.hpp"
#include "tpsurf/geometry.hpp"
#include "tpsurf/parallel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace tpsurf {

/// Round (n-m-1)-sphere xi + {v in V : |v| = rho}, polygonalized. For
/// dim V = 2 it is a k-gon, for dim V = 1 the two points xi +- rho v.
struct SphereProbe {
  Vec center;
  double radius = 1;
  Plane normal;
  int polygon_k = 64;

  SphereProbe(Vec c, double r, Plane v, int k = 64) : center(std::move(c)), radius(r), normal(std::move(v)), polygon_k(k) {
    require(radius > 0, ErrorKind::invalid_argument, "probe radius must be positive");
    require(center.size() == normal.ambient_dim(), ErrorKind::invalid_argument, "probe center and plane disagree");
    require(normal.dim() <= 2, ErrorKind::unsupported, "probe spheres of dimension > 1 are not implemented");
    require(normal.dim() == 1 || polygon_k >= 3, ErrorKind::invalid_argument, "probe polygon needs k >= 3");
  }

  /// Vertex list (columns). Closed polygon for dim V = 2, point pair otherwise.
  Mat points() const {
    const Mat& f = normal.frame();
    if (normal.dim() == 1) {
      Mat p(center.size(), 2);
      p.col(0) = center + radius * f.col(0);
      p.col(1) = center - radius * f.col(0);
      return p;
    }
    Mat p(center.size(), polygon_k);
    for (int i = 0; i < polygon_k; ++i) {
      const double t = 2.0 * std::numbers::pi * i / polygon_k;
      p.col(i) = center + radius * (std::cos(t) * f.col(0) + std::sin(t) * f.col(1));
    }
    return p;
  }

  SphereProbe shifted(const Vec& d) const { return SphereProbe(center + d, radius, normal, polygon_k); }
};

struct LinkResult {
  int parity = 0;
  int crossings = 0;
  int retries = 0;
  double min_distance = 0;
};

namespace detail {

inline std::uint64_t probe_hash(const Mat& pts) {
  return fnv1a_doubles(pts.data(), static_cast<std::size_t>(pts.size()));
}

inline double joint_extent(const SimplicialSet& s, const Mat& pts) {
  Vec lo = s.vertices().rowwise().minCoeff();
  Vec hi = s.vertices().rowwise().maxCoeff();
  lo = lo.cwiseMin(pts.rowwise().minCoeff());
  hi = hi.cwiseMax(pts.rowwise().maxCoeff());
  return (hi - lo).norm();
}

// Distance from the mesh to a closed polygon (columns of pts, cyclic) or to a
// point pair.
inline double probe_distance(const SimplicialSet& s, const Mat& pts, bool closed_curve) {
  double best = std::numeric_limits<double>::infinity();
  const auto& sx = s.simplices();
  for (int f = 0; f < s.simplex_count(); ++f) {
    if (s.intrinsic_dim() == 1) {
      const Vec a = s.vertex(sx(0, f));
      const Vec b = s.vertex(sx(1, f));
      for (int i = 0; i < pts.cols(); ++i) {
        const int j = (i + 1) % pts.cols();
        best = std::min(best, geom::segment_segment_distance(a, b, pts.col(i), pts.col(j)));
      }
    } else {
      const Vec a = s.vertex(sx(0, f));
      const Vec b = s.vertex(sx(1, f));
      const Vec c = s.vertex(sx(2, f));
      if (closed_curve) {
        // not used: surfaces only meet point pairs
        continue;
      }
      for (int i = 0; i < pts.cols(); ++i) best = std::min(best, geom::point_triangle_distance(pts.col(i), a, b, c));
    }
  }
  return best;
}

// Parity of segment/triangle crossings between the segments `segs` (pairs of
// points) and triangles `tris`. Returns -1 if some test is near degenerate.
inline int crossing_count(const std::vector<std::pair<Vec, Vec>>& segs, const std::vector<std::array<Vec, 3>>& tris) {
  int count = 0;
  for (const auto& [p0, p1] : segs) {
    const Vec slo = p0.cwiseMin(p1);
    const Vec shi = p0.cwiseMax(p1);
    for (const auto& t : tris) {
      const Vec tlo = t[0].cwiseMin(t[1]).cwiseMin(t[2]);
      const Vec thi = t[0].cwiseMax(t[1]).cwiseMax(t[2]);
      const double pad = 1e-9 * ((shi - slo).norm() + (thi - tlo).norm());
      if (((slo.array() - pad) > thi.array()).any() || ((tlo.array() - pad) > shi.array()).any()) continue;
      const auto h = geom::segment_triangle(p0, p1, t[0], t[1], t[2], 1e-12);
      if (h.near_degenerate) return -1;
      if (h.hit) ++count;
    }
  }
  return count;
}

inline Vec jitter_direction(std::uint64_t seed, int attempt, int n) {
  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt + 1));
  std::normal_distribution<double> g;
  Vec d(n);
  for (int i = 0; i < n; ++i) d(i) = g(rng);
  return d.normalized();
}

// `build` counts crossings for a probe point set or returns -1 when near
// degenerate; the probe is then translated and recounted.
template <class Build>
LinkResult parity_with_jitter(const Mat& probe_pts, double rho, Build&& build) {
  LinkResult out;
  const std::uint64_t seed = probe_hash(probe_pts);
  for (int attempt = 0; attempt <= 8; ++attempt) {
    Mat pts = probe_pts;
    if (attempt > 0) {
      const Vec d = 1e-9 * rho * jitter_direction(seed, attempt, static_cast<int>(pts.rows()));
      pts.colwise() += d;
    }
    const int c = build(pts);
    if (c >= 0) {
      out.crossings = c;
      out.parity = c & 1;
      out.retries = attempt;
      return out;
    }
  }
  throw Error(ErrorKind::degenerate_configuration, "linking test stayed degenerate after 8 jittered retries");
}

inline std::vector<std::pair<Vec, Vec>> mesh_segments(const SimplicialSet& s) {
  std::vector<std::pair<Vec, Vec>> out;
  for (int f = 0; f < s.simplex_count(); ++f) out.emplace_back(s.vertex(s.simplices()(0, f)), s.vertex(s.simplices()(1, f)));
  return out;
}

inline std::vector<std::array<Vec, 3>> mesh_triangles(const SimplicialSet& s) {
  std::vector<std::array<Vec, 3>> out;
  const auto& sx = s.simplices();
  for (int f = 0; f < s.simplex_count(); ++f) out.push_back({s.vertex(sx(0, f)), s.vertex(sx(1, f)), s.vertex(sx(2, f))});
  return out;
}

// Fan from the vertex average; mod 2 its boundary is the polygon.
inline std::vector<std::array<Vec, 3>> fan(const Mat& poly) {
  const Vec c = poly.rowwise().mean();
  std::vector<std::array<Vec, 3>> out;
  const auto k = poly.cols();
  for (Eigen::Index i = 0; i < k; ++i) out.push_back({c, Vec(poly.col(i)), Vec(poly.col((i + 1) % k))});
  return out;
}

inline void require_supported(const SimplicialSet& s) {
  const int m = s.intrinsic_dim();
  const int n = s.ambient_dim();
  require(n == 3 && (m == 1 || m == 2), ErrorKind::unsupported,
          "linking is implemented for (m,n) = (1,3) and (2,3), got (" + std::to_string(m) + "," + std::to_string(n) + ")");
}

}  // namespace detail

/// Linking number mod 2 of a closed polygonal curve in R^3 with another
/// closed polygon (columns of `polygon`, cyclic). The polygon is spanned by a
/// fan and the curve's segments are counted through it.
inline LinkResult linking_mod2_polygon(const SimplicialSet& curve, const Mat& polygon, double scale_hint = 0) {
  require(curve.intrinsic_dim() == 1 && curve.ambient_dim() == 3, ErrorKind::unsupported,
          "polygon linking needs a curve in R^3");
  require(polygon.rows() == 3 && polygon.cols() >= 3, ErrorKind::invalid_argument, "polygon must have >= 3 points in R^3");
  const double diam = detail::joint_extent(curve, polygon);
  const double dist = detail::probe_distance(curve, polygon, true);
  require(dist > 1e-9 * diam, ErrorKind::precondition,
          "probe touches the set (distance " + std::to_string(dist) + ")");
  const auto segs = detail::mesh_segments(curve);
  const double rho = scale_hint > 0 ? scale_hint : diam;
  auto res = detail::parity_with_jitter(polygon, rho, [&](const Mat& pts) { return detail::crossing_count(segs, detail::fan(pts)); });
  res.min_distance = dist;
  return res;
}

/// Linking number mod 2 of a closed curve or closed surface in R^3 with a
/// round probe sphere of the complementary dimension.
inline LinkResult linking_mod2(const SimplicialSet& s, const SphereProbe& probe) {
  detail::require_supported(s);
  const int m = s.intrinsic_dim();
  require(probe.center.size() == 3 && probe.normal.dim() == 3 - m, ErrorKind::invalid_argument,
          "probe sphere must span an (n-m)-plane");
  const Mat pts = probe.points();
  if (m == 1) return linking_mod2_polygon(s, pts, probe.radius);
  const double diam = detail::joint_extent(s, pts);
  const double dist = detail::probe_distance(s, pts, false);
  require(dist > 1e-9 * diam, ErrorKind::precondition,
          "probe touches the set (distance " + std::to_string(dist) + ")");
  const auto tris = detail::mesh_triangles(s);
  auto res = detail::parity_with_jitter(pts, probe.radius, [&](const Mat& p) {
    return detail::crossing_count({{Vec(p.col(0)), Vec(p.col(1))}}, tris);
  });
  res.min_distance = dist;
  return res;
}

/// Whether the flat disk D(xi, rho; V) bounded by the probe meets the mesh.
/// Written independently of the crossing counter: signed distances to the
/// disk's hyperplane for curves, plane crossing plus a closest-point test for
/// surfaces.
inline bool disk_meets_set(const SimplicialSet& s, const SphereProbe& probe) {
  detail::require_supported(s);
  const auto& sx = s.simplices();
  const double tol = 1e-12 * std::max(1.0, probe.radius);
  if (s.intrinsic_dim() == 1) {
    const Vec nrm = probe.normal.complement_frame().col(0);
    for (int f = 0; f < s.simplex_count(); ++f) {
      const Vec a = s.vertex(sx(0, f));
      const Vec b = s.vertex(sx(1, f));
      const double da = nrm.dot(a - probe.center);
      const double db = nrm.dot(b - probe.center);
      if ((da > tol && db > tol) || (da < -tol && db < -tol)) continue;
      if (std::fabs(da - db) <= tol) {
        // segment inside the hyperplane
        if (geom::segment_segment_distance(a, b, probe.center, probe.center) <= probe.radius) return true;
        continue;
      }
      const Vec p = a + (da / (da - db)) * (b - a);
      if ((p - probe.center).norm() <= probe.radius * (1 + 1e-12)) return true;
    }
    return false;
  }
  const Vec v = probe.normal.frame().col(0);
  const Vec p0 = probe.center - probe.radius * v;
  const Vec p1 = probe.center + probe.radius * v;
  for (int f = 0; f < s.simplex_count(); ++f) {
    const Vec a = s.vertex(sx(0, f));
    const Vec b = s.vertex(sx(1, f));
    const Vec c = s.vertex(sx(2, f));
    const Eigen::Vector3d n3 = (b - a).head<3>().cross((c - a).head<3>());
    const Vec nrm = Vec(n3).normalized();
    const double d0 = nrm.dot(p0 - a);
    const double d1 = nrm.dot(p1 - a);
    if ((d0 > tol && d1 > tol) || (d0 < -tol && d1 < -tol)) continue;
    const Vec p = std::fabs(d0 - d1) <= tol ? Vec(p0) : Vec(p0 + (d0 / (d0 - d1)) * (p1 - p0));
    const double scale = (b - a).norm() + (c - a).norm();
    if (geom::point_triangle_distance(p, a, b, c) <= 1e-9 * scale) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// trapping boxes

enum class BoxShape { cylinder_ball, cylinder };

inline std::string_view to_string(BoxShape s) { return s == BoxShape::cylinder_ball ? "cylinder+half-ball" : "cylinder"; }

/// F = {y in B(x,r) : dist(y, x+H) <= theta r}, united with B(x, r/2) for the
/// cylinder_ball shape.
struct TrappingBox {
  Vec center;
  double radius = 1;
  Plane plane;
  double theta = 0.1;
  BoxShape shape = BoxShape::cylinder_ball;

  TrappingBox(Vec x, double r, Plane h, double th, BoxShape sh, double theta_cap)
      : center(std::move(x)), radius(r), plane(std::move(h)), theta(th), shape(sh) {
    require(radius > 0, ErrorKind::invalid_argument, "box radius must be positive");
    require(theta > 0 && theta <= theta_cap, ErrorKind::invalid_argument,
            "box theta must lie in (0, delta], delta = " + std::to_string(theta_cap));
    require(center.size() == plane.ambient_dim(), ErrorKind::invalid_argument, "box center and plane disagree");
  }

  bool in_ball(const Vec& y) const { return (y - center).norm() <= radius; }

  bool contains(const Vec& y) const {
    const Vec d = y - center;
    const double len = d.norm();
    if (len > radius) return false;
    if (shape == BoxShape::cylinder_ball && len <= 0.5 * radius) return true;
    return plane.reject_norm(d) <= theta * radius;
  }

  /// Admissible probe radii t for a grid point z (third condition of the box).
  std::pair<double, double> t_range(const Vec& z) const {
    const double dz = (z - center).norm();
    double lo = theta * radius;
    if (shape == BoxShape::cylinder_ball) lo = std::max(lo, std::sqrt(std::max(0.0, 0.25 * radius * radius - dz * dz)));
    const double hi = std::sqrt(std::max(0.0, radius * radius - dz * dz));
    return {lo, hi};
  }
};

struct BoxWitness {
  std::string kind;  // "containment" or "linking"
  Vec point;
  double value = 0;  // distance to x+H for containment, tried t count for linking
};

struct TrappingBoxReport {
  bool containment = true;
  bool linking_ok = true;
  bool linking_checked = false;
  int points_in_ball = 0;
  int grid_points = 0;
  int containment_failures = 0;
  int linking_failures = 0;
  std::vector<BoxWitness> witnesses;  // first 32 of each kind
};

struct TrappingBoxOptions {
  int probe_grid = 5;  // grid points per axis of H
  int t_tries = 5;
  int polygon_k = 32;
  int threads = 0;
  bool check_linking = true;
};

/// Containment of the set's points (cloud points and vertices) and linking of
/// the probe spheres S(z, t; H^perp) over a grid of z in x + H.
inline TrappingBoxReport check_trapping_box(const SimplicialSet& s, const QuadratureCloud& cloud, const TrappingBox& box,
                                            const TrappingBoxOptions& opt = {}) {
  require(opt.probe_grid >= 1, ErrorKind::invalid_argument, "probe grid must be >= 1");
  TrappingBoxReport rep;
  auto test_point = [&](const Vec& y) {
    if (!box.in_ball(y)) return;
    ++rep.points_in_ball;
    if (box.contains(y)) return;
    rep.containment = false;
    if (rep.containment_failures++ < 32) rep.witnesses.push_back({"containment", y, box.plane.reject_norm(y - box.center)});
  };
  for (int i = 0; i < cloud.size(); ++i) test_point(cloud.position(i));
  for (int v = 0; v < s.vertex_count(); ++v) test_point(s.vertex(v));

  const int m = s.intrinsic_dim();
  const bool supported = s.ambient_dim() == 3 && (m == 1 || m == 2);
  if (!opt.check_linking || !supported) return rep;
  rep.linking_checked = true;

  // grid over the m coordinates of H, kept strictly inside the admissible disk
  const double reach = std::sqrt(1.0 - box.theta * box.theta) * box.radius;
  std::vector<Vec> grid;
  const int g = opt.probe_grid;
  std::vector<int> idx(m, 0);
  while (true) {
    Vec coords(m);
    for (int a = 0; a < m; ++a) coords(a) = g == 1 ? 0.0 : reach * (-1.0 + 2.0 * idx[a] / (g - 1)) * 0.999;
    if (coords.norm() < reach) grid.push_back(box.center + box.plane.frame() * coords);
    int a = 0;
    while (a < m && ++idx[a] == g) idx[a++] = 0;
    if (a == m) break;
  }
  rep.grid_points = static_cast<int>(grid.size());
  const Plane perp = box.plane.complement();

  std::vector<char> ok(grid.size(), 0);
  parallel_chunks(grid.size(), resolve_threads(opt.threads), [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t k = b; k < e; ++k) {
      const auto [lo, hi] = box.t_range(grid[k]);
      if (!(hi > lo)) continue;
      for (int tt = 0; tt < opt.t_tries && !ok[k]; ++tt) {
        // midpoint first, then spread toward both ends
        const double frac = (tt == 0) ? 0.5 : (tt % 2 ? 0.5 - 0.4 * ((tt + 1) / 2) / ((opt.t_tries + 1) / 2)
                                                        : 0.5 + 0.4 * (tt / 2) / ((opt.t_tries + 1) / 2));
        const double t = lo + frac * (hi - lo);
        try {
          SphereProbe p(grid[k], t, perp, opt.polygon_k);
          if (linking_mod2(s, p).parity == 1) ok[k] = 1;
        } catch (const Error& err) {
          if (err.kind() != ErrorKind::precondition && err.kind() != ErrorKind::degenerate_configuration) throw;
        }
      }
    }
  });
  int witnessed = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (ok[k]) continue;
    rep.linking_ok = false;
    ++rep.linking_failures;
    if (witnessed++ < 32) rep.witnesses.push_back({"linking", grid[k], static_cast<double>(opt.t_tries)});
  }
  return rep;
}

}  // namespace tpsurf
