#pragma once

#include "tpsurf/complex.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

// Deterministic mesh generators for tests, the acceptance battery and the
// `generate` subcommand.

namespace tpsurf::shapes {

namespace detail {

struct Builder {
  int n = 3;
  std::vector<double> coords;
  std::vector<int> simp;

  int vertex(std::initializer_list<double> xs) {
    const int id = static_cast<int>(coords.size()) / n;
    int k = 0;
    for (double x : xs) {
      coords.push_back(x);
      ++k;
    }
    for (; k < n; ++k) coords.push_back(0.0);
    return id;
  }
  int vertex(const Vec& x) {
    const int id = static_cast<int>(coords.size()) / n;
    for (int k = 0; k < n; ++k) coords.push_back(k < x.size() ? x(k) : 0.0);
    return id;
  }
  void tri(int a, int b, int c) { simp.insert(simp.end(), {a, b, c}); }
  void seg(int a, int b) { simp.insert(simp.end(), {a, b}); }

  SimplicialSet build(int m) {
    const int nv = static_cast<int>(coords.size()) / n;
    Mat v = Eigen::Map<Mat>(coords.data(), n, nv);
    Simplices s = Eigen::Map<Simplices>(simp.data(), m + 1, static_cast<Eigen::Index>(simp.size()) / (m + 1));
    return SimplicialSet(m, std::move(v), std::move(s));
  }
};

// Stitches two closed rings whose vertices are listed by increasing angle in
// [a0, a0 + 2pi). Produces a closed triangle strip.
inline void stitch(Builder& b, const std::vector<int>& ra, const std::vector<double>& aa,
                   const std::vector<int>& rb, const std::vector<double>& ab) {
  const int na = static_cast<int>(ra.size());
  const int nb = static_cast<int>(rb.size());
  auto ang = [](const std::vector<double>& a, int i) {
    const int n = static_cast<int>(a.size());
    return a[i % n] + 2.0 * std::numbers::pi * (i / n);
  };
  int i = 0;
  int j = 0;
  while (i < na || j < nb) {
    const bool adv_a = j >= nb || (i < na && ang(aa, i + 1) <= ang(ab, j + 1));
    if (adv_a) {
      b.tri(ra[i % na], rb[j % nb], ra[(i + 1) % na]);
      ++i;
    } else {
      b.tri(ra[i % na], rb[j % nb], rb[(j + 1) % nb]);
      ++j;
    }
  }
}

}  // namespace detail

/// Regular k-gon of the given radius in the first two coordinates of R^n.
inline SimplicialSet circle_polygon(int k, double radius = 1.0, int n = 2, double phase = 0.0) {
  require(k >= 3 && n >= 2, ErrorKind::invalid_argument, "circle needs k >= 3 and n >= 2");
  detail::Builder b;
  b.n = n;
  for (int i = 0; i < k; ++i) {
    const double t = phase + 2.0 * std::numbers::pi * i / k;
    b.vertex({radius * std::cos(t), radius * std::sin(t)});
  }
  for (int i = 0; i < k; ++i) b.seg(i, (i + 1) % k);
  return b.build(1);
}

/// Closed polygon through explicit points (columns).
inline SimplicialSet closed_polygon(const Mat& points) {
  const int k = static_cast<int>(points.cols());
  require(k >= 3, ErrorKind::invalid_argument, "polygon needs 3 points");
  Simplices s(2, k);
  for (int i = 0; i < k; ++i) {
    s(0, i) = i;
    s(1, i) = (i + 1) % k;
  }
  return SimplicialSet(1, points, std::move(s));
}

/// Icosahedron subdivided `level` times (1-to-4), vertices pushed to the sphere.
inline SimplicialSet icosphere(int level, double radius = 1.0, const Vec& center = Vec()) {
  require(level >= 0, ErrorKind::invalid_argument, "level must be >= 0");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                                    {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> nf;
    nf.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      nf.push_back({tri[0], a, c});
      nf.push_back({tri[1], b, a});
      nf.push_back({tri[2], c, b});
      nf.push_back({a, b, c});
    }
    f = std::move(nf);
  }
  Mat vm(3, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    vm.col(static_cast<Eigen::Index>(i)) = radius * v[i];
    if (center.size() == 3) vm.col(static_cast<Eigen::Index>(i)) += center;
  }
  Simplices s(3, static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (int k = 0; k < 3; ++k) s(k, static_cast<Eigen::Index>(i)) = f[i][k];
  }
  return SimplicialSet(2, std::move(vm), std::move(s));
}

/// Flat disk of the given radius in the plane z = height (rings of 6i vertices).
inline SimplicialSet flat_disk(int rings, double radius = 1.0, double height = 0.0, int n = 3) {
  require(rings >= 1, ErrorKind::invalid_argument, "disk needs at least one ring");
  detail::Builder b;
  b.n = n;
  std::vector<int> prev{b.vertex({0.0, 0.0, height})};
  std::vector<double> prev_ang{0.0};
  for (int i = 1; i <= rings; ++i) {
    const int count = 6 * i;
    const double rad = radius * i / rings;
    std::vector<int> ring;
    std::vector<double> ang;
    for (int j = 0; j < count; ++j) {
      const double a = 2.0 * std::numbers::pi * j / count;
      ring.push_back(b.vertex({rad * std::cos(a), rad * std::sin(a), height}));
      ang.push_back(a);
    }
    if (i == 1) {
      for (int j = 0; j < count; ++j) b.tri(prev[0], ring[j], ring[(j + 1) % count]);
    } else {
      detail::stitch(b, prev, prev_ang, ring, ang);
    }
    prev = std::move(ring);
    prev_ang = std::move(ang);
  }
  return b.build(2);
}

/// Surface of revolution about the z-axis. `profile` lists (rho, z) from one
/// end to the other; ends with rho == 0 become poles.
inline SimplicialSet revolve(const std::vector<std::pair<double, double>>& profile, int segments) {
  require(profile.size() >= 3 && segments >= 3, ErrorKind::invalid_argument, "profile too short");
  detail::Builder b;
  std::vector<int> prev;
  std::vector<double> prev_ang;
  int pole_start = -1;
  for (std::size_t p = 0; p < profile.size(); ++p) {
    const auto [rho, z] = profile[p];
    if (rho <= 0.0) {
      const int pole = b.vertex({0.0, 0.0, z});
      if (prev.empty()) {
        pole_start = pole;
      } else {
        for (std::size_t j = 0; j < prev.size(); ++j) b.tri(prev[j], pole, prev[(j + 1) % prev.size()]);
        prev.clear();
      }
      continue;
    }
    std::vector<int> ring;
    std::vector<double> ang;
    const double offset = (p % 2) * std::numbers::pi / segments;
    for (int j = 0; j < segments; ++j) {
      const double a = offset + 2.0 * std::numbers::pi * j / segments;
      ring.push_back(b.vertex({rho * std::cos(a), rho * std::sin(a), z}));
      ang.push_back(a);
    }
    if (pole_start >= 0) {
      for (int j = 0; j < segments; ++j) b.tri(pole_start, ring[(j + 1) % segments], ring[j]);
      pole_start = -1;
    } else if (!prev.empty()) {
      detail::stitch(b, prev, prev_ang, ring, ang);
    }
    prev = std::move(ring);
    prev_ang = std::move(ang);
  }
  return b.build(2);
}

namespace detail {

// Appends points of an arc (center (0, zc), radius R) from angle a0 to a1,
// measured from the +rho axis, sampled at spacing about h; skips the start.
inline void arc(std::vector<std::pair<double, double>>& prof, double zc, double r, double a0, double a1, double h) {
  const int k = std::max(1, static_cast<int>(std::ceil(std::fabs(a1 - a0) * r / h)));
  for (int i = 1; i <= k; ++i) {
    const double a = a0 + (a1 - a0) * i / k;
    double rho = r * std::cos(a);
    if (std::fabs(rho) < 1e-14 * r) rho = 0.0;
    prof.emplace_back(rho, zc + r * std::sin(a));
  }
}

inline void line(std::vector<std::pair<double, double>>& prof, std::pair<double, double> to, double h) {
  const auto from = prof.back();
  const double len = std::hypot(to.first - from.first, to.second - from.second);
  const int k = std::max(1, static_cast<int>(std::ceil(len / h)));
  for (int i = 1; i <= k; ++i) {
    const double t = static_cast<double>(i) / k;
    prof.emplace_back(from.first + t * (to.first - from.first), from.second + t * (to.second - from.second));
  }
}

}  // namespace detail

/// Round cylinder of radius a over z in [-half_length, half_length] closed
/// with two hemispherical caps (a C^{1,1} surface). `h` is the profile spacing.
inline SimplicialSet capped_cylinder(double a, double half_length, double h, int segments) {
  std::vector<std::pair<double, double>> prof{{0.0, -half_length - a}};
  const double pi = std::numbers::pi;
  detail::arc(prof, -half_length, a, -pi / 2, 0.0, h);
  detail::line(prof, {a, half_length}, h);
  detail::arc(prof, half_length, a, 0.0, pi / 2, h);
  return revolve(prof, segments);
}

/// Torus with major radius R and minor radius r.
inline SimplicialSet torus(double big_r, double small_r, int nu, int nv) {
  detail::Builder b;
  for (int i = 0; i < nu; ++i) {
    const double u = 2.0 * std::numbers::pi * i / nu;
    for (int j = 0; j < nv; ++j) {
      const double v = 2.0 * std::numbers::pi * j / nv;
      const double rr = big_r + small_r * std::cos(v);
      b.vertex({rr * std::cos(u), rr * std::sin(u), small_r * std::sin(v)});
    }
  }
  auto id = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      b.tri(id(i, j), id(i + 1, j), id(i + 1, j + 1));
      b.tri(id(i, j), id(i + 1, j + 1), id(i, j + 1));
    }
  }
  return b.build(2);
}

/// Flat torus (cos u, sin u, cos v, sin v)/sqrt(2) in R^n, n >= 4.
inline SimplicialSet clifford_torus(int nu, int nv, int n = 4) {
  require(n >= 4, ErrorKind::invalid_argument, "Clifford torus needs n >= 4");
  detail::Builder b;
  b.n = n;
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < nu; ++i) {
    const double u = 2.0 * std::numbers::pi * i / nu;
    for (int j = 0; j < nv; ++j) {
      const double v = 2.0 * std::numbers::pi * j / nv;
      b.vertex({s * std::cos(u), s * std::sin(u), s * std::cos(v), s * std::sin(v)});
    }
  }
  auto id = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      b.tri(id(i, j), id(i + 1, j), id(i + 1, j + 1));
      b.tri(id(i, j), id(i + 1, j + 1), id(i, j + 1));
    }
  }
  return b.build(2);
}

/// Unit sphere with a thin tube (radius `tube`, length `length`) growing from
/// its north pole, closed by a small hemisphere. Deliberately violates the
/// density lower bound at radii above the tube radius.
inline SimplicialSet thin_finger(double tube, double length, double h, int segments) {
  const double pi = std::numbers::pi;
  std::vector<std::pair<double, double>> prof{{0.0, -1.0}};
  // the sphere reaches rho = tube at polar angle acos(tube)
  detail::arc(prof, 0.0, 1.0, -pi / 2, std::acos(tube), h);
  detail::line(prof, {tube, 1.0 + length}, std::min(h, 4.0 * tube));
  detail::arc(prof, 1.0 + length, tube, 0.0, pi / 2, tube / 2);
  return revolve(prof, segments);
}

/// Two flat disks of radius `radius` in the planes z = 0 and z = gap.
inline SimplicialSet parallel_disks(double gap, int rings, double radius = 1.0) {
  return SimplicialSet::merge(flat_disk(rings, radius, 0.0), flat_disk(rings, radius, gap));
}

/// Circle of radius r centered at c spanned by orthonormal u, w (k-gon).
inline SimplicialSet circle_in_space(int k, const Vec& c, const Vec& u, const Vec& w, double r = 1.0,
                                     double phase = 0.0) {
  Mat pts(c.size(), k);
  for (int i = 0; i < k; ++i) {
    const double t = phase + 2.0 * std::numbers::pi * i / k;
    pts.col(i) = c + r * (std::cos(t) * u + std::sin(t) * w);
  }
  return closed_polygon(pts);
}

/// Hopf link: unit circle in the xy-plane at the origin and unit circle in the
/// xz-plane centered at (shift, 0, 0). shift = 1 links them.
inline std::pair<SimplicialSet, SimplicialSet> circle_pair(int k, double shift) {
  const Vec o = Vec::Zero(3);
  Vec c = Vec::Zero(3);
  c(0) = shift;
  const Vec ex = Vec::Unit(3, 0);
  const Vec ey = Vec::Unit(3, 1);
  const Vec ez = Vec::Unit(3, 2);
  return {circle_in_space(k, o, ex, ey, 1.0, 0.5 * std::numbers::pi / k),
          circle_in_space(k, c, ex, ez, 1.0, 0.25 * std::numbers::pi / k)};
}

/// Two unit icospheres whose surfaces are `gap` apart along the x-axis.
inline SimplicialSet two_spheres(double gap, int level) {
  Vec c1 = Vec::Zero(3);
  Vec c2 = Vec::Zero(3);
  c2(0) = 2.0 + gap;
  return SimplicialSet::merge(icosphere(level, 1.0, c1), icosphere(level, 1.0, c2));
}

/// Cone of half-angle `alpha` with its apex at the origin, opening upward to
/// height `height`, closed by a tangent spherical cap. If `tip` > 0 the apex
/// is replaced by a tangent sphere of that radius (the smooth control).
/// Profile spacing h0 / 2^level, segments k0 * 2^level.
inline SimplicialSet cone(int level, double alpha, double height, double h0, int k0, double tip = 0.0) {
  const double pi = std::numbers::pi;
  const double h = h0 / std::pow(2.0, level);
  const int segments = k0 << level;
  const double ta = std::tan(alpha);
  std::vector<std::pair<double, double>> prof;
  if (tip > 0) {
    const double zc = tip / std::sin(alpha);
    prof.emplace_back(0.0, zc - tip);
    // tangent point lies at polar angle -alpha measured from +rho
    detail::arc(prof, zc, tip, -pi / 2, -alpha, h);
  } else {
    prof.emplace_back(0.0, 0.0);
  }
  detail::line(prof, {height * ta, height}, h);
  const double cap_r = height * ta / std::cos(alpha);
  const double cap_z = height + height * ta * ta;
  detail::arc(prof, cap_z, cap_r, -alpha, pi / 2, h);
  return revolve(prof, segments);
}

}  // namespace tpsurf::shapes
