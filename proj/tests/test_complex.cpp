#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace tpsurf;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::invalid_argument;
}

// icosahedron with edge 2, as OBJ text
std::string icosahedron_obj() {
  const double p = (1 + std::sqrt(5.0)) / 2;
  std::ostringstream o;
  o.precision(17);
  const double v[12][3] = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                           {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  for (const auto& x : v) o << "v " << x[0] << ' ' << x[1] << ' ' << x[2] << "\n";
  const int f[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                        {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  o << "vn 0 0 1\n";
  for (const auto& t : f) o << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << "\n";
  return o.str();
}

SimplicialSet unit_square() {
  std::istringstream in("ndmesh 2 3\n# unit square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\ns 0 1 2\ns 0 2 3\n");
  return parse_ndmesh(in);
}

Mat random_rotation(std::mt19937_64& rng, int n) {
  Mat q = oracle::random_frame(rng, n, n);
  if (q.determinant() < 0) q.col(0) *= -1;
  return q;
}

}  // namespace

TEST(Load, ObjIcosahedron) {
  std::istringstream in(icosahedron_obj());
  std::vector<std::string> warn;
  const auto s = parse_obj(in, "ico.obj", &warn);
  EXPECT_EQ(s.vertex_count(), 12);
  EXPECT_EQ(s.simplex_count(), 20);
  EXPECT_NEAR(s.total_measure(), 5 * std::sqrt(3.0) * 4.0, 1e-12);
  EXPECT_FALSE(warn.empty());  // the vn record
}

TEST(Load, NdmeshUnitSquare) {
  const auto s = unit_square();
  EXPECT_EQ(s.intrinsic_dim(), 2);
  EXPECT_EQ(s.ambient_dim(), 3);
  EXPECT_NEAR(s.total_measure(), 1.0, 1e-15);
}

TEST(Load, CliffordTorusInFiveDimensions) {
  const auto t = shapes::clifford_torus(24, 24, 5);
  std::stringstream io;
  write_ndmesh(io, t);
  const auto s = parse_ndmesh(io);
  EXPECT_EQ(s.ambient_dim(), 5);
  for (int f = 0; f < s.simplex_count(); ++f) {
    const Mat& fr = s.plane(f).frame();
    EXPECT_LE((fr.transpose() * fr - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  }
  // flat torus area 4 pi^2 * (1/2), inscribed
  EXPECT_NEAR(s.total_measure(), 2 * oracle::pi * oracle::pi, 0.02 * 2 * oracle::pi * oracle::pi);
}

TEST(Load, ParseErrorsCarryLineNumbers) {
  std::istringstream bad("ndmesh 2 3\nv 0 0 0\nv 1 0 zero\n");
  try {
    parse_ndmesh(bad, "bad.ndmesh");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
  std::istringstream range("ndmesh 1 2\nv 0 0\nv 1 0\ns 0 2\n");
  EXPECT_NE(kind_of([&] { parse_ndmesh(range); }), ErrorKind::degenerate);
}

TEST(Load, DegenerateSimplicesRejected) {
  std::istringstream in("ndmesh 2 3\nv 0 0 0\nv 1 0 0\nv 2 0 0\nv 0 1 0\ns 0 1 2\ns 0 1 3\n");
  EXPECT_EQ(kind_of([&] { parse_ndmesh(in); }), ErrorKind::degenerate);
}

TEST(Load, RoundTripIsLossless) {
  const auto s = shapes::torus(1.0, 0.3, 12, 8);
  std::stringstream io;
  write_ndmesh(io, s);
  const auto t = parse_ndmesh(io);
  EXPECT_EQ(t.vertices(), s.vertices());
  EXPECT_EQ(t.simplices(), s.simplices());
}

TEST(Measure, GramDeterminantOracle) {
  const auto s = shapes::torus(1.0, 0.3, 20, 12);
  double sum = 0;
  for (int f = 0; f < s.simplex_count(); ++f) {
    const Vec a = s.vertex(s.simplices()(0, f));
    Mat e(3, 2);
    e.col(0) = s.vertex(s.simplices()(1, f)) - a;
    e.col(1) = s.vertex(s.simplices()(2, f)) - a;
    const double ref = oracle::simplex_measure(e);
    EXPECT_NEAR(s.measure(f), ref, 1e-10 * ref);
    sum += ref;
  }
  EXPECT_NEAR(s.total_measure(), sum, 1e-10 * sum);
}

TEST(Measure, ScalingAndRigidMotion) {
  std::mt19937_64 rng(11);
  const auto s = shapes::icosphere(2);
  const auto t = s.scaled(3.7);
  for (int f = 0; f < s.simplex_count(); ++f) EXPECT_NEAR(t.measure(f), 3.7 * 3.7 * s.measure(f), 1e-12 * t.measure(f));
  for (int k = 0; k < 10; ++k) {
    Vec shift = Vec::Random(3) * 10;
    const auto r = s.transformed(random_rotation(rng, 3), shift);
    EXPECT_NEAR(quadrature(r).total_weight(), s.total_measure(), 1e-9 * s.total_measure());
  }
}

TEST(Quadrature, CentroidSquare) {
  const auto c = quadrature(unit_square());
  ASSERT_EQ(c.size(), 2);
  EXPECT_DOUBLE_EQ(c.weight(0), 0.5);
  EXPECT_DOUBLE_EQ(c.weight(1), 0.5);
}

TEST(Quadrature, SimpsonSegment) {
  std::istringstream in("ndmesh 1 2\nv 0 0\nv 1 0\ns 0 1\n");
  const auto c = quadrature(parse_ndmesh(in), QuadratureOrder::bary3);
  ASSERT_EQ(c.size(), 3);
  EXPECT_NEAR(c.weight(0), 1.0 / 6, 1e-16);
  EXPECT_NEAR(c.weight(1), 4.0 / 6, 1e-16);
  EXPECT_NEAR(c.weight(2), 1.0 / 6, 1e-16);
}

TEST(Quadrature, Bary3IcosahedronConservesWeight) {
  std::istringstream in(icosahedron_obj());
  const auto s = parse_obj(in);
  const auto c = quadrature(s, QuadratureOrder::bary3);
  EXPECT_EQ(c.size(), 60);
  EXPECT_NEAR(c.total_weight(), 20 * std::sqrt(3.0), 1e-12);
  for (int i = 0; i < c.size(); ++i) EXPECT_GT(c.weight(i), 0);
}

TEST(Quadrature, PlanesFollowTheRule) {
  const auto s = shapes::icosphere(2);
  const auto flat = quadrature(s);
  for (int i = 0; i < flat.size(); ++i) EXPECT_LT(angle(flat.plane(i), s.plane(flat.parent(i))), 1e-14);
  const auto smooth = quadrature(s, QuadratureOrder::centroid, PlaneRule::smoothed);
  double worst_flat = 0, worst_smooth = 0;
  for (int i = 0; i < smooth.size(); ++i) {
    // the exact tangent plane of the sphere at the radial direction
    const Vec nrm = smooth.position(i).normalized();
    Mat fr(3, 1);
    fr.col(0) = nrm;
    const Plane tan = Plane(fr).complement();
    worst_flat = std::max(worst_flat, angle(flat.plane(i), tan));
    worst_smooth = std::max(worst_smooth, angle(smooth.plane(i), tan));
  }
  EXPECT_LT(worst_smooth, 0.2);
  EXPECT_LT(worst_flat, 0.2);
}

TEST(Quadrature, Bary3RejectedAboveSurfaces) {
  // a tetrahedron as a 3-simplex in R^3
  Mat v(3, 4);
  v << 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
  Simplices sx(4, 1);
  sx << 0, 1, 2, 3;
  const SimplicialSet s(3, v, sx);
  EXPECT_EQ(kind_of([&] { quadrature(s, QuadratureOrder::bary3); }), ErrorKind::invalid_argument);
}

TEST(LocalMeasure, FlatDiskCenter) {
  const auto d = shapes::flat_disk(60, 1.0);
  ASSERT_GE(d.simplex_count(), 10000);
  EXPECT_NEAR(local_measure(d, Vec::Zero(3), 0.5), oracle::pi * 0.25, 0.02 * oracle::pi * 0.25);
}

TEST(LocalMeasure, SphereCapAndRefinement) {
  // spherical cap area of a ball of radius r centered on the unit sphere is pi r^2
  const double r = 0.3;
  double prev = std::numeric_limits<double>::infinity();
  for (int level = 2; level <= 5; ++level) {
    const auto s = shapes::icosphere(level);
    const auto c = quadrature(s);
    const Vec x = c.position(0).normalized();  // a point of the round sphere
    const double err = std::fabs(local_measure(s, x, r) / (oracle::pi * r * r) - 1);
    EXPECT_LT(err, prev) << "level " << level;
    prev = err;
    if (level == 5) EXPECT_LT(err, 0.02);
  }
}

TEST(LocalMeasure, LargeRadiusGivesTotal) {
  const auto s = shapes::torus(1.0, 0.4, 16, 8);
  EXPECT_NEAR(local_measure(s, Vec::Zero(3), 10.0), s.total_measure(), 1e-12 * s.total_measure());
  EXPECT_EQ(kind_of([&] { local_measure(s, Vec::Zero(3), 0.0); }), ErrorKind::invalid_argument);
}

TEST(LocalMeasure, SegmentsClipExactly) {
  const auto c = shapes::circle_polygon(400);
  // chord through the ball: arc length inside B(x, r) for x on the polygon
  const Vec x = c.vertex(0);
  const double r = 0.5;
  const double arc = 4 * std::asin(r / 2);
  EXPECT_NEAR(local_measure(c, x, r), arc, 1e-4);
}

TEST(LocalMeasure, AdditiveOverPartitions) {
  const auto s = shapes::icosphere(3);
  // split the simplices in two halves: measure of the whole equals the sum
  const int half = s.simplex_count() / 2;
  Simplices a = s.simplices().leftCols(half);
  Simplices b = s.simplices().rightCols(s.simplex_count() - half);
  const SimplicialSet sa(2, s.vertices(), a), sb(2, s.vertices(), b);
  std::mt19937_64 rng(12);
  for (int k = 0; k < 20; ++k) {
    const Vec x = Vec::Random(3);
    const double r = 0.2 + 0.5 * std::fabs(Vec::Random(1)(0));
    const double whole = local_measure(s, x, r);
    EXPECT_NEAR(whole, local_measure(sa, x, r) + local_measure(sb, x, r), 1e-10 * std::max(whole, 1e-12));
  }
}

TEST(Admissibility, FlatDiskInteriorIsPi) {
  const auto d = shapes::flat_disk(30, 1.0);
  const auto c = quadrature(d);
  // probes near the center only: restrict the cloud to the middle
  std::vector<int> mid;
  for (int i = 0; i < c.size(); ++i)
    if (c.position(i).norm() < 0.3) mid.push_back(i);
  const auto rep = check_admissibility(d, c.subset(mid), {0.1, 0.2}, 10);
  EXPECT_NEAR(rep.ahlfors_K, oracle::pi, 1e-9);
  EXPECT_LE(rep.ahlfors_K, unit_ball_volume(2) + 1e-12);
  for (const auto& [r, fl] : rep.delta_flatness) EXPECT_LT(fl, 1e-12);
}

TEST(Admissibility, SphereFlatnessGrowsLikeHalfRadius) {
  const auto s = shapes::icosphere(5);
  const auto c = quadrature(s);
  const auto rep = check_admissibility(s, c, {0.1, 0.2, 0.4}, 16);
  EXPECT_GT(rep.ahlfors_K, 0);
  EXPECT_LE(rep.ahlfors_K, unit_ball_volume(2) * 1.001);
  for (const auto& [r, fl] : rep.delta_flatness) EXPECT_NEAR(fl, r / 2, 0.2 * r / 2 + 0.02) << r;
}

TEST(Admissibility, CrossingSheetsAreFlagged) {
  // two unit squares, one horizontal and one vertical, crossing along the x axis
  Mat v(3, 8);
  v << -1, 1, 1, -1, -1, 1, 1, -1,  //
      -1, -1, 1, 1, 0, 0, 0, 0,      //
      0, 0, 0, 0, -1, -1, 1, 1;
  Simplices sx(3, 4);
  sx << 0, 0, 4, 4, 1, 2, 5, 6, 2, 3, 6, 7;
  const SimplicialSet s(2, v, sx);
  const auto c = quadrature(s, QuadratureOrder::bary3);
  const auto rep = check_admissibility(s, c, {0.9, 1.5}, c.size());
  EXPECT_GT(rep.delta_flatness.at(1.5), 0.5);
  bool flagged = false;
  for (const auto& vi : rep.violations) flagged = flagged || (vi.kind == "flatness");
  EXPECT_TRUE(flagged);
  EXPECT_EQ(kind_of([&] { check_admissibility(s, c, {100.0}, 3); }), ErrorKind::invalid_argument);
}
