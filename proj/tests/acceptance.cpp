// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace tpsurf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double exact_energy(const SimplicialSet& s, double q) {
  EnergyOptions eo;
  eo.q = q;
  return energy(quadrature(s), eo).total_energy;
}

std::vector<int> spread(int count, int total) {
  std::vector<int> out;
  for (int k = 0; k < count; ++k) out.push_back(static_cast<int>(static_cast<long long>(k) * total / count));
  return out;
}

double sphere5_energy = -1;  // shared by criteria 2 and 5

// ---------------------------------------------------------------------------

Outcome c1_circle() {
  Outcome o;
  const double exact = oracle::circle_energy(1.0, 4.0);
  double prev = std::numeric_limits<double>::infinity();
  for (int k : {128, 256, 512}) {
    const double e = exact_energy(shapes::circle_polygon(k), 4.0);
    const double err = std::fabs(e / exact - 1);
    o.detail += fmt("k=%d rel %.3e; ", k, err);
    o.pass = o.pass && err < prev;
    prev = err;
  }
  o.pass = o.pass && prev < 0.01;
  return o;
}

Outcome c2_sphere() {
  const auto t0 = std::chrono::steady_clock::now();
  sphere5_energy = exact_energy(shapes::icosphere(5), 6.0);
  const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double exact = oracle::sphere_energy(1.0, 6.0);
  const double err = sphere5_energy / exact - 1;
  return {std::fabs(err) < 0.02, fmt("level 5: E = %.6f vs %.6f, rel %+.3e, %.1fs", sphere5_energy, exact, err, el)};
}

Outcome c3_scaling() {
  Outcome o;
  struct Case {
    SimplicialSet s;
    double q;
  };
  std::vector<Case> cases{{shapes::circle_polygon(64, 1.0, 3), 4.0},
                          {shapes::icosphere(2), 6.0},
                          {shapes::icosphere(2), 4.0},
                          {shapes::circle_polygon(64, 1.0, 3), 2.0}};
  const std::vector<double> lambdas{0.25, 0.5, 1.0, 2.0, 4.0};
  for (const auto& c : cases) {
    const int m = c.s.intrinsic_dim();
    const auto fit = scaling_check(quadrature(c.s), c.q, lambdas, 1);
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < fit.lambdas.size(); ++i) {
      lx.push_back(std::log(fit.lambdas[i]));
      ly.push_back(std::log(fit.energies[i]));
    }
    const double slope = oracle::ls_slope(lx, ly);
    const double want = 2.0 * m - c.q;
    const bool ok = std::fabs(slope - want) <= 1e-9 && std::fabs(fit.slope - want) <= 1e-9;
    o.pass = o.pass && ok;
    o.detail += fmt("(m=%d,q=%g) slope %+.12f; ", m, c.q, slope);
  }
  return o;
}

Outcome c4_ahlfors() {
  Outcome o;
  struct Case {
    const char* name;
    SimplicialSet s;
    bool expect_witnesses;
  };
  std::vector<Case> cases{{"sphere", shapes::icosphere(3), false},
                          {"torus", shapes::torus(1.0, 0.4, 64, 32), false},
                          {"thin-finger", shapes::thin_finger(0.01, 0.5, 0.05, 96), true}};
  for (const auto& c : cases) {
    const auto cloud = quadrature(c.s);
    const double E = energy(cloud, EnergyOptions{}).total_energy;
    const auto cfg = RegularityConfig::make(3, 2, 6.0);
    const double R1 = cfg.R1(E);
    std::vector<Vec> centers;
    for (int i : spread(24, cloud.size())) centers.push_back(cloud.position(i));
    if (c.expect_witnesses) {
      // centers along the tube as well
      for (int i = 0; i < cloud.size(); ++i)
        if (cloud.position(i)(2) > 1.2 && i % 7 == 0) centers.push_back(cloud.position(i));
    }
    std::vector<double> radii{R1, 0.5 * R1, 1e-3 * R1, 0.02, 0.05, 0.1, 0.2, 0.4};
    const auto curve = ahlfors_curve(c.s, centers, radii, R1, 1);
    int bad = 0;
    for (const auto& a : curve.samples) bad += (a.witness && a.r <= 1.05 * R1) ? 1 : 0;
    o.pass = o.pass && bad == 0 && (!c.expect_witnesses || curve.witnesses > 0);
    o.detail += fmt("%s: E=%.4g R1=%.3g min ratio(<=R1)=%.3f witnesses %d (<=R1: %d, smallest r %.3g); ", c.name, E, R1,
                    curve.min_ratio_within_R1, curve.witnesses, bad, curve.smallest_witness_radius);
  }
  return o;
}

Outcome c5_beta() {
  Outcome o;
  auto radii = [](double lo, double hi) {
    std::vector<double> r;
    for (int k = 0; k < 6; ++k) r.push_back(lo * std::pow(hi / lo, k / 5.0));
    return r;
  };
  const auto sphere = quadrature(shapes::icosphere(5));
  if (sphere5_energy < 0) sphere5_energy = energy(sphere, EnergyOptions{}).total_energy;
  const auto fs_ = beta_decay_fit(sphere, spread(8, sphere.size()), radii(0.12, 1.2), 6.0, sphere5_energy, {}, 1);
  const auto capsule = shapes::capped_cylinder(0.5, 1.0, 0.04, 80);
  const auto cc = quadrature(capsule);
  const double Ec = energy(cc, EnergyOptions{}).total_energy;
  const auto fc = beta_decay_fit(cc, spread(8, cc.size()), radii(0.1, 1.0), 6.0, Ec, {}, 1);
  const double kappa = LemmaConstants::compute(2, 6.0).kappa;
  o.pass = std::fabs(fs_.slope - 1.0) <= 0.1 && fc.slope >= 2 * kappa;
  o.detail = fmt("sphere slope %.4f (r2 %.4f); capped cylinder slope %.4f vs 2 kappa = %.3f", fs_.slope, fs_.r_squared, fc.slope,
                 2 * kappa);
  return o;
}

Outcome c6_holder() {
  Outcome o;
  const double mu = LemmaConstants::compute(2, 6.0).mu;
  const auto sphere = quadrature(shapes::icosphere(4));
  std::vector<GraphPatch> sp;
  for (int i : spread(4, sphere.size())) sp.push_back({sphere.position(i), 0.5, std::nullopt});
  const auto hs = holder_fit(sphere, sp, 6.0, 1);
  o.pass = !hs.fit.flat_input && hs.fit.slope >= mu;
  o.detail = fmt("sphere mu_hat %.4f >= %.4f; ", hs.fit.slope, mu);
  // Lipschitz ratio on the capsule at two resolutions; it must stay put
  std::vector<double> ratios;
  for (double h : {0.08, 0.04}) {
    const auto cap = shapes::capped_cylinder(0.5, 1.0, h, static_cast<int>(3.2 / h));
    const auto cloud = quadrature(cap);
    std::vector<GraphPatch> patches;
    for (double z : {0.0, 0.9, 1.0, 1.2}) {
      Vec c(3);
      c << 0.5, 0.0, z;
      if (z > 1.0) c << 0.5 * std::cos(0.6), 0.0, 1.0 + 0.5 * std::sin(0.6);
      patches.push_back({c, 0.3, std::nullopt});
    }
    const auto hf = holder_fit(cloud, patches, 6.0, 1);
    int rejected = 0;
    for (const auto& p : hf.patches) rejected += p.rejected;
    ratios.push_back(hf.lipschitz_ratio);
    o.detail += fmt("capsule h=%.2f lipschitz ratio %.4f (rejected %d); ", h, hf.lipschitz_ratio, rejected);
    o.pass = o.pass && rejected == 0 && std::isfinite(hf.lipschitz_ratio) && hf.lipschitz_ratio > 0;
  }
  o.pass = o.pass && ratios[1] <= 1.5 * ratios[0];
  return o;
}

Outcome c7_cone() {
  Outcome o;
  for (double q : {4.0, 5.0}) {
    std::vector<double> e;
    for (int level = 0; level <= 4; ++level) e.push_back(exact_energy(shapes::cone(level, 0.5, 1.0, 0.4, 8), q));
    const double growth = e.back() / e.front();
    o.pass = o.pass && growth >= 10;
    o.detail += fmt("cone q=%g: E0 %.4g E4 %.4g growth x%.2f, increments", q, e.front(), e.back(), growth);
    for (int k = 1; k <= 4; ++k) o.detail += fmt(" %.4g", e[k] - e[k - 1]);
    o.detail += "; ";
    const double c3 = exact_energy(shapes::cone(3, 0.5, 1.0, 0.4, 8, 0.1), q);
    const double c4 = exact_energy(shapes::cone(4, 0.5, 1.0, 0.4, 8, 0.1), q);
    const double change = std::fabs(c4 / c3 - 1);
    o.pass = o.pass && change < 0.01;
    o.detail += fmt("control q=%g: %.6g -> %.6g (%.2e); ", q, c3, c4, change);
  }
  return o;
}

Outcome c8_lemmas() {
  Outcome o;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0, 1);
  const int trials = 10000;
  auto pick_nm = [&](int max_m) {
    const int n = 2 + static_cast<int>(u(rng) * 4);  // 2..5
    const int m = 1 + static_cast<int>(u(rng) * std::min(max_m, n - 1));
    return std::pair{n, m};
  };
  // paired bases
  long v22 = 0;
  for (int t = 0; t < trials; ++t) {
    const auto [n, l] = pick_nm(4);
    const Mat e = oracle::random_frame(rng, n, l);
    const Mat f = oracle::tilt(rng, e, std::pow(10.0, -4 + 4 * u(rng)));
    double alpha = 0;
    for (int j = 0; j < l; ++j) alpha = std::max(alpha, (e.col(j) - f.col(j)).norm());
    if (oracle::plane_angle(e, f) > 2.0 * l * alpha * (1 + 1e-12) + 1e-15) ++v22;
  }
  // perturbed Gram-Schmidt
  long v23 = 0;
  for (int t = 0; t < trials; ++t) {
    const auto [n, l] = pick_nm(3);
    const Plane x(oracle::random_frame(rng, n, l));
    const double eps1 = LemmaConstants::compute(l, 2.0 * l + 1).eps1;
    const double eps = eps1 * (0.01 + 0.98 * u(rng));
    Mat h = x.frame();
    std::normal_distribution<double> g;
    for (int i = 0; i < l; ++i) {
      Vec d(n);
      for (int k = 0; k < n; ++k) d(k) = g(rng);
      h.col(i) += (0.999 * eps * std::pow(u(rng), 1.0 / n) / d.norm()) * d;
    }
    const auto res = gram_schmidt_perturbed(x, h, eps);
    for (const auto& s : res.log) {
      if (!(s.v_minus_h < s.v_minus_h_bound && s.v_norm_defect < s.v_norm_bound && s.v_norm_bound < 0.1 &&
            s.u_minus_e < s.u_minus_e_bound && s.u_minus_e_bound < 0.5))
        ++v23;
    }
    if (oracle::plane_angle(x.frame(), res.plane.frame()) > res.angle_bound) ++v23;
  }
  // strip in a ball
  long v27 = 0;
  for (int t = 0; t < trials; ++t) {
    const int n = 3;
    const int m = 1 + static_cast<int>(u(rng) * 2);
    const Mat f1 = oracle::random_frame(rng, n, m);
    const double eps1 = LemmaConstants::compute(m, 2.0 * m + 1).eps1;
    const double alpha = eps1 * (0.05 + 0.9 * u(rng));
    Mat f2 = oracle::tilt(rng, f1, alpha);
    const Plane h1(f1), h2(Plane::span(f2));
    const double a12 = angle(h1, h2);
    if (!(a12 > 0 && a12 < eps1)) continue;
    StripOptions so;
    so.samples = 2000;
    so.seed = t + 1;
    const auto strip = slab_strip_width(h1, h2, so);
    const double d = strip.certified;
    const double s = (0.5 + 10.0 * u(rng)) / a12;
    Vec a = Vec::Zero(m);
    for (int k = 0; k < m; ++k) a(k) = (u(rng) - 0.5) * s;
    const int grid = 64;
    const double meas = projected_slab_ball_measure(h1, h2, a, s, grid);
    const double cell = 2 * s / grid;
    const double bound = std::pow(2.0, m) * std::pow(s, m - 1) * d;
    const double tol = m == 1 ? 2 * cell : 2 * (4 * s + 4 * d) * cell;
    if (meas > bound + tol) ++v27;
  }
  // projected cube measure, checked against a shoelace / length oracle
  long v28 = 0;
  double worst_formula = 0;
  for (int t = 0; t < trials; ++t) {
    const int n = 2 + static_cast<int>(u(rng) * 4);
    const int m = 1 + static_cast<int>(u(rng) * std::min(2, n - 1));
    const double lim = 1.0 / (m * std::pow(2.0, m));
    const Mat f1 = oracle::random_frame(rng, n, m);
    const Mat f2 = oracle::tilt(rng, f1, 0.5 * lim * u(rng));
    const Plane h1(f1), h2(Plane::span(f2));
    const double eps = oracle::plane_angle(h1.frame(), h2.frame());
    if (eps >= lim) continue;
    const auto pm = projected_measure_ratio(h1, h2);
    const Mat c = h1.frame().transpose() * h2.frame();  // projected unit edges in H1 coordinates
    double ref = 0;
    if (m == 1) {
      ref = std::fabs(c(0, 0));
    } else {
      const Vec p0 = Vec::Zero(2), p1 = c.col(0), p2 = c.col(0) + c.col(1), p3 = c.col(1);
      const std::array<Vec, 4> poly{p0, p1, p2, p3};
      for (int i = 0; i < 4; ++i) ref += poly[i](0) * poly[(i + 1) % 4](1) - poly[(i + 1) % 4](0) * poly[i](1);
      ref = std::fabs(ref) / 2;
    }
    worst_formula = std::max(worst_formula, std::fabs(ref - pm.ratio));
    if (ref < 1 - m * eps * std::pow(2.0, m) - 1e-12 || std::fabs(ref - pm.ratio) > 1e-12) ++v28;
  }
  o.pass = v22 == 0 && v23 == 0 && v27 == 0 && v28 == 0;
  o.detail = fmt("violations over %d trials each: bases %ld, gram-schmidt %ld, strip-ball %ld, projected measure %ld (formula gap %.1e)",
                 trials, v22, v23, v27, v28, worst_formula);
  return o;
}

Outcome c9_good_couples() {
  Outcome o;
  const double gap = 0.2;
  const auto disks = shapes::parallel_disks(gap, 24, 1.0);
  const auto cloud = quadrature(disks);
  const auto cfg = RegularityConfig::make(3, 2, 6.0);
  long certified = 0, pairs = 0, viol = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (double r0 : {0.0, 0.3, 0.6}) {
    for (double shift : {0.0, 0.05, 0.15}) {
      Vec px(3), py(3);
      px << r0, 0, 0;
      py << r0 + shift, 0, gap;
      int ix = 0, iy = 0;
      for (int i = 0; i < cloud.size(); ++i) {
        if ((cloud.position(i) - px).norm() < (cloud.position(ix) - px).norm()) ix = i;
        if ((cloud.position(i) - py).norm() < (cloud.position(iy) - py).norm()) iy = i;
      }
      for (double alpha : {0.1, 0.25, 0.45}) {
        const auto cert = good_couple_search(cloud, cloud.position(ix), cloud.position(iy), cfg.lambda(), alpha);
        if (!cert) {
          o.pass = false;
          continue;
        }
        ++certified;
        const auto chk = check_couple_bound(cloud, *cert, 6.0);
        pairs += chk.pairs;
        viol += chk.violations;
        worst = std::min(worst, chk.min_ratio);
      }
    }
  }
  o.pass = o.pass && viol == 0 && pairs > 0;
  o.detail = fmt("%ld/27 certified, %ld (z,w) pairs, %ld violations, min ratio to alpha/(9d) %.3f", certified, pairs, viol, worst);
  return o;
}

Outcome c10_stopping() {
  Outcome o;
  struct Case {
    const char* name;
    SimplicialSet s;
  };
  std::vector<Case> cases{{"sphere", shapes::icosphere(3)},
                          {"torus", shapes::torus(1.0, 0.4, 48, 24)},
                          {"capsule", shapes::capped_cylinder(0.5, 1.0, 0.08, 40)},
                          {"two-spheres", shapes::two_spheres(0.2, 2)}};
  for (const auto& c : cases) {
    const auto cloud = quadrature(c.s);
    const auto cfg = RegularityConfig::make(3, 2, 6.0);
    const double R1 = cfg.R1(energy(cloud, EnergyOptions{}).total_energy);
    double dmin = std::numeric_limits<double>::infinity();
    bool ratios = true;
    for (int i : spread(8, cloud.size())) {
      const auto sd = stopping_distance(cloud, i, cfg);
      dmin = std::min(dmin, sd.d_s);
      for (std::size_t k = 1; k < sd.radii_history.size(); ++k) ratios = ratios && sd.radii_history[k] > 2 * sd.radii_history[k - 1];
    }
    o.pass = o.pass && ratios && dmin >= 0.95 * R1;
    o.detail += fmt("%s: min d_s %.4g vs R1 %.3g, ratios>2 %s; ", c.name, dmin, R1, ratios ? "yes" : "no");
  }
  return o;
}

Mat circle_points(int k, const Vec& c, const Vec& a, const Vec& b, double r) {
  Mat p(3, k);
  for (int i = 0; i < k; ++i) {
    const double t = 2 * oracle::pi * (i + 0.37) / k;
    p.col(i) = c + r * (std::cos(t) * a + std::sin(t) * b);
  }
  return p;
}

Outcome c11_linking() {
  Outcome o;
  Vec zero = Vec::Zero(3), e1(3), e2(3), e3(3), sh(3);
  e1 << 1, 0, 0;
  e2 << 0, 1, 0;
  e3 << 0, 0, 1;
  sh << 1, 0, 0;
  // curve A in the xy-plane through the origin; B in the xz-plane
  const auto a = oracle::polygon(circle_points(96, zero, e1, e2, 1.0));
  const int hopf = linking_mod2_polygon(a, circle_points(64, sh, e1, e3, 1.0)).parity;
  Vec far(3);
  far << 10, 0, 0;
  const int distant = linking_mod2_polygon(a, circle_points(64, far, e1, e3, 1.0)).parity;
  const auto sphere = shapes::icosphere(2);
  const auto cloud = quadrature(sphere);
  const Vec x = cloud.position(0);
  const SphereProbe zero_sphere(x, 0.3, Plane::span(Mat(x.normalized())));
  const int sph = linking_mod2(sphere, zero_sphere).parity;
  o.pass = hopf == 1 && distant == 0 && sph == 1;
  o.detail = fmt("hopf %d, distant %d, sphere/0-sphere %d; ", hopf, distant, sph);

  // far homotopies: random walks whose step never exceeds half the current distance
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  int changed = 0, paths = 0;
  const double diam = 3.0;
  for (int p = 0; p < 100; ++p) {
    const bool surf = p % 2 == 1;
    Vec offset = Vec::Zero(3);
    const int start = surf ? sph : hopf;
    for (int step = 0; step < 30; ++step) {
      Vec dir(3);
      dir << g(rng), g(rng), g(rng);
      dir.normalize();
      LinkResult r;
      if (surf) {
        r = linking_mod2(sphere, zero_sphere.shifted(offset));
      } else {
        Mat pts = circle_points(64, sh, e1, e3, 1.0);
        pts.colwise() += offset;
        r = linking_mod2_polygon(a, pts);
      }
      if (r.parity != start) ++changed;
      if (r.min_distance <= 1e-6 * diam) break;
      offset += 0.5 * r.min_distance * dir;
    }
    ++paths;
  }
  // refinement of the probe polygon
  int refine_bad = 0;
  for (int k : {16, 32, 64, 128}) {
    if (linking_mod2_polygon(a, circle_points(k, sh, e1, e3, 1.0)).parity != 1) ++refine_bad;
    if (linking_mod2_polygon(a, circle_points(k, far, e1, e3, 1.0)).parity != 0) ++refine_bad;
    const SphereProbe around(zero, 0.5, Plane::coordinate(3, {0, 2}), k);
    Mat ring = circle_points(96, e1 * 0.5, e1, e2, 0.2);  // threads the probe disk once
    if (linking_mod2(oracle::polygon(ring), around).parity != 1) ++refine_bad;
  }
  o.pass = o.pass && changed == 0 && refine_bad == 0;
  o.detail += fmt("%d paths with %d parity changes; refinement 16..128 mismatches %d", paths, changed, refine_bad);
  return o;
}

Outcome c12_gradient_flow() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int t = 0; t < 20; ++t) {
    SimplicialSet s;
    double q = 0;
    if (t % 3 == 0) {
      Mat p(2, 12 + t);
      for (int i = 0; i < p.cols(); ++i) {
        const double th = 2 * oracle::pi * i / p.cols();
        p.col(i) << (1 + 0.2 * u(rng)) * std::cos(th), (1 + 0.2 * u(rng)) * std::sin(th);
      }
      s = oracle::polygon(p);
      q = 3 + (t % 4);
    } else if (t % 3 == 1) {
      Mat p(3, 16);
      for (int i = 0; i < 16; ++i) {
        const double th = 2 * oracle::pi * i / 16;
        p.col(i) << std::cos(th) + 0.1 * u(rng), std::sin(th) + 0.1 * u(rng), 0.3 * std::sin(2 * th) + 0.1 * u(rng);
      }
      s = oracle::polygon(p);
      q = 4;
    } else {
      s = shapes::icosphere(1);  // 80 faces; 20-triangle samples below
      if (t % 2 == 0) s = shapes::flat_disk(2, 1.0);
      Mat v = s.vertices();
      for (int i = 0; i < v.cols(); ++i)
        for (int k = 0; k < 3; ++k) v(k, i) += 0.03 * u(rng);
      s = s.with_vertices(v);
      q = 6;
    }
    const auto cloud = quadrature(s);
    const Mat ga = gradient(s, cloud, q, GradientScheme::analytic);
    const Mat gc = gradient(s, cloud, q, GradientScheme::central_difference);
    const double scale = gc.cwiseAbs().maxCoeff();
    // componentwise, with a floor of 1e-3 of the largest entry for near-zero components
    for (Eigen::Index i = 0; i < ga.size(); ++i) {
      const double den = std::max(std::fabs(gc(i)), 1e-3 * scale);
      worst = std::max(worst, std::fabs(ga(i) - gc(i)) / den);
    }
  }
  o.pass = worst < 1e-5;
  o.detail = fmt("20 meshes, worst componentwise relative error %.2e; ", worst);

  // perturbed 128-gon, 5% radial noise
  std::mt19937_64 noise(3);
  std::uniform_real_distribution<double> nu(-0.05, 0.05);
  Mat p(2, 128);
  for (int i = 0; i < 128; ++i) {
    const double th = 2 * oracle::pi * i / 128;
    const double r = 1 + nu(noise);
    p.col(i) << r * std::cos(th), r * std::sin(th);
  }
  FlowPolicy pol;
  pol.audit_every = 0;
  const auto run = flow_run(oracle::polygon(p), 4.0, 500, pol);
  const double L = run.state.measure_target;
  const double target = oracle::circle_energy(L / (2 * oracle::pi), 4.0);
  const double gap = run.records.back().energy / target - 1;
  int first = -1;
  for (const auto& r : run.records)
    if (first < 0 && std::fabs(r.energy / target - 1) < 0.01) first = r.step;
  o.pass = o.pass && std::fabs(gap) < 0.01;
  o.detail += fmt("flow: E0/target %.1f, final gap %+.3e after %d steps (first within 1%% at step %d), status %s", run.records.front().energy / target,
                  gap, run.state.step, first, std::string(to_string(run.state.status)).c_str());
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome c13_determinism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / ("tpsurf_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = TPSURF_CLI_PATH;
  const fs::path mesh = dir / "s3.ndmesh";
  save(mesh.string(), shapes::icosphere(3));
  const std::vector<std::string> runs{"energy " + mesh.string() + " --q 6",
                                      "energy " + mesh.string() + " --q 6 --mode bvh --theta 0.4",
                                      "energy " + mesh.string() + " --q 6 --quadrature bary3",
                                      "verify " + mesh.string() + " --q 6 --probes 4"};
  int mismatches = 0, failures = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::string ref;
    for (int t : {1, 4, 8}) {
      const fs::path out = dir / ("r" + std::to_string(r) + "_t" + std::to_string(t) + ".json");
      const fs::path log = dir / ("r" + std::to_string(r) + "_t" + std::to_string(t) + ".txt");
      const std::string cmd = "\"" + cli + "\" " + runs[r] + " --deterministic --threads " + std::to_string(t) + " --out \"" +
                              out.string() + "\" > \"" + log.string() + "\" 2>&1";
      if (std::system(cmd.c_str()) != 0) ++failures;
      const std::string bytes = slurp(out) + slurp(log);
      if (t == 1) {
        ref = bytes;
      } else if (bytes != ref) {
        ++mismatches;
      }
    }
  }
  fs::remove_all(dir);
  o.pass = mismatches == 0 && failures == 0;
  o.detail = fmt("%zu commands x threads {1,4,8}: %d byte mismatches, %d nonzero exits", runs.size(), mismatches, failures);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"analytic circle energy", c1_circle},
      {"analytic sphere energy", c2_sphere},
      {"exact scaling law", c3_scaling},
      {"Ahlfors lower bound within R1", c4_ahlfors},
      {"beta decay", c5_beta},
      {"Hoelder exponent and Lipschitz ratio", c6_holder},
      {"cone divergence", c7_cone},
      {"Grassmannian lemma suites", c8_lemmas},
      {"good-couple energy bound", c9_good_couples},
      {"stopping distance", c10_stopping},
      {"linking parity", c11_linking},
      {"gradient check and flow", c12_gradient_flow},
      {"determinism across threads", c13_determinism},
  };
  // optional criterion numbers on the command line restrict the run
  std::vector<int> only;
  for (int a = 1; a < argc; ++a) only.push_back(std::atoi(argv[a]));
  int failed = 0;
  int ran = 0;
  int idx = 0;
  for (const auto& [name, fn] : criteria) {
    ++idx;
    if (!only.empty() && std::find(only.begin(), only.end(), idx) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", idx, name, o.detail.c_str(), el);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
