#pragma once

#include "tpsurf/core.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tpsurf {

/// An m-dimensional linear subspace of R^n held as an orthonormal frame
/// (the n x m matrix whose columns are the basis vectors).
class Plane {
 public:
  Plane() = default;

  /// Takes ownership of an orthonormal frame; rejects frames whose Gram
  /// matrix differs from the identity by more than 1e-12 in any entry.
  explicit Plane(Mat frame) : frame_(std::move(frame)) {
    require(frame_.cols() >= 1 && frame_.cols() <= frame_.rows(), ErrorKind::invalid_argument,
            "plane dimension must satisfy 1 <= m <= n");
    const Mat gram = frame_.transpose() * frame_;
    const double dev = (gram - Mat::Identity(dim(), dim())).cwiseAbs().maxCoeff();
    require(dev <= 1e-12, ErrorKind::invalid_argument,
            "frame is not orthonormal (deviation " + std::to_string(dev) + ")");
  }

  /// Orthonormalizes the columns of `vectors`. Rank deficiency (relative to
  /// the largest column) raises rank_deficient.
  static Plane span(const Mat& vectors, double rank_tol = 1e-12) {
    require(vectors.cols() >= 1 && vectors.cols() <= vectors.rows(), ErrorKind::invalid_argument,
            "span needs 1 <= k <= n vectors");
    Eigen::ColPivHouseholderQR<Mat> qr(vectors);
    const double scale = vectors.colwise().norm().maxCoeff();
    require(scale > 0, ErrorKind::rank_deficient, "zero vectors span nothing");
    qr.setThreshold(rank_tol);
    require(qr.rank() == vectors.cols(), ErrorKind::rank_deficient,
            "vectors are numerically dependent");
    Mat q = qr.householderQ() * Mat::Identity(vectors.rows(), vectors.cols());
    return Plane(orthonormal_cleanup(std::move(q)));
  }

  /// The plane spanned by the listed coordinate axes.
  static Plane coordinate(int n, const std::vector<int>& axes) {
    Mat f = Mat::Zero(n, static_cast<Eigen::Index>(axes.size()));
    for (std::size_t j = 0; j < axes.size(); ++j) f(axes[j], static_cast<Eigen::Index>(j)) = 1.0;
    return Plane(std::move(f));
  }

  int ambient_dim() const { return static_cast<int>(frame_.rows()); }
  int dim() const { return static_cast<int>(frame_.cols()); }
  const Mat& frame() const { return frame_; }

  Mat projector() const { return frame_ * frame_.transpose(); }
  Vec project(const Vec& v) const { return frame_ * (frame_.transpose() * v); }
  /// Q_P(v): the component of v orthogonal to the plane.
  Vec reject(const Vec& v) const { return v - project(v); }
  double reject_norm(const Vec& v) const { return reject(v).norm(); }

  /// Orthonormal basis of the orthogonal complement (n x (n - m)).
  Mat complement_frame() const {
    const int n = ambient_dim();
    const int m = dim();
    if (n == m) return Mat(n, 0);
    Eigen::HouseholderQR<Mat> qr(frame_);
    Mat full = qr.householderQ() * Mat::Identity(n, n);
    return orthonormal_cleanup(full.rightCols(n - m));
  }

  Plane complement() const {
    require(dim() < ambient_dim(), ErrorKind::invalid_argument, "complement of the whole space");
    return Plane(complement_frame());
  }

 private:
  // One modified Gram-Schmidt sweep removes the ~1e-16 drift left by QR so
  // the 1e-12 frame invariant holds with margin.
  static Mat orthonormal_cleanup(Mat q) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      q.col(j).normalize();
    }
    return q;
  }

  Mat frame_;
};

/// ||pi_P1 - pi_P2||, the operator norm of the projector difference. For
/// equal dimensions this is the sine of the largest principal angle, which
/// we evaluate as the largest singular value of Q_P1 applied to P2's frame
/// (no cancellation at small angles).
inline double angle(const Plane& p1, const Plane& p2) {
  require(p1.ambient_dim() == p2.ambient_dim() && p1.dim() == p2.dim(),
          ErrorKind::invalid_argument, "angle needs planes of equal dimensions");
  if (p1.dim() == p1.ambient_dim()) return 0.0;
  const Mat& f1 = p1.frame();
  const Mat& f2 = p2.frame();
  const Mat resid = f2 - f1 * (f1.transpose() * f2);
  Eigen::JacobiSVD<Mat> svd(resid);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

/// Constants fixed by the angle lemmas; all depend on m alone except c5, which
/// also depends on q.
struct LemmaConstants {
  int m = 1;
  double q = 0;
  double eps1 = 0;
  double c1 = 0;
  double c2 = 0;
  double c3 = 0;
  double c4 = 0;
  double c5 = 0;
  double kappa = 0;
  double mu = 0;

  static LemmaConstants compute(int m, double q) {
    require(m >= 1, ErrorKind::invalid_argument, "m must be >= 1");
    LemmaConstants c;
    c.m = m;
    c.q = q;
    const double tm = std::pow(10.0, m);
    c.eps1 = 0.1 / (tm + 1.0);
    c.c1 = 2.0 * (tm + 1.0);
    c.c2 = 4.0 * m * (tm + 1.0);
    c.c3 = 14.0 * m * std::pow(20.0, m);
    c.c4 = 3.0 * (c.c3 + 1.0);
    const double om = unit_ball_volume(m);
    c.c5 = 16.0 * m * std::pow(9.0, q) / (om * om);
    c.kappa = (q - 2.0 * m) / (q + 4.0 * m);
    c.mu = 1.0 - 2.0 * m / q;
    return c;
  }

  /// Smallest phi satisfying the balance condition phi^(4m+q) r^(2m-q) >= c5 E.
  double balance_phi(double r, double energy) const {
    const double m2 = 2.0 * m;
    return std::exp((std::log(c5) + std::log(energy) + (q - m2) * std::log(r)) / (4.0 * m + q));
  }
};

/// log of an explicit upper bound on the number of operator-norm balls of
/// radius `radius` needed to cover G(n, m). Every m-plane is the graph over one
/// of the C(n, m) coordinate planes of a linear map whose matrix entries lie in
/// [-1, 1]; a grid on those entries with Frobenius cell radius <= `radius`
/// covers each chart because the graph map is 1-Lipschitz from the operator
/// norm of the matrix difference to the projector distance.
inline double log_grassmann_cover_size(int n, int m, double radius) {
  require(1 <= m && m <= n && radius > 0, ErrorKind::invalid_argument, "bad cover request");
  const int dim = m * (n - m);
  if (dim == 0) return 0.0;
  double log_charts = std::lgamma(n + 1.0) - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0);
  const double per_axis = std::ceil(std::sqrt(static_cast<double>(dim)) / radius) + 1.0;
  return log_charts + dim * std::log(per_axis);
}

// ---------------------------------------------------------------------------
// Perturbed Gram-Schmidt.

struct GramSchmidtStep {
  int k = 0;                   // 1-based, as in the estimates
  double v_minus_h = 0;        // |v_k - h_k|
  double v_norm_defect = 0;    // ||v_k| - 1|
  double v_minus_h_bound = 0;  // 10^k eps
  double v_norm_bound = 0;     // (10^k + 1) eps
  double u_minus_e = 0;        // |u_k - e_k|
  double u_minus_e_bound = 0;  // c1 eps
};

struct GramSchmidtResult {
  Plane plane;
  Mat orthogonal;  // the unnormalized v_k as columns
  std::vector<GramSchmidtStep> log;
  double angle = 0;
  double angle_bound = 0;  // c2 eps
};

/// Runs classical Gram-Schmidt on h (columns) next to the orthonormal frame of
/// `basis` and logs every quantity the perturbation estimates bound.
inline GramSchmidtResult gram_schmidt_perturbed(const Plane& basis, const Mat& h, double eps) {
  const int n = basis.ambient_dim();
  const int l = basis.dim();
  require(h.rows() == n && h.cols() == l, ErrorKind::invalid_argument,
          "perturbed vectors must match the basis shape");
  const auto c = LemmaConstants::compute(l, 2.0 * l + 1.0);
  require(eps > 0 && eps < c.eps1, ErrorKind::precondition,
          "eps must lie in (0, eps1) with eps1 = " + std::to_string(c.eps1));
  const Mat& e = basis.frame();
  for (int i = 0; i < l; ++i) {
    require((h.col(i) - e.col(i)).norm() < eps, ErrorKind::precondition,
            "perturbation |h_i - e_i| not below eps for i = " + std::to_string(i + 1));
  }

  GramSchmidtResult out;
  Mat v(n, l);
  Mat u(n, l);
  for (int k = 0; k < l; ++k) {
    Vec vk = h.col(k);
    for (int j = 0; j < k; ++j) {
      vk -= (h.col(k).dot(v.col(j)) / v.col(j).squaredNorm()) * v.col(j);
    }
    const double norm = vk.norm();
    require(norm > 1e-12 * std::max(1.0, h.col(k).norm()), ErrorKind::rank_deficient,
            "perturbed vectors are numerically dependent");
    v.col(k) = vk;
    u.col(k) = vk / norm;
    GramSchmidtStep s;
    s.k = k + 1;
    s.v_minus_h = (vk - h.col(k)).norm();
    s.v_norm_defect = std::fabs(norm - 1.0);
    s.v_minus_h_bound = std::pow(10.0, k + 1) * eps;
    s.v_norm_bound = (std::pow(10.0, k + 1) + 1.0) * eps;
    s.u_minus_e = (u.col(k) - e.col(k)).norm();
    s.u_minus_e_bound = c.c1 * eps;
    out.log.push_back(s);
  }
  out.orthogonal = v;
  out.plane = Plane::span(u);
  out.angle = angle(basis, out.plane);
  out.angle_bound = c.c2 * eps;
  return out;
}

/// Bound on the angle between two l-planes given orthonormal bases paired
/// column by column: 2 l max_j |e_j - f_j|.
inline double paired_bases_angle_bound(const Mat& e, const Mat& f) {
  require(e.rows() == f.rows() && e.cols() == f.cols(), ErrorKind::invalid_argument,
          "paired bases must have equal shapes");
  double worst = 0;
  for (Eigen::Index j = 0; j < e.cols(); ++j) worst = std::max(worst, (e.col(j) - f.col(j)).norm());
  return 2.0 * static_cast<double>(e.cols()) * worst;
}

/// The extremal sequence s_1 = 1, s_{k+1} = a k + b sum_{j<=k} s_j is compared
/// with A^k for k = 1..max_k (in log form). Returns the first k where
/// s_k >= A^k, or nullopt.
inline std::optional<int> power_bound_violation(double a, double b, double big_a, int max_k) {
  require(a > 0 && b > 0 && big_a > 1, ErrorKind::invalid_argument, "need a, b > 0 and A > 1");
  double s = 1.0;
  double partial = 0.0;
  for (int k = 1; k <= max_k; ++k) {
    if (std::log(s) >= k * std::log(big_a)) return k;
    partial += s;
    s = a * k + b * partial;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Slabs and the projected intersection of two slabs.

struct Slab {
  Plane plane;
  double half_width = 1.0;

  Slab(Plane p, double w) : plane(std::move(p)), half_width(w) {
    require(w >= 0, ErrorKind::invalid_argument, "slab half-width must be nonnegative");
  }
  bool contains(const Vec& y) const { return plane.reject_norm(y) <= half_width; }
};

namespace detail {

/// min |A c + b| over |c| <= 1 (ball-constrained least squares). The
/// eigensystem of A^T A only depends on A, so it is kept between calls.
class BallResidual {
 public:
  explicit BallResidual(const Mat& a) : a_(a) {
    if (a.cols() == 0) return;
    Eigen::SelfAdjointEigenSolver<Mat> eig(a.transpose() * a);
    s2_ = eig.eigenvalues();
    at_v_ = (a * eig.eigenvectors()).transpose();  // V^T A^T
    v_ = eig.eigenvectors();
    tiny_ = 1e-14 * std::max(1.0, s2_.maxCoeff());
  }

  double operator()(const Vec& b) const {
    if (a_.cols() == 0) return b.norm();
    const Vec g = at_v_ * b;
    // Newton on 1/|c(mu)| - 1, concave and increasing in mu, so the iterates
    // climb monotonically from mu = 0
    double mu = 0.0;
    for (int it = 0; it < 100; ++it) {
      double sq = 0;
      double cube = 0;
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double den = s2_(i) + mu;
        if (den <= tiny_) continue;
        const double c = g(i) / den;
        sq += c * c;
        cube += c * c / den;
      }
      const double norm = std::sqrt(sq);
      if (norm <= 1.0 + 1e-15 || cube == 0) break;
      const double step = (1.0 / norm - 1.0) / (cube / (sq * norm));
      if (!(step < 0)) break;
      mu -= step;
    }
    Vec coef(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double den = s2_(i) + mu;
      coef(i) = den > tiny_ ? -g(i) / den : 0.0;
    }
    return (a_ * (v_ * coef) + b).norm();
  }

 private:
  Mat a_;
  Mat v_;
  Mat at_v_;
  Vec s2_;
  double tiny_ = 0;
};


}  // namespace detail

/// Membership oracle for pi_H1(S(H1, H2)), where S is the intersection of the
/// unit slabs around H1 and H2. `coords` are coordinates in H1's frame.
class ProjectedSlab {
 public:
  ProjectedSlab(const Plane& h1, const Plane& h2) : h1_(h1), h2_(h2) {
    require(h1.ambient_dim() == h2.ambient_dim() && h1.dim() == h2.dim(),
            ErrorKind::invalid_argument, "slab planes must have equal dimensions");
    normal1_ = h1.complement_frame();
    q2_ = Mat::Identity(h1.ambient_dim(), h1.ambient_dim()) - h2.projector();
    a_ = q2_ * normal1_;
    residual_ = std::make_shared<const detail::BallResidual>(a_);
  }

  bool contains(const Vec& coords) const {
    const Vec b = q2_ * (h1_.frame() * coords);
    if (b.norm() <= 1.0 + 1e-12) return true;  // c = 0 already works
    return (*residual_)(b) <= 1.0 + 1e-12;
  }

  /// Exit time along the unit direction `dir` (H1 coordinates); +inf when the
  /// ray never leaves (directions inside H1 ∩ H2).
  double exit_time(const Vec& dir, double cap) const {
    double lo = 1.0;
    double hi = 2.0;
    while (contains(hi * dir)) {
      lo = hi;
      hi *= 2.0;
      if (hi > cap) return std::numeric_limits<double>::infinity();
    }
    for (int it = 0; it < 80 && (hi - lo) > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (contains(mid * dir)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  }

  const Plane& h1() const { return h1_; }
  const Mat& normal1() const { return normal1_; }
  const Mat& q2() const { return q2_; }

 private:
  Plane h1_;
  Plane h2_;
  Mat normal1_;
  Mat q2_;
  Mat a_;
  std::shared_ptr<const detail::BallResidual> residual_;
};

struct StripResult {
  Mat strip_frame;          // n x (m-1): the subspace W inside H1
  Vec normal_direction;     // w0 in ambient coordinates, unit, in H1, orthogonal to W
  double width = 0;         // inf g = g(w0)
  double sampled_max = 0;   // max over sampled points of S of dist(pi_H1 y, W)
  double certified = 0;     // max(width, sampled_max)
  double bound = 0;         // 5 c2 / alpha
  double alpha = 0;
  std::size_t samples_in_slab = 0;
  std::vector<std::string> notes;
};

struct StripOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int direction_samples = 64;
};

/// Narrowest strip around an (m-1)-subspace W of H1 containing
/// pi_H1(S(H1, H2)): minimizes the exit time over unit directions of H1,
/// then checks containment on a jittered grid of points of S.
inline StripResult slab_strip_width(const Plane& h1, const Plane& h2, const StripOptions& opt = {}) {
  const int n = h1.ambient_dim();
  const int m = h1.dim();
  require(m < n, ErrorKind::precondition, "slab geometry needs m < n");
  const auto c = LemmaConstants::compute(m, 2.0 * m + 1.0);
  const double alpha = angle(h1, h2);
  require(alpha > 1e-14 && alpha < c.eps1, ErrorKind::precondition,
          "need 0 < angle(H1, H2) < eps1; got " + std::to_string(alpha));
  ProjectedSlab ps(h1, h2);
  const double bound = 5.0 * c.c2 / alpha;
  const double cap = 1e3 * bound;

  StripResult out;
  out.alpha = alpha;
  out.bound = bound;

  auto g = [&](const Vec& dir) { return ps.exit_time(dir, cap); };
  Vec best_dir(m);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, Vec>> sampled;

  if (m == 1) {
    best_dir << 1.0;
    best = g(best_dir);
  } else if (m == 2) {
    auto dir_at = [](double phi) {
      Vec d(2);
      d << std::cos(phi), std::sin(phi);
      return d;
    };
    const int k = std::max(8, opt.direction_samples);
    double best_phi = 0;
    for (int i = 0; i < k; ++i) {
      const double phi = std::numbers::pi * i / k;
      const double val = g(dir_at(phi));
      sampled.emplace_back(val, dir_at(phi));
      if (val < best) {
        best = val;
        best_phi = phi;
      }
    }
    // golden-section refinement on the bracketing interval
    double lo = best_phi - std::numbers::pi / k;
    double hi = best_phi + std::numbers::pi / k;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = g(dir_at(x1));
    double f2 = g(dir_at(x2));
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = g(dir_at(x1));
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = g(dir_at(x2));
      }
    }
    const double phi = 0.5 * (lo + hi);
    const double val = g(dir_at(phi));
    if (val < best) {
      best = val;
      best_phi = phi;
    }
    best_dir = dir_at(best_phi);
  } else {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd;
    const int k = std::max(64, opt.direction_samples * m);
    for (int i = 0; i < k; ++i) {
      Vec d(m);
      for (int j = 0; j < m; ++j) d(j) = nd(rng);
      d.normalize();
      const double val = g(d);
      sampled.emplace_back(val, d);
      if (val < best) {
        best = val;
        best_dir = d;
      }
    }
    // golden-section along great circles through the incumbent
    for (int sweep = 0; sweep < 3; ++sweep) {
      for (int axis = 0; axis < m; ++axis) {
        Vec t = Vec::Zero(m);
        t(axis) = 1.0;
        t -= t.dot(best_dir) * best_dir;
        if (t.norm() < 1e-8) continue;
        t.normalize();
        auto along = [&](double s) { return Vec(std::cos(s) * best_dir + std::sin(s) * t); };
        double lo = -0.3;
        double hi = 0.3;
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int it = 0; it < 60; ++it) {
          const double x1 = hi - gr * (hi - lo);
          const double x2 = lo + gr * (hi - lo);
          if (g(along(x1)) < g(along(x2))) {
            hi = x2;
          } else {
            lo = x1;
          }
        }
        const Vec cand = along(0.5 * (lo + hi));
        const double val = g(cand);
        if (val < best) {
          best = val;
          best_dir = cand;
        }
      }
    }
  }

  for (const auto& [val, d] : sampled) {
    const double sep = std::min((d - best_dir).norm(), (d + best_dir).norm());
    if (sep > 1e-3 && std::fabs(val - best) <= 1e-9 * best) {
      out.notes.push_back("exit-time minimizer is not unique; first minimizer returned");
      break;
    }
  }

  out.width = best;
  out.normal_direction = h1.frame() * best_dir;
  // W = orthogonal complement of w0 inside H1.
  {
    Mat coords(m, m);
    coords.col(0) = best_dir;
    Eigen::HouseholderQR<Mat> qr(coords.leftCols(1));
    Mat full = qr.householderQ() * Mat::Identity(m, m);
    out.strip_frame = h1.frame() * full.rightCols(m - 1);
  }

  // Jittered grid over (a in H1 coords, u in unit ball of H1-perp), kept inside
  // B(0, 10/alpha); accept points of S.
  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = 10.0 / alpha;
  const int per_axis =
      std::max(2, static_cast<int>(std::floor(std::pow(static_cast<double>(opt.samples), 1.0 / n))));
  const Mat& f1 = h1.frame();
  const Mat& nf = ps.normal1();
  std::vector<int> idx(n, 0);
  double sampled_max = 0;
  std::size_t hits = 0;
  const std::size_t total = static_cast<std::size_t>(std::pow(per_axis, n));
  Vec a(m);
  Vec u(n - m);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int d = 0; d < n; ++d) {
      idx[d] = static_cast<int>(rem % per_axis);
      rem /= per_axis;
    }
    for (int d = 0; d < m; ++d) a(d) = -radius + 2.0 * radius * (idx[d] + unit(rng)) / per_axis;
    for (int d = 0; d < n - m; ++d) u(d) = -1.0 + 2.0 * (idx[m + d] + unit(rng)) / per_axis;
    if (u.norm() > 1.0 || a.norm() > radius) continue;
    const Vec y = f1 * a + nf * u;
    if ((ps.q2() * y).norm() > 1.0) continue;
    ++hits;
    sampled_max = std::max(sampled_max, std::fabs(a.dot(best_dir)));
  }
  out.sampled_max = sampled_max;
  out.samples_in_slab = hits;
  out.certified = std::max(out.width, sampled_max);
  return out;
}

/// Grid estimate of H^m(pi_H1(S(H1,H2)) ∩ B(a, s)) for a point a of H1 given
/// in H1 coordinates.
inline double projected_slab_ball_measure(const Plane& h1, const Plane& h2, const Vec& center,
                                          double s, int grid = 64) {
  require(s > 0 && grid >= 2, ErrorKind::invalid_argument, "bad measure request");
  ProjectedSlab ps(h1, h2);
  const int m = h1.dim();
  const double cell = 2.0 * s / grid;
  std::size_t total = 1;
  for (int d = 0; d < m; ++d) total *= static_cast<std::size_t>(grid);
  std::size_t count = 0;
  Vec p(m);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int d = 0; d < m; ++d) {
      p(d) = center(d) - s + cell * (static_cast<double>(rem % grid) + 0.5);
      rem /= grid;
    }
    if ((p - center).norm() > s) continue;
    if (ps.contains(p)) ++count;
  }
  return static_cast<double>(count) * std::pow(cell, m);
}

struct ProjectedMeasure {
  double ratio = 0;
  double lower_bound = 0;  // 1 - m eps 2^m with eps = angle
  double angle = 0;
};

/// H^m(pi_H1(cube in H2)) / H^m(cube) through the Gram determinant of the
/// projected orthonormal basis of H2.
inline ProjectedMeasure projected_measure_ratio(const Plane& h1, const Plane& h2, double cube_side = 1.0) {
  require(cube_side > 0, ErrorKind::invalid_argument, "cube side must be positive");
  const int m = h1.dim();
  const double eps = angle(h1, h2);
  const double limit = 1.0 / (m * std::pow(2.0, m));
  require(eps < limit, ErrorKind::precondition,
          "angle " + std::to_string(eps) + " not below 1/(m 2^m) = " + std::to_string(limit));
  const Mat projected = cube_side * (h1.frame().transpose() * h2.frame());
  ProjectedMeasure out;
  out.ratio = std::fabs(projected.determinant()) / std::pow(cube_side, m);
  out.angle = eps;
  out.lower_bound = 1.0 - m * eps * std::pow(2.0, m);
  return out;
}

}  // namespace tpsurf
