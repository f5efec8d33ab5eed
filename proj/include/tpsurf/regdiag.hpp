#pragma once

#include "tpsurf/complex.hpp"
#include "tpsurf/grassmann.hpp"
#include "tpsurf/parallel.hpp"
#include "tpsurf/spatial.hpp"
#include "tpsurf/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace tpsurf {

// ---------------------------------------------------------------------------
// configuration

/// delta, eta, lambda and the cover size J used by the regularity checks.
/// Defaults: eta = delta/5 and delta the largest value below 0.05 with
/// 6 c3 (delta + eta) < eps1 (a 0.999 safety factor). J is an explicit chart
/// grid bound on the eta^2 cover of G(n,m); lambda = 1/(3J).
struct RegularityConfig {
  int n = 3;
  int m = 2;
  double q = 6;
  double delta = 0;
  double eta = 0;
  double log_J = 0;
  double log_lambda = 0;
  LemmaConstants constants;
  std::vector<std::string> warnings;

  double lambda() const { return std::exp(log_lambda); }

  static RegularityConfig make(int n, int m, double q, std::optional<double> delta = std::nullopt,
                               std::optional<double> eta = std::nullopt) {
    require(1 <= m && m < n, ErrorKind::invalid_argument, "need 1 <= m < n");
    require(q > 0, ErrorKind::invalid_argument, "q must be positive");
    RegularityConfig c;
    c.n = n;
    c.m = m;
    c.q = q;
    c.constants = LemmaConstants::compute(m, q);
    const double dmax = std::min(0.05, 0.999 * c.constants.eps1 / (7.2 * c.constants.c3));
    c.delta = delta.value_or(dmax);
    c.eta = eta.value_or(c.delta / 5.0);
    require(c.delta > 0 && c.delta < 1, ErrorKind::invalid_argument, "delta must lie in (0,1)");
    require(c.eta > 0 && c.eta <= c.delta / 5.0 * (1 + 1e-12), ErrorKind::invalid_argument,
            "eta must lie in (0, delta/5]");
    if (6.0 * c.constants.c3 * (c.delta + c.eta) >= c.constants.eps1) {
      c.warnings.push_back("delta/eta override violates 6 c3 (delta + eta) < eps1");
    }
    c.log_J = log_grassmann_cover_size(n, m, c.eta * c.eta);
    c.log_lambda = -std::log(3.0) - c.log_J;
    return c;
  }

  /// log of c = lambda omega^2 eta^(4m+q) / (2 * 9^q).
  double log_c() const {
    const double lw = std::log(unit_ball_volume(m));
    return 2 * lw + log_lambda + (4.0 * m + q) * std::log(eta) - std::log(2.0) - q * std::log(9.0);
  }

  /// R_1 = (c / E)^(1/(q-2m)). Infinite for E = 0 (the bound is vacuous).
  double R1(double energy) const {
    require(q > 2.0 * m, ErrorKind::precondition, "R_1 needs q > 2m");
    require(energy >= 0, ErrorKind::invalid_argument, "energy must be nonnegative");
    if (energy == 0) return std::numeric_limits<double>::infinity();
    return std::exp((log_c() - std::log(energy)) / (q - 2.0 * m));
  }
};

// ---------------------------------------------------------------------------
// fits

struct ExponentFit {
  std::vector<std::pair<double, double>> pairs;  // (log scale, log quantity)
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double r_squared = 0;
  bool flat_input = false;
  double implied_constant = 0;
  std::vector<std::string> notes;
};

inline void fit_line(ExponentFit& f) {
  const auto k = f.pairs.size();
  require(k >= 2, ErrorKind::insufficient_data, "a fit needs at least two points");
  double sx = 0, sy = 0;
  for (auto [x, y] : f.pairs) {
    sx += x;
    sy += y;
  }
  const double mx = sx / k;
  const double my = sy / k;
  double sxx = 0, sxy = 0, syy = 0;
  for (auto [x, y] : f.pairs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  require(sxx > 0, ErrorKind::degenerate, "fit abscissae coincide");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
}

// ---------------------------------------------------------------------------
// beta numbers

struct BetaOptions {
  int max_iterations = 200;
  double min_step = 1e-10;
  int restarts = 32;
  std::uint64_t seed = 1;
  int bound_budget = 20000;  // objective evaluations for the certified lower bound
};

struct BetaResult {
  double beta = 0;        // upper bound (value at `plane`)
  double lower = 0;       // certified lower bound (0 if uncertified)
  bool lower_certified = false;
  double pca_beta = 0;
  Plane plane;
  int points = 0;
};

namespace detail {

// max_j |Q_F v_j| for a frame F (columns orthonormal), v given column-wise.
inline double beta_objective(const Mat& frame, const Mat& v) {
  const Mat r = v - frame * (frame.transpose() * v);
  return r.colwise().norm().maxCoeff();
}

inline Mat chart_frame(const Mat& f0, const Mat& n0, const Mat& a) {
  Mat g = f0 + n0 * a;
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(g.rows(), g.cols());
}

// coordinate descent on the chart entries with step halving
inline std::pair<double, Mat> descend(const Mat& f0, const Mat& n0, Mat a, const Mat& v, const BetaOptions& opt) {
  double best = beta_objective(chart_frame(f0, n0, a), v);
  double step = 0.1;
  for (int it = 0; it < opt.max_iterations && step >= opt.min_step; ++it) {
    bool moved = false;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (double sgn : {1.0, -1.0}) {
          Mat t = a;
          t(i, j) += sgn * step;
          const double val = beta_objective(chart_frame(f0, n0, t), v);
          if (val < best) {
            best = val;
            a = t;
            moved = true;
            break;
          }
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  return {best, a};
}

// Branch and bound over unit vectors u for dim G(n,m) <= 2: u is the normal
// when m = n - 1 and the direction when m = 1. Returns (lower, best value,
// best u). The objective is 1-Lipschitz in the angle metric, and the angle
// is at most the geodesic distance between the u's.
struct BoundOutcome {
  double lower = 0;
  double best = 0;
  Vec u;
};

inline BoundOutcome branch_and_bound(const Mat& v, int m, double upper, int budget) {
  const int n = static_cast<int>(v.rows());
  auto value = [&](const Vec& u) {
    const Eigen::RowVectorXd dots = u.transpose() * v;
    if (m == n - 1) return dots.cwiseAbs().maxCoeff();
    const Eigen::RowVectorXd sq = v.colwise().squaredNorm() - dots.cwiseProduct(dots);
    return std::sqrt(std::max(0.0, sq.maxCoeff()));
  };
  struct Cell {
    double lower;
    double t0, t1, p0, p1;
    bool operator>(const Cell& o) const { return lower > o.lower; }
  };
  auto dir = [&](double t, double p) {
    Vec u(n);
    if (n == 2) {
      u << std::cos(t), std::sin(t);
    } else {
      u << std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t);
    }
    return u;
  };
  BoundOutcome out;
  out.best = upper;
  int evals = 0;
  std::priority_queue<Cell, std::vector<Cell>, std::greater<Cell>> heap;
  auto push = [&](double t0, double t1, double p0, double p1) {
    const double tc = 0.5 * (t0 + t1);
    const double pc = 0.5 * (p0 + p1);
    const Vec u = dir(tc, pc);
    const double val = value(u);
    ++evals;
    if (val < out.best) {
      out.best = val;
      out.u = u;
    }
    const double rad = n == 2 ? 0.5 * (t1 - t0) : 0.5 * (t1 - t0) + std::sin(std::min(t1, std::numbers::pi / 2)) * 0.5 * (p1 - p0);
    heap.push({val - rad, t0, t1, p0, p1});
  };
  const double pi = std::numbers::pi;
  if (n == 2) {
    for (int i = 0; i < 64; ++i) push(pi * i / 64, pi * (i + 1) / 64, 0, 0);
  } else {
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 64; ++j) push(0.5 * pi * i / 16, 0.5 * pi * (i + 1) / 16, 2 * pi * j / 64, 2 * pi * (j + 1) / 64);
  }
  while (true) {
    const Cell c = heap.top();
    if (c.lower >= out.best - 1e-12 || evals >= budget) {
      out.lower = std::max(0.0, c.lower);
      return out;
    }
    heap.pop();
    const double tm = 0.5 * (c.t0 + c.t1);
    if (n == 2) {
      push(c.t0, tm, 0, 0);
      push(tm, c.t1, 0, 0);
    } else {
      const double pm = 0.5 * (c.p0 + c.p1);
      push(c.t0, tm, c.p0, pm);
      push(c.t0, tm, pm, c.p1);
      push(tm, c.t1, c.p0, pm);
      push(tm, c.t1, pm, c.p1);
    }
  }
}

}  // namespace detail

/// beta(x, d) = inf over m-planes P of max over cloud points y in B(x, d) of
/// dist(y, x + P) / d. Upper value by PCA + chart descent + seeded restarts;
/// lower value certified by branch and bound when dim G(n,m) <= 2.
inline BetaResult beta(const QuadratureCloud& cloud, const Vec& x, double d, const BetaOptions& opt = {}) {
  require(d > 0, ErrorKind::invalid_argument, "beta radius must be positive");
  const int n = cloud.ambient_dim();
  const int m = cloud.intrinsic_dim();
  std::vector<int> idx;
  for (int i = 0; i < cloud.size(); ++i) {
    if ((cloud.position(i) - x).norm() <= d) idx.push_back(i);
  }
  require(static_cast<int>(idx.size()) >= m + 1, ErrorKind::insufficient_data,
          "B(x,d) holds " + std::to_string(idx.size()) + " cloud points, need m+1");
  Mat v(n, static_cast<Eigen::Index>(idx.size()));
  Mat cov = Mat::Zero(n, n);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    v.col(static_cast<Eigen::Index>(k)) = (cloud.position(idx[k]) - x) / d;
    cov += cloud.weight(idx[k]) * v.col(static_cast<Eigen::Index>(k)) * v.col(static_cast<Eigen::Index>(k)).transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  // eigenvalues ascending: top m eigenvectors span the PCA plane
  const Mat f0 = es.eigenvectors().rightCols(m);
  const Mat n0 = es.eigenvectors().leftCols(n - m);
  BetaResult out;
  out.points = static_cast<int>(idx.size());
  out.pca_beta = detail::beta_objective(f0, v);
  out.beta = out.pca_beta;
  Mat best_frame = f0;
  if (n > m) {
    auto [val, a] = detail::descend(f0, n0, Mat::Zero(n - m, m), v, opt);
    if (val < out.beta) {
      out.beta = val;
      best_frame = detail::chart_frame(f0, n0, a);
    }
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int r = 0; r < opt.restarts; ++r) {
      Mat a0(n - m, m);
      for (Eigen::Index i = 0; i < a0.size(); ++i) a0(i) = uni(rng);
      auto [rv, ra] = detail::descend(f0, n0, a0, v, opt);
      if (rv < out.beta) {
        out.beta = rv;
        best_frame = detail::chart_frame(f0, n0, ra);
      }
    }
    if (m * (n - m) <= 2 && (m == 1 || m == n - 1)) {
      const auto bb = detail::branch_and_bound(v, m, out.beta, opt.bound_budget);
      if (bb.best < out.beta) {
        out.beta = bb.best;
        best_frame = m == n - 1 ? Plane::span(bb.u).complement_frame() : Mat(bb.u);
      }
      out.lower = std::min(bb.lower, out.beta);
      out.lower_certified = true;
    }
  } else {
    out.lower_certified = true;
  }
  out.beta = std::clamp(out.beta, 0.0, 1.0);
  out.plane = Plane::span(best_frame);
  return out;
}

struct BetaSample {
  double d = 0;
  BetaResult result;
};

inline std::vector<BetaSample> beta_curve(const QuadratureCloud& cloud, const Vec& x, const std::vector<double>& radii,
                                          const BetaOptions& opt = {}) {
  std::vector<BetaSample> out;
  for (double d : radii) out.push_back({d, beta(cloud, x, d, opt)});
  return out;
}

/// Slope of log(max over probes of beta) against log d, and the implied
/// balance constant max beta^(4m+q) d^(2m-q) / E.
inline ExponentFit beta_decay_fit(const QuadratureCloud& cloud, const std::vector<int>& probes, const std::vector<double>& radii,
                                  double q, double energy, const BetaOptions& opt = {}, int threads = 0) {
  require(!radii.empty() && !probes.empty(), ErrorKind::invalid_argument, "need probes and radii");
  const double lo = *std::min_element(radii.begin(), radii.end());
  const double hi = *std::max_element(radii.begin(), radii.end());
  require(hi >= 10.0 * lo * (1 - 1e-12), ErrorKind::precondition, "beta fit radii must span at least one decade");
  const int m = cloud.intrinsic_dim();
  std::vector<double> worst(radii.size(), 0.0);
  std::vector<std::vector<double>> per(probes.size(), std::vector<double>(radii.size(), 0.0));
  parallel_chunks(probes.size(), resolve_threads(threads), [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t p = b; p < e; ++p) {
      for (std::size_t k = 0; k < radii.size(); ++k) per[p][k] = beta(cloud, cloud.position(probes[p]), radii[k], opt).beta;
    }
  });
  for (const auto& row : per)
    for (std::size_t k = 0; k < radii.size(); ++k) worst[k] = std::max(worst[k], row[k]);
  ExponentFit f;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (worst[k] > 1e-14) f.pairs.emplace_back(std::log(radii[k]), std::log(worst[k]));
    if (energy > 0) {
      f.implied_constant = std::max(f.implied_constant,
                                    std::pow(worst[k], 4.0 * m + q) * std::pow(radii[k], 2.0 * m - q) / energy);
    }
  }
  if (f.pairs.size() < 2) {
    f.flat_input = true;
    f.notes.push_back("flat-input: beta vanishes, slope undefined");
    return f;
  }
  fit_line(f);
  return f;
}

// ---------------------------------------------------------------------------
// Ahlfors ratios

struct AhlforsSample {
  Vec x;
  double r = 0;
  double ratio = 0;
  bool within_R1 = false;
  bool witness = false;  // ratio < 1/2
};

struct AhlforsCurve {
  std::vector<AhlforsSample> samples;
  double min_ratio = std::numeric_limits<double>::infinity();
  double min_ratio_within_R1 = std::numeric_limits<double>::infinity();
  int witnesses = 0;
  int witnesses_within_R1 = 0;
  double smallest_witness_radius = std::numeric_limits<double>::infinity();
};

/// local measure / (omega(m) r^m) at every center and radius. Witnesses are
/// ratios below 1/2; `R1` marks which radii fall inside the proven range.
inline AhlforsCurve ahlfors_curve(const SimplicialSet& s, const std::vector<Vec>& centers, const std::vector<double>& radii,
                                  double R1 = std::numeric_limits<double>::infinity(), int threads = 0) {
  const int m = s.intrinsic_dim();
  const double om = unit_ball_volume(m);
  AhlforsCurve out;
  out.samples.resize(centers.size() * radii.size());
  parallel_chunks(out.samples.size(), resolve_threads(threads), [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t k = b; k < e; ++k) {
      const Vec& x = centers[k / radii.size()];
      const double r = radii[k % radii.size()];
      AhlforsSample& a = out.samples[k];
      a.x = x;
      a.r = r;
      a.ratio = local_measure(s, x, r) / (om * std::pow(r, m));
      a.within_R1 = r <= R1;
      a.witness = a.ratio < 0.5;
    }
  });
  for (const auto& a : out.samples) {
    out.min_ratio = std::min(out.min_ratio, a.ratio);
    if (a.within_R1) out.min_ratio_within_R1 = std::min(out.min_ratio_within_R1, a.ratio);
    if (a.witness) {
      ++out.witnesses;
      out.smallest_witness_radius = std::min(out.smallest_witness_radius, a.r);
      if (a.within_R1) ++out.witnesses_within_R1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// good couples

struct GoodCoupleCertificate {
  Vec x;
  Vec y;
  double lambda = 0;
  double alpha = 0;
  double d = 0;
  double S_measure = 0;
  double required = 0;
  std::vector<int> member_points;
  bool certified = false;
};

/// S(x,y;alpha,d) measure with d fixed by the caller.
inline GoodCoupleCertificate good_couple_measure(const QuadratureCloud& cloud, const Vec& x, const Vec& y, double lambda,
                                                 double alpha, double d) {
  require(alpha > 0 && alpha < 0.5, ErrorKind::precondition, "alpha must lie in (0, 1/2)");
  require(d > 0, ErrorKind::invalid_argument, "d must be positive");
  GoodCoupleCertificate c;
  c.x = x;
  c.y = y;
  c.lambda = lambda;
  c.alpha = alpha;
  c.d = d;
  const int m = cloud.intrinsic_dim();
  c.required = lambda * unit_ball_volume(m) * std::pow(alpha, 2.0 * m) * std::pow(d, m);
  ExactSum acc;
  const double rad = alpha * alpha * d;
  for (int i = 0; i < cloud.size(); ++i) {
    const Vec z = cloud.position(i);
    if ((z - x).norm() > rad) continue;
    if (cloud.plane(i).reject_norm(y - z) >= alpha * d) {
      c.member_points.push_back(i);
      acc += cloud.weight(i);
    }
  }
  c.S_measure = acc.value();
  const double dist = (x - y).norm();
  c.certified = dist >= 0.5 * d && dist <= 2.0 * d && c.S_measure >= c.required;
  return c;
}

/// Certificate with d = |x - y|, or nothing.
inline std::optional<GoodCoupleCertificate> good_couple_search(const QuadratureCloud& cloud, const Vec& x, const Vec& y,
                                                              double lambda, double alpha) {
  const double d = (x - y).norm();
  require(d > 0, ErrorKind::precondition, "good couple needs x != y");
  auto c = good_couple_measure(cloud, x, y, lambda, alpha, d);
  if (!c.certified) return std::nullopt;
  return c;
}

struct CoupleBoundCheck {
  long long pairs = 0;
  long long violations = 0;
  double min_ratio = std::numeric_limits<double>::infinity();  // inv_rtp / (alpha / 9d)
  double cross_energy = 0;  // sum over S x B(y, alpha^2 d) of w w k^q
  double cross_lower = 0;   // S_measure * |B(y)| * (alpha/9d)^q
};

/// Every z in S and w in B(y, alpha^2 d) must satisfy inv_rtp(z, H_z, w) > alpha / (9d).
inline CoupleBoundCheck check_couple_bound(const QuadratureCloud& cloud, const GoodCoupleCertificate& c, double q) {
  CoupleBoundCheck out;
  const double floor = c.alpha / (9.0 * c.d);
  const double rad = c.alpha * c.alpha * c.d;
  std::vector<int> near_y;
  ExactSum wy;
  for (int i = 0; i < cloud.size(); ++i) {
    if ((cloud.position(i) - c.y).norm() <= rad) {
      near_y.push_back(i);
      wy += cloud.weight(i);
    }
  }
  ExactSum cross;
  for (int z : c.member_points) {
    for (int w : near_y) {
      if (z == w) continue;
      const double k = inv_rtp(cloud.position(z), cloud.plane(z), cloud.position(w));
      ++out.pairs;
      out.min_ratio = std::min(out.min_ratio, k / floor);
      if (!(k > floor)) ++out.violations;
      cross += cloud.weight(z) * cloud.weight(w) * std::pow(k, q);
    }
  }
  out.cross_energy = cross.value();
  out.cross_lower = c.S_measure * wy.value() * std::pow(floor, q);
  return out;
}

// ---------------------------------------------------------------------------
// stopping distances

struct StoppingResult {
  Vec x;
  int x_index = -1;
  double d_s = 0;
  double uncertainty = 0;  // one inter-point spacing
  std::string case_kind;   // "good-couple-case1" or "good-couple-case2"
  Vec partner;
  int partner_index = -1;
  std::vector<Plane> plane_history;  // H_1, H_2, ...
  std::vector<double> radii_history;  // rho_1, rho_2, ...
  std::vector<int> cover_sizes;       // local J per round that reached the cover
  double S_measure = 0;
  double required = 0;
  std::vector<std::string> warnings;
};

/// Discrete cone-growing construction around cloud point `x_index`. Radii are
/// read off the sorted point distances; cone membership is
/// |Q_H(z - x)| >= delta |z - x|.
inline StoppingResult stopping_distance(const QuadratureCloud& cloud, int x_index, const RegularityConfig& cfg) {
  require(x_index >= 0 && x_index < cloud.size(), ErrorKind::invalid_argument, "x index out of range");
  require(cfg.eta <= cfg.delta / 5.0 * (1 + 1e-12), ErrorKind::precondition, "stopping distance needs eta <= delta/5");
  const int m = cloud.intrinsic_dim();
  const double delta = cfg.delta;
  const double eta = cfg.eta;
  const double lambda = cfg.lambda();
  const double om = unit_ball_volume(m);
  StoppingResult out;
  out.x_index = x_index;
  out.x = cloud.position(x_index);
  out.uncertainty = cloud.max_parent_diameter();
  out.warnings = cfg.warnings;
  const Vec& x = out.x;

  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < cloud.size(); ++i) {
    const double dd = (cloud.position(i) - x).norm();
    if (dd > 0) order.emplace_back(dd, i);
  }
  std::sort(order.begin(), order.end());
  require(!order.empty(), ErrorKind::insufficient_data, "cloud has no second point");
  const double diam = order.back().first;

  Plane h = cloud.plane(x_index);
  double rho_prev = 0;
  std::size_t cursor = 0;
  int limit = 64;
  for (int round = 1;; ++round) {
    // first hit: smallest distance beyond rho_prev whose point lies in the cone
    while (cursor < order.size() && order[cursor].first <= rho_prev) ++cursor;
    std::size_t hit = cursor;
    while (hit < order.size()) {
      const Vec z = cloud.position(order[hit].second) - x;
      if (h.reject_norm(z) >= delta * order[hit].first) break;
      ++hit;
    }
    if (hit == order.size()) {
      throw Error(ErrorKind::insufficient_data,
                  round == 1 ? "no cloud point enters the cone around x (flat data?)"
                             : "cone exhausted the cloud before a good couple appeared");
    }
    const double rho = order[hit].first;
    if (round == 1) limit = std::max(64, static_cast<int>(std::ceil(std::log2(diam / rho))) + 1);
    if (round > limit) throw Error(ErrorKind::iteration_limit, "stopping distance exceeded the round limit");
    out.plane_history.push_back(h);
    out.radii_history.push_back(rho);

    const double required = lambda * om * std::pow(eta, 2.0 * m) * std::pow(rho, m);
    const double rad = eta * eta * rho;
    std::vector<int> near_x;
    for (const auto& [dd, i] : order) {
      if (dd > rad) break;
      near_x.push_back(i);
    }
    near_x.insert(near_x.begin(), x_index);

    // Case 1: any cone point on the sphere of radius rho gives S big enough
    for (std::size_t t = hit; t < order.size() && order[t].first == rho; ++t) {
      const int yi = order[t].second;
      const Vec y = cloud.position(yi);
      if (h.reject_norm(y - x) < delta * rho) continue;
      ExactSum s;
      for (int z : near_x) {
        if (cloud.plane(z).reject_norm(y - cloud.position(z)) >= eta * rho) s += cloud.weight(z);
      }
      if (s.value() >= required) {
        out.d_s = rho;
        out.case_kind = "good-couple-case1";
        out.partner = y;
        out.partner_index = yi;
        out.S_measure = s.value();
        out.required = required;
        return out;
      }
    }

    // H*: greedy eta^2 net over the planes in B(x, eta^2 rho), heaviest cell
    std::vector<int> centres;
    for (int z : near_x) {
      bool covered = false;
      for (int c : centres) {
        if (angle(cloud.plane(z), cloud.plane(c)) <= eta * eta) {
          covered = true;
          break;
        }
      }
      if (!covered) centres.push_back(z);
    }
    out.cover_sizes.push_back(static_cast<int>(centres.size()));
    int best = centres.front();
    double best_w = -1;
    for (int c : centres) {
      ExactSum w;
      for (int z : near_x) {
        if (angle(cloud.plane(z), cloud.plane(c)) <= eta * eta) w += cloud.weight(z);
      }
      if (w.value() > best_w) {
        best_w = w.value();
        best = c;
      }
    }
    const Plane hstar = cloud.plane(best);

    // Case 2: a point of F_j far from H*
    for (const auto& [dd, i] : order) {
      if (dd < 0.5 * rho) continue;
      if (dd > 2.0 * rho) break;
      const Vec y = cloud.position(i);
      if (hstar.reject_norm(y - x) >= 2.0 * eta * rho) {
        out.d_s = rho;
        out.case_kind = "good-couple-case2";
        out.partner = y;
        out.partner_index = i;
        out.S_measure = best_w;
        out.required = required;
        return out;
      }
    }
    // Case 3: flat position, continue with H*
    h = hstar;
    rho_prev = rho;
  }
}

// ---------------------------------------------------------------------------
// Hoelder fit of the tangent-plane slope

struct GraphPatch {
  Vec center;
  double radius = 0;
  std::optional<Plane> plane;  // defaults to H at the nearest cloud point
};

struct HolderPatchResult {
  bool rejected = false;
  std::pair<int, int> witness{-1, -1};
  int points = 0;
  double local_energy = 0;
  double max_oscillation = 0;
  double lipschitz_ratio = 0;  // max osc / (E^(1/q) s) over pairs beyond the mesh scale
};

struct HolderFit {
  ExponentFit fit;  // slope = mu hat
  std::vector<HolderPatchResult> patches;
  double lipschitz_ratio = 0;
  double min_scale = 0;
};

/// Slope matrices A_z of H_z as graphs over P, their oscillation against the
/// P-distance, and the envelope slope over dyadic distance bins. Bins below
/// four mesh spacings are dropped: flat elements make the slope piecewise
/// constant there.
inline HolderFit holder_fit(const QuadratureCloud& cloud, const std::vector<GraphPatch>& patches, double q, int threads = 0) {
  require(!patches.empty(), ErrorKind::invalid_argument, "need at least one patch");
  HolderFit out;
  out.min_scale = 4.0 * cloud.max_parent_diameter();
  constexpr int kBins = 24;
  std::vector<double> bin_max(kBins, 0.0);
  double top = 0;
  for (const auto& gp : patches) top = std::max(top, 2.0 * gp.radius);

  struct Patch {
    std::vector<int> idx;
    std::vector<Mat> grad;
    Mat fp;
    double escale = 0;
  };
  std::vector<Patch> data(patches.size());
  out.patches.resize(patches.size());

  // visits every accepted pair (s = P-distance, osc = slope oscillation)
  auto for_pairs = [&](std::size_t p, auto&& fn) {
    const auto& d = data[p];
    for (std::size_t a = 0; a < d.idx.size(); ++a) {
      for (std::size_t b = a + 1; b < d.idx.size(); ++b) {
        const Mat diff = d.grad[a] - d.grad[b];
        const double osc = (diff.rows() == 1 || diff.cols() == 1) ? diff.norm()
                                                                  : Eigen::JacobiSVD<Mat>(diff).singularValues()(0);
        const double s = (d.fp.transpose() * (cloud.position(d.idx[b]) - cloud.position(d.idx[a]))).norm();
        fn(s, osc, d.escale);
      }
    }
  };

  for (std::size_t p = 0; p < patches.size(); ++p) {
    const auto& gp = patches[p];
    auto& res = out.patches[p];
    auto& d = data[p];
    int nearest = -1;
    double nd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cloud.size(); ++i) {
      const double dd = (cloud.position(i) - gp.center).norm();
      if (dd <= gp.radius) d.idx.push_back(i);
      if (dd < nd) {
        nd = dd;
        nearest = i;
      }
    }
    res.points = static_cast<int>(d.idx.size());
    if (d.idx.size() < 2) {
      res.rejected = true;
      d.idx.clear();
      continue;
    }
    const Plane P = gp.plane.value_or(cloud.plane(nearest));
    d.fp = P.frame();
    const Mat np = P.complement_frame();
    // graph check: the patch must be a 1-Lipschitz graph over P
    for (std::size_t a = 0; a < d.idx.size() && !res.rejected; ++a) {
      for (std::size_t b = a + 1; b < d.idx.size(); ++b) {
        const Vec v = cloud.position(d.idx[b]) - cloud.position(d.idx[a]);
        const double along = (d.fp.transpose() * v).norm();
        const double across = (np.transpose() * v).norm();
        if (across > along * (1 + 1e-12) && across > 1e-12 * v.norm()) {
          res.rejected = true;
          res.witness = {d.idx[a], d.idx[b]};
          break;
        }
      }
    }
    for (std::size_t k = 0; k < d.idx.size() && !res.rejected; ++k) {
      const Mat fz = cloud.plane(d.idx[k]).frame();
      Eigen::FullPivLU<Mat> lu(d.fp.transpose() * fz);
      if (!lu.isInvertible() || std::fabs(lu.determinant()) < 1e-8) {
        res.rejected = true;
        res.witness = {d.idx[k], d.idx[k]};
        break;
      }
      d.grad.push_back((np.transpose() * fz) * lu.inverse());
    }
    if (res.rejected) {
      d.idx.clear();
      d.grad.clear();
      continue;
    }
    res.local_energy = local_energy(cloud, gp.center, gp.radius, q, threads).value;
    d.escale = std::pow(res.local_energy, 1.0 / q);
    for_pairs(p, [&](double s, double osc, double e) {
      res.max_oscillation = std::max(res.max_oscillation, osc);
      if (s >= out.min_scale && e > 0) res.lipschitz_ratio = std::max(res.lipschitz_ratio, osc / (e * s));
      if (s >= out.min_scale && s > 0) {
        const int b = static_cast<int>(std::floor(std::log2(top / s)));
        if (b >= 0 && b < kBins) bin_max[b] = std::max(bin_max[b], osc);
      }
    });
    out.lipschitz_ratio = std::max(out.lipschitz_ratio, res.lipschitz_ratio);
  }

  auto& f = out.fit;
  f.notes.push_back("oscillation supremum taken over sampled balls only");
  bool any = false;
  for (const auto& r : out.patches) any = any || (!r.rejected && r.max_oscillation > 1e-12);
  if (!any) {
    f.flat_input = true;
    f.notes.push_back("flat-input: tangent planes do not oscillate");
    return out;
  }
  for (int b = 0; b < kBins; ++b) {
    if (bin_max[b] > 1e-12) f.pairs.emplace_back(std::log(top / std::pow(2.0, b)), std::log(bin_max[b]));
  }
  if (f.pairs.size() < 2) {
    f.notes.push_back("fewer than two populated distance bins above the mesh scale");
    return out;
  }
  fit_line(f);
  for (std::size_t p = 0; p < patches.size(); ++p) {
    for_pairs(p, [&](double s, double osc, double e) {
      if (s >= out.min_scale && e > 0) f.implied_constant = std::max(f.implied_constant, osc / (e * std::pow(s, f.slope)));
    });
  }
  return out;
}

}  // namespace tpsurf
