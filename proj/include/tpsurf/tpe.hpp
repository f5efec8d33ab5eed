#pragma once

#include "tpsurf/complex.hpp"
#include "tpsurf/exact_sum.hpp"
#include "tpsurf/parallel.hpp"
#include "tpsurf/spatial.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace tpsurf {

/// 1/R_tp(x, y) = 2 |Q_{H_x}(y - x)| / |y - x|^2, and 0 when y lies on x + H_x
/// up to 1e-14 |y - x|.
inline double inv_rtp(const Vec& x, const Plane& hx, const Vec& y) {
  require(x.size() == hx.ambient_dim() && y.size() == x.size(), ErrorKind::invalid_argument,
          "point and plane dimensions differ");
  const Vec d = y - x;
  const double s = d.squaredNorm();
  require(s > 0, ErrorKind::invalid_argument, "inv_rtp is undefined on the diagonal x = y");
  const double a = hx.reject_norm(d);
  if (a <= 1e-14 * std::sqrt(s)) return 0.0;
  return 2.0 * a / s;
}

namespace detail {

/// k^q with repeated squaring for integer exponents (keeps the scaling law
/// exact to rounding and is faster than pow).
struct Power {
  double q = 1;
  long iq = -1;
  explicit Power(double qq) : q(qq) {
    if (qq == std::floor(qq) && qq >= 0 && qq <= 64) iq = static_cast<long>(qq);
  }
  double operator()(double k) const {
    if (iq < 0) return std::pow(k, q);
    double r = 1.0;
    double b = k;
    long e = iq;
    while (e) {
      if (e & 1) r *= b;
      b *= b;
      e >>= 1;
    }
    return r;
  }
};

/// Kernel on raw storage. Returns false for coincident points.
inline bool raw_inv_rtp(const double* x, const double* nrm, const double* y, int n, int c, double& k) {
  double s = 0;
  for (int t = 0; t < n; ++t) {
    const double d = y[t] - x[t];
    s += d * d;
  }
  if (s == 0) return false;
  double a2 = 0;
  for (int j = 0; j < c; ++j) {
    const double* col = nrm + static_cast<std::ptrdiff_t>(j) * n;
    double p = 0;
    for (int t = 0; t < n; ++t) p += col[t] * (y[t] - x[t]);
    a2 += p * p;
  }
  const double a = std::sqrt(a2);
  k = a <= 1e-14 * std::sqrt(s) ? 0.0 : 2.0 * a / s;
  return true;
}

}  // namespace detail

enum class EnergyMode { exact, bvh };

inline std::string_view to_string(EnergyMode m) { return m == EnergyMode::exact ? "exact" : "bvh"; }

struct EnergyOptions {
  double q = 6.0;
  EnergyMode mode = EnergyMode::exact;
  double theta = 0.5;
  bool symmetrize = false;
  bool deterministic = true;
  int threads = 0;
  int leaf_size = 16;
};

struct EnergyReport {
  double q = 0;
  int m = 0;
  std::string mode = "exact";
  double theta = 0;
  double total_energy = 0;
  std::uint64_t pair_count = 0;
  std::uint64_t excluded_pairs = 0;
  std::uint64_t far_cluster_pairs = 0;
  double acceleration_error_bound = 0;
  double max_inv_rtp = 0;  // over pairs evaluated point by point
  double elapsed = 0;
  int threads = 1;
  bool critical = false;
  std::vector<std::string> warnings;
};

namespace detail {

struct PairAccumulator {
  ExactSum exact;
  double loose = 0;
  ExactSum bound;
  std::uint64_t pairs = 0;
  std::uint64_t excluded = 0;
  double max_k = 0;
};

inline void check_q(double q, int m, EnergyReport& rep) {
  require(q > 0 && std::isfinite(q), ErrorKind::invalid_argument, "q must be positive, got " + std::to_string(q));
  rep.q = q;
  rep.m = m;
  if (q == 2.0 * m) {
    rep.critical = true;
    rep.warnings.push_back("critical exponent q = 2m: outside the hypotheses q > 2m of the regularity theory");
  } else if (q < 2.0 * m) {
    rep.warnings.push_back("q < 2m: energy is not expected to control regularity");
  }
}

// One ordered pair (i, j), i != j. Adds the term(s) and the bookkeeping.
inline void visit_pair(const QuadratureCloud& c, const Power& pw, int i, int j, bool symmetrize, bool exact,
                       PairAccumulator& acc) {
  if (c.parent(i) == c.parent(j)) {
    ++acc.excluded;
    return;
  }
  const int n = c.ambient_dim();
  const int cd = c.codim();
  const double* xi = c.positions().data() + static_cast<std::ptrdiff_t>(i) * n;
  const double* xj = c.positions().data() + static_cast<std::ptrdiff_t>(j) * n;
  double k = 0;
  if (!raw_inv_rtp(xi, c.normal_data(i), xj, n, cd, k)) {
    ++acc.excluded;
    return;
  }
  ++acc.pairs;
  acc.max_k = std::max(acc.max_k, k);
  const double ww = c.weight(i) * c.weight(j);
  if (symmetrize) {
    double kr = 0;
    raw_inv_rtp(xj, c.normal_data(j), xi, n, cd, kr);
    const double a = 0.5 * (ww * pw(k));
    const double b = 0.5 * (ww * pw(kr));
    if (exact) {
      acc.exact += a;
      acc.exact += b;
    } else {
      acc.loose += a + b;
    }
  } else {
    const double t = ww * pw(k);
    if (exact) {
      acc.exact += t;
    } else {
      acc.loose += t;
    }
  }
}

/// Cluster data on top of a KdTree: weighted centroid, weight, and the
/// enclosing radius about the centroid.
struct Cluster {
  Vec centroid;
  double radius = 0;
  double weight = 0;
};

inline std::vector<Cluster> build_clusters(const QuadratureCloud& c, const KdTree& tree) {
  const int n = c.ambient_dim();
  std::vector<Cluster> out(tree.nodes().size());
  for (std::size_t id = 0; id < tree.nodes().size(); ++id) {
    const auto& nd = tree.nodes()[id];
    Cluster& cl = out[id];
    cl.centroid = Vec::Zero(n);
    for (int k = nd.begin; k < nd.end; ++k) {
      const int i = tree.order()[k];
      cl.weight += c.weight(i);
      cl.centroid += c.weight(i) * c.position(i);
    }
    cl.centroid /= cl.weight;
    for (int k = nd.begin; k < nd.end; ++k) {
      cl.radius = std::max(cl.radius, (c.position(tree.order()[k]) - cl.centroid).norm());
    }
  }
  return out;
}

}  // namespace detail

/// Discrete E_q: sum over ordered pairs of points from distinct simplices of
/// w_i w_j inv_rtp(x_i, H_i, x_j)^q. Coincident points (shared Simpson nodes)
/// are excluded like same-simplex pairs.
inline EnergyReport energy(const QuadratureCloud& cloud, const EnergyOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  EnergyReport rep;
  detail::check_q(opt.q, cloud.intrinsic_dim(), rep);
  rep.mode = std::string(to_string(opt.mode));
  const int threads = resolve_threads(opt.threads);
  rep.threads = threads;
  const detail::Power pw(opt.q);
  const int npts = cloud.size();
  const bool exact_sum = opt.deterministic;

  std::vector<detail::PairAccumulator> acc;
  std::atomic<double> shared{0.0};

  if (opt.mode == EnergyMode::exact) {
    acc.resize(chunk_count(static_cast<std::size_t>(npts), threads));
    parallel_chunks(static_cast<std::size_t>(npts), threads, [&](std::size_t b, std::size_t e, std::size_t w) {
      auto& a = acc[w];
      for (std::size_t i = b; i < e; ++i) {
        for (int j = 0; j < npts; ++j) {
          if (j == static_cast<int>(i)) continue;
          detail::visit_pair(cloud, pw, static_cast<int>(i), j, opt.symmetrize, exact_sum, a);
        }
      }
      if (!exact_sum) {
        double cur = shared.load();
        while (!shared.compare_exchange_weak(cur, cur + a.loose)) {
        }
      }
    });
  } else {
    require(opt.theta > 0, ErrorKind::invalid_argument, "theta must be positive");
    rep.theta = opt.theta;
    KdTree tree(cloud.positions(), opt.leaf_size);
    const auto clusters = detail::build_clusters(cloud, tree);
    const auto& nodes = tree.nodes();
    struct Task {
      int a;
      int b;
      bool far;
    };
    std::vector<Task> tasks;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    const double min_gap = cloud.max_parent_diameter();
    while (!stack.empty()) {
      const auto [a, b] = stack.back();
      stack.pop_back();
      const auto& na = nodes[a];
      const auto& nb = nodes[b];
      if (a == b) {
        if (na.leaf()) {
          tasks.push_back({a, b, false});
        } else {
          stack.push_back({nb.right, nb.right});
          stack.push_back({nb.right, nb.left});
          stack.push_back({nb.left, nb.right});
          stack.push_back({nb.left, nb.left});
        }
        continue;
      }
      const double dist = (clusters[a].centroid - clusters[b].centroid).norm();
      const double rho = clusters[a].radius + clusters[b].radius;
      if (dist > 0 && rho <= opt.theta * dist && dist - rho > min_gap) {
        tasks.push_back({a, b, true});
      } else if (na.leaf() && nb.leaf()) {
        tasks.push_back({a, b, false});
      } else if (!na.leaf() && (nb.leaf() || clusters[a].radius >= clusters[b].radius)) {
        stack.push_back({na.right, b});
        stack.push_back({na.left, b});
      } else {
        stack.push_back({a, nb.right});
        stack.push_back({a, nb.left});
      }
    }
    acc.resize(chunk_count(tasks.size(), threads));
    const auto& order = tree.order();
    parallel_chunks(tasks.size(), threads, [&](std::size_t b, std::size_t e, std::size_t w) {
      auto& ac = acc[w];
      for (std::size_t t = b; t < e; ++t) {
        const Task& task = tasks[t];
        const auto& na = nodes[task.a];
        const auto& nb = nodes[task.b];
        if (!task.far) {
          for (int p = na.begin; p < na.end; ++p) {
            for (int r = nb.begin; r < nb.end; ++r) {
              if (order[p] == order[r]) continue;
              detail::visit_pair(cloud, pw, order[p], order[r], opt.symmetrize, exact_sum, ac);
            }
          }
          continue;
        }
        // Point-to-cluster far field: each source point keeps its own plane;
        // the target cluster collapses to its weighted centroid. For a target
        // y = c_B + e with |e| <= rho_B, the sine phi of the angle between
        // y - x and H_x moves by at most 2 rho_B / d, which brackets k.
        const auto& cb = clusters[task.b];
        const int n = cloud.ambient_dim();
        const int cd = cloud.codim();
        for (int p = na.begin; p < na.end; ++p) {
          const int i = order[p];
          const double* xi = cloud.positions().data() + static_cast<std::ptrdiff_t>(i) * n;
          double kbar = 0;
          detail::raw_inv_rtp(xi, cloud.normal_data(i), cb.centroid.data(), n, cd, kbar);
          const double dist = (cb.centroid - cloud.position(i)).norm();
          const double rho = cb.radius;
          const double phi = std::min(1.0, 0.5 * kbar * dist);
          const double dphi = 2.0 * rho / dist + 1e-14;
          const double klo = 2.0 * std::max(0.0, phi - dphi) / (dist + rho);
          const double khi = 2.0 * std::min(1.0, phi + dphi) / (dist - rho);
          const double ww = cloud.weight(i) * cb.weight;
          const double kq = pw(kbar);
          const double val = ww * kq;
          const double err = ww * std::max(pw(khi) - kq, kq - pw(klo));
          if (exact_sum) {
            ac.exact += val;
          } else {
            ac.loose += val;
          }
          ac.bound += err;
        }
        ac.pairs += static_cast<std::uint64_t>(na.size()) * static_cast<std::uint64_t>(nb.size());
      }
      if (!exact_sum) {
        double cur = shared.load();
        while (!shared.compare_exchange_weak(cur, cur + ac.loose)) {
        }
      }
    });
    for (const auto& t : tasks) rep.far_cluster_pairs += t.far ? 1 : 0;
  }

  ExactSum total;
  ExactSum bound;
  for (const auto& a : acc) {
    total.merge(a.exact);
    bound.merge(a.bound);
    rep.pair_count += a.pairs;
    rep.excluded_pairs += a.excluded;
    rep.max_inv_rtp = std::max(rep.max_inv_rtp, a.max_k);
  }
  rep.total_energy = exact_sum ? total.value() : shared.load();
  rep.acceleration_error_bound = bound.value();
  rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

struct LocalEnergy {
  Vec center;
  double radius = 0;
  double value = 0;
  int point_count = 0;
};

/// E(x, r): the same double sum restricted to cloud points in the closed ball.
inline LocalEnergy local_energy(const QuadratureCloud& cloud, const Vec& x, double r, double q, int threads = 0) {
  require(r > 0, ErrorKind::invalid_argument, "radius must be positive");
  std::vector<int> idx;
  for (int i = 0; i < cloud.size(); ++i) {
    if ((cloud.position(i) - x).norm() <= r) idx.push_back(i);
  }
  LocalEnergy out;
  out.center = x;
  out.radius = r;
  out.point_count = static_cast<int>(idx.size());
  if (idx.size() < 2) return out;
  EnergyOptions opt;
  opt.q = q;
  opt.threads = threads;
  out.value = energy(cloud.subset(idx), opt).total_energy;
  return out;
}

struct ScalingFit {
  std::vector<double> lambdas;
  std::vector<double> energies;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double expected = 0;  // 2m - q
  bool zero_energy = false;
};

/// Least-squares slope of log E_q(lambda * cloud) against log lambda.
inline ScalingFit scaling_check(const QuadratureCloud& cloud, double q, const std::vector<double>& lambdas,
                                int threads = 0) {
  require(lambdas.size() >= 3, ErrorKind::invalid_argument, "need at least 3 scales");
  ScalingFit fit;
  fit.lambdas = lambdas;
  fit.expected = 2.0 * cloud.intrinsic_dim() - q;
  EnergyOptions opt;
  opt.q = q;
  opt.threads = threads;
  for (double l : lambdas) {
    require(l > 0, ErrorKind::invalid_argument, "scales must be positive");
    fit.energies.push_back(energy(cloud.scaled(l), opt).total_energy);
  }
  for (double e : fit.energies) {
    if (!(e > 0)) fit.zero_energy = true;
  }
  if (fit.zero_energy) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double x = std::log(lambdas[i]);
    const double y = std::log(fit.energies[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / k;
  return fit;
}

// ---------------------------------------------------------------------------
// Gradient with respect to vertex positions (centroid rule, flat planes).

enum class GradientScheme { analytic, central_difference };

/// Exact-mode energy of the centroid/flat discretization of s.
inline double discrete_energy(const SimplicialSet& s, double q, int threads = 0) {
  EnergyOptions opt;
  opt.q = q;
  opt.threads = threads;
  return energy(quadrature(s), opt).total_energy;
}

/// d(total measure)/d(vertices), n x V.
inline Mat measure_gradient(const SimplicialSet& s) {
  const int m = s.intrinsic_dim();
  Mat g = Mat::Zero(s.ambient_dim(), s.vertex_count());
  for (int f = 0; f < s.simplex_count(); ++f) {
    const Mat e = s.edge_matrix(f);
    const Mat pinv_t = e * (e.transpose() * e).inverse();  // E^{+T}
    const Mat de = s.measure(f) * pinv_t;
    for (int j = 1; j <= m; ++j) {
      g.col(s.simplices()(j, f)) += de.col(j - 1);
      g.col(s.simplices()(0, f)) -= de.col(j - 1);
    }
  }
  return g;
}

inline Mat gradient(const SimplicialSet& s, const QuadratureCloud& cloud, double q,
                    GradientScheme scheme = GradientScheme::analytic, double h = 1e-5, int threads = 0) {
  require(cloud.order() == QuadratureOrder::centroid && cloud.rule() == PlaneRule::flat &&
              cloud.size() == s.simplex_count(),
          ErrorKind::unsupported, "gradient needs the centroid rule with flat planes");
  require(q > 1, ErrorKind::invalid_argument, "gradient needs q > 1");
  const int n = s.ambient_dim();
  const int m = s.intrinsic_dim();
  const int nv = s.vertex_count();
  const int nf = s.simplex_count();
  Mat grad = Mat::Zero(n, nv);

  if (scheme == GradientScheme::central_difference) {
    // step scaled by the mean length of edges at the vertex
    std::vector<double> len(nv, 0.0);
    std::vector<int> cnt(nv, 0);
    for (int f = 0; f < nf; ++f) {
      for (int a = 0; a <= m; ++a) {
        for (int b = a + 1; b <= m; ++b) {
          const int va = s.simplices()(a, f);
          const int vb = s.simplices()(b, f);
          const double l = (s.vertex(va) - s.vertex(vb)).norm();
          len[va] += l;
          len[vb] += l;
          ++cnt[va];
          ++cnt[vb];
        }
      }
    }
    Mat v = s.vertices();
    for (int i = 0; i < nv; ++i) {
      const double step = h * (cnt[i] ? len[i] / cnt[i] : 1.0);
      for (int k = 0; k < n; ++k) {
        const double orig = v(k, i);
        v(k, i) = orig + step;
        const double ep = discrete_energy(s.with_vertices(v), q, threads);
        v(k, i) = orig - step;
        const double em = discrete_energy(s.with_vertices(v), q, threads);
        v(k, i) = orig;
        grad(k, i) = (ep - em) / (2.0 * step);
      }
    }
    return grad;
  }

  const detail::Power pw(q);
  const detail::Power pw1(q - 1.0);
  std::vector<Mat> proj(nf);
  for (int f = 0; f < nf; ++f) proj[f] = s.plane(f).projector();
  const Mat eye = Mat::Identity(n, n);

  Mat gc = Mat::Zero(n, nf);          // d/d centroid
  std::vector<Mat> gp(nf, Mat::Zero(n, n));  // d/d projector
  Vec gw = Vec::Zero(nf);             // d/d weight

  // Source role: row f owns its own centroid, projector, weight.
  parallel_chunks(static_cast<std::size_t>(nf), resolve_threads(threads), [&](std::size_t b, std::size_t e, std::size_t) {
    Vec v(n), qv(n);
    for (std::size_t ff = b; ff < e; ++ff) {
      const int f = static_cast<int>(ff);
      const Mat qf = eye - proj[f];
      for (int g = 0; g < nf; ++g) {
        if (g == f) continue;
        v = s.centroid(g) - s.centroid(f);
        const double sq = v.squaredNorm();
        if (sq == 0) continue;
        qv.noalias() = qf * v;
        const double a = qv.norm();
        if (a <= 1e-14 * std::sqrt(sq)) continue;
        const double k = 2.0 * a / sq;
        const double coef = s.measure(f) * s.measure(g) * q * pw1(k);
        const Vec dkv = (2.0 / (a * sq)) * qv - (4.0 * a / (sq * sq)) * v;
        gc.col(f) -= coef * dkv;
        gp[f].noalias() -= (coef / (a * sq)) * (v * v.transpose());
        gw(f) += s.measure(g) * pw(k);
      }
    }
  });
  // Target role: row g owns its own centroid and weight.
  parallel_chunks(static_cast<std::size_t>(nf), resolve_threads(threads), [&](std::size_t b, std::size_t e, std::size_t) {
    Vec v(n), qv(n);
    for (std::size_t gg = b; gg < e; ++gg) {
      const int g = static_cast<int>(gg);
      for (int f = 0; f < nf; ++f) {
        if (g == f) continue;
        v = s.centroid(g) - s.centroid(f);
        const double sq = v.squaredNorm();
        if (sq == 0) continue;
        qv.noalias() = v - proj[f] * v;
        const double a = qv.norm();
        if (a <= 1e-14 * std::sqrt(sq)) continue;
        const double k = 2.0 * a / sq;
        const double coef = s.measure(f) * s.measure(g) * q * pw1(k);
        const Vec dkv = (2.0 / (a * sq)) * qv - (4.0 * a / (sq * sq)) * v;
        gc.col(g) += coef * dkv;
        gw(g) += s.measure(f) * pw(k);
      }
    }
  });

  for (int f = 0; f < nf; ++f) {
    const Mat e = s.edge_matrix(f);
    const Mat pinv_t = e * (e.transpose() * e).inverse();
    const Mat de = (eye - proj[f]) * (gp[f] + gp[f].transpose()) * pinv_t + (gw(f) * s.measure(f)) * pinv_t;
    for (int j = 1; j <= m; ++j) {
      grad.col(s.simplices()(j, f)) += de.col(j - 1);
      grad.col(s.simplices()(0, f)) -= de.col(j - 1);
    }
    for (int j = 0; j <= m; ++j) grad.col(s.simplices()(j, f)) += gc.col(f) / (m + 1);
  }
  return grad;
}

}  // namespace tpsurf
