#pragma once

#include "tpsurf/complex.hpp"
#include "tpsurf/geometry.hpp"
#include "tpsurf/tpe.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace tpsurf {

enum class Preconditioner { none, sobolev };

struct FlowPolicy {
  // sobolev: the direction solves (I + bL + b^2 L^2) d = -g with an edge-length
  // weighted graph Laplacian L and b = extent^2; none: d = -g
  Preconditioner preconditioner = Preconditioner::sobolev;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 30;
  double growth = 2.0;          // step multiplier after an accepted step
  double initial_step = 0;      // 0: 5% of the mean edge over the largest gradient row
  double quality_floor = 0.02;  // triangle aspect (m = 2) or min/mean edge (m = 1)
  int audit_every = 10;         // gradient spot audit period, 0 disables
  double audit_tolerance = 1e-5;
  int threads = 0;
};

enum class FlowStatus { running, stagnation, quality, nan_abort };

inline std::string_view to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::running: return "running";
    case FlowStatus::stagnation: return "stagnation";
    case FlowStatus::quality: return "quality";
    case FlowStatus::nan_abort: return "nan-abort";
  }
  return "unknown";
}

struct FlowRecord {
  int step = 0;
  double energy = 0;
  double measure = 0;
  double max_inv_rtp = 0;
  double min_sep = 0;
  double step_size = 0;
};

struct FlowAudit {
  int step = 0;
  double relative_error = 0;
  bool ok = true;
};

struct FlowState {
  SimplicialSet mesh;
  int step = 0;
  double step_size = 0;
  double q = 0;
  double measure_target = 0;
  std::vector<double> energy_history;
  FlowStatus status = FlowStatus::running;
  std::string diagnostic;
  int backtracks = 0;  // in the last step
};

namespace detail {

inline double mean_edge(const SimplicialSet& s) {
  double sum = 0;
  long cnt = 0;
  const int m = s.intrinsic_dim();
  for (int f = 0; f < s.simplex_count(); ++f) {
    for (int a = 0; a <= m; ++a) {
      for (int b = a + 1; b <= m; ++b) {
        sum += (s.vertex(s.simplices()(a, f)) - s.vertex(s.simplices()(b, f))).norm();
        ++cnt;
      }
    }
  }
  return cnt ? sum / cnt : 0.0;
}

/// I + bL + b^2 L^2 for the graph Laplacian with weights 1/|e|^2.
inline Eigen::SparseMatrix<double> sobolev_operator(const SimplicialSet& s) {
  using Sp = Eigen::SparseMatrix<double>;
  const int nv = s.vertex_count();
  const int m = s.intrinsic_dim();
  std::vector<Eigen::Triplet<double>> trip;
  for (int f = 0; f < s.simplex_count(); ++f) {
    for (int a = 0; a <= m; ++a) {
      for (int b = a + 1; b <= m; ++b) {
        const int i = s.simplices()(a, f);
        const int j = s.simplices()(b, f);
        const double w = 1.0 / (s.vertex(i) - s.vertex(j)).squaredNorm();
        trip.emplace_back(i, j, -w);
        trip.emplace_back(j, i, -w);
        trip.emplace_back(i, i, w);
        trip.emplace_back(j, j, w);
      }
    }
  }
  Sp lap(nv, nv);
  lap.setFromTriplets(trip.begin(), trip.end());  // shared edges add up; fine for a preconditioner
  const double b = s.extent() * s.extent();
  Sp id(nv, nv);
  id.setIdentity();
  return id + b * lap + (b * b) * (lap * lap);
}

inline SimplicialSet rescale_to(const SimplicialSet& s, double target) {
  const double cur = s.total_measure();
  const double f = std::pow(target / cur, 1.0 / s.intrinsic_dim());
  const Vec c = s.vertices().rowwise().mean();
  Mat v = s.vertices();
  v.colwise() -= c;
  v *= f;
  v.colwise() += c;
  return s.with_vertices(std::move(v));
}

}  // namespace detail

/// Element quality: least triangle aspect 4 sqrt(3) A / sum(l^2) for m = 2,
/// min edge / mean edge for m = 1.
inline double mesh_quality(const SimplicialSet& s) {
  const int m = s.intrinsic_dim();
  if (m == 1) {
    double lo = std::numeric_limits<double>::infinity();
    double sum = 0;
    for (int f = 0; f < s.simplex_count(); ++f) {
      lo = std::min(lo, s.measure(f));
      sum += s.measure(f);
    }
    return lo / (sum / s.simplex_count());
  }
  if (m == 2) {
    double lo = 1;
    for (int f = 0; f < s.simplex_count(); ++f) {
      const Vec a = s.vertex(s.simplices()(0, f));
      const Vec b = s.vertex(s.simplices()(1, f));
      const Vec c = s.vertex(s.simplices()(2, f));
      const double l2 = (a - b).squaredNorm() + (b - c).squaredNorm() + (c - a).squaredNorm();
      lo = std::min(lo, 4.0 * std::sqrt(3.0) * s.measure(f) / l2);
    }
    return lo;
  }
  return 1;
}

/// Least distance between simplices that share no vertex.
inline double min_separation(const SimplicialSet& s) {
  const int m = s.intrinsic_dim();
  const int nf = s.simplex_count();
  const auto& sx = s.simplices();
  double best = std::numeric_limits<double>::infinity();
  for (int f = 0; f < nf; ++f) {
    for (int g = f + 1; g < nf; ++g) {
      bool shared = false;
      for (int a = 0; a <= m && !shared; ++a)
        for (int b = 0; b <= m && !shared; ++b) shared = sx(a, f) == sx(b, g);
      if (shared) continue;
      const double lower = (s.centroid(f) - s.centroid(g)).norm() - s.simplex_diameter(f) - s.simplex_diameter(g);
      if (lower >= best) continue;
      double d = 0;
      if (m == 1) {
        d = geom::segment_segment_distance(s.vertex(sx(0, f)), s.vertex(sx(1, f)), s.vertex(sx(0, g)), s.vertex(sx(1, g)));
      } else if (m == 2) {
        d = geom::triangle_triangle_distance({s.vertex(sx(0, f)), s.vertex(sx(1, f)), s.vertex(sx(2, f))},
                                             {s.vertex(sx(0, g)), s.vertex(sx(1, g)), s.vertex(sx(2, g))});
      } else {
        d = (s.centroid(f) - s.centroid(g)).norm();
      }
      best = std::min(best, d);
    }
  }
  return best;
}

inline FlowRecord flow_record(const FlowState& st, double energy, double max_k) {
  return {st.step, energy, st.mesh.total_measure(), max_k, min_separation(st.mesh), st.step_size};
}

/// Flow state at the given mesh; the measure target is its current measure.
inline FlowState flow_start(const SimplicialSet& mesh, double q, const FlowPolicy& policy = {}) {
  require(q > 1, ErrorKind::invalid_argument, "flow needs q > 1");
  FlowState st{mesh};
  st.q = q;
  st.measure_target = mesh.total_measure();
  st.energy_history.push_back(discrete_energy(mesh, q, policy.threads));
  st.step_size = policy.initial_step;
  return st;
}

/// One projected descent step. The measure gradient is projected out of the
/// energy gradient, the trial is rescaled about the vertex mean to the target
/// measure, and Armijo is tested on the rescaled trial so that every accepted
/// step strictly lowers the recorded energy.
inline FlowState flow_step(FlowState st, const FlowPolicy& policy = {}) {
  if (st.status != FlowStatus::running) return st;
  const double q = st.q;
  const auto cloud = quadrature(st.mesh);
  const Mat g = gradient(st.mesh, cloud, q, GradientScheme::analytic, 1e-5, policy.threads);
  const Mat gm = measure_gradient(st.mesh);
  // columns of g are vertices; the preconditioner acts on vertex index
  Mat pg = g;
  Mat pm = gm;
  if (policy.preconditioner == Preconditioner::sobolev) {
    const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(detail::sobolev_operator(st.mesh));
    require(ldlt.info() == Eigen::Success, ErrorKind::degenerate, "preconditioner factorization failed");
    pg = ldlt.solve(Mat(g.transpose())).transpose();
    pm = ldlt.solve(Mat(gm.transpose())).transpose();
  }
  // projection onto the measure tangent in the metric of the preconditioner
  Mat d = -pg;
  const double mpm = gm.cwiseProduct(pm).sum();
  if (mpm > 0) d += (g.cwiseProduct(pm).sum() / mpm) * pm;
  const double slope = g.cwiseProduct(d).sum();
  const double e0 = st.energy_history.back();
  ++st.step;
  st.backtracks = 0;
  if (!std::isfinite(slope)) {
    st.status = FlowStatus::nan_abort;
    st.diagnostic = "non-finite gradient at step " + std::to_string(st.step);
    return st;
  }
  // nothing left after the projection (critical point up to rounding)
  if (slope >= 0 || d.norm() <= 1e-10 * pg.norm()) {
    st.energy_history.push_back(e0);
    return st;
  }
  if (st.step_size <= 0) {
    const double gmax = d.colwise().norm().maxCoeff();
    st.step_size = 0.05 * detail::mean_edge(st.mesh) / gmax;
  }
  double t = st.step_size;
  for (int k = 0; k <= policy.max_backtracks; ++k) {
    SimplicialSet trial = st.mesh;
    double e1 = std::numeric_limits<double>::quiet_NaN();
    bool built = true;
    try {
      trial = detail::rescale_to(st.mesh.with_vertices(st.mesh.vertices() + t * d), st.measure_target);
      e1 = discrete_energy(trial, q, policy.threads);
    } catch (const Error&) {
      // degenerate trial simplices: treat like a failed Armijo test
      built = false;
    }
    if (built && !std::isfinite(e1)) {
      st.status = FlowStatus::nan_abort;
      std::ostringstream dump;
      dump << "energy became " << e1 << " at step " << st.step << " with step size " << t << "\n";
      write_ndmesh(dump, st.mesh);
      st.diagnostic = dump.str();
      return st;
    }
    if (built && e1 < e0 && e1 <= e0 + policy.armijo_c * t * slope) {
      st.mesh = std::move(trial);
      st.energy_history.push_back(e1);
      st.step_size = t * policy.growth;
      st.backtracks = k;
      if (mesh_quality(st.mesh) < policy.quality_floor) st.status = FlowStatus::quality;
      return st;
    }
    t *= policy.shrink;
    st.backtracks = k + 1;
  }
  st.step_size = t;
  st.status = FlowStatus::stagnation;
  st.energy_history.push_back(e0);
  return st;
}

/// max_i |g_a - g_c| / max_i |g_c| over all gradient components.
inline double gradient_audit(const SimplicialSet& s, double q, int threads = 0) {
  const auto cloud = quadrature(s);
  const Mat ga = gradient(s, cloud, q, GradientScheme::analytic, 1e-5, threads);
  const Mat gc = gradient(s, cloud, q, GradientScheme::central_difference, 1e-5, threads);
  const double scale = gc.cwiseAbs().maxCoeff();
  if (scale == 0) return ga.cwiseAbs().maxCoeff();
  return (ga - gc).cwiseAbs().maxCoeff() / scale;
}

struct FlowRun {
  FlowState state;
  std::vector<FlowRecord> records;
  std::vector<FlowAudit> audits;
  bool critical = false;
};

/// Runs up to `steps` steps, recording the initial state as step 0.
inline FlowRun flow_run(const SimplicialSet& mesh, double q, int steps, const FlowPolicy& policy = {},
                        const std::function<void(const FlowRecord&)>& on_record = {}) {
  require(steps >= 1, ErrorKind::invalid_argument, "flow needs at least one step");
  FlowRun run;
  run.critical = q == 2.0 * mesh.intrinsic_dim();
  run.state = flow_start(mesh, q, policy);
  auto record = [&] {
    EnergyOptions eo;
    eo.q = q;
    eo.threads = policy.threads;
    const auto rep = energy(quadrature(run.state.mesh), eo);
    run.records.push_back(flow_record(run.state, rep.total_energy, rep.max_inv_rtp));
    if (on_record) on_record(run.records.back());
  };
  record();
  for (int k = 0; k < steps && run.state.status == FlowStatus::running; ++k) {
    run.state = flow_step(std::move(run.state), policy);
    if (run.state.status == FlowStatus::nan_abort) break;
    record();
    if (policy.audit_every > 0 && run.state.step % policy.audit_every == 0) {
      const double err = gradient_audit(run.state.mesh, q, policy.threads);
      run.audits.push_back({run.state.step, err, err < policy.audit_tolerance});
    }
  }
  return run;
}

inline void write_flow_csv(std::ostream& out, const FlowRun& run) {
  if (run.critical) out << "# warning: critical exponent q = 2m, outside the regularity hypotheses\n";
  out << "step,energy,measure,max_inv_rtp,min_sep,step_size\n";
  out << std::setprecision(17);
  for (const auto& r : run.records) {
    out << r.step << ',' << r.energy << ',' << r.measure << ',' << r.max_inv_rtp << ',' << r.min_sep << ','
        << r.step_size << '\n';
  }
}

}  // namespace tpsurf
