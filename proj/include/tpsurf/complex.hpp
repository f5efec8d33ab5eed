#pragma once

#include "tpsurf/core.hpp"
#include "tpsurf/exact_sum.hpp"
#include "tpsurf/geometry.hpp"
#include "tpsurf/grassmann.hpp"
#include "tpsurf/spatial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tpsurf {

using Simplices = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// Vertices in R^n plus m-simplices (columns of `simplices`, m+1 rows).
/// Measures, planes, centroids are cached at construction; degenerate
/// simplices are rejected, never repaired.
class SimplicialSet {
 public:
  SimplicialSet() = default;

  SimplicialSet(int m, Mat vertices, Simplices simplices)
      : m_(m), vertices_(std::move(vertices)), simplices_(std::move(simplices)) {
    require(m_ >= 1 && m_ <= ambient_dim(), ErrorKind::invalid_argument,
            "need 1 <= m <= n for a simplicial set");
    require(simplices_.rows() == m_ + 1, ErrorKind::invalid_argument,
            "each simplex needs m + 1 vertex indices");
    require(simplices_.cols() > 0, ErrorKind::invalid_argument, "no simplices");
    const int nv = static_cast<int>(vertices_.cols());
    for (Eigen::Index s = 0; s < simplices_.cols(); ++s) {
      for (Eigen::Index k = 0; k <= m_; ++k) {
        const int v = simplices_(k, s);
        require(v >= 0 && v < nv, ErrorKind::invalid_argument,
                "simplex " + std::to_string(s) + " references vertex " + std::to_string(v) +
                    " outside [0, " + std::to_string(nv) + ")");
      }
    }
    require(vertices_.allFinite(), ErrorKind::invalid_argument, "non-finite vertex coordinates");
    compute_caches();
  }

  int intrinsic_dim() const { return m_; }
  int ambient_dim() const { return static_cast<int>(vertices_.rows()); }
  int vertex_count() const { return static_cast<int>(vertices_.cols()); }
  int simplex_count() const { return static_cast<int>(simplices_.cols()); }
  const Mat& vertices() const { return vertices_; }
  const Simplices& simplices() const { return simplices_; }

  double measure(int s) const { return measure_[s]; }
  const std::vector<double>& measures() const { return measure_; }
  const Plane& plane(int s) const { return plane_[s]; }
  const Vec& centroid(int s) const { return centroid_[s]; }
  double simplex_diameter(int s) const { return diameter_[s]; }
  double max_simplex_diameter() const { return max_diameter_; }
  double total_measure() const { return total_measure_; }
  /// Diagonal of the bounding box: an upper bound for the diameter within a
  /// factor sqrt(n).
  double extent() const { return extent_; }

  /// Edge matrix [v1 - v0, ..., vm - v0] of simplex s.
  Mat edge_matrix(int s) const {
    Mat e(ambient_dim(), m_);
    for (int k = 0; k < m_; ++k) e.col(k) = vertices_.col(simplices_(k + 1, s)) - vertices_.col(simplices_(0, s));
    return e;
  }

  Vec vertex(int v) const { return vertices_.col(v); }

  SimplicialSet with_vertices(Mat v) const { return SimplicialSet(m_, std::move(v), simplices_); }

  SimplicialSet transformed(const Mat& rotation, const Vec& shift) const {
    Mat v = rotation * vertices_;
    v.colwise() += shift;
    return with_vertices(std::move(v));
  }

  SimplicialSet scaled(double lambda) const { return with_vertices(lambda * vertices_); }

  /// Disjoint union of two sets of the same dimensions.
  static SimplicialSet merge(const SimplicialSet& a, const SimplicialSet& b) {
    require(a.m_ == b.m_ && a.ambient_dim() == b.ambient_dim(), ErrorKind::invalid_argument,
            "merging sets of different dimensions");
    Mat v(a.ambient_dim(), a.vertex_count() + b.vertex_count());
    v << a.vertices_, b.vertices_;
    Simplices s(a.m_ + 1, a.simplex_count() + b.simplex_count());
    s << a.simplices_, (b.simplices_.array() + a.vertex_count()).matrix();
    return SimplicialSet(a.m_, std::move(v), std::move(s));
  }

 private:
  void compute_caches() {
    const int ns = simplex_count();
    measure_.resize(ns);
    plane_.resize(ns);
    centroid_.resize(ns);
    diameter_.resize(ns);
    const double mfact = factorial(m_);
    std::vector<int> bad;
    ExactSum total;
    for (int s = 0; s < ns; ++s) {
      const Mat e = edge_matrix(s);
      const double gram = (e.transpose() * e).determinant();
      const double meas = std::sqrt(std::max(0.0, gram)) / mfact;
      double diam = 0;
      Vec c = Vec::Zero(ambient_dim());
      for (int i = 0; i <= m_; ++i) {
        c += vertices_.col(simplices_(i, s));
        for (int j = i + 1; j <= m_; ++j) {
          diam = std::max(diam, (vertices_.col(simplices_(i, s)) - vertices_.col(simplices_(j, s))).norm());
        }
      }
      measure_[s] = meas;
      diameter_[s] = diam;
      centroid_[s] = c / (m_ + 1);
      if (!(meas > 1e-14 * std::pow(diam, m_)) || diam == 0) {
        bad.push_back(s);
        continue;
      }
      plane_[s] = Plane::span(e);
      total += meas;
    }
    if (!bad.empty()) {
      std::string list;
      for (std::size_t i = 0; i < bad.size() && i < 10; ++i) list += (i ? ", " : "") + std::to_string(bad[i]);
      if (bad.size() > 10) list += ", ...";
      throw Error(ErrorKind::degenerate,
                  std::to_string(bad.size()) + " degenerate simplices: " + list);
    }
    total_measure_ = total.value();
    max_diameter_ = *std::max_element(diameter_.begin(), diameter_.end());
    extent_ = (vertices_.rowwise().maxCoeff() - vertices_.rowwise().minCoeff()).norm();
  }

  int m_ = 1;
  Mat vertices_;
  Simplices simplices_;
  std::vector<double> measure_;
  std::vector<Plane> plane_;
  std::vector<Vec> centroid_;
  std::vector<double> diameter_;
  double max_diameter_ = 0;
  double total_measure_ = 0;
  double extent_ = 0;
};

// ---------------------------------------------------------------------------
// I/O

enum class MeshFormat { obj, ndmesh };

inline MeshFormat format_from_path(const std::string& path) {
  auto ends = [&](const std::string& suf) {
    return path.size() >= suf.size() &&
           std::equal(suf.rbegin(), suf.rend(), path.rbegin(),
                      [](char a, char b) { return std::tolower(a) == std::tolower(b); });
  };
  if (ends(".obj")) return MeshFormat::obj;
  if (ends(".ndmesh")) return MeshFormat::ndmesh;
  throw Error(ErrorKind::invalid_argument, "cannot infer mesh format from '" + path + "'");
}

namespace detail {

inline Error parse_error(const std::string& source, int line, const std::string& what) {
  return Error(ErrorKind::parse, source + ":" + std::to_string(line) + ": " + what);
}

// Locale-independent number parsing.
inline bool parse_double(std::string_view tok, double& out) {
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline bool parse_int(std::string_view tok, long& out) {
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t j = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > j) out.push_back(line.substr(j, i - j));
  }
  return out;
}

}  // namespace detail

inline SimplicialSet parse_obj(std::istream& in, const std::string& source = "<obj>",
                               std::vector<std::string>* warnings = nullptr) {
  std::vector<double> coords;
  std::vector<int> faces;
  std::string line;
  int lineno = 0;
  std::map<std::string, int> ignored;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto tok = detail::tokens(line);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) throw detail::parse_error(source, lineno, "vertex needs 3 coordinates");
      for (int k = 1; k <= 3; ++k) {
        double v = 0;
        if (!detail::parse_double(tok[k], v)) {
          throw detail::parse_error(source, lineno, "bad coordinate '" + std::string(tok[k]) + "'");
        }
        coords.push_back(v);
      }
      if (tok.size() > 4 && warnings) {
        warnings->push_back(source + ":" + std::to_string(lineno) + ": extra vertex fields ignored");
      }
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw detail::parse_error(source, lineno, "face needs at least 3 indices");
      std::vector<int> idx;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const auto slash = tok[k].find('/');
        long v = 0;
        if (!detail::parse_int(tok[k].substr(0, slash), v) || v < 1) {
          throw detail::parse_error(source, lineno, "bad face index '" + std::string(tok[k]) + "'");
        }
        idx.push_back(static_cast<int>(v - 1));
      }
      if (idx.size() > 3 && warnings) {
        warnings->push_back(source + ":" + std::to_string(lineno) + ": polygon fan-triangulated");
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        faces.insert(faces.end(), {idx[0], idx[k], idx[k + 1]});
      }
    } else {
      ++ignored[std::string(tok[0])];
    }
  }
  if (warnings) {
    for (const auto& [rec, count] : ignored) {
      warnings->push_back(source + ": ignored " + std::to_string(count) + " '" + rec + "' records");
    }
  }
  const int nv = static_cast<int>(coords.size() / 3);
  for (std::size_t k = 0; k < faces.size(); ++k) {
    if (faces[k] >= nv) {
      throw Error(ErrorKind::parse, source + ": face index " + std::to_string(faces[k] + 1) +
                                        " exceeds vertex count " + std::to_string(nv));
    }
  }
  if (faces.empty()) throw Error(ErrorKind::parse, source + ": no faces");
  Mat v = Eigen::Map<Mat>(coords.data(), 3, nv);
  Simplices s = Eigen::Map<Simplices>(faces.data(), 3, static_cast<Eigen::Index>(faces.size() / 3));
  return SimplicialSet(2, std::move(v), std::move(s));
}

inline SimplicialSet parse_ndmesh(std::istream& in, const std::string& source = "<ndmesh>",
                                  std::vector<std::string>* /*warnings*/ = nullptr) {
  std::string line;
  int lineno = 0;
  int m = -1;
  int n = -1;
  std::vector<double> coords;
  std::vector<int> simp;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto tok = detail::tokens(line);
    if (tok.empty()) continue;
    if (m < 0) {
      long lm = 0;
      long ln = 0;
      if (tok.size() != 3 || tok[0] != "ndmesh" || !detail::parse_int(tok[1], lm) ||
          !detail::parse_int(tok[2], ln) || lm < 1 || ln < lm) {
        throw detail::parse_error(source, lineno, "expected header 'ndmesh <m> <n>' with 1 <= m <= n");
      }
      m = static_cast<int>(lm);
      n = static_cast<int>(ln);
      continue;
    }
    if (tok[0] == "v") {
      if (static_cast<int>(tok.size()) != n + 1) {
        throw detail::parse_error(source, lineno, "vertex needs " + std::to_string(n) + " coordinates");
      }
      for (int k = 1; k <= n; ++k) {
        double v = 0;
        if (!detail::parse_double(tok[k], v)) {
          throw detail::parse_error(source, lineno, "bad coordinate '" + std::string(tok[k]) + "'");
        }
        coords.push_back(v);
      }
    } else if (tok[0] == "s") {
      if (static_cast<int>(tok.size()) != m + 2) {
        throw detail::parse_error(source, lineno, "simplex needs " + std::to_string(m + 1) + " indices");
      }
      for (int k = 1; k <= m + 1; ++k) {
        long v = 0;
        if (!detail::parse_int(tok[k], v) || v < 0) {
          throw detail::parse_error(source, lineno, "bad simplex index '" + std::string(tok[k]) + "'");
        }
        simp.push_back(static_cast<int>(v));
      }
    } else {
      throw detail::parse_error(source, lineno, "unknown record '" + std::string(tok[0]) + "'");
    }
  }
  if (m < 0) throw Error(ErrorKind::parse, source + ": missing ndmesh header");
  if (simp.empty()) throw Error(ErrorKind::parse, source + ": no simplices");
  const int nv = static_cast<int>(coords.size()) / n;
  for (int v : simp) {
    if (v >= nv) {
      throw Error(ErrorKind::parse, source + ": simplex index " + std::to_string(v) +
                                        " exceeds vertex count " + std::to_string(nv));
    }
  }
  Mat v = Eigen::Map<Mat>(coords.data(), n, nv);
  Simplices s = Eigen::Map<Simplices>(simp.data(), m + 1, static_cast<Eigen::Index>(simp.size()) / (m + 1));
  return SimplicialSet(m, std::move(v), std::move(s));
}

inline SimplicialSet load(const std::string& path, std::optional<MeshFormat> format = std::nullopt,
                          std::vector<std::string>* warnings = nullptr) {
  const MeshFormat fmt = format ? *format : format_from_path(path);
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::parse, "cannot open '" + path + "'");
  return fmt == MeshFormat::obj ? parse_obj(in, path, warnings) : parse_ndmesh(in, path, warnings);
}

inline void write_ndmesh(std::ostream& out, const SimplicialSet& s) {
  out << "ndmesh " << s.intrinsic_dim() << ' ' << s.ambient_dim() << '\n';
  out << std::setprecision(17);
  for (int v = 0; v < s.vertex_count(); ++v) {
    out << 'v';
    for (int k = 0; k < s.ambient_dim(); ++k) out << ' ' << s.vertices()(k, v);
    out << '\n';
  }
  for (int f = 0; f < s.simplex_count(); ++f) {
    out << 's';
    for (int k = 0; k <= s.intrinsic_dim(); ++k) out << ' ' << s.simplices()(k, f);
    out << '\n';
  }
}

inline void write_obj(std::ostream& out, const SimplicialSet& s) {
  require(s.intrinsic_dim() == 2 && s.ambient_dim() == 3, ErrorKind::invalid_argument,
          "OBJ output needs a triangle mesh in R^3");
  out << std::setprecision(17);
  for (int v = 0; v < s.vertex_count(); ++v) {
    out << "v " << s.vertices()(0, v) << ' ' << s.vertices()(1, v) << ' ' << s.vertices()(2, v) << '\n';
  }
  for (int f = 0; f < s.simplex_count(); ++f) {
    out << "f " << s.simplices()(0, f) + 1 << ' ' << s.simplices()(1, f) + 1 << ' ' << s.simplices()(2, f) + 1
        << '\n';
  }
}

inline void save(const std::string& path, const SimplicialSet& s) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::invalid_argument, "cannot write '" + path + "'");
  if (format_from_path(path) == MeshFormat::obj) {
    write_obj(out, s);
  } else {
    write_ndmesh(out, s);
  }
}

// ---------------------------------------------------------------------------
// Quadrature

enum class QuadratureOrder { centroid, bary3 };
enum class PlaneRule { flat, smoothed };

inline std::string_view to_string(QuadratureOrder o) { return o == QuadratureOrder::centroid ? "centroid" : "bary3"; }
inline std::string_view to_string(PlaneRule r) { return r == PlaneRule::flat ? "flat" : "smoothed"; }

/// Flattened sample points driving every double sum: position, weight,
/// plane H_x, and parent simplex. Normal frames are cached contiguously so the
/// kernel evaluates |Q_x v| without forming projectors.
class QuadratureCloud {
 public:
  QuadratureCloud() = default;

  int intrinsic_dim() const { return m_; }
  int ambient_dim() const { return static_cast<int>(positions_.rows()); }
  int codim() const { return ambient_dim() - m_; }
  int size() const { return static_cast<int>(positions_.cols()); }
  QuadratureOrder order() const { return order_; }
  PlaneRule rule() const { return rule_; }

  const Mat& positions() const { return positions_; }
  Vec position(int i) const { return positions_.col(i); }
  double weight(int i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  const Plane& plane(int i) const { return planes_[i]; }
  int parent(int i) const { return parent_[i]; }
  const std::vector<int>& parents() const { return parent_; }
  /// n x (n-m) block of orthonormal normals for point i, column-major.
  const double* normal_data(int i) const { return normals_.data() + static_cast<std::size_t>(i) * ambient_dim() * codim(); }
  double max_parent_diameter() const { return max_parent_diameter_; }
  double total_weight() const {
    ExactSum s;
    for (double w : weights_) s += w;
    return s.value();
  }

  /// Same points scaled by lambda about the origin (weights scale by lambda^m).
  QuadratureCloud scaled(double lambda) const {
    QuadratureCloud c = *this;
    c.positions_ *= lambda;
    const double f = std::pow(lambda, m_);
    for (double& w : c.weights_) w *= f;
    c.max_parent_diameter_ *= lambda;
    return c;
  }

  /// Restriction to a subset of point indices (used by local energies).
  QuadratureCloud subset(const std::vector<int>& idx) const {
    QuadratureCloud c;
    c.m_ = m_;
    c.order_ = order_;
    c.rule_ = rule_;
    c.max_parent_diameter_ = max_parent_diameter_;
    c.positions_.resize(ambient_dim(), static_cast<Eigen::Index>(idx.size()));
    const int stride = ambient_dim() * codim();
    c.normals_.resize(idx.size() * stride);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const int i = idx[k];
      c.positions_.col(static_cast<Eigen::Index>(k)) = positions_.col(i);
      c.weights_.push_back(weights_[i]);
      c.planes_.push_back(planes_[i]);
      c.parent_.push_back(parent_[i]);
      std::copy(normal_data(i), normal_data(i) + stride, c.normals_.begin() + k * stride);
    }
    return c;
  }

  /// Builder used by quadrature(); exposed for hand-made clouds in tests.
  static QuadratureCloud from_points(int m, const Mat& positions, std::vector<double> weights,
                                     std::vector<Plane> planes, std::vector<int> parent,
                                     QuadratureOrder order = QuadratureOrder::centroid,
                                     PlaneRule rule = PlaneRule::flat, double max_parent_diameter = 0) {
    const auto count = static_cast<std::size_t>(positions.cols());
    require(weights.size() == count && planes.size() == count && parent.size() == count,
            ErrorKind::invalid_argument, "cloud arrays must have equal lengths");
    QuadratureCloud c;
    c.m_ = m;
    c.order_ = order;
    c.rule_ = rule;
    c.positions_ = positions;
    c.weights_ = std::move(weights);
    c.planes_ = std::move(planes);
    c.parent_ = std::move(parent);
    c.max_parent_diameter_ = max_parent_diameter;
    const int n = static_cast<int>(positions.rows());
    const int k = n - m;
    c.normals_.resize(count * n * k);
    for (std::size_t i = 0; i < count; ++i) {
      const Plane& p = c.planes_[i];
      require(p.ambient_dim() == n && p.dim() == m, ErrorKind::invalid_argument, "plane shape mismatch");
      require(c.weights_[i] > 0, ErrorKind::invalid_argument, "weights must be positive");
      if (k > 0) {
        const Mat nf = p.complement_frame();
        std::copy(nf.data(), nf.data() + n * k, c.normals_.begin() + i * n * k);
      }
    }
    return c;
  }

 private:
  int m_ = 1;
  QuadratureOrder order_ = QuadratureOrder::centroid;
  PlaneRule rule_ = PlaneRule::flat;
  Mat positions_;
  std::vector<double> weights_;
  std::vector<Plane> planes_;
  std::vector<int> parent_;
  std::vector<double> normals_;
  double max_parent_diameter_ = 0;
};

/// Area-weighted average of neighbour projectors (simplices sharing a vertex),
/// reduced to its top-m eigenspace.
inline std::vector<Plane> smoothed_planes(const SimplicialSet& s) {
  const int ns = s.simplex_count();
  const int m = s.intrinsic_dim();
  const int n = s.ambient_dim();
  std::vector<std::vector<int>> incident(s.vertex_count());
  for (int f = 0; f < ns; ++f) {
    for (int k = 0; k <= m; ++k) incident[s.simplices()(k, f)].push_back(f);
  }
  std::vector<Plane> out(ns);
  std::vector<int> nbrs;
  for (int f = 0; f < ns; ++f) {
    nbrs.clear();
    for (int k = 0; k <= m; ++k) {
      const auto& inc = incident[s.simplices()(k, f)];
      nbrs.insert(nbrs.end(), inc.begin(), inc.end());
    }
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    Mat acc = Mat::Zero(n, n);
    for (int g : nbrs) acc += s.measure(g) * s.plane(g).projector();
    Eigen::SelfAdjointEigenSolver<Mat> eig(acc);
    out[f] = Plane::span(eig.eigenvectors().rightCols(m));
  }
  return out;
}

/// Discretizes H^m on the simplices. centroid: one point per simplex with the
/// simplex measure. bary3: for m = 2, the points with barycentric coordinates
/// (2/3, 1/6, 1/6) and permutations, equal weights; for m = 1, Simpson nodes.
inline QuadratureCloud quadrature(const SimplicialSet& s, QuadratureOrder order = QuadratureOrder::centroid,
                                  PlaneRule rule = PlaneRule::flat) {
  const int m = s.intrinsic_dim();
  const int n = s.ambient_dim();
  require(order == QuadratureOrder::centroid || m <= 2, ErrorKind::invalid_argument,
          "bary3 quadrature is defined for m = 1 and m = 2 only");
  const std::vector<Plane> smooth = rule == PlaneRule::smoothed ? smoothed_planes(s) : std::vector<Plane>{};
  const int per = order == QuadratureOrder::centroid ? 1 : 3;
  const int ns = s.simplex_count();
  Mat pos(n, static_cast<Eigen::Index>(ns) * per);
  std::vector<double> w;
  std::vector<Plane> planes;
  std::vector<int> parent;
  w.reserve(static_cast<std::size_t>(ns) * per);
  planes.reserve(w.capacity());
  parent.reserve(w.capacity());
  int col = 0;
  for (int f = 0; f < ns; ++f) {
    const Plane& pl = rule == PlaneRule::smoothed ? smooth[f] : s.plane(f);
    const double meas = s.measure(f);
    auto emit = [&](const Vec& x, double weight) {
      pos.col(col++) = x;
      w.push_back(weight);
      planes.push_back(pl);
      parent.push_back(f);
    };
    if (order == QuadratureOrder::centroid) {
      emit(s.centroid(f), meas);
    } else if (m == 1) {
      const Vec a = s.vertex(s.simplices()(0, f));
      const Vec b = s.vertex(s.simplices()(1, f));
      emit(a, meas / 6.0);
      emit(0.5 * (a + b), 4.0 * meas / 6.0);
      emit(b, meas / 6.0);
    } else {
      const Vec a = s.vertex(s.simplices()(0, f));
      const Vec b = s.vertex(s.simplices()(1, f));
      const Vec c = s.vertex(s.simplices()(2, f));
      const double big = 2.0 / 3.0;
      const double small = 1.0 / 6.0;
      emit(big * a + small * b + small * c, meas / 3.0);
      emit(small * a + big * b + small * c, meas / 3.0);
      emit(small * a + small * b + big * c, meas / 3.0);
    }
  }
  return QuadratureCloud::from_points(m, pos, std::move(w), std::move(planes), std::move(parent), order, rule,
                                      s.max_simplex_diameter());
}

// ---------------------------------------------------------------------------
// Local measure and admissibility

/// H^m(S ∩ B(x, r)): exact clipping for m <= 2, centroid weight sum otherwise.
inline double local_measure(const SimplicialSet& s, const Vec& x, double r) {
  require(r > 0, ErrorKind::invalid_argument, "radius must be positive");
  const int m = s.intrinsic_dim();
  ExactSum acc;
  for (int f = 0; f < s.simplex_count(); ++f) {
    const double dc = (s.centroid(f) - x).norm();
    if (dc > r + s.simplex_diameter(f)) continue;
    if (m == 1) {
      acc += geom::segment_ball_length(s.vertex(s.simplices()(0, f)), s.vertex(s.simplices()(1, f)), x, r);
    } else if (m == 2) {
      const Vec a = s.vertex(s.simplices()(0, f));
      const Vec b = s.vertex(s.simplices()(1, f));
      const Vec c = s.vertex(s.simplices()(2, f));
      // fully inside: skip the clipping
      if ((a - x).norm() <= r && (b - x).norm() <= r && (c - x).norm() <= r) {
        acc += s.measure(f);
      } else {
        acc += geom::triangle_ball_area(a, b, c, x, r);
      }
    } else if (dc <= r) {
      acc += s.measure(f);
    }
  }
  return acc.value();
}

struct AdmissibilityViolation {
  std::string kind;  // "ahlfors" or "flatness"
  int point = -1;
  double radius = 0;
  double value = 0;
};

struct AdmissibilityReport {
  double ahlfors_K = std::numeric_limits<double>::infinity();
  std::map<double, double> delta_flatness;
  int flatness_probe_count = 0;
  std::vector<AdmissibilityViolation> violations;
};

struct AdmissibilityOptions {
  double flatness_threshold = 0.5;
};

/// Probes are evenly strided cloud points. ahlfors_K is the least observed
/// local_measure / r^m; delta_flatness(r) the largest |Q_{H_x}(y-x)|/|y-x|
/// over probes x and cloud points y within r.
inline AdmissibilityReport check_admissibility(const SimplicialSet& s, const QuadratureCloud& cloud,
                                               const std::vector<double>& radii, int probe_count,
                                               const AdmissibilityOptions& opt = {}) {
  require(cloud.size() > 0, ErrorKind::insufficient_data, "empty cloud");
  require(probe_count >= 1, ErrorKind::invalid_argument, "need at least one probe");
  for (double r : radii) {
    require(r > 0 && r <= s.extent(), ErrorKind::invalid_argument,
            "probe radii must lie in (0, diam]");
  }
  const int m = s.intrinsic_dim();
  const double ahlfors_floor = 0.5 * unit_ball_volume(m);
  AdmissibilityReport rep;
  KdTree tree(cloud.positions());
  const int count = std::min(probe_count, cloud.size());
  rep.flatness_probe_count = count;
  for (double r : radii) rep.delta_flatness[r] = 0.0;
  for (int k = 0; k < count; ++k) {
    const int i = static_cast<int>(static_cast<long long>(k) * cloud.size() / count);
    const Vec x = cloud.position(i);
    for (double r : radii) {
      const double ratio = local_measure(s, x, r) / std::pow(r, m);
      rep.ahlfors_K = std::min(rep.ahlfors_K, ratio);
      if (ratio < ahlfors_floor) rep.violations.push_back({"ahlfors", i, r, ratio});
      double worst = 0;
      for (int j : tree.ball(x, r)) {
        const Vec d = cloud.position(j) - x;
        const double len = d.norm();
        if (len == 0) continue;
        worst = std::max(worst, cloud.plane(i).reject_norm(d) / len);
      }
      rep.delta_flatness[r] = std::max(rep.delta_flatness[r], worst);
      if (worst > opt.flatness_threshold) rep.violations.push_back({"flatness", i, r, worst});
    }
  }
  return rep;
}

}  // namespace tpsurf
