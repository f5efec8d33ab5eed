#pragma once

#include "tpsurf/core.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace tpsurf {

/// Median-split tree over the columns of an n x N point matrix. Nodes own a
/// contiguous range of the permutation `order()` and a bounding ball around the
/// box center. Used both for ball queries and as the cluster tree of the
/// accelerated energy.
class KdTree {
 public:
  struct Node {
    int begin = 0;
    int end = 0;
    int left = -1;
    int right = -1;
    Vec center;
    double radius = 0;
    bool leaf() const { return left < 0; }
    int size() const { return end - begin; }
  };

  KdTree() = default;

  explicit KdTree(const Mat& points, int leaf_size = 16) : points_(&points), leaf_size_(leaf_size) {
    order_.resize(points.cols());
    std::iota(order_.begin(), order_.end(), 0);
    if (points.cols() > 0) build(0, static_cast<int>(points.cols()));
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& order() const { return order_; }
  int root() const { return nodes_.empty() ? -1 : 0; }

  /// Indices of points within the closed ball B(x, r), in ascending order.
  std::vector<int> ball(const Vec& x, double r) const {
    std::vector<int> out;
    if (nodes_.empty()) return out;
    std::vector<int> stack{0};
    const double r2 = r * r;
    while (!stack.empty()) {
      const Node& nd = nodes_[stack.back()];
      stack.pop_back();
      if ((nd.center - x).norm() > r + nd.radius) continue;
      if (nd.leaf()) {
        for (int k = nd.begin; k < nd.end; ++k) {
          const int i = order_[k];
          if ((points_->col(i) - x).squaredNorm() <= r2) out.push_back(i);
        }
      } else {
        stack.push_back(nd.left);
        stack.push_back(nd.right);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  int build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const Eigen::Index n = points_->rows();
    Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
    Vec hi = -lo;
    for (int k = begin; k < end; ++k) {
      lo = lo.cwiseMin(points_->col(order_[k]));
      hi = hi.cwiseMax(points_->col(order_[k]));
    }
    Vec center = 0.5 * (lo + hi);
    double radius = 0;
    for (int k = begin; k < end; ++k) radius = std::max(radius, (points_->col(order_[k]) - center).norm());
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    nodes_[id].center = center;
    nodes_[id].radius = radius;
    if (end - begin > leaf_size_) {
      Eigen::Index axis = 0;
      (hi - lo).maxCoeff(&axis);
      const int mid = begin + (end - begin) / 2;
      // ties broken by index so the tree is a pure function of the input
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](int a, int b) {
                         const double pa = (*points_)(axis, a);
                         const double pb = (*points_)(axis, b);
                         return pa < pb || (pa == pb && a < b);
                       });
      const int l = build(begin, mid);
      const int r = build(mid, end);
      nodes_[id].left = l;
      nodes_[id].right = r;
    }
    return id;
  }

  const Mat* points_ = nullptr;
  int leaf_size_ = 16;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace tpsurf
