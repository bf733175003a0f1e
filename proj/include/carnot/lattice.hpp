#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "carnot/group.hpp"

namespace carnot {

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::size_t estimate, std::size_t cap)
      : std::runtime_error("lattice would hold " + std::to_string(estimate) + " points, cap is " +
                           std::to_string(cap)),
        estimate(estimate), cap(cap) {}
  std::size_t estimate;
  std::size_t cap;
};

/// Bound on |log(e^U e^V) - U - V| given |U| <= unorm and |V| <= vnorm
/// (Euclidean norms on exponential coordinates).
double bch_cross_bound(const StratifiedAlgebra& alg, double unorm, double vnorm);

/// Exact ball queries for d(x, y) = N(x^-1 y) over a fixed point cloud.
///
/// A ball B(x, r) is contained in a coordinate box around x: the first layer
/// moves by at most r / lambda_1 and layer k by at most (r / lambda_k)^k plus
/// a bound on the BCH cross terms. A grid over the first layer (and the first
/// top-layer coordinate) enumerates the box; survivors are checked with the metric.
class SpatialIndex {
 public:
  SpatialIndex(Metric metric, std::vector<double> coords);

  int size() const { return n_; }
  int dim() const { return dim_; }
  const double* point(int i) const { return coords_.data() + static_cast<std::size_t>(i) * dim_; }
  const Metric& metric() const { return metric_; }

  /// f(index, distance) for every point with dist(x, point) <= r.
  template <typename F>
  void for_each_within(const double* x, double r, F&& f) const {
    std::vector<double> lo(dim_), hi(dim_);
    box(x, r, lo.data(), hi.data());
    visit_box(lo.data(), hi.data(), [&](int idx) {
      double d = metric_.dist(x, point(idx));
      if (d <= r) f(idx, d);
    });
  }

  /// Stops early when f returns true; returns whether it did.
  template <typename F>
  bool any_within(const double* x, double r, F&& pred) const {
    return any_within_if(x, r, [](int) { return true; }, pred);
  }

  /// As any_within, skipping indices rejected by `keep` before measuring them.
  template <typename G, typename F>
  bool any_within_if(const double* x, double r, G&& keep, F&& pred) const {
    std::vector<double> lo(dim_), hi(dim_);
    box(x, r, lo.data(), hi.data());
    bool found = false;
    visit_box(lo.data(), hi.data(), [&](int idx) {
      if (found || !keep(idx)) return;
      double d = metric_.dist(x, point(idx));
      if (d <= r && pred(idx, d)) found = true;
    });
    return found;
  }

  std::vector<int> within(const double* x, double r) const;
  /// (index, distance) of the nearest point; smallest index on ties.
  std::pair<int, double> nearest(const double* x) const;

 private:
  void box(const double* x, double r, double* lo, double* hi) const;

  template <typename F>
  void visit_box(const double* lo, const double* hi, F&& f) const {
    const int g = static_cast<int>(grid_coords_.size());
    std::vector<int> a(g), b(g), cur(g);
    for (int k = 0; k < g; ++k) {
      a[k] = cell_of(k, lo[grid_coords_[k]]);
      b[k] = cell_of(k, hi[grid_coords_[k]]);
      if (a[k] > b[k]) return;
      cur[k] = a[k];
    }
    while (true) {
      std::size_t flat = 0;
      for (int k = 0; k < g; ++k) flat = flat * counts_[k] + cur[k];
      for (int s = cell_start_[flat]; s < cell_start_[flat + 1]; ++s) {
        const int idx = order_[s];
        const double* p = point(idx);
        bool inside = true;
        for (int c = 0; c < dim_; ++c) {
          if (p[c] < lo[c] || p[c] > hi[c]) {
            inside = false;
            break;
          }
        }
        if (inside) f(idx);
      }
      int k = g - 1;
      while (k >= 0 && cur[k] == b[k]) {
        cur[k] = a[k];
        --k;
      }
      if (k < 0) break;
      ++cur[k];
    }
  }

  int cell_of(int k, double v) const {
    double t = (v - origin_[k]) / cell_[k];
    if (t < 0) return 0;
    if (t >= counts_[k]) return counts_[k] - 1;
    return static_cast<int>(t);
  }

  Metric metric_;
  int dim_;
  int n_;
  std::vector<double> coords_;
  std::vector<int> grid_coords_;
  std::vector<double> origin_, cell_;
  std::vector<int> counts_;
  std::vector<int> cell_start_, order_;
  double bracket_norm_ = 0.0;
  // cross_[n][a]: sum of |Dynkin coefficient| over words of length n with a letters U
  std::vector<std::vector<double>> cross_;
};

/// Points center * p for offsets p whose layer-j coordinates lie on the grid
/// h^j Z and N(p) <= R. Every cell has Haar volume h^N.
class GradedLattice {
 public:
  static std::shared_ptr<const GradedLattice> build(AlgebraPtr alg, NormConfig cfg,
                                                    const FloatPoint& center, double radius, double h,
                                                    std::size_t max_points = 2000000);
  /// Exact point count of the lattice build() would produce.
  static std::size_t count(const StratifiedAlgebra& alg, const NormConfig& cfg, double radius, double h);

  GradedLattice(const GradedLattice&) = delete;
  GradedLattice& operator=(const GradedLattice&) = delete;

  const AlgebraPtr& algebra() const { return alg_; }
  const Metric& metric() const { return index_->metric(); }
  const NormConfig& norm_config() const { return index_->metric().config(); }
  int size() const { return index_->size(); }
  int dim() const { return alg_->dim(); }
  const double* point(int i) const { return index_->point(i); }
  FloatPoint group_point(int i) const;
  const FloatPoint& center() const { return center_; }
  int center_index() const { return center_index_; }
  double radius() const { return radius_; }
  double h() const { return h_; }
  int homogeneous_dim() const { return hom_dim_; }
  /// Haar volume of one lattice cell, h^N.
  double cell_volume() const { return cell_volume_; }
  const SpatialIndex& index() const { return *index_; }

  /// Max over random ball points of the distance to the nearest lattice point.
  double covering_radius(int samples, std::uint64_t seed) const;

 private:
  GradedLattice() = default;
  AlgebraPtr alg_;
  FloatPoint center_;
  double radius_ = 0.0;
  double h_ = 0.0;
  int hom_dim_ = 0;
  double cell_volume_ = 0.0;
  int center_index_ = 0;
  std::unique_ptr<SpatialIndex> index_;
};

using LatticePtr = std::shared_ptr<const GradedLattice>;

}  // namespace carnot
