#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "json.hpp"

#include "carnot/lattice.hpp"

namespace carnot {

struct Cube {
  int scale = 0;
  int center = -1;  // lattice index z_Q
  int parent = -1;
  std::vector<int> children;
  std::vector<int> points;  // sorted lattice indices
};

/// Dyadic cube hierarchy on a lattice sample.
///
/// Scale k_max holds one cube. Going down, each parent P gets a greedy
/// tau^k-separated net of centers taken from P (its own center first, then
/// lattice order). A point qualifies as a center only when its open
/// tau^(k-1) ball stays inside P. Every point of P joins its nearest center,
/// ties going to the smaller lattice index.
class CubeTree {
 public:
  /// Cubes larger than this get a double-sweep diameter (a lower bound).
  static constexpr std::size_t kExactDiameterLimit = 2048;

  static std::shared_ptr<const CubeTree> build(LatticePtr lattice, double tau, int k_min, int k_max);
  /// (k_min, k_max) with k_max minimal for tau^k_max >= 2R and k_min minimal for tau^k_min >= h.
  static std::pair<int, int> default_scales(const GradedLattice& lattice, double tau);

  CubeTree(const CubeTree&) = delete;
  CubeTree& operator=(const CubeTree&) = delete;

  const GradedLattice& lattice() const { return *lattice_; }
  const LatticePtr& lattice_ptr() const { return lattice_; }
  double tau() const { return tau_; }
  int k_min() const { return k_min_; }
  int k_max() const { return k_max_; }
  int root() const { return 0; }
  int num_cubes() const { return static_cast<int>(cubes_.size()); }
  const Cube& cube(int id) const { return cubes_.at(id); }
  const std::vector<int>& cubes_at(int k) const { return by_scale_.at(k - k_min_); }
  int cube_of(int point, int k) const { return membership_[k - k_min_][point]; }
  /// l(Q) = tau^j(Q)
  double side(int id) const;
  double diam(int id) const { return diam_[id]; }
  bool diam_exact(int id) const { return diam_exact_[id] != 0; }
  /// Haar measure of the cells of Q.
  double measure(int id) const;
  /// Lower bound on the distance between two cubes from first-layer bounding boxes.
  double separation_lower_bound(int a, int b) const;

  nlohmann::json dump(bool with_points) const;

 private:
  CubeTree() = default;
  void compute_diameters();
  void compute_boxes();

  LatticePtr lattice_;
  double tau_ = 2.0;
  int k_min_ = 0, k_max_ = 0;
  std::vector<Cube> cubes_;
  std::vector<std::vector<int>> by_scale_;
  std::vector<std::vector<int>> membership_;
  std::vector<double> diam_;
  std::vector<char> diam_exact_;
  std::vector<double> box_lo_, box_hi_;  // first-layer bounding boxes, m_1 per cube
};

using CubeTreePtr = std::shared_ptr<const CubeTree>;

struct CubeAudit {
  bool partition = true;
  bool nesting = true;
  long long inner_violations = 0;  // points of B(z_Q, tau^(k-1)) outside Q
  long long outer_violations = 0;  // points of Q outside B(z_Q, tau^(k+1))
  int cubes = 0;
  bool ok() const { return partition && nesting && inner_violations == 0 && outer_violations == 0; }
  nlohmann::json to_json() const;
};

CubeAudit audit_tree(const CubeTree& tree);

/// Delta(S): S and every cube below it, in breadth-first order.
std::vector<int> descendants(const CubeTree& tree, int s);

/// Whether dist(y, Q) <= radius.
bool near_cube(const CubeTree& tree, int y, int id, double radius);
/// Lattice points within (lambda - 1) diam Q of Q, sorted.
std::vector<int> dilate_cube(const CubeTree& tree, int id, double lambda);
/// Same-scale cubes meeting 2Q, ascending ids; always contains id.
std::vector<int> hat_cube(const CubeTree& tree, int id);
/// Max over cubes at scale k of the number of same-scale centers within
/// C_Q (2 tau^(k+1) + diam Q) of z_Q, minus one. Bounds |Q^| - 1.
int doubling_bound(const CubeTree& tree, int k);

struct SmallestCube {
  int cube = 0;
  double ratio = 0.0;  // d(x, y) / diam Q, +inf when diam Q = 0
};
/// Smallest cube Q with x in Q and y in 2Q (the root when nothing smaller works).
SmallestCube smallest_cube_2Q(const CubeTree& tree, int x, int y);

struct BEstimate {
  double b = 0.1;
  long long pairs = 0;
  int worst_x = -1, worst_y = -1;
};
/// Largest b <= 1/10 with d(x, y) >= 10 b diam Q over sampled pairs. Half the
/// pairs are uniform; the other half are drawn inside balls of random scale.
/// Pairs whose smallest cube is the root carry no constraint and are skipped;
/// sampling continues until `pairs` constrained pairs are seen.
BEstimate estimate_b(const CubeTree& tree, int pairs, std::uint64_t seed);

struct BoundaryStats {
  int scale = 0;
  std::vector<double> ts;
  std::vector<std::vector<double>> fraction;  // [cube][t]: share of points within t l(Q) of the complement
  std::vector<int> cubes;
  /// Share of cubes whose fraction strictly drops along ts.
  double decreasing_share() const;
  nlohmann::json to_json() const;
};
BoundaryStats boundary_smallness(const CubeTree& tree, int scale, const std::vector<double>& ts);

}  // namespace carnot
