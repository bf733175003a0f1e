#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "carnot/cubes.hpp"
#include "carnot/maps.hpp"

namespace carnot {

/// Radii top * 2^-j, j = 0..levels, stopping above floor when floor > 0.
/// A nonempty ball never costs less than (2 floor)^N: each sample stands for
/// a cell of that radius. floor = 0 treats the input as a finite set.
struct ContentGrid {
  double top = 0.0;  // 0 picks the root radius of the ambient set
  double floor = 0.0;
  int max_levels = 24;
};

struct CoverBall {
  int center = -1;  // ambient index
  double radius = 0.0;
};

struct ContentEstimate {
  double upper = 0.0;
  double dimension = 0.0;
  double floor = 0.0;
  std::vector<double> radius_grid;
  /// Cost of the cover by every nonempty node of one level.
  std::vector<double> per_radius;
  std::vector<CoverBall> cover;
  long long points = 0;
  nlohmann::json to_json(bool with_cover) const;
};

/// Nested greedy nets over an ambient point set. A node at level j is the set
/// of points sharing nearest net centers at levels 0..j; it sits inside the
/// ball of radius rho about its fixed center, where rho is measured on the
/// queried subset only. The estimate is the cheapest mix of node balls
/// (keep a node whole or split it into children), so it is monotone under
/// subsets and subadditive over unions.
class ContentHierarchy {
 public:
  ContentHierarchy(const SpatialIndex& ambient, ContentGrid grid);

  const SpatialIndex& ambient() const { return *ambient_; }
  int levels() const { return static_cast<int>(radii_.size()); }
  const std::vector<double>& radii() const { return radii_; }
  double floor() const { return grid_.floor; }
  int node_count(int level) const { return static_cast<int>(centers_[level].size()); }

  /// subset holds ambient indices; duplicates are ignored.
  ContentEstimate estimate(std::span<const int> subset, double N) const;

 private:
  const SpatialIndex* ambient_;
  ContentGrid grid_;
  std::vector<double> radii_;
  int root_center_ = -1;
  // per level: node of each ambient point, node parent (level - 1), node center
  std::vector<std::vector<int>> node_of_;
  std::vector<std::vector<int>> parent_;
  std::vector<std::vector<int>> centers_;
};

/// One-shot estimate with the hierarchy built on the points themselves.
ContentEstimate content_upper(const SpatialIndex& points, double N, ContentGrid grid = {});
ContentEstimate content_upper(const SpatialIndex& points, std::span<const int> subset, double N,
                              ContentGrid grid = {});

/// Whether every subset point lies in some cover ball.
bool cover_contains(const SpatialIndex& points, std::span<const int> subset, const std::vector<CoverBall>& cover);

struct NetCover {
  double eps = 0.0;
  double ell = 0.0;
  double separation = 0.0;  // eps * ell
  std::vector<int> net;     // indices into the image sample
  int samples = 0;          // image points of the ball
  bool covers = false;      // every image point within separation of the net
  double min_pair = 0.0;    // smallest net pairwise distance
  int count() const { return static_cast<int>(net.size()); }
  nlohmann::json to_json() const;
};

/// Greedy maximal (eps ell)-separated net, in lattice order, over f of the
/// lattice points in B(center, ell). Net points are pairwise >= eps ell apart
/// and every image point is within eps ell of one.
NetCover epsilon_net_cover(const MapSample& sample, const double* center, double ell, double eps);

/// Least-squares slope of log count against log(1 / eps).
double loglog_slope(const std::vector<double>& eps, const std::vector<int>& counts);

struct WeakBilipResult {
  bool pass = true;
  bool vacuous = false;
  bool exhaustive = true;
  long long pairs = 0;
  double threshold = 0.0;  // b diam Q
  double min_ratio = 0.0;
  int x = -1, y = -1;      // worst pair; a violating pair when !pass
  nlohmann::json to_json() const;
};

/// Tests d_H(f x, f y) > delta d(x, y) on pairs of 2Q with d(x, y) > b diam Q:
/// exhaustively when the pair count is at most exhaustive_limit, otherwise on
/// `samples` random admissible pairs.
WeakBilipResult weak_bilip_check(const MapSample& sample, const CubeTree& tree, int id, double delta, double b,
                                 long long exhaustive_limit = 10'000'000, long long samples = 100'000,
                                 std::uint64_t seed = 1);

}  // namespace carnot
