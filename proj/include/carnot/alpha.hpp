#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "json.hpp"

#include "carnot/cubes.hpp"
#include "carnot/maps.hpp"

namespace carnot {

struct AlphaParams {
  double p = 2.0;
  double L = 1.0;
  int direction_samples = 8;
  int translate_samples = 16;
  /// Node spacing along a line, as a fraction of L l(Q).
  double segment_step = 1.0 / 16;
  /// Stratified angles when the first layer is 2-dimensional.
  bool low_discrepancy = true;
  void validate() const;
};

/// Images of f at nodes a + i * step, i < n, along t -> base exp(t v).
struct SegmentSample {
  double a = 0.0;
  double step = 0.0;
  int n = 0;
  int cod_dim = 0;
  std::vector<double> images;
  const Metric* target = nullptr;

  double t(int i) const { return a + i * step; }
  const double* image(int i) const { return images.data() + static_cast<std::size_t>(i) * cod_dim; }
};

/// v holds first-layer coordinates and must have unit length.
SegmentSample sample_segment(const LipschitzMap& f, const double* base, std::span<const double> v, double a,
                             double b, int nodes);

/// The p-parallelogram excess for images f(x), f((x+y)/2), f(y) with |y - x| = span.
double partial_p(const Metric& target, const double* fx, const double* fm, const double* fy, double span,
                 double p);
/// Same on segment nodes i < j; the midpoint snaps to node (i + j) / 2.
double partial_p(const SegmentSample& s, int i, int j, double p);

/// Uniform quadrature of the double integral over x < y on an odd node count:
/// pairs sit on the odd nodes (spacing 2 step), so every midpoint is a node.
double alpha_segment(const SegmentSample& s, double p, double* min_partial = nullptr);

struct AlphaCube {
  double value = 0.0;
  int directions = 0;
  long long lines = 0;
  long long lines_hit = 0;
  double min_partial = std::numeric_limits<double>::infinity();
  bool no_hits = false;
};

/// Monte-Carlo alpha over lines through the ball of radius L * side about z.
AlphaCube alpha_ball(const LipschitzMap& f, const double* z, double side, const AlphaParams& params,
                     std::uint64_t seed);
AlphaCube alpha_cube(const LipschitzMap& f, const CubeTree& tree, int id, const AlphaParams& params,
                     std::uint64_t seed);
/// Per-cube stream so results do not depend on evaluation order.
std::uint64_t cube_seed(std::uint64_t seed, int id);

/// Results align with ids.
namespace kernels {
namespace serial {
std::vector<AlphaCube> alpha_cubes(const LipschitzMap& f, const CubeTree& tree, std::span<const int> ids,
                                   const AlphaParams& params, std::uint64_t seed);
}
namespace omp {
std::vector<AlphaCube> alpha_cubes(const LipschitzMap& f, const CubeTree& tree, std::span<const int> ids,
                                   const AlphaParams& params, std::uint64_t seed);
}
}  // namespace kernels

struct CarlesonReport {
  struct Scale {
    int scale = 0;
    int cubes = 0;
    double weighted = 0.0;  // sum alpha |Q| / |S|
    double max_alpha = 0.0;
  };
  int root = 0;
  double measure = 0.0;  // |S|
  double total = 0.0;    // sum over Delta(S) of alpha |Q| / |S|
  double min_summand = 0.0;
  std::vector<Scale> per_scale;
  nlohmann::json to_json() const;
};

/// alpha is indexed by cube id and must cover Delta(s).
CarlesonReport carleson_sum(const CubeTree& tree, int s, const std::vector<AlphaCube>& alpha);

struct TargetCertificate {
  double min_partial = std::numeric_limits<double>::infinity();
  long long evaluations = 0;
  bool ok() const { return min_partial >= -1e-9; }
  nlohmann::json to_json() const;
};

/// Minimum of the pairwise excess over random segments inside B(0, radius).
TargetCertificate target_certificate(const LipschitzMap& f, double radius, const AlphaParams& params,
                                     int segments, std::uint64_t seed);

/// cube,scale,alpha,points,measure,directions,lines,lines_hit; alpha is indexed by cube id.
void write_alpha_csv(std::ostream& out, const CubeTree& tree, std::span<const int> ids,
                     const std::vector<AlphaCube>& alpha);

}  // namespace carnot
