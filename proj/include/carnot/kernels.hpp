#pragma once

#include <span>

#include "carnot/lattice.hpp"

// Hot loops in two flavours. `serial` is the reference; `omp` must return
// bit-identical results for the same inputs.
namespace carnot::kernels {

/// Index pair (i, j) of a violating pair and its observed distance ratio.
struct PairViolation {
  int a = -1;
  int b = -1;
  double ratio = 0.0;
};

/// Summary of a lower-Lipschitz check: every pair in a piece with
/// d_G(x, y) > min_dist must satisfy d_H(f x, f y) >= c * d_G(x, y).
struct PairReport {
  long long pairs = 0;
  long long violations = 0;
  double min_ratio = 0.0;  // min d_H / d_G over checked pairs (+inf when none)
  PairViolation worst;
};

namespace serial {
double diameter(const SpatialIndex& pts, std::span<const int> members);
PairReport certify_pairs(const SpatialIndex& domain, const SpatialIndex& image,
                         std::span<const int> members, double c, double min_dist = 0.0);
}  // namespace serial

namespace omp {
double diameter(const SpatialIndex& pts, std::span<const int> members);
PairReport certify_pairs(const SpatialIndex& domain, const SpatialIndex& image,
                         std::span<const int> members, double c, double min_dist = 0.0);
}  // namespace omp

/// True when the library was built with OpenMP.
bool openmp_enabled();
int max_threads();

}  // namespace carnot::kernels
