#include "carnot/kernels.hpp"

#include <algorithm>
#include <limits>

#ifdef CARNOT_HAVE_OPENMP
#include <omp.h>
#endif

namespace carnot::kernels {

namespace {

// Row i of the upper triangle: max over j > i.
double row_max(const SpatialIndex& pts, std::span<const int> m, std::size_t i) {
  const Metric& metric = pts.metric();
  double best = 0.0;
  const double* x = pts.point(m[i]);
  for (std::size_t j = i + 1; j < m.size(); ++j) best = std::max(best, metric.dist(x, pts.point(m[j])));
  return best;
}

struct RowReport {
  long long pairs = 0;
  long long violations = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  PairViolation worst{-1, -1, std::numeric_limits<double>::infinity()};
};

RowReport certify_row(const SpatialIndex& dom, const SpatialIndex& img, std::span<const int> m,
                      std::size_t i, double c, double min_dist) {
  RowReport r;
  const double* x = dom.point(m[i]);
  const double* fx = img.point(m[i]);
  for (std::size_t j = i + 1; j < m.size(); ++j) {
    double dg = dom.metric().dist(x, dom.point(m[j]));
    if (dg == 0.0 || dg <= min_dist) continue;
    double ratio = img.metric().dist(fx, img.point(m[j])) / dg;
    ++r.pairs;
    if (ratio < c) ++r.violations;
    if (ratio < r.min_ratio) {
      r.min_ratio = ratio;
      r.worst = {m[i], m[j], ratio};
    }
  }
  return r;
}

// Rows merge in index order so the worst pair is the first minimum either way.
void merge(PairReport& into, const RowReport& r) {
  into.pairs += r.pairs;
  into.violations += r.violations;
  if (r.min_ratio < into.min_ratio) {
    into.min_ratio = r.min_ratio;
    into.worst = r.worst;
  }
}

PairReport empty_report() {
  PairReport p;
  p.min_ratio = std::numeric_limits<double>::infinity();
  p.worst.ratio = p.min_ratio;
  return p;
}

}  // namespace

namespace serial {

double diameter(const SpatialIndex& pts, std::span<const int> members) {
  double best = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) best = std::max(best, row_max(pts, members, i));
  return best;
}

PairReport certify_pairs(const SpatialIndex& domain, const SpatialIndex& image,
                         std::span<const int> members, double c, double min_dist) {
  PairReport out = empty_report();
  for (std::size_t i = 0; i < members.size(); ++i) merge(out, certify_row(domain, image, members, i, c, min_dist));
  return out;
}

}  // namespace serial

namespace omp {

double diameter(const SpatialIndex& pts, std::span<const int> members) {
  const long long n = static_cast<long long>(members.size());
  double best = 0.0;
#ifdef CARNOT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 16) reduction(max : best)
#endif
  for (long long i = 0; i < n; ++i) best = std::max(best, row_max(pts, members, i));
  return best;
}

PairReport certify_pairs(const SpatialIndex& domain, const SpatialIndex& image,
                         std::span<const int> members, double c, double min_dist) {
  const long long n = static_cast<long long>(members.size());
  std::vector<RowReport> rows(members.size());
#ifdef CARNOT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (long long i = 0; i < n; ++i) rows[i] = certify_row(domain, image, members, i, c, min_dist);
  PairReport out = empty_report();
  for (const auto& r : rows) merge(out, r);
  return out;
}

}  // namespace omp

bool openmp_enabled() {
#ifdef CARNOT_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef CARNOT_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace carnot::kernels
