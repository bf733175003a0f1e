#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "carnot/content.hpp"
#include "carnot/presets.hpp"

using namespace carnot;

namespace {

LatticePtr heisenberg_lattice(double h) {
  auto alg = heisenberg_algebra();
  return GradedLattice::build(alg, NormConfig::ones(2), FloatPoint::identity(alg), 1.0, h);
}

MapPtr identity_map() {
  auto alg = heisenberg_algebra();
  return make_hom_map(hom_from_first_layer(ExactMatrix::identity(2), alg, alg), NormConfig::ones(2),
                      NormConfig::ones(2));
}

MapPtr projection_map() {
  auto alg = heisenberg_algebra();
  ExactMatrix m(1, 2);
  m(0, 0) = QSqrt2(1);
  return make_hom_map(hom_from_first_layer(m, alg, abelian_algebra(1)), NormConfig::ones(2), NormConfig::ones(1));
}

std::vector<int> random_subset(int n, double keep, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(keep);
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (coin(rng)) out.push_back(i);
  }
  if (out.empty()) out.push_back(0);
  return out;
}

}  // namespace

TEST_CASE("content of a single point is zero") {
  auto alg = abelian_algebra(2);
  SpatialIndex one(Metric(alg, NormConfig::ones(1)), {0.3, -0.2});
  auto est = content_upper(one, 4.0);
  CHECK(est.upper == 0.0);
  SpatialIndex twice(Metric(alg, NormConfig::ones(1)), {0.3, -0.2, 0.3, -0.2});
  CHECK(content_upper(twice, 4.0).upper == 0.0);
  CHECK_THROWS_AS(content_upper(one, std::span<const int>{}, 4.0), std::invalid_argument);
}

TEST_CASE("content of a full ball sample is at most one ball") {
  auto lat = heisenberg_lattice(0.25);
  auto est = content_upper(lat->index(), 4.0, {0.0, 0.25});
  CHECK(est.upper <= std::pow(2.0, 4) + 1e-12);
  CHECK(est.upper > 0.0);
  std::vector<int> all(lat->size());
  for (int i = 0; i < lat->size(); ++i) all[i] = i;
  CHECK(cover_contains(lat->index(), all, est.cover));
}

TEST_CASE("content of a short horizontal segment image is small") {
  auto alg = heisenberg_algebra();
  auto fold = make_fold_map(alg, NormConfig::ones(2), {0});
  const FloatPoint x(alg, {-0.4, 0.1, 0.2});
  const double v[2] = {0.6, 0.8};
  std::vector<double> coords;
  std::vector<double> out(2);
  for (int i = 0; i <= 1000; ++i) {
    auto p = horizontal_point(x, v, i / 1000.0);
    fold->eval(p.coords.data(), out.data());
    coords.insert(coords.end(), out.begin(), out.end());
  }
  SpatialIndex img(fold->target_metric(), coords);
  auto est = content_upper(img, 4.0, {0.0, 1.0 / 16});
  CHECK(est.upper <= 0.01);
  std::vector<int> all(img.size());
  for (int i = 0; i < img.size(); ++i) all[i] = i;
  CHECK(cover_contains(img, all, est.cover));
  // the one-level covers bound the mixed cover from above
  for (double t : est.per_radius) CHECK(est.upper <= t + 1e-15);
}

TEST_CASE("content is monotone and subadditive on a shared hierarchy") {
  auto lat = heisenberg_lattice(0.25);
  ContentHierarchy H(lat->index(), {0.0, 0.125});
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_subset(lat->size(), 0.2, rng);
    auto b = random_subset(lat->size(), 0.2, rng);
    std::vector<int> sub;
    for (int i : a) {
      if (i % 3 != 0) sub.push_back(i);
    }
    if (sub.empty()) sub.push_back(a.front());
    std::vector<int> uni;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
    const double ca = H.estimate(a, 4.0).upper;
    const double cb = H.estimate(b, 4.0).upper;
    CHECK(H.estimate(sub, 4.0).upper <= ca + 1e-12);
    CHECK(H.estimate(uni, 4.0).upper <= ca + cb + 1e-9);
    auto e = H.estimate(uni, 4.0);
    CHECK(cover_contains(lat->index(), uni, e.cover));
  }
}

TEST_CASE("1-Lipschitz images do not gain content") {
  auto lat = heisenberg_lattice(0.25);
  auto fold = make_fold_map(heisenberg_algebra(), NormConfig::ones(2), {0});
  MapSample s(fold, lat);
  const ContentGrid grid{0.0, 0.125};
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto e = random_subset(lat->size(), 0.1 + 0.08 * trial, rng);
    const double dom = content_upper(lat->index(), e, 4.0, grid).upper;
    const double img = content_upper(s.image(), e, 4.0, grid).upper;
    CHECK(img <= dom + 1e-9);
  }
}

TEST_CASE("epsilon nets: identity, separation and covering") {
  auto lat = heisenberg_lattice(0.25);
  MapSample id(identity_map(), lat);
  const double origin[3] = {0.0, 0.0, 0.0};
  auto net = epsilon_net_cover(id, origin, 1.0, 1.0);
  CHECK(net.count() >= 1);
  CHECK(net.count() <= 32);
  CHECK(net.covers);
  for (double eps : {0.5, 0.25}) {
    auto n2 = epsilon_net_cover(id, origin, 1.0, eps);
    CHECK(n2.covers);
    CHECK(n2.min_pair >= n2.separation);
    CHECK(n2.samples == lat->size());
  }
  CHECK_THROWS_AS(epsilon_net_cover(id, origin, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("epsilon nets of a collapsing projection grow slowly") {
  auto lat = heisenberg_lattice(0.125);
  MapSample proj(projection_map(), lat);
  const double origin[3] = {0.0, 0.0, 0.0};
  std::vector<double> eps{0.25, 0.125, 0.0625};
  std::vector<int> counts;
  for (double e : eps) {
    auto net = epsilon_net_cover(proj, origin, 1.0, e);
    CHECK(net.covers);
    CHECK(net.min_pair >= net.separation);
    // the image is an interval of length 2: at most 2 / eps + 1 separated points
    CHECK(net.count() <= static_cast<int>(2.0 / e) + 1);
    counts.push_back(net.count());
  }
  CHECK(counts[0] <= counts[1]);
  CHECK(counts[1] <= counts[2]);
  const double slope = loglog_slope(eps, counts);
  CHECK(slope <= 3.3);
  CHECK(slope >= 0.0);
  CHECK(loglog_slope({0.5, 0.25}, {2, 8}) == doctest::Approx(2.0));
}

TEST_CASE("weak biLipschitz check on identity, constant and fold") {
  auto alg = heisenberg_algebra();
  auto lat = heisenberg_lattice(0.25);
  auto [kmin, kmax] = CubeTree::default_scales(*lat, 4.0);
  auto tree = CubeTree::build(lat, 4.0, kmin, kmax);
  // a scale-0 cube whose center sits on the fold locus
  int straddle = -1;
  for (int id : tree->cubes_at(0)) {
    if (std::abs(lat->point(tree->cube(id).center)[0]) < 1e-12) {
      straddle = id;
      break;
    }
  }
  REQUIRE(straddle >= 0);

  MapSample id(identity_map(), lat);
  auto ok = weak_bilip_check(id, *tree, straddle, 0.5, 0.1);
  CHECK(ok.pass);
  CHECK(ok.exhaustive);
  CHECK_FALSE(ok.vacuous);
  CHECK(ok.min_ratio == doctest::Approx(1.0).epsilon(1e-12));

  MapSample cst(make_constant_map(alg, NormConfig::ones(2), alg, NormConfig::ones(2), {0.0, 0.0, 0.0}), lat);
  auto bad = weak_bilip_check(cst, *tree, straddle, 0.5, 0.1);
  CHECK_FALSE(bad.pass);
  CHECK(bad.min_ratio == 0.0);

  // vertical pairs collapse under the Heisenberg fold
  MapSample hfold(make_fold_map(alg, NormConfig::ones(2), {0}), lat);
  CHECK_FALSE(weak_bilip_check(hfold, *tree, straddle, 0.1, 0.1).pass);

  // the plane fold collapses exactly the mirror pairs
  auto plane = abelian_algebra(2);
  auto plat = GradedLattice::build(plane, NormConfig::ones(1), FloatPoint::identity(plane), 1.0, 1.0 / 32);
  auto [pmin, pmax] = CubeTree::default_scales(*plat, 4.0);
  auto ptree = CubeTree::build(plat, 4.0, pmin, pmax);
  int across = -1;
  for (int id : ptree->cubes_at(-1)) {
    if (std::abs(plat->point(ptree->cube(id).center)[0]) < 1e-12) {
      across = id;
      break;
    }
  }
  REQUIRE(across >= 0);
  MapSample fold(make_fold_map(plane, NormConfig::ones(1), {0}), plat);
  auto f = weak_bilip_check(fold, *ptree, across, 0.1, 0.1);
  CHECK_FALSE(f.pass);
  REQUIRE(f.x >= 0);
  const double* x = plat->point(f.x);
  const double* y = plat->point(f.y);
  CHECK(x[0] == doctest::Approx(-y[0]));
  CHECK(x[0] != 0.0);
  CHECK(x[1] == doctest::Approx(y[1]));

  // brute-force oracle for the exhaustive minimum
  const auto pts = dilate_cube(*ptree, across, 2.0);
  double best = std::numeric_limits<double>::infinity();
  long long pairs = 0;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      double dg = plat->metric().dist(plat->point(pts[a]), plat->point(pts[b]));
      if (dg <= f.threshold) continue;
      ++pairs;
      best = std::min(best, fold.image().metric().dist(fold.value(pts[a]), fold.value(pts[b])) / dg);
    }
  }
  CHECK(f.pairs == pairs);
  CHECK(f.min_ratio == best);

  auto sampled = weak_bilip_check(fold, *ptree, across, 0.1, 0.1, 0, 20000, 3);
  CHECK_FALSE(sampled.exhaustive);
  CHECK(sampled.pairs == 20000);
  CHECK(sampled.min_ratio >= f.min_ratio);

  // a pair threshold beyond every distance leaves nothing to check
  auto empty = weak_bilip_check(cst, *tree, straddle, 0.5, 100.0);
  CHECK(empty.vacuous);
  CHECK(empty.pass);
}
