#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>

#include "carnot/cubes.hpp"
#include "carnot/kernels.hpp"
#include "carnot/presets.hpp"

using namespace carnot;

namespace {

LatticePtr heisenberg_lattice(double h) {
  auto alg = heisenberg_algebra();
  return GradedLattice::build(alg, NormConfig::ones(2), FloatPoint::identity(alg), 1.0, h);
}

// 25413 points, shared across cases.
const CubeTree& big_tree() {
  static CubeTreePtr tree = [] {
    auto lat = heisenberg_lattice(0.125);
    auto [kmin, kmax] = CubeTree::default_scales(*lat, 4.0);
    return CubeTree::build(lat, 4.0, kmin, kmax);
  }();
  return *tree;
}

int brute_nearest(const GradedLattice& lat, const double* x, double& best) {
  best = std::numeric_limits<double>::infinity();
  int arg = -1;
  for (int i = 0; i < lat.size(); ++i) {
    double d = lat.metric().dist(x, lat.point(i));
    if (d < best) {
      best = d;
      arg = i;
    }
  }
  return arg;
}

}  // namespace

TEST_CASE("lattice counts and coverage") {
  auto coarse = heisenberg_lattice(0.25);
  auto fine = heisenberg_lattice(0.125);
  CHECK(coarse->size() == 1617);
  // Gauss circle counts: 197 first-layer points of radius 8, 129 centre values
  CHECK(fine->size() == 197 * 129);
  double ratio = static_cast<double>(fine->size()) / coarse->size();
  CHECK(ratio > 16 * 0.7);
  CHECK(ratio < 16 * 1.3);
  CHECK(fine->cell_volume() == doctest::Approx(std::pow(0.125, 4)));

  auto alg = heisenberg_algebra();
  auto single = GradedLattice::build(alg, NormConfig::ones(2), FloatPoint::identity(alg), 1.0, 1.0);
  CHECK(single->size() >= 1);
  CHECK(single->center_index() >= 0);

  CHECK_THROWS_AS(GradedLattice::build(alg, NormConfig::ones(2), FloatPoint::identity(alg), 1.0, 0.01, 1000),
                  BudgetExceeded);
  CHECK_THROWS_AS(GradedLattice::build(alg, NormConfig::ones(2), FloatPoint::identity(alg), 1.0, 2.0),
                  std::invalid_argument);

  for (int i = 0; i < fine->size(); i += 97) {
    CHECK(fine->metric().dist(fine->center().coords.data(), fine->point(i)) <= 1.0 + 1e-12);
  }

  // nearest-point oracle by linear scan over 10^3 random ball points
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    auto q = random_ball_point(alg, fine->norm_config(), 1.0, rng);
    double d;
    brute_nearest(*fine, q.coords.data(), d);
    worst = std::max(worst, d);
  }
  CHECK(worst <= 2 * fine->h());
  CHECK(fine->covering_radius(200, 9) <= worst + 1e-12);
}

TEST_CASE("lattice off-center stays in the ball") {
  auto alg = engel_algebra();
  FloatPoint c(alg, {0.3, -0.2, 0.1, 0.05});
  auto lat = GradedLattice::build(alg, NormConfig::ones(3), c, 0.5, 0.25);
  CHECK(lat->size() > 1);
  for (int i = 0; i < lat->size(); ++i) CHECK(lat->metric().dist(c.coords.data(), lat->point(i)) <= 0.5 + 1e-9);
  CHECK(lat->metric().dist(c.coords.data(), lat->point(lat->center_index())) == doctest::Approx(0.0));
}

TEST_CASE("spatial index matches linear scan") {
  std::mt19937_64 rng(11);
  for (auto [name, h] : {std::pair{"heisenberg", 0.25}, {"engel", 0.5}, {"abelian:3", 0.25}}) {
    auto alg = group_preset(name);
    NormConfig cfg = NormConfig::ones(alg->step());
    auto lat = GradedLattice::build(alg, cfg, FloatPoint::identity(alg), 1.0, h);
    for (int s = 0; s < 40; ++s) {
      auto x = random_ball_point(alg, cfg, 1.2, rng);
      double r = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
      std::vector<int> brute;
      for (int i = 0; i < lat->size(); ++i) {
        if (lat->metric().dist(x.coords.data(), lat->point(i)) <= r) brute.push_back(i);
      }
      CHECK(lat->index().within(x.coords.data(), r) == brute);
      double bd;
      int arg = brute_nearest(*lat, x.coords.data(), bd);
      auto [idx, d] = lat->index().nearest(x.coords.data());
      CHECK(d == bd);
      CHECK(idx == arg);
    }
  }
}

TEST_CASE("metric distance agrees with the group law") {
  std::mt19937_64 rng(3);
  for (const char* name : {"heisenberg", "engel", "example6", "abelian:2"}) {
    auto alg = group_preset(name);
    NormConfig cfg = NormConfig::ones(alg->step());
    Metric metric(alg, cfg);
    for (int s = 0; s < 200; ++s) {
      auto g = random_ball_point(alg, cfg, 1.5, rng);
      auto h = random_ball_point(alg, cfg, 1.5, rng);
      CHECK(metric.dist(g, h) == doctest::Approx(dist_infty(g, h, cfg)).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-scale tree") {
  auto lat = heisenberg_lattice(0.25);
  auto tree = CubeTree::build(lat, 4.0, 1, 1);
  CHECK(tree->num_cubes() == 1);
  CHECK(tree->cube(0).points.size() == static_cast<std::size_t>(lat->size()));
  CHECK_THROWS_AS(CubeTree::build(lat, 4.0, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(CubeTree::build(lat, 4.0, -3, 1), std::invalid_argument);
  CHECK_THROWS_AS(CubeTree::build(lat, 1.0, 0, 1), std::invalid_argument);
  auto b = estimate_b(*tree, 100, 1);
  CHECK(b.b == doctest::Approx(0.1));
}

TEST_CASE("cube tree on the Heisenberg lattice") {
  const CubeTree& tree = big_tree();
  const int n = tree.lattice().size();
  CHECK(n >= 10000);
  CHECK(tree.k_min() == -1);
  CHECK(tree.k_max() == 1);

  // partition and nesting, recomputed from the cube lists alone
  for (int k = tree.k_min(); k <= tree.k_max(); ++k) {
    std::vector<int> all;
    for (int id : tree.cubes_at(k)) {
      const auto& pts = tree.cube(id).points;
      all.insert(all.end(), pts.begin(), pts.end());
      if (k < tree.k_max()) {
        const auto& parent = tree.cube(tree.cube(id).parent).points;
        CHECK(std::includes(parent.begin(), parent.end(), pts.begin(), pts.end()));
      }
    }
    std::sort(all.begin(), all.end());
    CHECK(all.size() == static_cast<std::size_t>(n));
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
  }
  auto audit = audit_tree(tree);
  CHECK(audit.partition);
  CHECK(audit.nesting);
  CHECK(audit.inner_violations == 0);
  CHECK(audit.outer_violations == 0);

  // each child's center lies in the parent's point set and parents reuse their center
  for (int id = 1; id < tree.num_cubes(); ++id) {
    const Cube& q = tree.cube(id);
    CHECK(tree.cube_of(q.center, q.scale) == id);
  }
  for (int id = 0; id < tree.num_cubes(); ++id) {
    const Cube& q = tree.cube(id);
    if (q.children.empty()) continue;
    CHECK(tree.cube(q.children.front()).center == q.center);
  }
}

TEST_CASE("tree build is deterministic") {
  auto lat = heisenberg_lattice(0.25);
  auto a = CubeTree::build(lat, 4.0, -1, 1);
  auto b = CubeTree::build(heisenberg_lattice(0.25), 4.0, -1, 1);
  CHECK(a->dump(true) == b->dump(true));
  CHECK(audit_tree(*a).ok());
}

TEST_CASE("dilation and hat") {
  const CubeTree& tree = big_tree();
  for (int id : {0, 1, tree.cubes_at(-1).front()}) {
    CHECK(dilate_cube(tree, id, 1.0) == tree.cube(id).points);
  }
  auto lat = heisenberg_lattice(0.25);
  auto small = CubeTree::build(lat, 4.0, -1, 1);
  for (int k = small->k_min(); k <= small->k_max(); ++k) {
    int bound = doubling_bound(*small, k);
    for (int id : small->cubes_at(k)) {
      auto hat = hat_cube(*small, id);
      CHECK(std::binary_search(hat.begin(), hat.end(), id));
      CHECK(static_cast<int>(hat.size()) <= bound + 1);
      // oracle: Q' meets 2Q iff some pair is within diam Q, by linear scan
      auto two_q = dilate_cube(*small, id, 2.0);
      std::vector<int> expect;
      for (int y : two_q) expect.push_back(small->cube_of(y, k));
      std::sort(expect.begin(), expect.end());
      expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
      CHECK(hat == expect);
    }
  }
}

TEST_CASE("smallest cube containing 2Q") {
  const CubeTree& tree = big_tree();
  const GradedLattice& lat = tree.lattice();
  auto chain_oracle = [&](int x, int y) {
    for (int k = tree.k_min(); k <= tree.k_max(); ++k) {
      int id = tree.cube_of(x, k);
      double best = std::numeric_limits<double>::infinity();
      for (int p : tree.cube(id).points) best = std::min(best, lat.metric().dist(lat.point(p), lat.point(y)));
      if (best <= tree.diam(id)) return id;
    }
    return tree.root();
  };
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pick(0, lat.size() - 1);
  for (int s = 0; s < 30; ++s) {
    int x = pick(rng);
    auto near = lat.index().within(lat.point(x), 0.13);
    int y = near.front() == x ? near.back() : near.front();
    if (x == y) continue;
    auto sc = smallest_cube_2Q(tree, x, y);
    CHECK(sc.cube == chain_oracle(x, y));
    CHECK(tree.cube(sc.cube).scale <= tree.k_min() + 1);
  }
  // opposite ends of the first layer
  int far_a = -1, far_b = -1;
  for (int i = 0; i < lat.size(); ++i) {
    const double* p = lat.point(i);
    if (p[0] == -1.0 && p[1] == 0.0 && p[2] == 0.0) far_a = i;
    if (p[0] == 1.0 && p[1] == 0.0 && p[2] == 0.0) far_b = i;
  }
  REQUIRE(far_a >= 0);
  REQUIRE(far_b >= 0);
  CHECK(tree.cube(smallest_cube_2Q(tree, far_a, far_b).cube).scale >= tree.k_max() - 1);
  CHECK_THROWS_AS(smallest_cube_2Q(tree, 3, 3), std::invalid_argument);
}

TEST_CASE("estimate_b") {
  const CubeTree& tree = big_tree();
  auto full = estimate_b(tree, 10000, 23);
  auto part = estimate_b(tree, 2000, 23);
  CHECK(full.b > 0.0);
  CHECK(full.b <= 0.1);
  CHECK(full.pairs == 10000);
  CHECK(part.b >= full.b);
  // every sampled pair honours the recorded bound
  std::mt19937_64 rng(29);
  const GradedLattice& lat = tree.lattice();
  std::uniform_int_distribution<int> pick(0, lat.size() - 1);
  for (int s = 0; s < 200; ++s) {
    int x = pick(rng), y = pick(rng);
    if (x == y) continue;
    auto sc = smallest_cube_2Q(tree, x, y);
    CHECK(sc.ratio >= 10 * full.b - 1e-12);
  }
}

TEST_CASE("boundary smallness") {
  const CubeTree& tree = big_tree();
  auto st = boundary_smallness(tree, 0, {0.25, 0.125});
  CHECK(st.cubes.size() >= 2);
  CHECK(st.decreasing_share() >= 0.9);
}

TEST_CASE("diameter kernels agree") {
  const CubeTree& tree = big_tree();
  for (int id : tree.cubes_at(0)) {
    const auto& pts = tree.cube(id).points;
    std::vector<int> head(pts.begin(), pts.begin() + std::min<std::size_t>(pts.size(), 600));
    CHECK(kernels::serial::diameter(tree.lattice().index(), head) ==
          kernels::omp::diameter(tree.lattice().index(), head));
  }
}
