#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "carnot/alpha.hpp"
#include "carnot/presets.hpp"

using namespace carnot;

namespace {

MapPtr heisenberg_fold() { return make_fold_map(heisenberg_algebra(), NormConfig::ones(2), {0}); }

MapPtr heisenberg_hom(int a, int b, int c, int d) {
  auto alg = heisenberg_algebra();
  ExactMatrix m(2, 2);
  m(0, 0) = QSqrt2(Rational(a));
  m(0, 1) = QSqrt2(Rational(b));
  m(1, 0) = QSqrt2(Rational(c));
  m(1, 1) = QSqrt2(Rational(d));
  return make_hom_map(hom_from_first_layer(m, alg, alg), NormConfig::ones(2), NormConfig::ones(2));
}

CubeTreePtr heisenberg_tree(double h) {
  auto alg = heisenberg_algebra();
  auto lat = GradedLattice::build(alg, NormConfig::ones(2), FloatPoint::identity(alg), 1.0, h);
  auto [kmin, kmax] = CubeTree::default_scales(*lat, 4.0);
  return CubeTree::build(lat, 4.0, kmin, kmax);
}

std::vector<int> all_ids(const CubeTree& tree) {
  std::vector<int> ids(tree.num_cubes());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

// (1 / (2 (b-a)^2)) int int_{x<y} partial for t -> |t| on [-1, 1], midpoint rule on n cells.
double fold_riemann(int n) {
  const double a = -1.0, b = 1.0, h = (b - a) / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = a + (i + 0.5) * h;
    for (int j = i + 1; j < n; ++j) {
      const double y = a + (j + 0.5) * h;
      const double m = 0.5 * (x + y), half = 0.5 * (y - x);
      const double l = std::abs(std::abs(m) - std::abs(x)) / half;
      const double r = std::abs(std::abs(y) - std::abs(m)) / half;
      const double w = std::abs(std::abs(y) - std::abs(x)) / (y - x);
      sum += 0.5 * (l * l + r * r) - w * w;
    }
  }
  return sum * h * h / (2.0 * (b - a) * (b - a));
}

}  // namespace

TEST_CASE("partial_p on the basic examples") {
  auto line = abelian_algebra(1);
  auto fold = make_fold_map(line, NormConfig::ones(1), {0});
  const double base[1] = {0.0};
  const double v[1] = {1.0};
  auto s = sample_segment(*fold, base, v, -1.0, 1.0, 3);
  CHECK(partial_p(s, 0, 2, 2.0) == doctest::Approx(1.0).epsilon(1e-15));

  auto id = heisenberg_hom(1, 0, 0, 1);
  const double x[3] = {0.3, -0.2, 0.1};
  const double u[2] = {0.6, 0.8};
  auto iso = sample_segment(*id, x, u, -0.7, 0.9, 9);
  for (int i = 0; i < iso.n; ++i) {
    for (int j = i + 2; j < iso.n; j += 2) CHECK(std::abs(partial_p(iso, i, j, 2.0)) < 1e-12);
  }

  auto heis = heisenberg_algebra();
  auto cst = make_constant_map(heis, NormConfig::ones(2), heis, NormConfig::ones(2), {0.5, 0.5, 0.1});
  auto flat = sample_segment(*cst, x, u, -0.5, 0.5, 5);
  CHECK(partial_p(flat, 0, 4, 2.0) == 0.0);

  CHECK_THROWS_AS(sample_segment(*fold, base, v, -1.0, 1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(partial_p(s, 2, 0, 2.0), std::invalid_argument);
}

TEST_CASE("alpha_segment vanishes for homomorphisms on horizontal lines") {
  auto shear = heisenberg_hom(1, 1, 0, 1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double x[3] = {u(rng), u(rng), u(rng)};
    const double th = 3.0 * u(rng);
    const double v[2] = {std::cos(th), std::sin(th)};
    auto seg = sample_segment(*shear, x, v, -1.0, 1.0, 41);
    double lo = 1.0;
    CHECK(std::abs(alpha_segment(seg, 2.0, &lo)) < 1e-8);
    CHECK(lo > -1e-9);
  }
}

TEST_CASE("fold alpha_segment matches a brute-force Riemann oracle") {
  const double ref = fold_riemann(2000);
  CHECK(ref > 0.0);
  CHECK(std::abs(fold_riemann(1000) - ref) / ref < 0.01);
  auto fold = make_fold_map(abelian_algebra(1), NormConfig::ones(1), {0});
  const double base[1] = {0.0};
  const double v[1] = {1.0};
  for (int cells : {400, 800}) {
    auto seg = sample_segment(*fold, base, v, -1.0, 1.0, 2 * cells + 1);
    double a = alpha_segment(seg, 2.0);
    CHECK(std::abs(a - ref) / ref < 0.01);
  }
  auto even = sample_segment(*fold, base, v, -1.0, 1.0, 10);
  CHECK_THROWS_AS(alpha_segment(even, 2.0), std::invalid_argument);
}

TEST_CASE("alpha_segment is unchanged by affine reparametrization") {
  auto fold = heisenberg_fold();
  auto alg = heisenberg_algebra();
  const FloatPoint x(alg, {-0.2, 0.4, 0.3});
  const double v[2] = {0.8, -0.6};
  auto s0 = sample_segment(*fold, x.coords.data(), v, -0.5, 0.7, 61);
  const double a0 = alpha_segment(s0, 2.0);
  CHECK(a0 > 0.0);

  // shift the parameter: start the line at x exp(-0.5 v)
  auto start = horizontal_point(x, v, -0.5);
  auto s1 = sample_segment(*fold, start.coords.data(), v, 0.0, 1.2, 61);
  CHECK(alpha_segment(s1, 2.0) == doctest::Approx(a0).epsilon(1e-9));

  // stretch by a dilation: the fold is 1-homogeneous
  auto dx = dilate(2.5, x);
  auto s2 = sample_segment(*fold, dx.coords.data(), v, -1.25, 1.75, 61);
  CHECK(alpha_segment(s2, 2.0) == doctest::Approx(a0).epsilon(1e-9));
}

TEST_CASE("alpha_cube vanishes for homomorphisms on every cube") {
  auto tree = heisenberg_tree(0.25);
  AlphaParams params;
  params.direction_samples = 4;
  params.translate_samples = 8;
  params.segment_step = 1.0 / 8;
  auto ids = all_ids(*tree);
  for (auto f : {heisenberg_hom(1, 0, 0, 1), heisenberg_hom(2, -1, 1, 3)}) {
    auto out = kernels::omp::alpha_cubes(*f, *tree, ids, params, 11);
    for (const auto& a : out) {
      CHECK(std::abs(a.value) < 1e-6);
      CHECK(a.lines_hit > 0);
    }
  }
}

TEST_CASE("fold alpha is zero away from the fold locus and positive on it") {
  auto fold = heisenberg_fold();
  AlphaParams params;
  params.direction_samples = 3;
  params.translate_samples = 4;
  params.segment_step = 1.0 / 8;
  for (double h : {0.25, 0.125}) {
    auto tree = heisenberg_tree(h);
    int far = 0, near = 0;
    for (int k = tree->k_min(); k <= tree->k_max(); ++k) {
      for (int id : tree->cubes_at(k)) {
        const double x0 = tree->lattice().point(tree->cube(id).center)[0];
        const double reach = 3.0 * params.L * tree->side(id);
        auto a = alpha_cube(*fold, *tree, id, params, 5);
        CHECK(a.min_partial > -1e-9);
        if (std::abs(x0) > reach) {
          ++far;
          CHECK(std::abs(a.value) < 1e-12);
        } else if (std::abs(x0) < 0.25 * tree->side(id)) {
          ++near;
          CHECK(a.value > 0.0);
        }
      }
    }
    CHECK(far > 0);
    CHECK(near > 0);
  }
}

TEST_CASE("alpha is invariant under left translation of the map") {
  auto fold = heisenberg_fold();
  auto alg = heisenberg_algebra();
  AlphaParams params;
  params.direction_samples = 3;
  params.translate_samples = 6;
  const FloatPoint g(alg, {0.15, -0.1, 0.05});
  auto moved = make_left_translated(fold, g);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 8; ++trial) {
    auto z = random_ball_point(alg, NormConfig::ones(2), 0.3, rng);
    std::vector<double> gz(3);
    fold->domain_metric().multiply(g.coords.data(), z.coords.data(), gz.data());
    auto a = alpha_ball(*moved, z.coords.data(), 0.2, params, 100 + trial);
    auto b = alpha_ball(*fold, gz.data(), 0.2, params, 100 + trial);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
    CHECK(a.lines_hit == b.lines_hit);
  }
}

TEST_CASE("partial_p obeys the crude bound for 1-Lipschitz maps") {
  auto fold = heisenberg_fold();
  CHECK(audit_lipschitz(*fold, 1.0, 4000, 2).ok());
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double x[3] = {0.3 * u(rng), u(rng), u(rng)};
    const double th = 3.0 * u(rng);
    const double v[2] = {std::cos(th), std::sin(th)};
    auto seg = sample_segment(*fold, x, v, -0.5, 0.5, 21);
    for (int i = 0; i < seg.n; ++i) {
      for (int j = i + 2; j < seg.n; j += 2) worst = std::max(worst, partial_p(seg, i, j, 2.0));
    }
    CHECK(alpha_segment(seg, 2.0) <= 2.0);
  }
  CHECK(worst <= 2.0);
  CHECK(worst > 0.0);
}

TEST_CASE("target certificate holds for d_infty targets") {
  AlphaParams params;
  auto fold = heisenberg_fold();
  auto cert = target_certificate(*fold, 1.0, params, 40, 9);
  CHECK(cert.ok());
  CHECK(cert.evaluations > 0);
  auto shear = heisenberg_hom(1, 1, 0, 1);
  CHECK(target_certificate(*shear, 1.0, params, 40, 9).ok());
}

TEST_CASE("serial and OpenMP alpha kernels agree") {
  auto tree = heisenberg_tree(0.25);
  auto fold = heisenberg_fold();
  AlphaParams params;
  params.direction_samples = 3;
  params.translate_samples = 5;
  params.segment_step = 1.0 / 8;
  auto ids = all_ids(*tree);
  auto a = kernels::serial::alpha_cubes(*fold, *tree, ids, params, 21);
  auto b = kernels::omp::alpha_cubes(*fold, *tree, ids, params, 21);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].lines_hit == b[i].lines_hit);
  }
  std::ostringstream csv;
  write_alpha_csv(csv, *tree, ids, a);
  const std::string text = csv.str();
  CHECK(text.rfind("cube,scale,alpha,points,measure,directions,lines,lines_hit\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(ids.size()) + 1);
}

TEST_CASE("Carleson sums: zero for homomorphisms, stable for the fold") {
  AlphaParams params;
  params.direction_samples = 4;
  params.translate_samples = 8;
  params.segment_step = 1.0 / 8;
  auto fold = heisenberg_fold();
  auto id = heisenberg_hom(1, 0, 0, 1);
  std::vector<double> totals;
  for (double h : {0.25, 0.125}) {
    auto tree = heisenberg_tree(h);
    auto ids = all_ids(*tree);
    auto zero = carleson_sum(*tree, tree->root(), kernels::omp::alpha_cubes(*id, *tree, ids, params, 1));
    CHECK(std::abs(zero.total) < 1e-6);
    auto rep = carleson_sum(*tree, tree->root(), kernels::omp::alpha_cubes(*fold, *tree, ids, params, 1));
    CHECK(std::isfinite(rep.total));
    CHECK(rep.min_summand >= -1e-12);
    CHECK(rep.total > 0.0);
    int cubes = 0;
    for (const auto& s : rep.per_scale) cubes += s.cubes;
    CHECK(cubes == tree->num_cubes());
    totals.push_back(rep.total);
  }
  const double ratio = totals[1] / totals[0];
  CHECK(ratio <= 2.0);
  CHECK(ratio >= 0.5);
}

TEST_CASE("Euclidean targets: p = 2 defect is the parallelogram form and never negative") {
  auto plane = abelian_algebra(2);
  Metric target(plane, NormConfig{{1.5}, 1.0});
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double fx[2] = {u(rng), u(rng)}, fm[2] = {u(rng), u(rng)}, fy[2] = {u(rng), u(rng)};
    const double span = 0.1 + std::abs(u(rng));
    const double got = partial_p(target, fx, fm, fy, span, 2.0);
    const double half = span / 2.0;
    const double l = target.dist(fx, fm) / half, r = target.dist(fm, fy) / half, w = target.dist(fx, fy) / span;
    CHECK(got >= 0.0);
    CHECK(got == doctest::Approx(0.5 * (l * l + r * r) - w * w).epsilon(1e-9).scale(1.0));
  }
  // collinear equally spaced images: exactly zero
  const double a[2] = {0.1, 0.3}, m[2] = {0.2, 0.4}, b[2] = {0.3, 0.5};
  CHECK(partial_p(target, a, m, b, 1.0, 2.0) >= 0.0);
  auto tree = heisenberg_tree(0.25);
  AlphaParams params;
  params.direction_samples = 2;
  params.translate_samples = 4;
  params.segment_step = 1.0 / 8;
  for (const auto& out : kernels::omp::alpha_cubes(*heisenberg_fold(), *tree, all_ids(*tree), params, 2)) {
    CHECK(out.value >= 0.0);
    CHECK(out.min_partial >= 0.0);
  }
}
