// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "carnot/alpha.hpp"
#include "carnot/content.hpp"
#include "carnot/cubes.hpp"
#include "carnot/decompose.hpp"
#include "carnot/discreteness.hpp"
#include "carnot/kernels.hpp"
#include "carnot/presets.hpp"
#include "carnot/report.hpp"
#include "support.hpp"

using namespace carnot;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CubeTreePtr heisenberg_tree(double h, double tau = 4.0) {
  auto alg = heisenberg_algebra();
  auto lat = GradedLattice::build(alg, NormConfig::ones(2), FloatPoint::identity(alg), 1.0, h);
  auto [kmin, kmax] = CubeTree::default_scales(*lat, tau);
  return CubeTree::build(lat, tau, kmin, kmax);
}

std::vector<int> all_ids(const CubeTree& tree) {
  std::vector<int> ids(tree.num_cubes());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

MapPtr heisenberg_fold() { return make_fold_map(heisenberg_algebra(), NormConfig::ones(2), {0}); }

ExactMatrix scaled_identity(int n, int s) {
  ExactMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = QSqrt2(Rational(s));
  return m;
}

// 1. exact group laws and the homomorphism property
void exact_algebra(Outcome& o) {
  std::mt19937_64 rng(101);
  for (const std::string name : {"heisenberg", "engel", "abelian:3", "example6"}) {
    auto alg = load_group(name);
    const auto laws = check_group_laws(alg, 100, 11);
    o.require(laws.ok(), name + " group laws");

    const int m1 = alg->layer_dim(1);
    std::vector<Homomorphism> homs{hom_from_first_layer(scaled_identity(m1, 2), alg, alg)};
    if (name == "heisenberg") {
      ExactMatrix shear(2, 2);
      shear(0, 0) = 1, shear(0, 1) = 1, shear(1, 1) = 1;
      homs.push_back(hom_from_first_layer(shear, alg, alg));
    }
    if (name == "abelian:3") {
      ExactMatrix a(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = testing::random_rational(rng);
      homs.push_back(hom_from_first_layer(a, alg, alg));
    }
    ExactMatrix row(1, m1);
    row(0, 0) = 1;
    homs.push_back(hom_from_first_layer(row, alg, abelian_algebra(1)));

    int failures = 0;
    for (const auto& L : homs) {
      for (int t = 0; t < 100; ++t) {
        const auto g = testing::random_exact(alg, rng), h = testing::random_exact(alg, rng);
        if (!(apply_hom(L, bch_multiply(g, h)) == bch_multiply(apply_hom(L, g), apply_hom(L, h)))) ++failures;
      }
    }
    o.require(failures == 0, name + " homomorphism property");
    o.detail << " " << name << ":ok=" << (laws.ok() && failures == 0);
  }
}

// 2. homogeneity, left invariance, exact symmetry; measured C_Q
void norm_laws(Outcome& o) {
  for (const std::string name : {"heisenberg", "engel", "abelian:3", "example6"}) {
    auto alg = load_group(name);
    const auto r = check_norm_laws(alg, NormConfig::ones(alg->step()), 1000, 13);
    o.require(r.ok(1e-12), name);
    o.detail << " " << name << ":C_Q=" << r.quasi_constant << ",hom_err=" << r.homogeneity_error
             << ",inv_err=" << r.left_invariance_error;
  }
}

// 3. Christ cube properties and boundary smallness on the h = 1/8 Heisenberg lattice
void christ_cubes(Outcome& o) {
  auto tree = heisenberg_tree(0.125);
  const auto audit = audit_tree(*tree);
  o.require(tree->lattice().size() >= 10000, "at least 1e4 points");
  o.require(audit.ok(), "partition, nesting, inner and outer balls");
  const int mid = (tree->k_min() + tree->k_max()) / 2;
  const auto bs = boundary_smallness(*tree, mid, {0.25, 0.125});
  o.require(bs.decreasing_share() >= 0.9, "boundary smallness decreasing on 90% of mid-scale cubes");
  o.detail << " points=" << tree->lattice().size() << " cubes=" << tree->num_cubes() << " scales=[" << tree->k_min()
           << "," << tree->k_max() << "] mid=" << mid << " mid_cubes=" << bs.cubes.size()
           << " decreasing=" << bs.decreasing_share();
}

// (1 / (2 (b-a)^2)) of the double integral over x < y of partial for t -> |t| on [-1, 1], midpoint rule.
double fold_oracle(int n) {
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

// 4. alpha calibration
void alpha_calibration(Outcome& o) {
  auto tree = heisenberg_tree(0.25);
  const auto ids = all_ids(*tree);
  AlphaParams params;
  auto alg = heisenberg_algebra();
  NormConfig cfg = NormConfig::ones(2);
  const double cq = validate_triangle(cfg, alg, 4000, 17);
  o.require(cq <= 1.0 + 1e-12, "triangle audit");

  ExactMatrix shear(2, 2);
  shear(0, 0) = 1, shear(0, 1) = 1, shear(1, 0) = -1, shear(1, 1) = 2;
  double hom_max = 0.0, min_partial = 0.0;
  for (const auto& L : {hom_from_first_layer(ExactMatrix::identity(2), alg, alg), hom_from_first_layer(shear, alg, alg)}) {
    auto f = make_hom_map(L, cfg, cfg);
    for (const auto& a : kernels::omp::alpha_cubes(*f, *tree, ids, params, 3)) {
      hom_max = std::max(hom_max, std::abs(a.value));
      min_partial = std::min(min_partial, a.min_partial);
    }
  }
  for (const auto& a : kernels::omp::alpha_cubes(*heisenberg_fold(), *tree, ids, params, 3))
    min_partial = std::min(min_partial, a.min_partial);
  o.require(hom_max <= 1e-6, "alpha of homomorphisms");
  o.require(min_partial >= -1e-9, "partial nonnegative");

  const double ref = fold_oracle(2000);
  auto fold1 = make_fold_map(abelian_algebra(1), NormConfig::ones(1), {0});
  const double base[1] = {0.0}, v[1] = {1.0};
  double worst = 0.0;
  for (int cells : {400, 800}) {
    const double a = alpha_segment(sample_segment(*fold1, base, v, -1.0, 1.0, 2 * cells + 1), 2.0);
    worst = std::max(worst, std::abs(a - ref) / ref);
  }
  o.require(worst <= 0.01, "fold alpha against the Riemann oracle");
  o.detail << " cubes=" << ids.size() << " hom_max_alpha=" << hom_max << " min_partial=" << min_partial
           << " fold_oracle=" << ref << " fold_rel_err=" << worst;
}

// 5. Carleson sum for the fold under h -> h/2
void carleson(Outcome& o) {
  AlphaParams params;
  params.direction_samples = 4;
  params.translate_samples = 8;
  params.segment_step = 1.0 / 8;
  auto fold = heisenberg_fold();
  std::vector<double> totals;
  for (double h : {0.25, 0.125}) {
    auto tree = heisenberg_tree(h);
    const auto rep = carleson_sum(*tree, tree->root(), kernels::omp::alpha_cubes(*fold, *tree, all_ids(*tree), params, 1));
    o.require(std::isfinite(rep.total), "finite");
    o.require(rep.min_summand >= 0.0, "summands nonnegative");
    totals.push_back(rep.total);
    o.detail << " h=" << h << ":total=" << rep.total << ",min_summand=" << rep.min_summand;
  }
  const double ratio = totals[1] / totals[0];
  o.require(ratio <= 2.0 && ratio >= 0.5, "stable within x2");
  o.detail << " ratio=" << ratio;
}

// 6. epsilon nets of the collapse preset
void collapse_nets(Outcome& o) {
  RunConfig c;
  auto alg = heisenberg_algebra();
  const auto cfg = c.norm(alg->step());
  auto lat = GradedLattice::build(alg, cfg, FloatPoint::identity(alg), 1.0, 0.125);
  auto preset = map_preset("collapse", alg, cfg, nlohmann::json::object(), 1.0, 20000, 5);
  MapSample sample(preset.map, lat);
  const double origin[3] = {0.0, 0.0, 0.0};
  const std::vector<double> eps{0.25, 0.125, 0.0625};
  std::vector<int> counts;
  for (double e : eps) {
    const auto net = epsilon_net_cover(sample, origin, 1.0, e);
    o.require(net.covers, "cover at eps=" + std::to_string(e));
    counts.push_back(net.count());
  }
  const double slope = loglog_slope(eps, counts);
  o.require(slope <= homogeneous_dimension(*alg) - 1 + 0.3, "slope");
  o.detail << " counts=" << counts[0] << "," << counts[1] << "," << counts[2] << " slope=" << slope;
}

RunConfig e2e_config(const std::string& preset, double h) {
  RunConfig c;
  c.map.preset = preset;
  c.h = h;
  c.delta = 0.05;
  c.output = "acceptance_out/" + preset + "_" + std::to_string(h);
  return c;
}

// 7. end-to-end decomposition
void end_to_end(Outcome& o) {
  std::vector<double> cs;
  for (double h : {0.25, 0.125}) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig c = e2e_config("fold", h);
    Setup su = setup(c);
    MapSample sample(su.preset.map, su.lattice);
    const auto res = decompose(sample, *su.tree, c.pipeline(), c.root);
    const auto& dec = res.decomposition;
    const auto& cert = res.certification;
    const double secs = seconds_since(t0);
    o.require(secs < 600.0, "under 10 minutes");
    o.require(dec.partition_ok, "partition");
    o.require(dec.piece_bound_ok(), "piece bound");
    o.require(cert.all_pass, "exhaustive certification");
    o.require(cert.content_z <= cert.c_empirical * c.delta * std::pow(c.R, cert.dimension) + 1e-12, "content of f(Z)");
    cs.push_back(cert.c_empirical);
    if (h == 0.125) o.require(su.lattice->size() >= 10000, "at least 1e4 points");
    o.detail << " h=" << h << ":points=" << su.lattice->size() << ",pieces=" << dec.pieces.size() << ",bound="
             << dec.piece_bound() << ",z=" << dec.z.size() << ",content_z=" << cert.content_z
             << ",c=" << cert.c_empirical << ",s=" << secs;
  }
  const double lo = std::min(cs[0], cs[1]), hi = std::max(cs[0], cs[1]);
  o.require(hi <= 2.0 * lo || hi <= 1e-12, "c stable within x2");

  auto id = run(e2e_config("hom", 0.25));
  o.require(id.exit_code == 0 && id.summary["pieces"] == 1, "identity gives one piece");
  auto k = run(e2e_config("constant", 0.25));
  o.require(k.exit_code == 0 && k.summary["pieces"] == 0 && k.summary["z"] == k.summary["points"], "constant gives Z = S");
  const auto kd = nlohmann::json::parse(std::ifstream(e2e_config("constant", 0.25).output + "/certification.json"));
  o.require(kd["certification"]["content"]["f_Z"] == 0.0, "constant image content 0");
  o.detail << " identity_pieces=" << id.summary["pieces"] << " constant_z=" << k.summary["z"];

  // a non-degenerate image: the plane fold splits into certified pieces on both sides
  RunConfig plane = e2e_config("fold", 1.0 / 32);
  plane.domain = "abelian:2";
  plane.b = 0.1;
  plane.L_mult = 1;
  plane.alpha_threshold = 0.01;
  plane.region = "union";
  plane.output = "acceptance_out/plane_fold";
  auto pf = run(plane);
  o.require(pf.exit_code == 0 && pf.summary["pieces"].get<int>() >= 2, "plane fold certified pieces");
  o.detail << " plane_fold_pieces=" << pf.summary["pieces"];
}

// 8. discreteness certificate
void discreteness_lab(Outcome& o) {
  CertificateOptions opt;
  const auto cert = discreteness_certificate(opt);
  o.require(cert["jacobi_completion"]["pass"].get<bool>(), "Jacobi completion at the obstruction parameters");
  o.require(cert["jacobi_draws"]["equal_t_completed"] == opt.jacobi_draws, "equal-t completions pass the audit");
  o.require(cert["commutator"]["pass"].get<bool>(), "commutator leading term");
  o.require(cert["obstruction"]["pass"].get<bool>(), "rationality fails for every unimodular draw");
  o.require(cert["density_probe"]["pass"].get<bool>(), "density probe");
  o.detail << " t6_condition_fails=" << cert["obstruction"]["t6_condition_fails"] << "/" << cert["obstruction"]["draws"]
           << " density_p=" << cert["density_probe"]["p"] << " q=" << cert["density_probe"]["q"]
           << " residual=" << cert["density_probe"]["residual"];
  if (!cert["jacobi_completion"]["pass"].get<bool>())
    o.detail << " jacobi: " << cert["jacobi_completion"]["message"].get<std::string>();
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget;  // seconds; 0 for none
    std::function<void(Outcome&)> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "exact algebra", 10.0, exact_algebra},
      {2, "norm laws", 0.0, norm_laws},
      {3, "Christ cube audit", 60.0, christ_cubes},
      {4, "alpha calibration", 0.0, alpha_calibration},
      {5, "Carleson summability", 0.0, carleson},
      {6, "collapse nets", 0.0, collapse_nets},
      {7, "end-to-end decomposition", 0.0, end_to_end},
      {8, "discreteness certificate", 30.0, discreteness_lab},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = seconds_since(t0);
    if (c.budget > 0.0 && secs > c.budget) {
      o.pass = false;
      o.detail << " [over budget " << c.budget << "s]";
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s) %.1fs:%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
