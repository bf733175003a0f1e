#include "carnot/cubes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "carnot/kernels.hpp"

namespace carnot {

namespace {

constexpr double kRel = 1e-12;

int minimal_scale(double tau, double target) {
  int k = static_cast<int>(std::floor(std::log(target) / std::log(tau))) - 1;
  while (std::pow(tau, k) < target * (1.0 - kRel)) ++k;
  return k;
}

}  // namespace

std::pair<int, int> CubeTree::default_scales(const GradedLattice& lattice, double tau) {
  if (!(tau > 1.0)) throw std::invalid_argument("cube ratio tau must exceed 1");
  return {minimal_scale(tau, lattice.h()), minimal_scale(tau, 2.0 * lattice.radius())};
}

std::shared_ptr<const CubeTree> CubeTree::build(LatticePtr lattice, double tau, int k_min, int k_max) {
  if (!lattice) throw std::invalid_argument("cube tree needs a lattice");
  if (!(tau > 1.0)) throw std::invalid_argument("cube ratio tau must exceed 1");
  if (k_min > k_max) throw std::invalid_argument("k_min exceeds k_max");
  if (std::pow(tau, k_max) < 2.0 * lattice->radius() * (1.0 - kRel)) {
    throw std::invalid_argument("tau^k_max must be at least 2R");
  }
  if (std::pow(tau, k_min) < lattice->h() * (1.0 - kRel)) {
    throw std::invalid_argument("tau^k_min must be at least the lattice resolution h");
  }

  std::shared_ptr<CubeTree> tree(new CubeTree());
  tree->lattice_ = lattice;
  tree->tau_ = tau;
  tree->k_min_ = k_min;
  tree->k_max_ = k_max;
  const int n = lattice->size();
  const int levels = k_max - k_min + 1;
  tree->membership_.assign(levels, std::vector<int>(n, 0));
  tree->by_scale_.assign(levels, {});

  Cube root;
  root.scale = k_max;
  root.center = lattice->center_index();
  root.points.resize(n);
  for (int i = 0; i < n; ++i) root.points[i] = i;
  tree->cubes_.push_back(std::move(root));
  tree->by_scale_[k_max - k_min].push_back(0);

  const SpatialIndex& index = lattice->index();
  const Metric& metric = lattice->metric();
  std::vector<char> blocked(n);
  std::vector<double> best_d(n);
  std::vector<int> best_c(n);

  for (int k = k_max - 1; k >= k_min; --k) {
    const auto& parents = tree->by_scale_[k + 1 - k_min];
    const auto& up = tree->membership_[k + 1 - k_min];
    const double r_net = std::pow(tau, k);
    const double r_core = std::pow(tau, k - 1);
    std::fill(blocked.begin(), blocked.end(), 0);
    std::fill(best_d.begin(), best_d.end(), std::numeric_limits<double>::infinity());
    std::fill(best_c.begin(), best_c.end(), -1);
    std::vector<std::vector<int>> centers(parents.size());

    // Parents own disjoint point sets, so every write below stays inside one parent.
    const long long np = static_cast<long long>(parents.size());
#ifdef CARNOT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long pi = 0; pi < np; ++pi) {
      const int pid = parents[pi];
      const Cube& P = tree->cubes_[pid];
      auto consider = [&](int c) {
        if (blocked[c]) return;
        bool leaks = index.any_within_if(
            lattice->point(c), r_core, [&](int y) { return up[y] != pid; },
            [&](int, double d) { return d < r_core; });
        if (leaks) return;
        centers[pi].push_back(c);
        index.for_each_within(lattice->point(c), r_net, [&](int y, double d) {
          if (up[y] != pid) return;
          if (d < r_net) blocked[y] = 1;
          if (d < best_d[y] || (d == best_d[y] && c < best_c[y])) {
            best_d[y] = d;
            best_c[y] = c;
          }
        });
      };
      consider(P.center);
      for (int c : P.points) {
        if (c != P.center) consider(c);
      }
      for (int y : P.points) {
        if (best_c[y] >= 0) continue;
        for (int c : centers[pi]) {
          double d = metric.dist(lattice->point(c), lattice->point(y));
          if (d < best_d[y] || (d == best_d[y] && c < best_c[y])) {
            best_d[y] = d;
            best_c[y] = c;
          }
        }
      }
    }

    auto& level_members = tree->membership_[k - k_min];
    for (std::size_t pi = 0; pi < parents.size(); ++pi) {
      const int pid = parents[pi];
      std::vector<int> slot(centers[pi].size());
      for (std::size_t s = 0; s < centers[pi].size(); ++s) {
        Cube child;
        child.scale = k;
        child.center = centers[pi][s];
        child.parent = pid;
        slot[s] = static_cast<int>(tree->cubes_.size());
        tree->cubes_[pid].children.push_back(slot[s]);
        tree->by_scale_[k - k_min].push_back(slot[s]);
        tree->cubes_.push_back(std::move(child));
      }
      // centers[pi] is in choice order; map center index -> slot
      std::vector<std::pair<int, int>> lookup;
      for (std::size_t s = 0; s < centers[pi].size(); ++s) lookup.emplace_back(centers[pi][s], slot[s]);
      std::sort(lookup.begin(), lookup.end());
      for (int y : tree->cubes_[pid].points) {
        auto it = std::lower_bound(lookup.begin(), lookup.end(), std::make_pair(best_c[y], -1));
        const int id = it->second;
        level_members[y] = id;
        tree->cubes_[id].points.push_back(y);
      }
    }
  }
  tree->compute_diameters();
  tree->compute_boxes();
  return tree;
}

void CubeTree::compute_diameters() {
  const SpatialIndex& index = lattice_->index();
  const Metric& metric = lattice_->metric();
  const long long nc = static_cast<long long>(cubes_.size());
  diam_.assign(cubes_.size(), 0.0);
  diam_exact_.assign(cubes_.size(), 1);
#ifdef CARNOT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long long id = 0; id < nc; ++id) {
    const auto& pts = cubes_[id].points;
    if (pts.size() <= kExactDiameterLimit) {
      diam_[id] = kernels::serial::diameter(index, pts);
      continue;
    }
    diam_exact_[id] = 0;
    int a = cubes_[id].center;
    double best = 0.0;
    for (int sweep = 0; sweep < 4; ++sweep) {
      int far = a;
      double fd = -1.0;
      for (int y : pts) {
        double d = metric.dist(lattice_->point(a), lattice_->point(y));
        if (d > fd) {
          fd = d;
          far = y;
        }
      }
      best = std::max(best, fd);
      a = far;
    }
    diam_[id] = best;
  }
}

void CubeTree::compute_boxes() {
  const int m1 = lattice_->algebra()->layer_dim(1);
  box_lo_.assign(cubes_.size() * m1, std::numeric_limits<double>::infinity());
  box_hi_.assign(cubes_.size() * m1, -std::numeric_limits<double>::infinity());
  for (std::size_t id = 0; id < cubes_.size(); ++id) {
    for (int y : cubes_[id].points) {
      for (int c = 0; c < m1; ++c) {
        box_lo_[id * m1 + c] = std::min(box_lo_[id * m1 + c], lattice_->point(y)[c]);
        box_hi_[id * m1 + c] = std::max(box_hi_[id * m1 + c], lattice_->point(y)[c]);
      }
    }
  }
}

double CubeTree::side(int id) const { return std::pow(tau_, cubes_.at(id).scale); }

double CubeTree::measure(int id) const {
  return static_cast<double>(cubes_.at(id).points.size()) * lattice_->cell_volume();
}

double CubeTree::separation_lower_bound(int a, int b) const {
  const int m1 = lattice_->algebra()->layer_dim(1);
  double sq = 0.0;
  for (int c = 0; c < m1; ++c) {
    double gap = std::max({0.0, box_lo_[a * m1 + c] - box_hi_[b * m1 + c],
                           box_lo_[b * m1 + c] - box_hi_[a * m1 + c]});
    sq += gap * gap;
  }
  // d(x, y) >= lambda_1 |x_1 - y_1|
  return lattice_->norm_config().lambdas[0] * std::sqrt(sq) * (1.0 - 1e-9);
}

nlohmann::json CubeTree::dump(bool with_points) const {
  nlohmann::json cubes = nlohmann::json::array();
  for (int id = 0; id < num_cubes(); ++id) {
    const Cube& q = cubes_[id];
    nlohmann::json c = {{"id", id},
                        {"scale", q.scale},
                        {"side", side(id)},
                        {"center", q.center},
                        {"parent", q.parent},
                        {"children", q.children},
                        {"size", q.points.size()},
                        {"diam", diam_[id]},
                        {"diam_exact", diam_exact(id)}};
    if (with_points) c["points"] = q.points;
    cubes.push_back(std::move(c));
  }
  return {{"tau", tau_},
          {"k_min", k_min_},
          {"k_max", k_max_},
          {"lattice",
           {{"points", lattice_->size()},
            {"radius", lattice_->radius()},
            {"h", lattice_->h()},
            {"cell_volume", lattice_->cell_volume()},
            {"center", lattice_->center().coords}}},
          {"cubes", std::move(cubes)}};
}

// ---------------------------------------------------------------------------

nlohmann::json CubeAudit::to_json() const {
  return {{"cubes", cubes},
          {"partition", partition},
          {"nesting", nesting},
          {"inner_roundness_violations", inner_violations},
          {"outer_roundness_violations", outer_violations},
          {"pass", ok()}};
}

CubeAudit audit_tree(const CubeTree& tree) {
  CubeAudit a;
  a.cubes = tree.num_cubes();
  const GradedLattice& lat = tree.lattice();
  const int n = lat.size();
  for (int k = tree.k_min(); k <= tree.k_max(); ++k) {
    std::vector<int> seen(n, 0);
    for (int id : tree.cubes_at(k)) {
      const Cube& q = tree.cube(id);
      if (q.scale != k) a.partition = false;
      for (int y : q.points) {
        ++seen[y];
        if (tree.cube_of(y, k) != id) a.partition = false;
      }
    }
    for (int c : seen) {
      if (c != 1) a.partition = false;
    }
  }
  for (int id = 0; id < tree.num_cubes(); ++id) {
    const Cube& q = tree.cube(id);
    if (q.parent < 0) {
      if (q.scale != tree.k_max()) a.nesting = false;
      continue;
    }
    const Cube& p = tree.cube(q.parent);
    if (p.scale != q.scale + 1) a.nesting = false;
    if (std::find(p.children.begin(), p.children.end(), id) == p.children.end()) a.nesting = false;
    for (int y : q.points) {
      if (tree.cube_of(y, p.scale) != q.parent) a.nesting = false;
    }
  }
  for (int id = 0; id < tree.num_cubes(); ++id) {
    const Cube& q = tree.cube(id);
    const double inner = std::pow(tree.tau(), q.scale - 1);
    const double outer = std::pow(tree.tau(), q.scale + 1);
    const double* z = lat.point(q.center);
    lat.index().for_each_within(z, inner, [&](int y, double d) {
      if (d < inner && tree.cube_of(y, q.scale) != id) ++a.inner_violations;
    });
    for (int y : q.points) {
      if (!(lat.metric().dist(z, lat.point(y)) < outer)) ++a.outer_violations;
    }
  }
  return a;
}

std::vector<int> descendants(const CubeTree& tree, int s) {
  std::vector<int> out{s};
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (int c : tree.cube(out[i]).children) out.push_back(c);
  }
  return out;
}

bool near_cube(const CubeTree& tree, int y, int id, double radius) {
  const int k = tree.cube(id).scale;
  if (tree.cube_of(y, k) == id) return true;
  return tree.lattice().index().any_within_if(
      tree.lattice().point(y), radius, [&](int x) { return tree.cube_of(x, k) == id; },
      [](int, double) { return true; });
}

std::vector<int> dilate_cube(const CubeTree& tree, int id, double lambda) {
  if (lambda < 1.0) throw std::invalid_argument("dilation factor must be at least 1");
  const Cube& q = tree.cube(id);
  const double reach = (lambda - 1.0) * tree.diam(id);
  if (reach <= 0.0) return q.points;
  const GradedLattice& lat = tree.lattice();
  std::vector<char> in(lat.size(), 0);
  for (int x : q.points) {
    in[x] = 1;
    lat.index().for_each_within(lat.point(x), reach, [&](int y, double) { in[y] = 1; });
  }
  std::vector<int> out;
  for (int y = 0; y < lat.size(); ++y) {
    if (in[y]) out.push_back(y);
  }
  return out;
}

std::vector<int> hat_cube(const CubeTree& tree, int id) {
  const Cube& q = tree.cube(id);
  const double reach = tree.diam(id);
  const GradedLattice& lat = tree.lattice();
  const double* z = lat.point(q.center);
  std::vector<int> out{id};
  for (int other : tree.cubes_at(q.scale)) {
    if (other == id || tree.separation_lower_bound(id, other) > reach) continue;
    // nearest candidates first so a meeting pair is found early
    std::vector<std::pair<double, int>> order;
    for (int y : tree.cube(other).points) order.emplace_back(lat.metric().dist(z, lat.point(y)), y);
    std::sort(order.begin(), order.end());
    for (const auto& [d, y] : order) {
      if (near_cube(tree, y, id, reach)) {
        out.push_back(other);
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int doubling_bound(const CubeTree& tree, int k) {
  const GradedLattice& lat = tree.lattice();
  const double cq = lat.norm_config().quasi_constant;
  const double outer = std::pow(tree.tau(), k + 1);
  int worst = 0;
  for (int id : tree.cubes_at(k)) {
    const double r = cq * (2.0 * outer + tree.diam(id)) * (1.0 + 1e-9);
    const double* z = lat.point(tree.cube(id).center);
    int count = 0;
    for (int other : tree.cubes_at(k)) {
      if (lat.metric().dist(z, lat.point(tree.cube(other).center)) <= r) ++count;
    }
    worst = std::max(worst, count - 1);
  }
  return worst;
}

SmallestCube smallest_cube_2Q(const CubeTree& tree, int x, int y) {
  if (x == y) throw std::invalid_argument("smallest_cube_2Q needs distinct points");
  const GradedLattice& lat = tree.lattice();
  const double dxy = lat.metric().dist(lat.point(x), lat.point(y));
  for (int k = tree.k_min(); k <= tree.k_max(); ++k) {
    const int id = tree.cube_of(x, k);
    const double dm = tree.diam(id);
    if (k == tree.k_max() || near_cube(tree, y, id, dm)) {
      return {id, dm > 0.0 ? dxy / dm : std::numeric_limits<double>::infinity()};
    }
  }
  return {tree.root(), 0.0};
}

BEstimate estimate_b(const CubeTree& tree, int pairs, std::uint64_t seed) {
  BEstimate est;
  const GradedLattice& lat = tree.lattice();
  if (lat.size() < 2) return est;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, lat.size() - 1);
  std::uniform_int_distribution<int> scale(tree.k_min() - 1, tree.k_max() - 1);
  const long long attempts = 20LL * pairs;
  for (long long s = 0; s < attempts && est.pairs < pairs; ++s) {
    int x = pick(rng), y = x;
    if (s % 2 == 0) {
      while (y == x) y = pick(rng);
    } else {
      // snap x * q to the lattice for q uniform in a ball of random scale
      auto q = random_ball_point(lat.algebra(), lat.norm_config(), std::pow(tree.tau(), scale(rng)), rng);
      std::vector<double> target(lat.dim());
      lat.metric().multiply(lat.point(x), q.coords.data(), target.data());
      y = lat.index().nearest(target.data()).first;
      if (y == x) continue;
    }
    auto sc = smallest_cube_2Q(tree, x, y);
    // the bound only constrains cubes below the root
    if (sc.cube == tree.root()) continue;
    ++est.pairs;
    double b = sc.ratio / 10.0;
    if (b < est.b) {
      est.b = b;
      est.worst_x = x;
      est.worst_y = y;
    }
  }
  return est;
}

double BoundaryStats::decreasing_share() const {
  if (fraction.empty()) return 0.0;
  int good = 0;
  for (const auto& f : fraction) {
    bool dec = true;
    for (std::size_t i = 1; i < f.size(); ++i) dec = dec && f[i] < f[i - 1];
    good += dec;
  }
  return static_cast<double>(good) / fraction.size();
}

nlohmann::json BoundaryStats::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cubes.size(); ++i) rows.push_back({{"cube", cubes[i]}, {"fraction", fraction[i]}});
  return {{"scale", scale}, {"t", ts}, {"decreasing_share", decreasing_share()}, {"cubes", rows}};
}

BoundaryStats boundary_smallness(const CubeTree& tree, int scale, const std::vector<double>& ts) {
  BoundaryStats st;
  st.scale = scale;
  st.ts = ts;
  const GradedLattice& lat = tree.lattice();
  const auto& ids = tree.cubes_at(scale);
  st.cubes = ids;
  st.fraction.assign(ids.size(), std::vector<double>(ts.size(), 0.0));
  const double l = std::pow(tree.tau(), scale);
  const long long nc = static_cast<long long>(ids.size());
#ifdef CARNOT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long long i = 0; i < nc; ++i) {
    const Cube& q = tree.cube(ids[i]);
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
      long long near = 0;
      for (int x : q.points) {
        near += lat.index().any_within_if(
            lat.point(x), ts[ti] * l, [&](int y) { return tree.cube_of(y, scale) != ids[i]; },
            [](int, double) { return true; });
      }
      st.fraction[i][ti] = q.points.empty() ? 0.0 : static_cast<double>(near) / q.points.size();
    }
  }
  return st;
}

}  // namespace carnot
