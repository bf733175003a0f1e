#include "carnot/content.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "carnot/kernels.hpp"

namespace carnot {

namespace {

// Below this many centers a linear scan beats a ball query.
constexpr std::size_t kLinearCenters = 256;

bool has_center_within(const SpatialIndex& pts, const std::vector<int>& centers, const std::vector<char>& is_center,
                       const double* x, double r) {
  if (centers.size() <= kLinearCenters) {
    for (int c : centers) {
      if (pts.metric().dist(pts.point(c), x) <= r) return true;
    }
    return false;
  }
  return pts.any_within_if(x, r, [&](int idx) { return is_center[idx] != 0; }, [](int, double) { return true; });
}

int nearest_center(const SpatialIndex& pts, const std::vector<int>& centers, const std::vector<char>& is_center,
                   const double* x, double r) {
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  auto consider = [&](int c, double d) {
    if (d < bd || (d == bd && c < best)) {
      bd = d;
      best = c;
    }
  };
  if (centers.size() <= kLinearCenters) {
    for (int c : centers) consider(c, pts.metric().dist(pts.point(c), x));
  } else {
    pts.for_each_within(x, r, [&](int idx, double d) {
      if (is_center[idx]) consider(idx, d);
    });
  }
  if (best < 0) throw std::logic_error("greedy net is not maximal");
  return best;
}

}  // namespace

ContentHierarchy::ContentHierarchy(const SpatialIndex& ambient, ContentGrid grid) : ambient_(&ambient), grid_(grid) {
  const int n = ambient.size();
  if (n == 0) throw std::invalid_argument("content estimate of an empty point set");
  if (grid.floor < 0.0 || grid.top < 0.0) throw std::invalid_argument("content grid radii must be nonnegative");
  if (grid.max_levels < 0) throw std::invalid_argument("content grid max_levels must be nonnegative");

  std::vector<double> mean(ambient.dim(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < ambient.dim(); ++c) mean[c] += ambient.point(i)[c] / n;
  }
  root_center_ = ambient.nearest(mean.data()).first;
  double top = grid.top;
  if (top == 0.0) {
    for (int i = 0; i < n; ++i) top = std::max(top, ambient.metric().dist(ambient.point(root_center_), ambient.point(i)));
  }

  std::vector<char> is_center(n, 0);
  std::vector<int> prev(n, 0);  // node at the previous level; the root is node 0
  for (double r = top; r > 0.0 && static_cast<int>(radii_.size()) < grid.max_levels; r /= 2.0) {
    if (grid.floor > 0.0 && r < grid.floor) break;
    std::vector<int> centers;
    for (int i = 0; i < n; ++i) {
      if (!has_center_within(ambient, centers, is_center, ambient.point(i), r)) {
        centers.push_back(i);
        is_center[i] = 1;
      }
    }
    std::map<std::pair<int, int>, int> ids;
    std::vector<int> node(n), parent, center;
    for (int i = 0; i < n; ++i) {
      int c = nearest_center(ambient, centers, is_center, ambient.point(i), r);
      auto [it, fresh] = ids.try_emplace({prev[i], c}, static_cast<int>(center.size()));
      if (fresh) {
        parent.push_back(prev[i]);
        center.push_back(c);
      }
      node[i] = it->second;
    }
    for (int c : centers) is_center[c] = 0;
    radii_.push_back(r);
    node_of_.push_back(node);
    parent_.push_back(std::move(parent));
    centers_.push_back(std::move(center));
    prev = std::move(node);
    // with no floor, stop once every point is its own node
    if (grid.floor == 0.0 && static_cast<int>(centers_.back().size()) == n) break;
  }
}

ContentEstimate ContentHierarchy::estimate(std::span<const int> subset, double N) const {
  if (subset.empty()) throw std::invalid_argument("content estimate of an empty point set");
  if (!(N > 0.0)) throw std::invalid_argument("content dimension must be positive");
  const SpatialIndex& pts = *ambient_;
  const Metric& metric = pts.metric();
  std::vector<char> in(pts.size(), 0);
  std::vector<int> members;
  for (int i : subset) {
    if (i < 0 || i >= pts.size()) throw std::out_of_range("content subset index out of range");
    if (!in[i]) members.push_back(i);
    in[i] = 1;
  }
  std::sort(members.begin(), members.end());

  const double floor = grid_.floor;
  auto ball = [&](double rho) { return std::pow(2.0 * std::max(rho, floor), N); };
  const int L = levels();

  double root_rho = 0.0;
  for (int i : members) root_rho = std::max(root_rho, metric.dist(pts.point(root_center_), pts.point(i)));
  // occupied nodes per level, in order of first appearance
  std::vector<std::vector<int>> nodes(L);
  std::vector<std::unordered_map<int, int>> local(L);
  std::vector<std::vector<double>> rho(L);
  for (int j = 0; j < L; ++j) {
    for (int i : members) {
      const int node = node_of_[j][i];
      auto [it, fresh] = local[j].try_emplace(node, static_cast<int>(nodes[j].size()));
      if (fresh) {
        nodes[j].push_back(node);
        rho[j].push_back(0.0);
      }
      double& r = rho[j][it->second];
      r = std::max(r, metric.dist(pts.point(centers_[j][node]), pts.point(i)));
    }
  }

  ContentEstimate est;
  est.dimension = N;
  est.floor = floor;
  est.radius_grid = radii_;
  est.points = static_cast<long long>(members.size());
  est.per_radius.assign(L, 0.0);
  std::vector<std::vector<double>> cost(L);
  std::vector<std::vector<char>> whole(L);
  std::vector<std::vector<std::vector<int>>> kids(L);
  for (int j = L - 1; j >= 0; --j) {
    const std::size_t m = nodes[j].size();
    std::vector<double> below(m, 0.0);
    kids[j].assign(m, {});
    if (j + 1 < L) {
      for (std::size_t c = 0; c < nodes[j + 1].size(); ++c) {
        const int up = local[j].at(parent_[j + 1][nodes[j + 1][c]]);
        below[up] += cost[j + 1][c];
        kids[j][up].push_back(static_cast<int>(c));
      }
    }
    cost[j].assign(m, 0.0);
    whole[j].assign(m, 0);
    for (std::size_t c = 0; c < m; ++c) {
      const double bc = ball(rho[j][c]);
      est.per_radius[j] += bc;
      if (j + 1 == L || bc <= below[c]) {
        cost[j][c] = bc;
        whole[j][c] = 1;
      } else {
        cost[j][c] = below[c];
      }
    }
  }
  double top_split = 0.0;
  if (L > 0) {
    for (double c : cost[0]) top_split += c;
  }
  const double root_ball = ball(root_rho);
  const bool root_whole = L == 0 || root_ball <= top_split;
  est.upper = root_whole ? root_ball : top_split;

  if (root_whole) {
    est.cover.push_back({root_center_, std::max(root_rho, floor)});
    return est;
  }
  std::vector<std::pair<int, int>> stack;
  for (std::size_t c = nodes[0].size(); c-- > 0;) stack.push_back({0, static_cast<int>(c)});
  while (!stack.empty()) {
    auto [j, c] = stack.back();
    stack.pop_back();
    if (whole[j][c]) {
      est.cover.push_back({centers_[j][nodes[j][c]], std::max(rho[j][c], floor)});
      continue;
    }
    const auto& ch = kids[j][c];
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back({j + 1, *it});
  }
  return est;
}

nlohmann::json ContentEstimate::to_json(bool with_cover) const {
  nlohmann::json j{{"upper", upper},
                   {"dimension", dimension},
                   {"floor", floor},
                   {"points", points},
                   {"radius_grid", radius_grid},
                   {"per_radius", per_radius},
                   {"balls", cover.size()}};
  if (with_cover) {
    nlohmann::json balls = nlohmann::json::array();
    for (const auto& b : cover) balls.push_back({{"center", b.center}, {"radius", b.radius}});
    j["cover"] = std::move(balls);
  }
  return j;
}

ContentEstimate content_upper(const SpatialIndex& points, double N, ContentGrid grid) {
  std::vector<int> all(points.size());
  for (int i = 0; i < points.size(); ++i) all[i] = i;
  return content_upper(points, all, N, grid);
}

ContentEstimate content_upper(const SpatialIndex& points, std::span<const int> subset, double N, ContentGrid grid) {
  return ContentHierarchy(points, grid).estimate(subset, N);
}

bool cover_contains(const SpatialIndex& points, std::span<const int> subset, const std::vector<CoverBall>& cover) {
  std::vector<char> hit(points.size(), 0);
  for (const auto& b : cover) {
    points.for_each_within(points.point(b.center), b.radius, [&](int idx, double) { hit[idx] = 1; });
  }
  return std::all_of(subset.begin(), subset.end(), [&](int i) { return hit[i] != 0; });
}

nlohmann::json NetCover::to_json() const {
  return {{"eps", eps},         {"ell", ell},       {"separation", separation}, {"count", count()},
          {"samples", samples}, {"covers", covers}, {"min_pair", min_pair},     {"net", net}};
}

NetCover epsilon_net_cover(const MapSample& sample, const double* center, double ell, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("net eps must be positive");
  if (!(ell > 0.0)) throw std::invalid_argument("net radius ell must be positive");
  NetCover out;
  out.eps = eps;
  out.ell = ell;
  out.separation = eps * ell;
  const SpatialIndex& img = sample.image();
  const auto ball = sample.lattice().index().within(center, ell);
  out.samples = static_cast<int>(ball.size());
  std::vector<char> is_net(img.size(), 0);
  const double sep = out.separation;
  auto net_near = [&](int i) {
    return img.any_within_if(img.point(i), sep, [&](int idx) { return is_net[idx] != 0; },
                             [&](int, double d) { return d < sep; });
  };
  for (int i : ball) {
    if (!net_near(i)) {
      out.net.push_back(i);
      is_net[i] = 1;
    }
  }
  out.covers = std::all_of(ball.begin(), ball.end(), [&](int i) {
    return img.any_within_if(img.point(i), sep, [&](int idx) { return is_net[idx] != 0; },
                             [](int, double) { return true; });
  });
  out.min_pair = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < out.net.size(); ++a) {
    for (std::size_t b = a + 1; b < out.net.size(); ++b) {
      out.min_pair = std::min(out.min_pair, img.metric().dist(img.point(out.net[a]), img.point(out.net[b])));
    }
  }
  return out;
}

double loglog_slope(const std::vector<double>& eps, const std::vector<int>& counts) {
  if (eps.size() != counts.size() || eps.size() < 2) throw std::invalid_argument("slope fit needs two or more points");
  const double n = static_cast<double>(eps.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || counts[i] < 1) throw std::invalid_argument("slope fit needs positive eps and counts");
    mx += std::log(1.0 / eps[i]) / n;
    my += std::log(static_cast<double>(counts[i])) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double dx = std::log(1.0 / eps[i]) - mx;
    sxy += dx * (std::log(static_cast<double>(counts[i])) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("slope fit needs distinct eps");
  return sxy / sxx;
}

nlohmann::json WeakBilipResult::to_json() const {
  return {{"pass", pass},           {"vacuous", vacuous}, {"exhaustive", exhaustive}, {"pairs", pairs},
          {"threshold", threshold}, {"min_ratio", std::isfinite(min_ratio) ? nlohmann::json(min_ratio) : nlohmann::json()},
          {"x", x},                 {"y", y}};
}

WeakBilipResult weak_bilip_check(const MapSample& sample, const CubeTree& tree, int id, double delta, double b,
                                 long long exhaustive_limit, long long samples, std::uint64_t seed) {
  if (&sample.lattice() != &tree.lattice()) throw std::invalid_argument("map sample and cube tree use different lattices");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(b > 0.0)) throw std::invalid_argument("b must be positive");
  WeakBilipResult r;
  r.threshold = b * tree.diam(id);
  const auto pts = dilate_cube(tree, id, 2.0);
  const SpatialIndex& dom = tree.lattice().index();
  const SpatialIndex& img = sample.image();
  const long long n = static_cast<long long>(pts.size());
  r.min_ratio = std::numeric_limits<double>::infinity();
  if (n * (n - 1) / 2 <= exhaustive_limit) {
    auto rep = kernels::omp::certify_pairs(dom, img, pts, delta, r.threshold);
    r.pairs = rep.pairs;
    r.min_ratio = rep.min_ratio;
    r.x = rep.worst.a;
    r.y = rep.worst.b;
  } else {
    r.exhaustive = false;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<long long> pick(0, n - 1);
    for (long long tries = 0; tries < 50 * samples && r.pairs < samples; ++tries) {
      int a = pts[pick(rng)], c = pts[pick(rng)];
      double dg = dom.metric().dist(dom.point(a), dom.point(c));
      if (!(dg > r.threshold)) continue;
      ++r.pairs;
      double ratio = img.metric().dist(img.point(a), img.point(c)) / dg;
      if (ratio < r.min_ratio) {
        r.min_ratio = ratio;
        r.x = std::min(a, c);
        r.y = std::max(a, c);
      }
    }
  }
  r.vacuous = r.pairs == 0;
  r.pass = r.vacuous || r.min_ratio > delta;
  return r;
}

}  // namespace carnot
