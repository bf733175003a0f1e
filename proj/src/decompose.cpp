#include "carnot/decompose.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "carnot/kernels.hpp"

namespace carnot {

void DecomposeParams::validate() const {
  if (!(delta > 0.0) || delta >= 1.0) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(c1 > 0.0)) throw std::invalid_argument("c1 must be positive");
  if (!(alpha_threshold > 0.0)) throw std::invalid_argument("alpha_threshold must be positive");
  if (L_mult < 1) throw std::invalid_argument("L_mult must be at least 1");
  if (b < 0.0 || b > 0.1) throw std::invalid_argument("b must lie in [0, 1/10]");
  if (b == 0.0 && b_pairs < 1) throw std::invalid_argument("b_pairs must be positive when b is estimated");
  if (exhaustive_limit < 0 || samples < 1) throw std::invalid_argument("pair budgets must be positive");
  alpha.validate();
}

int BadFamilies::count_b1() const { return static_cast<int>(std::count(b1.begin(), b1.end(), 1)); }
int BadFamilies::count_b2() const { return static_cast<int>(std::count(b2.begin(), b2.end(), 1)); }

BadFamilies classify_bad_cubes(const MapSample& sample, const CubeTree& tree, int s,
                               const std::vector<AlphaCube>& alpha, const ContentHierarchy& image_content,
                               double N, const DecomposeParams& params) {
  if (static_cast<int>(alpha.size()) < tree.num_cubes()) throw std::invalid_argument("alpha cache missing for the cube tree");
  BadFamilies bf;
  bf.s = s;
  bf.b1.assign(tree.num_cubes(), 0);
  bf.b2.assign(tree.num_cubes(), 0);
  bf.content.assign(tree.num_cubes(), std::numeric_limits<double>::quiet_NaN());
  bf.c1_delta = params.c1 * params.delta;
  bf.alpha_threshold = params.alpha_threshold;
  bf.null_image = sample.map().null_image();
  for (int id : descendants(tree, s)) {
    const auto& q = tree.cube(id);
    bf.content[id] = bf.null_image ? 0.0 : image_content.estimate(q.points, N).upper;
    bf.b1[id] = bf.content[id] < bf.c1_delta * tree.measure(id);
    bf.b2[id] = alpha[id].value >= params.alpha_threshold;
  }
  return bf;
}

bool R2Set::chebyshev_ok(int L_mult) const {
  return static_cast<long long>(points.size()) * L_mult <= hat_total;
}

R2Set compute_R2(const CubeTree& tree, int s, const std::vector<char>& b2, int L_mult) {
  if (L_mult < 1) throw std::invalid_argument("L_mult must be at least 1");
  R2Set r;
  r.L_mult = L_mult;
  std::vector<int> mult(tree.lattice().size(), 0);
  for (int id : descendants(tree, s)) {
    if (!b2[id]) continue;
    for (int c : hat_cube(tree, id)) {
      for (int p : tree.cube(c).points) ++mult[p];
      r.hat_total += static_cast<long long>(tree.cube(c).points.size());
      r.hat_measure += tree.measure(c);
    }
  }
  const auto& pts = tree.cube(s).points;
  r.multiplicity.reserve(pts.size());
  for (int p : pts) {
    r.multiplicity.push_back(mult[p]);
    if (mult[p] >= L_mult) r.points.push_back(p);
  }
  return r;
}

int choose_l(const CubeTree& tree, int s, double b) {
  if (!(b > 0.0)) throw std::invalid_argument("b must be positive");
  const int top = tree.cube(s).scale;
  const int span = top - tree.k_min() + 1;
  std::vector<double> hi(span, 0.0), lo(span, std::numeric_limits<double>::infinity());
  for (int id : descendants(tree, s)) {
    // single-point cubes never hold the pair x in Q, y in 2Q
    if (tree.diam(id) <= 0.0) continue;
    const int k = tree.cube(id).scale - tree.k_min();
    hi[k] = std::max(hi[k], tree.diam(id));
    lo[k] = std::min(lo[k], tree.diam(id));
  }
  // at l = span no scale pair is realized and the constraint holds vacuously
  for (int l = 1; l < span; ++l) {
    bool ok = true;
    for (int k = 0; k + l < span && ok; ++k) {
      if (hi[k] == 0.0 || !std::isfinite(lo[k + l])) continue;
      ok = hi[k] < b * lo[k + l];
    }
    if (ok) return l;
  }
  return span;
}

std::vector<std::vector<int>> neighbor_family(const CubeTree& tree, int s, const std::vector<char>& b2, int l) {
  std::vector<std::vector<int>> fam(tree.num_cubes());
  if (l < 1) return fam;
  std::vector<char> inside(tree.num_cubes(), 0);
  for (int id : descendants(tree, s)) inside[id] = 1;
  const int top = tree.cube(s).scale;
  for (int k = top - l; k >= tree.k_min(); --k) {
    for (int sp : tree.cubes_at(k + l)) {
      if (!inside[sp] || !b2[sp]) continue;
      // cubes of scale k below the hat of sp
      std::vector<int> group;
      for (int c : hat_cube(tree, sp)) {
        if (!inside[c]) continue;
        std::vector<int> level{c};
        for (int step = 0; step < l; ++step) {
          std::vector<int> next;
          for (int q : level) {
            const auto& ch = tree.cube(q).children;
            next.insert(next.end(), ch.begin(), ch.end());
          }
          level = std::move(next);
        }
        group.insert(group.end(), level.begin(), level.end());
      }
      for (int q : group) {
        for (int other : group) {
          if (other != q) fam[q].push_back(other);
        }
      }
    }
  }
  for (auto& f : fam) {
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
  }
  return fam;
}

AlphabetExhausted::AlphabetExhausted(int cube, int T)
    : std::runtime_error("word alphabet of size " + std::to_string(T + 1) + " exhausted at cube " +
                         std::to_string(cube)),
      cube_(cube) {}

std::string word_string(const Word& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(w[i]);
  }
  return out;
}

namespace {

// Neither word is a prefix of the other; equal words count as prefixes.
bool separated(const Word& a, const Word& b) {
  const std::size_t m = std::min(a.size(), b.size());
  return !std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(m), b.begin());
}

}  // namespace

long long Coding::audit() const {
  long long bad = 0;
  for (std::size_t q = 0; q < family.size(); ++q) {
    for (int other : family[q]) {
      if (!separated(words[q], words[other])) ++bad;
    }
  }
  return bad;
}

Coding assign_words(const CubeTree& tree, int s, std::vector<std::vector<int>> family, int l, int T) {
  if (T < 0) throw std::invalid_argument("alphabet bound T must be nonnegative");
  Coding c;
  c.T = T;
  c.l = l;
  c.words.assign(tree.num_cubes(), {});
  c.appended.assign(tree.num_cubes(), 0);
  std::vector<char> fixed(tree.num_cubes(), 0);
  std::vector<char> inside(tree.num_cubes(), 0);
  for (int id : descendants(tree, s)) inside[id] = 1;
  fixed[s] = 1;
  for (int k = tree.cube(s).scale - 1; k >= tree.k_min(); --k) {
    std::vector<int> order;
    for (int q : tree.cubes_at(k)) {
      if (inside[q]) order.push_back(q);
    }
    // longer parent words first: a fixed neighbour then excludes at most one letter
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return c.words[tree.cube(a).parent].size() > c.words[tree.cube(b).parent].size();
    });
    for (int q : order) {
      const Word& up = c.words[tree.cube(q).parent];
      if (family[q].empty()) {
        c.words[q] = up;
      } else {
        c.appended[q] = 1;
        Word w = up;
        w.push_back(0);
        bool done = false;
        for (int letter = 0; letter <= T && !done; ++letter) {
          w.back() = letter;
          done = std::all_of(family[q].begin(), family[q].end(),
                             [&](int o) { return !fixed[o] || separated(w, c.words[o]); });
        }
        if (!done) throw AlphabetExhausted(q, T);
        c.words[q] = std::move(w);
      }
      fixed[q] = 1;
    }
  }
  c.family = std::move(family);
  return c;
}

Decomposition extract_pieces(const CubeTree& tree, int s, const Coding& coding, const std::vector<char>& b1,
                             const R2Set& r2) {
  Decomposition d;
  d.roots = {s};
  d.T = coding.T;
  d.l = coding.l;
  d.L_mult = r2.L_mult;
  d.label.assign(tree.lattice().size(), -2);
  std::vector<char> in_r2(tree.lattice().size(), 0);
  for (int p : r2.points) in_r2[p] = 1;
  std::map<Word, std::vector<int>> groups;
  const int top = tree.cube(s).scale;
  for (int p : tree.cube(s).points) {
    bool r1 = false;
    for (int k = top; k >= tree.k_min() && !r1; --k) r1 = b1[tree.cube_of(p, k)] != 0;
    if (r1) {
      d.z_r1.push_back(p);
      continue;
    }
    if (in_r2[p]) {
      d.z_r2.push_back(p);
      continue;
    }
    const int finest = tree.cube_of(p, tree.k_min());
    if (coding.appended[finest]) {
      d.z_unresolved.push_back(p);
      continue;
    }
    groups[coding.words[finest]].push_back(p);
  }
  for (auto& [w, pts] : groups) {
    const int idx = static_cast<int>(d.pieces.size());
    for (int p : pts) d.label[p] = idx;
    d.max_word_length = std::max(d.max_word_length, static_cast<int>(w.size()));
    d.pieces.push_back({s, w, std::move(pts)});
  }
  for (const auto* part : {&d.z_r1, &d.z_r2, &d.z_unresolved}) {
    for (int p : *part) d.label[p] = -1;
    d.z.insert(d.z.end(), part->begin(), part->end());
  }
  std::sort(d.z.begin(), d.z.end());
  d.coding_violations = coding.audit();
  long long placed = static_cast<long long>(d.z.size());
  for (const auto& pc : d.pieces) placed += static_cast<long long>(pc.points.size());
  d.partition_ok = placed == static_cast<long long>(tree.cube(s).points.size());
  return d;
}

double Decomposition::piece_bound() const {
  return static_cast<double>(roots.size()) * std::pow(T + 1.0, L_mult + 1.0);
}

nlohmann::json Decomposition::to_json() const {
  nlohmann::json pj = nlohmann::json::array();
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    pj.push_back({{"index", i}, {"root", pieces[i].root}, {"word", word_string(pieces[i].word)},
                  {"size", pieces[i].points.size()}});
  }
  return {{"roots", roots},
          {"pieces", pj},
          {"piece_count", pieces.size()},
          {"z", {{"total", z.size()},
                 {"r1", z_r1.size()},
                 {"r2", z_r2.size()},
                 {"unresolved", z_unresolved.size()},
                 {"boundary", z_boundary.size()}}},
          {"constants", {{"T", T}, {"l", l}, {"b", b}, {"L_mult", L_mult}, {"C_Q", quasi_constant}}},
          {"max_word_length", max_word_length},
          {"piece_bound", piece_bound()},
          {"piece_bound_ok", piece_bound_ok()},
          {"bad_cubes", {{"B1", b1}, {"B2", b2}}},
          {"r2_hat_total", r2_hat_total},
          {"r2_chebyshev", r2_chebyshev},
          {"coding_violations", coding_violations},
          {"partition_ok", partition_ok}};
}

nlohmann::json Certification::to_json() const {
  nlohmann::json pj = nlohmann::json::array();
  for (const auto& p : pieces) {
    pj.push_back({{"piece", p.piece},
                  {"pairs", p.pairs},
                  {"min_ratio", std::isfinite(p.min_ratio) ? nlohmann::json(p.min_ratio) : nlohmann::json()},
                  {"exhaustive", p.exhaustive},
                  {"pass", p.pass},
                  {"witness", {p.x, p.y}}});
  }
  return {{"delta", delta},
          {"pieces", pj},
          {"all_pass", all_pass},
          {"content", {{"f_Z", content_z},
                       {"f_R1", content_r1},
                       {"f_R2", content_r2},
                       {"floor", content_floor},
                       {"dimension", dimension},
                       {"subadditive", subadditive}}},
          {"radius", radius},
          {"c_empirical", c_empirical}};
}

Certification certify(const MapSample& sample, const Decomposition& dec, double delta,
                      const ContentHierarchy& image_content, double N, const DecomposeParams& params) {
  Certification c;
  c.delta = delta;
  c.dimension = N;
  c.content_floor = image_content.floor();
  c.radius = sample.lattice().radius();
  const SpatialIndex& dom = sample.lattice().index();
  const SpatialIndex& img = sample.image();
  std::mt19937_64 rng(params.seed);
  for (std::size_t i = 0; i < dec.pieces.size(); ++i) {
    const auto& pts = dec.pieces[i].points;
    PieceReport r;
    r.piece = static_cast<int>(i);
    const long long n = static_cast<long long>(pts.size());
    if (params.exhaustive && n * (n - 1) / 2 <= params.exhaustive_limit) {
      auto rep = kernels::omp::certify_pairs(dom, img, pts, delta);
      r.pairs = rep.pairs;
      r.min_ratio = rep.min_ratio;
      r.pass = rep.violations == 0;
      r.x = rep.worst.a;
      r.y = rep.worst.b;
    } else {
      r.exhaustive = false;
      r.min_ratio = std::numeric_limits<double>::infinity();
      std::uniform_int_distribution<long long> pick(0, n - 1);
      for (long long t = 0; t < params.samples && n > 1; ++t) {
        int a = pts[pick(rng)], b = pts[pick(rng)];
        double dg = dom.metric().dist(dom.point(a), dom.point(b));
        if (dg == 0.0) continue;
        ++r.pairs;
        double ratio = img.metric().dist(img.point(a), img.point(b)) / dg;
        if (ratio < r.min_ratio) {
          r.min_ratio = ratio;
          r.x = std::min(a, b);
          r.y = std::max(a, b);
        }
      }
      r.pass = !(r.min_ratio < delta);
    }
    c.all_pass = c.all_pass && r.pass;
    c.pieces.push_back(r);
  }
  auto content = [&](const std::vector<int>& pts) { return pts.empty() ? 0.0 : image_content.estimate(pts, N).upper; };
  c.content_z = content(dec.z);
  c.content_r1 = content(dec.z_r1);
  c.content_r2 = content(dec.z_r2);
  std::vector<int> rest = dec.z_unresolved;
  rest.insert(rest.end(), dec.z_boundary.begin(), dec.z_boundary.end());
  c.subadditive = c.content_z <= c.content_r1 + c.content_r2 + content(rest) + 1e-9;
  c.c_empirical = c.content_z / (delta * std::pow(c.radius, N));
  return c;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

DecomposeResult decompose(const MapSample& sample, const CubeTree& tree, const DecomposeParams& params, int s,
                          bool union_mode, int union_scale) {
  params.validate();
  if (&sample.lattice() != &tree.lattice()) throw std::invalid_argument("map sample and cube tree use different lattices");
  DecomposeResult out;
  const auto& lat = tree.lattice();
  const double N = homogeneous_dimension(*lat.algebra());
  auto t0 = std::chrono::steady_clock::now();

  std::vector<int> roots;
  std::vector<int> boundary;
  if (!union_mode) {
    roots.push_back(s);
  } else {
    if (union_scale < tree.k_min() || union_scale > tree.k_max()) throw std::invalid_argument("union_scale outside the tree");
    for (int id : tree.cubes_at(union_scale)) {
      const double reach = lat.metric().dist(lat.point(lat.center_index()), lat.point(tree.cube(id).center)) +
                           3.0 * params.alpha.L * tree.side(id);
      if (reach <= lat.radius()) {
        roots.push_back(id);
      } else {
        const auto& pts = tree.cube(id).points;
        boundary.insert(boundary.end(), pts.begin(), pts.end());
      }
    }
  }

  std::vector<int> ids;
  for (int r : roots) {
    auto d = descendants(tree, r);
    ids.insert(ids.end(), d.begin(), d.end());
  }
  out.b = params.b > 0.0 ? params.b : estimate_b(tree, params.b_pairs, params.seed).b;
  out.stages["b"] = {{"value", out.b}, {"estimated", params.b == 0.0}, {"seconds", seconds_since(t0)}};

  t0 = std::chrono::steady_clock::now();
  auto per = kernels::omp::alpha_cubes(sample.map(), tree, ids, params.alpha, params.seed);
  out.alpha.assign(tree.num_cubes(), AlphaCube{});
  for (std::size_t i = 0; i < ids.size(); ++i) out.alpha[ids[i]] = per[i];
  out.stages["alpha"] = {{"cubes", ids.size()}, {"seconds", seconds_since(t0)}};

  t0 = std::chrono::steady_clock::now();
  const double floor = params.content_floor >= 0.0
                           ? params.content_floor
                           : sample.map().declared_lipschitz() * std::pow(tree.tau(), tree.k_min());
  ContentHierarchy hierarchy(sample.image(), {0.0, floor});
  out.stages["content_hierarchy"] = {{"floor", floor}, {"levels", hierarchy.levels()}, {"seconds", seconds_since(t0)}};

  Decomposition& dec = out.decomposition;
  dec.b = out.b;
  dec.L_mult = params.L_mult;
  dec.quasi_constant = lat.norm_config().quasi_constant;
  dec.label.assign(lat.size(), -2);
  dec.partition_ok = true;
  nlohmann::json per_root = nlohmann::json::array();
  t0 = std::chrono::steady_clock::now();
  for (int root : roots) {
    auto bad = classify_bad_cubes(sample, tree, root, out.alpha, hierarchy, N, params);
    auto r2 = compute_R2(tree, root, bad.b2, params.L_mult);
    const int l = choose_l(tree, root, out.b);
    auto fam = neighbor_family(tree, root, bad.b2, l);
    int T = 0;
    for (const auto& f : fam) T = std::max(T, static_cast<int>(f.size()));
    Coding coding;
    int attempts = 0;
    for (;; ++attempts) {
      try {
        coding = assign_words(tree, root, fam, l, T);
        break;
      } catch (const AlphabetExhausted&) {
        if (attempts >= 8) throw;
        ++T;
      }
    }
    auto part = extract_pieces(tree, root, coding, bad.b1, r2);
    per_root.push_back({{"root", root},
                        {"B1", bad.count_b1()},
                        {"B2", bad.count_b2()},
                        {"null_image", bad.null_image},
                        {"l", l},
                        {"T", T},
                        {"T_retries", attempts},
                        {"R2", r2.points.size()},
                        {"R2_hat_total", r2.hat_total},
                        {"pieces", part.pieces.size()}});
    dec.roots.push_back(root);
    dec.T = std::max(dec.T, T);
    dec.l = std::max(dec.l, l);
    dec.b1 += bad.count_b1();
    dec.b2 += bad.count_b2();
    dec.r2_hat_total += r2.hat_total;
    dec.r2_chebyshev = dec.r2_chebyshev && r2.chebyshev_ok(params.L_mult);
    dec.coding_violations += part.coding_violations;
    dec.partition_ok = dec.partition_ok && part.partition_ok;
    dec.max_word_length = std::max(dec.max_word_length, part.max_word_length);
    const int offset = static_cast<int>(dec.pieces.size());
    for (auto& pc : part.pieces) {
      for (int p : pc.points) dec.label[p] = offset + part.label[p];
      dec.pieces.push_back(std::move(pc));
    }
    for (const auto* src : {&part.z_r1, &part.z_r2, &part.z_unresolved}) {
      for (int p : *src) dec.label[p] = -1;
    }
    dec.z_r1.insert(dec.z_r1.end(), part.z_r1.begin(), part.z_r1.end());
    dec.z_r2.insert(dec.z_r2.end(), part.z_r2.begin(), part.z_r2.end());
    dec.z_unresolved.insert(dec.z_unresolved.end(), part.z_unresolved.begin(), part.z_unresolved.end());
  }
  std::sort(boundary.begin(), boundary.end());
  for (int p : boundary) dec.label[p] = -1;
  dec.z_boundary = std::move(boundary);
  for (auto* v : {&dec.z_r1, &dec.z_r2, &dec.z_unresolved}) std::sort(v->begin(), v->end());
  dec.z.clear();
  for (const auto* v : {&dec.z_r1, &dec.z_r2, &dec.z_unresolved, &dec.z_boundary}) dec.z.insert(dec.z.end(), v->begin(), v->end());
  std::sort(dec.z.begin(), dec.z.end());
  // every point of the covered region is placed exactly once
  long long placed = static_cast<long long>(dec.z.size());
  for (const auto& pc : dec.pieces) placed += static_cast<long long>(pc.points.size());
  long long region = static_cast<long long>(dec.z_boundary.size());
  for (int r : roots) region += static_cast<long long>(tree.cube(r).points.size());
  dec.partition_ok = dec.partition_ok && placed == region &&
                     std::adjacent_find(dec.z.begin(), dec.z.end()) == dec.z.end();
  out.stages["coding"] = {{"roots", per_root}, {"seconds", seconds_since(t0)}};

  t0 = std::chrono::steady_clock::now();
  out.certification = certify(sample, dec, params.delta, hierarchy, N, params);
  out.stages["certify"] = {{"seconds", seconds_since(t0)}};
  return out;
}

}  // namespace carnot
