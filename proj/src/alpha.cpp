#include "carnot/alpha.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

namespace carnot {

void AlphaParams::validate() const {
  if (!(p >= 1.0)) throw std::invalid_argument("alpha exponent p must be at least 1");
  if (!(L >= 1.0)) throw std::invalid_argument("alpha scale L must be at least 1");
  if (direction_samples < 1) throw std::invalid_argument("direction_samples must be positive");
  if (translate_samples < 1) throw std::invalid_argument("translate_samples must be positive");
  if (!(segment_step > 0.0) || segment_step > 1.0) throw std::invalid_argument("segment_step must lie in (0, 1]");
}

SegmentSample sample_segment(const LipschitzMap& f, const double* base, std::span<const double> v, double a,
                             double b, int nodes) {
  const auto& dom = *f.domain();
  if (static_cast<int>(v.size()) != dom.layer_dim(1)) {
    throw std::invalid_argument("segment direction must have first-layer dimension");
  }
  if (nodes < 3) throw std::invalid_argument("degenerate segment: fewer than 3 nodes");
  if (!(b > a)) throw std::invalid_argument("degenerate segment: empty parameter range");
  SegmentSample s;
  s.a = a;
  s.n = nodes;
  s.step = (b - a) / (nodes - 1);
  s.cod_dim = f.codomain()->dim();
  s.images.resize(static_cast<std::size_t>(nodes) * s.cod_dim);
  s.target = &f.target_metric();
  std::vector<double> line(dom.dim(), 0.0), x(dom.dim());
  for (int i = 0; i < nodes; ++i) {
    for (std::size_t c = 0; c < v.size(); ++c) line[c] = s.t(i) * v[c];
    f.domain_metric().multiply(base, line.data(), x.data());
    f.eval(x.data(), s.images.data() + static_cast<std::size_t>(i) * s.cod_dim);
  }
  return s;
}

double partial_p(const Metric& target, const double* fx, const double* fm, const double* fy, double span,
                 double p) {
  if (!(span > 0.0)) throw std::invalid_argument("partial_p needs x < y");
  const double half = span / 2.0;
  if (p == 2.0 && target.euclidean()) {
    // parallelogram law: the defect is |2 f(m) - f(x) - f(y)|^2 / (4 half^2), never negative
    const int n = target.algebra().dim();
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = 2.0 * fm[i] - fx[i] - fy[i];
      sq += d * d;
    }
    const double lam = target.config().lambdas[0];
    return lam * lam * sq / (4.0 * half * half);
  }
  const double left = target.dist(fx, fm) / half;
  const double right = target.dist(fm, fy) / half;
  const double whole = target.dist(fx, fy) / span;
  if (p == 2.0) return 0.5 * (left * left + right * right) - whole * whole;
  return 0.5 * (std::pow(left, p) + std::pow(right, p)) - std::pow(whole, p);
}

double partial_p(const SegmentSample& s, int i, int j, double p) {
  if (s.n < 3) throw std::invalid_argument("degenerate segment: fewer than 3 nodes");
  if (i < 0 || j >= s.n || i >= j) throw std::invalid_argument("partial_p needs node indices i < j");
  const int m = (i + j) / 2;
  return partial_p(*s.target, s.image(i), s.image(m), s.image(j), (j - i) * s.step, p);
}

double alpha_segment(const SegmentSample& s, double p, double* min_partial) {
  if (s.n < 3) throw std::invalid_argument("degenerate segment: fewer than 3 nodes");
  if (s.n % 2 == 0) throw std::invalid_argument("alpha_segment needs an odd node count");
  const int cells = (s.n - 1) / 2;
  const double h = 2.0 * s.step;
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cells; ++i) {
    for (int j = i + 1; j < cells; ++j) {
      const int a = 2 * i + 1, b = 2 * j + 1;
      double d = partial_p(*s.target, s.image(a), s.image((a + b) / 2), s.image(b), (b - a) * s.step, p);
      sum += d;
      lo = std::min(lo, d);
    }
  }
  if (min_partial) *min_partial = std::min(*min_partial, lo);
  const double len = (s.n - 1) * s.step;
  return sum * h * h / (2.0 * len * len);
}

std::uint64_t cube_seed(std::uint64_t seed, int id) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(id) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<std::vector<double>> directions(int m1, const AlphaParams& params, std::mt19937_64& rng) {
  std::vector<std::vector<double>> out;
  const int k = params.direction_samples;
  if (m1 == 1) {
    for (int i = 0; i < k; ++i) out.push_back({1.0});
  } else if (m1 == 2 && params.low_discrepancy) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (int i = 0; i < k; ++i) {
      // lines are unoriented, so half the circle suffices
      double th = std::numbers::pi * (i + u) / k;
      out.push_back({std::cos(th), std::sin(th)});
    }
  } else {
    std::normal_distribution<double> gauss;
    for (int i = 0; i < k; ++i) {
      std::vector<double> v(m1);
      double nrm = 0.0;
      do {
        nrm = 0.0;
        for (auto& c : v) {
          c = gauss(rng);
          nrm += c * c;
        }
      } while (nrm < 1e-12);
      nrm = std::sqrt(nrm);
      for (auto& c : v) c /= nrm;
      out.push_back(std::move(v));
    }
  }
  return out;
}

// Orthonormal basis of the complement of unit v in R^m.
std::vector<std::vector<double>> complement(const std::vector<double>& v) {
  const int m = static_cast<int>(v.size());
  std::vector<std::vector<double>> basis{v};
  for (int e = 0; e < m && static_cast<int>(basis.size()) < m; ++e) {
    std::vector<double> u(m, 0.0);
    u[e] = 1.0;
    for (const auto& b : basis) {
      double dot = 0.0;
      for (int c = 0; c < m; ++c) dot += u[c] * b[c];
      for (int c = 0; c < m; ++c) u[c] -= dot * b[c];
    }
    double nrm = 0.0;
    for (double c : u) nrm += c * c;
    nrm = std::sqrt(nrm);
    if (nrm < 1e-6) continue;
    for (auto& c : u) c /= nrm;
    basis.push_back(std::move(u));
  }
  basis.erase(basis.begin());
  return basis;
}

}  // namespace

AlphaCube alpha_ball(const LipschitzMap& f, const double* z, double side, const AlphaParams& params,
                     std::uint64_t seed) {
  params.validate();
  AlphaCube out;
  const auto& dom = *f.domain();
  const auto& lam = f.domain_config().lambdas;
  const int n = dom.dim(), m1 = dom.layer_dim(1);
  const int hom_dim = homogeneous_dimension(dom);
  const double rho = params.L * side;
  const double step = params.segment_step * rho;
  const int half_nodes = static_cast<int>(std::ceil(3.0 * rho / lam[0] / step - 1e-9));
  const int nodes = 2 * half_nodes + 1;
  std::mt19937_64 rng(seed);

  // slab half-widths: layer 1 inside v-perp, layer k >= 2 from w = log(g exp(-t v))
  double gnorm = 0.0;
  for (int k = 1; k <= dom.step(); ++k) gnorm += std::pow(rho / lam[k - 1], 2 * k);
  gnorm = std::sqrt(gnorm);
  const double cross = bch_cross_bound(dom, gnorm, rho / lam[0]);
  std::vector<double> upper_hw(n, 0.0);
  for (int k = 2; k <= dom.step(); ++k) {
    for (int c = dom.layer_offset(k); c < dom.layer_offset(k) + dom.layer_dim(k); ++c) {
      upper_hw[c] = std::pow(rho / lam[k - 1], k) + cross;
    }
  }

  const Metric& metric = f.domain_metric();
  std::vector<double> w(n), line(n, 0.0), rel(static_cast<std::size_t>(nodes) * n), x(n);
  std::vector<double> norms(nodes);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double total = 0.0;
  for (const auto& v : directions(m1, params, rng)) {
    ++out.directions;
    auto perp = complement(v);
    double volume = 1.0;
    for (std::size_t b = 0; b < perp.size(); ++b) volume *= 2.0 * rho / lam[0];
    for (int c = m1; c < n; ++c) volume *= 2.0 * upper_hw[c];

    double sum = 0.0;
    for (int s = 0; s < params.translate_samples; ++s) {
      ++out.lines;
      std::fill(w.begin(), w.end(), 0.0);
      for (const auto& b : perp) {
        double coef = unit(rng) * rho / lam[0];
        for (int c = 0; c < m1; ++c) w[c] += coef * b[c];
      }
      for (int c = m1; c < n; ++c) w[c] = unit(rng) * upper_hw[c];

      int first = -1, last = -1;
      bool hit = false;
      for (int i = 0; i < nodes; ++i) {
        const double t = (i - half_nodes) * step;
        for (int c = 0; c < m1; ++c) line[c] = t * v[c];
        double* r = rel.data() + static_cast<std::size_t>(i) * n;
        metric.multiply(w.data(), line.data(), r);
        norms[i] = metric.norm(r);
        if (norms[i] <= rho) hit = true;
        if (norms[i] <= 3.0 * rho) {
          if (first < 0) first = i;
          last = i;
        }
      }
      if (!hit) continue;
      ++out.lines_hit;
      // the segment is the hull of the line inside B(z, 3 L l(Q)), trimmed to an odd node count
      if ((last - first) % 2 == 1) --last;
      if (last - first < 2) continue;
      SegmentSample seg;
      seg.a = (first - half_nodes) * step;
      seg.step = step;
      seg.n = last - first + 1;
      seg.cod_dim = f.codomain()->dim();
      seg.target = &f.target_metric();
      seg.images.resize(static_cast<std::size_t>(seg.n) * seg.cod_dim);
      for (int i = first; i <= last; ++i) {
        metric.multiply(z, rel.data() + static_cast<std::size_t>(i) * n, x.data());
        f.eval(x.data(), seg.images.data() + static_cast<std::size_t>(i - first) * seg.cod_dim);
      }
      sum += alpha_segment(seg, params.p, &out.min_partial);
    }
    total += volume * sum / params.translate_samples;
  }
  out.no_hits = out.lines_hit == 0;
  out.value = total / out.directions / std::pow(rho, hom_dim - 1);
  return out;
}

AlphaCube alpha_cube(const LipschitzMap& f, const CubeTree& tree, int id, const AlphaParams& params,
                     std::uint64_t seed) {
  require_same_algebra(*tree.lattice().algebra(), *f.domain());
  return alpha_ball(f, tree.lattice().point(tree.cube(id).center), tree.side(id), params, cube_seed(seed, id));
}

namespace kernels {

std::vector<AlphaCube> serial::alpha_cubes(const LipschitzMap& f, const CubeTree& tree, std::span<const int> ids,
                                           const AlphaParams& params, std::uint64_t seed) {
  std::vector<AlphaCube> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = alpha_cube(f, tree, ids[i], params, seed);
  return out;
}

std::vector<AlphaCube> omp::alpha_cubes(const LipschitzMap& f, const CubeTree& tree, std::span<const int> ids,
                                        const AlphaParams& params, std::uint64_t seed) {
  std::vector<AlphaCube> out(ids.size());
  const long long n = static_cast<long long>(ids.size());
#ifdef CARNOT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long long i = 0; i < n; ++i) out[i] = alpha_cube(f, tree, ids[i], params, seed);
  return out;
}

}  // namespace kernels

nlohmann::json CarlesonReport::to_json() const {
  nlohmann::json scales = nlohmann::json::array();
  for (const auto& s : per_scale) {
    scales.push_back({{"scale", s.scale}, {"cubes", s.cubes}, {"weighted_sum", s.weighted}, {"max_alpha", s.max_alpha}});
  }
  return {{"root", root},
          {"measure", measure},
          {"total", total},
          {"min_summand", min_summand},
          {"finite", std::isfinite(total)},
          {"per_scale", scales}};
}

CarlesonReport carleson_sum(const CubeTree& tree, int s, const std::vector<AlphaCube>& alpha) {
  CarlesonReport r;
  r.root = s;
  r.measure = tree.measure(s);
  r.min_summand = std::numeric_limits<double>::infinity();
  std::vector<CarlesonReport::Scale> by(tree.k_max() - tree.k_min() + 1);
  for (int k = tree.k_min(); k <= tree.k_max(); ++k) by[k - tree.k_min()].scale = k;
  for (int id : descendants(tree, s)) {
    if (id >= static_cast<int>(alpha.size())) throw std::out_of_range("alpha table does not cover the cube family");
    const double term = alpha[id].value * tree.measure(id) / r.measure;
    auto& sc = by[tree.cube(id).scale - tree.k_min()];
    ++sc.cubes;
    sc.weighted += term;
    sc.max_alpha = std::max(sc.max_alpha, alpha[id].value);
    r.total += term;
    r.min_summand = std::min(r.min_summand, term);
  }
  for (auto it = by.rbegin(); it != by.rend(); ++it) {
    if (it->cubes > 0) r.per_scale.push_back(*it);
  }
  return r;
}

nlohmann::json TargetCertificate::to_json() const {
  return {{"min_partial", min_partial}, {"evaluations", evaluations}, {"pass", ok()}};
}

TargetCertificate target_certificate(const LipschitzMap& f, double radius, const AlphaParams& params,
                                     int segments, std::uint64_t seed) {
  params.validate();
  TargetCertificate cert;
  std::mt19937_64 rng(seed);
  const int m1 = f.domain()->layer_dim(1);
  AlphaParams dir = params;
  dir.direction_samples = 1;
  dir.low_discrepancy = false;
  for (int s = 0; s < segments; ++s) {
    auto base = random_ball_point(f.domain(), f.domain_config(), radius, rng);
    auto v = directions(m1, dir, rng).front();
    SegmentSample seg = sample_segment(f, base.coords.data(), v, -radius, radius, 33);
    for (int i = 0; i < seg.n; ++i) {
      for (int j = i + 2; j < seg.n; j += 2) {
        cert.min_partial = std::min(cert.min_partial, partial_p(seg, i, j, params.p));
        ++cert.evaluations;
      }
    }
  }
  return cert;
}

void write_alpha_csv(std::ostream& out, const CubeTree& tree, std::span<const int> ids,
                     const std::vector<AlphaCube>& alpha) {
  out << "cube,scale,alpha,points,measure,directions,lines,lines_hit\n";
  out.precision(17);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    const auto& a = alpha.at(id);
    out << id << ',' << tree.cube(id).scale << ',' << a.value << ',' << tree.cube(id).points.size() << ','
        << tree.measure(id) << ',' << a.directions << ',' << a.lines << ',' << a.lines_hit << '\n';
  }
}

}  // namespace carnot
