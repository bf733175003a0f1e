#include "carnot/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

namespace carnot {

double bch_cross_bound(const StratifiedAlgebra& alg, double unorm, double vnorm) {
  double bnorm = 0.0;
  for (const auto& e : alg.entries()) bnorm += std::abs(e.coef_d);
  const auto& table = alg.bch_table();
  double total = 0.0;
  for (int len = 2; len <= alg.step(); ++len) {
    for (unsigned w = 0; w < (1u << len); ++w) {
      int v_letters = std::popcount(w);
      int u_letters = len - v_letters;
      if (u_letters == 0 || v_letters == 0) continue;
      total += std::abs(table.coefficient_d(len, w)) * std::pow(bnorm, len - 1) * std::pow(unorm, u_letters) *
               std::pow(vnorm, v_letters);
    }
  }
  return total;
}

SpatialIndex::SpatialIndex(Metric metric, std::vector<double> coords)
    : metric_(std::move(metric)), dim_(metric_.algebra().dim()), coords_(std::move(coords)) {
  const auto& alg = metric_.algebra();
  if (coords_.size() % static_cast<std::size_t>(dim_) != 0) {
    throw std::invalid_argument("coordinate buffer is not a whole number of points");
  }
  n_ = static_cast<int>(coords_.size() / dim_);

  for (const auto& e : alg.entries()) bracket_norm_ += std::abs(e.coef_d);
  const auto& table = alg.bch_table();
  cross_.assign(alg.step() + 1, std::vector<double>(alg.step() + 1, 0.0));
  for (int len = 2; len <= alg.step(); ++len) {
    for (unsigned w = 0; w < (1u << len); ++w) {
      int v_letters = std::popcount(w);
      int u_letters = len - v_letters;
      if (u_letters == 0 || v_letters == 0) continue;
      cross_[len][u_letters] += std::abs(table.coefficient_d(len, w));
    }
  }

  for (int i = 0; i < alg.layer_dim(1); ++i) grid_coords_.push_back(i);
  if (alg.step() >= 2) grid_coords_.push_back(alg.layer_offset(alg.step()));
  const int g = static_cast<int>(grid_coords_.size());
  const int per_dim = std::clamp(
      static_cast<int>(std::round(std::pow(std::max(1.0, n_ / 4.0), 1.0 / g))), 1, 256);
  origin_.resize(g);
  cell_.resize(g);
  counts_.assign(g, per_dim);
  for (int k = 0; k < g; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i < n_; ++i) {
      lo = std::min(lo, point(i)[grid_coords_[k]]);
      hi = std::max(hi, point(i)[grid_coords_[k]]);
    }
    if (n_ == 0) lo = hi = 0.0;
    origin_[k] = lo;
    cell_[k] = std::max((hi - lo) / per_dim, 1e-12) * (1.0 + 1e-12);
  }
  std::size_t total = 1;
  for (int c : counts_) total *= static_cast<std::size_t>(c);
  std::vector<std::size_t> flat(n_);
  std::vector<int> fill(total + 1, 0);
  for (int i = 0; i < n_; ++i) {
    std::size_t f = 0;
    for (int k = 0; k < g; ++k) f = f * counts_[k] + cell_of(k, point(i)[grid_coords_[k]]);
    flat[i] = f;
    ++fill[f + 1];
  }
  for (std::size_t c = 0; c < total; ++c) fill[c + 1] += fill[c];
  cell_start_ = fill;
  order_.resize(n_);
  for (int i = 0; i < n_; ++i) order_[fill[flat[i]]++] = i;
}

void SpatialIndex::box(const double* x, double r, double* lo, double* hi) const {
  const auto& alg = metric_.algebra();
  const auto& lam = metric_.config().lambdas;
  double xnorm = 0.0;
  for (int c = 0; c < dim_; ++c) xnorm += x[c] * x[c];
  xnorm = std::sqrt(xnorm);
  double pnorm = 0.0;
  std::vector<double> layer_reach(alg.step() + 1);
  for (int k = 1; k <= alg.step(); ++k) {
    layer_reach[k] = std::pow(r / lam[k - 1], k);
    pnorm += layer_reach[k] * layer_reach[k];
  }
  pnorm = std::sqrt(pnorm);
  // |y - x - p| for y = x * p, summed over every bracket word containing both letters
  double cross = 0.0;
  for (int len = 2; len <= alg.step(); ++len) {
    double blen = std::pow(bracket_norm_, len - 1);
    for (int a = 1; a < len; ++a) {
      if (cross_[len][a] == 0.0) continue;
      cross += cross_[len][a] * blen * std::pow(xnorm, a) * std::pow(pnorm, len - a);
    }
  }
  for (int k = 1; k <= alg.step(); ++k) {
    double w = layer_reach[k] + (k >= 2 ? cross : 0.0);
    w = w * (1.0 + 1e-9) + 1e-12;
    for (int c = alg.layer_offset(k); c < alg.layer_offset(k) + alg.layer_dim(k); ++c) {
      lo[c] = x[c] - w;
      hi[c] = x[c] + w;
    }
  }
}

std::vector<int> SpatialIndex::within(const double* x, double r) const {
  std::vector<int> out;
  for_each_within(x, r, [&](int idx, double) { out.push_back(idx); });
  std::sort(out.begin(), out.end());
  return out;
}

std::pair<int, double> SpatialIndex::nearest(const double* x) const {
  if (n_ == 0) throw std::logic_error("nearest on an empty index");
  double r = 1e-3;
  for (std::size_t c = 0; c < grid_coords_.size(); ++c) r = std::max(r, cell_[c]);
  while (true) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for_each_within(x, r, [&](int idx, double d) {
      if (d < bd || (d == bd && idx < best)) {
        bd = d;
        best = idx;
      }
    });
    if (best >= 0) return {best, bd};
    r *= 2.0;
  }
}

// ---------------------------------------------------------------------------

namespace {

// Integer vectors m of length `len` with |m| * spacing <= reach.
std::vector<std::vector<long>> layer_grid(int len, double spacing, double reach) {
  const double lim = reach / spacing * (1.0 + 1e-12);
  const long m = static_cast<long>(std::floor(lim));
  std::vector<std::vector<long>> out;
  std::vector<long> cur(len, -m);
  if (len == 0) return {{}};
  while (true) {
    double sq = 0.0;
    for (long v : cur) sq += static_cast<double>(v) * v;
    if (std::sqrt(sq) <= lim) out.push_back(cur);
    int k = len - 1;
    while (k >= 0 && cur[k] == m) {
      cur[k] = -m;
      --k;
    }
    if (k < 0) break;
    ++cur[k];
  }
  return out;
}

}  // namespace

std::size_t GradedLattice::count(const StratifiedAlgebra& alg, const NormConfig& cfg, double radius,
                                 double h) {
  std::size_t total = 1;
  for (int j = 1; j <= alg.step(); ++j) {
    auto g = layer_grid(alg.layer_dim(j), std::pow(h, j), std::pow(radius / cfg.lambdas[j - 1], j));
    total *= g.size();
  }
  return total;
}

std::shared_ptr<const GradedLattice> GradedLattice::build(AlgebraPtr alg, NormConfig cfg,
                                                          const FloatPoint& center, double radius,
                                                          double h, std::size_t max_points) {
  if (!(radius > 0.0)) throw std::invalid_argument("lattice radius must be positive");
  if (!(h > 0.0) || h > radius) throw std::invalid_argument("lattice resolution must satisfy 0 < h <= R");
  cfg.validate(alg->step());
  require_same_algebra(*center.algebra, *alg);

  std::vector<std::vector<std::vector<long>>> layers;
  std::size_t total = 1;
  for (int j = 1; j <= alg->step(); ++j) {
    layers.push_back(
        layer_grid(alg->layer_dim(j), std::pow(h, j), std::pow(radius / cfg.lambdas[j - 1], j)));
    total *= layers.back().size();
    if (total > max_points) throw BudgetExceeded(count(*alg, cfg, radius, h), max_points);
  }

  const int n = alg->dim();
  std::vector<double> coords;
  coords.reserve(total * n);
  std::vector<std::size_t> pick(layers.size(), 0);
  std::vector<double> offset(n), out(n);
  BchScratch<double> scratch;
  bool at_identity_center = center.is_identity();
  int center_index = -1;
  for (std::size_t idx = 0; idx < total; ++idx) {
    bool zero = true;
    for (int j = 1; j <= alg->step(); ++j) {
      const auto& m = layers[j - 1][pick[j - 1]];
      const double sp = std::pow(h, j);
      for (int i = 0; i < alg->layer_dim(j); ++i) {
        offset[alg->layer_offset(j) + i] = sp * m[i];
        zero = zero && m[i] == 0;
      }
    }
    if (zero) center_index = static_cast<int>(idx);
    if (at_identity_center) {
      coords.insert(coords.end(), offset.begin(), offset.end());
    } else {
      bch_into(*alg, center.coords.data(), offset.data(), out.data(), scratch);
      coords.insert(coords.end(), out.begin(), out.end());
    }
    for (int j = alg->step() - 1; j >= 0; --j) {
      if (++pick[j] < layers[j].size()) break;
      pick[j] = 0;
    }
  }

  std::shared_ptr<GradedLattice> lat(new GradedLattice());
  lat->alg_ = alg;
  lat->center_ = center;
  lat->radius_ = radius;
  lat->h_ = h;
  lat->hom_dim_ = homogeneous_dimension(*alg);
  lat->cell_volume_ = std::pow(h, lat->hom_dim_);
  lat->center_index_ = center_index;
  lat->index_ = std::make_unique<SpatialIndex>(Metric(alg, std::move(cfg)), std::move(coords));
  return lat;
}

FloatPoint GradedLattice::group_point(int i) const {
  return FloatPoint(alg_, std::vector<double>(point(i), point(i) + dim()));
}

double GradedLattice::covering_radius(int samples, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  std::vector<double> y(dim());
  BchScratch<double> scratch;
  for (int s = 0; s < samples; ++s) {
    auto q = random_ball_point(alg_, norm_config(), radius_, rng);
    bch_into(*alg_, center_.coords.data(), q.coords.data(), y.data(), scratch);
    worst = std::max(worst, index_->nearest(y.data()).second);
  }
  return worst;
}

}  // namespace carnot
