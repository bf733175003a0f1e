#include "carnot/group.hpp"

#include <algorithm>
#include <cmath>

namespace carnot {

FloatPoint to_float(const ExactPoint& p) {
  std::vector<double> c(p.coords.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = p.coords[i].to_double();
  return FloatPoint(p.algebra, std::move(c));
}

void require_same_algebra(const StratifiedAlgebra& a, const StratifiedAlgebra& b) {
  if (!a.same_as(b)) {
    throw AlgebraError("mismatched algebras: '" + a.name() + "' vs '" + b.name() + "'");
  }
}

void NormConfig::validate(int step) const {
  if (static_cast<int>(lambdas.size()) != step) {
    throw std::invalid_argument("norm config needs one lambda per layer");
  }
  for (double l : lambdas) {
    if (!(l > 0.0)) throw std::invalid_argument("norm lambdas must be positive");
  }
}

double norm_infty(const StratifiedAlgebra& alg, const double* coords, const NormConfig& cfg) {
  double best = 0.0;
  for (int k = 1; k <= alg.step(); ++k) {
    const double* seg = coords + alg.layer_offset(k);
    double sq = 0.0;
    for (int i = 0; i < alg.layer_dim(k); ++i) sq += seg[i] * seg[i];
    double len = std::sqrt(sq);
    double root;
    switch (k) {
      case 1: root = len; break;
      case 2: root = std::sqrt(len); break;
      default: root = std::pow(len, 1.0 / k);
    }
    best = std::max(best, cfg.lambdas[k - 1] * root);
  }
  return best;
}

double norm_infty(const FloatPoint& g, const NormConfig& cfg) {
  return norm_infty(*g.algebra, g.coords.data(), cfg);
}

Metric::Metric(AlgebraPtr alg, NormConfig cfg) : alg_(std::move(alg)), cfg_(std::move(cfg)) {
  cfg_.validate(alg_->step());
  abelian_ = alg_->entries().empty();
}

double Metric::dist(const double* g, const double* h) const {
  const int n = alg_->dim();
  if (abelian_ && alg_->step() == 1) {
    double sq = 0.0;
    for (int i = 0; i < n; ++i) sq += (h[i] - g[i]) * (h[i] - g[i]);
    return cfg_.lambdas[0] * std::sqrt(sq);
  }
  constexpr int kStack = 16;
  double small_out[kStack], small_w[kStack], small_neg[kStack], small_t[kStack];
  thread_local std::vector<double> neg_v, out_v, w_v, t_v;
  thread_local BchScratch<double> scratch;
  double *out = small_out, *w = small_w, *neg = small_neg, *t = small_t;
  if (n > kStack) {
    for (auto* v : {&neg_v, &out_v, &w_v, &t_v}) v->resize(n);
    out = out_v.data(), w = w_v.data(), neg = neg_v.data(), t = t_v.data();
  }
  if (abelian_) {
    for (int i = 0; i < n; ++i) out[i] = h[i] - g[i];
  } else if (alg_->step() <= 3) {
    // log(e^U e^V) = U + V + [U,V]/2 + [U - V, [U,V]]/12 through step 3, with U = -g, V = h
    alg_->bracket_into(g, h, w);
    for (int i = 0; i < n; ++i) out[i] = h[i] - g[i] - 0.5 * w[i];
    if (alg_->step() == 3) {
      for (int i = 0; i < n; ++i) neg[i] = g[i] + h[i];
      alg_->bracket_into(neg, w, t);
      for (int i = 0; i < n; ++i) out[i] += t[i] / 12.0;
    }
  } else {
    for (int i = 0; i < n; ++i) neg[i] = -g[i];
    bch_into(*alg_, neg, h, out, scratch);
  }
  return norm_infty(*alg_, out, cfg_);
}

void Metric::multiply(const double* g, const double* h, double* out) const {
  thread_local BchScratch<double> scratch;
  bch_into(*alg_, g, h, out, scratch);
}

double dist_infty(const FloatPoint& g, const FloatPoint& h, const NormConfig& cfg) {
  require_same_algebra(*g.algebra, *h.algebra);
  return norm_infty(bch_multiply(invert(g), h), cfg);
}

FloatPoint random_ball_point(const AlgebraPtr& alg, const NormConfig& cfg, double radius,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> c(alg->dim(), 0.0);
  for (int k = 1; k <= alg->step(); ++k) {
    const int m = alg->layer_dim(k);
    const double layer_radius = std::pow(radius / cfg.lambdas[k - 1], k);
    std::vector<double> v(m);
    double sq;
    do {
      sq = 0.0;
      for (auto& x : v) {
        x = unit(rng);
        sq += x * x;
      }
    } while (sq > 1.0);
    for (int i = 0; i < m; ++i) c[alg->layer_offset(k) + i] = v[i] * layer_radius;
  }
  return FloatPoint(alg, std::move(c));
}

double validate_triangle(NormConfig& cfg, const AlgebraPtr& alg, int sample_count,
                         std::uint64_t seed) {
  Metric metric(alg, cfg);
  std::mt19937_64 rng(seed);
  double worst = 1.0;  // y = x
  for (int s = 0; s < sample_count; ++s) {
    auto x = random_ball_point(alg, cfg, 1.0, rng);
    auto y = random_ball_point(alg, cfg, 1.0, rng);
    auto z = random_ball_point(alg, cfg, 1.0, rng);
    double den = metric.dist(x, y) + metric.dist(y, z);
    if (den <= 0.0) continue;
    worst = std::max(worst, metric.dist(x, z) / den);
  }
  cfg.quasi_constant = worst;
  return worst;
}

FloatPoint horizontal_point(const FloatPoint& x, std::span<const double> v, double t) {
  const auto& alg = *x.algebra;
  if (static_cast<int>(v.size()) != alg.layer_dim(1)) {
    throw std::invalid_argument("horizontal direction must live in the first layer");
  }
  std::vector<double> step(alg.dim(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) step[i] = t * v[i];
  std::vector<double> out(alg.dim());
  BchScratch<double> scratch;
  bch_into(alg, x.coords.data(), step.data(), out.data(), scratch);
  return FloatPoint(x.algebra, std::move(out));
}

double right_translation_distortion(const AlgebraPtr& alg, const NormConfig& cfg, double eps,
                                    int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Metric metric(alg, cfg);
  std::vector<double> gh(alg->dim());
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    auto g = random_ball_point(alg, cfg, 1.0, rng);
    auto h = random_ball_point(alg, cfg, eps, rng);
    metric.multiply(g.coords.data(), h.coords.data(), gh.data());
    for (int k = 1; k <= alg->step(); ++k) {
      double sq = 0.0;
      for (int i = alg->layer_offset(k); i < alg->layer_offset(k) + alg->layer_dim(k); ++i) {
        sq += (gh[i] - g.coords[i]) * (gh[i] - g.coords[i]);
      }
      worst = std::max(worst, std::sqrt(sq));
    }
  }
  return worst / eps;
}

}  // namespace carnot
