#include "carnot/maps.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "carnot/presets.hpp"

namespace carnot {

LipschitzMap::LipschitzMap(std::string name, AlgebraPtr domain, NormConfig domain_cfg, AlgebraPtr codomain,
                           NormConfig codomain_cfg, double declared, std::string justification)
    : name_(std::move(name)),
      dom_(domain),
      cod_(codomain),
      dom_cfg_(domain_cfg),
      cod_cfg_(codomain_cfg),
      dom_metric_(std::move(domain), std::move(domain_cfg)),
      cod_metric_(std::move(codomain), std::move(codomain_cfg)),
      declared_(declared),
      justification_(std::move(justification)) {}

std::vector<double> LipschitzMap::eval(const FloatPoint& x) const {
  require_same_algebra(*x.algebra, *dom_);
  std::vector<double> out(cod_->dim());
  eval(x.coords.data(), out.data());
  return out;
}

bool LipschitzMap::null_image() const { return homogeneous_dimension(*cod_) < homogeneous_dimension(*dom_); }

namespace {

class HomMap final : public LipschitzMap {
 public:
  HomMap(std::string name, Homomorphism hom, NormConfig dom, NormConfig cod, double declared, std::string why)
      : LipschitzMap(std::move(name), hom.domain(), std::move(dom), hom.codomain(), std::move(cod), declared,
                     std::move(why)),
        hom_(std::move(hom)) {}
  void eval(const double* x, double* out) const override { hom_.apply_into(x, out); }
  bool null_image() const override { return LipschitzMap::null_image() || jacobian_degeneracy(hom_).degenerate; }

 private:
  Homomorphism hom_;
};

class FoldMap final : public LipschitzMap {
 public:
  FoldMap(AlgebraPtr dom, NormConfig cfg, std::vector<int> folded)
      : LipschitzMap("fold", dom, cfg, abelian_algebra(dom->layer_dim(1)),
                     NormConfig{{cfg.lambdas[0]}, 1.0}, 1.0,
                     "|phi(a) - phi(b)| <= |a - b| = |(g^-1 h)_1| and lambda_1 |(g^-1 h)_1| <= N(g^-1 h)"),
        m1_(dom->layer_dim(1)),
        folded_(std::move(folded)) {}
  void eval(const double* x, double* out) const override {
    for (int i = 0; i < m1_; ++i) out[i] = x[i];
    for (int c : folded_) out[c] = std::abs(out[c]);
  }

 private:
  int m1_;
  std::vector<int> folded_;
};

class ConstantMap final : public LipschitzMap {
 public:
  ConstantMap(AlgebraPtr dom, NormConfig dom_cfg, AlgebraPtr cod, NormConfig cod_cfg, std::vector<double> v)
      : LipschitzMap("constant", std::move(dom), std::move(dom_cfg), std::move(cod), std::move(cod_cfg), 0.0,
                     "all image distances vanish"),
        value_(std::move(v)) {}
  void eval(const double*, double* out) const override { std::copy(value_.begin(), value_.end(), out); }
  bool null_image() const override { return true; }

 private:
  std::vector<double> value_;
};

class TranslatedMap final : public LipschitzMap {
 public:
  TranslatedMap(MapPtr f, FloatPoint g)
      : LipschitzMap(f->name() + "*translate", f->domain(), f->domain_config(), f->codomain(),
                     f->codomain_config(), f->declared_lipschitz(), "left translations are isometries"),
        f_(std::move(f)),
        g_(std::move(g)) {}
  void eval(const double* x, double* out) const override {
    thread_local std::vector<double> gx;
    gx.resize(g_.coords.size());
    domain_metric().multiply(g_.coords.data(), x, gx.data());
    f_->eval(gx.data(), out);
  }
  bool null_image() const override { return f_->null_image(); }

 private:
  MapPtr f_;
  FloatPoint g_;
};

// Smallest k/2^20 at or above x.
Rational dyadic_ceiling(double x) {
  const double scale = 1048576.0;
  return Rational(static_cast<long>(std::ceil(x * scale)), 1048576L);
}

}  // namespace

MapPtr make_hom_map(const Homomorphism& hom, NormConfig dom_cfg, NormConfig cod_cfg, bool rescale,
                    std::string name) {
  dom_cfg.validate(hom.domain()->step());
  cod_cfg.validate(hom.codomain()->step());
  double lip = hom.lipschitz_constant(dom_cfg, cod_cfg);
  if (!rescale || lip == 0.0) {
    return std::make_shared<HomMap>(std::move(name), hom, std::move(dom_cfg), std::move(cod_cfg), lip,
                                    "exact block-norm Lipschitz constant");
  }
  Rational s = dyadic_ceiling(lip);
  Homomorphism scaled = hom.dilated(QSqrt2(Rational(1) / s));
  double scaled_lip = scaled.lipschitz_constant(dom_cfg, cod_cfg);
  return std::make_shared<HomMap>(std::move(name), std::move(scaled), std::move(dom_cfg), std::move(cod_cfg),
                                  scaled_lip, "dilated by 1/s with s >= the block-norm Lipschitz constant");
}

MapPtr make_fold_map(AlgebraPtr domain, NormConfig dom_cfg, std::vector<int> folded) {
  dom_cfg.validate(domain->step());
  for (int c : folded) {
    if (c < 0 || c >= domain->layer_dim(1)) {
      throw std::invalid_argument("fold coordinate " + std::to_string(c) + " is not a first-layer index");
    }
  }
  return std::make_shared<FoldMap>(std::move(domain), std::move(dom_cfg), std::move(folded));
}

MapPtr make_constant_map(AlgebraPtr domain, NormConfig dom_cfg, AlgebraPtr codomain, NormConfig cod_cfg,
                         std::vector<double> value) {
  if (static_cast<int>(value.size()) != codomain->dim()) {
    throw std::invalid_argument("constant value has the wrong dimension for the codomain");
  }
  dom_cfg.validate(domain->step());
  cod_cfg.validate(codomain->step());
  return std::make_shared<ConstantMap>(std::move(domain), std::move(dom_cfg), std::move(codomain),
                                       std::move(cod_cfg), std::move(value));
}

MapPtr make_left_translated(MapPtr f, FloatPoint g) {
  require_same_algebra(*g.algebra, *f->domain());
  return std::make_shared<TranslatedMap>(std::move(f), std::move(g));
}

LipschitzAudit audit_lipschitz(const LipschitzMap& f, double radius, int pairs, std::uint64_t seed) {
  LipschitzAudit a;
  a.declared = f.declared_lipschitz();
  std::mt19937_64 rng(seed);
  const auto& dom = f.domain();
  std::vector<double> fx(f.codomain()->dim()), fy(f.codomain()->dim()), y(dom->dim());
  std::uniform_real_distribution<double> logscale(std::log(1e-3), 0.0);
  for (int s = 0; s < pairs; ++s) {
    auto x = random_ball_point(dom, f.domain_config(), radius, rng);
    if (s % 2 == 0) {
      auto yy = random_ball_point(dom, f.domain_config(), radius, rng);
      y = yy.coords;
    } else {
      auto q = random_ball_point(dom, f.domain_config(), radius * std::exp(logscale(rng)), rng);
      f.domain_metric().multiply(x.coords.data(), q.coords.data(), y.data());
    }
    double dg = f.domain_metric().dist(x.coords.data(), y.data());
    if (dg == 0.0) continue;
    f.eval(x.coords.data(), fx.data());
    f.eval(y.data(), fy.data());
    a.measured = std::max(a.measured, f.target_metric().dist(fx.data(), fy.data()) / dg);
    ++a.pairs;
  }
  return a;
}

MapSample::MapSample(MapPtr f, LatticePtr lattice) : f_(std::move(f)), lattice_(std::move(lattice)) {
  require_same_algebra(*lattice_->algebra(), *f_->domain());
  const int cd = f_->codomain()->dim();
  std::vector<double> values(static_cast<std::size_t>(lattice_->size()) * cd);
  for (int i = 0; i < lattice_->size(); ++i) f_->eval(lattice_->point(i), values.data() + static_cast<std::size_t>(i) * cd);
  image_ = std::make_unique<SpatialIndex>(f_->target_metric(), std::move(values));
}

}  // namespace carnot
