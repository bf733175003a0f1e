#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "carnot/homomorphism.hpp"
#include "carnot/lattice.hpp"

namespace carnot {

/// A map f : G -> H evaluated pointwise in exponential coordinates, with a
/// declared Lipschitz constant for (d_G, d_H) under the stored norm configs.
class LipschitzMap {
 public:
  LipschitzMap(std::string name, AlgebraPtr domain, NormConfig domain_cfg, AlgebraPtr codomain,
               NormConfig codomain_cfg, double declared, std::string justification);
  virtual ~LipschitzMap() = default;

  const std::string& name() const { return name_; }
  const AlgebraPtr& domain() const { return dom_; }
  const AlgebraPtr& codomain() const { return cod_; }
  const NormConfig& domain_config() const { return dom_cfg_; }
  const NormConfig& codomain_config() const { return cod_cfg_; }
  const Metric& domain_metric() const { return dom_metric_; }
  const Metric& target_metric() const { return cod_metric_; }
  double declared_lipschitz() const { return declared_; }
  const std::string& justification() const { return justification_; }

  /// out has codomain()->dim() entries.
  virtual void eval(const double* x, double* out) const = 0;
  /// Whether f(E) has zero H^N content for every E, N the homogeneous
  /// dimension of the domain. Defaults to a dimension count.
  virtual bool null_image() const;
  std::vector<double> eval(const FloatPoint& x) const;

 private:
  std::string name_;
  AlgebraPtr dom_, cod_;
  NormConfig dom_cfg_, cod_cfg_;
  Metric dom_metric_, cod_metric_;
  double declared_;
  std::string justification_;
};

using MapPtr = std::shared_ptr<const LipschitzMap>;

/// A homomorphism. With `rescale`, it is first composed with the dilation
/// 1/s for a dyadic rational s >= its Lipschitz constant.
MapPtr make_hom_map(const Homomorphism& hom, NormConfig dom_cfg, NormConfig cod_cfg, bool rescale = true,
                    std::string name = "hom");
/// exp(g_1 + ...) -> g_1 with |.| applied to the listed first-layer coordinates,
/// into the abelian group of dimension m_1 normed by lambda_1 |v|.
MapPtr make_fold_map(AlgebraPtr domain, NormConfig dom_cfg, std::vector<int> folded);
MapPtr make_constant_map(AlgebraPtr domain, NormConfig dom_cfg, AlgebraPtr codomain, NormConfig cod_cfg,
                         std::vector<double> value);
/// x -> f(g x)
MapPtr make_left_translated(MapPtr f, FloatPoint g);

struct LipschitzAudit {
  double declared = 0.0;
  double measured = 0.0;  // max d_H(f x, f y) / d_G(x, y) over sampled pairs
  long long pairs = 0;
  bool ok() const { return measured <= declared * 1.01; }
};

/// Half the pairs are uniform in B(0, radius); half are local (y = x q with N(q) small).
LipschitzAudit audit_lipschitz(const LipschitzMap& f, double radius, int pairs, std::uint64_t seed);

/// Images of every lattice point, indexed for ball queries in the codomain.
class MapSample {
 public:
  MapSample(MapPtr f, LatticePtr lattice);
  const LipschitzMap& map() const { return *f_; }
  const MapPtr& map_ptr() const { return f_; }
  const GradedLattice& lattice() const { return *lattice_; }
  const LatticePtr& lattice_ptr() const { return lattice_; }
  const SpatialIndex& image() const { return *image_; }
  const double* value(int i) const { return image_->point(i); }

 private:
  MapPtr f_;
  LatticePtr lattice_;
  std::unique_ptr<SpatialIndex> image_;
};

}  // namespace carnot
