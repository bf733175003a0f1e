#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "carnot/group.hpp"

namespace carnot {

class HomomorphismError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix over Q(sqrt 2).
struct ExactMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<QSqrt2> data;

  ExactMatrix() = default;
  ExactMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}
  static ExactMatrix identity(int n);
  static ExactMatrix from_double(const Eigen::MatrixXd& m);

  QSqrt2& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  const QSqrt2& operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  Eigen::MatrixXd to_double() const;
};

/// Solve M x = b exactly for square M; nullopt when M is singular.
std::optional<std::vector<QSqrt2>> exact_solve(ExactMatrix m, std::vector<QSqrt2> b);

/// Graded Lie group homomorphism in exponential coordinates, one linear block
/// per domain layer: V_j(g) -> V_j(h). Blocks for layers beyond the codomain
/// step have zero rows.
class Homomorphism {
 public:
  Homomorphism(AlgebraPtr domain, AlgebraPtr codomain, std::vector<ExactMatrix> blocks);

  const AlgebraPtr& domain() const { return domain_; }
  const AlgebraPtr& codomain() const { return codomain_; }
  const ExactMatrix& block(int layer) const { return blocks_[layer - 1]; }
  const Eigen::MatrixXd& block_d(int layer) const { return blocks_d_[layer - 1]; }

  template <typename T>
  void apply_into(const T* g, T* out) const {
    const auto& dom = *domain_;
    const auto& cod = *codomain_;
    for (int i = 0; i < cod.dim(); ++i) out[i] = T(0);
    for (int j = 1; j <= dom.step() && j <= cod.step(); ++j) {
      const int r0 = cod.layer_offset(j), c0 = dom.layer_offset(j);
      if constexpr (std::is_same_v<T, double>) {
        const auto& m = blocks_d_[j - 1];
        for (int r = 0; r < m.rows(); ++r) {
          double s = 0.0;
          for (int c = 0; c < m.cols(); ++c) s += m(r, c) * g[c0 + c];
          out[r0 + r] = s;
        }
      } else {
        const auto& m = blocks_[j - 1];
        for (int r = 0; r < m.rows; ++r) {
          T s(0);
          for (int c = 0; c < m.cols; ++c) {
            if (!m(r, c).is_zero() && !is_zero(g[c0 + c])) s += m(r, c) * g[c0 + c];
          }
          out[r0 + r] = s;
        }
      }
    }
  }

  template <typename T>
  GroupPoint<T> apply(const GroupPoint<T>& g) const {
    require_same_algebra(*g.algebra, *domain_);
    std::vector<T> out(codomain_->dim());
    apply_into(g.coords.data(), out.data());
    return GroupPoint<T>(codomain_, std::move(out));
  }

  /// First basis pair (a, b) violating A([e_a, e_b]) = [A e_a, A e_b], if any.
  std::optional<std::pair<int, int>> bracket_violation() const;

  /// Exact Lipschitz constant between (G, d_inf) and (H, d_inf).
  double lipschitz_constant(const NormConfig& dom_cfg, const NormConfig& cod_cfg) const;

  /// Post-composition with the codomain dilation delta_s.
  Homomorphism dilated(const QSqrt2& s) const;

 private:
  AlgebraPtr domain_;
  AlgebraPtr codomain_;
  std::vector<ExactMatrix> blocks_;
  std::vector<Eigen::MatrixXd> blocks_d_;
};

/// Extends a first-layer block to a homomorphism by bracket images.
/// Throws HomomorphismError when the induced map does not respect the brackets of g.
Homomorphism hom_from_first_layer(const ExactMatrix& a1, AlgebraPtr domain, AlgebraPtr codomain);

template <typename T>
GroupPoint<T> apply_hom(const Homomorphism& L, const GroupPoint<T>& g) {
  return L.apply(g);
}

struct CollapseWitness {
  int layer = 0;
  std::vector<double> direction;  // unit vector in V_layer(g)
  double image_norm = 0.0;        // N_inf(L(exp v))
};

/// Layer-wise collapse test: some unit v in a layer with N(L(e^v)) < eps.
std::optional<CollapseWitness> collapse_witness(const Homomorphism& L, double eps,
                                                const NormConfig& codomain_cfg);

/// Smallest value of N(L(e^v)) over unit v in each layer.
std::vector<double> layer_inradii(const Homomorphism& L, const NormConfig& codomain_cfg);

struct JacobianReport {
  bool degenerate = false;
  double value = 0.0;       // volume factor when not degenerate
  bool square = false;      // all blocks square, value = prod |det A_j|
};

JacobianReport jacobian_degeneracy(const Homomorphism& L);

}  // namespace carnot
