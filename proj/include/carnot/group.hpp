#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "carnot/algebra.hpp"

namespace carnot {

/// Group element in exponential coordinates, graded by layer.
template <typename T>
struct GroupPoint {
  AlgebraPtr algebra;
  std::vector<T> coords;

  GroupPoint() = default;
  GroupPoint(AlgebraPtr alg, std::vector<T> c) : algebra(std::move(alg)), coords(std::move(c)) {
    if (static_cast<int>(coords.size()) != algebra->dim()) {
      throw AlgebraError("point has " + std::to_string(coords.size()) + " coordinates, algebra '" +
                         algebra->name() + "' has dimension " + std::to_string(algebra->dim()));
    }
  }

  static GroupPoint identity(AlgebraPtr alg) {
    std::vector<T> c(alg->dim(), T(0));
    return GroupPoint(std::move(alg), std::move(c));
  }

  std::span<const T> layer(int j) const {
    return std::span<const T>(coords).subspan(algebra->layer_offset(j), algebra->layer_dim(j));
  }
  bool is_identity() const {
    for (const auto& c : coords) {
      if (!is_zero(c)) return false;
    }
    return true;
  }
  friend bool operator==(const GroupPoint& x, const GroupPoint& y) {
    return x.coords == y.coords && x.algebra->same_as(*y.algebra);
  }
};

using ExactPoint = GroupPoint<QSqrt2>;
using FloatPoint = GroupPoint<double>;

FloatPoint to_float(const ExactPoint& p);

/// Scratch storage for BCH evaluation; one per thread.
template <typename T>
struct BchScratch {
  std::vector<T> stack;
};

/// out = log(exp(u) exp(v)) via the algebra's Dynkin table.
/// `out` must not alias `u` or `v`.
template <typename T>
void bch_into(const StratifiedAlgebra& alg, const T* u, const T* v, T* out,
              BchScratch<T>& scratch) {
  const int n = alg.dim();
  const int r = alg.step();
  const BchTable& table = alg.bch_table();
  scratch.stack.resize(static_cast<std::size_t>(n) * (r + 1));
  for (int i = 0; i < n; ++i) out[i] = u[i] + v[i];
  if (r == 1 || alg.entries().empty()) return;

  // Depth-first over words, prepending letters to a suffix whose nested
  // bracket is `val`. Zero brackets prune the whole subtree.
  auto visit = [&](auto&& self, int length, unsigned bits, const T* val) -> void {
    if (length == r) return;
    T* next = scratch.stack.data() + static_cast<std::size_t>(length) * n;
    for (unsigned letter = 0; letter < 2; ++letter) {
      alg.bracket_into(letter == 0 ? u : v, val, next);
      bool nonzero = false;
      for (int i = 0; i < n; ++i) {
        if (!is_zero(next[i])) {
          nonzero = true;
          break;
        }
      }
      if (!nonzero) continue;
      unsigned word = letter | (bits << 1);
      T c;
      if constexpr (std::is_same_v<T, double>) {
        c = table.coefficient_d(length + 1, word);
      } else {
        c = T(table.coefficient(length + 1, word));
      }
      if (!is_zero(c)) {
        for (int i = 0; i < n; ++i) out[i] += c * next[i];
      }
      self(self, length + 1, word, next);
    }
  };
  visit(visit, 1, 0u, u);
  visit(visit, 1, 1u, v);
}

void require_same_algebra(const StratifiedAlgebra& a, const StratifiedAlgebra& b);

template <typename T>
GroupPoint<T> bch_multiply(const GroupPoint<T>& g, const GroupPoint<T>& h) {
  require_same_algebra(*g.algebra, *h.algebra);
  std::vector<T> out(g.coords.size());
  BchScratch<T> scratch;
  bch_into(*g.algebra, g.coords.data(), h.coords.data(), out.data(), scratch);
  return GroupPoint<T>(g.algebra, std::move(out));
}

template <typename T>
GroupPoint<T> invert(const GroupPoint<T>& g) {
  std::vector<T> c(g.coords.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = -g.coords[i];
  return GroupPoint<T>(g.algebra, std::move(c));
}

/// delta_lambda: layer j scaled by lambda^j. Throws on lambda <= 0.
template <typename T>
GroupPoint<T> dilate(const T& lambda, const GroupPoint<T>& g) {
  if (!(lambda > T(0))) throw std::invalid_argument("dilation factor must be positive");
  GroupPoint<T> out = g;
  T power = lambda;
  for (int j = 1; j <= g.algebra->step(); ++j) {
    for (int i = 0; i < g.algebra->layer_dim(j); ++i) out.coords[g.algebra->layer_offset(j) + i] *= power;
    power *= lambda;
  }
  return out;
}

template <typename T>
GroupPoint<T> bracket(const GroupPoint<T>& u, const GroupPoint<T>& v) {
  require_same_algebra(*u.algebra, *v.algebra);
  return GroupPoint<T>(u.algebra, u.algebra->bracket(std::span<const T>(u.coords),
                                                     std::span<const T>(v.coords)));
}

// ---------------------------------------------------------------------------
// Homogeneous norm N_inf and its quasi-metric

struct NormConfig {
  std::vector<double> lambdas;   // one positive weight per layer
  double quasi_constant = 1.0;   // measured C_Q

  static NormConfig ones(int step) { return NormConfig{std::vector<double>(step, 1.0), 1.0}; }
  void validate(int step) const;
};

/// max_k lambda_k |g_k|^(1/k) on raw coordinates.
double norm_infty(const StratifiedAlgebra& alg, const double* coords, const NormConfig& cfg);
double norm_infty(const FloatPoint& g, const NormConfig& cfg);

/// Left-invariant distance d(g, h) = N_inf(g^{-1} h) on raw coordinates.
class Metric {
 public:
  Metric(AlgebraPtr alg, NormConfig cfg);
  const StratifiedAlgebra& algebra() const { return *alg_; }
  const AlgebraPtr& algebra_ptr() const { return alg_; }
  const NormConfig& config() const { return cfg_; }

  double dist(const double* g, const double* h) const;
  double dist(const FloatPoint& g, const FloatPoint& h) const {
    return dist(g.coords.data(), h.coords.data());
  }
  double norm(const double* g) const { return norm_infty(*alg_, g, cfg_); }
  /// out = g * h
  void multiply(const double* g, const double* h, double* out) const;

  /// Step-1 targets: d is lambda_1 times the Euclidean distance.
  bool euclidean() const { return abelian_ && alg_->step() == 1; }

  /// Lower bound on the first-layer Euclidean displacement implied by d <= r.
  double first_layer_reach(double r) const { return r / cfg_.lambdas[0]; }

 private:
  AlgebraPtr alg_;
  NormConfig cfg_;
  bool abelian_;
};

double dist_infty(const FloatPoint& g, const FloatPoint& h, const NormConfig& cfg);

/// Max over sampled triples of d(x,z) / (d(x,y) + d(y,z)); degenerate y = x included.
double validate_triangle(NormConfig& cfg, const AlgebraPtr& alg, int sample_count,
                         std::uint64_t seed = 1);

/// x * exp(t v) for a unit first-layer vector v (given in first-layer coordinates).
FloatPoint horizontal_point(const FloatPoint& x, std::span<const double> v, double t);

/// Right-translation distortion: max_i |(g h)_i - g_i| / eps over samples with
/// N(g) <= 1 and N(h) <= eps.
double right_translation_distortion(const AlgebraPtr& alg, const NormConfig& cfg, double eps,
                                    int samples, std::uint64_t seed = 7);

/// Haar-uniform random point of B(0, radius): the N_inf ball is a product of
/// per-layer Euclidean balls.
FloatPoint random_ball_point(const AlgebraPtr& alg, const NormConfig& cfg, double radius,
                             std::mt19937_64& rng);

}  // namespace carnot
