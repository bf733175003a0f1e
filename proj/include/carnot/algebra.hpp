#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "carnot/scalar.hpp"

namespace carnot {

class AlgebraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScalarField { rational, rational_sqrt2, floating };

std::string to_string(ScalarField f);
ScalarField scalar_field_from_string(const std::string& s);

/// One row of a structure-constant table: [e_a, e_b] = sum_c coeffs[c] e_c.
struct BracketSpec {
  int a = 0;
  int b = 0;
  std::vector<QSqrt2> coeffs;
};

/// Nonzero structure constant with a < b: [e_a, e_b] has coefficient `coef` on e_c.
struct BracketEntry {
  int a;
  int b;
  int c;
  QSqrt2 coef;
  double coef_d;
};

/// Result of auditing a table against the stratified Lie algebra axioms.
struct AlgebraAudit {
  bool antisymmetric = true;
  bool jacobi = true;
  bool graded = true;
  bool stratified = true;
  std::vector<std::string> problems;
  bool ok() const { return antisymmetric && jacobi && graded && stratified; }
};

/// Dynkin coefficients of log(e^U e^V) indexed by words in {U, V}.
///
/// Word letters are stored little-endian: bit i is the i-th letter from the
/// left (0 = U, 1 = V). The term for word w is coefficient(w) times the
/// right-nested bracket [w_0, [w_1, ... [w_{n-2}, w_{n-1}]]].
class BchTable {
 public:
  explicit BchTable(int max_length);
  int max_length() const { return max_length_; }
  const Rational& coefficient(int length, unsigned bits) const { return exact_[length][bits]; }
  double coefficient_d(int length, unsigned bits) const { return approx_[length][bits]; }

 private:
  int max_length_;
  std::vector<std::vector<Rational>> exact_;
  std::vector<std::vector<double>> approx_;
};

/// Stratified nilpotent Lie algebra with exact structure constants.
///
/// Basis vectors are numbered 0..dim-1 layer by layer. Instances are immutable
/// and are shared through std::shared_ptr by every point and map built on them.
class StratifiedAlgebra {
 public:
  /// Validates the table (antisymmetry, grading, Jacobi, stratification) and
  /// throws AlgebraError listing every violated axiom.
  StratifiedAlgebra(std::string name, std::vector<int> layer_dims,
                    const std::vector<BracketSpec>& brackets, ScalarField field);

  /// Builds without the Jacobi/stratification audit; callers run audit().
  static StratifiedAlgebra unchecked(std::string name, std::vector<int> layer_dims,
                                     const std::vector<BracketSpec>& brackets, ScalarField field);

  const std::string& name() const { return name_; }
  int step() const { return static_cast<int>(layer_dims_.size()); }
  int dim() const { return dim_; }
  ScalarField field() const { return field_; }
  const std::vector<int>& layer_dims() const { return layer_dims_; }
  int layer_dim(int layer) const { return layer_dims_[layer - 1]; }
  /// First basis index of `layer` (1-based layers).
  int layer_offset(int layer) const { return offsets_[layer - 1]; }
  /// Layer (1-based) of basis vector `index`.
  int layer_of(int index) const { return layer_of_[index]; }
  const std::vector<BracketEntry>& entries() const { return entries_; }
  const BchTable& bch_table() const { return *bch_; }

  /// Structure constant: coefficient of e_c in [e_a, e_b].
  QSqrt2 structure_constant(int a, int b, int c) const;
  /// Full bracket of two basis vectors as a coordinate vector.
  std::vector<QSqrt2> basis_bracket(int a, int b) const;

  /// out = [u, v]; out must not alias u or v.
  template <typename T>
  void bracket_into(const T* u, const T* v, T* out) const {
    for (int i = 0; i < dim_; ++i) out[i] = T(0);
    for (const auto& e : entries_) {
      if (is_zero(u[e.a]) && is_zero(u[e.b])) continue;
      T term = u[e.a] * v[e.b] - u[e.b] * v[e.a];
      if (is_zero(term)) continue;
      out[e.c] += coef<T>(e) * term;
    }
  }

  template <typename T>
  std::vector<T> bracket(std::span<const T> u, std::span<const T> v) const {
    check_size(u.size());
    check_size(v.size());
    std::vector<T> out(dim_);
    bracket_into(u.data(), v.data(), out.data());
    return out;
  }

  AlgebraAudit audit() const;

  /// True when both describe the same algebra (dims and structure constants).
  bool same_as(const StratifiedAlgebra& other) const;

  template <typename T>
  static T coef(const BracketEntry& e);

 private:
  StratifiedAlgebra() = default;
  void init(std::string name, std::vector<int> layer_dims, const std::vector<BracketSpec>& brackets,
            ScalarField field, AlgebraAudit& audit);
  void check_size(std::size_t n) const;

  std::string name_;
  std::vector<int> layer_dims_;
  std::vector<int> offsets_;
  std::vector<int> layer_of_;
  int dim_ = 0;
  ScalarField field_ = ScalarField::rational;
  std::vector<BracketEntry> entries_;
  std::shared_ptr<const BchTable> bch_;
};

template <>
inline double StratifiedAlgebra::coef<double>(const BracketEntry& e) {
  return e.coef_d;
}
template <>
inline QSqrt2 StratifiedAlgebra::coef<QSqrt2>(const BracketEntry& e) {
  return e.coef;
}

using AlgebraPtr = std::shared_ptr<const StratifiedAlgebra>;

/// Rank of a list of exact vectors (Gaussian elimination over Q(sqrt 2)).
int exact_rank(std::vector<std::vector<QSqrt2>> rows);

/// Homogeneous dimension N = sum_i i * dim V_i.
int homogeneous_dimension(const StratifiedAlgebra& alg);

}  // namespace carnot
