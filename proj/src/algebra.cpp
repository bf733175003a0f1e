#include "carnot/algebra.hpp"

#include <map>
#include <sstream>

namespace carnot {

std::string to_string(ScalarField f) {
  switch (f) {
    case ScalarField::rational: return "rational";
    case ScalarField::rational_sqrt2: return "rational-adjoin-sqrt2";
    case ScalarField::floating: return "float";
  }
  return "?";
}

ScalarField scalar_field_from_string(const std::string& s) {
  if (s == "rational") return ScalarField::rational;
  if (s == "rational-adjoin-sqrt2" || s == "sqrt2") return ScalarField::rational_sqrt2;
  if (s == "float") return ScalarField::floating;
  throw AlgebraError("unknown scalar field '" + s + "'");
}

// ---------------------------------------------------------------------------
// Dynkin table

namespace {

Rational factorial(int n) {
  mpz_class f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return Rational(f);
}

// Sum over factorizations of the word into blocks U^a V^b (a + b > 0) of
// (-1)^(k-1)/k * prod 1/(a! b!), where k is the number of blocks.
Rational dynkin_sum(int n, unsigned bits) {
  auto letter = [bits](int i) { return (bits >> i) & 1u; };
  // dp[pos][k]: weighted count of factorizations of the prefix [0, pos) into k blocks
  std::vector<std::vector<Rational>> dp(n + 1, std::vector<Rational>(n + 1, Rational(0)));
  dp[0][0] = 1;
  for (int pos = 0; pos < n; ++pos) {
    int run_u = 0;
    while (pos + run_u < n && letter(pos + run_u) == 0) ++run_u;
    for (int a = 0; a <= run_u; ++a) {
      int max_b = 0;
      if (a == run_u) {
        while (pos + a + max_b < n && letter(pos + a + max_b) == 1) ++max_b;
      }
      for (int b = 0; b <= max_b; ++b) {
        if (a + b == 0) continue;
        Rational w = 1 / (factorial(a) * factorial(b));
        for (int k = 0; k < n; ++k) {
          if (sgn(dp[pos][k]) == 0) continue;
          dp[pos + a + b][k + 1] += dp[pos][k] * w;
        }
      }
    }
  }
  Rational total = 0;
  for (int k = 1; k <= n; ++k) {
    Rational term = dp[n][k] / k;
    if (k % 2 == 0) term = -term;
    total += term;
  }
  return total;
}

}  // namespace

BchTable::BchTable(int max_length) : max_length_(max_length) {
  exact_.resize(max_length + 1);
  approx_.resize(max_length + 1);
  for (int n = 1; n <= max_length; ++n) {
    exact_[n].assign(std::size_t{1} << n, Rational(0));
    approx_[n].assign(std::size_t{1} << n, 0.0);
    for (unsigned bits = 0; bits < (1u << n); ++bits) {
      // words ending in a repeated letter have a vanishing nested bracket
      if (n >= 2 && (((bits >> (n - 1)) & 1u) == ((bits >> (n - 2)) & 1u))) continue;
      Rational c = dynkin_sum(n, bits) / n;
      c.canonicalize();
      exact_[n][bits] = c;
      approx_[n][bits] = c.get_d();
    }
  }
}

// ---------------------------------------------------------------------------
// StratifiedAlgebra

StratifiedAlgebra::StratifiedAlgebra(std::string name, std::vector<int> layer_dims,
                                     const std::vector<BracketSpec>& brackets, ScalarField field) {
  AlgebraAudit a;
  init(std::move(name), std::move(layer_dims), brackets, field, a);
  AlgebraAudit full = audit();
  for (auto& p : full.problems) a.problems.push_back(p);
  if (!a.problems.empty()) {
    std::ostringstream os;
    os << "invalid stratified algebra '" << name_ << "':";
    for (const auto& p : a.problems) os << "\n  " << p;
    throw AlgebraError(os.str());
  }
}

StratifiedAlgebra StratifiedAlgebra::unchecked(std::string name, std::vector<int> layer_dims,
                                               const std::vector<BracketSpec>& brackets,
                                               ScalarField field) {
  StratifiedAlgebra alg;
  AlgebraAudit a;
  alg.init(std::move(name), std::move(layer_dims), brackets, field, a);
  if (!a.problems.empty()) throw AlgebraError(a.problems.front());
  return alg;
}

void StratifiedAlgebra::init(std::string name, std::vector<int> layer_dims,
                             const std::vector<BracketSpec>& brackets, ScalarField field,
                             AlgebraAudit& audit) {
  name_ = std::move(name);
  layer_dims_ = std::move(layer_dims);
  field_ = field;
  if (layer_dims_.empty()) throw AlgebraError("step must be at least 1");
  dim_ = 0;
  for (std::size_t j = 0; j < layer_dims_.size(); ++j) {
    if (layer_dims_[j] <= 0) throw AlgebraError("layer dimensions must be positive");
    offsets_.push_back(dim_);
    for (int i = 0; i < layer_dims_[j]; ++i) layer_of_.push_back(static_cast<int>(j) + 1);
    dim_ += layer_dims_[j];
  }

  // canonical table keyed by (a, b) with a < b
  std::map<std::pair<int, int>, std::vector<QSqrt2>> table;
  for (const auto& spec : brackets) {
    if (spec.a < 0 || spec.b < 0 || spec.a >= dim_ || spec.b >= dim_) {
      throw AlgebraError("bracket index out of range");
    }
    if (static_cast<int>(spec.coeffs.size()) != dim_) {
      throw AlgebraError("bracket coefficient vector must have length " + std::to_string(dim_));
    }
    for (const auto& c : spec.coeffs) {
      if (!c.is_rational() && field_ == ScalarField::rational) {
        throw AlgebraError("irrational structure constant in a rational algebra");
      }
    }
    if (spec.a == spec.b) {
      for (const auto& c : spec.coeffs) {
        if (!c.is_zero()) {
          audit.antisymmetric = false;
          audit.problems.push_back("antisymmetry: [e" + std::to_string(spec.a) + ", e" +
                                   std::to_string(spec.a) + "] != 0");
          break;
        }
      }
      continue;
    }
    std::vector<QSqrt2> v = spec.coeffs;
    auto key = std::minmax(spec.a, spec.b);
    if (spec.a > spec.b) {
      for (auto& c : v) c = -c;
    }
    auto it = table.find(key);
    if (it != table.end()) {
      if (it->second != v) {
        audit.antisymmetric = false;
        audit.problems.push_back("antisymmetry: inconsistent entries for [e" +
                                 std::to_string(key.first) + ", e" + std::to_string(key.second) +
                                 "]");
      }
      continue;
    }
    table.emplace(key, std::move(v));
  }

  for (const auto& [key, v] : table) {
    int target = layer_of_[key.first] + layer_of_[key.second];
    for (int c = 0; c < dim_; ++c) {
      if (v[c].is_zero()) continue;
      if (layer_of_[c] != target) {
        audit.graded = false;
        audit.problems.push_back("grading: [e" + std::to_string(key.first) + ", e" +
                                 std::to_string(key.second) + "] has a component outside V_" +
                                 std::to_string(target));
        continue;
      }
      entries_.push_back({key.first, key.second, c, v[c], v[c].to_double()});
    }
  }
  bch_ = std::make_shared<BchTable>(step());
}

void StratifiedAlgebra::check_size(std::size_t n) const {
  if (static_cast<int>(n) != dim_) throw AlgebraError("vector length does not match algebra");
}

QSqrt2 StratifiedAlgebra::structure_constant(int a, int b, int c) const {
  int sign = 1;
  if (a > b) {
    std::swap(a, b);
    sign = -1;
  }
  for (const auto& e : entries_) {
    if (e.a == a && e.b == b && e.c == c) return sign > 0 ? e.coef : -e.coef;
  }
  return QSqrt2();
}

std::vector<QSqrt2> StratifiedAlgebra::basis_bracket(int a, int b) const {
  std::vector<QSqrt2> u(dim_), v(dim_), out(dim_);
  u[a] = 1;
  v[b] = 1;
  bracket_into(u.data(), v.data(), out.data());
  return out;
}

AlgebraAudit StratifiedAlgebra::audit() const {
  AlgebraAudit a;
  // Jacobi on all basis triples
  for (int i = 0; i < dim_ && a.jacobi; ++i) {
    for (int j = i + 1; j < dim_ && a.jacobi; ++j) {
      for (int k = j + 1; k < dim_; ++k) {
        std::vector<QSqrt2> ei(dim_), ej(dim_), ek(dim_), t(dim_), acc(dim_), tmp(dim_);
        ei[i] = 1;
        ej[j] = 1;
        ek[k] = 1;
        bracket_into(ej.data(), ek.data(), t.data());
        bracket_into(ei.data(), t.data(), tmp.data());
        for (int c = 0; c < dim_; ++c) acc[c] += tmp[c];
        bracket_into(ek.data(), ei.data(), t.data());
        bracket_into(ej.data(), t.data(), tmp.data());
        for (int c = 0; c < dim_; ++c) acc[c] += tmp[c];
        bracket_into(ei.data(), ej.data(), t.data());
        bracket_into(ek.data(), t.data(), tmp.data());
        for (int c = 0; c < dim_; ++c) acc[c] += tmp[c];
        for (int c = 0; c < dim_; ++c) {
          if (!acc[c].is_zero()) {
            a.jacobi = false;
            a.problems.push_back("jacobi: fails on (e" + std::to_string(i) + ", e" +
                                 std::to_string(j) + ", e" + std::to_string(k) + ")");
            break;
          }
        }
        if (!a.jacobi) break;
      }
    }
  }
  // [V_1, V_j] spans V_{j+1}
  for (int j = 1; j < step(); ++j) {
    std::vector<std::vector<QSqrt2>> rows;
    for (int x = 0; x < layer_dims_[0]; ++x) {
      for (int y = offsets_[j - 1]; y < offsets_[j - 1] + layer_dims_[j - 1]; ++y) {
        rows.push_back(basis_bracket(x, y));
      }
    }
    if (exact_rank(rows) != layer_dims_[j]) {
      a.stratified = false;
      a.problems.push_back("stratification: [V_1, V_" + std::to_string(j) + "] does not span V_" +
                           std::to_string(j + 1));
    }
  }
  return a;
}

bool StratifiedAlgebra::same_as(const StratifiedAlgebra& other) const {
  if (this == &other) return true;
  if (layer_dims_ != other.layer_dims_ || entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& x = entries_[i];
    const auto& y = other.entries_[i];
    if (x.a != y.a || x.b != y.b || x.c != y.c || x.coef != y.coef) return false;
  }
  return true;
}

int exact_rank(std::vector<std::vector<QSqrt2>> rows) {
  if (rows.empty()) return 0;
  const std::size_t cols = rows.front().size();
  int rank = 0;
  for (std::size_t col = 0; col < cols && rank < static_cast<int>(rows.size()); ++col) {
    std::size_t pivot = rank;
    while (pivot < rows.size() && rows[pivot][col].is_zero()) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[pivot], rows[rank]);
    QSqrt2 inv = rows[rank][col].inverse();
    for (std::size_t r = rank + 1; r < rows.size(); ++r) {
      if (rows[r][col].is_zero()) continue;
      QSqrt2 f = rows[r][col] * inv;
      for (std::size_t c = col; c < cols; ++c) rows[r][c] -= f * rows[rank][c];
    }
    ++rank;
  }
  return rank;
}

int homogeneous_dimension(const StratifiedAlgebra& alg) {
  int n = 0;
  for (int j = 1; j <= alg.step(); ++j) n += j * alg.layer_dim(j);
  return n;
}

}  // namespace carnot
