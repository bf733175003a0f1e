#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "carnot/group.hpp"

namespace carnot {

class JacobiInconsistent : public AlgebraError {
 public:
  JacobiInconsistent(const std::string& what, std::string triple, QSqrt2 residual)
      : AlgebraError(what), triple(std::move(triple)), residual(std::move(residual)) {}
  std::string triple;   // first basis triple whose constraint cannot be met
  QSqrt2 residual;      // leftover coefficient after eliminating the unknowns
};

/// Parameters of the step-6 example; t[k] holds t_{k+3}.
struct ExampleParams {
  std::array<QSqrt2, 4> t{QSqrt2(1), QSqrt2(1), QSqrt2(1), QSqrt2(1)};
};

/// Unknown bracket [e_a, e_b] = x * e_c solved from the Jacobi constraints.
struct SolvedBracket {
  int a, b, c;
  QSqrt2 value;
};

struct ExampleAlgebra {
  AlgebraPtr algebra;                 // basis X, Y, Z2, ..., Z6
  std::vector<SolvedBracket> solved;  // completed [Z_i, Z_j]
};

/// Basis indices of the example algebra.
inline constexpr int kX = 0;
inline constexpr int kY = 1;
inline constexpr int kZ(int i) { return i; }  // Z_i sits at index i for i in 2..6

/// Prescribed relations with every [Z_i, Z_j] left at zero, without auditing.
AlgebraPtr example_relations_only(const ExampleParams& p);

/// Completes [Z_i, Z_j] by an exact solve of the Jacobi system; throws
/// JacobiInconsistent when no completion exists for these t values.
ExampleAlgebra build_example_algebra(const ExampleParams& p);

struct CommutatorReport {
  int i = 0;
  QSqrt2 coordinate;   // Z_{i+1} coordinate of g u g^-1 u^-1
  QSqrt2 expected;     // (a t_{i+1} + b) s_i
  bool leading_ok = false;
  bool remainder_ok = false;  // all other nonzero coordinates in layers >= i+2
  ExactPoint commutator;
  bool ok() const { return leading_ok && remainder_ok; }
};

/// g = exp(aX + bY), u = exp(s Z_i). Uses the algebra's t values.
CommutatorReport commutator_leading_term(const AlgebraPtr& alg, const ExampleParams& p,
                                         const QSqrt2& a, const QSqrt2& b, int i, const QSqrt2& s);

struct MobiusResult {
  bool pole = false;
  bool rational = false;
  QSqrt2 value;  // (a t + b) / (c t + d) when not a pole
};

/// Decides whether (a t + b)/(c t + d) is rational. Throws unless ad - bc = 1.
MobiusResult mobius_rationality(const QSqrt2& a, const QSqrt2& b, const QSqrt2& c,
                                const QSqrt2& d, const QSqrt2& t);

struct DensityResult {
  bool discrete = false;  // exact rational ratio with lattice gap >= eps
  long long p = 0;
  long long q = 0;
  double residual = 0.0;  // |p alpha + q beta|
  double gap = 0.0;       // minimal positive element when the ratio is rational
};

/// Integers (p, q) with |p alpha + q beta| < eps, or a discreteness report.
DensityResult density_probe(const QSqrt2& alpha, const QSqrt2& beta, double eps,
                            long long max_denominator = 1000000000LL);

struct CertificateOptions {
  ExampleParams obstruction{{QSqrt2(2), QSqrt2(3), QSqrt2(5), QSqrt2::sqrt2()}};
  int commutator_draws = 50;
  int unimodular_draws = 1000;
  int jacobi_draws = 50;
  double density_eps = 0.01;
  std::uint64_t seed = 2024;
};

/// Runs every check and returns the JSON certificate; "all_pass" summarizes.
nlohmann::json discreteness_certificate(const CertificateOptions& opt);

}  // namespace carnot
