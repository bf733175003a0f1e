#pragma once

#include <random>

#include "carnot/group.hpp"

namespace carnot::testing {

inline QSqrt2 random_rational(std::mt19937_64& rng, int bound = 7) {
  std::uniform_int_distribution<int> num(-bound, bound), den(1, bound);
  return QSqrt2(Rational(num(rng), den(rng)));
}

inline ExactPoint random_exact(const AlgebraPtr& alg, std::mt19937_64& rng) {
  std::vector<QSqrt2> c(alg->dim());
  for (auto& x : c) x = random_rational(rng);
  return ExactPoint(alg, std::move(c));
}

inline FloatPoint random_float(const AlgebraPtr& alg, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> c(alg->dim());
  for (auto& x : c) x = u(rng);
  return FloatPoint(alg, std::move(c));
}

inline ExactPoint basis_point(const AlgebraPtr& alg, int idx, QSqrt2 v = QSqrt2(1)) {
  std::vector<QSqrt2> c(alg->dim());
  c[idx] = std::move(v);
  return ExactPoint(alg, std::move(c));
}

}  // namespace carnot::testing
