#include "carnot/discreteness.hpp"

#include <random>

namespace carnot {

namespace {

constexpr int kDim = 7;

std::string basis_name(int idx) {
  if (idx == kX) return "X";
  if (idx == kY) return "Y";
  return "Z" + std::to_string(idx);
}

const QSqrt2& t_of(const ExampleParams& p, int k) { return p.t[k - 3]; }

std::vector<BracketSpec> prescribed(const ExampleParams& p) {
  std::vector<BracketSpec> specs;
  auto add = [&](int a, int b, int c, const QSqrt2& v) {
    BracketSpec s{a, b, std::vector<QSqrt2>(kDim)};
    s.coeffs[c] = v;
    specs.push_back(std::move(s));
  };
  add(kX, kY, kZ(2), QSqrt2(1));
  for (int i = 2; i <= 5; ++i) {
    add(kX, kZ(i), kZ(i + 1), t_of(p, i + 1));
    add(kY, kZ(i), kZ(i + 1), QSqrt2(1));
  }
  return specs;
}

ScalarField field_of(const ExampleParams& p) {
  for (const auto& t : p.t) {
    if (!t.is_rational()) return ScalarField::rational_sqrt2;
  }
  return ScalarField::rational;
}

struct Unknown {
  int a, b, c;
};

std::vector<Unknown> unknowns() {
  std::vector<Unknown> out;
  for (int i = 2; i <= 6; ++i) {
    for (int j = i + 1; i + j <= 6; ++j) out.push_back({kZ(i), kZ(j), kZ(i + j)});
  }
  return out;
}

StratifiedAlgebra table_with(const ExampleParams& p, const std::vector<QSqrt2>& x) {
  auto specs = prescribed(p);
  auto us = unknowns();
  for (std::size_t k = 0; k < us.size(); ++k) {
    BracketSpec s{us[k].a, us[k].b, std::vector<QSqrt2>(kDim)};
    s.coeffs[us[k].c] = x[k];
    specs.push_back(std::move(s));
  }
  return StratifiedAlgebra::unchecked("example6", {2, 1, 1, 1, 1, 1}, specs, field_of(p));
}

struct Residual {
  int i, j, k, coord;
  QSqrt2 value;
};

// Jacobi sums over all basis triples, one entry per (triple, coordinate).
std::vector<Residual> jacobi_residuals(const StratifiedAlgebra& alg) {
  std::vector<Residual> out;
  const int n = alg.dim();
  std::vector<QSqrt2> ei(n), ej(n), ek(n), t(n), tmp(n), acc(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        std::fill(ei.begin(), ei.end(), QSqrt2());
        std::fill(ej.begin(), ej.end(), QSqrt2());
        std::fill(ek.begin(), ek.end(), QSqrt2());
        std::fill(acc.begin(), acc.end(), QSqrt2());
        ei[i] = 1;
        ej[j] = 1;
        ek[k] = 1;
        const std::vector<QSqrt2>* cyc[3][3] = {{&ei, &ej, &ek}, {&ej, &ek, &ei}, {&ek, &ei, &ej}};
        for (auto& c : cyc) {
          alg.bracket_into(c[1]->data(), c[2]->data(), t.data());
          alg.bracket_into(c[0]->data(), t.data(), tmp.data());
          for (int x = 0; x < n; ++x) acc[x] += tmp[x];
        }
        for (int x = 0; x < n; ++x) out.push_back({i, j, k, x, acc[x]});
      }
    }
  }
  return out;
}

QSqrt2 floor_exact(const QSqrt2& x) {
  long long f = static_cast<long long>(std::floor(x.to_double()));
  while (x < QSqrt2(static_cast<long>(f))) --f;
  while (!(x < QSqrt2(static_cast<long>(f + 1)))) ++f;
  return QSqrt2(static_cast<long>(f));
}

}  // namespace

AlgebraPtr example_relations_only(const ExampleParams& p) {
  std::vector<QSqrt2> zero(unknowns().size());
  return std::make_shared<const StratifiedAlgebra>(table_with(p, zero));
}

ExampleAlgebra build_example_algebra(const ExampleParams& p) {
  const auto us = unknowns();
  const std::size_t m = us.size();
  std::vector<QSqrt2> x(m);
  const auto base = jacobi_residuals(table_with(p, x));
  // residual(x) = base + sum_k x_k (column_k); only brackets with one unknown
  // factor reach layer <= 6, so the system is affine in x
  std::vector<std::vector<Residual>> cols;
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<QSqrt2> ek(m);
    ek[k] = 1;
    auto r = jacobi_residuals(table_with(p, ek));
    for (std::size_t e = 0; e < r.size(); ++e) r[e].value -= base[e].value;
    cols.push_back(std::move(r));
  }

  // incremental reduced row echelon form over Q(sqrt 2)
  struct Row {
    std::vector<QSqrt2> a;
    QSqrt2 rhs;
    std::size_t pivot;
  };
  std::vector<Row> rows;
  for (std::size_t e = 0; e < base.size(); ++e) {
    Row row{std::vector<QSqrt2>(m), -base[e].value, 0};
    bool any = !row.rhs.is_zero();
    for (std::size_t k = 0; k < m; ++k) {
      row.a[k] = cols[k][e].value;
      any = any || !row.a[k].is_zero();
    }
    if (!any) continue;
    for (const auto& r : rows) {
      if (row.a[r.pivot].is_zero()) continue;
      QSqrt2 f = row.a[r.pivot];
      for (std::size_t k = 0; k < m; ++k) row.a[k] -= f * r.a[k];
      row.rhs -= f * r.rhs;
    }
    std::size_t piv = m;
    for (std::size_t k = 0; k < m; ++k) {
      if (!row.a[k].is_zero()) {
        piv = k;
        break;
      }
    }
    if (piv == m) {
      if (row.rhs.is_zero()) continue;
      const auto& b = base[e];
      std::string triple = "(" + basis_name(b.i) + ", " + basis_name(b.j) + ", " + basis_name(b.k) + ")";
      throw JacobiInconsistent("no bracket table [Z_i, Z_j] satisfies the Jacobi identity on " +
                                   triple + ": coefficient " + (-row.rhs).str() + " on " +
                                   basis_name(b.coord) + " cannot be cancelled",
                               triple, -row.rhs);
    }
    QSqrt2 inv = row.a[piv].inverse();
    for (auto& v : row.a) v *= inv;
    row.rhs *= inv;
    row.pivot = piv;
    for (auto& r : rows) {
      if (r.a[piv].is_zero()) continue;
      QSqrt2 f = r.a[piv];
      for (std::size_t k = 0; k < m; ++k) r.a[k] -= f * row.a[k];
      r.rhs -= f * row.rhs;
    }
    rows.push_back(std::move(row));
  }
  // free unknowns are set to zero
  for (const auto& r : rows) x[r.pivot] = r.rhs;

  ExampleAlgebra out;
  std::vector<BracketSpec> specs = prescribed(p);
  for (std::size_t k = 0; k < m; ++k) {
    BracketSpec s{us[k].a, us[k].b, std::vector<QSqrt2>(kDim)};
    s.coeffs[us[k].c] = x[k];
    specs.push_back(std::move(s));
    out.solved.push_back({us[k].a, us[k].b, us[k].c, x[k]});
  }
  out.algebra = std::make_shared<const StratifiedAlgebra>("example6", std::vector<int>{2, 1, 1, 1, 1, 1},
                                                          specs, field_of(p));
  return out;
}

CommutatorReport commutator_leading_term(const AlgebraPtr& alg, const ExampleParams& p,
                                         const QSqrt2& a, const QSqrt2& b, int i, const QSqrt2& s) {
  if (i < 2 || i > 6) throw std::invalid_argument("commutator index must lie in 2..6");
  std::vector<QSqrt2> gc(kDim), uc(kDim);
  gc[kX] = a;
  gc[kY] = b;
  uc[kZ(i)] = s;
  ExactPoint g(alg, gc), u(alg, uc);
  ExactPoint c = bch_multiply(bch_multiply(bch_multiply(g, u), invert(g)), invert(u));
  CommutatorReport rep;
  rep.i = i;
  rep.commutator = c;
  if (i == 6) {
    rep.expected = QSqrt2();
    rep.coordinate = QSqrt2();
    rep.leading_ok = c.is_identity();
    rep.remainder_ok = rep.leading_ok;
    return rep;
  }
  rep.coordinate = c.coords[kZ(i + 1)];
  rep.expected = (a * t_of(p, i + 1) + b) * s;
  rep.leading_ok = rep.coordinate == rep.expected;
  rep.remainder_ok = true;
  for (int idx = 0; idx < kDim; ++idx) {
    if (idx == kZ(i + 1) || c.coords[idx].is_zero()) continue;
    if (alg->layer_of(idx) < i + 2) rep.remainder_ok = false;
  }
  return rep;
}

MobiusResult mobius_rationality(const QSqrt2& a, const QSqrt2& b, const QSqrt2& c, const QSqrt2& d,
                                const QSqrt2& t) {
  if (a * d - b * c != QSqrt2(1)) throw std::invalid_argument("mobius_rationality needs ad - bc = 1");
  MobiusResult r;
  QSqrt2 den = c * t + d;
  if (den.is_zero()) {
    r.pole = true;
    return r;
  }
  r.value = (a * t + b) / den;
  r.rational = r.value.is_rational();
  return r;
}

DensityResult density_probe(const QSqrt2& alpha, const QSqrt2& beta, double eps,
                            long long max_denominator) {
  if (beta.is_zero()) throw std::invalid_argument("density_probe needs beta != 0");
  if (!(eps > 0.0)) throw std::invalid_argument("density_probe needs eps > 0");
  DensityResult out;
  auto abs_d = [](const QSqrt2& v) { return std::abs(v.to_double()); };
  if (abs_d(alpha) <= eps) {
    out.p = 1;
    out.residual = abs_d(alpha);
    return out;
  }
  QSqrt2 theta = alpha / beta;
  if (theta.is_rational()) {
    // {p alpha + q beta} = (beta / m) Z for theta = n / m in lowest terms
    mpz_class n = theta.rational_part().get_num(), m = theta.rational_part().get_den();
    out.gap = abs_d(beta) / m.get_d();
    if (out.gap >= eps) {
      out.discrete = true;
      return out;
    }
    mpz_class g, s, t;
    mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), n.get_mpz_t(), m.get_mpz_t());
    out.p = s.get_si();
    out.q = t.get_si();
    out.residual = out.gap;
    return out;
  }
  // convergents P/Q of beta/alpha; residual |alpha| |Q theta' - P| with p = -P, q = Q
  QSqrt2 x = beta / alpha;
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;  // (P, Q) at indices n-2 and n-1
  for (int iter = 0; iter < 200; ++iter) {
    QSqrt2 fl = floor_exact(x);
    long long a = fl.rational_part().get_num().get_si();
    long long pn = a * p1 + p0, qn = a * q1 + q0;
    if (qn > max_denominator) break;
    p0 = p1;
    q0 = q1;
    p1 = pn;
    q1 = qn;
    QSqrt2 res = alpha * QSqrt2(static_cast<long>(-pn)) + beta * QSqrt2(static_cast<long>(qn));
    if (abs_d(res) < eps) {
      out.p = -pn;
      out.q = qn;
      out.residual = abs_d(res);
      return out;
    }
    QSqrt2 frac = x - fl;
    if (frac.is_zero()) break;
    x = frac.inverse();
  }
  throw std::runtime_error("density_probe: no convergent within the denominator bound");
}

namespace {

QSqrt2 random_rational(std::mt19937_64& rng, int bound = 9) {
  std::uniform_int_distribution<int> num(-bound, bound), den(1, bound);
  return QSqrt2(Rational(num(rng), den(rng)));
}

nlohmann::json scalar_json(const QSqrt2& x) { return x.str(); }

}  // namespace

nlohmann::json discreteness_certificate(const CertificateOptions& opt) {
  nlohmann::json cert;
  std::mt19937_64 rng(opt.seed);
  const ExampleParams& p = opt.obstruction;
  cert["parameters"] = {{"t3", scalar_json(p.t[0])}, {"t4", scalar_json(p.t[1])},
                        {"t5", scalar_json(p.t[2])}, {"t6", scalar_json(p.t[3])}};

  // 1. Jacobi completion at the obstruction parameters
  bool completion_ok = false;
  {
    nlohmann::json c;
    try {
      auto ex = build_example_algebra(p);
      auto audit = ex.algebra->audit();
      completion_ok = audit.ok();
      nlohmann::json solved = nlohmann::json::array();
      for (const auto& s : ex.solved) {
        solved.push_back({{"bracket", "[" + basis_name(s.a) + ", " + basis_name(s.b) + "]"},
                          {"coefficient", scalar_json(s.value)},
                          {"on", basis_name(s.c)}});
      }
      c["solved_brackets"] = solved;
      c["jacobi_audit"] = audit.ok();
    } catch (const JacobiInconsistent& e) {
      c["inconsistent_triple"] = e.triple;
      c["residual"] = scalar_json(e.residual);
      c["message"] = e.what();
    }
    c["pass"] = completion_ok;
    cert["jacobi_completion"] = c;
  }

  // 2. completion over random draws: consistent only when every t agrees
  {
    int generic_ok = 0, equal_ok = 0;
    for (int d = 0; d < opt.jacobi_draws; ++d) {
      ExampleParams g;
      for (auto& t : g.t) t = random_rational(rng);
      try {
        generic_ok += build_example_algebra(g).algebra->audit().ok() ? 1 : 0;
      } catch (const AlgebraError&) {
      }
      ExampleParams e;
      QSqrt2 common = random_rational(rng) + (d % 2 == 1 ? QSqrt2::sqrt2() : QSqrt2());
      e.t = {common, common, common, common};
      try {
        equal_ok += build_example_algebra(e).algebra->audit().ok() ? 1 : 0;
      } catch (const AlgebraError&) {
      }
    }
    cert["jacobi_draws"] = {{"draws", opt.jacobi_draws},
                            {"generic_t_completed", generic_ok},
                            {"equal_t_completed", equal_ok}};
  }

  // 3. commutator leading term on the prescribed relations (exact BCH)
  bool commutator_ok = true;
  {
    auto relations = example_relations_only(p);
    int checks = 0, passed = 0;
    for (int d = 0; d < opt.commutator_draws; ++d) {
      QSqrt2 a = random_rational(rng), b = random_rational(rng);
      for (int i = 2; i <= 5; ++i) {
        QSqrt2 s = random_rational(rng);
        auto rep = commutator_leading_term(relations, p, a, b, i, s);
        ++checks;
        passed += rep.ok() ? 1 : 0;
      }
    }
    auto central = commutator_leading_term(relations, p, QSqrt2(1), QSqrt2(1), 6, QSqrt2(1));
    commutator_ok = passed == checks && central.ok();
    cert["commutator"] = {{"checks", checks},
                          {"passed", passed},
                          {"central_identity", central.ok()},
                          {"pass", commutator_ok}};
  }

  // 4. Mobius obstruction at t6 over random rational unimodular matrices
  bool obstruction_ok = true;
  {
    int draws = 0, t6_irrational = 0, some_condition_fails = 0;
    while (draws < opt.unimodular_draws) {
      QSqrt2 a = random_rational(rng), b = random_rational(rng), c = random_rational(rng);
      if (a.is_zero()) continue;
      QSqrt2 d = (QSqrt2(1) + b * c) / a;
      ++draws;
      auto r6 = mobius_rationality(a, b, c, d, p.t[3]);
      if (!r6.pole && !r6.rational) ++t6_irrational;
      bool fails = false;
      for (const auto& t : p.t) {
        auto r = mobius_rationality(a, b, c, d, t);
        if (r.pole || !r.rational) fails = true;
      }
      some_condition_fails += fails ? 1 : 0;
    }
    obstruction_ok = t6_irrational == draws && some_condition_fails == draws;
    cert["obstruction"] = {{"draws", draws},
                           {"t6_condition_fails", t6_irrational},
                           {"some_condition_fails", some_condition_fails},
                           {"pass", obstruction_ok}};
  }

  // 5. density probe for alpha = 1, beta = sqrt 2
  bool density_ok = false;
  {
    auto r = density_probe(QSqrt2(1), QSqrt2::sqrt2(), opt.density_eps);
    density_ok = !r.discrete && r.residual < opt.density_eps && std::llabs(r.q) <= 200;
    cert["density_probe"] = {{"alpha", "1"},         {"beta", "sqrt2"},   {"eps", opt.density_eps},
                             {"p", r.p},             {"q", r.q},          {"residual", r.residual},
                             {"pass", density_ok}};
  }

  cert["all_pass"] = completion_ok && commutator_ok && obstruction_ok && density_ok;
  return cert;
}

}  // namespace carnot
