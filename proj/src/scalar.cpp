#include "carnot/scalar.hpp"

#include <algorithm>
#include <cctype>

namespace carnot {

namespace {

Rational parse_rational(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  if (s.empty() || s == "+") return Rational(1);
  if (s == "-") return Rational(-1);
  if (s.front() == '+') s.erase(0, 1);
  // accept decimal literals as exact rationals
  if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::size_t frac = s.size() - dot - 1;
    Rational r;
    if (r.set_str(digits, 10) != 0) throw std::invalid_argument("bad number: " + s);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac);
    r /= den;
    r.canonicalize();
    return r;
  }
  Rational r;
  if (r.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
  if (sgn(r.get_den()) == 0) throw std::invalid_argument("zero denominator: " + s);
  r.canonicalize();
  return r;
}

}  // namespace

QSqrt2 parse_qsqrt2(const std::string& raw) {
  std::string text = raw;
  if (auto bare = text.find("sqrt2"); bare != std::string::npos && (bare == 0 || text[bare - 1] != '*')) {
    text.insert(bare, "*");
  }
  const std::string tag = "*sqrt2";
  auto pos = text.find(tag);
  if (pos == std::string::npos) return QSqrt2(parse_rational(text));
  if (pos + tag.size() != text.size()) throw std::invalid_argument("bad field literal: " + text);
  std::string head = text.substr(0, pos);
  // split at the last top-level sign separating rational and sqrt2 parts
  std::size_t split = std::string::npos;
  for (std::size_t i = head.size(); i-- > 1;) {
    if ((head[i] == '+' || head[i] == '-') && head[i - 1] != 'e') {
      split = i;
      break;
    }
  }
  if (split == std::string::npos) return {Rational(0), parse_rational(head)};
  return {parse_rational(head.substr(0, split)), parse_rational(head.substr(split))};
}

Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite value");
  Rational r(v);  // mpq_set_d is exact
  r.canonicalize();
  return r;
}

}  // namespace carnot
