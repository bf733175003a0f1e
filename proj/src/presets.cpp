#include "carnot/presets.hpp"

#include <fstream>
#include <sstream>

#include "carnot/discreteness.hpp"

namespace carnot {

namespace {

BracketSpec unit_bracket(int dim, int a, int b, int c, QSqrt2 coef = QSqrt2(1)) {
  BracketSpec s{a, b, std::vector<QSqrt2>(dim)};
  s.coeffs[c] = std::move(coef);
  return s;
}

QSqrt2 json_scalar(const nlohmann::json& v, const std::string& path) {
  try {
    if (v.is_number_integer()) return QSqrt2(static_cast<long>(v.get<long long>()));
    if (v.is_number()) return QSqrt2(rational_from_double(v.get<double>()));
    if (v.is_string()) return parse_qsqrt2(v.get<std::string>());
  } catch (const std::exception& e) {
    throw AlgebraError(path + ": " + e.what());
  }
  throw AlgebraError(path + ": expected a number or an exact string");
}

std::string scalar_text(const QSqrt2& x) { return x.str(); }

}  // namespace

AlgebraPtr heisenberg_algebra() {
  return std::make_shared<const StratifiedAlgebra>(
      "heisenberg", std::vector<int>{2, 1}, std::vector<BracketSpec>{unit_bracket(3, 0, 1, 2)},
      ScalarField::rational);
}

AlgebraPtr engel_algebra() {
  return std::make_shared<const StratifiedAlgebra>(
      "engel", std::vector<int>{2, 1, 1},
      std::vector<BracketSpec>{unit_bracket(4, 0, 1, 2), unit_bracket(4, 0, 2, 3)},
      ScalarField::rational);
}

AlgebraPtr abelian_algebra(int n) {
  if (n < 1) throw AlgebraError("abelian:n needs n >= 1");
  return std::make_shared<const StratifiedAlgebra>("abelian:" + std::to_string(n),
                                                   std::vector<int>{n}, std::vector<BracketSpec>{},
                                                   ScalarField::rational);
}

std::vector<std::string> group_preset_names() {
  return {"heisenberg", "engel", "abelian:n", "example6", "example6:{t3,t4,t5,t6}"};
}

AlgebraPtr group_preset(const std::string& name) {
  if (name == "heisenberg") return heisenberg_algebra();
  if (name == "engel") return engel_algebra();
  if (name.rfind("abelian:", 0) == 0) {
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(name.substr(8), &used);
      if (used != name.size() - 8) throw std::invalid_argument(name);
    } catch (const std::exception&) {
      throw AlgebraError("bad abelian preset '" + name + "', expected abelian:n");
    }
    return abelian_algebra(n);
  }
  if (name == "example6") return build_example_algebra(ExampleParams{}).algebra;
  if (name.rfind("example6:", 0) == 0) {
    std::string body = name.substr(9);
    if (!body.empty() && body.front() == '{' && body.back() == '}') body = body.substr(1, body.size() - 2);
    std::stringstream ss(body);
    std::string item;
    ExampleParams p;
    int k = 0;
    while (std::getline(ss, item, ',')) {
      if (k == 4) throw AlgebraError("example6 takes exactly four parameters t3,t4,t5,t6");
      p.t[k++] = parse_qsqrt2(item);
    }
    if (k != 4) throw AlgebraError("example6 takes exactly four parameters t3,t4,t5,t6");
    return build_example_algebra(p).algebra;
  }
  std::string list;
  for (const auto& n : group_preset_names()) list += (list.empty() ? "" : ", ") + n;
  throw AlgebraError("unknown group preset '" + name + "' (available: " + list + ")");
}

nlohmann::json algebra_to_json(const StratifiedAlgebra& alg) {
  nlohmann::json j;
  j["name"] = alg.name();
  j["step"] = alg.step();
  j["layer_dims"] = alg.layer_dims();
  j["field"] = to_string(alg.field());
  // group entries by (a, b)
  nlohmann::json brackets = nlohmann::json::array();
  const auto& es = alg.entries();
  for (std::size_t i = 0; i < es.size();) {
    std::vector<std::string> coeffs(alg.dim(), "0");
    std::size_t k = i;
    for (; k < es.size() && es[k].a == es[i].a && es[k].b == es[i].b; ++k) {
      coeffs[es[k].c] = scalar_text(es[k].coef);
    }
    brackets.push_back({es[i].a, es[i].b, coeffs});
    i = k;
  }
  j["brackets"] = brackets;
  return j;
}

AlgebraPtr algebra_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw AlgebraError("group spec: expected an object");
  if (!j.contains("layer_dims") || !j["layer_dims"].is_array()) {
    throw AlgebraError("layer_dims: required array of positive integers");
  }
  std::vector<int> dims;
  for (std::size_t i = 0; i < j["layer_dims"].size(); ++i) {
    const auto& v = j["layer_dims"][i];
    if (!v.is_number_integer() || v.get<int>() < 1) {
      throw AlgebraError("layer_dims[" + std::to_string(i) + "]: expected a positive integer");
    }
    dims.push_back(v.get<int>());
  }
  if (j.contains("step")) {
    if (!j["step"].is_number_integer() || j["step"].get<int>() != static_cast<int>(dims.size())) {
      throw AlgebraError("step: must equal the number of layer_dims");
    }
  }
  int dim = 0;
  for (int d : dims) dim += d;
  ScalarField field = ScalarField::rational;
  if (j.contains("field")) {
    if (!j["field"].is_string()) throw AlgebraError("field: expected a string");
    try {
      field = scalar_field_from_string(j["field"].get<std::string>());
    } catch (const AlgebraError& e) {
      throw AlgebraError(std::string("field: ") + e.what());
    }
  }
  std::vector<BracketSpec> specs;
  if (j.contains("brackets")) {
    const auto& bs = j["brackets"];
    if (!bs.is_array()) throw AlgebraError("brackets: expected an array");
    for (std::size_t i = 0; i < bs.size(); ++i) {
      const std::string path = "brackets[" + std::to_string(i) + "]";
      const auto& b = bs[i];
      if (!b.is_array() || b.size() != 3 || !b[0].is_number_integer() || !b[1].is_number_integer() ||
          !b[2].is_array()) {
        throw AlgebraError(path + ": expected [a, b, [coeffs]]");
      }
      BracketSpec s{b[0].get<int>(), b[1].get<int>(), {}};
      if (static_cast<int>(b[2].size()) != dim) {
        throw AlgebraError(path + ": coefficient vector must have length " + std::to_string(dim));
      }
      for (std::size_t c = 0; c < b[2].size(); ++c) {
        s.coeffs.push_back(json_scalar(b[2][c], path + "[2][" + std::to_string(c) + "]"));
      }
      specs.push_back(std::move(s));
    }
  }
  std::string name = j.value("name", std::string("custom"));
  return std::make_shared<const StratifiedAlgebra>(name, dims, specs, field);
}

AlgebraPtr load_group(const std::string& spec) {
  std::ifstream in(spec);
  if (!in) return group_preset(spec);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw AlgebraError(spec + ": " + e.what());
  }
  return algebra_from_json(j);
}

}  // namespace carnot
