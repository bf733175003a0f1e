#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "carnot/algebra.hpp"

namespace carnot {

AlgebraPtr heisenberg_algebra();
/// X1, X2 | X3 = [X1, X2] | X4 = [X1, X3]
AlgebraPtr engel_algebra();
AlgebraPtr abelian_algebra(int n);

/// "heisenberg", "engel", "abelian:n", "example6" or "example6:{t3,t4,t5,t6}".
AlgebraPtr group_preset(const std::string& name);
std::vector<std::string> group_preset_names();

/// {name, step, layer_dims, brackets: [[a, b, [coeffs]]], field}; coefficients
/// are numbers or exact strings such as "1/3" or "2+1*sqrt2".
nlohmann::json algebra_to_json(const StratifiedAlgebra& alg);
/// Throws AlgebraError naming the offending field path.
AlgebraPtr algebra_from_json(const nlohmann::json& j);

/// A preset name, or a path to a group spec JSON file.
AlgebraPtr load_group(const std::string& spec);

}  // namespace carnot
