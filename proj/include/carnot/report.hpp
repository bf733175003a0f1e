#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "carnot/decompose.hpp"
#include "carnot/discreteness.hpp"
#include "carnot/maps.hpp"

namespace carnot {

/// A schema or range violation; path() names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// A pipeline failure tagged with the stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct MapSpec {
  std::string preset = "hom";
  nlohmann::json params = nlohmann::json::object();
};

struct RunConfig {
  std::string domain = "heisenberg";
  std::vector<double> lambdas;  // empty: all ones
  MapSpec map;
  double R = 1.0;
  double h = 0.25;
  double tau = 4.0;
  double delta = 0.05;
  double p = 2.0;
  double c1 = 1.0;
  double alpha_threshold = 1e-3;
  double L_scale = 1.0;
  int L_mult = 3;
  double b = 0.0;  // 0: estimated
  int b_pairs = 10000;
  int direction_samples = 8;
  int translate_samples = 16;
  double segment_step = 1.0 / 16;
  double content_floor = -1.0;  // negative: declared Lipschitz times the finest side
  std::string region = "single";  // single | union
  std::optional<int> union_scale;  // default: finest scale
  int root = 0;
  std::uint64_t seed = 1;
  std::uint64_t audit_seed = 7;
  std::string mode = "exhaustive";  // exhaustive | sampled
  long long exhaustive_limit = 10'000'000;
  long long samples = 100'000;
  int lipschitz_pairs = 20000;
  std::string output = "out";

  DecomposeParams pipeline() const;
  NormConfig norm(int step) const;
};

/// Unknown keys and out-of-range values throw ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
/// Every field with its effective value.
nlohmann::json config_to_json(const RunConfig& c);
/// FNV-1a 64 of the canonical config dump, as 16 hex digits.
std::string config_hash(const RunConfig& c);

struct MapPreset {
  std::string name;
  MapPtr map;
  LipschitzAudit audit;
  nlohmann::json to_json() const;
};

std::vector<std::string> map_preset_names();

/// Builds a preset and checks its declared Lipschitz constant on sampled
/// pairs in B(0, radius); throws StageError("map", ...) when the check fails.
///   hom:      {"matrix": first-layer rows, "codomain": group}, default identity
///   fold:     {"coords": [i, ...]}, default [0]
///   collapse: {"matrix": ..., "codomain": ...}, default projection onto x_1
///   constant: {"value": [...], "codomain": group}, default the identity element
MapPreset map_preset(const std::string& name, const AlgebraPtr& domain, const NormConfig& cfg,
                     const nlohmann::json& params, double radius, int pairs, std::uint64_t seed);

/// Exact checks on random rational triples: associativity, g g^-1 = e,
/// (g^-1)^-1 = g and dilations acting as automorphisms.
struct GroupLawReport {
  int draws = 0;
  int associativity_failures = 0;
  int inverse_failures = 0;
  int involution_failures = 0;
  int dilation_failures = 0;
  bool ok() const {
    return associativity_failures == 0 && inverse_failures == 0 && involution_failures == 0 &&
           dilation_failures == 0;
  }
  nlohmann::json to_json() const;
};
GroupLawReport check_group_laws(const AlgebraPtr& alg, int draws, std::uint64_t seed);

/// Floating checks of d_inf: homogeneity, left invariance, and exact symmetry
/// N(g) = N(g^-1); the quasi-triangle constant is measured.
struct NormLawReport {
  int draws = 0;
  double homogeneity_error = 0.0;      // max |N(delta_r g) - r N(g)|
  double left_invariance_error = 0.0;  // max |d(kg, kh) - d(g, h)|
  int symmetry_failures = 0;
  double quasi_constant = 1.0;
  bool ok(double tol = 1e-12) const {
    return homogeneity_error <= tol && left_invariance_error <= tol && symmetry_failures == 0;
  }
  nlohmann::json to_json() const;
};
NormLawReport check_norm_laws(const AlgebraPtr& alg, NormConfig cfg, int draws, std::uint64_t seed);

/// Per cube {id, scale, center, parent, points}.
nlohmann::json tree_to_json(const CubeTree& tree);

/// Group, measured norm, lattice, tree and verified map for a config.
struct Setup {
  AlgebraPtr alg;
  NormConfig cfg;
  double quasi_constant = 1.0;
  LatticePtr lattice;
  std::shared_ptr<const CubeTree> tree;
  MapPreset preset;
};
Setup setup(const RunConfig& c);

struct RunResult {
  int exit_code = 0;
  nlohmann::json summary;
  std::vector<std::string> files;
};

/// Writes decomposition.json, assignment.csv, certification.json, alpha.csv
/// and audit.json under c.output. exit_code is 1 when any certification or
/// invariant audit fails.
RunResult run(const RunConfig& c);

/// alpha.csv and carleson.json over Delta(root) under c.output; exit 1 when
/// a Carleson summand is negative beyond roundoff or the target check fails.
RunResult alpha_stats(const RunConfig& c, int target_segments = 200);

/// cover.json (epsilon nets of f(B(0, ell)) and the content cover of the
/// image) and checks.json (weak biLipschitz check per cube of check_scale).
RunResult net_cover(const RunConfig& c, double ell, const std::vector<double>& eps, int check_scale, double b);

/// group.json: spec, axiom audit, group and norm laws. With h > 0 also
/// tree.json and tree_audit.json for the lattice B(0, R) at spacing h.
RunResult verify_group(const std::string& group, const std::vector<double>& lambdas, const std::string& output,
                       int draws, std::uint64_t seed, double R = 1.0, double h = 0.0, double tau = 4.0);

/// discreteness.json; exit 1 unless every check passes.
RunResult discreteness(const std::string& output, const CertificateOptions& opt);

}  // namespace carnot
