#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "carnot/presets.hpp"
#include "carnot/report.hpp"

using namespace carnot;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("carnot_test_" + name);
  fs::remove_all(p);
  return p;
}

// Small lattice and light alpha sampling keep each run to a few seconds.
json quick(json j) {
  json base = {{"h", 0.5}, {"segment_step", 0.125}, {"direction_samples", 3}, {"translate_samples", 6},
               {"lipschitz_pairs", 4000}, {"b_pairs", 2000}};
  base.update(j);
  return base;
}

std::string error_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config errors name the field") {
  CHECK(error_of({{"delta", -0.5}}).find("delta") != std::string::npos);
  CHECK(error_of({{"delta", "x"}}).find("delta") != std::string::npos);
  CHECK(error_of({{"tau", 0.5}}).find("tau") != std::string::npos);
  CHECK(error_of({{"frobnicate", 1}}).find("frobnicate") != std::string::npos);
  const auto e = error_of({{"map", {{"preset", "spiral"}}}});
  for (const auto& name : map_preset_names()) CHECK(e.find(name) != std::string::npos);
  CHECK(error_of({{"domain", "nope"}}).find("heisenberg") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("minimal config echoes populated defaults") {
  const RunConfig c = config_from_json(json::object());
  const json echo = config_to_json(c);
  CHECK(echo["domain"] == "heisenberg");
  CHECK(echo["delta"] == 0.05);
  CHECK(echo["map"]["preset"] == "hom");
  CHECK(echo["seeds"]["pipeline"] == 1);
  CHECK(echo.contains("L_mult"));
  // the echo parses back to the same config
  CHECK(config_hash(config_from_json(echo)) == config_hash(c));
  RunConfig other = c;
  other.delta = 0.1;
  CHECK(config_hash(other) != config_hash(c));
  other = c;
  other.output = "elsewhere";
  CHECK(config_hash(other) == config_hash(c));
}

TEST_CASE("load_config reads a file") {
  const auto dir = scratch_dir("load");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"h": 0.5, "map": {"preset": "fold"}})";
  const RunConfig c = load_config((dir / "c.json").string());
  CHECK(c.h == 0.5);
  CHECK(c.map.preset == "fold");
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
}

TEST_CASE("map presets pass their Lipschitz audit") {
  const RunConfig c;
  auto h = heisenberg_algebra();
  const auto cfg = c.norm(h->step());

  auto id = map_preset("hom", h, cfg, json::object(), 1.0, 20000, 3);
  CHECK(id.map->declared_lipschitz() == doctest::Approx(1.0));
  CHECK(id.audit.measured == doctest::Approx(1.0).epsilon(1e-9));

  auto fold = map_preset("fold", h, cfg, json::object(), 1.0, 20000, 3);
  CHECK(fold.audit.ok());
  CHECK(fold.audit.measured <= 1.01);
  CHECK(fold.audit.measured > 0.9);

  auto col = map_preset("collapse", h, cfg, json::object(), 1.0, 4000, 3);
  CHECK(col.audit.ok());
  CHECK(col.map->codomain()->dim() == 1);
  // the same homomorphism built directly collapses the second first-layer direction
  ExactMatrix p(1, 2);
  p(0, 0) = 1;
  auto proj = hom_from_first_layer(p, h, abelian_algebra(1));
  for (double eps : {0.5, 1e-3, 1e-9}) CHECK(collapse_witness(proj, eps, NormConfig::ones(1)).has_value());

  auto k = map_preset("constant", h, cfg, json::object(), 1.0, 2000, 3);
  CHECK(k.audit.measured == 0.0);

  CHECK_THROWS_AS(map_preset("fold", h, cfg, {{"coords", {7}}}, 1.0, 100, 3), ConfigError);
}

TEST_CASE("group and norm law reports") {
  for (const auto& name : {"heisenberg", "engel", "abelian:3", "example6"}) {
    CAPTURE(name);
    auto alg = load_group(name);
    const auto g = check_group_laws(alg, 20, 5);
    CHECK(g.ok());
    CHECK(g.draws == 20);
    const auto n = check_norm_laws(alg, NormConfig::ones(alg->step()), 200, 5);
    CHECK(n.ok());
    CHECK(n.quasi_constant >= 1.0);
  }
}

TEST_CASE("identity run: exit 0, one piece, reports embed hash and constants") {
  const auto dir = scratch_dir("identity");
  RunConfig c = config_from_json(quick({{"output", dir.string()}}));
  const auto r = run(c);
  CHECK(r.exit_code == 0);
  CHECK(r.summary["pieces"] == 1);
  CHECK(r.summary["z"] == 0);
  for (const auto* f : {"decomposition.json", "certification.json", "audit.json", "assignment.csv", "alpha.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  const json d = json::parse(slurp(dir / "decomposition.json"));
  CHECK(d["config_hash"] == config_hash(c));
  for (const auto* k : {"C_Q", "b", "T", "l", "c"}) CHECK(d["constants"].contains(k));
  CHECK(json::parse(slurp(dir / "certification.json"))["config_hash"] == config_hash(c));
  CHECK(json::parse(slurp(dir / "audit.json"))["pass"] == true);
}

TEST_CASE("constant run: exit 0, zero pieces, Z = S") {
  const auto dir = scratch_dir("constant");
  RunConfig c = config_from_json(quick({{"output", dir.string()}, {"map", {{"preset", "constant"}}}}));
  const auto r = run(c);
  CHECK(r.exit_code == 0);
  CHECK(r.summary["pieces"] == 0);
  CHECK(r.summary["z"] == r.summary["points"]);
}

TEST_CASE("plane fold union run certifies at least two pieces") {
  const auto dir = scratch_dir("plane_fold");
  RunConfig c = config_from_json({{"domain", "abelian:2"},
                                  {"map", {{"preset", "fold"}}},
                                  {"h", 1.0 / 32},
                                  {"b", 0.1},
                                  {"L_mult", 1},
                                  {"alpha_threshold", 0.01},
                                  {"region", "union"},
                                  {"segment_step", 0.125},
                                  {"direction_samples", 3},
                                  {"translate_samples", 8},
                                  {"output", dir.string()}});
  const auto r = run(c);
  CHECK(r.exit_code == 0);
  CHECK(r.summary["pieces"].get<int>() >= 2);
  CHECK(r.summary["all_pass"] == true);
}

TEST_CASE("identical configs give bit-identical outputs") {
  const auto a = scratch_dir("repeat_a"), b = scratch_dir("repeat_b");
  RunConfig c = config_from_json(quick({{"map", {{"preset", "fold"}}}}));
  c.output = a.string();
  run(c);
  c.output = b.string();
  run(c);
  for (const auto* f : {"decomposition.json", "certification.json", "audit.json", "assignment.csv", "alpha.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("alpha-stats, net-cover, verify-group and discreteness write their reports") {
  const auto dir = scratch_dir("subcommands");
  RunConfig c = config_from_json(quick({{"map", {{"preset", "fold"}}}, {"output", (dir / "alpha").string()}}));
  auto a = alpha_stats(c, 50);
  CHECK(a.exit_code == 0);
  const json cj = json::parse(slurp(dir / "alpha" / "carleson.json"));
  CHECK(cj["carleson"]["min_summand"].get<double>() >= 0.0);
  CHECK(cj["config_hash"] == config_hash(c));

  c = config_from_json(quick({{"map", {{"preset", "collapse"}}}, {"output", (dir / "net").string()}}));
  auto n = net_cover(c, 1.0, {0.25, 0.125}, 0, 0.1);
  CHECK(n.exit_code == 0);
  const json cover = json::parse(slurp(dir / "net" / "cover.json"));
  CHECK(cover["nets"].size() == 2);
  CHECK(cover["content_cover_ok"] == true);
  CHECK(fs::exists(dir / "net" / "checks.json"));

  auto g = verify_group("heisenberg", {}, (dir / "group").string(), 20, 1, 1.0, 0.5, 4.0);
  CHECK(g.exit_code == 0);
  CHECK(fs::exists(dir / "group" / "tree_audit.json"));
  CHECK(json::parse(slurp(dir / "group" / "group.json"))["homogeneous_dimension"] == 4);
  CHECK_THROWS_AS(verify_group("nope", {}, (dir / "group").string(), 5, 1), ConfigError);

  CertificateOptions opt;
  opt.unimodular_draws = 100;
  // the obstruction parameters admit no Jacobi completion, so the certificate reports a failure
  auto d = discreteness((dir / "disc").string(), opt);
  CHECK(d.exit_code == 1);
  const json dj = json::parse(slurp(dir / "disc" / "discreteness.json"));
  CHECK(dj["jacobi_completion"]["pass"] == false);
  CHECK(dj["commutator"]["pass"] == true);
  CHECK(dj["obstruction"]["pass"] == true);
  CHECK(dj["density_probe"]["pass"] == true);
}
