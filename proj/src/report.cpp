#include "carnot/report.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "carnot/alpha.hpp"
#include "carnot/content.hpp"
#include "carnot/kernels.hpp"
#include "carnot/presets.hpp"

namespace carnot {

ConfigError::ConfigError(std::string path, const std::string& what)
    : std::runtime_error((path.empty() ? std::string("config") : path) + ": " + what), path_(std::move(path)) {}

StageError::StageError(std::string stage, const std::string& what)
    : std::runtime_error("stage " + stage + ": " + what), stage_(std::move(stage)) {}

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

long long integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<long long>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

QSqrt2 exact_entry(const json& v, const std::string& path) {
  if (v.is_number_integer()) return QSqrt2(static_cast<long>(v.get<long long>()));
  if (v.is_string()) {
    try {
      return parse_qsqrt2(v.get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(path, e.what());
    }
  }
  throw ConfigError(path, "expected an integer or an exact string such as \"1/2\" or \"1+1*sqrt2\"");
}

ExactMatrix matrix_param(const json& v, int rows, int cols, const std::string& path) {
  require(v.is_array() && static_cast<int>(v.size()) == rows, path,
          "expected " + std::to_string(rows) + " rows of " + std::to_string(cols) + " entries");
  ExactMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    require(v[r].is_array() && static_cast<int>(v[r].size()) == cols, rp,
            "expected " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c) m(r, c) = exact_entry(v[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

AlgebraPtr group_param(const json& params, const std::string& key, const AlgebraPtr& fallback,
                       const std::string& path) {
  if (!params.contains(key)) return fallback;
  const std::string name = text(params[key], path);
  try {
    return load_group(name);
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

void known_keys(const json& params, const std::vector<std::string>& keys, const std::string& path) {
  for (const auto& [k, _] : params.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError(path + "." + k, "unknown field; expected one of: " + join(keys));
    }
  }
}

json strip_seconds(json j) {
  if (j.is_object()) {
    j.erase("seconds");
    for (auto& [_, v] : j.items()) v = strip_seconds(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_seconds(v);
  }
  return j;
}

void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

template <class F>
auto in_stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

DecomposeParams RunConfig::pipeline() const {
  DecomposeParams d;
  d.delta = delta;
  d.c1 = c1;
  d.alpha_threshold = alpha_threshold;
  d.L_mult = L_mult;
  d.alpha.p = p;
  d.alpha.L = L_scale;
  d.alpha.direction_samples = direction_samples;
  d.alpha.translate_samples = translate_samples;
  d.alpha.segment_step = segment_step;
  d.b = b;
  d.b_pairs = b_pairs;
  d.content_floor = content_floor;
  d.seed = seed;
  d.exhaustive = mode == "exhaustive";
  d.exhaustive_limit = exhaustive_limit;
  d.samples = samples;
  return d;
}

NormConfig RunConfig::norm(int step) const {
  if (lambdas.empty()) return NormConfig::ones(step);
  require(static_cast<int>(lambdas.size()) == step, "lambdas",
          "expected " + std::to_string(step) + " weights, one per layer");
  return NormConfig{lambdas, 1.0};
}

RunConfig config_from_json(const json& j) {
  require(j.is_object(), "", "expected a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "domain") {
      c.domain = text(v, key);
    } else if (key == "lambdas") {
      require(v.is_array(), key, "expected an array of positive numbers (empty: all ones)");
      c.lambdas.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = key + "[" + std::to_string(i) + "]";
        const double x = number(v[i], p);
        require(x > 0.0, p, "must be positive");
        c.lambdas.push_back(x);
      }
    } else if (key == "map") {
      require(v.is_object(), key, "expected {\"preset\": ..., \"params\": {...}}");
      known_keys(v, {"preset", "params"}, key);
      if (v.contains("preset")) c.map.preset = text(v["preset"], "map.preset");
      if (v.contains("params")) {
        require(v["params"].is_object(), "map.params", "expected an object");
        c.map.params = v["params"];
      }
    } else if (key == "R") {
      c.R = number(v, key);
    } else if (key == "h") {
      c.h = number(v, key);
    } else if (key == "tau") {
      c.tau = number(v, key);
    } else if (key == "delta") {
      c.delta = number(v, key);
    } else if (key == "p") {
      c.p = number(v, key);
    } else if (key == "c1") {
      c.c1 = number(v, key);
    } else if (key == "alpha_threshold") {
      c.alpha_threshold = number(v, key);
    } else if (key == "L_scale") {
      c.L_scale = number(v, key);
    } else if (key == "L_mult") {
      c.L_mult = static_cast<int>(integer(v, key));
    } else if (key == "b") {
      c.b = number(v, key);
    } else if (key == "b_pairs") {
      c.b_pairs = static_cast<int>(integer(v, key));
    } else if (key == "direction_samples") {
      c.direction_samples = static_cast<int>(integer(v, key));
    } else if (key == "translate_samples") {
      c.translate_samples = static_cast<int>(integer(v, key));
    } else if (key == "segment_step") {
      c.segment_step = number(v, key);
    } else if (key == "content_floor") {
      c.content_floor = number(v, key);
    } else if (key == "region") {
      c.region = text(v, key);
    } else if (key == "union_scale") {
      if (v.is_null()) {
        c.union_scale.reset();
      } else {
        c.union_scale = static_cast<int>(integer(v, key));
      }
    } else if (key == "root") {
      c.root = static_cast<int>(integer(v, key));
    } else if (key == "seeds") {
      require(v.is_object(), key, "expected {\"pipeline\": n, \"audit\": n}");
      known_keys(v, {"pipeline", "audit"}, key);
      if (v.contains("pipeline")) c.seed = static_cast<std::uint64_t>(integer(v["pipeline"], "seeds.pipeline"));
      if (v.contains("audit")) c.audit_seed = static_cast<std::uint64_t>(integer(v["audit"], "seeds.audit"));
    } else if (key == "mode") {
      c.mode = text(v, key);
    } else if (key == "exhaustive_limit") {
      c.exhaustive_limit = integer(v, key);
    } else if (key == "samples") {
      c.samples = integer(v, key);
    } else if (key == "lipschitz_pairs") {
      c.lipschitz_pairs = static_cast<int>(integer(v, key));
    } else if (key == "output") {
      c.output = text(v, key);
    } else {
      throw ConfigError(key, "unknown field");
    }
  }
  require(c.R > 0.0, "R", "must be positive");
  require(c.h > 0.0 && c.h <= c.R, "h", "must lie in (0, R]");
  require(c.tau > 1.0, "tau", "must exceed 1");
  require(c.delta > 0.0 && c.delta < 1.0, "delta", "must lie in (0, 1)");
  require(c.p >= 1.0, "p", "must be at least 1");
  require(c.c1 > 0.0, "c1", "must be positive");
  require(c.alpha_threshold > 0.0, "alpha_threshold", "must be positive");
  require(c.L_scale > 0.0, "L_scale", "must be positive");
  require(c.L_mult >= 1, "L_mult", "must be at least 1");
  require(c.b >= 0.0 && c.b <= 0.1, "b", "must lie in [0, 1/10]; 0 estimates it");
  require(c.b_pairs >= 1, "b_pairs", "must be positive");
  require(c.direction_samples >= 1, "direction_samples", "must be positive");
  require(c.translate_samples >= 1, "translate_samples", "must be positive");
  require(c.segment_step > 0.0 && c.segment_step <= 1.0, "segment_step", "must lie in (0, 1]");
  require(c.region == "single" || c.region == "union", "region", "must be \"single\" or \"union\"");
  require(c.root >= 0, "root", "must be a cube id");
  require(c.mode == "exhaustive" || c.mode == "sampled", "mode", "must be \"exhaustive\" or \"sampled\"");
  require(c.exhaustive_limit >= 0, "exhaustive_limit", "must be nonnegative");
  require(c.samples >= 1, "samples", "must be positive");
  require(c.lipschitz_pairs >= 1, "lipschitz_pairs", "must be positive");
  const auto names = map_preset_names();
  require(std::find(names.begin(), names.end(), c.map.preset) != names.end(), "map.preset",
          "unknown map preset \"" + c.map.preset + "\"; available: " + join(names));
  try {
    (void)load_group(c.domain);
  } catch (const std::exception& e) {
    throw ConfigError("domain", e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("", path + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const RunConfig& c) {
  return {{"domain", c.domain},
          {"lambdas", c.lambdas},
          {"map", {{"preset", c.map.preset}, {"params", c.map.params}}},
          {"R", c.R},
          {"h", c.h},
          {"tau", c.tau},
          {"delta", c.delta},
          {"p", c.p},
          {"c1", c.c1},
          {"alpha_threshold", c.alpha_threshold},
          {"L_scale", c.L_scale},
          {"L_mult", c.L_mult},
          {"b", c.b},
          {"b_pairs", c.b_pairs},
          {"direction_samples", c.direction_samples},
          {"translate_samples", c.translate_samples},
          {"segment_step", c.segment_step},
          {"content_floor", c.content_floor},
          {"region", c.region},
          {"union_scale", c.union_scale ? json(*c.union_scale) : json()},
          {"root", c.root},
          {"seeds", {{"pipeline", c.seed}, {"audit", c.audit_seed}}},
          {"mode", c.mode},
          {"exhaustive_limit", c.exhaustive_limit},
          {"samples", c.samples},
          {"lipschitz_pairs", c.lipschitz_pairs},
          {"output", c.output}};
}

std::string config_hash(const RunConfig& c) {
  json j = config_to_json(c);
  j.erase("output");  // where results go is not part of the run
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

json MapPreset::to_json() const {
  return {{"name", name},
          {"map", map->name()},
          {"declared_lipschitz", map->declared_lipschitz()},
          {"justification", map->justification()},
          {"measured_lipschitz", audit.measured},
          {"pairs", audit.pairs},
          {"verified", audit.ok()},
          {"null_image", map->null_image()}};
}

std::vector<std::string> map_preset_names() { return {"hom", "fold", "collapse", "constant"}; }

MapPreset map_preset(const std::string& name, const AlgebraPtr& domain, const NormConfig& cfg, const json& params,
                     double radius, int pairs, std::uint64_t seed) {
  const auto names = map_preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ConfigError("map.preset", "unknown map preset \"" + name + "\"; available: " + join(names));
  }
  require(params.is_object(), "map.params", "expected an object");
  const int m1 = domain->layer_dim(1);
  MapPreset out;
  out.name = name;
  if (name == "hom" || name == "collapse") {
    known_keys(params, {"matrix", "codomain"}, "map.params");
    AlgebraPtr cod = group_param(params, "codomain", name == "hom" ? domain : abelian_algebra(1), "map.params.codomain");
    const int n1 = cod->layer_dim(1);
    ExactMatrix m(n1, m1);
    if (params.contains("matrix")) {
      m = matrix_param(params["matrix"], n1, m1, "map.params.matrix");
    } else if (name == "hom") {
      require(n1 == m1, "map.params.matrix", "required when the codomain first layer differs in size");
      m = ExactMatrix::identity(m1);
    } else {
      m(0, 0) = QSqrt2(1);
    }
    Homomorphism hom = [&] {
      try {
        return hom_from_first_layer(m, domain, cod);
      } catch (const std::exception& e) {
        throw ConfigError("map.params.matrix", e.what());
      }
    }();
    out.map = make_hom_map(hom, cfg, NormConfig::ones(cod->step()), true, name);
  } else if (name == "fold") {
    known_keys(params, {"coords"}, "map.params");
    std::vector<int> coords{0};
    if (params.contains("coords")) {
      const auto& v = params["coords"];
      require(v.is_array(), "map.params.coords", "expected an array of first-layer indices");
      coords.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = "map.params.coords[" + std::to_string(i) + "]";
        const long long k = integer(v[i], p);
        require(k >= 0 && k < m1, p, "must lie in [0, " + std::to_string(m1) + ")");
        coords.push_back(static_cast<int>(k));
      }
    }
    out.map = make_fold_map(domain, cfg, coords);
  } else {
    known_keys(params, {"value", "codomain"}, "map.params");
    AlgebraPtr cod = group_param(params, "codomain", domain, "map.params.codomain");
    std::vector<double> value(cod->dim(), 0.0);
    if (params.contains("value")) {
      const auto& v = params["value"];
      require(v.is_array() && static_cast<int>(v.size()) == cod->dim(), "map.params.value",
              "expected " + std::to_string(cod->dim()) + " coordinates");
      for (int i = 0; i < cod->dim(); ++i) value[i] = number(v[i], "map.params.value[" + std::to_string(i) + "]");
    }
    out.map = make_constant_map(domain, cfg, cod, NormConfig::ones(cod->step()), value);
  }
  out.audit = audit_lipschitz(*out.map, radius, pairs, seed);
  if (!out.audit.ok()) {
    throw StageError("map", "declared Lipschitz constant " + std::to_string(out.audit.declared) +
                                " is below the measured " + std::to_string(out.audit.measured));
  }
  return out;
}

json GroupLawReport::to_json() const {
  return {{"draws", draws},
          {"associativity_failures", associativity_failures},
          {"inverse_failures", inverse_failures},
          {"involution_failures", involution_failures},
          {"dilation_failures", dilation_failures},
          {"pass", ok()}};
}

GroupLawReport check_group_laws(const AlgebraPtr& alg, int draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> num(-7, 7), den(1, 7), pos(1, 7);
  auto point = [&] {
    std::vector<QSqrt2> c(alg->dim());
    for (auto& x : c) x = QSqrt2(Rational(num(rng), den(rng)));
    return ExactPoint(alg, std::move(c));
  };
  GroupLawReport r;
  r.draws = draws;
  for (int i = 0; i < draws; ++i) {
    const auto g = point(), h = point(), k = point();
    const QSqrt2 lambda(Rational(pos(rng), den(rng)));
    r.associativity_failures += !(bch_multiply(bch_multiply(g, h), k) == bch_multiply(g, bch_multiply(h, k)));
    r.inverse_failures += !bch_multiply(g, invert(g)).is_identity();
    r.involution_failures += !(invert(invert(g)) == g);
    r.dilation_failures += !(dilate(lambda, bch_multiply(g, h)) == bch_multiply(dilate(lambda, g), dilate(lambda, h)));
  }
  return r;
}

json NormLawReport::to_json() const {
  return {{"draws", draws},
          {"homogeneity_error", homogeneity_error},
          {"left_invariance_error", left_invariance_error},
          {"symmetry_failures", symmetry_failures},
          {"C_Q", quasi_constant},
          {"pass", ok()}};
}

NormLawReport check_norm_laws(const AlgebraPtr& alg, NormConfig cfg, int draws, std::uint64_t seed) {
  NormLawReport r;
  r.draws = draws;
  r.quasi_constant = validate_triangle(cfg, alg, draws, seed);
  Metric metric(alg, cfg);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> scale(0.1, 4.0);
  for (int i = 0; i < draws; ++i) {
    const auto g = random_ball_point(alg, cfg, 1.0, rng);
    const auto h = random_ball_point(alg, cfg, 1.0, rng);
    const auto k = random_ball_point(alg, cfg, 1.0, rng);
    const double lam = scale(rng);
    r.homogeneity_error =
        std::max(r.homogeneity_error, std::abs(norm_infty(dilate(lam, g), cfg) - lam * norm_infty(g, cfg)));
    r.left_invariance_error = std::max(
        r.left_invariance_error, std::abs(metric.dist(bch_multiply(k, g), bch_multiply(k, h)) - metric.dist(g, h)));
    r.symmetry_failures += norm_infty(g, cfg) != norm_infty(invert(g), cfg);
  }
  return r;
}

json tree_to_json(const CubeTree& tree) {
  const auto& lat = tree.lattice();
  json cubes = json::array();
  for (int id = 0; id < tree.num_cubes(); ++id) {
    const auto& q = tree.cube(id);
    const double* z = lat.point(q.center);
    cubes.push_back({{"id", id},
                     {"scale", q.scale},
                     {"center", std::vector<double>(z, z + lat.dim())},
                     {"center_index", q.center},
                     {"parent", q.parent},
                     {"points", q.points.size()}});
  }
  return {{"tau", tree.tau()}, {"k_min", tree.k_min()}, {"k_max", tree.k_max()}, {"cubes", cubes}};
}

Setup setup(const RunConfig& c) {
  Setup s;
  s.alg = in_stage("group", [&] { return load_group(c.domain); });
  s.cfg = c.norm(s.alg->step());
  s.quasi_constant = in_stage("norm", [&] { return validate_triangle(s.cfg, s.alg, 4000, c.audit_seed); });
  s.lattice = in_stage("lattice", [&] { return GradedLattice::build(s.alg, s.cfg, FloatPoint::identity(s.alg), c.R, c.h); });
  s.tree = in_stage("tree", [&] {
    auto [kmin, kmax] = CubeTree::default_scales(*s.lattice, c.tau);
    return CubeTree::build(s.lattice, c.tau, kmin, kmax);
  });
  require(c.root < s.tree->num_cubes(), "root", "no cube with id " + std::to_string(c.root));
  s.preset = map_preset(c.map.preset, s.alg, s.cfg, c.map.params, c.R, c.lipschitz_pairs, c.audit_seed);
  return s;
}

RunResult run(const RunConfig& c) {
  namespace fs = std::filesystem;
  const std::string hash = config_hash(c);
  Setup su = setup(c);
  const auto& alg = su.alg;
  const auto& lat = su.lattice;
  const auto& tree = su.tree;
  const auto& preset = su.preset;
  const double cq = su.quasi_constant;
  const auto tree_audit = in_stage("tree", [&] { return audit_tree(*tree); });
  MapSample sample(preset.map, lat);
  const bool union_mode = c.region == "union";
  const int union_scale = c.union_scale.value_or(tree->k_min());
  auto res = in_stage("decompose", [&] { return decompose(sample, *tree, c.pipeline(), c.root, union_mode, union_scale); });
  const auto& dec = res.decomposition;
  const auto& cert = res.certification;

  const json constants = {{"C_Q", cq},   {"b", res.b},           {"T", dec.T},
                          {"l", dec.l},  {"c", cert.c_empirical}, {"L_mult", dec.L_mult}};
  const bool invariants = dec.partition_ok && dec.coding_violations == 0 && dec.piece_bound_ok() &&
                          dec.r2_chebyshev && tree_audit.ok() && preset.audit.ok() && cert.subadditive;

  json echo = config_to_json(c);
  echo.erase("output");  // outputs depend only on the hashed fields

  RunResult out;
  out.exit_code = cert.all_pass && invariants ? 0 : 1;
  in_stage("write", [&] {
    const fs::path dir(c.output);
    fs::create_directories(dir);
    json pr = json::array();
    for (const auto& p : cert.pieces) pr.push_back(std::isfinite(p.min_ratio) ? json(p.min_ratio) : json());
    write_json(dir / "decomposition.json", {{"config_hash", hash},
                                            {"config", echo},
                                            {"constants", constants},
                                            {"map", preset.to_json()},
                                            {"decomposition", dec.to_json()},
                                            {"piece_ratios", pr},
                                            {"stages", strip_seconds(res.stages)}});
    write_json(dir / "certification.json",
               {{"config_hash", hash}, {"constants", constants}, {"certification", cert.to_json()}});
    {
      std::ofstream csv(dir / "assignment.csv");
      csv << "index";
      for (int i = 0; i < lat->dim(); ++i) csv << ",x" << i;
      csv << ",piece,word\n";
      char buf[32];
      for (int i = 0; i < lat->size(); ++i) {
        csv << i;
        for (int k = 0; k < lat->dim(); ++k) {
          std::snprintf(buf, sizeof buf, "%.17g", lat->point(i)[k]);
          csv << ',' << buf;
        }
        const int label = dec.label[i];
        csv << ',' << label << ',' << (label >= 0 ? word_string(dec.pieces[label].word) : "") << '\n';
      }
    }
    {
      std::vector<int> ids;
      for (int r : dec.roots) {
        auto d = descendants(*tree, r);
        ids.insert(ids.end(), d.begin(), d.end());
      }
      std::ofstream csv(dir / "alpha.csv");
      write_alpha_csv(csv, *tree, ids, res.alpha);
    }
    const auto galg = alg->audit();
    write_json(dir / "audit.json",
               {{"config_hash", hash},
                {"constants", constants},
                {"group", {{"name", c.domain}, {"algebra_ok", galg.ok()}, {"problems", galg.problems}}},
                {"lattice", {{"points", lat->size()}, {"h", c.h}, {"R", c.R}}},
                {"tree", tree_audit.to_json()},
                {"map", preset.to_json()},
                {"invariants",
                 {{"partition", dec.partition_ok},
                  {"coding_violations", dec.coding_violations},
                  {"piece_bound", dec.piece_bound_ok()},
                  {"r2_chebyshev", dec.r2_chebyshev},
                  {"content_subadditive", cert.subadditive},
                  {"certification", cert.all_pass}}},
                {"pass", out.exit_code == 0}});
    return 0;
  });
  for (const char* f : {"decomposition.json", "assignment.csv", "certification.json", "alpha.csv", "audit.json"}) {
    out.files.push_back((fs::path(c.output) / f).string());
  }
  out.summary = {{"config_hash", hash},
                 {"exit_code", out.exit_code},
                 {"pieces", dec.pieces.size()},
                 {"z", dec.z.size()},
                 {"points", lat->size()},
                 {"all_pass", cert.all_pass},
                 {"invariants", invariants},
                 {"constants", constants},
                 {"output", c.output}};
  return out;
}

RunResult alpha_stats(const RunConfig& c, int target_segments) {
  namespace fs = std::filesystem;
  const std::string hash = config_hash(c);
  Setup su = setup(c);
  const auto params = c.pipeline();
  const auto ids = descendants(*su.tree, c.root);
  std::vector<AlphaCube> alpha(su.tree->num_cubes());
  in_stage("alpha", [&] {
    auto per = kernels::omp::alpha_cubes(*su.preset.map, *su.tree, ids, params.alpha, c.seed);
    for (std::size_t i = 0; i < ids.size(); ++i) alpha[ids[i]] = per[i];
    return 0;
  });
  const auto carleson = carleson_sum(*su.tree, c.root, alpha);
  const auto target =
      in_stage("target", [&] { return target_certificate(*su.preset.map, c.R, params.alpha, target_segments, c.audit_seed); });
  RunResult out;
  out.exit_code = carleson.min_summand >= -1e-12 && target.ok() ? 0 : 1;
  in_stage("write", [&] {
    const fs::path dir(c.output);
    fs::create_directories(dir);
    std::ofstream csv(dir / "alpha.csv");
    write_alpha_csv(csv, *su.tree, ids, alpha);
    write_json(dir / "carleson.json", {{"config_hash", hash},
                                       {"constants", {{"C_Q", su.quasi_constant}}},
                                       {"map", su.preset.to_json()},
                                       {"carleson", carleson.to_json()},
                                       {"target", target.to_json()},
                                       {"pass", out.exit_code == 0}});
    return 0;
  });
  out.files = {(fs::path(c.output) / "alpha.csv").string(), (fs::path(c.output) / "carleson.json").string()};
  out.summary = {{"config_hash", hash},
                 {"exit_code", out.exit_code},
                 {"cubes", ids.size()},
                 {"carleson_total", carleson.total},
                 {"min_summand", carleson.min_summand},
                 {"target_min_partial", target.min_partial}};
  return out;
}

RunResult net_cover(const RunConfig& c, double ell, const std::vector<double>& eps, int check_scale, double b) {
  namespace fs = std::filesystem;
  require(ell > 0.0, "ell", "must be positive");
  require(!eps.empty(), "eps", "expected at least one value");
  require(b > 0.0, "b", "must be positive");
  const std::string hash = config_hash(c);
  Setup su = setup(c);
  MapSample sample(su.preset.map, su.lattice);
  const std::vector<double> origin(su.alg->dim(), 0.0);
  const double N = homogeneous_dimension(*su.alg);

  json nets = json::array();
  std::vector<int> counts;
  bool covers = true;
  for (double e : eps) {
    const auto net = in_stage("net", [&] { return epsilon_net_cover(sample, origin.data(), ell, e); });
    covers = covers && net.covers;
    counts.push_back(net.count());
    nets.push_back(net.to_json());
  }
  std::vector<int> ball;
  su.lattice->index().for_each_within(origin.data(), ell, [&](int i, double) { ball.push_back(i); });
  std::sort(ball.begin(), ball.end());
  const double floor = c.content_floor >= 0.0 ? c.content_floor
                                              : su.preset.map->declared_lipschitz() * std::pow(c.tau, su.tree->k_min());
  const auto content = in_stage("content", [&] { return content_upper(sample.image(), ball, N, {0.0, floor}); });
  const bool cover_ok = cover_contains(sample.image(), ball, content.cover);

  json checks = json::array();
  require(check_scale >= su.tree->k_min() && check_scale <= su.tree->k_max(), "scale", "outside the cube tree");
  for (int id : su.tree->cubes_at(check_scale)) {
    auto r = in_stage("check", [&] {
      return weak_bilip_check(sample, *su.tree, id, c.delta, b, c.exhaustive_limit, c.samples, c.seed);
    });
    auto j = r.to_json();
    j["cube"] = id;
    checks.push_back(j);
  }

  RunResult out;
  out.exit_code = covers && cover_ok ? 0 : 1;
  in_stage("write", [&] {
    const fs::path dir(c.output);
    fs::create_directories(dir);
    write_json(dir / "cover.json", {{"config_hash", hash},
                                    {"map", su.preset.to_json()},
                                    {"ell", ell},
                                    {"nets", nets},
                                    {"slope", eps.size() > 1 ? json(loglog_slope(eps, counts)) : json()},
                                    {"content", content.to_json(true)},
                                    {"content_cover_ok", cover_ok}});
    write_json(dir / "checks.json", {{"config_hash", hash},
                                     {"delta", c.delta},
                                     {"b", b},
                                     {"scale", check_scale},
                                     {"cubes", checks}});
    return 0;
  });
  out.files = {(fs::path(c.output) / "cover.json").string(), (fs::path(c.output) / "checks.json").string()};
  out.summary = {{"config_hash", hash}, {"exit_code", out.exit_code}, {"counts", counts}, {"content", content.upper}};
  return out;
}

RunResult verify_group(const std::string& group, const std::vector<double>& lambdas, const std::string& output,
                       int draws, std::uint64_t seed, double R, double h, double tau) {
  namespace fs = std::filesystem;
  require(draws >= 1, "draws", "must be positive");
  AlgebraPtr alg;
  try {
    alg = load_group(group);
  } catch (const std::exception& e) {
    throw ConfigError("group", e.what());
  }
  RunConfig rc;
  rc.lambdas = lambdas;
  const NormConfig cfg = rc.norm(alg->step());
  const auto audit = alg->audit();
  const auto laws = in_stage("group", [&] { return check_group_laws(alg, draws, seed); });
  const auto norms = in_stage("norm", [&] { return check_norm_laws(alg, cfg, draws, seed); });
  RunResult out;
  bool ok = audit.ok() && laws.ok() && norms.ok();
  const fs::path dir(output);
  in_stage("write", [&] {
    fs::create_directories(dir);
    write_json(dir / "group.json", {{"spec", algebra_to_json(*alg)},
                                    {"homogeneous_dimension", homogeneous_dimension(*alg)},
                                    {"axioms", {{"ok", audit.ok()}, {"problems", audit.problems}}},
                                    {"group_laws", laws.to_json()},
                                    {"norm_laws", norms.to_json()}});
    return 0;
  });
  out.files.push_back((dir / "group.json").string());
  out.summary = {{"group", alg->name()}, {"C_Q", norms.quasi_constant}};
  if (h > 0.0) {
    require(R > 0.0 && h <= R, "h", "must lie in (0, R]");
    require(tau > 1.0, "tau", "must exceed 1");
    NormConfig measured = cfg;
    measured.quasi_constant = norms.quasi_constant;
    auto lat = in_stage("lattice", [&] { return GradedLattice::build(alg, measured, FloatPoint::identity(alg), R, h); });
    auto tree = in_stage("tree", [&] {
      auto [kmin, kmax] = CubeTree::default_scales(*lat, tau);
      return CubeTree::build(lat, tau, kmin, kmax);
    });
    const auto ta = audit_tree(*tree);
    const auto be = estimate_b(*tree, 10000, seed);
    json doubling = json::array();
    for (int k = tree->k_min(); k <= tree->k_max(); ++k) doubling.push_back({{"scale", k}, {"T", doubling_bound(*tree, k)}});
    ok = ok && ta.ok();
    in_stage("write", [&] {
      write_json(dir / "tree.json", tree_to_json(*tree));
      write_json(dir / "tree_audit.json", {{"points", lat->size()},
                                           {"audit", ta.to_json()},
                                           {"b", be.b},
                                           {"b_pairs", be.pairs},
                                           {"doubling", doubling},
                                           {"covering_radius", lat->covering_radius(2000, seed)},
                                           {"pass", ta.ok()}});
      return 0;
    });
    out.files.push_back((dir / "tree.json").string());
    out.files.push_back((dir / "tree_audit.json").string());
    out.summary["points"] = lat->size();
    out.summary["cubes"] = tree->num_cubes();
  }
  out.exit_code = ok ? 0 : 1;
  out.summary["exit_code"] = out.exit_code;
  return out;
}

RunResult discreteness(const std::string& output, const CertificateOptions& opt) {
  namespace fs = std::filesystem;
  const json cert = in_stage("discreteness", [&] { return discreteness_certificate(opt); });
  const fs::path dir(output);
  in_stage("write", [&] {
    fs::create_directories(dir);
    write_json(dir / "discreteness.json", cert);
    return 0;
  });
  RunResult out;
  out.exit_code = cert.value("all_pass", false) ? 0 : 1;
  out.files = {(dir / "discreteness.json").string()};
  out.summary = {{"exit_code", out.exit_code}, {"all_pass", cert.value("all_pass", false)}};
  return out;
}

}  // namespace carnot
