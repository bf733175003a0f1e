#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "carnot/report.hpp"

using nlohmann::json;

namespace {

// Config keys exposed as --flags; dashes in the flag map to underscores in the key.
const std::vector<std::string> kFields = {
    "domain",      "R",         "h",          "tau",
    "delta",       "p",         "c1",         "alpha_threshold",
    "L_scale",     "L_mult",    "b",          "b_pairs",
    "direction_samples", "translate_samples", "segment_step", "content_floor",
    "region",      "union_scale", "root",     "mode",
    "exhaustive_limit",  "samples", "lipschitz_pairs", "output"};

std::string dashed(std::string s) {
  for (char& ch : s)
    if (ch == '_') ch = '-';
  return s;
}

// Numbers and JSON literals parse as such; anything else stays a string.
json literal(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::parse_error&) {
    return s;
  }
}

struct ConfigFlags {
  std::string config;
  std::map<std::string, std::string> values;
  std::string preset, map_params, lambdas;
  std::uint64_t seed = 0, audit_seed = 0;
  std::vector<CLI::Option*> opts;
  CLI::Option *o_preset = nullptr, *o_params = nullptr, *o_lambdas = nullptr, *o_seed = nullptr,
              *o_audit = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file; flags override its fields")->check(CLI::ExistingFile);
    for (const auto& k : kFields) opts.push_back(app->add_option("--" + dashed(k), values[k], k));
    o_preset = app->add_option("--preset", preset, "map preset");
    o_params = app->add_option("--map-params", map_params, "map preset parameters as JSON");
    o_lambdas = app->add_option("--lambdas", lambdas, "norm weights, comma separated");
    o_seed = app->add_option("--seed", seed, "pipeline seed");
    o_audit = app->add_option("--audit-seed", audit_seed, "audit seed");
  }

  carnot::RunConfig build() const {
    json j = json::object();
    if (!config.empty()) {
      std::ifstream in(config);
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw carnot::ConfigError("", e.what());
      }
    }
    for (std::size_t i = 0; i < kFields.size(); ++i) {
      if (opts[i]->count() == 0) continue;
      const auto& k = kFields[i];
      const auto& v = values.at(k);
      j[k] = k == "domain" || k == "region" || k == "mode" || k == "output" ? json(v) : literal(v);
    }
    if (o_preset->count()) j["map"]["preset"] = preset;
    if (o_params->count()) {
      try {
        j["map"]["params"] = json::parse(map_params);
      } catch (const json::parse_error& e) {
        throw carnot::ConfigError("map.params", e.what());
      }
    }
    if (o_lambdas->count()) j["lambdas"] = literal("[" + lambdas + "]");
    if (o_seed->count()) j["seeds"]["pipeline"] = seed;
    if (o_audit->count()) j["seeds"]["audit"] = audit_seed;
    return carnot::config_from_json(j);
  }
};

int report(const carnot::RunResult& r) {
  std::cout << r.summary.dump(2) << "\n";
  for (const auto& f : r.files) std::cerr << "wrote " << f << "\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carnot: biLipschitz decomposition of Lipschitz maps between Carnot groups"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);

  auto* dec = app.add_subcommand("decompose", "full pipeline: pieces, certification and audits");
  ConfigFlags dec_flags;
  dec_flags.attach(dec);

  auto* alpha = app.add_subcommand("alpha-stats", "alpha coefficients and the Carleson sum");
  ConfigFlags alpha_flags;
  alpha_flags.attach(alpha);
  int segments = 200;
  alpha->add_option("--target-segments", segments, "segments for the target check")->check(CLI::PositiveNumber);

  auto* net = app.add_subcommand("net-cover", "epsilon nets of the image and weak biLipschitz checks");
  ConfigFlags net_flags;
  net_flags.attach(net);
  double ell = 1.0, check_b = 0.1;
  std::vector<double> eps = {0.25, 0.125, 0.0625};
  int check_scale = 0;
  net->add_option("--ell", ell, "radius of the ball whose image is covered");
  net->add_option("--eps", eps, "net radii");
  net->add_option("--check-scale", check_scale, "cube scale for the weak biLipschitz check");
  net->add_option("--check-b", check_b, "separation factor for the weak biLipschitz check");

  auto* grp = app.add_subcommand("verify-group", "group laws, norm laws and optionally the cube tree");
  std::string group = "heisenberg", group_out = "out", group_lambdas;
  int draws = 100;
  std::uint64_t group_seed = 1;
  double gR = 1.0, gh = 0.0, gtau = 4.0;
  grp->add_option("--group,--domain", group, "group preset or spec file");
  grp->add_option("--lambdas", group_lambdas, "norm weights, comma separated");
  grp->add_option("--output", group_out, "output directory");
  grp->add_option("--draws", draws, "random triples per law");
  grp->add_option("--seed", group_seed, "seed");
  grp->add_option("--R", gR, "lattice radius");
  grp->add_option("--h", gh, "lattice spacing; 0 skips the cube tree");
  grp->add_option("--tau", gtau, "cube ratio");

  auto* disc = app.add_subcommand("discreteness", "certificate for the non-discretizable example");
  std::string disc_out = "out";
  carnot::CertificateOptions copt;
  disc->add_option("--output", disc_out, "output directory");
  disc->add_option("--commutator-draws", copt.commutator_draws);
  disc->add_option("--unimodular-draws", copt.unimodular_draws);
  disc->add_option("--jacobi-draws", copt.jacobi_draws);
  disc->add_option("--density-eps", copt.density_eps);
  disc->add_option("--seed", copt.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dec) return report(carnot::run(dec_flags.build()));
    if (*alpha) return report(carnot::alpha_stats(alpha_flags.build(), segments));
    if (*net) return report(carnot::net_cover(net_flags.build(), ell, eps, check_scale, check_b));
    if (*grp) {
      std::vector<double> lam;
      if (!group_lambdas.empty()) {
        const json l = literal("[" + group_lambdas + "]");
        if (!l.is_array()) throw carnot::ConfigError("lambdas", "expected numbers");
        for (const auto& v : l) {
          if (!v.is_number()) throw carnot::ConfigError("lambdas", "expected numbers");
          lam.push_back(v.get<double>());
        }
      }
      return report(carnot::verify_group(group, lam, group_out, draws, group_seed, gR, gh, gtau));
    }
    if (*disc) return report(carnot::discreteness(disc_out, copt));
  } catch (const carnot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const carnot::StageError& e) {
    std::cerr << "stage " << e.stage() << " failed: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
