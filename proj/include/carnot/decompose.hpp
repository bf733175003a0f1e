#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "carnot/alpha.hpp"
#include "carnot/content.hpp"
#include "carnot/cubes.hpp"
#include "carnot/maps.hpp"

namespace carnot {

struct DecomposeParams {
  double delta = 0.05;
  double c1 = 1.0;
  double alpha_threshold = 1e-3;
  int L_mult = 3;
  AlphaParams alpha;
  /// 0 means estimate_b on b_pairs pairs.
  double b = 0.0;
  int b_pairs = 10000;
  /// Negative means declared Lipschitz constant times the finest cube side.
  double content_floor = -1.0;
  std::uint64_t seed = 1;
  bool exhaustive = true;
  long long exhaustive_limit = 10'000'000;
  long long samples = 100'000;
  void validate() const;
};

/// B1: cubes whose image content is below c1 delta |Q|. B2: cubes with
/// alpha >= alpha_threshold. Flags are indexed by cube id; cubes outside
/// Delta(S) are never flagged.
struct BadFamilies {
  int s = 0;
  std::vector<char> b1, b2;
  std::vector<double> content;  // image content per cube of Delta(S), NaN elsewhere
  double c1_delta = 0.0;
  double alpha_threshold = 0.0;
  bool null_image = false;  // content taken as 0 without estimation
  int count_b1() const;
  int count_b2() const;
};

/// alpha is indexed by cube id and must cover Delta(s).
BadFamilies classify_bad_cubes(const MapSample& sample, const CubeTree& tree, int s,
                               const std::vector<AlphaCube>& alpha, const ContentHierarchy& image_content,
                               double N, const DecomposeParams& params);

struct R2Set {
  int L_mult = 1;
  std::vector<int> points;        // sorted lattice indices of S with multiplicity >= L_mult
  std::vector<int> multiplicity;  // per point of S, in the order of S's points
  long long hat_total = 0;        // sum over B2 of |Q^| in points
  double hat_measure = 0.0;       // same in Haar measure
  /// |R2| <= hat_total / L_mult
  bool chebyshev_ok(int L_mult) const;
};

R2Set compute_R2(const CubeTree& tree, int s, const std::vector<char>& b2, int L_mult);

/// Smallest l >= 1 with max diam(Delta_k) < b min diam(Delta_{k+l}) over all
/// realized scale pairs in Delta(s). When no l inside the tree fits, returns
/// the depth of Delta(s), where no pair is realized and every F(Q) is empty.
int choose_l(const CubeTree& tree, int s, double b);

/// F(Q) for every cube of Delta(s), indexed by cube id: same-scale cubes
/// Q' != Q of Delta(s) with Q, Q' inside S'^ for some S' in B2 at scale k + l.
std::vector<std::vector<int>> neighbor_family(const CubeTree& tree, int s, const std::vector<char>& b2, int l);

class AlphabetExhausted : public std::runtime_error {
 public:
  AlphabetExhausted(int cube, int T);
  int cube() const { return cube_; }

 private:
  int cube_;
};

using Word = std::vector<int>;
std::string word_string(const Word& w);

struct Coding {
  int T = 0;
  int l = 0;
  std::vector<Word> words;      // a(Q) by cube id; empty outside Delta(s)
  std::vector<char> appended;   // F(Q) nonempty
  std::vector<std::vector<int>> family;
  /// Count of (Q, Q' in F(Q)) pairs breaking a prefix rule.
  long long audit() const;
};

/// Top-down and scale-major; within a scale, longer parent words first, then
/// id. With that order T = max |F(Q)| always suffices. Each cube with F(Q) nonempty takes
/// the smallest letter that keeps its word off every fixed word in F(Q):
/// not equal, and neither word a prefix of the other. Throws
/// AlphabetExhausted when no letter of {0..T} works.
Coding assign_words(const CubeTree& tree, int s, std::vector<std::vector<int>> family, int l, int T);

struct Piece {
  int root = 0;  // the cube S it came from
  Word word;
  std::vector<int> points;
};

struct Decomposition {
  std::vector<int> roots;  // the cubes S
  std::vector<Piece> pieces;
  std::vector<int> z;  // sorted
  std::vector<int> z_r1, z_r2, z_unresolved, z_boundary;
  /// Piece index per lattice point; -1 in Z, -2 outside every S.
  std::vector<int> label;
  int T = 0;
  int l = 0;
  double b = 0.0;
  int L_mult = 0;
  double quasi_constant = 1.0;
  int max_word_length = 0;
  int b1 = 0, b2 = 0;
  long long r2_hat_total = 0;
  bool r2_chebyshev = true;
  long long coding_violations = 0;
  bool partition_ok = false;
  /// (T+1)^(L_mult+1) per root cube.
  double piece_bound() const;
  bool piece_bound_ok() const { return static_cast<double>(pieces.size()) <= piece_bound(); }
  nlohmann::json to_json() const;
};

/// Points of S outside R1 and R2 grouped by stabilized word. A point is
/// unresolved, and goes to Z, when its finest cube still appends a letter.
Decomposition extract_pieces(const CubeTree& tree, int s, const Coding& coding, const std::vector<char>& b1,
                             const R2Set& r2);

struct PieceReport {
  int piece = 0;
  long long pairs = 0;
  double min_ratio = 0.0;
  bool exhaustive = true;
  bool pass = true;
  int x = -1, y = -1;
};

struct Certification {
  double delta = 0.0;
  std::vector<PieceReport> pieces;
  bool all_pass = true;
  double content_z = 0.0;
  double content_r1 = 0.0;
  double content_r2 = 0.0;
  double content_floor = 0.0;
  double dimension = 0.0;
  double radius = 0.0;
  double c_empirical = 0.0;  // content_z / (delta R^N)
  bool subadditive = true;
  nlohmann::json to_json() const;
};

Certification certify(const MapSample& sample, const Decomposition& dec, double delta, const ContentHierarchy& image_content,
                      double N, const DecomposeParams& params);

struct DecomposeResult {
  Decomposition decomposition;
  Certification certification;
  std::vector<AlphaCube> alpha;  // by cube id
  double b = 0.0;
  nlohmann::json stages;
};

/// Full pipeline on one cube S (single mode) or on every cube of scale
/// union_scale whose 3 L l(Q) neighbourhood stays in the sampled ball.
/// Points of cubes that fail that test go to Z as boundary.
DecomposeResult decompose(const MapSample& sample, const CubeTree& tree, const DecomposeParams& params,
                          int s = 0, bool union_mode = false, int union_scale = 0);

}  // namespace carnot
