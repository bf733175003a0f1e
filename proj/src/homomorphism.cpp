#include "carnot/homomorphism.hpp"

#include <algorithm>
#include <cmath>

namespace carnot {

ExactMatrix ExactMatrix::identity(int n) {
  ExactMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

ExactMatrix ExactMatrix::from_double(const Eigen::MatrixXd& d) {
  ExactMatrix m(static_cast<int>(d.rows()), static_cast<int>(d.cols()));
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) m(r, c) = QSqrt2(rational_from_double(d(r, c)));
  }
  return m;
}

Eigen::MatrixXd ExactMatrix::to_double() const {
  Eigen::MatrixXd d(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) d(r, c) = (*this)(r, c).to_double();
  }
  return d;
}

std::optional<std::vector<QSqrt2>> exact_solve(ExactMatrix m, std::vector<QSqrt2> b) {
  const int n = m.rows;
  if (m.cols != n || static_cast<int>(b.size()) != n) {
    throw std::invalid_argument("exact_solve needs a square system");
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    while (pivot < n && m(pivot, col).is_zero()) ++pivot;
    if (pivot == n) return std::nullopt;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(m(pivot, c), m(col, c));
      std::swap(b[pivot], b[col]);
    }
    QSqrt2 inv = m(col, col).inverse();
    for (int r = 0; r < n; ++r) {
      if (r == col || m(r, col).is_zero()) continue;
      QSqrt2 f = m(r, col) * inv;
      for (int c = col; c < n; ++c) m(r, c) -= f * m(col, c);
      b[r] -= f * b[col];
    }
  }
  for (int i = 0; i < n; ++i) b[i] *= m(i, i).inverse();
  return b;
}

Homomorphism::Homomorphism(AlgebraPtr domain, AlgebraPtr codomain, std::vector<ExactMatrix> blocks)
    : domain_(std::move(domain)), codomain_(std::move(codomain)), blocks_(std::move(blocks)) {
  if (static_cast<int>(blocks_.size()) != domain_->step()) {
    throw HomomorphismError("homomorphism needs one block per domain layer");
  }
  for (int j = 1; j <= domain_->step(); ++j) {
    const auto& b = blocks_[j - 1];
    int rows = j <= codomain_->step() ? codomain_->layer_dim(j) : 0;
    if (b.rows != rows || b.cols != domain_->layer_dim(j)) {
      throw HomomorphismError("block " + std::to_string(j) + " has shape " + std::to_string(b.rows) +
                              "x" + std::to_string(b.cols) + ", expected " + std::to_string(rows) +
                              "x" + std::to_string(domain_->layer_dim(j)));
    }
    blocks_d_.push_back(b.to_double());
  }
}

std::optional<std::pair<int, int>> Homomorphism::bracket_violation() const {
  const auto& dom = *domain_;
  const auto& cod = *codomain_;
  std::vector<QSqrt2> ea(dom.dim()), eb(dom.dim()), br(dom.dim()), lhs(cod.dim());
  std::vector<QSqrt2> la(cod.dim()), lb(cod.dim()), rhs(cod.dim());
  for (int a = 0; a < dom.dim(); ++a) {
    for (int b = a + 1; b < dom.dim(); ++b) {
      std::fill(ea.begin(), ea.end(), QSqrt2());
      std::fill(eb.begin(), eb.end(), QSqrt2());
      ea[a] = 1;
      eb[b] = 1;
      dom.bracket_into(ea.data(), eb.data(), br.data());
      apply_into(br.data(), lhs.data());
      apply_into(ea.data(), la.data());
      apply_into(eb.data(), lb.data());
      cod.bracket_into(la.data(), lb.data(), rhs.data());
      if (lhs != rhs) return std::make_pair(a, b);
    }
  }
  return std::nullopt;
}

double Homomorphism::lipschitz_constant(const NormConfig& dom_cfg, const NormConfig& cod_cfg) const {
  double lip = 0.0;
  for (int j = 1; j <= domain_->step() && j <= codomain_->step(); ++j) {
    const auto& m = blocks_d_[j - 1];
    if (m.size() == 0) continue;
    double op = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    lip = std::max(lip, cod_cfg.lambdas[j - 1] / dom_cfg.lambdas[j - 1] * std::pow(op, 1.0 / j));
  }
  return lip;
}

Homomorphism Homomorphism::dilated(const QSqrt2& s) const {
  std::vector<ExactMatrix> blocks = blocks_;
  QSqrt2 power = s;
  for (auto& b : blocks) {
    for (auto& x : b.data) x *= power;
    power *= s;
  }
  return Homomorphism(domain_, codomain_, std::move(blocks));
}

Homomorphism hom_from_first_layer(const ExactMatrix& a1, AlgebraPtr domain, AlgebraPtr codomain) {
  const auto& dom = *domain;
  const auto& cod = *codomain;
  if (a1.rows != cod.layer_dim(1) || a1.cols != dom.layer_dim(1)) {
    throw HomomorphismError("first-layer block must be " + std::to_string(cod.layer_dim(1)) + "x" +
                            std::to_string(dom.layer_dim(1)));
  }
  std::vector<ExactMatrix> blocks{a1};
  // full codomain images of the domain basis vectors, filled layer by layer
  std::vector<std::vector<QSqrt2>> image(dom.dim(), std::vector<QSqrt2>(cod.dim()));
  for (int c = 0; c < dom.layer_dim(1); ++c) {
    for (int r = 0; r < cod.layer_dim(1); ++r) image[c][r] = a1(r, c);
  }

  for (int j = 1; j < dom.step(); ++j) {
    const int next = j + 1;
    const int m = dom.layer_dim(next);
    const int off = dom.layer_offset(next);
    // choose pairs (x in V_1, y in V_j) whose brackets form a basis of V_{j+1}
    std::vector<std::pair<int, int>> pairs;
    std::vector<std::vector<QSqrt2>> chosen;
    for (int x = 0; x < dom.layer_dim(1) && static_cast<int>(pairs.size()) < m; ++x) {
      for (int y = dom.layer_offset(j); y < dom.layer_offset(j) + dom.layer_dim(j); ++y) {
        if (static_cast<int>(pairs.size()) == m) break;
        auto full = dom.basis_bracket(x, y);
        std::vector<QSqrt2> seg(full.begin() + off, full.begin() + off + m);
        chosen.push_back(seg);
        if (exact_rank(chosen) == static_cast<int>(chosen.size())) {
          pairs.emplace_back(x, y);
        } else {
          chosen.pop_back();
        }
      }
    }
    if (static_cast<int>(pairs.size()) != m) {
      throw HomomorphismError("domain is not generated by its first layer at V_" +
                              std::to_string(next));
    }
    ExactMatrix basis(m, m);
    for (int p = 0; p < m; ++p) {
      for (int r = 0; r < m; ++r) basis(r, p) = chosen[p][r];
    }
    const int rows = next <= cod.step() ? cod.layer_dim(next) : 0;
    ExactMatrix block(rows, m);
    std::vector<QSqrt2> br(cod.dim());
    std::vector<std::vector<QSqrt2>> pair_images;
    for (auto [x, y] : pairs) {
      cod.bracket_into(image[x].data(), image[y].data(), br.data());
      pair_images.push_back(br);
    }
    for (int c = 0; c < m; ++c) {
      std::vector<QSqrt2> e(m);
      e[c] = 1;
      auto coef = exact_solve(basis, e);
      std::vector<QSqrt2>& img = image[off + c];
      for (int p = 0; p < m; ++p) {
        if ((*coef)[p].is_zero()) continue;
        for (int i = 0; i < cod.dim(); ++i) img[i] += (*coef)[p] * pair_images[p][i];
      }
      for (int r = 0; r < rows; ++r) block(r, c) = img[cod.layer_offset(next) + r];
    }
    blocks.push_back(std::move(block));
  }

  Homomorphism hom(domain, codomain, std::move(blocks));
  if (auto bad = hom.bracket_violation()) {
    throw HomomorphismError("first-layer block does not induce a homomorphism: bracket [e" +
                            std::to_string(bad->first) + ", e" + std::to_string(bad->second) +
                            "] is not preserved");
  }
  return hom;
}

namespace {

struct LayerMin {
  double value;
  std::vector<double> direction;
};

LayerMin layer_min(const Homomorphism& L, int j, const NormConfig& cfg) {
  const int cols = L.domain()->layer_dim(j);
  const auto& m = L.block_d(j);
  LayerMin out{0.0, std::vector<double>(cols, 0.0)};
  if (m.rows() < cols) {
    // nontrivial kernel
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m.rows() == 0 ? Eigen::MatrixXd::Zero(1, cols) : m);
    Eigen::MatrixXd ker = lu.kernel();
    Eigen::VectorXd v = ker.col(0).normalized();
    for (int i = 0; i < cols; ++i) out.direction[i] = v(i);
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const int last = cols - 1;
  double sigma = svd.singularValues()(last);
  Eigen::VectorXd v = svd.matrixV().col(last);
  for (int i = 0; i < cols; ++i) out.direction[i] = v(i);
  out.value = cfg.lambdas[j - 1] * std::pow(sigma, 1.0 / j);
  return out;
}

}  // namespace

std::vector<double> layer_inradii(const Homomorphism& L, const NormConfig& codomain_cfg) {
  std::vector<double> out;
  for (int j = 1; j <= L.domain()->step(); ++j) {
    if (j > L.codomain()->step()) {
      out.push_back(0.0);
      continue;
    }
    out.push_back(layer_min(L, j, codomain_cfg).value);
  }
  return out;
}

std::optional<CollapseWitness> collapse_witness(const Homomorphism& L, double eps,
                                                const NormConfig& codomain_cfg) {
  if (!(eps > 0.0)) throw std::invalid_argument("collapse_witness needs eps > 0");
  for (int j = 1; j <= L.domain()->step(); ++j) {
    if (j > L.codomain()->step()) {
      std::vector<double> v(L.domain()->layer_dim(j), 0.0);
      v[0] = 1.0;
      return CollapseWitness{j, v, 0.0};
    }
    auto lm = layer_min(L, j, codomain_cfg);
    if (lm.value < eps) return CollapseWitness{j, lm.direction, lm.value};
  }
  return std::nullopt;
}

JacobianReport jacobian_degeneracy(const Homomorphism& L) {
  JacobianReport rep;
  rep.square = true;
  double value = 1.0;
  for (int j = 1; j <= L.domain()->step(); ++j) {
    const auto& b = L.block(j);
    std::vector<std::vector<QSqrt2>> rows;
    for (int r = 0; r < b.rows; ++r) {
      rows.emplace_back(b.data.begin() + static_cast<std::ptrdiff_t>(r) * b.cols,
                        b.data.begin() + static_cast<std::ptrdiff_t>(r + 1) * b.cols);
    }
    if (exact_rank(rows) < b.cols) {
      rep.degenerate = true;
      rep.value = 0.0;
      rep.square = b.rows == b.cols;
      return rep;
    }
    const auto& m = L.block_d(j);
    if (b.rows == b.cols) {
      value *= std::abs(m.determinant());
    } else {
      rep.square = false;
      value *= std::sqrt((m.transpose() * m).determinant());
    }
  }
  rep.value = value;
  return rep;
}

}  // namespace carnot
