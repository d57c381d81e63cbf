#pragma once

/// \file
/// Cartan structures K(x, p) and their zero-order tensors: the fundamental
/// tensor g^{ij} = 1/2 d^i d^j K^2, its inverse, p^i, tau = K^2 / 2, and the
/// Cartan tensor C^{ijk} = -1/4 d^i d^j d^k K^2.

#include <Eigen/Eigenvalues>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cartanlab/chart.hpp"
#include "cartanlab/dtensor.hpp"
#include "cartanlab/expr.hpp"
#include "cartanlab/jets.hpp"
#include "cartanlab/linalg.hpp"

namespace cartanlab {

using ExprMatrix = std::vector<std::vector<Expr>>;

/// Returns a description of why a point is outside the admissible domain, or
/// nothing when it is admissible.
using DomainCheck = std::function<std::optional<std::string>(const ChartPoint&)>;

struct CartanStructure {
  std::string label;
  std::string family;
  int dim = 0;
  Expr k2;  ///< K^2 over chart variables (x^1..x^n, p_1..p_n)
  DomainCheck domain;
  /// Constant c with R_kij = c (g_jk p_i - g_ik p_j), when the family has one.
  std::optional<double> curvature;
  /// True when the family is known to have C = 0.
  bool riemannian = false;
};

namespace detail {

inline Expr x_var(int i) { return Expr::var(i); }
inline Expr p_var(int n, int i) { return Expr::var(n + i); }

inline Expr determinant(const ExprMatrix& a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  Expr det = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    ExprMatrix minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Expr> row;
      for (std::size_t c = 0; c < n; ++c)
        if (c != col) row.push_back(a[r][c]);
      minor.push_back(row);
    }
    const Expr term = a[0][col] * determinant(minor);
    det = (col % 2 == 0) ? det + term : det - term;
  }
  return det;
}

/// Symbolic inverse by cofactors; the small dimensions here keep it cheap.
inline ExprMatrix inverse(const ExprMatrix& a) {
  const std::size_t n = a.size();
  const Expr det = determinant(a);
  ExprMatrix inv(n, std::vector<Expr>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      ExprMatrix minor;
      for (std::size_t r = 0; r < n; ++r) {
        if (r == j) continue;
        std::vector<Expr> row;
        for (std::size_t c = 0; c < n; ++c)
          if (c != i) row.push_back(a[r][c]);
        minor.push_back(row);
      }
      const Expr cof = n == 1 ? Expr(1.0) : determinant(minor);
      inv[i][j] = ((i + j) % 2 == 0 ? cof : -cof) / det;
    }
  return inv;
}

inline SquareMatrix eval_matrix(const ExprMatrix& a, const ChartPoint& at) {
  const auto n = static_cast<Eigen::Index>(a.size());
  SquareMatrix m(n, n);
  const auto z = at.coords();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval<double>(z);
  return m;
}

inline std::optional<std::string> base_metric_violation(const ExprMatrix& a, const ChartPoint& at) {
  const SquareMatrix m = eval_matrix(a, at);
  if (!m.allFinite()) return "base metric is not finite";
  Eigen::SelfAdjointEigenSolver<SquareMatrix> es(m);
  if (!(es.eigenvalues().minCoeff() > 0.0)) return "base metric is not positive definite";
  if (es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff() > kConditionBound)
    return "base metric is ill-conditioned";
  return std::nullopt;
}

inline bool depends_on_chart(const Expr& e) { return e.max_var() >= 0; }

}  // namespace detail

/// Flat structure K^2 = sum p_i^2.
inline CartanStructure flat_structure(int n, std::string label = "flat") {
  if (n < 2) throw DomainError("dimension must be at least 2");
  Expr k2 = 0.0;
  for (int i = 0; i < n; ++i) k2 = k2 + detail::p_var(n, i) * detail::p_var(n, i);
  return {std::move(label), "flat", n, k2, [](const ChartPoint&) { return std::nullopt; }, 0.0, true};
}

/// Riemannian dual K^2 = a^{ij}(x) p_i p_j of a base metric a_ij(x).
inline CartanStructure riemannian_dual(const ExprMatrix& a_down, std::string label = "riemannian") {
  const int n = static_cast<int>(a_down.size());
  if (n < 2) throw DomainError("dimension must be at least 2");
  for (const auto& row : a_down)
    if (static_cast<int>(row.size()) != n) throw DomainError("base metric must be square");
  const ExprMatrix a_up = detail::inverse(a_down);
  Expr k2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      k2 = k2 + a_up[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * detail::p_var(n, i) *
                    detail::p_var(n, j);
  DomainCheck domain = [a_down](const ChartPoint& at) { return detail::base_metric_violation(a_down, at); };
  return {std::move(label), "riemannian", n, k2, std::move(domain), std::nullopt, true};
}

/// Conformal model a_ij = delta_ij / (1 + c|x|^2/4)^2 of constant curvature c.
inline ExprMatrix conformal_metric(int n, double c) {
  Expr r2 = 0.0;
  for (int i = 0; i < n; ++i) r2 = r2 + detail::x_var(i) * detail::x_var(i);
  const Expr omega = 1.0 + (c / 4.0) * r2;
  const Expr diag = 1.0 / (omega * omega);
  ExprMatrix a(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n), Expr(0.0)));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = diag;
  return a;
}

inline CartanStructure riemannian_conformal(int n, double c, std::string label = "conformal") {
  CartanStructure s = riemannian_dual(conformal_metric(n, c), std::move(label));
  s.family = "riemannian_conformal";
  s.curvature = c;
  auto base = s.domain;
  s.domain = [base, c](const ChartPoint& at) -> std::optional<std::string> {
    double r2 = 0.0;
    for (double xi : at.x()) r2 += xi * xi;
    if (!(1.0 + c * r2 / 4.0 > 0.0)) return "outside the conformal chart (1 + c|x|^2/4 <= 0)";
    return base(at);
  };
  return s;
}

/// Randers-type structure K = sqrt(a^{ij} p_i p_j) + b^i p_i.
inline CartanStructure randers_dual(const ExprMatrix& a_down, const std::vector<Expr>& b_up,
                                    std::string label = "randers") {
  const int n = static_cast<int>(a_down.size());
  if (static_cast<int>(b_up.size()) != n) throw DomainError("randers: b has the wrong length");
  const CartanStructure riem = riemannian_dual(a_down, label);
  Expr beta = 0.0;
  for (int i = 0; i < n; ++i) beta = beta + b_up[static_cast<std::size_t>(i)] * detail::p_var(n, i);
  const Expr k = sqrt(riem.k2) + beta;
  Expr b_norm2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      b_norm2 = b_norm2 + a_down[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                              b_up[static_cast<std::size_t>(i)] * b_up[static_cast<std::size_t>(j)];
  bool constant = !detail::depends_on_chart(b_norm2);
  if (constant && !(b_norm2.eval<double>(std::vector<double>{}) < 1.0)) {
    std::ostringstream os;
    os << "randers: |b|_a = " << std::sqrt(b_norm2.eval<double>(std::vector<double>{}))
       << " must be below 1";
    throw RegularityError(os.str());
  }
  auto base = riem.domain;
  DomainCheck domain = [base, b_norm2](const ChartPoint& at) -> std::optional<std::string> {
    if (auto v = base(at)) return v;
    const auto z = at.coords();
    if (!(b_norm2.eval<double>(z) < 1.0)) return "randers: |b|_a >= 1 at this base point";
    return std::nullopt;
  };
  bool locally_minkowski = constant;
  for (const auto& row : a_down)
    for (const auto& e : row) locally_minkowski = locally_minkowski && !detail::depends_on_chart(e);
  for (const auto& e : b_up) locally_minkowski = locally_minkowski && !detail::depends_on_chart(e);
  std::optional<double> curvature;
  if (locally_minkowski) curvature = 0.0;
  return {std::move(label), "randers", n, k * k, std::move(domain), curvature, false};
}

/// User-supplied K^2 as expression text in x1..xn, p1..pn.
inline CartanStructure expression_structure(int n, const std::string& k2_text,
                                            std::string label = "expression",
                                            std::optional<double> curvature = std::nullopt) {
  if (n < 2) throw DomainError("dimension must be at least 2");
  Expr k2 = parse_chart_expression(k2_text, n);
  return {std::move(label), "expression", n, k2, [](const ChartPoint&) { return std::nullopt; },
          curvature, false};
}

inline ExprMatrix identity_metric(int n) {
  ExprMatrix a(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n), Expr(0.0)));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
  return a;
}

inline void require_admissible(const CartanStructure& s, const ChartPoint& at) {
  if (at.dim() != s.dim) throw DomainError("point dimension does not match the structure");
  if (s.domain) {
    if (auto why = s.domain(at)) throw DomainError(s.label + ": " + *why);
  }
}

/// Jets of the zero-order objects. Orders: K^2 at `order`, p^i one less,
/// g at order - 2, C at order - 3.
struct CartanJets {
  int n = 0;
  int order = 0;
  ChartPoint at{{0.0, 0.0}, {1.0, 0.0}};
  Jet k2;
  Jet tau;
  std::vector<Jet> p_down;
  std::vector<Jet> p_up;
  JetTensor g_up;
  JetTensor g_down;
  JetTensor c_up;  ///< C^{ijk}; empty when order < 3

  int x(int i) const { return i; }
  int p(int i) const { return n + i; }
};

/// d/dp_i of a jet at chart dimension n.
inline Jet dp(const Jet& f, int n, int i) { return derivative(f, n + i); }
/// d/dx^i of a jet.
inline Jet dx(const Jet& f, int i) { return derivative(f, i); }

inline CartanJets cartan_jets(const CartanStructure& s, const ChartPoint& at, int order) {
  require_admissible(s, at);
  if (order < 2) throw DomainError("cartan jets need order >= 2");
  const int n = s.dim;
  CartanJets cj;
  cj.n = n;
  cj.order = order;
  cj.at = at;
  const auto z = coordinate_jets(at, order);
  cj.k2 = jet_eval(s.k2, at, order);
  cj.tau = 0.5 * cj.k2;
  for (int i = 0; i < n; ++i) {
    cj.p_down.push_back(z[static_cast<std::size_t>(n + i)]);
    cj.p_up.push_back(0.5 * dp(cj.k2, n, i));
  }
  cj.g_up = JetTensor(n, {Valence::Up, Valence::Up}, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cj.g_up(i, j) = dp(cj.p_up[static_cast<std::size_t>(i)], n, j);
  // The two derivative orders differ only by roundoff.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Jet avg = 0.5 * (cj.g_up(i, j) + cj.g_up(j, i));
      cj.g_up(i, j) = avg;
      cj.g_up(j, i) = avg;
    }
  JetMatrix gu(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gu(i, j) = cj.g_up(i, j);
  {
    Eigen::SelfAdjointEigenSolver<SquareMatrix> es(gu.values());
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmin > 0.0)) {
      std::ostringstream os;
      os << s.label << ": fundamental tensor not positive definite (eigenvalue " << lmin << ")";
      throw RegularityError(os.str());
    }
  }
  const JetMatrix gd = invert(gu);
  cj.g_down = JetTensor(n, {Valence::Down, Valence::Down}, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cj.g_down(i, j) = gd(i, j);
  if (order >= 3) {
    cj.c_up = JetTensor(n, {Valence::Up, Valence::Up, Valence::Up}, -1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) cj.c_up(i, j, k) = -0.5 * dp(cj.g_up(i, j), n, k);
  }
  return cj;
}

struct FundamentalTensors {
  SquareMatrix g_up;
  SquareMatrix g_down;
  std::vector<double> p_up;
  double tau = 0.0;
  ChartPoint at{{0.0, 0.0}, {1.0, 0.0}};
};

inline SquareMatrix to_matrix(const JetTensor& t) {
  SquareMatrix m(t.dim(), t.dim());
  for (int i = 0; i < t.dim(); ++i)
    for (int j = 0; j < t.dim(); ++j) m(i, j) = t(i, j).value();
  return m;
}

inline FundamentalTensors fundamental(const CartanStructure& s, const ChartPoint& at) {
  const CartanJets cj = cartan_jets(s, at, 2);
  FundamentalTensors f;
  f.g_up = to_matrix(cj.g_up);
  f.g_down = invert(f.g_up);
  for (const Jet& pu : cj.p_up) f.p_up.push_back(pu.value());
  f.tau = cj.tau.value();
  f.at = at;
  return f;
}

struct CartanTensor {
  NumTensor c_upupup;  ///< C^{ijk}
  NumTensor c_mixed;   ///< C^r_{jk} = g_jl g_sk C^{rls}
  NumTensor c_down;    ///< C_{ijk}
  std::vector<double> i_up;  ///< mean Cartan I^j = C^{jh}_h
};

/// Mixed Cartan forms from jets: C^{ij}_k (index 2 lowered).
inline JetTensor cartan_uud(const CartanJets& cj) {
  auto gd = [&](int a, int b) { return cj.g_down(a, b); };
  return transform_slot(cj.c_up, 2, gd, Valence::Down);
}

inline CartanTensor cartan_tensor(const CartanStructure& s, const ChartPoint& at) {
  const CartanJets cj = cartan_jets(s, at, 3);
  const int n = s.dim;
  auto gd = [&](int a, int b) { return cj.g_down(a, b).value(); };
  CartanTensor ct;
  ct.c_upupup = values(cj.c_up);
  NumTensor uud = transform_slot(ct.c_upupup, 2, gd, Valence::Down);
  ct.c_mixed = transform_slot(uud, 1, gd, Valence::Down);
  ct.c_down = transform_slot(ct.c_mixed, 0, gd, Valence::Down);
  ct.i_up.assign(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j)
    for (int h = 0; h < n; ++h) ct.i_up[static_cast<std::size_t>(j)] += uud(j, h, h);
  return ct;
}

}  // namespace cartanlab
