#pragma once

/// \file
/// Levi-Civita connection of G on the adapted frame E = (delta_1..delta_n,
/// d^1..d^n): closed-form coefficients, a Koszul-formula oracle, curvature by
/// definition and by closed-form blocks, and Ricci traces.
///
/// Frame index a < n is delta_a, a >= n is d^{a-n}. Coefficients are stored
/// as nabla_{E_a} E_b = Gamma(c, a, b) E_c, and curvature as
/// K(E_a, E_b) E_c = K(e, a, b, c) E_e.

#include <array>
#include <string>
#include <vector>

#include "cartanlab/kahler.hpp"

namespace cartanlab {

struct FrameConnection {
  int n = 0;
  std::vector<double> coef;

  explicit FrameConnection(int dim = 0) : n(dim), coef(static_cast<std::size_t>(8 * dim * dim * dim), 0.0) {}
  int frame_dim() const { return 2 * n; }
  double& operator()(int c, int a, int b) { return coef[index(c, a, b)]; }
  double operator()(int c, int a, int b) const { return coef[index(c, a, b)]; }

  /// nabla_{E_a} E_b
  FrameVector apply(int a, int b) const {
    FrameVector r = FrameVector::zero(n);
    for (int c = 0; c < n; ++c) {
      r.h[static_cast<std::size_t>(c)] = (*this)(c, a, b);
      r.v[static_cast<std::size_t>(c)] = (*this)(n + c, a, b);
    }
    return r;
  }

 private:
  std::size_t index(int c, int a, int b) const {
    const auto d = static_cast<std::size_t>(2 * n);
    return (static_cast<std::size_t>(c) * d + static_cast<std::size_t>(a)) * d + static_cast<std::size_t>(b);
  }
};

using LCConnection = FrameConnection;

inline double max_abs_diff(const FrameConnection& a, const FrameConnection& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.coef.size(); ++k) m = std::max(m, std::abs(a.coef[k] - b.coef[k]));
  return m;
}

struct CurvatureTensor {
  int n = 0;
  std::vector<double> k;

  explicit CurvatureTensor(int dim = 0) : n(dim), k(static_cast<std::size_t>(16 * dim * dim * dim * dim), 0.0) {}
  double& operator()(int e, int a, int b, int c) { return k[index(e, a, b, c)]; }
  double operator()(int e, int a, int b, int c) const { return k[index(e, a, b, c)]; }

 private:
  std::size_t index(int e, int a, int b, int c) const {
    const auto d = static_cast<std::size_t>(2 * n);
    return ((static_cast<std::size_t>(e) * d + static_cast<std::size_t>(a)) * d + static_cast<std::size_t>(b)) * d +
           static_cast<std::size_t>(c);
  }
};

/// c in the closed forms: the integrable constant when given, otherwise
/// -v/(alpha beta^2) at the point.
inline double closed_form_c(const BundleJets& bu) {
  return bu.params.c ? *bu.params.c : bu.params.c_effective(bu.cj().tau.value());
}

/// Frame components of [E_a, E_b] at the point: f(c, a, b).
inline FrameConnection frame_structure(const BundleJets& bu) {
  const int n = bu.dim();
  FrameConnection f(n);
  for (int a = 0; a < 2 * n; ++a)
    for (int b = 0; b < 2 * n; ++b) {
      const JetFrameField br = frame_bracket(bu, a, b);
      for (int c = 0; c < 2 * n; ++c) f(c, a, b) = br.component(c).value();
    }
  return f;
}

/// The frame Gram matrix diag(G_ij, G^ij) as jets.
inline Jet frame_gram(const BundleJets& bu, int a, int b) {
  const int n = bu.dim();
  if (a < n && b < n) return bu.g_dd(a, b);
  if (a >= n && b >= n) return bu.g_uu(a - n, b - n);
  return Jet(0.0);
}

inline SquareMatrix frame_gram_values(const BundleJets& bu) {
  const int d = 2 * bu.dim();
  SquareMatrix g(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) g(a, b) = frame_gram(bu, a, b).value();
  return g;
}

/// Closed-form coefficients:
///   nabla_{d^i} d^j       = beta^2 L^{ijs} delta_s + (-C^{ij}_s + c beta G^{ij} p_s) d^s
///   nabla_{delta_i} d^j   = (C^{js}_i - c beta G^{js} p_i) delta_s - (L^j_is + B^j_is) d^s
///   nabla_{d^i} delta_j   = (C^{is}_j - c beta G^{is} p_j) delta_s - L^i_js d^s
///   nabla_{delta_i} delta_j = (L^s_ij + B^s_ij) delta_s + (-C_ijs / beta^2 + c beta G_js p_i) d^s
/// Needs jets of order >= 4 in `bu`.
inline FrameConnection lc_closed_form(const BundleJets& bu) {
  const int n = bu.dim();
  const BerwaldJets& bj = bu.bj;
  if (bj.l_uud.size() == 0) throw DomainError("closed-form connection needs jets of order >= 4");
  const double beta = bu.params.beta;
  const double c = closed_form_c(bu);
  const NumTensor cuud = values(bj.c_uud);
  const NumTensor cddd = values(bj.lower(bj.lower(bj.c_uud, 0), 1));
  const NumTensor luuu = values(bj.raise(bj.l_uud, 2));
  const NumTensor ludd = values(bj.lower(bj.l_uud, 1));
  const NumTensor b = values(bj.b);
  auto gu = [&](int i, int j) { return bu.g_uu(i, j).value(); };
  auto gd = [&](int i, int j) { return bu.g_dd(i, j).value(); };
  auto p = [&](int i) { return bu.cj().p_down[static_cast<std::size_t>(i)].value(); };
  FrameConnection g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int s = 0; s < n; ++s) {
        g(s, n + i, n + j) = beta * beta * luuu(i, j, s);
        g(n + s, n + i, n + j) = -cuud(i, j, s) + c * beta * gu(i, j) * p(s);
        g(s, i, n + j) = cuud(j, s, i) - c * beta * gu(j, s) * p(i);
        g(n + s, i, n + j) = -(ludd(j, i, s) + b(j, i, s));
        g(s, n + i, j) = cuud(i, s, j) - c * beta * gu(i, s) * p(j);
        g(n + s, n + i, j) = -ludd(i, j, s);
        g(s, i, j) = ludd(s, i, j) + b(s, i, j);
        g(n + s, i, j) = -cddd(i, j, s) / (beta * beta) + c * beta * gd(j, s) * p(i);
      }
  return g;
}

inline FrameConnection lc_closed_form(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm) {
  return lc_closed_form(bundle_jets(s, at, prm, 4));
}

/// nabla from the Koszul formula
///   2 G(nabla_X Y, Z) = X G(Y,Z) + Y G(X,Z) - Z G(X,Y)
///                       + G([X,Y],Z) - G([X,Z],Y) - G([Y,Z],X)
/// on frame fields, with exact frame derivatives of G and the frame brackets.
inline FrameConnection koszul_oracle(const BundleJets& bu) {
  const int n = bu.dim();
  const int d = 2 * n;
  if (bu.r.size() == 0) throw DomainError("Koszul oracle needs jets of order >= 4");
  const FrameConnection f = frame_structure(bu);
  const SquareMatrix gram = frame_gram_values(bu);
  const SquareMatrix gram_inv = invert(gram);
  // dg[(a * d + b) * d + c] = E_a G(E_b, E_c)
  std::vector<double> dg(static_cast<std::size_t>(d * d * d), 0.0);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        const Jet g = frame_gram(bu, b, c);
        if (g.is_constant()) continue;
        dg[static_cast<std::size_t>((a * d + b) * d + c)] = frame_derivative(bu.bj, a, g).value();
      }
  auto DG = [&](int a, int b, int c) { return dg[static_cast<std::size_t>((a * d + b) * d + c)]; };
  auto gf = [&](int a, int b, int c) {  // G([E_a, E_b], E_c)
    double r = 0.0;
    for (int e = 0; e < d; ++e) r += f(e, a, b) * gram(e, c);
    return r;
  };
  FrameConnection out(n);
  Eigen::VectorXd rhs(d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      for (int c = 0; c < d; ++c)
        rhs(c) = 0.5 * (DG(a, b, c) + DG(b, a, c) - DG(c, a, b) + gf(a, b, c) - gf(a, c, b) - gf(b, c, a));
      const Eigen::VectorXd sol = gram_inv * rhs;
      for (int c = 0; c < d; ++c) out(c, a, b) = sol(c);
    }
  return out;
}

inline FrameConnection koszul_oracle(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm) {
  return koszul_oracle(bundle_jets(s, at, prm, 4));
}

/// nabla_X Y for constant-coefficient frame vectors X, Y (oracle route).
inline FrameVector koszul_oracle(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm,
                                 const FrameVector& x, const FrameVector& y) {
  const FrameConnection g = koszul_oracle(s, at, prm);
  const int n = s.dim;
  FrameVector r = FrameVector::zero(n);
  for (int a = 0; a < 2 * n; ++a)
    for (int b = 0; b < 2 * n; ++b) {
      const double w = x.component(a) * y.component(b);
      if (w == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        r.h[static_cast<std::size_t>(c)] += w * g(c, a, b);
        r.v[static_cast<std::size_t>(c)] += w * g(n + c, a, b);
      }
    }
  return r;
}

struct ConnectionResiduals {
  double torsion = 0.0;  ///< max |nabla_a E_b - nabla_b E_a - [E_a, E_b]|
  double metric = 0.0;   ///< max |E_a G_bc - G(nabla_a E_b, E_c) - G(E_b, nabla_a E_c)|
};

inline ConnectionResiduals connection_residuals(const BundleJets& bu, const FrameConnection& g) {
  const int d = 2 * bu.dim();
  const FrameConnection f = frame_structure(bu);
  const SquareMatrix gram = frame_gram_values(bu);
  ConnectionResiduals r;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        r.torsion = std::max(r.torsion, std::abs(g(c, a, b) - g(c, b, a) - f(c, a, b)));
        const Jet gbc = frame_gram(bu, b, c);
        double v = gbc.is_constant() ? 0.0 : frame_derivative(bu.bj, a, gbc).value();
        for (int e = 0; e < d; ++e) v -= g(e, a, b) * gram(e, c) + g(e, a, c) * gram(b, e);
        r.metric = std::max(r.metric, std::abs(v));
      }
  return r;
}

enum class ConnectionSource { ClosedForm, Koszul };

/// Curvature from its definition
///   K(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
/// on the frame. Frame derivatives of the coefficient fields are central
/// differences (Richardson) along E_a at the point; the coefficient fields
/// themselves are exact in p and x at every stencil point.
inline CurvatureTensor curvature_defn(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm,
                                      ConnectionSource source = ConnectionSource::ClosedForm) {
  const int n = s.dim;
  const int d = 2 * n;
  auto connection_at = [&](const ChartPoint& q) {
    const BundleJets bq = bundle_jets(s, q, prm, 4);
    return source == ConnectionSource::ClosedForm ? lc_closed_form(bq) : koszul_oracle(bq);
  };
  const BundleJets bu = bundle_jets(s, at, prm, 4);
  const FrameConnection g0 = source == ConnectionSource::ClosedForm ? lc_closed_form(bu) : koszul_oracle(bu);
  const FrameConnection f = frame_structure(bu);
  // dgam[a] = E_a Gamma, flattened like FrameConnection::coef
  std::vector<std::vector<double>> dgam(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    std::vector<double> dir(static_cast<std::size_t>(d), 0.0);
    if (a < n) {
      dir[static_cast<std::size_t>(a)] = 1.0;
      for (int j = 0; j < n; ++j) dir[static_cast<std::size_t>(n + j)] = bu.bj.n(a, j).value();
    } else {
      dir[static_cast<std::size_t>(a)] = 1.0;
    }
    const auto est = fd_directional([&](const ChartPoint& q) { return connection_at(q).coef; }, at, dir);
    auto& out = dgam[static_cast<std::size_t>(a)];
    out.reserve(est.size());
    for (const auto& e : est) out.push_back(e.value);
  }
  auto DG = [&](int a, int e, int b, int c) {
    const auto dd = static_cast<std::size_t>(d);
    return dgam[static_cast<std::size_t>(a)][(static_cast<std::size_t>(e) * dd + static_cast<std::size_t>(b)) * dd +
                                             static_cast<std::size_t>(c)];
  };
  CurvatureTensor k(n);
  for (int e = 0; e < d; ++e)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) {
          double v = DG(a, e, b, c) - DG(b, e, a, c);
          for (int m = 0; m < d; ++m) v += g0(m, b, c) * g0(e, a, m) - g0(m, a, c) * g0(e, b, m) - f(m, a, b) * g0(e, m, c);
          k(e, a, b, c) = v;
        }
  return k;
}

/// K(X,Y)Z for constant-coefficient frame vectors.
inline FrameVector curvature_defn(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm,
                                  const FrameVector& x, const FrameVector& y, const FrameVector& z,
                                  ConnectionSource source = ConnectionSource::ClosedForm) {
  const CurvatureTensor k = curvature_defn(s, at, prm, source);
  const int n = s.dim;
  FrameVector r = FrameVector::zero(n);
  for (int a = 0; a < 2 * n; ++a)
    for (int b = 0; b < 2 * n; ++b)
      for (int c = 0; c < 2 * n; ++c) {
        const double w = x.component(a) * y.component(b) * z.component(c);
        if (w == 0.0) continue;
        for (int e = 0; e < n; ++e) {
          r.h[static_cast<std::size_t>(e)] += w * k(e, a, b, c);
          r.v[static_cast<std::size_t>(e)] += w * k(n + e, a, b, c);
        }
      }
  return r;
}

/// The six closed-form curvature patterns; V stands for d^, H for delta.
enum class BlockKind { VVV, HVV, HHH, HHV, VVH, HVH };

inline constexpr std::array<BlockKind, 6> kAllBlocks = {BlockKind::VVV, BlockKind::HVV, BlockKind::HHH,
                                                        BlockKind::HHV, BlockKind::VVH, BlockKind::HVH};

inline const char* block_name(BlockKind k) {
  switch (k) {
    case BlockKind::VVV: return "K(d^i,d^j)d^k";
    case BlockKind::HVV: return "K(delta_i,d^j)d^k";
    case BlockKind::HHH: return "K(delta_i,delta_j)delta_k";
    case BlockKind::HHV: return "K(delta_i,delta_j)d^k";
    case BlockKind::VVH: return "K(d^i,d^j)delta_k";
    case BlockKind::HVH: return "K(delta_i,d^j)delta_k";
  }
  return "";
}

inline const char* block_id(BlockKind k) {
  switch (k) {
    case BlockKind::VVV: return "vvv";
    case BlockKind::HVV: return "hvv";
    case BlockKind::HHH: return "hhh";
    case BlockKind::HHV: return "hhv";
    case BlockKind::VVH: return "vvh";
    case BlockKind::HVH: return "hvh";
  }
  return "";
}

/// One pattern K(X_i, Y_j) Z_k = h(i,j,k,m) delta_m + v(i,j,k,m) d^m.
struct CurvatureBlock {
  BlockKind which = BlockKind::VVV;
  NumTensor h;
  NumTensor v;
};

/// Frame offsets of the three arguments of a block.
inline std::array<int, 3> block_offsets(BlockKind k, int n) {
  switch (k) {
    case BlockKind::VVV: return {n, n, n};
    case BlockKind::HVV: return {0, n, n};
    case BlockKind::HHH: return {0, 0, 0};
    case BlockKind::HHV: return {0, 0, n};
    case BlockKind::VVH: return {n, n, 0};
    case BlockKind::HVH: return {0, n, 0};
  }
  return {0, 0, 0};
}

inline CurvatureBlock block_of(const CurvatureTensor& k, BlockKind which) {
  const int n = k.n;
  const auto off = block_offsets(which, n);
  CurvatureBlock b{which, NumTensor(n, {Valence::Down, Valence::Down, Valence::Down, Valence::Up}),
                   NumTensor(n, {Valence::Down, Valence::Down, Valence::Down, Valence::Down})};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
          b.h(i, j, l, m) = k(m, off[0] + i, off[1] + j, off[2] + l);
          b.v(i, j, l, m) = k(n + m, off[0] + i, off[1] + j, off[2] + l);
        }
  return b;
}

/// Everything the closed-form blocks are assembled from, at one point.
struct CurvatureIngredients {
  int n = 0;
  double beta = 1.0;
  double c = 0.0;
  std::vector<double> p;
  SquareMatrix gd, gu;  ///< G_ij, G^ij
  NumTensor cuud, cuuu, cudd, cddd;
  NumTensor luud, luuu, ludd;
  NumTensor b;
  NumTensor dcuud, dcddd;   ///< d^m of C^{ij}_k, C_ijk (m last)
  NumTensor hcuud, hcddd;   ///< C^{ij}_{k|m}, C_{ijk|m}
  NumTensor dluuu, dludd;   ///< d^m of L^{ijk}, L^i_jk
  NumTensor hluuu, hludd;   ///< L^{ijk}_{|m}, L^i_{jk|m}
  NumTensor db;             ///< d^m B^i_jk
  NumTensor rh;             ///< R^i_jkh
  NumTensor rv;             ///< R_kij
};

inline CurvatureIngredients curvature_ingredients(const BundleJets& bu) {
  const BerwaldJets& bj = bu.bj;
  if (bj.cj.order < 5) throw DomainError("closed-form curvature needs jets of order >= 5");
  CurvatureIngredients in;
  in.n = bu.dim();
  in.beta = bu.params.beta;
  in.c = closed_form_c(bu);
  for (const Jet& pj : bj.cj.p_down) in.p.push_back(pj.value());
  in.gd = to_matrix(bu.g_dd);
  in.gu = to_matrix(bu.g_uu);
  const JetTensor cuud = bj.c_uud;
  const JetTensor cddd = bj.lower(bj.lower(cuud, 0), 1);
  const JetTensor luuu = bj.raise(bj.l_uud, 2);
  const JetTensor ludd = bj.lower(bj.l_uud, 1);
  in.cuud = values(cuud);
  in.cuuu = values(bj.cj.c_up);
  in.cudd = values(bj.lower(cuud, 1));
  in.cddd = values(cddd);
  in.luud = values(bj.l_uud);
  in.luuu = values(luuu);
  in.ludd = values(ludd);
  in.b = values(bj.b);
  in.dcuud = values(v_cov(bj, cuud));
  in.dcddd = values(v_cov(bj, cddd));
  in.hcuud = values(h_cov(bj, cuud));
  in.hcddd = values(h_cov(bj, cddd));
  in.dluuu = values(v_cov(bj, luuu));
  in.dludd = values(v_cov(bj, ludd));
  in.hluuu = values(h_cov(bj, luuu));
  in.hludd = values(h_cov(bj, ludd));
  in.db = values(v_cov(bj, bj.b));
  in.rh = values(r_hcurv(bj));
  in.rv = values(bu.r);
  return in;
}

/// How the bracket term -nabla_{[delta_i, delta_j]} in the two horizontal-pair
/// blocks is written. Substituted uses R_kij = c (g_jk p_i - g_ik p_j), the
/// form valid on integrable data. General keeps R_kij and agrees with the
/// definition computed from the closed-form coefficients on any structure.
enum class BlockForm { Substituted, General };

/// Closed-form block assembled from C, L, B, R and G.
inline CurvatureBlock curvature_closed(const CurvatureIngredients& in, BlockKind which,
                                       BlockForm form = BlockForm::Substituted) {
  const bool general = form == BlockForm::General;
  const int n = in.n;
  const double beta = in.beta;
  const double b2 = beta * beta;
  const double c = in.c;
  CurvatureBlock out{which, NumTensor(n, {Valence::Down, Valence::Down, Valence::Down, Valence::Up}),
                     NumTensor(n, {Valence::Down, Valence::Down, Valence::Down, Valence::Down})};
  auto kd = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  auto p = [&](int a) { return in.p[static_cast<std::size_t>(a)]; };
  auto Gd = [&](int a, int b) { return in.gd(a, b); };
  auto Gu = [&](int a, int b) { return in.gu(a, b); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int h = 0; h < n; ++h) {
          double hh = 0.0;
          double vv = 0.0;
          switch (which) {
            case BlockKind::VVV: {
              hh = b2 * (in.dluuu(j, k, h, i) - in.dluuu(i, k, h, j));
              vv = in.dcuud(i, k, h, j) - in.dcuud(j, k, h, i) + c * beta * Gu(j, k) * kd(i, h) -
                   c * beta * Gu(i, k) * kd(j, h);
              for (int s = 0; s < n; ++s) {
                // C-L cross terms; they cancel identically when n = 2
                hh += b2 * (in.luuu(j, k, s) * in.cuud(i, h, s) - in.luuu(i, k, s) * in.cuud(j, h, s) -
                            in.cuud(j, k, s) * in.luuu(i, s, h) + in.cuud(i, k, s) * in.luuu(j, s, h));
                vv += in.cuud(j, k, s) * in.cuud(i, s, h) - in.cuud(i, k, s) * in.cuud(j, s, h) +
                      b2 * (in.ludd(j, s, h) * in.luuu(s, i, k) - in.ludd(i, s, h) * in.luuu(s, j, k));
              }
              break;
            }
            case BlockKind::HVV: {
              hh = c * beta * Gu(k, h) * kd(j, i) - in.dcuud(k, h, i, j) + b2 * in.hluuu(h, j, k, i);
              vv = in.db(k, i, h, j) - in.hcuud(j, k, h, i) - c * b2 * in.luud(j, k, i) * p(h) + in.dludd(k, h, i, j);
              for (int s = 0; s < n; ++s) {
                hh += -in.cuud(j, h, s) * in.cuud(k, s, i) - in.cuud(j, k, s) * in.cuud(h, s, i) +
                      b2 * (in.luuu(s, j, k) * in.ludd(h, i, s) + in.ludd(k, s, i) * in.luuu(h, j, s));
                vv += -in.cddd(i, s, h) * in.luuu(j, s, k) + in.cuud(j, k, s) * in.ludd(s, i, h) +
                      in.cuud(s, k, i) * in.ludd(j, s, h) - in.cuud(j, s, h) * in.ludd(k, i, s);
              }
              break;
            }
            case BlockKind::HHH: {
              hh = in.rh(h, k, j, i) + in.hludd(h, k, j, i) - in.hludd(h, k, i, j);
              if (!general)
                hh += c * c * b2 * (p(i) * kd(h, j) - p(j) * kd(h, i)) * p(k) -
                      c * (p(i) * in.cudd(h, j, k) - p(j) * in.cudd(h, i, k));
              vv = (in.hcddd(i, k, h, j) - in.hcddd(j, k, h, i)) / b2;
              for (int s = 0; s < n; ++s) {
                hh += (in.cddd(i, k, s) * in.cuud(h, s, j) - in.cddd(j, k, s) * in.cuud(h, s, i)) / b2 +
                      in.ludd(s, k, j) * in.ludd(h, i, s) - in.ludd(s, k, i) * in.ludd(h, j, s);
                if (general) hh -= in.rv(s, i, j) * (in.cuud(s, h, k) - c * beta * Gu(s, h) * p(k));
                vv += in.rv(s, i, j) * in.ludd(s, h, k) +
                      (in.cddd(j, k, s) * in.ludd(s, i, h) - in.cddd(i, k, s) * in.ludd(s, j, h) +
                       in.cddd(j, h, s) * in.ludd(s, k, i) - in.cddd(i, h, s) * in.ludd(s, j, k)) /
                          b2;
              }
              break;
            }
            case BlockKind::HHV: {
              hh = in.hcuud(k, h, j, i) - in.hcuud(k, h, i, j);
              vv = -in.rh(k, h, j, i) + in.hludd(k, h, i, j) - in.hludd(k, h, j, i);
              if (!general) {
                hh += c * b2 * (p(j) * in.luud(k, h, i) - p(i) * in.luud(k, h, j));
                vv += c * c * b2 * p(h) * (p(j) * kd(k, i) - p(i) * kd(k, j)) +
                      c * (p(i) * in.cudd(k, j, h) - p(j) * in.cudd(k, i, h));
              }
              for (int s = 0; s < n; ++s) {
                if (general) {
                  hh -= in.rv(s, i, j) * b2 * in.luuu(s, k, h);
                  vv -= in.rv(s, i, j) * (-in.cuud(s, k, h) + c * beta * Gu(s, k) * p(h));
                }
                hh += in.cuud(k, s, j) * in.ludd(h, s, i) - in.cuud(k, s, i) * in.ludd(h, s, j) +
                      in.cuud(s, h, j) * in.ludd(k, s, i) - in.cuud(s, h, i) * in.ludd(k, s, j);
                vv += (in.cuud(k, s, i) * in.cddd(j, h, s) - in.cuud(k, s, j) * in.cddd(i, h, s)) / b2 +
                      in.ludd(k, s, j) * in.ludd(s, h, i) - in.ludd(k, s, i) * in.ludd(s, h, j);
              }
              break;
            }
            case BlockKind::VVH: {
              hh = in.dcuud(j, h, k, i) - in.dcuud(i, h, k, j) + c * beta * (Gu(i, h) * kd(j, k) - Gu(j, h) * kd(i, k));
              vv = in.dludd(i, k, h, j) - in.dludd(j, k, h, i);
              for (int s = 0; s < n; ++s) {
                vv += in.cuud(i, s, k) * in.ludd(j, s, h) - in.cuud(j, s, k) * in.ludd(i, s, h) +
                      in.ludd(j, k, s) * in.cuud(i, s, h) - in.ludd(i, k, s) * in.cuud(j, s, h);
                hh += in.cuud(j, s, k) * in.cuud(i, h, s) - in.cuud(i, s, k) * in.cuud(j, h, s) +
                      b2 * (in.luuu(j, s, h) * in.ludd(i, s, k) - in.luuu(i, s, h) * in.ludd(j, s, k));
              }
              break;
            }
            case BlockKind::HVH: {
              hh = in.hcuud(j, h, k, i) + c * b2 * in.luud(j, h, i) * p(k) - in.dludd(h, k, i, j) - in.db(h, i, k, j);
              vv = in.dcddd(i, k, h, j) / b2 + c * p(h) * in.cudd(j, i, k) + c * p(k) * in.cudd(j, i, h) -
                   c * beta * Gd(k, h) * kd(j, i) - in.hludd(j, h, k, i);
              for (int s = 0; s < n; ++s) {
                hh += in.cuud(j, s, k) * in.ludd(h, s, i) - in.cuud(j, h, s) * in.ludd(s, k, i) -
                      in.cuud(s, h, i) * in.ludd(j, s, k) + in.cddd(i, k, s) * in.luuu(h, j, s);
                vv += (-in.cddd(i, s, h) * in.cuud(j, s, k) - in.cddd(i, k, s) * in.cuud(j, s, h)) / b2 +
                      in.ludd(j, s, k) * in.ludd(s, h, i) + in.ludd(j, s, h) * in.ludd(s, k, i);
              }
              break;
            }
          }
          out.h(i, j, k, h) = hh;
          out.v(i, j, k, h) = vv;
        }
  return out;
}

inline CurvatureBlock curvature_closed(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm,
                                       BlockKind which, BlockForm form = BlockForm::Substituted) {
  return curvature_closed(curvature_ingredients(bundle_jets(s, at, prm, 5)), which, form);
}

/// Full tensor from the six blocks and antisymmetry in the first pair.
inline CurvatureTensor assemble_curvature(const std::array<CurvatureBlock, 6>& blocks, int n) {
  CurvatureTensor k(n);
  for (const CurvatureBlock& b : blocks) {
    const auto off = block_offsets(b.which, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
          for (int m = 0; m < n; ++m) {
            const int a = off[0] + i;
            const int bb = off[1] + j;
            const int c = off[2] + l;
            k(m, a, bb, c) = b.h(i, j, l, m);
            k(n + m, a, bb, c) = b.v(i, j, l, m);
            k(m, bb, a, c) = -b.h(i, j, l, m);
            k(n + m, bb, a, c) = -b.v(i, j, l, m);
          }
  }
  return k;
}

inline CurvatureTensor curvature_closed_full(const CurvatureIngredients& in, BlockForm form = BlockForm::Substituted) {
  std::array<CurvatureBlock, 6> blocks;
  for (std::size_t b = 0; b < kAllBlocks.size(); ++b) blocks[b] = curvature_closed(in, kAllBlocks[b], form);
  return assemble_curvature(blocks, in.n);
}

struct RicciData {
  SquareMatrix ric;   ///< Ric(E_a, E_b) on the frame, 2n x 2n
  SquareMatrix gram;  ///< G(E_a, E_b)
  double lambda_hat = 0.0;
  double defect = 0.0;

  int n() const { return static_cast<int>(ric.rows() / 2); }
  SquareMatrix hh() const { return ric.topLeftCorner(n(), n()); }
  SquareMatrix hv() const { return ric.topRightCorner(n(), n()); }
  SquareMatrix vh() const { return ric.bottomLeftCorner(n(), n()); }
  SquareMatrix vv() const { return ric.bottomRightCorner(n(), n()); }
};

/// Ric(E_b, E_c) = sum_a K(a, a, b, c); lambda_hat minimises |Ric - lambda G|_F.
inline RicciData ricci(const CurvatureTensor& k, const SquareMatrix& gram) {
  const int d = 2 * k.n;
  RicciData r;
  r.gram = gram;
  r.ric = SquareMatrix::Zero(d, d);
  for (int b = 0; b < d; ++b)
    for (int c = 0; c < d; ++c)
      for (int a = 0; a < d; ++a) r.ric(b, c) += k(a, a, b, c);
  r.lambda_hat = (r.ric.cwiseProduct(gram)).sum() / gram.squaredNorm();
  r.defect = (r.ric - r.lambda_hat * gram).cwiseAbs().maxCoeff();
  return r;
}

inline RicciData ricci(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm) {
  const BundleJets bu = bundle_jets(s, at, prm, 5);
  return ricci(curvature_closed_full(curvature_ingredients(bu)), frame_gram_values(bu));
}

/// p_k Ric(d^j, d^k) - c n beta p_k G^{jk}; on an Einstein metric with
/// lambda = c n beta this vanishes, otherwise it carries the mean Cartan
/// tensor I^j.
inline std::vector<double> einstein_obstruction(const RicciData& r, const BundleJets& bu) {
  const int n = bu.dim();
  const double c = closed_form_c(bu);
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double pk = bu.cj().p_down[static_cast<std::size_t>(k)].value();
      out[static_cast<std::size_t>(j)] += pk * (r.ric(n + j, n + k) - c * n * bu.params.beta * bu.g_uu(j, k).value());
    }
  return out;
}

struct GeodesyData {
  double vertical_defect = 0.0;  ///< max |H nabla_{d^i} d^j| = max |beta^2 L^{ijs}|
  NumTensor witness;             ///< p^j (vertical part of nabla_{delta_i} delta_j)_s, slots (i, s)
  NumTensor witness_expected;    ///< c p_i p_s (1 - 2 c beta^2 tau)
};

/// The vertical distribution is totally geodesic exactly when the horizontal
/// part of nabla_{d^i} d^j vanishes; the horizontal one never is for c != 0,
/// witnessed by the p-contraction of the vertical part of nabla_{delta_i} delta_j.
inline GeodesyData distribution_geodesy(const BundleJets& bu) {
  const int n = bu.dim();
  const FrameConnection g = lc_closed_form(bu);
  const double c = closed_form_c(bu);
  const double beta = bu.params.beta;
  const double tau = bu.cj().tau.value();
  GeodesyData out;
  out.witness = NumTensor(n, {Valence::Down, Valence::Down});
  out.witness_expected = NumTensor(n, {Valence::Down, Valence::Down});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int s = 0; s < n; ++s) out.vertical_defect = std::max(out.vertical_defect, std::abs(g(s, n + i, n + j)));
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < n; ++s) {
      double w = 0.0;
      for (int j = 0; j < n; ++j) w += bu.cj().p_up[static_cast<std::size_t>(j)].value() * g(n + s, i, j);
      out.witness(i, s) = w;
      out.witness_expected(i, s) = c * bu.cj().p_down[static_cast<std::size_t>(i)].value() *
                                   bu.cj().p_down[static_cast<std::size_t>(s)].value() * (1.0 - 2.0 * c * beta * beta * tau);
    }
  return out;
}

}  // namespace cartanlab
