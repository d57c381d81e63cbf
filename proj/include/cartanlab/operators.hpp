#pragma once

/// \file
/// Divergence, gradient and Laplace operators of the bundle metric G, the
/// geodesic spray S = p^i delta_i, the Liouville field C* = p_i d^i, and the
/// mean-Landsberg characterizations built on them.
///
/// Two divergences are provided. `divergence` is the frame trace used in the
/// operator formulas: X = X^b E_b maps to X^b div(E_b) with
/// div(E_b) = sum_a Gamma(a, a, b), i.e. div(delta_i) = B^s_is and
/// div(d^i) = 0, with no derivatives of the components of X. The full
/// Levi-Civita divergence sum_a E_a(X^a) + X^b div(E_b) is
/// `levi_civita_divergence`; it equals the coordinate divergence d_mu X^mu
/// because det(G_ij) det(G^ij) = 1.

#include <cmath>
#include <string>
#include <vector>

#include "cartanlab/levicivita.hpp"

namespace cartanlab {

/// Frame field with components given as chart expressions:
/// X = h[i] delta_i + v[i] d^i.
struct FrameFieldExpr {
  std::vector<Expr> h;
  std::vector<Expr> v;

  static FrameFieldExpr constant(const FrameVector& x) {
    FrameFieldExpr f;
    for (double c : x.h) f.h.emplace_back(c);
    for (double c : x.v) f.v.emplace_back(c);
    return f;
  }
  /// C* = p_i d^i
  static FrameFieldExpr liouville(int n) {
    FrameFieldExpr f;
    for (int i = 0; i < n; ++i) {
      f.h.emplace_back(0.0);
      f.v.push_back(Expr::var(n + i));
    }
    return f;
  }
};

struct OperatorContext {
  CartanStructure structure;
  DeformationParams params;
  ChartPoint at;
  BundleJets bu;                   ///< order 4
  FrameConnection gamma;           ///< Levi-Civita coefficients on the frame
  SquareMatrix gram;               ///< diag(G_ij, G^ij)
  double sqrt_g = 0.0;             ///< sqrt(det g_ij)
  std::vector<double> h_trace;     ///< delta_i ln sqrt(g)
  std::vector<double> j_down;      ///< J_i = L^s_is
  std::vector<double> frame_div;   ///< div(E_b) = sum_a Gamma(a, a, b)

  int dim() const { return structure.dim; }
};

/// det of a symmetric positive jet matrix by elimination without pivoting.
inline Jet jet_determinant(const JetTensor& m) {
  const int n = m.dim();
  std::vector<std::vector<Jet>> a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)].push_back(m(i, j));
  Jet det(1.0);
  for (int k = 0; k < n; ++k) {
    const Jet piv = a[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
    if (!(std::abs(piv.value()) > 0.0)) throw ConditioningError("zero pivot in jet determinant");
    det = det * piv;
    for (int i = k + 1; i < n; ++i) {
      const Jet f = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] / piv;
      for (int j = k; j < n; ++j)
        a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] - f * a[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    }
  }
  return det;
}

inline OperatorContext operator_context(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm,
                                        ConnectionSource source = ConnectionSource::Koszul) {
  OperatorContext ctx{s, prm, at, bundle_jets(s, at, prm, 4), FrameConnection(s.dim), SquareMatrix(), 0.0, {}, {}, {}};
  const int n = s.dim;
  const BerwaldJets& bj = ctx.bu.bj;
  ctx.gamma = source == ConnectionSource::Koszul ? koszul_oracle(ctx.bu) : lc_closed_form(ctx.bu);
  ctx.gram = frame_gram_values(ctx.bu);
  const Jet det = jet_determinant(bj.cj.g_down);
  if (!(det.value() > 0.0)) throw RegularityError("det(g_ij) is not positive");
  ctx.sqrt_g = std::sqrt(det.value());
  const Jet ln_sqrt_g = 0.5 * log(det);
  const NumTensor ludd = values(bj.lower(bj.l_uud, 1));
  for (int i = 0; i < n; ++i) {
    ctx.h_trace.push_back(bj.delta(ln_sqrt_g, i).value());
    double j = 0.0;
    for (int s2 = 0; s2 < n; ++s2) j += ludd(s2, i, s2);
    ctx.j_down.push_back(j);
  }
  for (int b = 0; b < 2 * n; ++b) {
    double d = 0.0;
    for (int a = 0; a < 2 * n; ++a) d += ctx.gamma(a, a, b);
    ctx.frame_div.push_back(d);
  }
  return ctx;
}

/// Frame divergence of the operator formulas (C-infinity linear in X).
inline double divergence(const OperatorContext& ctx, const FrameVector& x) {
  double d = 0.0;
  for (int b = 0; b < 2 * ctx.dim(); ++b) d += x.component(b) * ctx.frame_div[static_cast<std::size_t>(b)];
  return d;
}

inline FrameVector field_value(const OperatorContext& ctx, const FrameFieldExpr& x) {
  const std::vector<double> z = ctx.at.coords();
  FrameVector r = FrameVector::zero(ctx.dim());
  for (int i = 0; i < ctx.dim(); ++i) {
    r.h[static_cast<std::size_t>(i)] = x.h[static_cast<std::size_t>(i)].eval<double>(z);
    r.v[static_cast<std::size_t>(i)] = x.v[static_cast<std::size_t>(i)].eval<double>(z);
  }
  return r;
}

inline double divergence(const OperatorContext& ctx, const FrameFieldExpr& x) {
  return divergence(ctx, field_value(ctx, x));
}

/// sum_a E_a(X^a) + X^b div(E_b).
inline double levi_civita_divergence(const OperatorContext& ctx, const FrameFieldExpr& x) {
  const int n = ctx.dim();
  const BerwaldJets& bj = ctx.bu.bj;
  double d = divergence(ctx, x);
  for (int i = 0; i < n; ++i) {
    d += bj.delta(jet_eval(x.h[static_cast<std::size_t>(i)], ctx.at, 2), i).value();
    d += bj.vdot(jet_eval(x.v[static_cast<std::size_t>(i)], ctx.at, 2), i).value();
  }
  return d;
}

/// grad f = G^{ih} (delta_h f) delta_i + G_ih (d^h f) d^i
inline FrameVector gradient(const OperatorContext& ctx, const Expr& f) {
  const int n = ctx.dim();
  const BerwaldJets& bj = ctx.bu.bj;
  const Jet fj = jet_eval(f, ctx.at, 2);
  std::vector<double> df_h;
  std::vector<double> df_v;
  for (int h = 0; h < n; ++h) {
    df_h.push_back(bj.delta(fj, h).value());
    df_v.push_back(bj.vdot(fj, h).value());
  }
  FrameVector g = FrameVector::zero(n);
  for (int i = 0; i < n; ++i)
    for (int h = 0; h < n; ++h) {
      g.h[static_cast<std::size_t>(i)] += ctx.bu.g_uu(i, h).value() * df_h[static_cast<std::size_t>(h)];
      g.v[static_cast<std::size_t>(i)] += ctx.bu.g_dd(i, h).value() * df_v[static_cast<std::size_t>(h)];
    }
  return g;
}

/// X f for a frame vector X at the point.
inline double directional(const OperatorContext& ctx, const FrameVector& x, const Expr& f) {
  const BerwaldJets& bj = ctx.bu.bj;
  const Jet fj = jet_eval(f, ctx.at, 2);
  double r = 0.0;
  for (int i = 0; i < ctx.dim(); ++i)
    r += x.h[static_cast<std::size_t>(i)] * bj.delta(fj, i).value() +
         x.v[static_cast<std::size_t>(i)] * bj.vdot(fj, i).value();
  return r;
}

/// max over the sample of |G(grad f, X) - X f|.
inline double gradient_duality_residual(const OperatorContext& ctx, const Expr& f, const std::vector<FrameVector>& xs) {
  const FrameVector g = gradient(ctx, f);
  BundleMetric m{to_matrix(ctx.bu.g_dd), to_matrix(ctx.bu.g_uu), ctx.at, ctx.params, ctx.bu.cj().tau.value()};
  double worst = 0.0;
  for (const FrameVector& x : xs) worst = std::max(worst, std::abs(metric_value(m, g, x) - directional(ctx, x, f)));
  return worst;
}

struct LaplacianData {
  double direct = 0.0;        ///< divergence(grad f)
  double closed = 0.0;        ///< G^{ih} (delta_h f)(delta_i ln sqrt(g) - J_i)
  double difference = 0.0;
  double levi_civita = 0.0;   ///< Levi-Civita divergence of grad f
};

inline LaplacianData laplacian(const OperatorContext& ctx, const Expr& f) {
  const int n = ctx.dim();
  const BerwaldJets& bj = ctx.bu.bj;
  LaplacianData out;
  const FrameVector g = gradient(ctx, f);
  out.direct = divergence(ctx, g);
  for (int i = 0; i < n; ++i)
    out.closed += g.h[static_cast<std::size_t>(i)] *
                  (ctx.h_trace[static_cast<std::size_t>(i)] - ctx.j_down[static_cast<std::size_t>(i)]);
  out.difference = std::abs(out.direct - out.closed);
  // Levi-Civita: components of grad f as jets, differentiated along the frame.
  const Jet fj = jet_eval(f, ctx.at, 4);
  double lc = out.direct;
  for (int i = 0; i < n; ++i) {
    Jet gh(0.0);
    Jet gv(0.0);
    for (int h = 0; h < n; ++h) {
      gh = gh + ctx.bu.g_uu(i, h) * bj.delta(fj, h);
      gv = gv + ctx.bu.g_dd(i, h) * bj.vdot(fj, h);
    }
    if (!gh.is_constant()) lc += bj.delta(gh, i).value();
    if (!gv.is_constant()) lc += bj.vdot(gv, i).value();
  }
  out.levi_civita = lc;
  return out;
}

struct LandsbergReport {
  std::vector<double> j_down;     ///< J_i
  std::vector<double> h_trace;    ///< delta_i ln sqrt(g)
  double difference = 0.0;        ///< max |J_i - delta_i ln sqrt(g)|
  double div_s = 0.0;             ///< divergence of the spray
  double div_s_expected = 0.0;    ///< p^i delta_i ln sqrt(g)
  bool mean_landsberg = false;    ///< J = 0
  bool laplace_vanishes = false;  ///< J_i = delta_i ln sqrt(g)
  bool div_s_zero = false;
  /// Under a vanishing Laplacian, div S = 0 exactly when J = 0.
  bool consistent = false;
};

inline FrameVector spray(const OperatorContext& ctx) {
  std::vector<double> p_up;
  for (const Jet& p : ctx.bu.cj().p_up) p_up.push_back(p.value());
  return FrameVector::spray(p_up);
}

inline LandsbergReport landsberg_characterizations(const OperatorContext& ctx, double tol = 1e-6) {
  const int n = ctx.dim();
  LandsbergReport r;
  r.j_down = ctx.j_down;
  r.h_trace = ctx.h_trace;
  double jmax = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    r.difference = std::max(r.difference, std::abs(r.j_down[k] - r.h_trace[k]));
    jmax = std::max(jmax, std::abs(r.j_down[k]));
    r.div_s_expected += ctx.bu.cj().p_up[k].value() * r.h_trace[k];
  }
  r.div_s = divergence(ctx, spray(ctx));
  r.mean_landsberg = jmax <= tol;
  r.laplace_vanishes = r.difference <= tol;
  r.div_s_zero = std::abs(r.div_s) <= tol;
  r.consistent = !r.laplace_vanishes || (r.mean_landsberg == r.div_s_zero);
  return r;
}

/// Scalar-field corpus used by the Laplacian cross-checks.
inline std::vector<std::pair<std::string, Expr>> scalar_corpus(const CartanStructure& s) {
  const int n = s.dim;
  const std::vector<std::string> texts = {
      "x1",
      "x1*p1 + x" + std::to_string(n) + "^2",
      "sin(x1) * p" + std::to_string(n) + "^2",
      "exp(0.3*x" + std::to_string(n) + ") + p1*p" + std::to_string(n),
  };
  std::vector<std::pair<std::string, Expr>> out = {{"K^2", s.k2}};
  for (const std::string& t : texts) out.emplace_back(t, parse_chart_expression(t, n));
  return out;
}

}  // namespace cartanlab
