#pragma once

/// \file
/// The deformed metric G on the slit cotangent bundle, its almost complex
/// structure J, the fundamental form theta(X, Y) = G(X, JY) and the Nijenhuis
/// tensor of J on the adapted frame (delta_i, d^i).

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cartanlab/berwald.hpp"

namespace cartanlab {

/// alpha, beta > 0 and v(tau). With `c` set, v = -c alpha beta^2 (the
/// integrable family); otherwise v is a free expression in `tau`.
struct DeformationParams {
  std::string label = "params";
  double alpha = 1.0;
  double beta = 1.0;
  std::optional<double> c;
  Expr v;
  std::string v_text;
  /// Structure labels the set applies to; empty means all.
  std::vector<std::string> structures;

  static DeformationParams integrable(double alpha, double beta, double c, std::string label = "params") {
    DeformationParams p;
    p.label = std::move(label);
    p.alpha = alpha;
    p.beta = beta;
    p.c = c;
    p.v = -c * alpha * beta * beta;
    std::ostringstream os;
    os.precision(17);
    os << -c * alpha * beta * beta;
    p.v_text = os.str();
    p.validate();
    return p;
  }

  static DeformationParams general(double alpha, double beta, const std::string& v_text,
                                   std::string label = "params") {
    DeformationParams p;
    p.label = std::move(label);
    p.alpha = alpha;
    p.beta = beta;
    p.v = ExprParser(v_text, {"tau"}).parse();
    p.v_text = v_text;
    p.validate();
    return p;
  }

  /// Same alpha, beta with v shifted by a constant; no longer integrable.
  DeformationParams perturbed(double dv) const {
    DeformationParams p = *this;
    p.label = label + "+dv";
    p.c.reset();
    p.v = v + dv;
    std::ostringstream os;
    os.precision(17);
    os << "(" << v_text << ") + " << dv;
    p.v_text = os.str();
    return p;
  }

  void validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("deformation needs alpha > 0 and beta > 0");
  }

  template <class T>
  T v_at(const T& tau) const {
    return v.eval<T>(std::span<const T>(&tau, 1));
  }

  /// The constant -v / (alpha beta^2) at a given tau.
  double c_effective(double tau) const { return -v_at(tau) / (alpha * beta * beta); }

  bool applies_to(const std::string& structure) const {
    if (structures.empty()) return true;
    return std::find(structures.begin(), structures.end(), structure) != structures.end();
  }
};

/// alpha + 2 tau v(tau); G is positive definite exactly where this is positive.
inline double positivity_margin(const DeformationParams& prm, double tau) {
  return prm.alpha + 2.0 * tau * prm.v_at(tau);
}

inline void require_positive(const DeformationParams& prm, double tau) {
  const double m = positivity_margin(prm, tau);
  if (!(m > 0.0)) {
    std::ostringstream os;
    os << prm.label << ": alpha + 2 tau v = " << m << " is not positive (tau = " << tau << ")";
    if (prm.c && *prm.c > 0.0) os << "; the tube requires 2 tau < 1/(c beta^2)";
    throw DomainError(os.str());
  }
}

/// Jets of G_ij and G^ij together with the Berwald data they rest on.
struct BundleJets {
  BerwaldJets bj;
  DeformationParams params;
  Jet v;
  JetTensor g_dd;  ///< G_ij
  JetTensor g_uu;  ///< G^ij
  JetTensor r;     ///< R_kij; empty below order 4

  int dim() const { return bj.dim(); }
  const CartanJets& cj() const { return bj.cj; }
};

inline BundleJets bundle_jets(BerwaldJets bj, const DeformationParams& prm) {
  BundleJets bu;
  bu.bj = std::move(bj);
  bu.params = prm;
  const CartanJets& cj = bu.bj.cj;
  const int n = cj.n;
  require_positive(prm, cj.tau.value());
  bu.v = prm.v_at(cj.tau);
  const double a = prm.alpha;
  const double b = prm.beta;
  const Jet vdown = bu.v / (a * b);
  const Jet vup = bu.v * b / (a + 2.0 * cj.tau * bu.v);
  bu.g_dd = JetTensor(n, {Valence::Down, Valence::Down}, 0);
  bu.g_uu = JetTensor(n, {Valence::Up, Valence::Up}, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto si = static_cast<std::size_t>(i);
      const auto sj = static_cast<std::size_t>(j);
      bu.g_dd(i, j) = cj.g_down(i, j) / b + vdown * cj.p_down[si] * cj.p_down[sj];
      bu.g_uu(i, j) = b * cj.g_up(i, j) - vup * cj.p_up[si] * cj.p_up[sj];
    }
  if (cj.order >= 4) bu.r = r_vv(bu.bj);
  return bu;
}

inline BundleJets bundle_jets(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm,
                              int order) {
  return bundle_jets(berwald_jets(s, at, order), prm);
}

struct BundleMetric {
  SquareMatrix g_down;  ///< G_ij
  SquareMatrix g_up;    ///< G^ij
  ChartPoint at{{0.0, 0.0}, {1.0, 0.0}};
  DeformationParams params;
  double tau = 0.0;

  int dim() const { return static_cast<int>(g_down.rows()); }
};

inline BundleMetric bundle_metric(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm) {
  const CartanJets cj = cartan_jets(s, at, 2);
  const int n = cj.n;
  BundleMetric m;
  m.at = at;
  m.params = prm;
  m.tau = cj.tau.value();
  require_positive(prm, m.tau);
  const double v = prm.v_at(m.tau);
  const double a = prm.alpha;
  const double b = prm.beta;
  m.g_down = SquareMatrix(n, n);
  m.g_up = SquareMatrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double pi = cj.p_down[static_cast<std::size_t>(i)].value();
      const double pj = cj.p_down[static_cast<std::size_t>(j)].value();
      const double ui = cj.p_up[static_cast<std::size_t>(i)].value();
      const double uj = cj.p_up[static_cast<std::size_t>(j)].value();
      m.g_down(i, j) = cj.g_down(i, j).value() / b + v / (a * b) * pi * pj;
      m.g_up(i, j) = b * cj.g_up(i, j).value() - v * b / (a + 2.0 * m.tau * v) * ui * uj;
    }
  return m;
}

/// X = h^i delta_i + v_i d^i.
struct FrameVector {
  std::vector<double> h;
  std::vector<double> v;

  static FrameVector zero(int n) {
    return {std::vector<double>(static_cast<std::size_t>(n), 0.0), std::vector<double>(static_cast<std::size_t>(n), 0.0)};
  }
  /// delta_i (a < n) or d^{a-n} (a >= n).
  static FrameVector basis(int n, int a) {
    FrameVector x = zero(n);
    if (a < n)
      x.h[static_cast<std::size_t>(a)] = 1.0;
    else
      x.v[static_cast<std::size_t>(a - n)] = 1.0;
    return x;
  }
  /// Liouville field C* = p_i d^i.
  static FrameVector liouville(const ChartPoint& at) { return {std::vector<double>(at.p().size(), 0.0), at.p()}; }
  /// Geodesic spray S = p^i delta_i.
  static FrameVector spray(const std::vector<double>& p_up) { return {p_up, std::vector<double>(p_up.size(), 0.0)}; }

  int dim() const { return static_cast<int>(h.size()); }
  double component(int a) const {
    const int n = dim();
    return a < n ? h[static_cast<std::size_t>(a)] : v[static_cast<std::size_t>(a - n)];
  }
};

inline double max_abs(const FrameVector& x) {
  double m = 0.0;
  for (double c : x.h) m = std::max(m, std::abs(c));
  for (double c : x.v) m = std::max(m, std::abs(c));
  return m;
}

/// G(X, Y) = G_ij X^i Y^j + G^ij Xbar_i Ybar_j
inline double metric_value(const BundleMetric& m, const FrameVector& x, const FrameVector& y) {
  double r = 0.0;
  const int n = m.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto si = static_cast<std::size_t>(i);
      const auto sj = static_cast<std::size_t>(j);
      r += m.g_down(i, j) * x.h[si] * y.h[sj] + m.g_up(i, j) * x.v[si] * y.v[sj];
    }
  return r;
}

/// J(delta_i) = G_ik d^k, J(d^i) = -G^ik delta_k
inline FrameVector almost_complex(const BundleMetric& m, const FrameVector& x) {
  const int n = m.dim();
  FrameVector r = FrameVector::zero(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      r.h[static_cast<std::size_t>(k)] -= m.g_up(k, i) * x.v[static_cast<std::size_t>(i)];
      r.v[static_cast<std::size_t>(k)] += m.g_down(i, k) * x.h[static_cast<std::size_t>(i)];
    }
  return r;
}

/// theta(X, Y) = G(X, JY)
inline double fundamental_form(const BundleMetric& m, const FrameVector& x, const FrameVector& y) {
  return metric_value(m, x, almost_complex(m, y));
}

/// Matrix of theta on the adapted frame; the canonical form has
/// theta(d^i, delta_j) = delta^i_j and zero diagonal blocks.
inline SquareMatrix fundamental_form_matrix(const BundleMetric& m) {
  const int n = m.dim();
  SquareMatrix t(2 * n, 2 * n);
  for (int a = 0; a < 2 * n; ++a)
    for (int b = 0; b < 2 * n; ++b)
      t(a, b) = fundamental_form(m, FrameVector::basis(n, a), FrameVector::basis(n, b));
  return t;
}

inline SquareMatrix canonical_form_matrix(int n) {
  SquareMatrix t = SquareMatrix::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    t(n + i, i) = 1.0;
    t(i, n + i) = -1.0;
  }
  return t;
}

/// A frame field near the point, carried as jets of its components.
struct JetFrameField {
  std::vector<Jet> h;
  std::vector<Jet> v;

  static JetFrameField basis(int n, int a) {
    JetFrameField f{std::vector<Jet>(static_cast<std::size_t>(n), Jet(0.0)),
                    std::vector<Jet>(static_cast<std::size_t>(n), Jet(0.0))};
    if (a < n)
      f.h[static_cast<std::size_t>(a)] = 1.0;
    else
      f.v[static_cast<std::size_t>(a - n)] = 1.0;
    return f;
  }
  const Jet& component(int a) const {
    const int n = static_cast<int>(h.size());
    return a < n ? h[static_cast<std::size_t>(a)] : v[static_cast<std::size_t>(a - n)];
  }
  Jet& component(int a) {
    const int n = static_cast<int>(h.size());
    return a < n ? h[static_cast<std::size_t>(a)] : v[static_cast<std::size_t>(a - n)];
  }
  FrameVector value() const {
    FrameVector x;
    for (const Jet& j : h) x.h.push_back(j.value());
    for (const Jet& j : v) x.v.push_back(j.value());
    return x;
  }
};

/// E_a f for the frame E = (delta_1..delta_n, d^1..d^n).
inline Jet frame_derivative(const BerwaldJets& bj, int a, const Jet& f) {
  const int n = bj.dim();
  return a < n ? bj.delta(f, a) : bj.vdot(f, a - n);
}

/// Frame components of [E_a, E_b]:
/// [delta_i, delta_j] = R_kij d^k, [delta_i, d^j] = -B^j_ik d^k, [d^i, d^j] = 0.
inline JetFrameField frame_bracket(const BundleJets& bu, int a, int b) {
  const int n = bu.dim();
  JetFrameField r = JetFrameField::basis(n, 0);
  r.h[0] = 0.0;
  if (a < n && b < n) {
    for (int k = 0; k < n; ++k) r.v[static_cast<std::size_t>(k)] = bu.r(k, a, b);
  } else if (a < n && b >= n) {
    for (int k = 0; k < n; ++k) r.v[static_cast<std::size_t>(k)] = -bu.bj.b(b - n, a, k);
  } else if (a >= n && b < n) {
    for (int k = 0; k < n; ++k) r.v[static_cast<std::size_t>(k)] = bu.bj.b(a - n, b, k);
  }
  return r;
}

/// [U, W] = U^a E_a(W^b) E_b - W^b E_b(U^a) E_a + U^a W^b [E_a, E_b]
inline JetFrameField bracket(const BundleJets& bu, const JetFrameField& u, const JetFrameField& w) {
  const int n = bu.dim();
  JetFrameField r = JetFrameField::basis(n, 0);
  r.h[0] = 0.0;
  for (int a = 0; a < 2 * n; ++a) {
    const Jet& ua = u.component(a);
    const Jet& wa = w.component(a);
    for (int b = 0; b < 2 * n; ++b) {
      if (ua.value() != 0.0 || !ua.is_constant())
        r.component(b) += ua * frame_derivative(bu.bj, a, w.component(b));
      if (wa.value() != 0.0 || !wa.is_constant())
        r.component(b) -= wa * frame_derivative(bu.bj, a, u.component(b));
    }
    for (int b = 0; b < 2 * n; ++b) {
      const Jet coef = ua * w.component(b);
      if (coef.is_constant() && coef.value() == 0.0) continue;
      if (a == b) continue;
      const JetFrameField f = frame_bracket(bu, a, b);
      for (int c = 0; c < 2 * n; ++c) r.component(c) += coef * f.component(c);
    }
  }
  return r;
}

inline JetFrameField almost_complex(const BundleJets& bu, const JetFrameField& x) {
  const int n = bu.dim();
  JetFrameField r = JetFrameField::basis(n, 0);
  r.h[0] = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      r.h[static_cast<std::size_t>(k)] -= bu.g_uu(k, i) * x.v[static_cast<std::size_t>(i)];
      r.v[static_cast<std::size_t>(k)] += bu.g_dd(i, k) * x.h[static_cast<std::size_t>(i)];
    }
  return r;
}

/// N_J(X, Y) = [JX, JY] - J[JX, Y] - J[X, JY] - [X, Y]
inline FrameVector nijenhuis(const BundleJets& bu, const JetFrameField& x, const JetFrameField& y) {
  const JetFrameField jx = almost_complex(bu, x);
  const JetFrameField jy = almost_complex(bu, y);
  const JetFrameField t1 = bracket(bu, jx, jy);
  const JetFrameField t2 = almost_complex(bu, bracket(bu, jx, y));
  const JetFrameField t3 = almost_complex(bu, bracket(bu, x, jy));
  const JetFrameField t4 = bracket(bu, x, y);
  FrameVector r = FrameVector::zero(bu.dim());
  const int n = bu.dim();
  for (int k = 0; k < n; ++k) {
    const auto sk = static_cast<std::size_t>(k);
    r.h[sk] = t1.h[sk].value() - t2.h[sk].value() - t3.h[sk].value() - t4.h[sk].value();
    r.v[sk] = t1.v[sk].value() - t2.v[sk].value() - t3.v[sk].value() - t4.v[sk].value();
  }
  return r;
}

/// N_J on a pair of adapted frame vectors E_a, E_b.
inline FrameVector nijenhuis(const CartanStructure& s, const ChartPoint& at, const DeformationParams& prm, int a,
                             int b) {
  const BundleJets bu = bundle_jets(s, at, prm, 4);
  return nijenhuis(bu, JetFrameField::basis(s.dim, a), JetFrameField::basis(s.dim, b));
}

/// Largest |N_J(E_a, E_b)| over all frame pairs.
inline double nijenhuis_max(const BundleJets& bu) {
  const int n = bu.dim();
  double m = 0.0;
  for (int a = 0; a < 2 * n; ++a)
    for (int b = a + 1; b < 2 * n; ++b)
      m = std::max(m, max_abs(nijenhuis(bu, JetFrameField::basis(n, a), JetFrameField::basis(n, b))));
  return m;
}

struct IntegrabilityDefect {
  double a_res_bundle = 0.0;  ///< A_kij built from G
  double a_res_base = 0.0;    ///< the same built from g
  double r_res = 0.0;         ///< max |R_kij - c (g_jk p_i - g_ik p_j)|, c = -v/(alpha beta^2)
};

inline IntegrabilityDefect integrability_defect(const BundleJets& bu) {
  const int n = bu.dim();
  const CartanJets& cj = bu.cj();
  const BerwaldJets& bj = bu.bj;
  const double c = bu.params.c_effective(cj.tau.value());
  IntegrabilityDefect d;
  auto a_res = [&](auto&& metric) {
    double m = 0.0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = bj.delta(metric(j, k), i).value() - bj.delta(metric(i, k), j).value();
          for (int r = 0; r < n; ++r)
            v += metric(i, r).value() * bj.b(r, j, k).value() - metric(j, r).value() * bj.b(r, i, k).value();
          m = std::max(m, std::abs(v));
        }
    return m;
  };
  d.a_res_bundle = a_res([&](int i, int j) -> const Jet& { return bu.g_dd(i, j); });
  d.a_res_base = a_res([&](int i, int j) -> const Jet& { return cj.g_down(i, j); });
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double pi = cj.p_down[static_cast<std::size_t>(i)].value();
        const double pj = cj.p_down[static_cast<std::size_t>(j)].value();
        const double model = c * (cj.g_down(j, k).value() * pi - cj.g_down(i, k).value() * pj);
        d.r_res = std::max(d.r_res, std::abs(bu.r(k, i, j).value() - model));
      }
  return d;
}

inline IntegrabilityDefect integrability_defect(const CartanStructure& s, const ChartPoint& at,
                                                const DeformationParams& prm) {
  return integrability_defect(bundle_jets(s, at, prm, 4));
}

}  // namespace cartanlab
