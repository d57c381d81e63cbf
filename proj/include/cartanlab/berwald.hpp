#pragma once

/// \file
/// Nonlinear connection N_ij, the adapted frame delta_i = d_i + N_ij d^j, the
/// Berwald connection (B^i_jk = d^i N_jk, vertical coefficients zero), h- and
/// v-covariant derivatives, Landsberg tensors and the curvature d-tensors.
///
/// Everything is carried as jets so that later layers can keep
/// differentiating. Orders drop as derivatives are taken: with K^2 at order
/// O, N is at O-3, B and L at O-4, R^i_jkh and P at O-5.

#include <algorithm>
#include <vector>

#include "cartanlab/cartan.hpp"

namespace cartanlab {

struct BerwaldJets {
  CartanJets cj;
  JetTensor c_uud;  ///< C^{ij}_k
  JetTensor gamma;  ///< gamma^i_jk
  JetTensor n;      ///< N_ij
  JetTensor b;      ///< B^i_jk = d^i N_jk
  JetTensor l_uud;  ///< L^{ij}_k; empty below order 4

  int dim() const { return cj.n; }

  /// delta_k f = d_k f + N_kj d^j f
  Jet delta(const Jet& f, int k) const {
    Jet r = dx(f, k);
    for (int j = 0; j < cj.n; ++j) r += n(k, j) * dp(f, cj.n, j);
    return r;
  }
  Jet vdot(const Jet& f, int k) const { return dp(f, cj.n, k); }

  JetTensor raise(const JetTensor& t, int slot) const {
    return transform_slot(t, slot, [&](int a, int s) { return cj.g_up(a, s); }, Valence::Up);
  }
  JetTensor lower(const JetTensor& t, int slot) const {
    return transform_slot(t, slot, [&](int a, int s) { return cj.g_down(a, s); }, Valence::Down);
  }
};

namespace detail {

inline std::vector<int> with_last(std::vector<int> idx, int k) {
  idx.push_back(k);
  return idx;
}

}  // namespace detail

/// T_{|k}: delta_k T plus +T^{..s..} B^i_sk per upper slot and
/// -T_{..s..} B^s_jk per lower slot. The new index is appended (lower).
inline JetTensor h_cov(const BerwaldJets& bj, const JetTensor& t) {
  const int n = bj.dim();
  if (t.dim() != n) throw ValenceError("h_cov: tensor dimension differs from the structure");
  auto valence = t.valence();
  valence.push_back(Valence::Down);
  JetTensor out(n, valence, t.degree());
  for (std::size_t f = 0; f < t.size(); ++f) {
    const auto idx = t.unflatten(f);
    for (int k = 0; k < n; ++k) {
      Jet acc = bj.delta(t.flat(f), k);
      for (std::size_t slot = 0; slot < idx.size(); ++slot) {
        auto other = idx;
        for (int s = 0; s < n; ++s) {
          other[slot] = s;
          if (t.valence()[slot] == Valence::Up)
            acc += t.at(other) * bj.b(idx[slot], s, k);
          else
            acc -= t.at(other) * bj.b(s, idx[slot], k);
        }
      }
      out.at(detail::with_last(idx, k)) = acc;
    }
  }
  return out;
}

/// T|^k = d^k T (the Berwald connection has no vertical coefficients). The new
/// index is appended (upper).
inline JetTensor v_cov(const BerwaldJets& bj, const JetTensor& t) {
  const int n = bj.dim();
  if (t.dim() != n) throw ValenceError("v_cov: tensor dimension differs from the structure");
  auto valence = t.valence();
  valence.push_back(Valence::Up);
  std::optional<int> degree;
  if (t.degree()) degree = *t.degree() - 1;
  JetTensor out(n, valence, degree);
  for (std::size_t f = 0; f < t.size(); ++f) {
    const auto idx = t.unflatten(f);
    for (int k = 0; k < n; ++k) out.at(detail::with_last(idx, k)) = bj.vdot(t.flat(f), k);
  }
  return out;
}

/// Checks that a tensor has the expected valence pattern.
inline void require_valence(const JetTensor& t, const std::vector<Valence>& expected, const char* what) {
  if (t.valence() != expected) throw ValenceError(std::string(what) + ": unexpected index valence");
}

inline BerwaldJets berwald_jets(const CartanStructure& s, const ChartPoint& at, int order) {
  if (order < 3) throw DomainError("berwald jets need order >= 3");
  BerwaldJets bj;
  bj.cj = cartan_jets(s, at, order);
  const CartanJets& cj = bj.cj;
  const int n = cj.n;
  using V = Valence;

  bj.c_uud = cartan_uud(cj);

  // Formal Christoffel symbols of g_ij in the base directions.
  JetTensor dg(n, {V::Down, V::Down, V::Down});  // d_k g_ij
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) dg(i, j, k) = dx(cj.g_down(i, j), k);
  bj.gamma = JetTensor(n, {V::Up, V::Down, V::Down});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Jet acc(0.0);
        for (int r = 0; r < n; ++r)
          acc += cj.g_up(i, r) * (dg(j, r, k) + dg(r, k, j) - dg(j, k, r));
        bj.gamma(i, j, k) = 0.5 * acc;
      }

  // N_ij = gamma^h_ij p_h - 1/2 (gamma^h_kl p_h p^l) d^k g_ij
  std::vector<Jet> gamma_oo(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Jet acc(0.0);
    for (int h = 0; h < n; ++h)
      for (int l = 0; l < n; ++l)
        acc += bj.gamma(h, k, l) * cj.p_down[static_cast<std::size_t>(h)] * cj.p_up[static_cast<std::size_t>(l)];
    gamma_oo[static_cast<std::size_t>(k)] = acc;
  }
  bj.n = JetTensor(n, {V::Down, V::Down}, 1);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Jet acc(0.0);
      for (int h = 0; h < n; ++h) acc += bj.gamma(h, i, j) * cj.p_down[static_cast<std::size_t>(h)];
      for (int k = 0; k < n; ++k) acc -= 0.5 * gamma_oo[static_cast<std::size_t>(k)] * dp(cj.g_down(i, j), n, k);
      bj.n(i, j) = acc;
      bj.n(j, i) = acc;
    }

  if (order >= 4) {
    bj.b = JetTensor(n, {V::Up, V::Down, V::Down}, 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k) {
          bj.b(i, j, k) = dp(bj.n(j, k), n, i);
          bj.b(i, k, j) = bj.b(i, j, k);
        }
    // L^{ij}_k = C^{ij}_{k|h} p^h
    const JetTensor dc = h_cov(bj, bj.c_uud);
    bj.l_uud = JetTensor(n, {V::Up, V::Up, V::Down}, 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          Jet acc(0.0);
          for (int h = 0; h < n; ++h) acc += dc(i, j, k, h) * cj.p_up[static_cast<std::size_t>(h)];
          bj.l_uud(i, j, k) = acc;
        }
  }
  return bj;
}

/// R_kij = delta_i N_jk - delta_j N_ik, so that [delta_i, delta_j] = R_kij d^k.
inline JetTensor r_vv(const BerwaldJets& bj) {
  const int n = bj.dim();
  JetTensor r(n, {Valence::Down, Valence::Down, Valence::Down}, 1);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(k, i, j) = bj.delta(bj.n(j, k), i) - bj.delta(bj.n(i, k), j);
  return r;
}

/// R^i_jkh = delta_h B^i_jk - delta_k B^i_jh + B^s_jk B^i_sh - B^s_jh B^i_sk
inline JetTensor r_hcurv(const BerwaldJets& bj) {
  const int n = bj.dim();
  using V = Valence;
  JetTensor r(n, {V::Up, V::Down, V::Down, V::Down}, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int h = 0; h < n; ++h) {
          Jet acc = bj.delta(bj.b(i, j, k), h) - bj.delta(bj.b(i, j, h), k);
          for (int s = 0; s < n; ++s) acc += bj.b(s, j, k) * bj.b(i, s, h) - bj.b(s, j, h) * bj.b(i, s, k);
          r(i, j, k, h) = acc;
        }
  return r;
}

/// P^{ih}_jk = d^h B^i_jk, stored with index order (i, j, k, h).
inline JetTensor p_curv(const BerwaldJets& bj) { return v_cov(bj, bj.b); }

struct NonlinearConnection {
  NumTensor n_down;      ///< N_ij
  NumTensor gamma;       ///< gamma^i_jk
  NumTensor gamma_o;     ///< gamma^h_jk p_h
  std::vector<double> gamma_oo;  ///< gamma^h_jk p_h p^k
};

inline NonlinearConnection nonlinear_connection(const CartanStructure& s, const ChartPoint& at) {
  const BerwaldJets bj = berwald_jets(s, at, 3);
  const int n = s.dim;
  NonlinearConnection nc;
  nc.n_down = values(bj.n);
  nc.gamma = values(bj.gamma);
  nc.gamma_o = NumTensor(n, {Valence::Down, Valence::Down});
  nc.gamma_oo.assign(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int h = 0; h < n; ++h) acc += nc.gamma(h, j, k) * at.p()[static_cast<std::size_t>(h)];
      nc.gamma_o(j, k) = acc;
      nc.gamma_oo[static_cast<std::size_t>(j)] += acc * bj.cj.p_up[static_cast<std::size_t>(k)].value();
    }
  return nc;
}

/// delta_i f for a scalar field given as an expression.
inline std::vector<double> delta_apply(const CartanStructure& s, const ChartPoint& at, const Expr& f) {
  const BerwaldJets bj = berwald_jets(s, at, 3);
  const Jet fj = jet_eval(f, at, 1);
  std::vector<double> out;
  for (int i = 0; i < s.dim; ++i) out.push_back(bj.delta(fj, i).value());
  return out;
}

struct BerwaldData {
  NumTensor b;       ///< B^i_jk
  NumTensor l_uud;   ///< L^{ij}_k
  NumTensor l_udd;   ///< L^i_jk
  NumTensor l_uuu;   ///< L^{ijk}
  NumTensor l_ddd;   ///< L_ijk
  std::vector<double> j_up;    ///< J^s = g_ij L^{ijs}
  std::vector<double> j_down;  ///< J_i
  NumTensor r_vv;     ///< R_kij
  NumTensor r_hcurv;  ///< R^i_jkh
  NumTensor p_curv;   ///< P^{ih}_jk stored (i, j, k, h)
};

inline BerwaldData berwald_data(const CartanStructure& s, const ChartPoint& at) {
  const BerwaldJets bj = berwald_jets(s, at, 5);
  const int n = s.dim;
  BerwaldData d;
  d.b = values(bj.b);
  d.l_uud = values(bj.l_uud);
  const JetTensor l_uuu = bj.raise(bj.l_uud, 2);
  d.l_uuu = values(l_uuu);
  d.l_udd = values(bj.lower(bj.l_uud, 1));
  d.l_ddd = values(bj.lower(bj.lower(bj.l_uud, 0), 1));
  d.j_up.assign(static_cast<std::size_t>(n), 0.0);
  d.j_down.assign(static_cast<std::size_t>(n), 0.0);
  for (int s2 = 0; s2 < n; ++s2)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d.j_up[static_cast<std::size_t>(s2)] += bj.cj.g_down(i, j).value() * d.l_uuu(i, j, s2);
  for (int i = 0; i < n; ++i)
    for (int s2 = 0; s2 < n; ++s2)
      d.j_down[static_cast<std::size_t>(i)] += bj.cj.g_down(i, s2).value() * d.j_up[static_cast<std::size_t>(s2)];
  d.r_vv = values(r_vv(bj));
  d.r_hcurv = values(r_hcurv(bj));
  d.p_curv = values(p_curv(bj));
  return d;
}

struct MetricDeltaResidual {
  double residual = 0.0;   ///< max |delta_i g_jk - B^s_ji g_sk - B^s_ki g_js|
  double landsberg = 0.0;  ///< max |residual tensor - 2 L_jki|
};

/// The lowered metric is parallel along delta only up to Landsberg terms:
/// delta_i g_jk - B^s_ji g_sk - B^s_ki g_js = g_jk|i = 2 L_jki.
inline MetricDeltaResidual metric_delta_identity(const CartanStructure& s, const ChartPoint& at) {
  const BerwaldJets bj = berwald_jets(s, at, 4);
  const int n = s.dim;
  const NumTensor l_ddd = values(bj.lower(bj.lower(bj.l_uud, 0), 1));
  MetricDeltaResidual r;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = bj.delta(bj.cj.g_down(j, k), i).value();
        for (int s2 = 0; s2 < n; ++s2)
          v -= bj.b(s2, j, i).value() * bj.cj.g_down(s2, k).value() +
               bj.b(s2, k, i).value() * bj.cj.g_down(j, s2).value();
        r.residual = std::max(r.residual, std::abs(v));
        r.landsberg = std::max(r.landsberg, std::abs(v - 2.0 * l_ddd(j, k, i)));
      }
  return r;
}

}  // namespace cartanlab
