#include <gtest/gtest.h>

#include "cartanlab/berwald.hpp"

using namespace cartanlab;

namespace {

CartanStructure minkowski_randers(int n = 2) {
  std::vector<Expr> b(static_cast<std::size_t>(n), Expr(0.0));
  b[0] = 0.3;
  return randers_dual(identity_metric(n), b, "randers");
}

// Randers structure over a curved base with a position-dependent wind, so that
// N, B and L are all generic.
CartanStructure curved_randers() {
  return randers_dual(conformal_metric(2, 0.5), {0.2 * Expr::var(1), Expr(0.1) + 0.1 * Expr::var(0)},
                      "curved_randers");
}

// N_ij assembled from finite differences of the numerically inverted metric.
NumTensor fd_nonlinear_connection(const CartanStructure& s, const ChartPoint& at) {
  const int n = s.dim;
  const FundamentalTensors f = fundamental(s, at);
  auto g_entry = [&](int i, int j) {
    return [&s, i, j](const ChartPoint& q) { return fundamental(s, q).g_down(i, j); };
  };
  std::vector<double> dg(static_cast<std::size_t>(n * n * n));  // d_k g_ij
  std::vector<double> dpg(static_cast<std::size_t>(n * n * n));  // d^k g_ij
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        dg[static_cast<std::size_t>((i * n + j) * n + k)] = fd_derivative(g_entry(i, j), at, {k}).value;
        dpg[static_cast<std::size_t>((i * n + j) * n + k)] = fd_derivative(g_entry(i, j), at, {n + k}).value;
      }
  auto DG = [&](int i, int j, int k) { return dg[static_cast<std::size_t>((i * n + j) * n + k)]; };
  auto DPG = [&](int i, int j, int k) { return dpg[static_cast<std::size_t>((i * n + j) * n + k)]; };
  NumTensor gamma(n, {Valence::Up, Valence::Down, Valence::Down});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int s2 = 0; s2 < n; ++s2)
          gamma(i, j, k) += 0.5 * f.g_up(i, s2) * (DG(j, s2, k) + DG(s2, k, j) - DG(j, k, s2));
  NumTensor out(n, {Valence::Down, Valence::Down});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int h = 0; h < n; ++h) v += gamma(h, i, j) * at.p()[static_cast<std::size_t>(h)];
      for (int k = 0; k < n; ++k) {
        double goo = 0.0;
        for (int h = 0; h < n; ++h)
          for (int l = 0; l < n; ++l) goo += gamma(h, k, l) * at.p()[static_cast<std::size_t>(h)] * f.p_up[static_cast<std::size_t>(l)];
        v -= 0.5 * goo * DPG(i, j, k);
      }
      out(i, j) = v;
    }
  return out;
}

}  // namespace

TEST(Berwald, FlatAndMinkowskiHaveZeroConnection) {
  const ChartPoint at({0.3, -0.1}, {1.0, 0.2});
  EXPECT_LT(max_abs(nonlinear_connection(flat_structure(2), at).n_down), 1e-14);
  EXPECT_LT(max_abs(nonlinear_connection(minkowski_randers(), at).n_down), 1e-12);
  const BerwaldData d = berwald_data(flat_structure(2), at);
  EXPECT_LT(max_abs(d.b), 1e-14);
  EXPECT_LT(max_abs(d.l_uud), 1e-14);
  EXPECT_LT(max_abs(d.r_hcurv), 1e-14);
}

TEST(Berwald, ConformalConnectionMatchesFiniteDifferences) {
  const CartanStructure s = riemannian_conformal(2, 1.0);
  const ChartPoint at({0.3, 0.0}, {1.0, 0.4});
  const NumTensor exact = nonlinear_connection(s, at).n_down;
  const NumTensor fd = fd_nonlinear_connection(s, at);
  EXPECT_LT(max_abs_diff(exact, fd), 1e-5);
  EXPECT_NEAR(exact(0, 1), exact(1, 0), 1e-12);
}

TEST(Berwald, CurvedRandersConnectionMatchesFiniteDifferences) {
  const CartanStructure s = curved_randers();
  const ChartPoint at({0.4, -0.3}, {0.7, 1.1});
  EXPECT_LT(max_abs_diff(nonlinear_connection(s, at).n_down, fd_nonlinear_connection(s, at)), 1e-5);
}

TEST(Berwald, RiemannianCoefficientsAreChristoffelSymbols) {
  const double c = -1.0;
  const CartanStructure s = riemannian_conformal(3, c);
  const ChartPoint at({0.3, -0.5, 0.2}, {0.6, 1.2, -0.4});
  const BerwaldData d = berwald_data(s, at);
  // a = exp(2 phi) delta with phi = -ln(1 + c|x|^2/4)
  const auto& x = at.x();
  const double omega = 1.0 + 0.25 * c * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  auto dphi = [&](int i) { return -0.5 * c * x[static_cast<std::size_t>(i)] / omega; };
  for (int h = 0; h < 3; ++h)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double christoffel = (h == i ? dphi(j) : 0.0) + (h == j ? dphi(i) : 0.0) - (i == j ? dphi(h) : 0.0);
        EXPECT_NEAR(d.b(h, i, j), christoffel, 1e-12);
      }
  EXPECT_LT(max_abs(d.l_uud), 1e-12);
  for (double j : d.j_up) EXPECT_NEAR(j, 0.0, 1e-12);
}

TEST(Berwald, ConstantCurvatureTraceOfVerticalCurvature) {
  for (double c : {1.0, -1.0}) {
    const CartanStructure s = riemannian_conformal(2, c);
    const ChartPoint at({0.3, 0.2}, {0.9, -0.5});
    const BerwaldData d = berwald_data(s, at);
    const FundamentalTensors f = fundamental(s, at);
    const double k2 = 2.0 * f.tau;
    for (int h = 0; h < 2; ++h)
      for (int k = 0; k < 2; ++k) {
        double lhs = 0.0;
        for (int j = 0; j < 2; ++j) lhs += d.r_vv(h, j, k) * f.p_up[static_cast<std::size_t>(j)];
        const double rhs = c * (k2 * f.g_down(h, k) - at.p()[static_cast<std::size_t>(h)] * at.p()[static_cast<std::size_t>(k)]);
        EXPECT_NEAR(lhs, rhs, 1e-9);
      }
  }
}

TEST(Berwald, DeltaIdentities) {
  const CartanStructure s = curved_randers();
  const ChartPoint at({0.2, 0.5}, {-0.8, 0.9});
  const auto dk = delta_apply(s, at, s.k2);
  for (double v : dk) EXPECT_NEAR(v, 0.0, 1e-9);
  const NumTensor nn = nonlinear_connection(s, at).n_down;
  for (int k = 0; k < 2; ++k) {
    const auto dpk = delta_apply(s, at, Expr::var(2 + k));
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(dpk[static_cast<std::size_t>(i)], nn(i, k), 1e-12);
  }
  const auto dx1 = delta_apply(s, at, parse_chart_expression("x1^2 + x2", 2));
  EXPECT_NEAR(dx1[0], 0.4, 1e-12);
  EXPECT_NEAR(dx1[1], 1.0, 1e-12);
}

TEST(Berwald, CovariantDerivativesOfMetricAndMomenta) {
  const CartanStructure s = curved_randers();
  const ChartPoint at({-0.3, 0.4}, {1.1, 0.3});
  const BerwaldJets bj = berwald_jets(s, at, 5);
  const int n = 2;
  const JetTensor hg = h_cov(bj, bj.cj.g_up);
  const JetTensor vg = v_cov(bj, bj.cj.g_up);
  EXPECT_GT(max_abs(values(bj.l_uud)), 1e-4);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        EXPECT_NEAR(hg(i, j, k).value(), -2.0 * bj.l_uud(i, j, k).value(), 1e-9);
        EXPECT_NEAR(vg(i, j, k).value(), -2.0 * bj.cj.c_up(i, j, k).value(), 1e-12);
      }
  JetTensor p(n, {Valence::Down}, 1);
  for (int i = 0; i < n; ++i) p(i) = bj.cj.p_down[static_cast<std::size_t>(i)];
  const JetTensor hp = h_cov(bj, p);
  const JetTensor vp = v_cov(bj, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      EXPECT_NEAR(hp(i, j).value(), 0.0, 1e-10);
      EXPECT_NEAR(vp(i, j).value(), i == j ? 1.0 : 0.0, 1e-14);
    }
  EXPECT_EQ(hg.valence().back(), Valence::Down);
  EXPECT_EQ(vg.valence().back(), Valence::Up);
  JetTensor wrong(3, {Valence::Up});
  EXPECT_THROW(h_cov(bj, wrong), ValenceError);
}

TEST(Berwald, StructuralIdentitiesOfGenericStructure) {
  const CartanStructure s = curved_randers();
  const ChartPoint at({0.1, -0.6}, {0.5, -1.2});
  const BerwaldData d = berwald_data(s, at);
  const FundamentalTensors f = fundamental(s, at);
  const int n = 2;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double pr = 0.0;
      double ph = 0.0;
      double pj = 0.0;
      for (int k = 0; k < n; ++k) {
        pr += d.r_vv(k, a, b) * f.p_up[static_cast<std::size_t>(k)];
        ph += at.p()[static_cast<std::size_t>(k)] * d.l_udd(k, a, b);
        pj += f.p_up[static_cast<std::size_t>(k)] * d.l_udd(a, k, b);
      }
      EXPECT_NEAR(pr, 0.0, 1e-9);
      EXPECT_NEAR(ph, 0.0, 1e-9);
      EXPECT_NEAR(pj, 0.0, 1e-9);
      for (int c = 0; c < n; ++c) {
        EXPECT_NEAR(d.b(a, b, c), d.b(a, c, b), 1e-12);
        // L_ijk is totally symmetric
        EXPECT_NEAR(d.l_ddd(a, b, c), d.l_ddd(b, c, a), 1e-9);
        EXPECT_NEAR(d.l_ddd(a, b, c), d.l_ddd(a, c, b), 1e-9);
      }
    }
}

TEST(Berwald, HomogeneityDegrees) {
  const CartanStructure s = curved_randers();
  const ChartPoint at({0.3, 0.1}, {0.6, -0.9});
  const NumTensor n1 = nonlinear_connection(s, at).n_down;
  const NumTensor n2 = nonlinear_connection(s, at.scaled_momenta(2.0)).n_down;
  const BerwaldData d1 = berwald_data(s, at);
  const BerwaldData d2 = berwald_data(s, at.scaled_momenta(2.0));
  for (std::size_t k = 0; k < n1.size(); ++k) EXPECT_NEAR(n2.flat(k), 2.0 * n1.flat(k), 1e-10);
  EXPECT_LT(max_abs_diff(d1.b, d2.b), 1e-10);
}

TEST(Berwald, MetricDeltaIdentityHoldsUpToLandsberg) {
  const ChartPoint at({0.2, -0.3}, {0.9, 0.4});
  EXPECT_LT(metric_delta_identity(riemannian_conformal(2, 1.0), at).residual, 1e-9);
  EXPECT_LT(metric_delta_identity(flat_structure(2), at).residual, 1e-14);
  EXPECT_LT(metric_delta_identity(minkowski_randers(), at).residual, 1e-9);
  const MetricDeltaResidual r = metric_delta_identity(curved_randers(), at);
  EXPECT_GT(r.residual, 1e-4);
  EXPECT_LT(r.landsberg, 1e-9);
}

TEST(Berwald, CurvatureMatchesDirectionalDifferences) {
  const CartanStructure s = curved_randers();
  const ChartPoint at({0.25, -0.15}, {0.8, 0.7});
  const int n = 2;
  const BerwaldJets bj = berwald_jets(s, at, 5);
  const NumTensor r = values(r_hcurv(bj));
  auto b_field = [&s](const ChartPoint& q) {
    const NumTensor b = values(berwald_jets(s, q, 4).b);
    return std::vector<double>(&b.flat(0), &b.flat(0) + b.size());
  };
  const NumTensor b0 = values(bj.b);
  // delta_h as a coordinate direction: e_h + N_hj e_{n+j}
  std::vector<std::vector<FdEstimate>> db;
  for (int h = 0; h < n; ++h) {
    std::vector<double> dir(2 * n, 0.0);
    dir[static_cast<std::size_t>(h)] = 1.0;
    for (int j = 0; j < n; ++j) dir[static_cast<std::size_t>(n + j)] = bj.n(h, j).value();
    db.push_back(fd_directional(b_field, at, dir));
  }
  auto DB = [&](int h, int i, int j, int k) { return db[static_cast<std::size_t>(h)][static_cast<std::size_t>((i * n + j) * n + k)].value; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int h = 0; h < n; ++h) {
          double v = DB(h, i, j, k) - DB(k, i, j, h);
          for (int s2 = 0; s2 < n; ++s2) v += b0(s2, j, k) * b0(i, s2, h) - b0(s2, j, h) * b0(i, s2, k);
          EXPECT_NEAR(r(i, j, k, h), v, 1e-6);
        }
}
