#include <gtest/gtest.h>

#include "cartanlab/cartan.hpp"

using namespace cartanlab;

namespace {

CartanStructure randers03() {
  return randers_dual(identity_metric(2), {Expr(0.3), Expr(0.0)}, "randers");
}

}  // namespace

TEST(Cartan, FlatFundamental) {
  const ChartPoint at({0.2, -0.4}, {1.0, 0.5});
  const FundamentalTensors f = fundamental(flat_structure(2), at);
  EXPECT_TRUE(f.g_up.isApprox(SquareMatrix::Identity(2, 2)));
  EXPECT_NEAR(f.p_up[0], 1.0, 1e-15);
  EXPECT_NEAR(f.p_up[1], 0.5, 1e-15);
  EXPECT_NEAR(f.tau, 0.625, 1e-15);
}

TEST(Cartan, RiemannianDualHasZeroCartanTensor) {
  const CartanStructure s = riemannian_conformal(3, 1.0);
  const ChartPoint at({0.3, 0.1, -0.2}, {1.0, 0.4, -0.7});
  const CartanTensor ct = cartan_tensor(s, at);
  EXPECT_LT(max_abs(ct.c_upupup), 1e-12);
  const FundamentalTensors f = fundamental(s, at);
  const double omega = 1.0 + 0.25 * (0.09 + 0.01 + 0.04);
  EXPECT_NEAR(f.g_up(0, 0), omega * omega, 1e-12);
  EXPECT_NEAR(f.g_up(0, 1), 0.0, 1e-12);
}

TEST(Cartan, RandersIdentities) {
  const CartanStructure s = randers03();
  const ChartPoint at({0.0, 0.0}, {1.0, 0.2});
  const FundamentalTensors f = fundamental(s, at);
  const double k = std::sqrt(1.04) + 0.3;
  double gpp = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) gpp += f.g_up(i, j) * at.p()[i] * at.p()[j];
  EXPECT_NEAR(gpp, k * k, 1e-9);
  const CartanTensor ct = cartan_tensor(s, at);
  EXPECT_GT(max_abs(ct.c_upupup), 1e-3);
  EXPECT_GT(std::abs(ct.i_up[0]) + std::abs(ct.i_up[1]), 1e-3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double cp = 0.0;
      for (int k2 = 0; k2 < 2; ++k2) cp += ct.c_upupup(i, j, k2) * at.p()[k2];
      EXPECT_NEAR(cp, 0.0, 1e-9);
      for (int k2 = 0; k2 < 2; ++k2) {
        EXPECT_NEAR(ct.c_upupup(i, j, k2), ct.c_upupup(j, k2, i), 1e-12);
        EXPECT_NEAR(ct.c_upupup(i, j, k2), ct.c_upupup(k2, i, j), 1e-12);
      }
    }
}

TEST(Cartan, RandersRegularityViolation) {
  EXPECT_THROW(randers_dual(identity_metric(2), {Expr(1.0), Expr(0.2)}), RegularityError);
}

TEST(Cartan, RandersWithZeroWindIsRiemannian) {
  const CartanStructure r = randers_dual(conformal_metric(2, 1.0), {Expr(0.0), Expr(0.0)});
  const CartanStructure c = riemannian_conformal(2, 1.0);
  const ChartPoint at({0.3, -0.2}, {0.8, 1.1});
  EXPECT_LT((fundamental(r, at).g_up - fundamental(c, at).g_up).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Cartan, RandersConvergesToRiemannianLinearlyInWind) {
  const ChartPoint at({0.1, 0.2}, {1.0, -0.6});
  const SquareMatrix g0 = fundamental(riemannian_dual(identity_metric(2)), at).g_up;
  double prev = 0.0;
  for (double b : {0.1, 0.05, 0.025}) {
    const auto s = randers_dual(identity_metric(2), {Expr(b), Expr(0.5 * b)});
    const double d = (fundamental(s, at).g_up - g0).cwiseAbs().maxCoeff();
    if (prev > 0.0) {
      EXPECT_NEAR(prev / d, 2.0, 0.2);
    }
    prev = d;
  }
}

TEST(Cartan, DerivativeOfLowerMetricIsTwiceMixedCartan) {
  const CartanStructure s = randers03();
  const ChartPoint at({0.2, 0.1}, {0.7, -1.3});
  const CartanJets cj = cartan_jets(s, at, 3);
  const CartanTensor ct = cartan_tensor(s, at);
  for (int r = 0; r < 2; ++r)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        EXPECT_NEAR(dp(cj.g_down(j, k), 2, r).value(), 2.0 * ct.c_mixed(r, j, k), 1e-10);
}

TEST(Cartan, EulerIdentitiesAndZeroHomogeneity) {
  const CartanStructure s = randers_dual(conformal_metric(2, -1.0), {Expr::var(1) * 0.2, Expr(0.1)});
  const ChartPoint at({0.4, 0.5}, {-0.9, 0.6});
  const CartanJets cj = cartan_jets(s, at, 2);
  double euler = 0.0;
  for (int j = 0; j < 2; ++j) euler += at.p()[j] * dp(cj.k2, 2, j).value();
  EXPECT_NEAR(euler, 2.0 * cj.k2.value(), 1e-9);
  const SquareMatrix g1 = fundamental(s, at).g_up;
  const SquareMatrix g2 = fundamental(s, at.scaled_momenta(2.0)).g_up;
  EXPECT_LT((g1 - g2).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Cartan, ExpressionStructureRejectsIndefinite) {
  const CartanStructure s = expression_structure(2, "p1^2 - p2^2");
  EXPECT_THROW(fundamental(s, ChartPoint({0.0, 0.0}, {1.0, 0.5})), RegularityError);
}
