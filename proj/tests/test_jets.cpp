#include <gtest/gtest.h>

#include <random>

#include "cartanlab/cartan.hpp"
#include "cartanlab/jets.hpp"

using namespace cartanlab;

namespace {

ChartPoint point2(double x1, double x2, double p1, double p2) { return {{x1, x2}, {p1, p2}}; }

}  // namespace

TEST(Jets, PolynomialSecondDerivative) {
  const Expr f = parse_chart_expression("p1^2", 2);
  const Jet j = jet_eval(f, point2(0.3, -0.2, 1.5, 0.4), 2);
  EXPECT_DOUBLE_EQ(j.value(), 2.25);
  EXPECT_DOUBLE_EQ(j.partial(multi_index(4, {2, 2})), 2.0);
  EXPECT_DOUBLE_EQ(j.partial(multi_index(4, {0, 2})), 0.0);
  EXPECT_DOUBLE_EQ(j.partial(multi_index(4, {0})), 0.0);
}

TEST(Jets, FlatHessianIsTwiceIdentity) {
  const CartanStructure flat = flat_structure(3);
  const ChartPoint at({0.1, 0.2, 0.3}, {1.0, -0.5, 0.25});
  const Jet j = jet_eval(flat.k2, at, 2);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      EXPECT_DOUBLE_EQ(j.partial(multi_index(6, {3 + i, 3 + k})), i == k ? 2.0 : 0.0);
}

TEST(Jets, MixedPartialMatchesFiniteDifference) {
  const Expr f = parse_chart_expression("(1 + (x1^2 + x2^2)/4)^2 * (p1^2 + p2^2)", 2);
  const ChartPoint at = point2(1.0, 0.0, 1.0, 0.0);
  const Jet j = jet_eval(f, at, 2);
  const double exact = j.partial(multi_index(4, {0, 2}));
  const FdEstimate fd = fd_derivative(f, at, {0, 2});
  EXPECT_NEAR(fd.value, exact, 1e-6 * std::abs(exact));
  // d/dx1 (1+x1^2/4)^2 * 2 p1 at x1 = 1: 2 (5/4)(1/2) 2 = 2.5
  EXPECT_NEAR(exact, 2.5, 1e-12);
}

TEST(Jets, FiniteDifferenceTrivialCases) {
  const Expr f = parse_chart_expression("x1*p1", 2);
  const ChartPoint at = point2(0.7, 0.1, -1.2, 0.5);
  const FdEstimate d = fd_derivative(f, at, {0, 2});
  EXPECT_NEAR(d.value, 1.0, std::max(1e-9, d.error));
  const FdEstimate h = fd_derivative(flat_structure(2).k2, at, {2, 2});
  EXPECT_NEAR(h.value, 2.0, 1e-7);
}

TEST(Jets, FiniteDifferenceLeavingDomainIsReported) {
  const Expr f = parse_chart_expression("log(p1)", 2);
  const ChartPoint at = point2(0.0, 0.0, 1e-4, 1.0);
  EXPECT_THROW(fd_derivative(f, at, {2}), DomainError);
}

TEST(Jets, NonFiniteEvaluationIsDomainError) {
  const Expr f = parse_chart_expression("log(x1)", 2);
  EXPECT_THROW(jet_eval(f, point2(-1.0, 0.0, 1.0, 0.0), 2), DomainError);
}

TEST(Jets, LeibnizOnRandomPolynomials) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto space = JetSpace::get(4, 4);
  for (int trial = 0; trial < 20; ++trial) {
    Jet a(space, 4), b(space, 4);
    for (double& c : a.coeffs()) c = u(rng);
    for (double& c : b.coeffs()) c = u(rng);
    const Jet ab = a * b;
    // Brute-force convolution over all exponent pairs.
    for (std::size_t i = 0; i < space->size(4); ++i) {
      double expect = 0.0;
      for (std::size_t ia = 0; ia < space->size(4); ++ia)
        for (std::size_t ib = 0; ib < space->size(4); ++ib) {
          bool match = true;
          for (int v = 0; v < 4; ++v)
            match = match && space->exponents(ia)[static_cast<std::size_t>(v)] +
                                     space->exponents(ib)[static_cast<std::size_t>(v)] ==
                                 space->exponents(i)[static_cast<std::size_t>(v)];
          if (match) expect += a.coeffs()[ia] * b.coeffs()[ib];
        }
      EXPECT_NEAR(ab.coeffs()[i], expect, 1e-13);
    }
  }
}

TEST(Jets, SmoothPrimitivesMatchFiniteDifferences) {
  const Expr f = parse_chart_expression("exp(x1*p2) * sin(p1) / sqrt(1 + x2^2) + cos(x2)*log(2 + p1^2)", 2);
  const ChartPoint at = point2(0.4, -0.3, 0.8, 1.1);
  const Jet j = jet_eval(f, at, 3);
  for (const std::vector<int>& dirs : std::vector<std::vector<int>>{{0}, {2, 3}, {0, 3}, {1, 1, 2}}) {
    const FdEstimate fd = fd_derivative(f, at, dirs);
    const double exact = j.partial(multi_index(4, dirs));
    EXPECT_NEAR(fd.value, exact, std::max(1e-6, 10.0 * fd.error)) << dirs.size();
  }
}

TEST(Jets, InvertRejectsSingular) {
  SquareMatrix m = SquareMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  EXPECT_THROW(invert(m), ConditioningError);
  SquareMatrix d = SquareMatrix::Identity(3, 3) * 0.5;
  EXPECT_TRUE(invert(d).isApprox(SquareMatrix::Identity(3, 3) * 2.0, 1e-14));
}

TEST(Jets, ParserErrorsCarryColumn) {
  try {
    parse_chart_expression("p1 + * p2", 2);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
  }
  EXPECT_THROW(parse_chart_expression("q1", 2), ParseError);
  EXPECT_THROW(parse_chart_expression("foo(p1)", 2), ParseError);
}
