#include <gtest/gtest.h>

#include "cartanlab/sampling.hpp"

using namespace cartanlab;

TEST(Sampling, StreamIsReproducibleAndKeyed) {
  Sampler a({42, 0, 1});
  Sampler b({42, 0, 1});
  Sampler c({42, 1, 0});
  bool differs = false;
  for (int k = 0; k < 100; ++k) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    differs = differs || u != c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_TRUE(differs);
}

TEST(Sampling, UniformMomentsAndDirections) {
  Sampler s({7});
  double mean = 0.0;
  const int count = 20000;
  for (int k = 0; k < count; ++k) mean += s.uniform();
  EXPECT_NEAR(mean / count, 0.5, 0.01);
  std::vector<double> m(3, 0.0);
  for (int k = 0; k < count; ++k) {
    const auto d = s.direction(3);
    double r2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      r2 += d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)];
      m[static_cast<std::size_t>(i)] += d[static_cast<std::size_t>(i)];
    }
    EXPECT_NEAR(r2, 1.0, 1e-12);
  }
  for (double v : m) EXPECT_NEAR(v / count, 0.0, 0.02);
}

TEST(Sampling, PointsRespectBoxNormAndTube) {
  const CartanStructure s = riemannian_conformal(2, 1.0);
  const SamplingBox box{{{-0.5, 0.5}, {0.0, 0.25}}};
  SamplingSpec spec;
  spec.p_norm_lo = 0.3;
  spec.p_norm_hi = 1.5;
  const auto prm = DeformationParams::integrable(1.0, 1.0, 1.0);
  Sampler rng({1, 2, 3});
  const SampleResult r = sample_points(s, box, spec, &prm, 40, rng, 10000);
  ASSERT_EQ(r.points.size(), 40u);
  EXPECT_GT(r.attempts, 40);  // some draws land outside the tube
  for (const ChartPoint& q : r.points) {
    EXPECT_GE(q.x()[1], 0.0);
    EXPECT_LE(q.x()[1], 0.25);
    double p2 = 0.0;
    for (double v : q.p()) p2 += v * v;
    EXPECT_GE(std::sqrt(p2), 0.3 - 1e-12);
    EXPECT_LE(std::sqrt(p2), 1.5 + 1e-12);
    const double tau = 0.5 * s.k2.eval<double>(q.coords());
    EXPECT_LE(2.0 * tau, kTubeFraction + 1e-12);
  }
}

TEST(Sampling, TubeRuleAndPositivityMargin) {
  const auto pos = DeformationParams::integrable(1.0, 2.0, 1.0);
  EXPECT_TRUE(inside_sampling_tube(pos, 0.09));
  EXPECT_FALSE(inside_sampling_tube(pos, 0.11));  // 2 tau > 0.8 / 4
  const auto neg = DeformationParams::integrable(1.0, 2.0, -1.0);
  EXPECT_TRUE(inside_sampling_tube(neg, 100.0));
  const auto general = DeformationParams::general(1.0, 1.0, "-1");
  EXPECT_TRUE(inside_sampling_tube(general, 0.3));   // margin 0.4
  EXPECT_FALSE(inside_sampling_tube(general, 0.45));  // margin 0.1 < 0.2 alpha
}

TEST(Sampling, GivesUpAfterMaxAttempts) {
  const CartanStructure s = riemannian_conformal(2, 1.0);
  const auto prm = DeformationParams::integrable(1.0, 3.0, 1.0);
  Sampler rng({5});
  const SampleResult r = sample_points(s, {{{-0.5, 0.5}, {-0.5, 0.5}}}, SamplingSpec{}, &prm, 10, rng, 300);
  EXPECT_TRUE(r.points.empty());
  EXPECT_EQ(r.attempts, 300);
}
