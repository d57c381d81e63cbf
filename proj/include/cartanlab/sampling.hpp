#pragma once

/// \file
/// Seeded point sampling on the slit cotangent bundle. The generator is
/// std::mt19937_64 seeded through std::seed_seq, both fully specified by the
/// standard, and doubles are formed by hand so that samples (and therefore
/// reports) are identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cartanlab/kahler.hpp"

namespace cartanlab {

class Sampler {
 public:
  explicit Sampler(std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    for (std::uint64_t k : key) {
      words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    rng_.seed(seq);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform direction on the unit sphere in R^n (rejection from the cube).
  std::vector<double> direction(int n) {
    for (;;) {
      std::vector<double> v(static_cast<std::size_t>(n));
      double r2 = 0.0;
      for (double& c : v) {
        c = uniform(-1.0, 1.0);
        r2 += c * c;
      }
      if (r2 > 1e-4 && r2 <= 1.0) {
        const double r = std::sqrt(r2);
        for (double& c : v) c /= r;
        return v;
      }
    }
  }

 private:
  std::mt19937_64 rng_;
};

struct SamplingBox {
  std::vector<std::pair<double, double>> x;  ///< per-coordinate [lo, hi]
};

struct SamplingSpec {
  std::uint64_t seed = 0;
  int points = 50;
  int structural_points = 100;
  double p_norm_lo = 0.5;
  double p_norm_hi = 2.0;
};

/// Ratio of the sampled tube to the tube 2 tau < 1/(c beta^2).
inline constexpr double kTubeFraction = 0.8;

/// Sampling restriction for a parameter set at a point: inside the tube
/// fraction for c > 0, positive margin alpha + 2 tau v in any case.
inline bool inside_sampling_tube(const DeformationParams& prm, double tau) {
  if (prm.c) {
    const double c = *prm.c;
    if (c > 0.0 && !(2.0 * tau <= kTubeFraction / (c * prm.beta * prm.beta))) return false;
  }
  return positivity_margin(prm, tau) > (1.0 - kTubeFraction) * prm.alpha;
}

struct SampleResult {
  std::vector<ChartPoint> points;
  int attempts = 0;
};

/// Draws up to `count` admissible points; gives up after `max_attempts`.
/// The tube restriction is skipped when `prm` is null.
inline SampleResult sample_points(const CartanStructure& s, const SamplingBox& box, const SamplingSpec& spec,
                                  const DeformationParams* prm, int count, Sampler& rng, int max_attempts) {
  SampleResult out;
  const int n = s.dim;
  while (static_cast<int>(out.points.size()) < count && out.attempts < max_attempts) {
    ++out.attempts;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = rng.uniform(box.x[static_cast<std::size_t>(i)].first, box.x[static_cast<std::size_t>(i)].second);
    std::vector<double> p = rng.direction(n);
    const double r = rng.uniform(spec.p_norm_lo, spec.p_norm_hi);
    for (double& c : p) c *= r;
    ChartPoint at(x, p);
    if (s.domain && s.domain(at)) continue;
    if (prm) {
      double tau = 0.0;
      try {
        tau = 0.5 * s.k2.eval<double>(at.coords());
      } catch (const std::exception&) {
        continue;
      }
      if (!std::isfinite(tau) || !inside_sampling_tube(*prm, tau)) continue;
    }
    out.points.push_back(std::move(at));
  }
  return out;
}

}  // namespace cartanlab
