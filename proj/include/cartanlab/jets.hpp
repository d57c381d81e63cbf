#pragma once

/// \file
/// Derivative engine entry points: exact jets of scalar fields at a chart
/// point, and an independent central-difference oracle.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "cartanlab/chart.hpp"
#include "cartanlab/expr.hpp"
#include "cartanlab/jet.hpp"
#include "cartanlab/linalg.hpp"

namespace cartanlab {

/// Highest total order the engine evaluates.
inline constexpr int kMaxJetOrder = 6;

/// Seed jets of the chart coordinates (x^1..x^n, p_1..p_n) at `at`.
inline std::vector<Jet> coordinate_jets(const ChartPoint& at, int order) {
  if (order < 0 || order > kMaxJetOrder) throw DomainError("jet order outside engine range");
  const int n = at.dim();
  auto space = JetSpace::get(2 * n, order);
  std::vector<Jet> z;
  z.reserve(static_cast<std::size_t>(2 * n));
  for (int k = 0; k < 2 * n; ++k) z.push_back(Jet::variable(space, order, k, at.coord(k)));
  return z;
}

/// All mixed partials of f at `at` through total order `order`.
inline Jet jet_eval(const Expr& f, const ChartPoint& at, int order) {
  const auto z = coordinate_jets(at, order);
  Jet r = f.eval<Jet>(std::span<const Jet>(z));
  if (r.is_constant()) {
    Jet full(z.front().space(), order);
    full.coeffs()[0] = r.value();
    r = full;
  }
  if (!r.all_finite()) throw DomainError("jet evaluation produced a non-finite value");
  return r;
}

/// Plain evaluation of f at a point.
inline double eval_at(const Expr& f, const ChartPoint& at) {
  const auto z = at.coords();
  const double v = f.eval<double>(std::span<const double>(z));
  if (!std::isfinite(v)) throw DomainError("evaluation produced a non-finite value");
  return v;
}

struct FdEstimate {
  double value;
  double error;
};

using PointFunction = std::function<double(const ChartPoint&)>;

/// Iterated central differences along `dirs` (chart variable indices, repeats
/// allowed) at two step sizes, combined by Richardson extrapolation. Steps are
/// relative to the coordinate magnitude once it exceeds 1.
inline FdEstimate fd_derivative(const PointFunction& f, const ChartPoint& at,
                                const std::vector<int>& dirs,
                                std::array<double, 2> steps = {1e-3, 5e-4}) {
  const auto z0 = at.coords();
  const std::size_t m = dirs.size();
  double fmax = 0.0;
  auto eval = [&](const std::vector<double>& z) {
    ChartPoint q = [&] {
      try {
        return ChartPoint::from_coords(z);
      } catch (const DomainError& e) {
        throw DomainError(std::string("finite difference stencil left the domain: ") + e.what());
      }
    }();
    const double v = f(q);
    if (!std::isfinite(v)) throw DomainError("finite difference stencil produced a non-finite value");
    fmax = std::max(fmax, std::abs(v));
    return v;
  };
  auto stencil = [&](double h) {
    std::vector<double> hk(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double zk = z0[static_cast<std::size_t>(dirs[k])];
      hk[k] = h * std::max(1.0, std::abs(zk));
      if (!(hk[k] > 0.0) || zk + hk[k] == zk) throw DomainError("finite difference step underflow");
    }
    if (m == 0) return eval(z0);
    double acc = 0.0;
    std::vector<double> z(z0);
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
      z = z0;
      double sign = 1.0;
      for (std::size_t k = 0; k < m; ++k) {
        const bool plus = (mask >> k) & 1U;
        z[static_cast<std::size_t>(dirs[k])] += plus ? hk[k] : -hk[k];
        if (!plus) sign = -sign;
      }
      acc += sign * eval(z);
    }
    double denom = 1.0;
    for (double v : hk) denom *= 2.0 * v;
    return acc / denom;
  };
  const double coarse = stencil(steps[0]);
  const double fine = stencil(steps[1]);
  const double r2 = (steps[0] / steps[1]) * (steps[0] / steps[1]);
  const double value = (r2 * fine - coarse) / (r2 - 1.0);
  double denom = 1.0;
  for (std::size_t k = 0; k < m; ++k)
    denom *= 2.0 * steps[1] * std::max(1.0, std::abs(z0[static_cast<std::size_t>(dirs[k])]));
  const double roundoff = 4.0 * std::numeric_limits<double>::epsilon() * fmax *
                          static_cast<double>(std::size_t{1} << m) / denom;
  return {value, std::abs(fine - coarse) + roundoff};
}

inline FdEstimate fd_derivative(const Expr& f, const ChartPoint& at, const std::vector<int>& dirs,
                                std::array<double, 2> steps = {1e-3, 5e-4}) {
  return fd_derivative([&](const ChartPoint& q) { return eval_at(f, q); }, at, dirs, steps);
}

using VectorFunction = std::function<std::vector<double>(const ChartPoint&)>;

/// Directional derivative d/dt F(z + t v) at t = 0 of a vector-valued field,
/// central differences at two steps with Richardson extrapolation. The step is
/// scaled by max(1, |z|) and divided by |v|.
inline std::vector<FdEstimate> fd_directional(const VectorFunction& f, const ChartPoint& at,
                                              const std::vector<double>& dir,
                                              std::array<double, 2> steps = {1e-3, 5e-4}) {
  const auto z0 = at.coords();
  if (dir.size() != z0.size()) throw DomainError("direction has the wrong length");
  double vnorm = 0.0;
  double znorm = 0.0;
  for (std::size_t k = 0; k < z0.size(); ++k) {
    vnorm = std::max(vnorm, std::abs(dir[k]));
    znorm = std::max(znorm, std::abs(z0[k]));
  }
  if (!(vnorm > 0.0)) return std::vector<FdEstimate>(f(at).size(), FdEstimate{0.0, 0.0});
  auto shifted = [&](double t) {
    std::vector<double> z(z0);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += t * dir[k];
    try {
      return f(ChartPoint::from_coords(z));
    } catch (const DomainError& e) {
      throw DomainError(std::string("finite difference stencil left the domain: ") + e.what());
    }
  };
  const double scale = std::max(1.0, znorm) / vnorm;
  std::vector<std::vector<double>> d(2);
  double fmax = 0.0;
  for (int s = 0; s < 2; ++s) {
    const double h = steps[static_cast<std::size_t>(s)] * scale;
    const auto plus = shifted(h);
    const auto minus = shifted(-h);
    d[static_cast<std::size_t>(s)].resize(plus.size());
    for (std::size_t k = 0; k < plus.size(); ++k) {
      if (!std::isfinite(plus[k]) || !std::isfinite(minus[k]))
        throw DomainError("finite difference stencil produced a non-finite value");
      fmax = std::max({fmax, std::abs(plus[k]), std::abs(minus[k])});
      d[static_cast<std::size_t>(s)][k] = (plus[k] - minus[k]) / (2.0 * h);
    }
  }
  const double r2 = (steps[0] / steps[1]) * (steps[0] / steps[1]);
  const double roundoff = 4.0 * std::numeric_limits<double>::epsilon() * fmax / (steps[1] * scale);
  std::vector<FdEstimate> out(d[0].size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].value = (r2 * d[1][k] - d[0][k]) / (r2 - 1.0);
    out[k].error = std::abs(d[1][k] - d[0][k]) + roundoff;
  }
  return out;
}

/// Multi-index (over 2n chart variables) for a list of variable indices.
inline std::vector<int> multi_index(int nvars, const std::vector<int>& dirs) {
  std::vector<int> alpha(static_cast<std::size_t>(nvars), 0);
  for (int d : dirs) ++alpha[static_cast<std::size_t>(d)];
  return alpha;
}

}  // namespace cartanlab
