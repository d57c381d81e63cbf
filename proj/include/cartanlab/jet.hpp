#pragma once

/// \file
/// Truncated multivariate Taylor expansions ("jets") with exact forward-mode
/// arithmetic. A jet of order k over m variables stores the Taylor
/// coefficients f_alpha / alpha! for every multi-index |alpha| <= k, in graded
/// order, so truncation to a lower order is a prefix of the storage.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "cartanlab/errors.hpp"

namespace cartanlab {

/// Monomial bookkeeping shared by every jet with the same variable count and
/// maximal order. Instances are immutable and cached process-wide.
class JetSpace {
 public:
  struct Term {
    std::uint32_t a;
    std::uint32_t b;
    std::uint32_t out;
  };

  static std::shared_ptr<const JetSpace> get(int nvars, int max_order) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetSpace>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{nvars, max_order}];
    if (!slot) slot = std::shared_ptr<const JetSpace>(new JetSpace(nvars, max_order));
    return slot;
  }

  int nvars() const { return nvars_; }
  int max_order() const { return max_order_; }

  /// Number of monomials of total degree <= order.
  std::size_t size(int order) const {
    return count_upto_[static_cast<std::size_t>(std::clamp(order, 0, max_order_))];
  }

  std::span<const int> exponents(std::size_t idx) const {
    return {exps_.data() + idx * static_cast<std::size_t>(nvars_),
            static_cast<std::size_t>(nvars_)};
  }

  int degree(std::size_t idx) const { return degree_[idx]; }

  /// Index of a multi-index; throws if the degree exceeds the space.
  std::size_t index(std::span<const int> alpha) const {
    auto it = lookup_.find(std::vector<int>(alpha.begin(), alpha.end()));
    if (it == lookup_.end()) throw DomainError("multi-index outside jet space");
    return it->second;
  }

  /// Index of alpha + e_var; only valid when degree(idx) < max_order.
  std::size_t raise(int var, std::size_t idx) const {
    return raise_[static_cast<std::size_t>(var) * count_upto_.back() + idx];
  }

  /// Product terms whose output has degree <= order.
  std::span<const Term> product_terms(int order) const {
    auto k = static_cast<std::size_t>(std::clamp(order, 0, max_order_));
    return {terms_.data(), terms_upto_[k]};
  }

 private:
  JetSpace(int nvars, int max_order) : nvars_(nvars), max_order_(max_order) {
    std::vector<int> alpha(static_cast<std::size_t>(nvars), 0);
    count_upto_.assign(static_cast<std::size_t>(max_order) + 1, 0);
    for (int d = 0; d <= max_order; ++d) {
      enumerate(alpha, 0, d);
      count_upto_[static_cast<std::size_t>(d)] = degree_.size();
    }
    const std::size_t total = degree_.size();
    raise_.assign(static_cast<std::size_t>(nvars) * total, 0);
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (degree_[idx] >= max_order) continue;
      auto e = exponents(idx);
      std::vector<int> up(e.begin(), e.end());
      for (int v = 0; v < nvars; ++v) {
        ++up[static_cast<std::size_t>(v)];
        raise_[static_cast<std::size_t>(v) * total + idx] = lookup_.at(up);
        --up[static_cast<std::size_t>(v)];
      }
    }
    std::vector<int> sum(static_cast<std::size_t>(nvars));
    for (std::size_t a = 0; a < total; ++a) {
      for (std::size_t b = 0; b < total; ++b) {
        if (degree_[a] + degree_[b] > max_order) continue;
        auto ea = exponents(a);
        auto eb = exponents(b);
        for (std::size_t v = 0; v < sum.size(); ++v) sum[v] = ea[v] + eb[v];
        terms_.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                          static_cast<std::uint32_t>(lookup_.at(sum))});
      }
    }
    std::stable_sort(terms_.begin(), terms_.end(), [&](const Term& l, const Term& r) {
      return degree_[l.out] < degree_[r.out];
    });
    terms_upto_.assign(static_cast<std::size_t>(max_order) + 1, 0);
    for (int d = 0; d <= max_order; ++d) {
      terms_upto_[static_cast<std::size_t>(d)] = static_cast<std::size_t>(
          std::partition_point(terms_.begin(), terms_.end(),
                               [&](const Term& t) { return degree_[t.out] <= d; }) -
          terms_.begin());
    }
  }

  // Graded lexicographic enumeration of all multi-indices of degree d.
  void enumerate(std::vector<int>& alpha, int var, int remaining) {
    if (var == nvars_ - 1) {
      alpha[static_cast<std::size_t>(var)] = remaining;
      lookup_[alpha] = degree_.size();
      exps_.insert(exps_.end(), alpha.begin(), alpha.end());
      int deg = 0;
      for (int e : alpha) deg += e;
      degree_.push_back(deg);
      alpha[static_cast<std::size_t>(var)] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      alpha[static_cast<std::size_t>(var)] = e;
      enumerate(alpha, var + 1, remaining - e);
    }
    alpha[static_cast<std::size_t>(var)] = 0;
  }

  int nvars_;
  int max_order_;
  std::vector<int> exps_;
  std::vector<int> degree_;
  std::vector<std::size_t> count_upto_;
  std::map<std::vector<int>, std::size_t> lookup_;
  std::vector<std::size_t> raise_;
  std::vector<Term> terms_;
  std::vector<std::size_t> terms_upto_;
};

/// Truncated Taylor expansion of a scalar field around a fixed point.
///
/// A jet without a space is an exact constant and combines with jets of any
/// order. Binary operations on two jets truncate to the smaller order.
class Jet {
 public:
  static constexpr int kConstantOrder = std::numeric_limits<int>::max() / 4;

  Jet() : coeffs_{0.0} {}
  Jet(double value) : coeffs_{value} {}  // NOLINT(google-explicit-constructor)

  /// The coordinate function z_var expanded at z_var = value.
  static Jet variable(std::shared_ptr<const JetSpace> space, int order, int var,
                      double value) {
    Jet j(std::move(space), order);
    j.coeffs_[0] = value;
    if (order >= 1) {
      std::vector<int> alpha(static_cast<std::size_t>(j.space_->nvars()), 0);
      alpha[static_cast<std::size_t>(var)] = 1;
      j.coeffs_[j.space_->index(alpha)] = 1.0;
    }
    return j;
  }

  /// Zero jet of the given order.
  Jet(std::shared_ptr<const JetSpace> space, int order)
      : space_(std::move(space)), order_(std::min(order, space_->max_order())) {
    if (order_ < 0) throw DomainError("jet order exhausted");
    coeffs_.assign(space_->size(order_), 0.0);
  }

  bool is_constant() const { return space_ == nullptr; }
  int order() const { return space_ ? order_ : kConstantOrder; }
  const std::shared_ptr<const JetSpace>& space() const { return space_; }
  double value() const { return coeffs_[0]; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }

  /// Mixed partial derivative d^alpha f at the expansion point.
  double partial(std::span<const int> alpha) const {
    int deg = 0;
    double fact = 1.0;
    for (int e : alpha) {
      deg += e;
      for (int k = 2; k <= e; ++k) fact *= k;
    }
    if (is_constant()) return deg == 0 ? coeffs_[0] : 0.0;
    if (deg > order_) throw DomainError("requested derivative exceeds jet order");
    return coeffs_[space_->index(alpha)] * fact;
  }

  Jet truncated(int order) const {
    if (is_constant() || order >= order_) return *this;
    Jet r(space_, order);
    std::copy_n(coeffs_.begin(), r.coeffs_.size(), r.coeffs_.begin());
    return r;
  }

  Jet& operator+=(const Jet& o) { return *this = *this + o; }
  Jet& operator-=(const Jet& o) { return *this = *this - o; }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
  }

  friend Jet operator-(Jet a) {
    for (double& c : a.coeffs_) c = -c;
    return a;
  }

  friend Jet operator+(const Jet& a, const Jet& b) {
    if (a.is_constant()) return add_scalar(b, a.value());
    if (b.is_constant()) return add_scalar(a, b.value());
    Jet r(a.space_, std::min(a.order_, b.order_));
    for (std::size_t i = 0; i < r.coeffs_.size(); ++i) r.coeffs_[i] = a.coeffs_[i] + b.coeffs_[i];
    return r;
  }

  friend Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }

  friend Jet operator*(const Jet& a, const Jet& b) {
    if (a.is_constant()) return scale(b, a.value());
    if (b.is_constant()) return scale(a, b.value());
    Jet r(a.space_, std::min(a.order_, b.order_));
    for (const auto& t : r.space_->product_terms(r.order_)) {
      r.coeffs_[t.out] += a.coeffs_[t.a] * b.coeffs_[t.b];
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    if (b.is_constant()) return scale(a, 1.0 / b.value());
    return a * reciprocal(b);
  }

  friend Jet operator+(const Jet& a, double s) { return add_scalar(a, s); }
  friend Jet operator+(double s, const Jet& a) { return add_scalar(a, s); }
  friend Jet operator-(const Jet& a, double s) { return add_scalar(a, -s); }
  friend Jet operator-(double s, const Jet& a) { return add_scalar(-a, s); }
  friend Jet operator*(const Jet& a, double s) { return scale(a, s); }
  friend Jet operator*(double s, const Jet& a) { return scale(a, s); }
  friend Jet operator/(const Jet& a, double s) { return scale(a, 1.0 / s); }
  friend Jet operator/(double s, const Jet& a) { return scale(reciprocal(a), s); }

  /// d/dz_var; the result has one order less.
  friend Jet derivative(const Jet& a, int var) {
    if (a.is_constant()) return Jet(0.0);
    Jet r(a.space_, a.order_ - 1);
    for (std::size_t idx = 0; idx < r.coeffs_.size(); ++idx) {
      const std::size_t up = a.space_->raise(var, idx);
      const int e = a.space_->exponents(up)[static_cast<std::size_t>(var)];
      r.coeffs_[idx] = e * a.coeffs_[up];
    }
    return r;
  }

  /// Composition g(a) given the scaled derivatives d[m] = g^(m)(a0) / m!.
  friend Jet compose(const Jet& a, std::span<const double> d) {
    if (a.is_constant()) return Jet(d[0]);
    Jet h = a;
    h.coeffs_[0] = 0.0;
    Jet r(a.space_, a.order_);
    r.coeffs_[0] = d[0];
    Jet power = h;
    for (int m = 1; m <= a.order_; ++m) {
      if (m > 1) power = power * h;
      for (std::size_t i = 0; i < r.coeffs_.size(); ++i) r.coeffs_[i] += d[m] * power.coeffs_[i];
    }
    return r;
  }

  friend Jet reciprocal(const Jet& a) { return pow(a, -1.0); }

  friend Jet pow(const Jet& a, double r) {
    const int k = a.is_constant() ? 0 : a.order_;
    std::vector<double> d(static_cast<std::size_t>(k) + 1);
    const double a0 = a.value();
    double falling = 1.0;
    double fact = 1.0;
    for (int m = 0; m <= k; ++m) {
      if (m > 0) {
        falling *= (r - (m - 1));
        fact *= m;
      }
      d[static_cast<std::size_t>(m)] = falling / fact * std::pow(a0, r - m);
    }
    return compose(a, d);
  }

  friend Jet pow(const Jet& a, int e) {
    if (e < 0) return reciprocal(pow(a, -e));
    Jet r(1.0);
    Jet base = a;
    while (e > 0) {
      if (e & 1) r = r * base;
      e >>= 1;
      if (e) base = base * base;
    }
    return r;
  }

  friend Jet sqrt(const Jet& a) { return pow(a, 0.5); }

  friend Jet exp(const Jet& a) {
    const int k = a.is_constant() ? 0 : a.order_;
    std::vector<double> d(static_cast<std::size_t>(k) + 1);
    const double e0 = std::exp(a.value());
    double fact = 1.0;
    for (int m = 0; m <= k; ++m) {
      if (m > 0) fact *= m;
      d[static_cast<std::size_t>(m)] = e0 / fact;
    }
    return compose(a, d);
  }

  friend Jet log(const Jet& a) {
    const int k = a.is_constant() ? 0 : a.order_;
    std::vector<double> d(static_cast<std::size_t>(k) + 1);
    const double a0 = a.value();
    d[0] = std::log(a0);
    for (int m = 1; m <= k; ++m) {
      d[static_cast<std::size_t>(m)] = ((m % 2) ? 1.0 : -1.0) / (m * std::pow(a0, m));
    }
    return compose(a, d);
  }

  friend Jet sin(const Jet& a) {
    const int k = a.is_constant() ? 0 : a.order_;
    std::vector<double> d(static_cast<std::size_t>(k) + 1);
    const double s = std::sin(a.value());
    const double c = std::cos(a.value());
    const std::array<double, 4> cycle{s, c, -s, -c};
    double fact = 1.0;
    for (int m = 0; m <= k; ++m) {
      if (m > 0) fact *= m;
      d[static_cast<std::size_t>(m)] = cycle[static_cast<std::size_t>(m % 4)] / fact;
    }
    return compose(a, d);
  }

  friend Jet cos(const Jet& a) {
    const int k = a.is_constant() ? 0 : a.order_;
    std::vector<double> d(static_cast<std::size_t>(k) + 1);
    const double s = std::sin(a.value());
    const double c = std::cos(a.value());
    const std::array<double, 4> cycle{c, -s, -c, s};
    double fact = 1.0;
    for (int m = 0; m <= k; ++m) {
      if (m > 0) fact *= m;
      d[static_cast<std::size_t>(m)] = cycle[static_cast<std::size_t>(m % 4)] / fact;
    }
    return compose(a, d);
  }

  bool all_finite() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); });
  }

 private:
  static Jet add_scalar(Jet a, double s) {
    a.coeffs_[0] += s;
    return a;
  }
  static Jet scale(Jet a, double s) {
    for (double& c : a.coeffs_) c *= s;
    return a;
  }

  std::shared_ptr<const JetSpace> space_;
  int order_ = kConstantOrder;
  std::vector<double> coeffs_;
};

inline double value_of(double v) { return v; }
inline double value_of(const Jet& j) { return j.value(); }

}  // namespace cartanlab
