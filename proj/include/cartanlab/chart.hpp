#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cartanlab/errors.hpp"

namespace cartanlab {

/// A point (x, p) of the slit cotangent bundle in a single chart.
class ChartPoint {
 public:
  ChartPoint(std::vector<double> x, std::vector<double> p) : x_(std::move(x)), p_(std::move(p)) {
    if (x_.size() != p_.size()) throw DomainError("chart point: x and p differ in length");
    if (x_.size() < 2) throw DomainError("chart point: dimension must be at least 2");
    double norm2 = 0.0;
    for (double pi : p_) norm2 += pi * pi;
    if (!(norm2 > 0.0)) throw DomainError("chart point: p lies on the zero section");
  }

  int dim() const { return static_cast<int>(x_.size()); }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& p() const { return p_; }

  /// Coordinate z_k in the ordering (x^1..x^n, p_1..p_n).
  double coord(int k) const {
    return k < dim() ? x_[static_cast<std::size_t>(k)] : p_[static_cast<std::size_t>(k - dim())];
  }

  std::vector<double> coords() const {
    std::vector<double> z(x_);
    z.insert(z.end(), p_.begin(), p_.end());
    return z;
  }

  static ChartPoint from_coords(const std::vector<double>& z) {
    const auto n = z.size() / 2;
    return {std::vector<double>(z.begin(), z.begin() + static_cast<long>(n)),
            std::vector<double>(z.begin() + static_cast<long>(n), z.end())};
  }

  /// Same base point with momenta scaled by s.
  ChartPoint scaled_momenta(double s) const {
    std::vector<double> p(p_);
    for (double& v : p) v *= s;
    return {x_, std::move(p)};
  }

 private:
  std::vector<double> x_;
  std::vector<double> p_;
};

}  // namespace cartanlab
